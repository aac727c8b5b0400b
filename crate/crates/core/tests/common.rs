#![allow(dead_code)]

use jct_core::ModelParams;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Draws inside the ranges used throughout the test suite.
pub fn params() -> impl Strategy<Value = ModelParams> {
    (
        0.0..0.05f64,
        0.0..2.0 * PI / 3.0,
        0.0..0.05f64,
        0.0..0.05f64,
        0.0..0.5f64,
        0.0..0.5f64,
        10.0..100.0f64,
    )
        .prop_map(|(gamma, theta, j1, j3, g1, g2, delta)| ModelParams {
            g1,
            g2,
            g3: g1,
            j1,
            j2: j1,
            j3,
            ..ModelParams::uniform(1.0, delta, g2, gamma, j1, theta)
        })
}

pub fn fig2(gamma: f64, theta: f64) -> ModelParams {
    ModelParams::uniform(1.0, 50.0, 0.3, gamma, 0.01, theta)
}
