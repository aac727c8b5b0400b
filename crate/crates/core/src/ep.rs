//! Exceptional-point geometry of the effective matrix.
//!
//! PT symmetry breaks where the Cardano discriminant `q^2 + p^3` vanishes;
//! three eigenvectors coalesce where `p = q = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{renormalized_frequencies, ModelParams};
use crate::spectral::cardano_pq;

/// Default threshold for the scaled `|p|`, `|q|`, `|q^2 + p^3|`.
pub const CLASSIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EpKind {
    PtSymmetric,
    PtBroken,
    Ep2,
    Ep3,
}

impl EpKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EpKind::PtSymmetric => "PTSymmetric",
            EpKind::PtBroken => "PTBroken",
            EpKind::Ep2 => "EP2",
            EpKind::Ep3 => "EP3",
        }
    }
}

impl std::fmt::Display for EpKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dimensionless residuals of the exceptional-point conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpResiduals {
    /// `|q^2 + p^3| / s^3`
    pub discriminant: f64,
    /// `|p| / s`
    pub p: f64,
    /// `|q| / s^{3/2}`
    pub q: f64,
    /// Energy-squared scale `s = max(J1^2, J3^2, gamma^2, (w1 - w2)^2)`.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpClassification {
    pub kind: EpKind,
    pub residuals: EpResiduals,
    /// Signed, unscaled `q^2 + p^3`.
    pub discriminant: f64,
    pub location: ModelParams,
}

/// Scaled residuals of the critical conditions at `params`.
pub fn residuals(params: &ModelParams) -> Result<(EpResiduals, f64)> {
    let c = cardano_pq(params)?;
    let [w1, w2, _] = renormalized_frequencies(params)?;
    let d = w1 - w2;
    let s = [
        params.j1 * params.j1,
        params.j3 * params.j3,
        params.gamma * params.gamma,
        d * d,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let s = if s > 0.0 { s } else { 1.0 };
    Ok((
        EpResiduals {
            discriminant: c.discriminant.abs() / (s * s * s),
            p: c.p.abs() / s,
            q: c.q.abs() / s.powf(1.5),
            scale: s,
        },
        c.discriminant,
    ))
}

pub fn classify(params: &ModelParams, tol: f64) -> Result<EpClassification> {
    let (res, disc) = residuals(params)?;
    let kind = if res.p <= tol && res.q <= tol {
        EpKind::Ep3
    } else if res.discriminant <= tol {
        EpKind::Ep2
    } else if disc > 0.0 {
        EpKind::PtBroken
    } else {
        EpKind::PtSymmetric
    };
    Ok(EpClassification {
        kind,
        residuals: res,
        discriminant: disc,
        location: *params,
    })
}

/// Positive gain/loss rate of the second-order line at equal couplings
/// `g1 = g2` (the line sits at `+-` this value):
///
/// `gamma_2c^2 = 2 J1^2 + J3^2 - 3 (J1^2 J3 |cos 3 theta|)^{2/3}`
pub fn gamma_2c(params: &ModelParams) -> Result<f64> {
    if params.g1 != params.g2 {
        return Err(Error::InvalidParams(
            "closed-form second-order line needs g1 == g2".into(),
        ));
    }
    let (j1, j3) = (params.j1, params.j3);
    let t = j1 * j1 * j3 * (3.0 * params.theta).cos();
    // real cube root of -t^2
    let radicand = 3.0 * (-(t * t)).cbrt() + j3 * j3 + 2.0 * j1 * j1;
    if radicand < 0.0 {
        return Err(Error::NoSecondOrderPoint { radicand });
    }
    Ok(radicand.sqrt())
}

/// Gain/loss in `[lo, hi]` where `q^2 + p^3` changes sign, by bisection.
/// Works for any couplings, unlike [`gamma_2c`].
pub fn second_order_gamma_between(params: &ModelParams, lo: f64, hi: f64) -> Result<f64> {
    let disc = |g: f64| cardano_pq(&params.with_gamma(g)).map(|c| c.discriminant);
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (disc(a)?, disc(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidParams(format!(
            "discriminant has the same sign at gamma = {lo} and {hi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = disc(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Argument of `arccos` for the critical phase; the line exists when it
/// lies in `[-1, 1]`.
pub fn theta_3c_argument(params: &ModelParams) -> Result<f64> {
    let (j1, j3) = (params.j1, params.j3);
    if !(j1 > 0.0 && j3 > 0.0) {
        return Err(Error::InvalidParams(
            "third-order line needs j1, j3 > 0".into(),
        ));
    }
    let [w1, w2, _] = renormalized_frequencies(params)?;
    // w2 - w1 = (g1^2 - g2^2) / delta
    let d = w2 - w1;
    Ok(d * (4.0 * d * d + 27.0 * j1 * j1) / (27.0 * j1 * j1 * j3))
}

/// Critical phase and gain/loss of the third-order exceptional line.
///
/// `theta_3c` is the principal branch, in `[0, pi/3]`; other solutions of
/// `cos 3 theta = const` come from [`critical_flux_branches`].
pub fn critical_3el(params: &ModelParams) -> Result<(f64, f64)> {
    let arg = theta_3c_argument(params)?;
    if !(-1.0..=1.0).contains(&arg) {
        return Err(Error::OutOfReach { argument: arg });
    }
    let [w1, w2, _] = renormalized_frequencies(params)?;
    let d = w1 - w2;
    let theta = arg.acos() / 3.0;
    let gamma = (2.0 * params.j1 * params.j1 + params.j3 * params.j3 + d * d / 3.0).sqrt();
    Ok((theta, gamma))
}

/// Every flux `phi = 3 theta` in `[0, 2 pi * windings)` with
/// `cos phi = argument`.
pub fn critical_flux_branches(argument: f64, windings: usize) -> Vec<f64> {
    let base = argument.clamp(-1.0, 1.0).acos();
    let mut out = Vec::new();
    for k in 0..windings {
        let offset = 2.0 * PI * k as f64;
        out.push(base + offset);
        if base > 0.0 && base < PI {
            out.push(2.0 * PI - base + offset);
        }
    }
    out
}

/// Sets `theta` and `gamma` to the third-order line.
pub fn on_3el(params: &ModelParams) -> Result<ModelParams> {
    let (theta, gamma) = critical_3el(params)?;
    Ok(ModelParams {
        theta,
        gamma,
        ..*params
    })
}

/// Grid of `theta_3c` over `g1/g2` (rows) and `j1/j3` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSet {
    pub g_ratio: Vec<f64>,
    pub j_ratio: Vec<f64>,
    /// Row-major; `None` where no third-order line exists.
    pub theta_3c: Vec<Option<f64>>,
    pub gamma_3c: Vec<Option<f64>>,
}

impl CriticalSet {
    pub fn theta(&self, gi: usize, ji: usize) -> Option<f64> {
        self.theta_3c[gi * self.j_ratio.len() + ji]
    }

    pub fn gamma(&self, gi: usize, ji: usize) -> Option<f64> {
        self.gamma_3c[gi * self.j_ratio.len() + ji]
    }

    pub fn masked_count(&self) -> usize {
        self.theta_3c.iter().filter(|v| v.is_none()).count()
    }
}

/// Parameters at a surface node: `g1 = g3 = r_g g2`, `j1 = j2 = r_j j3`.
pub fn surface_node(fixed: &ModelParams, g_ratio: f64, j_ratio: f64) -> ModelParams {
    fixed
        .with_outer_coupling(g_ratio * fixed.g2)
        .with_inner_hopping(j_ratio * fixed.j3)
}

/// Evaluates the third-order surface on a grid; nodes are computed in
/// parallel and stored in grid order.
pub fn sweep_surface(g_ratio: &[f64], j_ratio: &[f64], fixed: &ModelParams) -> CriticalSet {
    let nodes: Vec<(f64, f64)> = g_ratio
        .iter()
        .flat_map(|&g| j_ratio.iter().map(move |&j| (g, j)))
        .collect();
    let values: Vec<Option<(f64, f64)>> = nodes
        .par_iter()
        .map(|&(g, j)| critical_3el(&surface_node(fixed, g, j)).ok())
        .collect();
    CriticalSet {
        g_ratio: g_ratio.to_vec(),
        j_ratio: j_ratio.to_vec(),
        theta_3c: values.iter().map(|v| v.map(|x| x.0)).collect(),
        gamma_3c: values.iter().map(|v| v.map(|x| x.1)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig2(gamma: f64, theta: f64) -> ModelParams {
        ModelParams::uniform(1.0, 50.0, 0.3, gamma, 0.01, theta)
    }

    #[test]
    fn gamma_2c_values() {
        // cos(pi/2) is not exactly zero in floating point
        let g = gamma_2c(&fig2(0.0, PI / 6.0)).unwrap();
        assert!((g - 3f64.sqrt() * 0.01).abs() < 1e-12);
        assert_eq!(
            gamma_2c(&ModelParams::uniform(1.0, 50.0, 0.3, 0.0, 0.0, 0.3)).unwrap(),
            0.0
        );

        let p = fig2(0.0, PI / 4.0);
        let g = gamma_2c(&p).unwrap();
        let c = cardano_pq(&p.with_gamma(g)).unwrap();
        assert!(c.discriminant.abs() < 1e-24, "{c:?}");
        assert_relative_eq!(g, 0.007_867_009_737_172_7, max_relative = 1e-10);
    }

    #[test]
    fn bisection_matches_closed_form() {
        let p = fig2(0.0, PI / 4.0);
        let g = second_order_gamma_between(&p, 0.001, 0.015).unwrap();
        assert!((g - gamma_2c(&p).unwrap()).abs() < 1e-15);
        assert!(second_order_gamma_between(&p, 0.02, 0.03).is_err());
        // unequal couplings at the critical phase: split line below the triple point
        let q = ModelParams {
            g1: 0.1,
            g3: 0.1,
            ..ModelParams::uniform(1.0, 20.0, 0.3, 0.0, 0.01, 0.0)
        };
        let (theta, gamma) = critical_3el(&q).unwrap();
        let g = second_order_gamma_between(&q.with_theta(theta), 0.010, 0.017).unwrap();
        assert!((g - 0.016_041_6).abs() < 1e-7, "{g}");
        assert!(g < gamma);
    }

    #[test]
    fn gamma_2c_requires_equal_couplings() {
        let p = ModelParams {
            g2: 0.1,
            ..fig2(0.0, 0.3)
        };
        assert!(gamma_2c(&p).is_err());
    }

    #[test]
    fn equal_couplings_give_pi_over_six() {
        let (theta, gamma) = critical_3el(&fig2(0.0, 0.0)).unwrap();
        assert_relative_eq!(theta, PI / 6.0, epsilon = 1e-15);
        assert_relative_eq!(gamma, 3f64.sqrt() * 0.01, max_relative = 1e-14);
    }

    #[test]
    fn unequal_couplings_land_on_p_q_zero() {
        let p = ModelParams {
            g1: 0.1,
            g3: 0.1,
            ..ModelParams::uniform(1.0, 20.0, 0.3, 0.0, 0.01, 0.0)
        };
        let on = on_3el(&p).unwrap();
        let c = cardano_pq(&on).unwrap();
        assert!(c.p.abs() < 1e-10 && c.q.abs() < 1e-10, "{c:?}");
        assert_eq!(classify(&on, CLASSIFY_TOL).unwrap().kind, EpKind::Ep3);
        // g1 < g2 pushes theta_3c above pi/6
        assert!(on.theta > PI / 6.0);
    }

    #[test]
    fn out_of_reach() {
        let p = ModelParams {
            g1: 0.9,
            g3: 0.9,
            j1: 0.001,
            j2: 0.001,
            ..ModelParams::uniform(1.0, 20.0, 0.1, 0.0, 0.01, 0.0)
        };
        assert!(matches!(critical_3el(&p), Err(Error::OutOfReach { .. })));
        assert!(critical_3el(&ModelParams {
            j1: 0.0,
            j2: 0.0,
            ..p
        })
        .is_err());
    }

    #[test]
    fn classification_examples() {
        let k = |p: ModelParams| classify(&p, CLASSIFY_TOL).unwrap().kind;
        assert_eq!(k(fig2(0.0, PI / 5.0)), EpKind::PtSymmetric);
        assert_eq!(k(fig2(3f64.sqrt() * 0.01, PI / 6.0)), EpKind::Ep3);
        let p = fig2(0.0, PI / 4.0);
        assert_eq!(k(p.with_gamma(gamma_2c(&p).unwrap())), EpKind::Ep2);
        assert_eq!(k(p.with_gamma(0.02)), EpKind::PtBroken);
    }

    #[test]
    fn two_el_ends_on_three_ep() {
        let p = fig2(0.0, PI / 6.0);
        let (theta, gamma) = critical_3el(&p).unwrap();
        let g2 = gamma_2c(&p.with_theta(theta)).unwrap();
        assert!((g2 - gamma).abs() < 1e-12);
    }

    #[test]
    fn flux_branches() {
        let b = critical_flux_branches(0.0, 2);
        let want = [PI / 2.0, 1.5 * PI, 2.5 * PI, 3.5 * PI];
        assert_eq!(b.len(), 4);
        for (x, y) in b.iter().zip(want) {
            assert_relative_eq!(*x, y, epsilon = 1e-12);
        }
        assert_eq!(critical_flux_branches(1.0, 1), vec![0.0]);
    }

    #[test]
    fn surface_ridge_and_mask() {
        let fixed = ModelParams::uniform(1.0, 20.0, 0.3, 0.0, 0.01, 0.0);
        let g: Vec<f64> = vec![0.1, 0.5, 1.0, 1.5, 2.0];
        let j: Vec<f64> = vec![0.1, 0.5, 1.0, 2.0];
        let set = sweep_surface(&g, &j, &fixed);
        for ji in 0..j.len() {
            assert_relative_eq!(set.theta(2, ji).unwrap(), PI / 6.0, epsilon = 1e-15);
        }
        assert!(set.theta(4, 0).is_none());
        assert!(set.masked_count() > 0);
        for v in set.theta_3c.iter().flatten() {
            assert!((0.0..=PI / 3.0).contains(v));
        }
    }
}
