mod common;

use jct_core::model::build_full_single_excitation;
use jct_core::spectral::effective_model_deviation;
use std::f64::consts::PI;

#[test]
fn effective_triplet_converges_with_detuning() {
    let devs: Vec<f64> = [50.0, 100.0, 200.0]
        .into_iter()
        .map(|delta| {
            let p = jct_core::ModelParams {
                delta,
                ..common::fig2(0.006, PI / 6.0)
            };
            effective_model_deviation(&p).unwrap()
        })
        .collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    // second-order corrections scale like g^4 / delta^3
    assert!(
        devs[0] / devs[1] > 3.0 && devs[1] / devs[2] > 3.0,
        "{devs:?}"
    );
}

#[test]
fn full_matrix_is_hermitian_without_gain() {
    let p = common::fig2(0.0, 0.7);
    assert!(build_full_single_excitation(&p).hermiticity_defect() < 1e-15);
    assert!(build_full_single_excitation(&p.with_gamma(0.01)).hermiticity_defect() > 0.0);
}
