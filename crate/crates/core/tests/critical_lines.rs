use jct_core::ep::{
    classify, critical_3el, gamma_2c, residuals, sweep_surface, EpKind, CLASSIFY_TOL,
};
use jct_core::error::Error;
use jct_core::ModelParams;
use proptest::prelude::*;
use std::f64::consts::PI;

fn couplings() -> impl Strategy<Value = ModelParams> {
    (
        0.0..0.5f64,
        0.0..0.5f64,
        10.0..100.0f64,
        0.001..0.05f64,
        0.001..0.05f64,
    )
        .prop_map(|(g1, g2, delta, j1, j3)| ModelParams {
            g1,
            g3: g1,
            j3,
            ..ModelParams::uniform(1.0, delta, g2, 0.0, j1, 0.0)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn third_order_line_zeroes_p_and_q(p in couplings()) {
        match critical_3el(&p) {
            Ok((theta, gamma)) => {
                let (r, _) = residuals(&p.with_theta(theta).with_gamma(gamma)).unwrap();
                prop_assert!(r.p < 1e-9 && r.q < 1e-9, "{r:?}");
            }
            Err(Error::OutOfReach { argument }) => prop_assert!(argument.abs() > 1.0),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn second_order_line_zeroes_discriminant(p in couplings(), theta in 0.0..2.0 * PI / 3.0) {
        let p = ModelParams { g1: p.g2, g3: p.g2, ..p.with_theta(theta) };
        let g = gamma_2c(&p).unwrap();
        let (r, _) = residuals(&p.with_gamma(g)).unwrap();
        prop_assert!(r.discriminant < 1e-9);
    }

    #[test]
    fn lines_meet_at_critical_phase(p in couplings()) {
        let p = ModelParams { g1: p.g2, g3: p.g2, ..p };
        let (theta, gamma) = critical_3el(&p).unwrap();
        prop_assert!((theta - PI / 6.0).abs() < 1e-12);
        let g2 = gamma_2c(&p.with_theta(theta)).unwrap();
        prop_assert!((g2 - gamma).abs() < 1e-12);
    }
}

#[test]
fn classification_along_a_slice() {
    let p = ModelParams::uniform(1.0, 50.0, 0.3, 0.0, 0.01, PI / 6.0);
    let kind = |g: f64| classify(&p.with_gamma(g), CLASSIFY_TOL).unwrap().kind;
    assert_eq!(kind(0.005), EpKind::PtSymmetric);
    assert_eq!(kind(3f64.sqrt() * 0.01), EpKind::Ep3);
    assert_eq!(kind(0.025), EpKind::PtBroken);
    let q = p.with_theta(PI / 4.0);
    assert_eq!(kind_at(&q.with_gamma(gamma_2c(&q).unwrap())), EpKind::Ep2);
}

fn kind_at(p: &ModelParams) -> EpKind {
    classify(p, CLASSIFY_TOL).unwrap().kind
}

#[test]
fn critical_surface_ridge_and_mask() {
    let fixed = ModelParams::uniform(1.0, 20.0, 0.3, 0.0, 0.01, 0.0);
    let ratios: Vec<f64> = (0..50).map(|k| 0.1 + 1.9 * k as f64 / 49.0).collect();
    let mut with_one = ratios.clone();
    with_one.push(1.0);
    let set = sweep_surface(&with_one, &ratios, &fixed);
    let ridge = with_one.len() - 1;
    for ji in 0..ratios.len() {
        assert!((set.theta(ridge, ji).unwrap() - PI / 6.0).abs() < 1e-12);
    }
    assert!(set.masked_count() > 0);
    // corner with strong detuning and weak hopping has no third-order point
    assert!(set.theta(0, 0).is_none());
    // theta falls monotonically as the outer coupling grows
    let above: Vec<f64> = (0..ratios.len())
        .filter_map(|gi| set.theta(gi, 49))
        .collect();
    assert!(above.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}
