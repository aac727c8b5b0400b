mod common;

use common::fig2;
use jct_core::dynamics::*;
use jct_core::model::build_effective_matrix;
use jct_core::spectral::eigensystem3;
use proptest::prelude::*;
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fidelity_is_a_probability(p in common::params(), eps in 1e-6..1e-3f64) {
        let (Ok(a), Ok(b)) = (fidelity_point(&p, p.gamma, eps), fidelity_coordinates(&p, p.gamma, eps)) else {
            return Err(TestCaseError::reject("too close to an exceptional point"));
        };
        for (fa, fb) in a.values.iter().zip(&b) {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(fa));
            if !a.ambiguous {
                prop_assert!((fa - fb).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn echo_is_a_probability(pi in common::params(), gamma_f in 0.0..0.05f64, branch in 1usize..=3) {
        let pf = pi.with_gamma(gamma_f);
        let times = uniform_times(2000.0, 40);
        let (Ok(a), Ok(b)) = (
            loschmidt_echo(&pi, &pf, branch, &times),
            loschmidt_echo_overlaps(&pi, &pf, branch, &times),
        ) else {
            return Err(TestCaseError::reject("pre-quench basis is defective"));
        };
        prop_assert!((a.values[0] - 1.0).abs() < 1e-10);
        for (x, y) in a.values.iter().zip(&b) {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(x));
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}

fn series(gi: f64, gf: f64, theta: f64, t_max: f64) -> Vec<Vec<f64>> {
    let times = uniform_times(t_max, DEFAULT_TIME_SAMPLES);
    (1..=3)
        .map(|n| {
            loschmidt_echo(&fig2(gi, theta), &fig2(gf, theta), n, &times)
                .unwrap()
                .values
        })
        .collect()
}

#[test]
fn quench_across_third_order_point() {
    let l = series(0.006, 0.018, PI / 6.0, 50.0 / 0.018);
    let gap = l[0]
        .iter()
        .zip(&l[1])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-10, "{gap}");
    for v in &l {
        assert!(tail_variance(v, 0.25) < 1e-4);
    }
}

#[test]
fn reverse_quench_is_periodic() {
    let pf = fig2(0.006, PI / 6.0);
    let post = eigensystem3(&build_effective_matrix(&pf).unwrap().entries).unwrap();
    let period = gap_period(&post.eigenvalues).unwrap();
    let times = default_times(&pf);
    for n in 1..=3 {
        let s = loschmidt_echo(&fig2(0.018, PI / 6.0), &pf, n, &times).unwrap();
        let c = autocorrelation(&s.times, &s.values, period).unwrap();
        assert!(c > 0.99, "branch {n}: {c}");
        // half a period is clearly not a repeat
        assert!(autocorrelation(&s.times, &s.values, period / 2.0).unwrap() < c);
    }
}

#[test]
fn quench_across_second_order_point_gives_distinct_curves() {
    let l = series(0.001, 0.01, PI / 4.0, 50.0 / 0.01);
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let dev = l[a]
            .iter()
            .zip(&l[b])
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(dev > 1e-3, "{a}{b}: {dev}");
    }
}
