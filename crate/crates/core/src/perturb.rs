//! Response of the spectrum to a diagonal detuning `epsilon` on one cavity.
//!
//! With `D_k` the indicator of site `k`,
//!
//! ```text
//! det(M + eps D_k - E) = det(M - E) + eps * C_k(E)
//! ```
//!
//! where `C_k` is the principal 2x2 minor of `M - E` complementary to `k`.
//! Near a third-order point this gives `dE ~ eps^{1/3}`, near a
//! second-order point `dE ~ eps^{1/2}`.

use nalgebra::Matrix3;

use crate::ep::{classify, EpKind, CLASSIFY_TOL};
use crate::error::{Error, Result};
use crate::model::{build_effective_matrix, renormalized_frequencies, ModelParams};
use crate::spectral::{
    cardano_eigenvalues, cardano_pq, eigensystem3, monic_cubic_roots, pair_by_displacement,
};
use crate::C64;

/// Diagonal detuning of a single cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    site: usize,
    epsilon: f64,
}

impl Perturbation {
    pub fn new(site: usize, epsilon: f64) -> Result<Self> {
        if !(1..=3).contains(&site) {
            return Err(Error::InvalidParams(format!("site {site} outside 1..=3")));
        }
        if epsilon < 0.0 || !epsilon.is_finite() {
            return Err(Error::InvalidParams(format!(
                "epsilon {epsilon} must be finite and >= 0"
            )));
        }
        Ok(Self { site, epsilon })
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Coefficients of `E^3 - (a + eps) E^2 + (b + c eps) E + d eps + u = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedCubic {
    pub site: usize,
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub u: C64,
    /// `tr M / 3`; roots are found for the matrix shifted by this amount,
    /// which keeps the large diagonal out of the cubic.
    pub shift: C64,
    centered: [C64; 5],
}

impl PerturbedCubic {
    pub fn evaluate(&self, e: C64, eps: f64) -> C64 {
        e * e * e - (self.a + eps) * e * e + (self.b + self.c * eps) * e + self.d * eps + self.u
    }

    pub fn roots(&self, eps: f64) -> [C64; 3] {
        let [a, b, c, d, u] = self.centered;
        monic_cubic_roots(-(a + eps), b + c * eps, d * eps + u).map(|e| e + self.shift)
    }
}

fn complement(site: usize) -> (usize, usize) {
    match site {
        1 => (1, 2),
        2 => (0, 2),
        _ => (0, 1),
    }
}

fn principal_minor(m: &Matrix3<C64>, i: usize, j: usize) -> C64 {
    m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)]
}

/// Expands `det(M + eps D_site - E)`:
/// `a = tr M`, `b` = sum of principal 2x2 minors, `u = -det M`, and for the
/// complementary block `B` of the perturbed site `c = tr B`, `d = -det B`.
pub fn perturbed_cubic_coeffs(params: &ModelParams, site: usize) -> Result<PerturbedCubic> {
    Perturbation::new(site, 0.0)?;
    let m = build_effective_matrix(params)?.entries;
    let [a, b, c, d, u] = cubic_coeffs(&m, site);
    let shift = m.trace() / 3.0;
    let centered = cubic_coeffs(&(m - Matrix3::identity() * shift), site);
    Ok(PerturbedCubic {
        site,
        a,
        b,
        c,
        d,
        u,
        shift,
        centered,
    })
}

fn cubic_coeffs(m: &Matrix3<C64>, site: usize) -> [C64; 5] {
    let (i, j) = complement(site);
    [
        m.trace(),
        principal_minor(m, 1, 2) + principal_minor(m, 0, 2) + principal_minor(m, 0, 1),
        m[(i, i)] + m[(j, j)],
        -principal_minor(m, i, j),
        -m.determinant(),
    ]
}

/// `C_site(E)`, the complementary minor of `M - E`.
pub fn complementary_minor(params: &ModelParams, site: usize, e: C64) -> Result<C64> {
    let m = build_effective_matrix(params)?.entries;
    let (i, j) = complement(site);
    Ok((m[(i, i)] - e) * (m[(j, j)] - e) - m[(i, j)] * m[(j, i)])
}

/// Numeric eigenvalues of `M + eps D_site`, matched to the unperturbed
/// closed-form triplet `E_1, E_2, E_3`.
pub fn exact_perturbed_spectrum(params: &ModelParams, pert: Perturbation) -> Result<[C64; 3]> {
    let seed = cardano_eigenvalues(params)?;
    perturbed_eigenvalues(params, pert, &seed)
}

fn perturbed_eigenvalues(
    params: &ModelParams,
    pert: Perturbation,
    seed: &[C64; 3],
) -> Result<[C64; 3]> {
    let m = build_effective_matrix(params)?.perturbed(pert.site, pert.epsilon);
    let s = eigensystem3(&m)?;
    let order = pair_by_displacement(seed, &s.eigenvalues).order;
    Ok([
        s.eigenvalues[order[0]],
        s.eigenvalues[order[1]],
        s.eigenvalues[order[2]],
    ])
}

/// Exact eigenvalues along an increasing `eps` ladder. The first rung is
/// matched to `seed`, every later rung to the previous one.
pub fn track_ladder(
    params: &ModelParams,
    site: usize,
    eps: &[f64],
    seed: [C64; 3],
) -> Result<Vec<[C64; 3]>> {
    let mut out = Vec::with_capacity(eps.len());
    let mut prev = seed;
    for &e in eps {
        let next = perturbed_eigenvalues(params, Perturbation::new(site, e)?, &prev)?;
        out.push(next);
        prev = next;
    }
    Ok(out)
}

/// Symbols entering the Newton-Puiseux predictions, read with
/// `w_0 = w_2` (neutral cavity) and `J = J1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuiseuxCoefficients {
    /// Unperturbed coalesced eigenvalue.
    pub e0: C64,
    /// `-E0^2 + (w_- + w_0) E0 + J^2 - w_0 w_-`
    pub eta: C64,
    /// `w_- + w_0 - 2 E0`
    pub v: C64,
    /// `-sqrt(9 (E0 - w_+)^2 - 5 (w_0 + w_- - 2 E0)^2) / 5 - 3 (E0 - w_+) / 5`
    pub alpha: C64,
    /// Radicand inside `alpha`.
    pub alpha_radicand: C64,
}

impl PuiseuxCoefficients {
    pub fn at(params: &ModelParams, e0: C64) -> Result<Self> {
        let [w1, w2, _] = renormalized_frequencies(params)?;
        let w_plus = C64::new(w1, params.gamma);
        let w_minus = C64::new(w1, -params.gamma);
        let w0 = C64::new(w2, 0.0);
        let j = params.j1;
        let eta = -e0 * e0 + (w_minus + w0) * e0 + j * j - w0 * w_minus;
        let v = w_minus + w0 - 2.0 * e0;
        let x = e0 - w_plus;
        let y = w0 + w_minus - 2.0 * e0;
        let alpha_radicand = 9.0 * x * x - 5.0 * y * y;
        let alpha = -alpha_radicand.sqrt() / 5.0 - 3.0 * x / 5.0;
        Ok(Self {
            e0,
            eta,
            v,
            alpha,
            alpha_radicand,
        })
    }

    /// True when the radicand of `alpha` is not a non-negative real, so the
    /// principal complex square root was taken.
    pub fn alpha_on_complex_branch(&self) -> bool {
        self.alpha_radicand.re < 0.0 || self.alpha_radicand.im != 0.0
    }
}

/// Triple root `E0 = tr M / 3` at a third-order point.
pub fn three_ep_center(params: &ModelParams) -> Result<C64> {
    Ok(C64::new(cardano_pq(params)?.shift, 0.0))
}

/// Double root and the remaining simple root on the discriminant surface:
/// `E0 = shift + cbrt(q)`, `E_other = shift - 2 cbrt(q)`.
pub fn two_ep_roots(params: &ModelParams) -> Result<(C64, C64)> {
    let c = cardano_pq(params)?;
    let r = c.q.cbrt();
    Ok((C64::new(c.shift + r, 0.0), C64::new(c.shift - 2.0 * r, 0.0)))
}

/// Leading-order predictions at a third-order point (gain-cavity
/// perturbation), ordered like the closed-form labels: `E_1` is the branch
/// with phase `pi`, `E_2` phase `pi/3`, `E_3` phase `5 pi/3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeEpPrediction {
    pub coefficients: PuiseuxCoefficients,
    /// Two-term `dE_n`.
    pub delta: [C64; 3],
    /// `Re(E_2 - E_1) ~ 3/2 eta^{1/3} eps^{1/3} + sqrt(3) gamma / 6 eta^{-1/3} eps^{2/3}`
    pub re_split_12: f64,
    /// Same with the minus sign, `Re(E_3 - E_1)`.
    pub re_split_13: f64,
}

impl ThreeEpPrediction {
    pub fn energies(&self) -> [C64; 3] {
        self.delta.map(|d| d + self.coefficients.e0)
    }
}

fn require_kind(params: &ModelParams, want: EpKind) -> Result<()> {
    let got = classify(params, CLASSIFY_TOL)?.kind;
    if got != want {
        return Err(Error::InvalidParams(format!(
            "expected an {want} point, found {got}"
        )));
    }
    Ok(())
}

pub fn puiseux_3ep(params: &ModelParams, eps: f64) -> Result<ThreeEpPrediction> {
    require_kind(params, EpKind::Ep3)?;
    let coefficients = PuiseuxCoefficients::at(params, three_ep_center(params)?)?;
    let eta = coefficients.eta;
    let scale = params.j1 * params.j1 + params.j3 * params.j3 + params.gamma * params.gamma;
    if eta.norm() <= 1e-12 * scale {
        return Err(Error::DegenerateExpansion(eta.norm()));
    }
    let eta3 = eta.cbrt();
    let e13 = eps.cbrt();
    let e23 = e13 * e13;
    let branch = |n: f64| {
        let phase = C64::from_polar(1.0, (2.0 * n + 1.0) * std::f64::consts::PI / 3.0);
        phase * eta3 * e13 - coefficients.v / (3.0 * eta3) * phase.conj() * e23
    };
    let lead = 1.5 * eta3 * e13;
    let next = 3f64.sqrt() * params.gamma / 6.0 / eta3 * e23;
    Ok(ThreeEpPrediction {
        coefficients,
        delta: [branch(1.0), branch(0.0), branch(2.0)],
        re_split_12: (lead + next).re,
        re_split_13: (lead - next).re,
    })
}

/// Leading `eps^{1/3}` coefficient for any site: `dE^3 = C_site(E0) eps`.
/// For the gain cavity `C_1(E0) = -eta`.
pub fn three_ep_cubed_coefficient(params: &ModelParams, site: usize) -> Result<C64> {
    complementary_minor(params, site, three_ep_center(params)?)
}

/// Leading-order energies `E0 + (C_site(E0) eps)^{1/3} e^{2 pi i k / 3}`,
/// ordered so that for the gain cavity they follow the closed-form labels.
pub fn three_ep_seed(params: &ModelParams, site: usize, eps: f64) -> Result<[C64; 3]> {
    let e0 = three_ep_center(params)?;
    let r = (three_ep_cubed_coefficient(params, site)? * eps).cbrt();
    let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    Ok([e0 + r * w, e0 + r, e0 + r * w * w])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoEpPrediction {
    pub coefficients: PuiseuxCoefficients,
    /// `|Re(-2 sqrt(alpha))| eps^{1/2}`
    pub re_split_23: f64,
    /// `2 sqrt(C_site(E0) / (E0 - E_other)) eps^{1/2}` from the determinant
    /// expansion.
    pub split_23_expansion: C64,
    /// Set when `alpha` needed the principal complex square root.
    pub complex_branch: bool,
}

pub fn puiseux_2ep(params: &ModelParams, site: usize, eps: f64) -> Result<TwoEpPrediction> {
    require_kind(params, EpKind::Ep2)?;
    let (e0, other) = two_ep_roots(params)?;
    let coefficients = PuiseuxCoefficients::at(params, e0)?;
    let complex_branch = coefficients.alpha_on_complex_branch();
    if complex_branch {
        log::debug!(
            "alpha radicand {} is not a non-negative real",
            coefficients.alpha_radicand
        );
    }
    let root_eps = eps.sqrt();
    let kappa = complementary_minor(params, site, e0)? / (e0 - other);
    Ok(TwoEpPrediction {
        coefficients,
        re_split_23: (-2.0 * coefficients.alpha.sqrt()).re.abs() * root_eps,
        split_23_expansion: 2.0 * kappa.sqrt() * root_eps,
        complex_branch,
    })
}

/// Indices of the two closest eigenvalues.
pub fn coalescing_pair(e: &[C64; 3]) -> (usize, usize) {
    let pairs = [(0, 1), (0, 2), (1, 2)];
    pairs
        .into_iter()
        .min_by(|x, y| {
            (e[x.0] - e[x.1])
                .norm()
                .total_cmp(&(e[y.0] - e[y.1]).norm())
        })
        .unwrap()
}

/// Power-law fit `|dE| = A eps^k` by least squares in log-log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    /// `ln A`
    pub log_prefactor: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 8;

pub fn fit_scaling(samples: &[(f64, f64)]) -> Result<ScalingFit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidFitInput(format!(
            "need at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples
        .iter()
        .find(|(x, y)| !(*x > 0.0 && *y > 0.0) || !x.is_finite() || !y.is_finite())
    {
        return Err(Error::InvalidFitInput(format!(
            "non-positive sample {bad:?}"
        )));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidFitInput(
            "all epsilon values are equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    Ok(ScalingFit {
        exponent: slope,
        log_prefactor: intercept,
        r_squared,
        window: (lo, hi),
        samples: samples.len(),
    })
}

/// `count` log-spaced points between `lo` and `hi` inclusive.
pub fn log_ladder(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ep::gamma_2c;
    use crate::spectral::multiset_distance;
    use std::f64::consts::PI;

    fn fig2_3ep() -> ModelParams {
        ModelParams::uniform(1.0, 50.0, 0.3, 3f64.sqrt() * 0.01, 0.01, PI / 6.0)
    }

    fn fig2_2ep() -> ModelParams {
        let p = ModelParams::uniform(1.0, 50.0, 0.3, 0.0, 0.01, PI / 4.0);
        p.with_gamma(gamma_2c(&p).unwrap())
    }

    #[test]
    fn perturbation_validation() {
        assert!(Perturbation::new(0, 1e-3).is_err());
        assert!(Perturbation::new(4, 1e-3).is_err());
        assert!(Perturbation::new(2, -1e-3).is_err());
        assert!(Perturbation::new(2, f64::NAN).is_err());
        assert_eq!(Perturbation::new(3, 0.0).unwrap().site(), 3);
    }

    #[test]
    fn unperturbed_cubic_matches_closed_form() {
        let p = ModelParams {
            g2: 0.2,
            ..ModelParams::uniform(1.0, 40.0, 0.3, 0.007, 0.012, 0.5)
        };
        for site in 1..=3 {
            let cubic = perturbed_cubic_coeffs(&p, site).unwrap();
            let r = cubic.roots(0.0);
            assert!(multiset_distance(&r, &cardano_eigenvalues(&p).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn cubic_roots_match_perturbed_matrix_at_three_ep() {
        let p = fig2_3ep();
        for site in [1, 2] {
            let cubic = perturbed_cubic_coeffs(&p, site).unwrap();
            let exact =
                exact_perturbed_spectrum(&p, Perturbation::new(site, 1e-5).unwrap()).unwrap();
            let r = cubic.roots(1e-5);
            assert!(
                multiset_distance(&r, &exact) < 1e-10,
                "site {site}: {r:?} vs {exact:?}"
            );
            for e in exact {
                assert!(cubic.evaluate(e, 1e-5).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_epsilon_gives_unperturbed_spectrum() {
        let p = ModelParams::uniform(1.0, 50.0, 0.3, 0.006, 0.01, PI / 6.0);
        let e = exact_perturbed_spectrum(&p, Perturbation::new(1, 0.0).unwrap()).unwrap();
        let c = cardano_eigenvalues(&p).unwrap();
        for i in 0..3 {
            assert!((e[i] - c[i]).norm() < 1e-12);
        }
        let pred = puiseux_3ep(&fig2_3ep(), 0.0).unwrap();
        assert!(pred.delta.iter().all(|d| d.norm() == 0.0));
        assert_eq!(pred.re_split_12, 0.0);
        let pred = puiseux_2ep(&fig2_2ep(), 1, 0.0).unwrap();
        assert_eq!(pred.re_split_23, 0.0);
    }

    #[test]
    fn eta_reduces_to_j_squared_at_equal_couplings() {
        let p = fig2_3ep();
        let c = PuiseuxCoefficients::at(&p, three_ep_center(&p).unwrap()).unwrap();
        assert!((c.eta - C64::new(1e-4, 0.0)).norm() < 1e-14);
        assert!((c.v - C64::new(0.0, -p.gamma)).norm() < 1e-14);
        let kappa = three_ep_cubed_coefficient(&p, 1).unwrap();
        assert!((kappa + c.eta).norm() < 1e-14);
    }

    #[test]
    fn seed_follows_gain_cavity_branches() {
        let p = fig2_3ep();
        let seed = three_ep_seed(&p, 1, 1e-9).unwrap();
        let pred = puiseux_3ep(&p, 1e-9).unwrap().energies();
        for n in 0..3 {
            assert!((seed[n] - pred[n]).norm() < 1e-2 * (pred[n] - pred[(n + 1) % 3]).norm());
        }
    }

    #[test]
    fn three_ep_splitting_is_cube_root() {
        let p = fig2_3ep();
        let e = 1e-6;
        let exact = exact_perturbed_spectrum(&p, Perturbation::new(1, e).unwrap()).unwrap();
        let gap = crate::spectral::max_pairwise_gap(&exact);
        let scale = 1e-4f64.cbrt() * e.cbrt();
        assert!(gap > 1.5 * scale && gap < 2.0 * scale, "{gap} vs {scale}");
    }

    #[test]
    fn two_ep_splitting_orders() {
        let p = fig2_2ep();
        let unperturbed = cardano_eigenvalues(&p).unwrap();
        let (i, j) = coalescing_pair(&unperturbed);
        let k = 3 - i - j;
        let e = 1e-6;
        let exact = exact_perturbed_spectrum(&p, Perturbation::new(1, e).unwrap()).unwrap();
        let pair_split = (exact[i] - exact[j]).norm();
        let lone_shift = (exact[k] - unperturbed[k]).norm();
        assert!(pair_split > 10.0 * e.sqrt() * 1e-2, "{pair_split}");
        assert!(lone_shift < 10.0 * e, "{lone_shift}");
    }

    #[test]
    fn wrong_kind_is_rejected() {
        assert!(puiseux_3ep(&fig2_2ep(), 1e-6).is_err());
        assert!(puiseux_2ep(&fig2_3ep(), 1, 1e-6).is_err());
    }

    #[test]
    fn fit_exact_power_law() {
        let samples: Vec<(f64, f64)> = log_ladder(1e-9, 1e-5, 12)
            .into_iter()
            .map(|e| (e, 2.0 * e.cbrt()))
            .collect();
        let fit = fit_scaling(&samples).unwrap();
        assert!((fit.exponent - 1.0 / 3.0).abs() < 1e-12);
        assert!((fit.log_prefactor - 2f64.ln()).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.window, (samples[0].0, samples[11].0));
    }

    #[test]
    fn fit_rejects_bad_input() {
        let few = vec![(1.0, 1.0); 4];
        assert!(fit_scaling(&few).is_err());
        let mut s: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, i as f64)).collect();
        s[3].1 = 0.0;
        assert!(fit_scaling(&s).is_err());
        s[3].1 = 4.0;
        s[5].0 = -1.0;
        assert!(fit_scaling(&s).is_err());
    }

    #[test]
    fn ladder_endpoints() {
        let l = log_ladder(1e-9, 1e-5, 9);
        assert_eq!(l.len(), 9);
        assert!((l[0] - 1e-9).abs() < 1e-22);
        assert!((l[8] - 1e-5).abs() < 1e-18);
        assert!((l[4] - 1e-7).abs() < 1e-20);
    }
}
