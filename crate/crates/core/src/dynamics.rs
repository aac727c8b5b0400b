//! Biorthogonal fidelity and Loschmidt echo built on associated states.
//!
//! For a state `|psi> = sum_n a_n |psi_n>` expanded in a biorthonormal
//! basis, the associated state is `|psi~> = sum_n a_n |psi~_n>`. Overlaps
//! between a state and associated states then reduce to sums of `|a_n|^2`,
//! which keeps both the fidelity and the echo real and inside `[0, 1]`.

use nalgebra::{DMatrix, DVector, Matrix3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_effective_matrix, ModelParams};
use crate::spectral::{
    biorthogonalize, eigensystem3, labeled_eigensystem, Spectrum, DEFECTIVENESS_TOL,
};
use crate::C64;

/// Below this defectiveness the spectral propagator is too ill-conditioned
/// and the matrix exponential is used instead.
pub const SPECTRAL_PATH_MIN_DEFECTIVENESS: f64 = 1e-6;

/// Relative displacement gap under which two branch pairings count as tied.
pub const PAIRING_TOL: f64 = 1e-12;

/// Biorthonormal eigenbasis of the effective matrix, labeled like the
/// closed-form eigenvalues.
pub fn biorthonormal_basis(params: &ModelParams) -> Result<Spectrum> {
    biorthogonalize(&labeled_eigensystem(params)?, DEFECTIVENESS_TOL)
}

fn inner(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.dotc(b)
}

/// A state together with its expansion coefficients in a biorthonormal
/// basis.
#[derive(Debug, Clone)]
pub struct BiorthCoordinates {
    basis: Spectrum,
    coords: DVector<C64>,
}

impl BiorthCoordinates {
    /// `a_n = <psi~_n|psi>`; the basis must already be biorthonormal.
    pub fn from_state(basis: &Spectrum, state: &DVector<C64>) -> Self {
        Self {
            coords: basis.left.adjoint() * state,
            basis: basis.clone(),
        }
    }

    pub fn from_coords(basis: &Spectrum, coords: DVector<C64>) -> Self {
        Self {
            basis: basis.clone(),
            coords,
        }
    }

    pub fn coords(&self) -> &DVector<C64> {
        &self.coords
    }

    pub fn basis(&self) -> &Spectrum {
        &self.basis
    }

    /// `sum_n a_n |psi_n>`
    pub fn state(&self) -> DVector<C64> {
        &self.basis.right * &self.coords
    }

    /// `sum_n |a_n|^2`, which equals `<psi~|psi>`.
    pub fn weight(&self) -> f64 {
        self.coords.norm_squared()
    }
}

/// `sum_n a_n |psi~_n>`
pub fn associated_state(c: &BiorthCoordinates) -> DVector<C64> {
    &c.basis.left * &c.coords
}

/// Fidelity of the three labeled branches at one `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub gamma: f64,
    /// `F_n`, indexed by the closed-form label at `gamma`.
    pub values: [f64; 3],
    /// Set when another minimal-displacement pairing exists and gives
    /// different per-branch values; `values` then uses the first such pairing
    /// in lexicographic order.
    pub ambiguous: bool,
}

/// `F_n` for each labeled branch at `gamma`, comparing with the state at
/// `gamma + eps` on the continuously matched branch.
///
/// Evaluated through the associated state of `|psi_n(gamma + eps)>` in the
/// `gamma` basis.
pub fn fidelity(params: &ModelParams, gamma: f64, eps: f64) -> Result<[f64; 3]> {
    let (at, shifted, pairings) = fidelity_bases(params, gamma, eps)?;
    let values = overlap_fidelity(&at, &shifted, &pairings[0]);
    if let Some(other) = pairings[1..]
        .iter()
        .find(|o| differs(&overlap_fidelity(&at, &shifted, &o[..]), &values))
    {
        let cost = |o: &[usize]| displacement(&at, &shifted, o);
        return Err(Error::BranchPairingAmbiguous {
            best: cost(&pairings[0]),
            runner_up: cost(other),
        });
    }
    Ok(values)
}

/// Same quantity as [`fidelity`] written as `|a_n|^2 / sum_m |a_m|^2` in the
/// `gamma` frame.
pub fn fidelity_coordinates(params: &ModelParams, gamma: f64, eps: f64) -> Result<[f64; 3]> {
    let (at, shifted, pairings) = fidelity_bases(params, gamma, eps)?;
    Ok(coordinate_fidelity(&at, &shifted, &pairings[0]))
}

/// Like [`fidelity`], but resolves tied pairings instead of failing.
pub fn fidelity_point(params: &ModelParams, gamma: f64, eps: f64) -> Result<FidelityPoint> {
    let (at, shifted, pairings) = fidelity_bases(params, gamma, eps)?;
    let values = overlap_fidelity(&at, &shifted, &pairings[0]);
    let ambiguous = pairings[1..]
        .iter()
        .any(|o| differs(&overlap_fidelity(&at, &shifted, &o[..]), &values));
    Ok(FidelityPoint {
        gamma,
        values,
        ambiguous,
    })
}

/// Fidelity over a grid of `gamma` values, in grid order.
pub fn fidelity_scan(params: &ModelParams, gammas: &[f64], eps: f64) -> Vec<Result<FidelityPoint>> {
    gammas
        .par_iter()
        .map(|&g| fidelity_point(params, g, eps))
        .collect()
}

fn differs(a: &[f64; 3], b: &[f64; 3]) -> bool {
    a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-9)
}

fn overlap_fidelity(at: &Spectrum, shifted: &Spectrum, order: &[usize]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (n, f) in out.iter_mut().enumerate() {
        let psi = at.right_vector(n);
        let psi_t = at.left_vector(n);
        let moved = BiorthCoordinates::from_state(at, &shifted.right_vector(order[n]));
        let moved_psi = moved.state();
        let moved_t = associated_state(&moved);
        let num = inner(&psi_t, &moved_psi) * inner(&moved_t, &psi);
        let den = inner(&moved_t, &moved_psi) * inner(&psi_t, &psi);
        *f = (num / den).re;
    }
    out
}

fn coordinate_fidelity(at: &Spectrum, shifted: &Spectrum, order: &[usize]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (n, f) in out.iter_mut().enumerate() {
        let a = BiorthCoordinates::from_state(at, &shifted.right_vector(order[n]));
        *f = a.coords()[n].norm_sqr() / a.weight();
    }
    out
}

fn displacement(at: &Spectrum, shifted: &Spectrum, order: &[usize]) -> f64 {
    order
        .iter()
        .enumerate()
        .map(|(i, &j)| (at.eigenvalues[i] - shifted.eigenvalues[j]).norm())
        .sum()
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Bases at `gamma` and `gamma + eps` plus every minimal-displacement
/// pairing, in lexicographic order.
fn fidelity_bases(
    params: &ModelParams,
    gamma: f64,
    eps: f64,
) -> Result<(Spectrum, Spectrum, Vec<[usize; 3]>)> {
    if !eps.is_finite() || !gamma.is_finite() {
        return Err(Error::InvalidParams(format!(
            "gamma {gamma}, eps {eps} must be finite"
        )));
    }
    let at = biorthonormal_basis(&params.with_gamma(gamma))?;
    let shifted = biorthonormal_basis(&params.with_gamma(gamma + eps))?;
    let scale = at
        .eigenvalues
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let best = PERMUTATIONS
        .iter()
        .map(|o| displacement(&at, &shifted, o))
        .fold(f64::INFINITY, f64::min);
    let tied = PERMUTATIONS
        .into_iter()
        .filter(|o| displacement(&at, &shifted, o) - best <= PAIRING_TOL * scale)
        .collect();
    Ok((at, shifted, tied))
}

/// `exp(-i M t)` applied to a fixed initial state.
#[derive(Debug, Clone)]
pub enum Propagator {
    /// `sum_n exp(-i E_n t) |psi_n><psi~_n|`
    Spectral(Spectrum),
    /// Padé scaling-and-squaring exponential of the trace-free part.
    Exponential { traceless: Matrix3<C64>, mean: C64 },
}

impl Propagator {
    /// Spectral when the eigenbasis is well conditioned, otherwise the
    /// direct exponential.
    pub fn new(m: &Matrix3<C64>) -> Result<Self> {
        let s = eigensystem3(m)?;
        if s.defectiveness > SPECTRAL_PATH_MIN_DEFECTIVENESS {
            if let Ok(b) = biorthogonalize(&s, SPECTRAL_PATH_MIN_DEFECTIVENESS) {
                return Ok(Propagator::Spectral(b));
            }
        }
        log::debug!(
            "near-defective propagator (defectiveness {:.3e}), using exp",
            s.defectiveness
        );
        Ok(Self::exponential(m))
    }

    pub fn exponential(m: &Matrix3<C64>) -> Self {
        let mean = m.trace() / 3.0;
        Propagator::Exponential {
            traceless: m - Matrix3::identity() * mean,
            mean,
        }
    }

    pub fn spectral(m: &Matrix3<C64>) -> Result<Self> {
        let s = eigensystem3(m)?;
        Ok(Propagator::Spectral(biorthogonalize(
            &s,
            DEFECTIVENESS_TOL,
        )?))
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self, Propagator::Spectral(_))
    }

    pub fn apply(&self, state0: &DVector<C64>, t: f64) -> DVector<C64> {
        let minus_i_t = C64::new(0.0, -t);
        match self {
            Propagator::Spectral(b) => {
                let c = b.left.adjoint() * state0;
                let phased = DVector::from_iterator(
                    c.len(),
                    c.iter()
                        .zip(&b.eigenvalues)
                        .map(|(ci, e)| ci * (minus_i_t * e).exp()),
                );
                &b.right * phased
            }
            Propagator::Exponential { traceless, mean } => {
                let u = (traceless * minus_i_t).exp() * (minus_i_t * mean).exp();
                let u = DMatrix::from_fn(3, 3, |i, j| u[(i, j)]);
                u * state0
            }
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParams(
            "time grid contains non-finite values".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("time grid must be sorted".into()));
    }
    Ok(())
}

/// `|psi(t)> = exp(-i M t) |psi(0)>` on a sorted grid.
pub fn evolve(m: &Matrix3<C64>, state0: &DVector<C64>, times: &[f64]) -> Result<Vec<DVector<C64>>> {
    check_times(times)?;
    let prop = Propagator::new(m)?;
    Ok(times.iter().map(|&t| prop.apply(state0, t)).collect())
}

/// `count` uniform samples on `[0, t_max]`.
pub fn uniform_times(t_max: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![0.0; count];
    }
    (0..count)
        .map(|k| t_max * k as f64 / (count - 1) as f64)
        .collect()
}

pub const DEFAULT_TIME_SAMPLES: usize = 2048;

/// `2048` samples over `[0, 20 / J1]`.
pub fn default_times(params: &ModelParams) -> Vec<f64> {
    uniform_times(20.0 / params.j1, DEFAULT_TIME_SAMPLES)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub gamma_initial: f64,
    pub gamma_final: f64,
    pub theta: f64,
    /// 1-based closed-form label of the initial eigenstate.
    pub branch: usize,
}

struct Quench {
    initial: Spectrum,
    propagator: Propagator,
}

impl Quench {
    fn new(params_i: &ModelParams, params_f: &ModelParams) -> Result<Self> {
        let initial = biorthonormal_basis(params_i)?;
        let m_f = build_effective_matrix(params_f)?.entries;
        Ok(Self {
            initial,
            propagator: Propagator::new(&m_f)?,
        })
    }

    fn coords(&self, branch: usize, t: f64) -> BiorthCoordinates {
        let psi = self.propagator.apply(&self.initial.right_vector(branch), t);
        BiorthCoordinates::from_state(&self.initial, &psi)
    }
}

fn check_branch(branch: usize) -> Result<usize> {
    if !(1..=3).contains(&branch) {
        return Err(Error::InvalidParams(format!(
            "branch {branch} outside 1..=3"
        )));
    }
    Ok(branch - 1)
}

/// `L_n(t) = |d_n|^2 / sum_m |d_m|^2` with `d = <psi~^i_m|psi(t)>` and
/// `|psi(0)>` the `branch`-th pre-quench eigenstate.
pub fn loschmidt_echo(
    params_i: &ModelParams,
    params_f: &ModelParams,
    branch: usize,
    times: &[f64],
) -> Result<TimeSeries> {
    check_times(times)?;
    let n = check_branch(branch)?;
    let q = Quench::new(params_i, params_f)?;
    let values = times
        .par_iter()
        .map(|&t| {
            let d = q.coords(n, t);
            d.coords()[n].norm_sqr() / d.weight()
        })
        .collect();
    Ok(TimeSeries {
        times: times.to_vec(),
        values,
        gamma_initial: params_i.gamma,
        gamma_final: params_f.gamma,
        theta: params_f.theta,
        branch,
    })
}

/// The echo evaluated as the ratio of overlaps between `|psi(t)>`, its
/// associated state and the initial pair.
pub fn loschmidt_echo_overlaps(
    params_i: &ModelParams,
    params_f: &ModelParams,
    branch: usize,
    times: &[f64],
) -> Result<Vec<f64>> {
    check_times(times)?;
    let n = check_branch(branch)?;
    let q = Quench::new(params_i, params_f)?;
    let psi0 = q.initial.right_vector(n);
    let psi0_t = q.initial.left_vector(n);
    Ok(times
        .iter()
        .map(|&t| {
            let d = q.coords(n, t);
            let psi = d.state();
            let psi_t = associated_state(&d);
            let num = inner(&psi0_t, &psi) * inner(&psi_t, &psi0);
            let den = inner(&psi_t, &psi) * inner(&psi0_t, &psi0);
            (num / den).re
        })
        .collect())
}

/// Large-time echo when the post-quench matrix has a single mode with the
/// largest `Im E`: the pre-quench weight of that mode.
pub fn steady_state_limit(
    params_i: &ModelParams,
    params_f: &ModelParams,
    branch: usize,
) -> Result<f64> {
    let n = check_branch(branch)?;
    let initial = biorthonormal_basis(params_i)?;
    let post = eigensystem3(&build_effective_matrix(params_f)?.entries)?;
    let k = (0..3)
        .max_by(|&a, &b| post.eigenvalues[a].im.total_cmp(&post.eigenvalues[b].im))
        .unwrap();
    let d = BiorthCoordinates::from_state(&initial, &post.right_vector(k));
    Ok(d.coords()[n].norm_sqr() / d.weight())
}

/// Population variance of the last `fraction` of the samples.
pub fn tail_variance(values: &[f64], fraction: f64) -> f64 {
    let start = ((1.0 - fraction) * values.len() as f64).floor() as usize;
    let tail = &values[start.min(values.len())..];
    if tail.is_empty() {
        return 0.0;
    }
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    tail.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / tail.len() as f64
}

/// Pearson correlation between `f(t)` and `f(t + lag)` over the samples
/// where both are available; `f(t + lag)` is linearly interpolated.
pub fn autocorrelation(times: &[f64], values: &[f64], lag: f64) -> Option<f64> {
    let t_end = *times.last()?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut j = 0;
    for (&t, &v) in times.iter().zip(values) {
        let target = t + lag;
        if target > t_end {
            break;
        }
        while j + 1 < times.len() && times[j + 1] < target {
            j += 1;
        }
        let (t0, t1) = (times[j], times[(j + 1).min(times.len() - 1)]);
        let (v0, v1) = (values[j], values[(j + 1).min(times.len() - 1)]);
        let y = if t1 > t0 {
            v0 + (v1 - v0) * (target - t0) / (t1 - t0)
        } else {
            v0
        };
        xs.push(v);
        ys.push(y);
    }
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Longest period `2 pi / |E_i - E_j|` among distinct levels. For equally
/// spaced levels this is the period of every population.
pub fn gap_period(eigenvalues: &[C64]) -> Option<f64> {
    let mut smallest = f64::INFINITY;
    for i in 0..eigenvalues.len() {
        for j in i + 1..eigenvalues.len() {
            let gap = (eigenvalues[i].re - eigenvalues[j].re).abs();
            if gap > 1e-12 {
                smallest = smallest.min(gap);
            }
        }
    }
    smallest
        .is_finite()
        .then(|| 2.0 * std::f64::consts::PI / smallest)
}
