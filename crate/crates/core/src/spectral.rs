//! Closed-form and numeric spectra of the effective matrix.
//!
//! The closed form shifts `E = eps + (2 w1 + w2) / 3` and solves the
//! depressed cubic `eps^3 + 3 p eps + 2 q = 0` with Cardano's formula:
//!
//! ```text
//! beta_pm = cbrt(-q +- sqrt(q^2 + p^3))
//! eps_1 = beta_+ + beta_-
//! eps_2 = chi beta_+ + chi* beta_-
//! eps_3 = chi* beta_+ + chi beta_-        chi = (-1 + i sqrt 3) / 2
//! ```
//!
//! The numeric route is a complex Schur decomposition followed by
//! null-space extraction of `M - E` and `M^dagger - E*`, and never touches
//! `p` or `q`.

use nalgebra::{DMatrix, DVector, Matrix3, Schur};

use crate::error::{Error, Result};
use crate::model::{
    build_effective_matrix, build_full_single_excitation, renormalized_frequencies, ModelParams,
};
use crate::C64;

/// Default threshold on `min |<w_n|v_n>|` (unit vectors) below which a basis
/// is treated as sitting on an exceptional point.
pub const DEFECTIVENESS_TOL: f64 = 1e-8;

/// Relative tolerance for calling an eigenvalue real.
pub const REALITY_TOL: f64 = 1e-10;

const SCHUR_MAX_ITER: usize = 500;

/// `(-1 + i sqrt 3) / 2`
pub fn chi() -> C64 {
    C64::new(-0.5, 0.75_f64.sqrt())
}

/// `|Im E| < 1e-10 * max(1, |Re E|)`
pub fn is_real(e: C64) -> bool {
    e.im.abs() < REALITY_TOL * e.re.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CardanoInputs {
    pub p: f64,
    pub q: f64,
    /// `(2 w1 + w2) / 3`, the mean of the three eigenvalues.
    pub shift: f64,
    /// `q^2 + p^3`; zero on the exceptional manifold.
    pub discriminant: f64,
}

pub fn cardano_pq(params: &ModelParams) -> Result<CardanoInputs> {
    params.check_effective_form()?;
    let [w1, w2, _] = renormalized_frequencies(params)?;
    let (j1, j3, gamma) = (params.j1, params.j3, params.gamma);
    let d12 = w1 - w2;
    let d21 = w2 - w1;
    let p = (-2.0 * j1 * j1 - j3 * j3 + gamma * gamma) / 3.0 - d12 * d12 / 9.0;
    let q = j1 * j1 * j3 * (3.0 * params.theta).cos()
        - d21 * (d21 * d21 + 9.0 * j1 * j1 - 9.0 * j3 * j3 + 9.0 * gamma * gamma) / 27.0;
    Ok(CardanoInputs {
        p,
        q,
        shift: (2.0 * w1 + w2) / 3.0,
        discriminant: q * q + p * p * p,
    })
}

/// Roots of `eps^3 + 3 p eps + 2 q = 0` in Cardano order.
///
/// `beta_+` is the principal cube root of `-q + sqrt(q^2 + p^3)` and
/// `beta_- = -p / beta_+`, so `beta_+ beta_- = -p` holds on every branch.
pub fn depressed_cubic_roots(p: C64, q: C64) -> [C64; 3] {
    let p3 = p * p * p;
    let root = (q * q + p3).sqrt();
    let mut plus = -q + root;
    let minus = -q - root;
    // same value, without the cancellation in -q + root
    if plus.norm() < minus.norm() {
        plus = -p3 / minus;
    }
    let bp = plus.cbrt();
    let bm = if bp.norm() > 0.0 {
        -p / bp
    } else {
        minus.cbrt()
    };
    let c = chi();
    [bp + bm, c * bp + c.conj() * bm, c.conj() * bp + c * bm]
}

/// Roots of the monic cubic `E^3 + a2 E^2 + a1 E + a0`.
pub fn monic_cubic_roots(a2: C64, a1: C64, a0: C64) -> [C64; 3] {
    let s = a2 / 3.0;
    // E = y - s  =>  y^3 + P y + Q
    let big_p = a1 - a2 * a2 / 3.0;
    let big_q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    depressed_cubic_roots(big_p / 3.0, big_q / 2.0).map(|y| y - s)
}

/// Closed-form eigenvalues `E_1, E_2, E_3` of the effective matrix.
pub fn cardano_eigenvalues(params: &ModelParams) -> Result<[C64; 3]> {
    let c = cardano_pq(params)?;
    let eps = depressed_cubic_roots(C64::new(c.p, 0.0), C64::new(c.q, 0.0));
    Ok(eps.map(|e| e + c.shift))
}

/// Eigenvalues with right and left eigenvectors stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// `M v_n = E_n v_n`, unit norm, largest component real-positive.
    pub right: DMatrix<C64>,
    /// `w_n^dagger M = E_n w_n^dagger`. Unit norm unless biorthogonalized,
    /// after which `w_m^dagger v_n = delta_mn`.
    pub left: DMatrix<C64>,
    /// `<w_n|v_n>` for unit-norm `w_n` and `v_n`.
    pub norm_products: Vec<C64>,
    /// `min_n |<w_n|v_n>|`; vanishes at an exceptional point.
    pub defectiveness: f64,
    /// Largest eigen-residual relative to the matrix scale.
    pub residual: f64,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn right_vector(&self, n: usize) -> DVector<C64> {
        self.right.column(n).into_owned()
    }

    pub fn left_vector(&self, n: usize) -> DVector<C64> {
        self.left.column(n).into_owned()
    }

    /// Reorders eigenpairs so that new index `i` holds old index `order[i]`.
    pub fn reordered(&self, order: &[usize]) -> Spectrum {
        let pick =
            |m: &DMatrix<C64>| DMatrix::from_fn(m.nrows(), order.len(), |r, c| m[(r, order[c])]);
        Spectrum {
            eigenvalues: order.iter().map(|&i| self.eigenvalues[i]).collect(),
            right: pick(&self.right),
            left: pick(&self.left),
            norm_products: order.iter().map(|&i| self.norm_products[i]).collect(),
            defectiveness: self.defectiveness,
            residual: self.residual,
        }
    }

    /// `max |W^dagger V - I|`
    pub fn gram_defect(&self) -> f64 {
        let g = self.left.adjoint() * &self.right;
        identity_defect(&g)
    }

    /// `max |sum_n v_n w_n^dagger - I|`
    pub fn completeness_defect(&self) -> f64 {
        let c = &self.right * self.left.adjoint();
        identity_defect(&c)
    }
}

fn identity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    (m - DMatrix::<C64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Scales `v` to unit norm and rotates its largest component onto the
/// positive real axis.
fn normalize_phase(v: &mut DVector<C64>) {
    let (imax, _) = v.iter().enumerate().fold((0, -1.0), |acc, (i, z)| {
        if z.norm() > acc.1 {
            (i, z.norm())
        } else {
            acc
        }
    });
    let pivot = v[imax];
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        *v *= phase;
    }
    let n = v.norm();
    if n > 0.0 {
        *v /= C64::new(n, 0.0);
    }
}

/// Dense eigensystem of a small complex matrix, independent of the
/// closed form.
pub fn numeric_eigensystem(m: &DMatrix<C64>) -> Result<Spectrum> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigensystem needs a square matrix");
    let shift = m.trace() / n as f64;
    let a = m - DMatrix::<C64>::identity(n, n) * shift;
    let scale = max_abs(&a);
    let identity = DMatrix::<C64>::identity(n, n);
    if scale == 0.0 {
        return Ok(Spectrum {
            eigenvalues: vec![shift; n],
            right: identity.clone(),
            left: identity,
            norm_products: vec![C64::new(1.0, 0.0); n],
            defectiveness: 1.0,
            residual: 0.0,
        });
    }

    let schur =
        Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::NoConvergence {
            iterations: SCHUR_MAX_ITER,
        })?;
    let (_, t) = schur.unpack();
    let lambdas: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();

    let cluster_tol = 1e3 * f64::EPSILON * scale;
    let null_tol = 1e3 * f64::EPSILON * scale;
    let mut right = DMatrix::<C64>::zeros(n, n);
    let mut left = DMatrix::<C64>::zeros(n, n);
    let mut assigned = vec![false; n];

    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let members: Vec<usize> = (i..n)
            .filter(|&j| !assigned[j] && (lambdas[j] - lambdas[i]).norm() <= cluster_tol)
            .collect();
        let k = members.len();
        let mu = members.iter().map(|&j| lambdas[j]).sum::<C64>() / k as f64;
        let b = &a - &identity * mu;
        let svd = b.svd(true, true);
        let u = svd.u.expect("svd computed with u");
        let v_t = svd.v_t.expect("svd computed with v_t");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        let nulls = order
            .iter()
            .take(k)
            .filter(|&&x| svd.singular_values[x] <= null_tol)
            .count()
            .max(1);

        let mut vr = DMatrix::<C64>::zeros(n, k);
        let mut vl = DMatrix::<C64>::zeros(n, k);
        for c in 0..k {
            // repeat the last null vector when the null space is too small
            let s = order[c.min(nulls - 1)];
            vr.set_column(c, &v_t.row(s).adjoint());
            vl.set_column(c, &u.column(s));
        }
        if k > 1 && nulls == k {
            // make the cluster's left basis dual to its right basis
            if let Some(g_inv) = (vl.adjoint() * &vr).try_inverse() {
                vl = &vl * g_inv.adjoint();
            }
        }
        for (c, &j) in members.iter().enumerate() {
            right.set_column(j, &vr.column(c));
            left.set_column(j, &vl.column(c));
            assigned[j] = true;
        }
    }

    let mut norm_products = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = right.column(j).into_owned();
        normalize_phase(&mut v);
        let mut w = left.column(j).into_owned();
        let wn = w.norm();
        if wn > 0.0 {
            w /= C64::new(wn, 0.0);
        }
        let overlap = w.dotc(&v);
        if overlap.norm() > 0.0 {
            // rotate w so that <w|v> is real and non-negative
            w *= overlap / overlap.norm();
        }
        norm_products.push(w.dotc(&v));
        right.set_column(j, &v);
        left.set_column(j, &w);
    }

    let mut residual: f64 = 0.0;
    for (j, l) in lambdas.iter().enumerate() {
        let v = right.column(j);
        let w = left.column(j);
        let rr = (&a * v - v * *l).norm();
        let rl = (a.adjoint() * w - w * l.conj()).norm();
        residual = residual.max(rr.max(rl) / scale);
    }

    let defectiveness = norm_products
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min);
    Ok(Spectrum {
        eigenvalues: lambdas.into_iter().map(|l| l + shift).collect(),
        right,
        left,
        norm_products,
        defectiveness,
        residual,
    })
}

pub fn eigensystem3(m: &Matrix3<C64>) -> Result<Spectrum> {
    numeric_eigensystem(&DMatrix::from_fn(3, 3, |i, j| m[(i, j)]))
}

/// Rescales left vectors so that `<w_m|v_n> = delta_mn`.
pub fn biorthogonalize(spectrum: &Spectrum, tol: f64) -> Result<Spectrum> {
    if spectrum.defectiveness <= tol {
        return Err(Error::DefectiveAtEp {
            defectiveness: spectrum.defectiveness,
            tol,
        });
    }
    let gram = spectrum.left.adjoint() * &spectrum.right;
    let g_inv = gram.try_inverse().ok_or(Error::DefectiveAtEp {
        defectiveness: spectrum.defectiveness,
        tol,
    })?;
    Ok(Spectrum {
        left: &spectrum.left * g_inv.adjoint(),
        ..spectrum.clone()
    })
}

/// Numeric eigensystem of the effective matrix with eigenpairs ordered like
/// the closed-form `E_1, E_2, E_3`.
pub fn labeled_eigensystem(params: &ModelParams) -> Result<Spectrum> {
    let m = build_effective_matrix(params)?;
    let numeric = eigensystem3(&m.entries)?;
    let closed = cardano_eigenvalues(params)?;
    let pairing = pair_by_displacement(&closed, &numeric.eigenvalues);
    Ok(numeric.reordered(&pairing.order))
}

/// Eigenvalues of the 6x6 single-excitation matrix with the smallest real
/// parts, i.e. the photon-like triplet for `delta > omega`.
pub fn full_model_lowest_triplet(params: &ModelParams) -> Result<[C64; 3]> {
    let full = build_full_single_excitation(params).entries;
    let s = numeric_eigensystem(&DMatrix::from_fn(6, 6, |i, j| full[(i, j)]))?;
    let mut e = s.eigenvalues;
    e.sort_by(|a, b| a.re.total_cmp(&b.re));
    Ok([e[0], e[1], e[2]])
}

/// Distance between the 6x6 photon-like triplet and the closed form.
pub fn effective_model_deviation(params: &ModelParams) -> Result<f64> {
    Ok(multiset_distance(
        &full_model_lowest_triplet(params)?,
        &cardano_eigenvalues(params)?,
    ))
}

/// Result of matching two eigenvalue lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    /// `to[order[i]]` is matched with `from[i]`.
    pub order: Vec<usize>,
    pub cost: f64,
    /// Cost of the best competing assignment (infinite for a single element).
    pub runner_up: f64,
}

impl Pairing {
    /// True when another assignment is as good as the chosen one to `tol`.
    pub fn is_ambiguous(&self, tol: f64) -> bool {
        self.runner_up - self.cost <= tol
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Minimal total displacement matching between two equally long lists.
pub fn pair_by_displacement(from: &[C64], to: &[C64]) -> Pairing {
    assert_eq!(from.len(), to.len());
    let mut best = (f64::INFINITY, Vec::new());
    let mut runner_up = f64::INFINITY;
    for perm in permutations(from.len()) {
        let cost: f64 = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| (from[i] - to[j]).norm())
            .sum();
        if cost < best.0 {
            runner_up = best.0;
            best = (cost, perm);
        } else if cost < runner_up {
            runner_up = cost;
        }
    }
    Pairing {
        order: best.1,
        cost: best.0,
        runner_up,
    }
}

/// Relabels successive triplets of a sweep so that each branch moves as
/// little as possible between neighbouring points.
pub fn track_branches(points: &[[C64; 3]]) -> Vec<[C64; 3]> {
    let mut out: Vec<[C64; 3]> = Vec::with_capacity(points.len());
    for p in points {
        let next = match out.last() {
            None => *p,
            Some(prev) => {
                let order = pair_by_displacement(prev, p).order;
                [p[order[0]], p[order[1]], p[order[2]]]
            }
        };
        out.push(next);
    }
    out
}

pub fn max_pairwise_gap(e: &[C64]) -> f64 {
    let mut gap: f64 = 0.0;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            gap = gap.max((e[i] - e[j]).norm());
        }
    }
    gap
}

/// Distance between two eigenvalue multisets under the best matching
/// (largest single displacement).
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    let order = pair_by_displacement(a, b).order;
    a.iter()
        .enumerate()
        .map(|(i, x)| (x - b[order[i]]).norm())
        .fold(0.0, f64::max)
}
