//! Physical parameters, the dispersive effective matrix and the full
//! single-excitation Hamiltonian.
//!
//! All energies are in units of the bare cavity frequency `omega`. The
//! effective matrix acts on the photon amplitudes of cavities 1, 2, 3 with
//! gain on cavity 1 and loss on cavity 3:
//!
//! ```text
//!     [ w1 + i g      -J1 e^{-it}   -J3 e^{+it} ]
//! M = [ -J1 e^{+it}    w2           -J1 e^{-it} ]
//!     [ -J3 e^{-it}   -J1 e^{+it}    w1 - i g   ]
//! ```
//!
//! with `w_n = omega - g_n^2 / delta`.

use nalgebra::{Matrix3, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Every knob of the ring, in units of `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    /// Atomic gap.
    pub delta: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    /// Gain on cavity 1, loss on cavity 3.
    pub gamma: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    /// Hopping phase; the flux through the ring is `3 * theta`. Stored
    /// unreduced.
    pub theta: f64,
}

impl ModelParams {
    /// Ring with equal couplings on all sites and `j1 = j2 = j3 = j`.
    pub fn uniform(omega: f64, delta: f64, g: f64, gamma: f64, j: f64, theta: f64) -> Self {
        Self {
            omega,
            delta,
            g1: g,
            g2: g,
            g3: g,
            gamma,
            j1: j,
            j2: j,
            j3: j,
            theta,
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }

    /// Sets the gain/loss-cavity coupling `g1 = g3`.
    pub fn with_outer_coupling(self, g: f64) -> Self {
        Self {
            g1: g,
            g3: g,
            ..self
        }
    }

    /// Sets `j1 = j2`.
    pub fn with_inner_hopping(self, j: f64) -> Self {
        Self {
            j1: j,
            j2: j,
            ..self
        }
    }

    /// Checks the hard invariants. Violations of the dispersive regime
    /// (`g_n^2 / delta >= omega`) are logged, not rejected.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega", self.omega),
            ("delta", self.delta),
            ("g1", self.g1),
            ("g2", self.g2),
            ("g3", self.g3),
            ("gamma", self.gamma),
            ("j1", self.j1),
            ("j2", self.j2),
            ("j3", self.j3),
            ("theta", self.theta),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} is not finite")));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParams("omega must be > 0".into()));
        }
        if self.delta <= 0.0 {
            return Err(Error::InvalidParams("delta must be > 0".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParams("gamma must be >= 0".into()));
        }
        if self.j1 < 0.0 || self.j2 < 0.0 || self.j3 < 0.0 {
            return Err(Error::InvalidParams(
                "hopping strengths must be >= 0".into(),
            ));
        }
        for site in self.dispersive_violations() {
            log::warn!("g{site}^2/delta >= omega: outside the dispersive regime");
        }
        Ok(())
    }

    /// Sites (1-based) where `g_n^2 / delta >= omega`.
    pub fn dispersive_violations(&self) -> Vec<usize> {
        [self.g1, self.g2, self.g3]
            .iter()
            .enumerate()
            .filter(|(_, g)| *g * *g / self.delta >= self.omega)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Checks the two assumptions behind the closed-form 3x3 model.
    pub fn check_effective_form(&self) -> Result<()> {
        if self.g1 != self.g3 {
            return Err(Error::MatrixAssumption(
                "g1 == g3 (equal gain/loss couplings)",
            ));
        }
        if self.j1 != self.j2 {
            return Err(Error::MatrixAssumption("j1 == j2 (equal inner hoppings)"));
        }
        Ok(())
    }
}

/// Dispersively shifted cavity frequencies `omega - g_n^2 / delta`.
pub fn renormalized_frequencies(params: &ModelParams) -> Result<[f64; 3]> {
    if params.delta == 0.0 {
        return Err(Error::InvalidParams("delta must be nonzero".into()));
    }
    let shift = |g: f64| params.omega - g * g / params.delta;
    Ok([shift(params.g1), shift(params.g2), shift(params.g3)])
}

/// The dense 3x3 effective matrix together with the parameters that built it.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveMatrix {
    pub entries: Matrix3<C64>,
    pub params: ModelParams,
}

impl EffectiveMatrix {
    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Adds `epsilon` to the diagonal entry of `site` (1-based).
    pub fn perturbed(&self, site: usize, epsilon: f64) -> Matrix3<C64> {
        let mut m = self.entries;
        m[(site - 1, site - 1)] += C64::new(epsilon, 0.0);
        m
    }
}

/// Photon-sector hopping block, without diagonal terms.
fn hopping_block(j1: f64, j2: f64, j3: f64, theta: f64) -> Matrix3<C64> {
    let fwd = C64::from_polar(1.0, theta);
    let bwd = fwd.conj();
    let mut k = Matrix3::zeros();
    k[(0, 1)] = -j1 * bwd;
    k[(1, 0)] = -j1 * fwd;
    k[(1, 2)] = -j2 * bwd;
    k[(2, 1)] = -j2 * fwd;
    k[(0, 2)] = -j3 * fwd;
    k[(2, 0)] = -j3 * bwd;
    k
}

pub fn build_effective_matrix(params: &ModelParams) -> Result<EffectiveMatrix> {
    params.check_effective_form()?;
    let [w1, w2, w3] = renormalized_frequencies(params)?;
    let mut m = hopping_block(params.j1, params.j2, params.j3, params.theta);
    m[(0, 0)] = C64::new(w1, params.gamma);
    m[(1, 1)] = C64::new(w2, 0.0);
    m[(2, 2)] = C64::new(w3, -params.gamma);
    Ok(EffectiveMatrix {
        entries: m,
        params: *params,
    })
}

/// Single-excitation sector of the full ring, basis
/// `[photon1, photon2, photon3, atom1, atom2, atom3]`. The common vacuum
/// energy `-3 delta / 2` is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct FullMatrix {
    pub entries: SMatrix<C64, 6, 6>,
}

impl FullMatrix {
    /// Constant removed from every diagonal entry.
    pub const fn dropped_offset(delta: f64) -> f64 {
        -1.5 * delta
    }

    pub fn photon_block(&self) -> Matrix3<C64> {
        self.entries.fixed_view::<3, 3>(0, 0).into_owned()
    }

    /// Largest entry of `A - A^dagger`.
    pub fn hermiticity_defect(&self) -> f64 {
        let a = &self.entries;
        (a - a.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

pub fn build_full_single_excitation(params: &ModelParams) -> FullMatrix {
    let mut h = SMatrix::<C64, 6, 6>::zeros();
    let k = hopping_block(params.j1, params.j2, params.j3, params.theta);
    h.fixed_view_mut::<3, 3>(0, 0).copy_from(&k);
    h[(0, 0)] = C64::new(params.omega, params.gamma);
    h[(1, 1)] = C64::new(params.omega, 0.0);
    h[(2, 2)] = C64::new(params.omega, -params.gamma);
    for (n, g) in [params.g1, params.g2, params.g3].into_iter().enumerate() {
        h[(3 + n, 3 + n)] = C64::new(params.delta, 0.0);
        h[(n, 3 + n)] = C64::new(g, 0.0);
        h[(3 + n, n)] = C64::new(g, 0.0);
    }
    FullMatrix { entries: h }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    /// `max |P M* P - M|` with `P` the site reversal 1 <-> 3.
    pub pt_residual: f64,
    /// `max |(C K C^-1)* - K|` on the hopping part `K` of `M`.
    pub chiral_residual: f64,
    pub pt_symmetric: bool,
    pub chiral_symmetric: bool,
}

fn reverse_sites(m: &Matrix3<C64>) -> Matrix3<C64> {
    Matrix3::from_fn(|i, j| m[(2 - i, 2 - j)])
}

fn max_abs_diff(a: &Matrix3<C64>, b: &Matrix3<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Both symmetries use the 1 <-> 3 exchange. The chiral transformation acts
/// on the hopping processes only; gain and loss are left to PT.
pub fn check_symmetries(m: &Matrix3<C64>, tol: f64) -> SymmetryReport {
    let pt = reverse_sites(&m.map(|z| z.conj()));
    let pt_residual = max_abs_diff(&pt, m);

    let mut hopping = *m;
    for i in 0..3 {
        hopping[(i, i)] = C64::new(0.0, 0.0);
    }
    let ct = reverse_sites(&hopping).map(|z| z.conj());
    let chiral_residual = max_abs_diff(&ct, &hopping);

    SymmetryReport {
        pt_residual,
        chiral_residual,
        pt_symmetric: pt_residual <= tol,
        chiral_symmetric: chiral_residual <= tol,
    }
}
