use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The closed-form 3x3 model needs `g1 == g3` and `j1 == j2`.
    #[error("effective matrix requires {0}")]
    MatrixAssumption(&'static str),

    #[error("eigensolver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("eigenbasis is defective: self-overlap {defectiveness:.3e} <= {tol:.3e}")]
    DefectiveAtEp { defectiveness: f64, tol: f64 },

    #[error("no third-order exceptional line: arccos argument {argument} outside [-1, 1]")]
    OutOfReach { argument: f64 },

    #[error("no real second-order exceptional point: radicand {radicand}")]
    NoSecondOrderPoint { radicand: f64 },

    #[error("Puiseux expansion degenerates: |eta| = {0:.3e}")]
    DegenerateExpansion(f64),

    #[error("branch pairing ambiguous: best cost {best:.3e}, runner-up {runner_up:.3e}")]
    BranchPairingAmbiguous { best: f64, runner_up: f64 },

    #[error("scaling fit: {0}")]
    InvalidFitInput(String),
}
