use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// `1 - (ωh)²/8` vanishes: the midpoint node cannot be eliminated.
    #[error("internal-node elimination is singular at ωh = {s} (1 - (ωh)²/8 = 0)")]
    SingularElimination { s: f64 },

    #[error("ωh = {s} lies outside the stability window 0 < ωh < 2√2")]
    OutsideStabilityWindow { s: f64 },

    #[error("θ = {0} lies outside [0, 1]")]
    Domain(f64),

    #[error("propagator is not symplectic: det = {det}")]
    NotSymplectic { det: f64 },

    #[error("conserved form requires equal diagonal entries, got {alpha} and {delta}")]
    UnequalDiagonal { alpha: f64, delta: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (last iterate {last}, residual {residual})")]
    NoConvergence {
        iterations: usize,
        last: f64,
        residual: f64,
    },

    #[error("singular Jacobian at {at}")]
    SingularJacobian { at: f64 },

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
}
