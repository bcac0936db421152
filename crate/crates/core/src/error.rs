use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate parameter point: gap {gap:e} below threshold")]
    Degenerate { gap: f64 },

    #[error("Drude cutoff {omega_d} coincides with Matsubara frequency nu_{index}")]
    MatsubaraPole { omega_d: f64, index: usize },

    #[error("step {step} too large for generator scale {scale:e}")]
    StepTooLarge { step: f64, scale: f64 },

    #[error("propagation diverged at s = {s}")]
    Diverged { s: f64 },

    #[error("field integral not converged at s = {s} (trailing/accumulated = {ratio:e})")]
    NotConverged { s: f64, ratio: f64 },

    #[error("current decomposition undefined: |sin phi| = {sin_phi:e}")]
    PhaseSingularity { sin_phi: f64 },

    #[error("point ({b_y}, {b_z}) lies outside the field grid")]
    OutsideGrid { b_y: f64, b_z: f64 },

    #[error("integration region contains {count} missing nodes")]
    MissingNodes { count: usize },

    #[error("Hilbert space dimension {dim} exceeds budget {budget}")]
    DimensionBudget { dim: usize, budget: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
