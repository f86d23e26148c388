use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("operator is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("conditional state inconsistent with closed form: {0}")]
    ModelInconsistency(String),

    #[error("ill-conditioned spectral division: |transfer| = {magnitude:.3e} below floor {floor:.3e} at {omega:.3e} rad/s")]
    IllConditioned { magnitude: f64, floor: f64, omega: f64 },

    #[error("degenerate normalisation: {0}")]
    Degenerate(String),

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("maximum-likelihood reconstruction did not converge after {iterations} iterations (last gain {last_gain:.3e})")]
    NotConverged { iterations: usize, last_gain: f64 },

    #[error("purity objective is flat; no fringes to unwind")]
    FlatObjective,

    #[error("negative discord {0:.3e} beyond clamp tolerance")]
    NegativeDiscord(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
