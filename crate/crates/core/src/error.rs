use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The expert's state distribution does not cover a state that some
    /// deviated policy reaches, so importance weights are undefined.
    #[error("coverage violation at state {state}: expert mass {expert_mass}, deviated mass {deviated_mass}")]
    Coverage {
        state: usize,
        expert_mass: f64,
        deviated_mass: f64,
    },

    #[error("expert coverage constant is zero (state {state} never visited)")]
    ZeroCoverage { state: usize },

    #[error("{what} exceeds cap ({size} > {cap})")]
    CapExceeded {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("demonstration set is empty")]
    EmptyDemonstrations,

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
