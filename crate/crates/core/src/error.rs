use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("word reduction did not terminate within {cap} letters")]
    NonTermination { cap: usize },

    #[error("crossing localization failed after {refinements} refinements at t = {time}")]
    CrossingLocalization { refinements: u32, time: f64 },

    #[error("cusp trap at t = {time}: step would drop below dt * 2^-20 (cusp height {height})")]
    CuspTrap { time: f64, height: f64 },

    #[error("frame rank collapse at multiplication {step}")]
    Deflation { step: usize },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("generator {generator} fails {what}: residual {residual:e}")]
    FormViolation {
        generator: usize,
        what: &'static str,
        residual: f64,
    },

    #[error("too many discarded trajectories: {discarded} of {total}")]
    Discards { discarded: usize, total: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
