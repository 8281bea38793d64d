use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("charge cutoff {cutoff} not converged: level {level} moved by relative {change:e}")]
    ChargeCutoffTooSmall {
        cutoff: usize,
        level: usize,
        change: f64,
    },

    #[error("model has {levels} levels, need at least {required}")]
    TooFewLevels { levels: usize, required: usize },

    #[error("quadrature did not converge: estimated error {error:e} for value {value:e}")]
    Quadrature { value: f64, error: f64 },

    #[error("trajectory ran away at step {step}: norm {norm:e} exceeds {bound:e}")]
    Runaway { step: usize, norm: f64, bound: f64 },

    #[error("{clipped} of {total} trajectories ran away (limit {limit_fraction})")]
    TooManyRunaways {
        clipped: usize,
        total: usize,
        limit_fraction: f64,
    },

    #[error("window [{start}, {end}] outside time grid [{grid_start}, {grid_end}]")]
    WindowOutsideGrid {
        start: f64,
        end: f64,
        grid_start: f64,
        grid_end: f64,
    },

    #[error("fit did not converge after {iterations} iterations")]
    FitDiverged { iterations: usize },

    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("spectrum convention violated at omega = {omega}: radicand {radicand}")]
    SpectrumConvention { omega: f64, radicand: f64 },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
