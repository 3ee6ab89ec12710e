use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("drive detuning |ω_d - ω_z|/ω_z = {ratio:.3e} exceeds {limit}")]
    OffResonance { ratio: f64, limit: f64 },

    #[error("drive duration {duration:.4e} s is shorter than 10 drive periods ({minimum:.4e} s)")]
    DriveTooShort { duration: f64, minimum: f64 },

    #[error("calibration input is {0}")]
    Calibration(&'static str),

    #[error("thinning bound violated at t = {time:.6e} s: rate {rate:.6e} > bound {bound:.6e}")]
    ThinningBound { time: f64, rate: f64, bound: f64 },

    #[error("no cycle traces supplied")]
    EmptyTraces,

    #[error("too few usable bins: {found} (need {required})")]
    TooFewBins { found: usize, required: usize },

    #[error("exponential fit did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("zero total counts")]
    ZeroCounts,

    #[error("{0} frequency band contains no spectral bins")]
    EmptyBand(&'static str),

    #[error("signal-to-noise ratio must be positive")]
    ZeroSnr,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
