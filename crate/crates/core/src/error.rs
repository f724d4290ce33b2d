use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("negative power level {value} for {which}")]
    NegativePower { which: &'static str, value: f64 },

    #[error("confidential power {mu1} allocated in a state where z_M <= gamma * z_E")]
    ConfidentialPowerOutsideSecrecyRegion { mu1: f64 },

    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),

    #[error("non-finite integrand value {value} at (z_M = {z_m}, z_E = {z_e})")]
    NonFinite { value: f64, z_m: f64, z_e: f64 },

    #[error("theta must be positive for effective capacity (got {0}); use the ergodic limit for theta = 0")]
    NonPositiveTheta(f64),

    #[error("root finder did not converge in {context}: bracket [{lo}, {hi}], f = [{f_lo}, {f_hi}] after {iterations} iterations")]
    RootNotConverged {
        context: String,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        iterations: usize,
    },

    #[error("could not bracket the multiplier for {context}: {reason}")]
    BracketFailure { context: String, reason: String },

    #[error("fixed point for (phi0, phi1) did not converge after {iterations} iterations (last phi0 = {phi0}, phi1 = {phi1}, step = {step})")]
    FixedPointNotConverged {
        iterations: usize,
        phi0: f64,
        phi1: f64,
        step: f64,
    },

    #[error("instance too large for brute force: {0}")]
    InstanceTooLarge(String),

    #[error("insufficient exceedances at tail level {level}: {count} (need {required})")]
    SparseTail {
        level: f64,
        count: usize,
        required: usize,
    },

    #[error("decay fit needs at least two tail levels, got {0}")]
    TooFewTailLevels(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
