use thiserror::Error;

/// Errors raised by samplers, estimators and closed-form references.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("shot series is empty")]
    EmptySeries,

    #[error("need at least {needed} shots, got {got}")]
    TooFewShots { needed: usize, got: usize },

    #[error("dark-noise correction requested but no dark statistics are attached")]
    MissingDarkStatistics,

    /// Subtracting the dark variance left a non-positive signal variance.
    #[error("dark subtraction leaves non-positive {quantity} ({value})")]
    OverSubtraction { quantity: &'static str, value: f64 },

    #[error("mean photon count is zero, ratio is undefined")]
    ZeroMean,

    #[error("noise reduction R = {0} is not positive, decibels are undefined")]
    NonPositiveNoiseReduction(f64),

    #[error("conditioning window [{lo}, {hi}] retained no shots")]
    EmptySelection { lo: f64, hi: f64 },

    #[error("invalid window [{lo}, {hi}]")]
    InvalidWindow { lo: f64, hi: f64 },

    #[error("truncated probability mass {mass:e} exceeds tolerance; raise n_max above {n_max}")]
    Truncation { mass: f64, n_max: usize },

    #[error("n_max = {n_max} exceeds the brute-force limit of {limit}")]
    CostGuard { n_max: usize, limit: usize },

    #[error("target {target} cannot be reached for any value in [{lo}, {hi}]")]
    Unattainable { target: f64, lo: f64, hi: f64 },

    #[error("lag {lag} must be smaller than the series length {len}")]
    LagTooLarge { lag: usize, len: usize },

    #[error("empty list of pump intensities")]
    EmptySweep,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}

pub(crate) fn ensure_nonneg(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and non-negative",
        })
    }
}
