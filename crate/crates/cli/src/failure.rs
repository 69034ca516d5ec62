//! Error categories and their process exit codes.

use std::fmt;

use twinbeam::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn config(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind: Kind::Config,
            error: error.into(),
        }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind: Kind::Data,
            error: error.into(),
        }
    }

    pub fn numerical(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind: Kind::Numerical,
            error: error.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Numerical => 4,
        }
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        Failure {
            kind: self.kind,
            error: self.error.context(msg),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::InvalidWindow { .. }
            | Error::CostGuard { .. }
            | Error::EmptySweep => Failure::config(e),
            Error::EmptySeries
            | Error::TooFewShots { .. }
            | Error::MissingDarkStatistics
            | Error::EmptySelection { .. }
            | Error::LagTooLarge { .. } => Failure::data(e),
            Error::OverSubtraction { .. }
            | Error::ZeroMean
            | Error::NonPositiveNoiseReduction(_)
            | Error::Truncation { .. }
            | Error::Unattainable { .. } => Failure::numerical(e),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;
