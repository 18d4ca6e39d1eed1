use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bessel K_{nu}({z}) is outside the domain nu > 0, z > 0")]
    Domain { nu: f64, z: f64 },

    #[error("bessel K_{nu}({z}) overflows f64")]
    Overflow { nu: f64, z: f64 },

    #[error("cholesky pivot {index} is not positive ({value:e})")]
    Factorization { index: usize, value: f64 },

    #[error("posterior variance {0:e} is below the round-off window")]
    NegativeVariance(f64),

    #[error("acquisition value at candidate {0} is not finite")]
    NonFiniteAcquisition(usize),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("{path}:{line}: key `{key}`: {message}")]
    Config {
        path: String,
        line: usize,
        key: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical kernel (factorization, variance, acquisition).
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::AtStep { source, .. } => source.is_numeric(),
            Error::Domain { .. }
            | Error::Overflow { .. }
            | Error::Factorization { .. }
            | Error::NegativeVariance(_)
            | Error::NonFiniteAcquisition(_) => true,
            _ => false,
        }
    }
}
