use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid function spec: {0}")]
    InvalidSpec(String),

    #[error("configuration has {got} bits but the instance has arity {expected}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("bit index {index} out of range for arity {arity}")]
    IndexOutOfRange { index: usize, arity: usize },

    #[error("arity {arity} exceeds the enumeration limit of {limit}")]
    ArityTooLarge { arity: usize, limit: usize },

    #[error("truth table length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("depth {depth} exceeds the enumeration limit of {limit}")]
    DepthTooLarge { depth: u32, limit: u32 },

    #[error("{digits} digits cannot resolve the recursion (estimated log error {error_bound:e})")]
    PrecisionExhausted { digits: u32, error_bound: f64 },

    #[error("no integer child count keeps level {level} within a factor 4 of the target")]
    UnreachableTarget { level: usize },

    #[error("instance has {edges} edges, above the cap of {cap}")]
    InstanceTooLarge { edges: u64, cap: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }

    /// Whether the error stems from a resource cap rather than bad input.
    pub fn is_resource_cap(&self) -> bool {
        matches!(
            self,
            Error::ArityTooLarge { .. }
                | Error::DepthTooLarge { .. }
                | Error::InstanceTooLarge { .. }
                | Error::PrecisionExhausted { .. }
        )
    }
}
