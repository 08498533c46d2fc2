use alloc::string::String;
use core::fmt;

/// Errors raised by the network, mesh, assembly and solver layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The network violates a structural or geometric invariant.
    InvalidNetwork(String),
    /// A vertex id that is not part of the network.
    UnknownVertex(u64),
    /// An edge id that is not part of the network.
    UnknownEdge(u64),
    /// A parameter outside its admissible range.
    InvalidParameter(String),
    /// Block or vector dimensions do not agree.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A coefficient evaluated to NaN, infinity or a negative value.
    InvalidCoefficient { edge: usize, s: f64, value: f64 },
    /// The system matrix is (numerically) rank deficient.
    Singular {
        /// Elimination step at which no acceptable pivot was left.
        step: usize,
        /// Number of unknowns.
        dim: usize,
        /// Largest remaining candidate pivot after scaling.
        pivot: f64,
    },
    /// Residual check failed after iterative refinement.
    Inaccurate { relative_residual: f64 },
    /// A time-dependent run failed at the given time.
    StepFailed { time: f64, source: alloc::boxed::Box<Error> },
    /// Not enough samples to cover the requested interval.
    InsufficientSamples(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidNetwork(msg) => write!(f, "invalid network: {msg}"),
            Error::UnknownVertex(id) => write!(f, "unknown vertex id {id}"),
            Error::UnknownEdge(id) => write!(f, "unknown edge id {id}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "dimension mismatch in {what}: expected {expected}, found {found}"),
            Error::InvalidCoefficient { edge, s, value } => {
                write!(f, "invalid coefficient {value} on edge index {edge} at s = {s}")
            }
            Error::Singular { step, dim, pivot } => write!(
                f,
                "singular system: rank deficiency detected at elimination step {step} of {dim} \
                 (largest scaled pivot {pivot:e}); is there a pressure boundary condition?"
            ),
            Error::Inaccurate { relative_residual } => write!(
                f,
                "direct solve inaccurate: relative residual {relative_residual:e} after refinement"
            ),
            Error::StepFailed { time, source } => write!(f, "solve failed at t = {time} s: {source}"),
            Error::InsufficientSamples(msg) => write!(f, "insufficient samples: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
