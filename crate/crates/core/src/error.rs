use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its documented domain.
    InvalidParameter { name: &'static str, reason: String },
    /// Two objects that must agree in shape do not.
    ShapeMismatch { expected: String, found: String },
    /// Sampled density value above the declared bound.
    DensityBoundViolated { point: alloc::vec::Vec<f64>, value: f64, bound: f64 },
    /// A point lies outside the control box.
    OutsideBox { point: alloc::vec::Vec<f64> },
    /// Adaptive quadrature ran out of subdivisions.
    QuadratureFailed { residual: f64 },
    /// Product quadrature would need more nodes than the budget allows.
    QuadratureBudget { nodes: f64, budget: f64 },
    /// Two configuration points coincide.
    DuplicatePoint { index_a: usize, index_b: usize },
    /// The kernel is not symmetric under permutation of its arguments.
    NotSymmetric { deviation: f64 },
    /// The requested case is not covered.
    Unsupported(String),
    /// A required chaos decomposition or projection is missing.
    MissingDecomposition(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid parameter `{name}`: {reason}"),
            Error::ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {expected}, found {found}")
            }
            Error::DensityBoundViolated { point, value, bound } => {
                write!(f, "density value {value} at {point:?} exceeds the declared bound {bound}")
            }
            Error::OutsideBox { point } => write!(f, "point {point:?} lies outside the control box"),
            Error::QuadratureFailed { residual } => {
                write!(f, "adaptive quadrature did not converge (residual estimate {residual:e})")
            }
            Error::QuadratureBudget { nodes, budget } => {
                write!(f, "product quadrature needs {nodes:e} nodes (budget {budget:e}); use Monte Carlo integration")
            }
            Error::DuplicatePoint { index_a, index_b } => {
                write!(f, "configuration points {index_a} and {index_b} coincide")
            }
            Error::NotSymmetric { deviation } => {
                write!(f, "kernel is not symmetric (max deviation {deviation:e}); symmetrize first")
            }
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::MissingDecomposition(msg) => write!(f, "missing chaos decomposition: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
