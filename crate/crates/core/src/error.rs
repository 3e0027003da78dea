use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid potential spec: {0}")]
    InvalidSpec(String),

    #[error("evaluation at {x} lies within {radius} of a pole")]
    Domain { x: Complex64, radius: f64 },

    #[error("pole refinement did not converge near x = {0}")]
    PoleRefinement(f64),

    #[error("no contour elevation keeps margin {margin} from the poles")]
    NoValidContour { margin: f64 },

    #[error("step size underflow at xi = {xi}")]
    StepSizeUnderflow { xi: f64 },

    #[error("step budget exhausted at xi = {xi}")]
    TooManySteps { xi: f64 },

    #[error("spectral parameter k = 0 is excluded")]
    ZeroSpectralParameter,

    #[error("{which} requested at k = {k}, outside its analyticity half-plane")]
    WrongHalfPlane { which: &'static str, k: Complex64 },

    #[error("Wronskian drifted from 1 by {deviation:e}")]
    DegenerateWronskian { deviation: f64 },

    #[error("grid lacks the partner of k = {0}")]
    MissingPartner(Complex64),

    #[error("scattering record at k = {0} lacks a coefficient")]
    IncompleteData(Complex64),

    #[error("potential q vanishes at x = {0}")]
    DivisionByZeroPotential(Complex64),

    #[error("formal series order {0} exceeds the supported maximum of 4")]
    UnsupportedOrder(usize),

    #[error("function nearly vanishes on the boundary (min modulus {min_modulus:e})")]
    BoundaryZero { min_modulus: f64 },

    #[error("winding integral {raw} is not close to an integer")]
    NonIntegerWinding { raw: f64 },

    #[error("iteration did not converge from {0}")]
    NoConvergence(Complex64),

    #[error("zero cluster near {0} could not be resolved")]
    ClusterUnresolved(Complex64),

    #[error("eigen at {location} needs {needed} derivatives, got {got}")]
    InsufficientDerivatives {
        location: Complex64,
        needed: usize,
        got: usize,
    },

    #[error("linear system is singular at x = {x} (condition {cond:e})")]
    SingularSystem { x: Complex64, cond: f64 },

    #[error("k = {0} coincides with a discrete eigenvalue")]
    PoleCollision(Complex64),

    #[error("potential is not reflectionless (|b| = {worst_value:e} at k = {worst_k})")]
    NotReflectionless { worst_k: f64, worst_value: f64 },
}

impl Error {
    /// Stable identifier used in CLI reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::Domain { .. } => "DomainError",
            Error::PoleRefinement(_) => "PoleRefinement",
            Error::NoValidContour { .. } => "NoValidContour",
            Error::StepSizeUnderflow { .. } => "StepSizeUnderflow",
            Error::TooManySteps { .. } => "TooManySteps",
            Error::ZeroSpectralParameter => "ZeroSpectralParameter",
            Error::WrongHalfPlane { .. } => "WrongHalfPlane",
            Error::DegenerateWronskian { .. } => "DegenerateWronskian",
            Error::MissingPartner(_) => "MissingPartner",
            Error::IncompleteData(_) => "IncompleteData",
            Error::DivisionByZeroPotential(_) => "DivisionByZeroPotential",
            Error::UnsupportedOrder(_) => "UnsupportedOrder",
            Error::BoundaryZero { .. } => "BoundaryZero",
            Error::NonIntegerWinding { .. } => "NonIntegerWinding",
            Error::NoConvergence(_) => "NoConvergence",
            Error::ClusterUnresolved(_) => "ClusterUnresolved",
            Error::InsufficientDerivatives { .. } => "InsufficientDerivatives",
            Error::SingularSystem { .. } => "SingularSystem",
            Error::PoleCollision(_) => "PoleCollision",
            Error::NotReflectionless { .. } => "NotReflectionless",
        }
    }

    /// Caller broke an operation's precondition rather than the numerics failing.
    pub fn is_contract_violation(&self) -> bool {
        matches!(
            self,
            Error::ZeroSpectralParameter
                | Error::WrongHalfPlane { .. }
                | Error::UnsupportedOrder(_)
                | Error::PoleCollision(_)
        )
    }
}
