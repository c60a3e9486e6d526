use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by a quaternion of modulus {0:e}")]
    ZeroDivisor(f64),

    #[error("not an imaginary unit: real part {real:e}, modulus {modulus}")]
    NotImaginaryUnit { real: f64, modulus: f64 },

    #[error("imaginary units are not orthogonal (dot product {0:e})")]
    NonOrthogonal(f64),

    #[error("series vanishes at the origin (|a_0|^2 = {0:e}); no *-inverse")]
    SingularAtOrigin(f64),

    #[error("conjugation undefined: the conjugating value vanishes (modulus {0:e})")]
    SingularConjugation(f64),

    #[error("Blaschke center {modulus} is not strictly inside the unit ball")]
    CenterOnBoundary { modulus: f64 },

    #[error("the series is identically zero")]
    IdenticallyZero,

    #[error("zero {index} coincides with a zero of the preceding partial product (residual {residual:e})")]
    CoincidentZeros { index: usize, residual: f64 },

    #[error("isolated zero {index} lies on a sphere that also carries a spherical zero")]
    MixedSphere { index: usize },

    #[error("eigenvalue iteration did not converge for a polynomial of degree {0}")]
    RootFinding(usize),

    #[error("{count} zero candidate(s) could not be classified (worst residual {worst:e})")]
    Unclassifiable { count: usize, worst: f64 },

    #[error("series does not preserve the slice of the given unit (residual {0:e})")]
    NotSlicePreserving(f64),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
