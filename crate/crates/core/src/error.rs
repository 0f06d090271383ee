use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed loop: {0}")]
    MalformedLoop(String),
    #[error("invalid loop: {0}")]
    InvalidLoop(String),
    #[error("gcd({0}, {1}) != 1")]
    NotCoprime(i64, i64),
    #[error("dedekind sum s({q},{p}) did not snap to a multiple of 1/(6p) (distance {distance:e})")]
    DedekindSnap { q: i64, p: i64, distance: f64 },
    #[error("framing constant {0} has a denominator not dividing P = {1}")]
    FramingLattice(String, i64),
    #[error("K must be ≥ 2")]
    LevelTooSmall,
    #[error("color N must be ≥ 1")]
    ColorTooSmall,
    #[error("pole at {0}")]
    Pole(String),
    #[error("lattice mismatch: {0} vs {1}")]
    LatticeMismatch(i64, i64),
    #[error("exponent {0} does not lie on the lattice (1/{1})Z")]
    OffLattice(String, i64),
    #[error("|q| >= 1: the real part of log q must be negative")]
    OutsideDisk,
    #[error("truncated series has no tail certificate")]
    MissingTailCertificate,
    #[error("cutoff underflow: needed {needed}, family supplied {supplied}")]
    CutoffUnderflow { needed: i64, supplied: i64 },
    #[error("quadrature did not reach tolerance {tol:e} within {budget} nodes")]
    QuadratureBudget { tol: f64, budget: usize },
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("denominator vanishes to expansion order {0}")]
    DenominatorVanishes(usize),
    #[error("pole order {order} exceeds the requested maximum {max}")]
    PoleOrderTooLarge { order: usize, max: usize },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
