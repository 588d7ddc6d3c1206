use crate::C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dispersion symbol: {0}")]
    InvalidSymbol(String),
    #[error("malformed boundary conditions: {0}")]
    MalformedBoundaryConditions(String),
    #[error("mode {n} is resonant (|det| = {det_abs:e})")]
    Resonance { n: i64, det_abs: f64 },
    #[error("boundary-trace system for mode {n} is singular")]
    ProfileSingular { n: i64 },
    #[error("initial datum has mean {0:e}, expected zero")]
    MeanNotZero(f64),
    #[error("only {found} eigenvalues located, {needed} requested")]
    EigenBasisUnavailable { found: usize, needed: usize },
    #[error("contour cannot keep clearance {eps} from zero at {zero}")]
    PoleClearanceFailure { eps: f64, zero: C64 },
    #[error("zero of the determinant on the contour after repeated dithering")]
    BoundaryZero,
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("ill-posed problem: {0}")]
    IllPosed(String),
    #[error("solution blew up at t = {t}")]
    BlowupDetected { t: f64 },
    #[error("non-finite values at t = {t}")]
    InstabilityDetected { t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
