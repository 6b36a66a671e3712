use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical engine.
///
/// Verdicts such as drift or a divergent extension are reported through
/// [`crate::renorm::Verdict`]; only a handful of them are also errors here,
/// for callers that ask for a value and cannot get one.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("window of length {len} is too short: {needed} values required")]
    InsufficientWindow { len: usize, needed: usize },

    #[error("sequence window must hold finite values (index {index} is {value})")]
    NonFiniteValue { index: usize, value: Complex64 },

    #[error("Bernoulli number B_{0} is outside the table (k <= 30)")]
    OutOfTable(usize),

    #[error("Hurwitz zeta has a pole at s = 1")]
    PoleAtOne,

    #[error("Euler-Maclaurin evaluation did not converge at s = {s}, t = {t} (|Im s| = {im})", im = s.im.abs())]
    NoConvergence { s: Complex64, t: f64 },

    #[error("family `{family}` is evaluable only for Re(s) < {limit}; got Re(s) = {re_s}")]
    OutsideConvergence { family: String, re_s: f64, limit: f64 },

    #[error("family `{family}`: |c_{index}| = {magnitude} exceeds its declared growth bound {bound}")]
    CoefficientOverflow {
        family: String,
        index: u64,
        magnitude: f64,
        bound: f64,
    },

    #[error("polytope dimension {0} is not supported (d <= 4)")]
    DimensionTooLarge(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid Dirichlet character: {0}")]
    InvalidCharacter(String),

    #[error("Dirichlet value requested at its pole (s = 0 in the Bernoulli slot)")]
    PoleAtSigma,

    #[error("s = 0 is excluded: the class sums degenerate there")]
    SIsZero,

    #[error("series did not converge: {0}")]
    Diverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;
