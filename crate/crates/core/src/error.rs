use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid-scalar: {0}")]
    InvalidScalar(String),
    #[error("invalid-input: {0}")]
    InvalidInput(String),
    #[error("assumption-inapplicable: {0}")]
    AssumptionInapplicable(String),
    #[error("stiff-failure: step size collapsed to {step:.3e} at r = {r:.6}")]
    StiffFailure { r: f64, step: f64 },
    #[error("contraction-failure: fixed-point iteration did not contract on [0, {r1:.4}]")]
    ContractionFailure { r1: f64 },
    #[error("continuation-failure at s = {s:.6}")]
    ContinuationFailure { s: f64 },
    #[error("eigen-stall: no convergence after {iterations} iterations")]
    EigenStall { iterations: usize },
    #[error("invalid-weight: weight {value:e} at node {node}")]
    InvalidWeight { node: usize, value: f64 },
    #[error("bc-violation: boundary value {value:e} at node {node}")]
    BcViolation { node: usize, value: f64 },
    #[error("bad-delta: {0}")]
    BadDelta(String),
    #[error("degenerate-phi: phi(0) = 0")]
    DegeneratePhi,
    #[error("solver-failure: {0}")]
    SolverFailure(String),
    #[error("dt-too-large: dt * |f'| = {product:.4} >= 1")]
    DtTooLarge { product: f64 },
    #[error("horizon-too-short: neither converged nor stalled by t = {t_max}")]
    HorizonTooShort { t_max: f64 },
    #[error("invalid-N: {0}")]
    InvalidN(String),
    #[error("gf-stiff: quasilinear step unstable at t = {t:.4}")]
    GfStiff { t: f64 },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidScalar(format!("{name} = {x}")))
    }
}
