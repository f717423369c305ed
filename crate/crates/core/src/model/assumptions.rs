use super::drift::{DriftField, LogDensity};
use crate::error::{Error, Result};

/// Structural hypotheses on a radial density `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Assumption {
    /// `N'/N <= -C r`.
    T1 { c: f64 },
    /// `exp(-c0 r^2 / 2) <= N(r) / N(0) <= exp(-c1 r^2 / 2)`.
    T2 { c0: f64, c1: f64 },
    /// `N' >= -(d - 1) N / (2 r)`.
    A1 { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionVerdict {
    pub holds: bool,
    /// Smallest slack of the inequality over the check grid.
    pub margin: f64,
}

/// Checks an assumption on the density of `drift` at `n` nodes of `(0, r_max]`.
pub fn validate_assumption(drift: &DriftField, which: Assumption, r_max: f64, n: usize) -> Result<AssumptionVerdict> {
    if matches!(drift.density(), LogDensity::Flat) {
        return Err(Error::AssumptionInapplicable("homogeneous drift has no density profile".into()));
    }
    if !(r_max > 0.0) || n == 0 {
        return Err(Error::InvalidInput("check grid must be non-empty on (0, R]".into()));
    }
    if let Assumption::T2 { c0, c1 } = which {
        if !(c0 >= c1 && c1 > 0.0) {
            return Err(Error::InvalidInput("T2 needs c0 >= c1 > 0".into()));
        }
    }
    let ln0 = drift.log_n(0.0);
    let mut margin = f64::INFINITY;
    for k in 1..=n {
        let r = r_max * k as f64 / n as f64;
        let b = drift.log_gradient(r);
        let slack = match which {
            Assumption::T1 { c } => -c * r - b,
            Assumption::T2 { c0, c1 } => {
                let l = drift.log_n(r) - ln0;
                (l + 0.5 * c0 * r * r).min(-0.5 * c1 * r * r - l)
            }
            Assumption::A1 { dim } => b + (dim as f64 - 1.0) / (2.0 * r),
        };
        margin = margin.min(slack);
    }
    Ok(AssumptionVerdict { holds: margin >= -1e-12, margin })
}
