//! Numerical tools for constrained boundary control of bistable
//! reaction-diffusion equations with a gene-flow drift.
//!
//! The equation is `p_t - Δp - (2/σ)⟨∇ln N, ∇p⟩ = f(p)` on an interval or a
//! ball, with Dirichlet controls constrained to `[0, 1]`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod io;
pub mod model;
pub mod numerics;
pub mod operator;
pub mod spectral;
pub mod steady;
pub mod transform;

pub use error::{Error, Result};
pub use model::{
    validate_assumption, Assumption, AssumptionVerdict, BistableNonlinearity, DomainGeometry, DriftField, Extension,
    FprimeBounds, Grid, GridProfile, InfectionDensity, LogDensity, PiecewiseLinearLog, Reaction,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
