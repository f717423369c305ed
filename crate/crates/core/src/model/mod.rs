//! Shared domain types: the reaction term, the drift, the domain and grids.

mod assumptions;
mod drift;
mod geometry;
mod nonlinearity;

pub use assumptions::{validate_assumption, Assumption, AssumptionVerdict};
pub use drift::{DriftField, InfectionDensity, LogDensity, PiecewiseLinearLog};
pub use geometry::{DomainGeometry, Grid, GridProfile};
pub use nonlinearity::{BistableNonlinearity, Extension, FprimeBounds, Reaction};
