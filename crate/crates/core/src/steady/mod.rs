//! Radial steady states: the shooting integrator, barrier searches and
//! discrete paths of steady states.

mod barrier;
mod path;
mod shooting;
mod weighted;

pub use barrier::{critical_radius_r_star, find_barrier_one, find_barrier_zero, Barrier, BarrierOptions, BoundaryValue};
pub use path::{build_steady_path, SteadyPath};
pub use shooting::{shoot_radial, ExitReason, RadialTrajectory, TrajectoryEvents, TrajectorySample};
pub use weighted::solve_radial_weighted;
