//! Time stepping of the controlled parabolic equation with Dirichlet
//! controls constrained to `[0, 1]`.

use crate::error::{finite, Error, Result};
use crate::model::{DriftField, Grid, GridProfile, Reaction};
use crate::numerics::solve_tridiagonal;
use crate::operator::EllipticOperator;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CflReport {
    pub dt: f64,
    /// `dt * sup |f'|`; must stay below 1.
    pub reaction_number: f64,
    /// `max |b_eff| h / 2`.
    pub max_peclet: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    pub t: f64,
    pub profile: GridProfile,
    pub cfl: CflReport,
}

/// Dirichlet values applied at one instant. `left` is ignored on balls.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundaryControl {
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlSchedule {
    Static(f64),
    /// `(t_i, u_i)`: the value `u_i` applies from `t_i` until the next entry.
    Piecewise(Vec<(f64, f64)>),
    /// `u = clamp(target_bc + gain (target - state)` at the node next to the boundary`)`.
    Feedback { target: GridProfile, gain: f64 },
}

impl ControlSchedule {
    /// Boundary values at time `t`, always clamped to `[0, 1]`.
    pub fn emit(&self, t: f64, state: &GridProfile) -> BoundaryControl {
        let clamp = |u: f64| if u.is_nan() { 0.0 } else { u.clamp(0.0, 1.0) };
        match self {
            ControlSchedule::Static(u) => BoundaryControl { left: clamp(*u), right: clamp(*u) },
            ControlSchedule::Piecewise(list) => {
                let u = list.iter().take_while(|(ti, _)| *ti <= t).last().or(list.first()).map_or(0.0, |e| e.1);
                BoundaryControl { left: clamp(u), right: clamp(u) }
            }
            ControlSchedule::Feedback { target, gain } => {
                let n = target.n();
                let tv = &target.values;
                let sv = &state.values;
                BoundaryControl {
                    left: clamp(tv[0] + gain * (tv[1] - sv[1])),
                    right: clamp(tv[n - 1] + gain * (tv[n - 2] - sv[n - 2])),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DistanceSample {
    pub t: f64,
    pub to_zero: f64,
    pub to_theta: f64,
    pub to_one: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ControlSample {
    pub t: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub snapshots: Vec<PdeState>,
    pub distances: Vec<DistanceSample>,
    /// One entry per time step.
    pub controls: Vec<ControlSample>,
}

impl SimulationTrace {
    pub fn last(&self) -> &PdeState {
        self.snapshots.last().expect("trace holds the initial state")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Converged { time: f64 },
    Blocked { residual: GridProfile, residual_sup: f64 },
}

/// Semi-implicit solver: diffusion and drift implicit, reaction explicit.
#[derive(Debug, Clone)]
pub struct ParabolicSolver<R: Reaction> {
    grid: Grid,
    op: EllipticOperator,
    reaction: R,
    lipschitz: f64,
    max_peclet: f64,
}

impl<R: Reaction> ParabolicSolver<R> {
    pub fn new(grid: Grid, drift: &DriftField, reaction: R) -> Result<Self> {
        let op = EllipticOperator::new(grid, drift)?;
        let h = grid.h();
        let max_peclet = grid.nodes().iter().map(|x| drift.coefficient(*x).abs() * h / 2.0).fold(0.0, f64::max);
        let lipschitz = reaction.lipschitz();
        Ok(Self { grid, op, reaction, lipschitz, max_peclet })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn reaction(&self) -> &R {
        &self.reaction
    }

    pub fn operator(&self) -> &EllipticOperator {
        &self.op
    }

    /// `0.4 min(h²/2, 1/sup|f'|)`.
    pub fn default_dt(&self) -> f64 {
        let h = self.grid.h();
        0.4 * (0.5 * h * h).min(1.0 / self.lipschitz.max(1e-300))
    }

    fn cfl(&self, dt: f64) -> CflReport {
        CflReport { dt, reaction_number: dt * self.lipschitz, max_peclet: self.max_peclet }
    }

    pub fn initial_state(&self, profile: GridProfile) -> Result<PdeState> {
        if profile.grid != self.grid {
            return Err(Error::InvalidInput("initial datum lives on a different grid".into()));
        }
        Ok(PdeState { t: 0.0, profile, cfl: self.cfl(self.default_dt()) })
    }

    fn check_dt(&self, dt: f64) -> Result<()> {
        finite("dt", dt)?;
        if dt <= 0.0 {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        let product = dt * self.lipschitz;
        if product >= 1.0 {
            return Err(Error::DtTooLarge { product });
        }
        Ok(())
    }

    /// One step `(I + dt A) p¹ = p⁰ + dt f(p⁰)` with boundary nodes pinned to the controls.
    pub fn step(&self, state: &PdeState, u_left: f64, u_right: f64, dt: f64) -> Result<PdeState> {
        self.check_dt(dt)?;
        for u in [u_left, u_right] {
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::InvalidInput(format!("control {u} outside [0, 1]")));
            }
        }
        let p = &state.profile.values;
        let n = self.grid.n;
        let (a, b) = self.grid.free_range();
        let (lower, diag, upper) = self.op.shifted_rows(1.0, dt);
        let mut rhs: Vec<f64> = (a..=b).map(|i| p[i] + dt * self.reaction.rate(p[i])).collect();
        let ball = self.grid.geometry.is_ball();
        if !ball {
            rhs[0] += dt * self.op.coefficients(a).0 * u_left;
        }
        let last = rhs.len() - 1;
        rhs[last] += dt * self.op.coefficients(b).1 * u_right;
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        let mut values = vec![0.0; n];
        values[a..=b].copy_from_slice(&x);
        if !ball {
            values[0] = u_left;
        }
        values[n - 1] = u_right;
        Ok(PdeState {
            t: state.t + dt,
            profile: GridProfile { grid: self.grid, values },
            cfl: self.cfl(dt),
        })
    }

    fn distances(&self, s: &PdeState) -> DistanceSample {
        let p = &s.profile;
        DistanceSample {
            t: s.t,
            to_zero: p.sup_distance_to(0.0),
            to_theta: p.sup_distance_to(self.reaction.theta()),
            to_one: p.sup_distance_to(1.0),
        }
    }

    /// Repeated steps up to `t_end`, with a snapshot every `snapshot_every` time units.
    pub fn simulate(
        &self,
        p0: GridProfile,
        schedule: &ControlSchedule,
        t_end: f64,
        dt: f64,
        snapshot_every: f64,
    ) -> Result<SimulationTrace> {
        self.check_dt(dt)?;
        finite("T", t_end)?;
        let mut state = self.initial_state(p0)?;
        state.cfl = self.cfl(dt);
        let mut trace = SimulationTrace { snapshots: vec![state.clone()], distances: vec![self.distances(&state)], controls: Vec::new() };
        let steps = (t_end / dt).ceil() as usize;
        let every = snapshot_every.max(dt);
        let mut next_snap = every;
        for k in 0..steps {
            let h = if k + 1 == steps { t_end - state.t } else { dt };
            if h <= 0.0 {
                break;
            }
            let u = schedule.emit(state.t, &state.profile);
            trace.controls.push(ControlSample { t: state.t, left: u.left, right: u.right });
            state = self.step(&state, u.left, u.right, h)?;
            if state.t >= next_snap - 1e-12 || k + 1 == steps {
                trace.distances.push(self.distances(&state));
                trace.snapshots.push(state.clone());
                while next_snap <= state.t + 1e-12 {
                    next_snap += every;
                }
            }
        }
        Ok(trace)
    }

    /// Static control `u ≡ a` until `sup|p - a| < tol`, or until `t_max` where a stall
    /// (sup-change over the last tenth below `tol/10`) means blocked.
    pub fn asymptotic_verdict(&self, p0: GridProfile, a: f64, t_max: f64, tol: f64, dt: f64) -> Result<Verdict> {
        self.check_dt(dt)?;
        if !(tol > 0.0) {
            return Err(Error::InvalidInput("tol must be positive".into()));
        }
        let mut state = self.initial_state(p0)?;
        if state.profile.sup_distance_to(a) < tol {
            return Ok(Verdict::Converged { time: 0.0 });
        }
        let steps = (t_max / dt).ceil() as usize;
        let mark = ((0.9 * t_max) / dt).floor() as usize;
        let mut at_mark = None;
        for k in 0..steps {
            let u = a.clamp(0.0, 1.0);
            state = self.step(&state, u, u, dt)?;
            if state.profile.sup_distance_to(a) < tol {
                return Ok(Verdict::Converged { time: state.t });
            }
            if k + 1 == mark {
                at_mark = Some(state.profile.clone());
            }
        }
        let dist = state.profile.sup_distance_to(a);
        let change = at_mark.map_or(f64::INFINITY, |m| m.sup_distance(&state.profile));
        if change < tol / 10.0 {
            Ok(Verdict::Blocked { residual: state.profile, residual_sup: dist })
        } else {
            Err(Error::HorizonTooShort { t_max })
        }
    }
}
