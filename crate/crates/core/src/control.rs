//! Control synthesis: static strategies, the staircase along a path of
//! steady states, controllability verdicts and minimal-time scans.

use rayon::prelude::*;

use crate::dynamics::{ControlSample, ControlSchedule, ParabolicSolver, PdeState, Verdict};
use crate::error::{Error, Result};
use crate::model::{BistableNonlinearity, DriftField, Grid, GridProfile, LogDensity, PiecewiseLinearLog};
use crate::steady::{build_steady_path, find_barrier_one, find_barrier_zero, Barrier, BarrierOptions, SteadyPath};

/// Reaction, drift and discretization of one controlled equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProblem {
    pub nl: BistableNonlinearity,
    pub drift: DriftField,
    pub grid: Grid,
    /// Time step; `None` selects the solver default.
    pub dt: Option<f64>,
}

impl ControlProblem {
    pub fn solver(&self) -> Result<ParabolicSolver<BistableNonlinearity>> {
        ParabolicSolver::new(self.grid, &self.drift, self.nl.clone())
    }

    fn dt(&self, solver: &ParabolicSolver<BistableNonlinearity>) -> f64 {
        self.dt.unwrap_or_else(|| solver.default_dt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaircaseConfig {
    /// Sup-norm gap between consecutive steady states of the path.
    pub delta1: f64,
    /// Per-leg time budget.
    pub t1: f64,
    /// Global deadline.
    pub t_max: f64,
    pub gain: f64,
    /// Sup-error at which a leg is declared reached.
    pub leg_tol: f64,
    /// Initial number of path members before refinement.
    pub path_k: usize,
}

impl Default for StaircaseConfig {
    fn default() -> Self {
        Self { delta1: 0.05, t1: 20.0, t_max: 1000.0, gain: 5.0, leg_tol: 0.05, path_k: 9 }
    }
}

/// Log of one leg of the staircase.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LegRecord {
    pub index: usize,
    pub target_s: f64,
    pub source_error: f64,
    pub terminal_error: f64,
    pub duration: f64,
    pub control_min: f64,
    pub control_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaircasePlan {
    pub path: Option<SteadyPath>,
    pub t1: f64,
    pub feedback_gain: f64,
    pub legs: Vec<LegRecord>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum StaircaseOutcome {
    Success { total_time: f64, terminal_error: f64 },
    Failure { stage: String, reason: String },
}

impl StaircaseOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, StaircaseOutcome::Success { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseReport {
    pub outcome: StaircaseOutcome,
    pub plan: StaircasePlan,
    /// Every control value applied, one per time step.
    pub controls: Vec<ControlSample>,
    pub final_state: GridProfile,
}

fn failure(stage: &str, reason: impl Into<String>) -> StaircaseOutcome {
    StaircaseOutcome::Failure { stage: stage.into(), reason: reason.into() }
}

/// Drives `p0` to `θ`: static `u = 0` until `sup|p| ≤ δ1/2`, then clamped boundary
/// feedback along each member of a steady path from `0` to `θ`.
pub fn staircase_to_theta(problem: &ControlProblem, p0: &GridProfile, cfg: &StaircaseConfig) -> Result<StaircaseReport> {
    if !(cfg.delta1 > 0.0) {
        return Err(Error::InvalidInput("delta1 must be positive".into()));
    }
    let theta = problem.nl.theta();
    let mut plan = StaircasePlan { path: None, t1: cfg.t1, feedback_gain: cfg.gain, legs: Vec::new() };
    if p0.sup_distance_to(theta) <= cfg.delta1 {
        return Ok(StaircaseReport {
            outcome: StaircaseOutcome::Success { total_time: 0.0, terminal_error: p0.sup_distance_to(theta) },
            plan,
            controls: Vec::new(),
            final_state: p0.clone(),
        });
    }
    let path = match build_steady_path(&problem.nl, &problem.drift, problem.grid, cfg.path_k, cfg.delta1) {
        Ok(p) => p,
        Err(e) => {
            return Ok(StaircaseReport {
                outcome: failure("path", e.to_string()),
                plan,
                controls: Vec::new(),
                final_state: p0.clone(),
            })
        }
    };
    run_staircase(problem, p0, cfg, path, &mut plan)
}

fn run_staircase(
    problem: &ControlProblem,
    p0: &GridProfile,
    cfg: &StaircaseConfig,
    path: SteadyPath,
    plan: &mut StaircasePlan,
) -> Result<StaircaseReport> {
    let solver = problem.solver()?;
    let dt = problem.dt(&solver);
    let theta = problem.nl.theta();
    let mut controls = Vec::new();
    let mut state = solver.initial_state(p0.clone())?;
    let admissible = path.admissible;
    let first_bad = path.first_inadmissible;
    plan.path = Some(path);
    let done = |outcome, state: PdeState, controls, plan: &mut StaircasePlan| {
        Ok(StaircaseReport { outcome, plan: plan.clone(), controls, final_state: state.profile })
    };
    if !admissible {
        let reason = format!("inadmissible-path at s = {:.6}", first_bad.unwrap_or(f64::NAN));
        return done(failure("path", reason), state, controls, plan);
    }

    // Step 1: static zero control.
    let mut window_start = (state.t, state.profile.max());
    while state.profile.sup_distance_to(0.0) > 0.5 * cfg.delta1 {
        if state.t + dt > cfg.t_max {
            return done(failure("step1", "deadline"), state, controls, plan);
        }
        controls.push(ControlSample { t: state.t, left: 0.0, right: 0.0 });
        state = solver.step(&state, 0.0, 0.0, dt)?;
        if state.t - window_start.0 >= 10.0 {
            let sup = state.profile.sup_distance_to(0.0);
            if window_start.1 - sup < 1e-9 {
                return done(failure("step1", "barrier-to-0"), state, controls, plan);
            }
            window_start = (state.t, sup);
        }
    }

    // Steps 2-3: legs along the path.
    let path = plan.path.clone().expect("path stored above");
    for (index, target) in path.profiles.iter().enumerate() {
        let source_error = state.profile.sup_distance(target);
        let start = state.t;
        let sched = ControlSchedule::Feedback { target: target.clone(), gain: cfg.gain };
        let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut err = source_error;
        while err > cfg.leg_tol {
            if state.t - start >= cfg.t1 - 1e-12 {
                plan.legs.push(LegRecord { index, target_s: path.s_values[index], source_error, terminal_error: err, duration: state.t - start, control_min: umin, control_max: umax });
                return done(failure(&format!("leg {index}"), "leg-stall"), state, controls, plan);
            }
            if state.t + dt > cfg.t_max + 1e-12 {
                plan.legs.push(LegRecord { index, target_s: path.s_values[index], source_error, terminal_error: err, duration: state.t - start, control_min: umin, control_max: umax });
                return done(failure(&format!("leg {index}"), "deadline"), state, controls, plan);
            }
            let u = sched.emit(state.t, &state.profile);
            umin = umin.min(u.left.min(u.right));
            umax = umax.max(u.left.max(u.right));
            controls.push(ControlSample { t: state.t, left: u.left, right: u.right });
            state = solver.step(&state, u.left, u.right, dt)?;
            err = state.profile.sup_distance(target);
        }
        plan.legs.push(LegRecord {
            index,
            target_s: path.s_values[index],
            source_error,
            terminal_error: err,
            duration: state.t - start,
            control_min: umin,
            control_max: umax,
        });
    }
    let terminal_error = state.profile.sup_distance_to(theta);
    let total_time = state.t;
    done(StaircaseOutcome::Success { total_time, terminal_error }, state, controls, plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Target {
    Zero,
    Theta,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum VerdictStatus {
    Converged,
    Blocked,
    Indeterminate,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetVerdict {
    pub target: Target,
    /// Constant initial datum.
    pub initial: f64,
    pub status: VerdictStatus,
    pub time: Option<f64>,
    pub residual_sup: Option<f64>,
    pub detail: String,
    /// Steady state obstructing the convergence, when one was found.
    pub witness: Option<Barrier>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllabilityReport {
    pub verdicts: Vec<TargetVerdict>,
}

impl ControllabilityReport {
    pub fn all_converged(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == VerdictStatus::Converged)
    }

    pub fn get(&self, target: Target, initial: f64) -> Option<&TargetVerdict> {
        self.verdicts.iter().find(|v| v.target == target && v.initial == initial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportConfig {
    pub t_max: f64,
    pub tol: f64,
    pub staircase: StaircaseConfig,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { t_max: 200.0, tol: 1e-3, staircase: StaircaseConfig::default() }
    }
}

/// Verdicts for the targets `0`, `θ`, `1` from each constant initial datum.
pub fn controllability_report(problem: &ControlProblem, initial: &[f64], cfg: &ReportConfig) -> Result<ControllabilityReport> {
    let solver = problem.solver()?;
    let dt = problem.dt(&solver);
    let theta = problem.nl.theta();
    let jobs: Vec<(Target, f64)> =
        initial.iter().flat_map(|&c| [(Target::Zero, c), (Target::Theta, c), (Target::One, c)]).collect();
    let verdicts = jobs
        .par_iter()
        .map(|&(target, c)| -> Result<TargetVerdict> {
            let p0 = GridProfile::constant(problem.grid, c);
            let mut v = TargetVerdict { target, initial: c, status: VerdictStatus::Indeterminate, time: None, residual_sup: None, detail: String::new(), witness: None };
            match target {
                Target::Zero | Target::One => {
                    let a = if target == Target::Zero { 0.0 } else { 1.0 };
                    match solver.asymptotic_verdict(p0, a, cfg.t_max, cfg.tol, dt) {
                        Ok(Verdict::Converged { time }) => {
                            v.status = VerdictStatus::Converged;
                            v.time = Some(time);
                        }
                        Ok(Verdict::Blocked { residual_sup, .. }) => {
                            v.status = VerdictStatus::Blocked;
                            v.residual_sup = Some(residual_sup);
                            let opts = BarrierOptions { n: problem.grid.n, ..BarrierOptions::default() };
                            v.witness = if target == Target::Zero {
                                find_barrier_zero(&problem.nl, &problem.drift, problem.grid.geometry, opts).ok().flatten()
                            } else if problem.drift.is_even() {
                                find_barrier_one(&problem.nl, &problem.drift, problem.grid.geometry, opts).ok().flatten()
                            } else {
                                None
                            };
                        }
                        Err(Error::HorizonTooShort { .. }) => v.detail = "horizon-too-short".into(),
                        Err(e) => return Err(e),
                    }
                }
                Target::Theta => {
                    let rep = staircase_to_theta(problem, &p0, &cfg.staircase)?;
                    match rep.outcome {
                        StaircaseOutcome::Success { total_time, terminal_error } => {
                            v.status = VerdictStatus::Converged;
                            v.time = Some(total_time);
                            v.residual_sup = Some(terminal_error);
                        }
                        StaircaseOutcome::Failure { stage, reason } => {
                            v.status = if reason == "barrier-to-0" { VerdictStatus::Blocked } else { VerdictStatus::Failed };
                            v.detail = format!("{stage}: {reason}");
                            v.residual_sup = Some(rep.final_state.sup_distance_to(theta));
                            if reason == "barrier-to-0" {
                                let opts = BarrierOptions { n: problem.grid.n, ..BarrierOptions::default() };
                                v.witness = find_barrier_zero(&problem.nl, &problem.drift, problem.grid.geometry, opts).ok().flatten();
                            }
                        }
                    }
                }
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ControllabilityReport { verdicts })
}

/// Drift families of the minimal-time scan, parametrized by the intensity `σ`.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftFamily {
    Homogeneous,
    GaussOut,
    GaussIn,
    Sinusoidal,
    /// Piecewise-constant `N'/N = m_k` on cells of width `h` starting at `x0`.
    PiecewiseConstant { x0: f64, h: f64, m: Vec<f64> },
}

impl DriftFamily {
    pub fn drift(&self, sigma: f64) -> Result<DriftField> {
        match self {
            DriftFamily::Homogeneous => Ok(DriftField::homogeneous()),
            DriftFamily::GaussOut => DriftField::gauss_out(sigma),
            DriftFamily::GaussIn => DriftField::gauss_in(sigma),
            DriftFamily::Sinusoidal => DriftField::sinusoidal(sigma),
            DriftFamily::PiecewiseConstant { x0, h, m } => {
                DriftField::new(LogDensity::Table(PiecewiseLinearLog::from_gradient(*x0, *h, m)?), sigma)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DriftFamily::Homogeneous => "homogeneous",
            DriftFamily::GaussOut => "gauss_out",
            DriftFamily::GaussIn => "gauss_in",
            DriftFamily::Sinusoidal => "sinusoidal",
            DriftFamily::PiecewiseConstant { .. } => "piecewise_constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MinTimeResult {
    pub parameter: f64,
    /// Smallest feasible horizon on the grid, `+inf` if none.
    pub t_min: f64,
    pub strategy: String,
    /// Probed `(horizon, feasible)` pairs.
    pub probes: Vec<(f64, bool)>,
    /// Number of probed pairs contradicting monotone feasibility.
    pub monotonicity_violations: usize,
}

/// Smallest horizon on `horizons` for which the staircase from `p0 ≡ 0` reaches `θ`.
pub fn minimal_time_to_theta(problem: &ControlProblem, horizons: &[f64], cfg: &StaircaseConfig) -> Result<MinTimeResult> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("horizon grid must be increasing and non-empty".into()));
    }
    let strategy = format!("staircase(delta1={}, gain={}, leg_tol={})", cfg.delta1, cfg.gain, cfg.leg_tol);
    let p0 = GridProfile::constant(problem.grid, 0.0);
    let path = build_steady_path(&problem.nl, &problem.drift, problem.grid, cfg.path_k, cfg.delta1);
    let feasible = |t: f64| -> Result<bool> {
        let Ok(path) = path.clone() else { return Ok(false) };
        let local = StaircaseConfig { t_max: t, ..*cfg };
        let mut plan = StaircasePlan { path: None, t1: cfg.t1, feedback_gain: cfg.gain, legs: Vec::new() };
        Ok(run_staircase(problem, &p0, &local, path, &mut plan)?.outcome.is_success())
    };
    let mut probes = Vec::new();
    let last = horizons.len() - 1;
    let top = feasible(horizons[last])?;
    probes.push((horizons[last], top));
    let mut t_min = f64::INFINITY;
    if top {
        let (mut lo, mut hi) = (None::<usize>, last);
        // Invariant: horizons[hi] feasible, horizons[lo] infeasible.
        let first = feasible(horizons[0])?;
        probes.push((horizons[0], first));
        if first {
            hi = 0;
        } else {
            lo = Some(0);
        }
        while let Some(l) = lo {
            if hi - l <= 1 {
                break;
            }
            let mid = (l + hi) / 2;
            let ok = feasible(horizons[mid])?;
            probes.push((horizons[mid], ok));
            if ok {
                hi = mid;
            } else {
                lo = Some(mid);
            }
        }
        t_min = horizons[hi];
    }
    let monotonicity_violations = probes
        .iter()
        .filter(|(t, ok)| *ok && probes.iter().any(|(t2, ok2)| *t2 > *t && !ok2))
        .count();
    Ok(MinTimeResult { parameter: f64::NAN, t_min, strategy, probes, monotonicity_violations })
}

/// One minimal-time search per parameter, run concurrently.
pub fn mintime_scan(
    family: &DriftFamily,
    params: &[f64],
    base: &ControlProblem,
    horizons: &[f64],
    cfg: &StaircaseConfig,
) -> Result<Vec<MinTimeResult>> {
    params
        .par_iter()
        .map(|&sigma| {
            let problem = ControlProblem { drift: family.drift(sigma)?, ..base.clone() };
            let mut r = minimal_time_to_theta(&problem, horizons, cfg)?;
            r.parameter = sigma;
            Ok(r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DomainGeometry;

    #[test]
    fn already_at_theta() {
        let g = Grid::new(DomainGeometry::interval(1.0).unwrap(), 41).unwrap();
        let pb = ControlProblem { nl: BistableNonlinearity::cubic(0.33).unwrap(), drift: DriftField::homogeneous(), grid: g, dt: None };
        let rep = staircase_to_theta(&pb, &GridProfile::constant(g, 0.33), &StaircaseConfig::default()).unwrap();
        assert_eq!(rep.outcome, StaircaseOutcome::Success { total_time: 0.0, terminal_error: 0.0 });
        assert!(rep.plan.legs.is_empty());
    }
}
