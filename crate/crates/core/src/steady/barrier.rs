use rayon::prelude::*;

use super::shooting::{integrate, ExitReason, RadialTrajectory, Terminal};
use crate::energy::{minimize_energy, plateau_ramp_eta};
use crate::error::{Error, Result};
use crate::model::{BistableNonlinearity, DomainGeometry, DriftField, Grid, GridProfile};
use crate::operator::EllipticOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryValue {
    Zero,
    One,
}

impl BoundaryValue {
    pub fn value(self) -> f64 {
        match self {
            BoundaryValue::Zero => 0.0,
            BoundaryValue::One => 1.0,
        }
    }
}

/// A nontrivial steady state with constant Dirichlet data `0` or `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    pub profile: GridProfile,
    pub boundary_value: BoundaryValue,
    /// Sup-norm residual of the discrete steady equation.
    pub residual: f64,
    pub min: f64,
    pub max: f64,
    /// Centre value of the shooting trajectory, when found by shooting.
    pub alpha: Option<f64>,
    /// Residual after re-solving on a grid with twice the resolution.
    pub refined_residual: f64,
    /// Sup distance between the coarse and refined solutions at coarse nodes.
    pub refined_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    /// Nodes of the output grid.
    pub n: usize,
    /// Points in the initial scan over the centre value.
    pub scan: usize,
    /// Also minimize the energy when looking for a barrier to 0.
    pub cross_validate: bool,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self { n: 401, scan: 80, cross_validate: true }
    }
}

const NONTRIVIAL: f64 = 0.1;

fn logistic(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

fn radial_shape(geometry: DomainGeometry) -> (f64, usize) {
    (geometry.inradius(), geometry.dim())
}

struct Shooter<'a> {
    nl: &'a BistableNonlinearity,
    drift: &'a DriftField,
    dim: usize,
    r: f64,
    h: f64,
    to: BoundaryValue,
}

impl Shooter<'_> {
    fn alpha(&self, s: f64) -> f64 {
        let th = self.nl.theta();
        match self.to {
            BoundaryValue::One => th * logistic(s),
            BoundaryValue::Zero => th + (1.0 - th) * logistic(s),
        }
    }

    fn trajectory(&self, alpha: f64) -> Result<RadialTrajectory> {
        let (level, upward) = match self.to {
            BoundaryValue::One => (1.0, true),
            BoundaryValue::Zero => (0.0, false),
        };
        integrate(self.nl, self.drift, alpha, self.dim, 1.02 * self.r, self.h, Some(Terminal { level, upward }))
    }

    /// First radius where a monotone trajectory reaches the boundary value.
    fn reach(&self, s: f64) -> Result<Option<(f64, RadialTrajectory)>> {
        let t = self.trajectory(self.alpha(s))?;
        if t.events.exit != ExitReason::Terminal {
            return Ok(None);
        }
        let hit = match self.to {
            BoundaryValue::One => t.events.r_one,
            BoundaryValue::Zero => t.events.r_zero,
        };
        Ok(hit.filter(|r| t.is_monotone_until(*r, self.to == BoundaryValue::One, 1e-10)).map(|r| (r, t)))
    }

    fn inside(&self, s: f64) -> Result<bool> {
        Ok(matches!(self.reach(s)?, Some((r, _)) if r <= self.r))
    }

    /// Centre values whose trajectory reaches the boundary value exactly at `R`.
    fn solutions(&self, scan: usize) -> Result<Vec<(f64, RadialTrajectory)>> {
        let (s_lo, s_hi) = match self.to {
            BoundaryValue::One => (-23.0, 16.0),
            BoundaryValue::Zero => (-16.0, 23.0),
        };
        let grid: Vec<f64> = (0..scan).map(|k| s_lo + (s_hi - s_lo) * k as f64 / (scan - 1) as f64).collect();
        let flags: Vec<bool> = grid.par_iter().map(|&s| self.inside(s)).collect::<Result<_>>()?;
        let mut out = Vec::new();
        for k in 0..scan - 1 {
            if flags[k] == flags[k + 1] {
                continue;
            }
            let (mut a, mut b) = if flags[k] { (grid[k], grid[k + 1]) } else { (grid[k + 1], grid[k]) };
            for _ in 0..200 {
                if (a - b).abs() <= 1e-12 {
                    break;
                }
                let m = 0.5 * (a + b);
                if self.inside(m)? {
                    a = m;
                } else {
                    b = m;
                }
            }
            if let Some((r, t)) = self.reach(a)? {
                if (self.r - r).abs() <= 1e-6 * self.r {
                    out.push((self.alpha(a), t));
                }
            }
        }
        Ok(out)
    }
}

fn profile_from_trajectory(grid: Grid, t: &RadialTrajectory, bv: f64) -> GridProfile {
    let mut values: Vec<f64> = (0..grid.n)
        .map(|i| {
            let r = grid.radius_of(i);
            t.value_at(r).map_or(bv, |(p, _)| p).clamp(0.0, 1.0)
        })
        .collect();
    for i in grid.boundary_nodes() {
        values[i] = bv;
    }
    GridProfile { grid, values }
}

fn finish(
    nl: &BistableNonlinearity,
    op: &EllipticOperator,
    mut profile: GridProfile,
    bv: BoundaryValue,
    alpha: Option<f64>,
    drift: &DriftField,
) -> Result<Option<Barrier>> {
    let report = op.newton(nl, &mut profile, 1e-10, 60);
    if report.residual >= 1e-6 {
        return Ok(None);
    }
    let (min, max) = (profile.min(), profile.max());
    if min < -1e-9 || max > 1.0 + 1e-9 || profile.sup_distance_to(bv.value()) <= NONTRIVIAL {
        return Ok(None);
    }
    let grid = profile.grid;
    let fine_grid = Grid::new(grid.geometry, 2 * grid.n - 1)?;
    let mut fine = profile.resample(fine_grid);
    let fine_op = EllipticOperator::new(fine_grid, drift)?;
    let fine_report = fine_op.newton(nl, &mut fine, 1e-10, 60);
    let refined_gap = (0..grid.n).map(|i| (fine.values[2 * i] - profile.values[i]).abs()).fold(0.0, f64::max);
    Ok(Some(Barrier {
        residual: report.residual,
        min,
        max,
        alpha,
        refined_residual: fine_report.residual,
        refined_gap,
        boundary_value: bv,
        profile,
    }))
}

fn shooter<'a>(
    nl: &'a BistableNonlinearity,
    drift: &'a DriftField,
    geometry: DomainGeometry,
    to: BoundaryValue,
) -> Shooter<'a> {
    let (r, dim) = radial_shape(geometry);
    let mut h = 1e-3 * r;
    if !drift.is_homogeneous() {
        h = h.min(drift.sigma() / 10.0);
    }
    Shooter { nl, drift, dim, r, h, to }
}

/// Nontrivial steady state with boundary value 1, found by shooting from the centre.
pub fn find_barrier_one(
    nl: &BistableNonlinearity,
    drift: &DriftField,
    geometry: DomainGeometry,
    opts: BarrierOptions,
) -> Result<Option<Barrier>> {
    if !drift.is_even() {
        return Err(Error::InvalidInput("barrier shooting needs a radially symmetric drift".into()));
    }
    let grid = Grid::new(geometry, opts.n)?;
    let op = EllipticOperator::new(grid, drift)?;
    let sh = shooter(nl, drift, geometry, BoundaryValue::One);
    let mut sols = sh.solutions(opts.scan.max(8))?;
    sols.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (alpha, t) in sols {
        let guess = profile_from_trajectory(grid, &t, 1.0);
        if let Some(b) = finish(nl, &op, guess, BoundaryValue::One, Some(alpha), drift)? {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// Nontrivial steady state with boundary value 0, by shooting and by energy minimization;
/// the candidate with the smaller residual is returned.
pub fn find_barrier_zero(
    nl: &BistableNonlinearity,
    drift: &DriftField,
    geometry: DomainGeometry,
    opts: BarrierOptions,
) -> Result<Option<Barrier>> {
    let grid = Grid::new(geometry, opts.n)?;
    let op = EllipticOperator::new(grid, drift)?;
    let mut candidates = Vec::new();
    if drift.is_even() {
        let sh = shooter(nl, drift, geometry, BoundaryValue::Zero);
        let mut sols = sh.solutions(opts.scan.max(8))?;
        sols.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (alpha, t) in sols {
            let guess = profile_from_trajectory(grid, &t, 0.0);
            if let Some(b) = finish(nl, &op, guess, BoundaryValue::Zero, Some(alpha), drift)? {
                candidates.push(b);
                break;
            }
        }
    }
    if opts.cross_validate || candidates.is_empty() {
        let eta = plateau_ramp_eta(grid, 0.25 * geometry.inradius())?;
        if let Ok(m) = minimize_energy(nl, drift, &eta, 10_000) {
            if m.profile.max() > NONTRIVIAL {
                if let Some(b) = finish(nl, &op, m.profile, BoundaryValue::Zero, None, drift)? {
                    candidates.push(b);
                }
            }
        }
    }
    Ok(candidates.into_iter().min_by(|a, b| a.residual.total_cmp(&b.residual)))
}

/// Smallest probed radius from which a barrier to 1 exists at every larger probe;
/// `+inf` when the largest probe has none.
pub fn critical_radius_r_star(
    nl: &BistableNonlinearity,
    drift: &DriftField,
    dim: usize,
    probes: &[f64],
    n: usize,
) -> Result<f64> {
    if probes.windows(2).any(|w| w[1] <= w[0]) || probes.is_empty() {
        return Err(Error::InvalidInput("probe radii must be increasing".into()));
    }
    let opts = BarrierOptions { n, scan: 60, cross_validate: false };
    let found: Vec<bool> = probes
        .par_iter()
        .map(|&r| {
            let geometry = if dim == 1 { DomainGeometry::interval(r)? } else { DomainGeometry::ball(r, dim)? };
            Ok(find_barrier_one(nl, drift, geometry, opts)?.is_some())
        })
        .collect::<Result<_>>()?;
    let mut best = f64::INFINITY;
    for (k, r) in probes.iter().enumerate().rev() {
        if !found[k] {
            break;
        }
        best = *r;
    }
    Ok(best)
}
