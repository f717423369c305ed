use super::shooting::{shoot_radial, ExitReason};
use crate::error::{Error, Result};
use crate::model::{BistableNonlinearity, DriftField, Grid, GridProfile};
use crate::operator::EllipticOperator;

/// Chain of steady states `p_s`, `s` from 0 to 1, joining `0` to `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyPath {
    pub profiles: Vec<GridProfile>,
    pub s_values: Vec<f64>,
    pub delta: f64,
    /// All members lie in `[0, 1]` and the path reached `s = 1`.
    pub admissible: bool,
    /// Parameter at which a member ceased to be a proportion, if any.
    pub first_inadmissible: Option<f64>,
    pub max_residual: f64,
}

impl SteadyPath {
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn max_gap(&self) -> f64 {
        self.profiles.windows(2).map(|w| w[0].sup_distance(&w[1])).fold(0.0, f64::max)
    }
}

const MAX_MEMBERS: usize = 4097;
const PATH_TOL: f64 = 1e-10;

struct Member {
    profile: GridProfile,
    residual: f64,
}

fn radial_member(nl: &BistableNonlinearity, drift: &DriftField, grid: Grid, s: f64) -> Result<Option<Member>> {
    let th = nl.theta();
    if s <= 0.0 {
        return Ok(Some(Member { profile: GridProfile::constant(grid, 0.0), residual: 0.0 }));
    }
    if s >= 1.0 {
        return Ok(Some(Member { profile: GridProfile::constant(grid, th), residual: 0.0 }));
    }
    let r = grid.geometry.inradius();
    let mut h = 1e-3 * r;
    if !drift.is_homogeneous() {
        h = h.min(drift.sigma() / 10.0);
    }
    let t = shoot_radial(nl, drift, s * th, grid.geometry.dim(), r, h)?;
    if t.events.exit != ExitReason::ReachedRmax {
        return Ok(None);
    }
    let values = (0..grid.n).map(|i| t.value_at(grid.radius_of(i)).map_or(0.0, |(p, _)| p)).collect();
    Ok(Some(Member { profile: GridProfile { grid, values }, residual: f64::NAN }))
}

fn polish(nl: &BistableNonlinearity, op: &EllipticOperator, mut m: Member, s: f64) -> Result<Member> {
    let rep = op.newton(nl, &mut m.profile, PATH_TOL, 60);
    if rep.residual >= 1e-6 {
        return Err(Error::ContinuationFailure { s });
    }
    m.residual = rep.residual;
    Ok(m)
}

/// Switches the drift on gradually from the homogeneous member, keeping the
/// Dirichlet data of the homogeneous member.
fn continue_member(nl: &BistableNonlinearity, drift: &DriftField, start: GridProfile) -> Option<Member> {
    let grid = start.grid;
    let mut p = start;
    let mut lambda: f64 = 0.0;
    let mut step: f64 = 0.1;
    while lambda < 1.0 {
        let next = (lambda + step).min(1.0);
        let op = EllipticOperator::new(grid, &drift.scaled(next)).ok()?;
        let mut trial = p.clone();
        let rep = op.newton(nl, &mut trial, PATH_TOL, 40);
        if rep.converged {
            p = trial;
            lambda = next;
            step = (step * 1.5).min(0.25);
        } else {
            step *= 0.5;
            if step < 1e-4 {
                return None;
            }
        }
    }
    let op = EllipticOperator::new(grid, drift).ok()?;
    let residual = op.residual(nl, &p.values);
    Some(Member { profile: p, residual })
}

fn member(nl: &BistableNonlinearity, drift: &DriftField, grid: Grid, op: &EllipticOperator, s: f64) -> Result<Option<Member>> {
    if drift.is_even() {
        return match radial_member(nl, drift, grid, s)? {
            Some(m) if s > 0.0 && s < 1.0 => Ok(Some(polish(nl, op, m, s)?)),
            other => Ok(other),
        };
    }
    let flat = DriftField::homogeneous();
    let flat_op = EllipticOperator::unweighted(grid);
    let base = match radial_member(nl, &flat, grid, s)? {
        Some(m) if s > 0.0 && s < 1.0 => polish(nl, &flat_op, m, s)?,
        Some(m) => m,
        None => return Ok(None),
    };
    if let Some(m) = continue_member(nl, drift, base.profile) {
        return Ok(Some(m));
    }
    // Retry on a slightly inflated domain and restrict back.
    let big = Grid::new(grid.geometry.inflated(1.05), grid.n + grid.n / 20)?;
    let big_base = match radial_member(nl, &flat, big, s)? {
        Some(m) if s > 0.0 && s < 1.0 => polish(nl, &EllipticOperator::unweighted(big), m, s)?,
        Some(m) => m,
        None => return Ok(None),
    };
    let cont = continue_member(nl, drift, big_base.profile).ok_or(Error::ContinuationFailure { s })?;
    let restricted = Member { profile: cont.profile.resample(grid), residual: f64::NAN };
    polish(nl, op, restricted, s).map(Some)
}

/// Builds steady states `p_s` (`p_s(0) = s θ` for symmetric drifts) on an
/// adaptively refined `s`-grid until consecutive members are within `delta`.
pub fn build_steady_path(
    nl: &BistableNonlinearity,
    drift: &DriftField,
    grid: Grid,
    k: usize,
    delta: f64,
) -> Result<SteadyPath> {
    if k < 2 {
        return Err(Error::InvalidInput("path needs K >= 2".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    let op = EllipticOperator::new(grid, drift)?;
    let mut s_values: Vec<f64> = (0..k).map(|j| j as f64 / (k - 1) as f64).collect();
    let mut members: Vec<Option<Member>> = Vec::with_capacity(k);
    for &s in &s_values {
        members.push(member(nl, drift, grid, &op, s)?);
    }
    let mut first_bad = s_values.iter().zip(&members).find(|(_, m)| m.is_none()).map(|(s, _)| *s);
    loop {
        let end = members.iter().position(|m| m.is_none()).unwrap_or(members.len());
        let mut insert = None;
        for j in 0..end.saturating_sub(1) {
            let (a, b) = (members[j].as_ref().unwrap(), members[j + 1].as_ref().unwrap());
            if a.profile.sup_distance(&b.profile) > delta {
                insert = Some(j);
                break;
            }
        }
        // Also refine towards the first inadmissible parameter.
        if insert.is_none() && end < members.len() && end > 0 && s_values[end] - s_values[end - 1] > 1e-6 {
            insert = Some(end - 1);
        }
        let Some(j) = insert else { break };
        if members.len() >= MAX_MEMBERS {
            return Err(Error::SolverFailure(format!("steady path needs more than {MAX_MEMBERS} members")));
        }
        let s = 0.5 * (s_values[j] + s_values[j + 1]);
        let m = member(nl, drift, grid, &op, s)?;
        if m.is_none() {
            first_bad = Some(first_bad.map_or(s, |b: f64| b.min(s)));
        }
        s_values.insert(j + 1, s);
        members.insert(j + 1, m);
    }
    let end = members.iter().position(|m| m.is_none()).unwrap_or(members.len());
    s_values.truncate(end);
    let kept: Vec<Member> = members.into_iter().take(end).map(|m| m.unwrap()).collect();
    let max_residual = kept.iter().map(|m| m.residual).fold(0.0, f64::max);
    let profiles: Vec<GridProfile> = kept.into_iter().map(|m| m.profile).collect();
    let out_of_range = s_values.iter().zip(&profiles).find(|(_, p)| !p.is_proportion(1e-9)).map(|(s, _)| *s);
    let first_inadmissible = match (first_bad, out_of_range) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    Ok(SteadyPath {
        admissible: first_inadmissible.is_none(),
        first_inadmissible,
        profiles,
        s_values,
        delta,
        max_residual,
    })
}
