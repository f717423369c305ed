use crate::error::{finite, Error, Result};
use crate::model::{BistableNonlinearity, DomainGeometry, DriftField, Grid, GridProfile};

/// Radial solution of `-(r^(d-1) w p')' = r^(d-1) w f(p)`, `p(0) = s θ`, `p'(0) = 0`,
/// where `w = N^(2/σ)` (pass `σ = 1` for the weight `N^2`).
///
/// A fixed-point iteration of the integral form runs on a short initial
/// segment, after which the ODE is marched with classical RK4. The result is
/// sampled on the ball grid of `[0, R]` with spacing close to `h`.
pub fn solve_radial_weighted(
    nl: &BistableNonlinearity,
    drift: &DriftField,
    s: f64,
    dim: usize,
    radius: f64,
    h: f64,
) -> Result<GridProfile> {
    finite("s", s)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidInput(format!("s must lie in [0, 1], got {s}")));
    }
    if !(h > 0.0 && radius > h) {
        return Err(Error::InvalidInput("need 0 < h < R".into()));
    }
    let grid = Grid::new(DomainGeometry::ball(radius, dim)?, (radius / h).round() as usize + 1)?;
    let sub = 8usize;
    let m = (grid.n - 1) * sub;
    let dr = radius / m as f64;
    let d = dim as f64;
    let alpha = s * nl.theta();
    let lip = nl.lipschitz_and_sup_fprime().lipschitz.max(1e-12);

    // Fixed-point segment.
    let r1 = radius.min(0.5 * (d / lip).sqrt());
    let m1 = ((r1 / dr).ceil() as usize).clamp(1, m);
    let rs: Vec<f64> = (0..=m1).map(|k| k as f64 * dr).collect();
    let phi0 = drift.log_weight(0.0);
    let w: Vec<f64> = rs.iter().map(|r| (drift.log_weight(*r) - phi0).exp()).collect();
    let mut p = vec![alpha; m1 + 1];
    let mut v = vec![0.0; m1 + 1];
    let mut last_change = f64::INFINITY;
    let mut converged = false;
    for _ in 0..500 {
        let mut inner = 0.0;
        let mut new_v = vec![0.0; m1 + 1];
        for k in 1..=m1 {
            let a = nl.f(p[k - 1]) * w[k - 1] * rs[k - 1].powi(dim as i32 - 1);
            let b = nl.f(p[k]) * w[k] * rs[k].powi(dim as i32 - 1);
            inner += 0.5 * dr * (a + b);
            new_v[k] = -inner / (w[k] * rs[k].powi(dim as i32 - 1));
        }
        let mut new_p = vec![alpha; m1 + 1];
        for k in 1..=m1 {
            new_p[k] = new_p[k - 1] + 0.5 * dr * (new_v[k - 1] + new_v[k]);
        }
        let change = new_p.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = new_p;
        v = new_v;
        if change <= 1e-15 {
            converged = true;
            break;
        }
        if change > 0.9 * last_change && change > 1e-13 {
            return Err(Error::ContractionFailure { r1 });
        }
        last_change = change;
    }
    if !converged {
        return Err(Error::ContractionFailure { r1 });
    }

    // RK4 march.
    let accel = |r: f64, p: f64, v: f64| -nl.f(p) - (drift.coefficient(r) + (d - 1.0) / r) * v;
    let mut fine_p = p;
    fine_p.reserve(m - m1);
    let (mut pc, mut vc) = (fine_p[m1], v[m1]);
    for k in m1..m {
        let r = k as f64 * dr;
        let k1 = (vc, accel(r, pc, vc));
        let k2 = (vc + 0.5 * dr * k1.1, accel(r + 0.5 * dr, pc + 0.5 * dr * k1.0, vc + 0.5 * dr * k1.1));
        let k3 = (vc + 0.5 * dr * k2.1, accel(r + 0.5 * dr, pc + 0.5 * dr * k2.0, vc + 0.5 * dr * k2.1));
        let k4 = (vc + dr * k3.1, accel(r + dr, pc + dr * k3.0, vc + dr * k3.1));
        pc += dr / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        vc += dr / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !pc.is_finite() || !vc.is_finite() {
            return Err(Error::SolverFailure(format!("radial march diverged at r = {r}")));
        }
        fine_p.push(pc);
    }
    let values = (0..grid.n).map(|i| fine_p[i * sub]).collect();
    GridProfile::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_members() {
        let nl = BistableNonlinearity::cubic(0.33).unwrap();
        let d = DriftField::homogeneous();
        let z = solve_radial_weighted(&nl, &d, 0.0, 2, 3.0, 0.01).unwrap();
        assert!(z.values.iter().all(|v| *v == 0.0));
        let t = solve_radial_weighted(&nl, &d, 1.0, 2, 3.0, 0.01).unwrap();
        assert!(t.values.iter().all(|v| *v == 0.33));
    }
}
