//! Energies of the steady problem, test profiles, the energy-sign threshold
//! in the drift intensity, and Laplace-method ratios.

use crate::error::{finite, Error, Result};
use crate::model::{BistableNonlinearity, DriftField, Extension, Grid, GridProfile, LogDensity};
use crate::operator::EllipticOperator;

/// `½ v² + F(p)`.
pub fn phase_energy(nl: &BistableNonlinearity, p: f64, v: f64) -> f64 {
    0.5 * v * v + nl.antiderivative(p)
}

/// `value = gradient_part - potential_part`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EnergyReport {
    pub value: f64,
    pub gradient_part: f64,
    pub potential_part: f64,
    pub profile_id: String,
}

fn profile_id(p: &GridProfile) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for v in &p.values {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    format!("n{}-{h:016x}", p.n())
}

/// Node and face weights of `op`, divided by their common maximum.
fn scaled_weights(op: &EllipticOperator) -> (Vec<f64>, Vec<f64>) {
    let grid = op.grid();
    let (phi, face) = op.log_weights();
    let top = phi.iter().chain(face).copied().fold(f64::NEG_INFINITY, f64::max);
    let h = grid.h();
    let mass = (0..grid.n).map(|i| (phi[i] - top).exp() * grid.cell_volume(i)).collect();
    let cond = (0..grid.n - 1).map(|i| (face[i] - top).exp() * grid.face_area(i) / h).collect();
    (mass, cond)
}

fn energy_parts(nl: &BistableNonlinearity, mass: &[f64], cond: &[f64], p: &[f64]) -> (f64, f64) {
    let grad: f64 = 0.5 * cond.iter().enumerate().map(|(i, c)| c * (p[i + 1] - p[i]).powi(2)).sum::<f64>();
    let pot: f64 = mass.iter().zip(p).map(|(m, v)| m * nl.antiderivative_ext(*v, Extension::Zero)).sum();
    (grad, pot)
}

fn check_boundary(p: &GridProfile) -> Result<()> {
    for i in p.grid.boundary_nodes() {
        if p.values[i].abs() > 1e-12 {
            return Err(Error::BcViolation { node: i, value: p.values[i] });
        }
    }
    Ok(())
}

/// `½ ∫ w |∇p|² - ∫ w F(p)` with `w = N^(2/σ)` scaled so that `max w = 1` on the grid,
/// discretized consistently with the steady operator. `F` is continued by a constant outside `[0, 1]`.
pub fn energy_sigma(nl: &BistableNonlinearity, drift: &DriftField, p: &GridProfile) -> Result<EnergyReport> {
    check_boundary(p)?;
    let op = EllipticOperator::new(p.grid, drift)?;
    let (mass, cond) = scaled_weights(&op);
    let (g, v) = energy_parts(nl, &mass, &cond, &p.values);
    Ok(EnergyReport { value: g - v, gradient_part: g, potential_part: v, profile_id: profile_id(p) })
}

/// `1` on `[0, δ]`, `0` beyond `2δ`, smoothstep in between (in the distance to the centre).
pub fn plateau_ramp_eta(grid: Grid, delta: f64) -> Result<GridProfile> {
    finite("delta", delta)?;
    let r = grid.geometry.inradius();
    if !(delta > 0.0 && delta < 0.5 * r) {
        return Err(Error::BadDelta(format!("need 0 < delta < R/2 = {}, got {delta}", 0.5 * r)));
    }
    let mut p = GridProfile::from_fn(grid, |x| {
        let t = (x.abs() - delta) / delta;
        if t <= 0.0 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            1.0 - t * t * (3.0 - 2.0 * t)
        }
    });
    for i in grid.boundary_nodes() {
        p.values[i] = 0.0;
    }
    Ok(p)
}

/// `min(1, (ρ² - |x|²) / (ρ² - (ρ - δ)²))` with `ρ` the inradius.
pub fn ramp_v_delta(grid: Grid, delta: f64) -> Result<GridProfile> {
    finite("delta", delta)?;
    let rho = grid.geometry.inradius();
    if !(delta > 0.0 && delta < rho) {
        return Err(Error::BadDelta(format!("need 0 < delta < rho = {rho}, got {delta}")));
    }
    let den = rho * rho - (rho - delta) * (rho - delta);
    let mut p = GridProfile::from_fn(grid, |x| ((rho * rho - x * x) / den).clamp(0.0, 1.0));
    for i in grid.boundary_nodes() {
        p.values[i] = 0.0;
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ThresholdStatus {
    /// Sign change located.
    Found,
    /// Energy already negative at the largest probed intensity parameter.
    NegativeEverywhere,
    /// Energy positive at the smallest probed intensity parameter.
    NoSignChange,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SigmaThreshold {
    /// `σ*`; `0` when negative everywhere, `NaN` when no sign change.
    pub sigma_star: f64,
    pub status: ThresholdStatus,
}

const SIGMA_MIN: f64 = 1e-6;
const SIGMA_MAX: f64 = 1e6;

/// Largest `σ` below which the energy of the plateau profile `η` (plateau radius `delta`) is negative.
pub fn negative_energy_sigma_threshold(
    nl: &BistableNonlinearity,
    density: &LogDensity,
    grid: Grid,
    delta: f64,
) -> Result<SigmaThreshold> {
    let eta = plateau_ramp_eta(grid, delta)?;
    let energy = |sigma: f64| -> Result<f64> {
        let d = DriftField::new(density.clone(), sigma)?;
        Ok(energy_sigma(nl, &d, &eta)?.value)
    };
    if energy(SIGMA_MAX)? < 0.0 {
        return Ok(SigmaThreshold { sigma_star: 0.0, status: ThresholdStatus::NegativeEverywhere });
    }
    if energy(SIGMA_MIN)? >= 0.0 {
        return Ok(SigmaThreshold { sigma_star: f64::NAN, status: ThresholdStatus::NoSignChange });
    }
    let probes = 49;
    let (lo, hi) = (SIGMA_MIN.ln(), SIGMA_MAX.ln());
    let at = |k: usize| lo + (hi - lo) * k as f64 / (probes - 1) as f64;
    let mut bracket = (lo, hi);
    for k in (0..probes - 1).rev() {
        if energy(at(k).exp())? < 0.0 {
            bracket = (at(k), at(k + 1));
            break;
        }
    }
    let (mut a, mut b) = bracket;
    while b - a > 1e-6 {
        let m = 0.5 * (a + b);
        if energy(m.exp())? < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(SigmaThreshold { sigma_star: (0.5 * (a + b)).exp(), status: ThresholdStatus::Found })
}

/// Output of [`minimize_energy`].
#[derive(Debug, Clone, PartialEq)]
pub struct Minimizer {
    pub profile: GridProfile,
    pub energy: EnergyReport,
    /// Steady-state residual after the final Newton polish.
    pub residual: f64,
    pub iterations: usize,
    /// Energy after every projected-gradient iteration.
    pub history: Vec<f64>,
}

impl Minimizer {
    pub fn is_monotone(&self) -> bool {
        self.history.windows(2).all(|w| w[1] <= w[0] + 1e-14 * w[0].abs().max(1e-300))
    }
}

/// Projected gradient descent of the energy over profiles with values in `[0, 1]`
/// and zero Dirichlet data, followed by a Newton polish of the steady equation.
pub fn minimize_energy(
    nl: &BistableNonlinearity,
    drift: &DriftField,
    init: &GridProfile,
    max_iter: usize,
) -> Result<Minimizer> {
    check_boundary(init)?;
    let grid = init.grid;
    let op = EllipticOperator::new(grid, drift)?;
    let (mass, cond) = scaled_weights(&op);
    let (a, b) = grid.free_range();
    let stiff = (a..=b).map(|i| {
        let (lo, up) = op.coefficients(i);
        lo + up
    });
    let tau = 1.0 / (2.0 * stiff.fold(0.0, f64::max) + nl.lipschitz_and_sup_fprime().lipschitz);
    let mut p: Vec<f64> = init.values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let value = |p: &[f64]| {
        let (g, v) = energy_parts(nl, &mass, &cond, p);
        g - v
    };
    let mut history = vec![value(&p)];
    let mut iterations = 0;
    let mut next = p.clone();
    for _ in 0..max_iter {
        iterations += 1;
        let mut moved: f64 = 0.0;
        for i in a..=b {
            let g = op.apply_at(&p, i) - nl.f_ext(p[i], Extension::Zero);
            next[i] = (p[i] - tau * g).clamp(0.0, 1.0);
            moved = moved.max((next[i] - p[i]).abs());
        }
        std::mem::swap(&mut p, &mut next);
        history.push(value(&p));
        if moved < 1e-13 {
            break;
        }
    }
    let mut profile = GridProfile::new(grid, p)?;
    let mut polished = profile.clone();
    let rep = op.newton(nl, &mut polished, 1e-10, 50);
    let gd_residual = op.residual(nl, &profile.values);
    let residual = if rep.residual < gd_residual && polished.is_proportion(1e-9) {
        profile = polished;
        rep.residual
    } else {
        gd_residual
    };
    let energy = energy_sigma(nl, drift, &profile)?;
    Ok(Minimizer { profile, energy, residual, iterations, history })
}

fn gamma_half_integer(x: f64) -> f64 {
    // x is a positive multiple of 1/2.
    let mut g = if (x.fract() - 0.5).abs() < 1e-12 { std::f64::consts::PI.sqrt() } else { 1.0 };
    let mut y = if (x.fract() - 0.5).abs() < 1e-12 { 0.5 } else { 1.0 };
    while y < x - 1e-12 {
        g *= y;
        y += 1.0;
    }
    g
}

/// Limit constant `½ Γ(d/2) c0^(-d/2)`.
pub fn laplace_limit(c0: f64, d: usize) -> f64 {
    0.5 * gamma_half_integer(0.5 * d as f64) * c0.powf(-0.5 * d as f64)
}

/// Ratios `∫_0^1 t^(d-1) φ(t) exp(-c0 t²/ε) dt / (φ(0) ε^(d/2))` for each `ε`.
pub fn laplace_ratio_check<P: Fn(f64) -> f64>(c0: f64, d: usize, phi: P, eps: &[f64]) -> Result<Vec<f64>> {
    finite("c0", c0)?;
    if !(c0 > 0.0) || d == 0 {
        return Err(Error::InvalidInput("need c0 > 0 and d >= 1".into()));
    }
    if eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("eps must be positive and decreasing".into()));
    }
    let phi0 = phi(0.0);
    if phi0 == 0.0 {
        return Err(Error::DegeneratePhi);
    }
    let r1 = 1.0;
    let cutoff = (40.0 / c0).sqrt();
    Ok(eps
        .iter()
        .map(|&e| {
            let se = e.sqrt();
            let upper = (r1 / se).min(cutoff);
            let integral = crate::numerics::simpson(
                |s| s.powi(d as i32 - 1) * phi(se * s) * (-c0 * s * s).exp(),
                0.0,
                upper,
                20_000,
            );
            integral / phi0
        })
        .collect())
}
