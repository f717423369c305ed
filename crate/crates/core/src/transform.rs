//! Change of variables for an infection-dependent density `N(p)`:
//! `q = 𝒩(p) = ∫_0^p N² / ∫_0^1 N²` turns the quasilinear equation
//! `p_t = Δp + 2 (N'/N)(p) |∇p|² + f(p)` into `q_t = Δq + f̃(q)`.

use crate::error::{Error, Result};
use crate::model::{BistableNonlinearity, Grid, GridProfile, InfectionDensity, Reaction};
use crate::numerics::solve_tridiagonal;

const PANELS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneFlowMap {
    density: InfectionDensity,
    /// `∫_0^1 N²` before normalization.
    norm: f64,
    /// `𝒩` at `k / PANELS`.
    table: Vec<f64>,
}

fn simpson_cell<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b))
}

/// Normalizes `N` so that `∫_0^1 N² = 1` and tabulates `𝒩`.
pub fn build_map(density: &InfectionDensity) -> Result<GeneFlowMap> {
    for k in 0..=PANELS {
        let p = k as f64 / PANELS as f64;
        let v = density.value(p);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidN(format!("N({p}) = {v}")));
        }
    }
    let sq = |p: f64| density.value(p).powi(2);
    let mut cum = vec![0.0; PANELS + 1];
    for k in 0..PANELS {
        let a = k as f64 / PANELS as f64;
        let b = (k + 1) as f64 / PANELS as f64;
        cum[k + 1] = cum[k] + simpson_cell(&sq, a, b);
    }
    let norm = cum[PANELS];
    let table = cum.iter().map(|c| c / norm).collect();
    Ok(GeneFlowMap { density: density.clone(), norm, table })
}

impl GeneFlowMap {
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// `∫_0^1 N²` of the raw density.
    pub fn raw_norm(&self) -> f64 {
        self.norm
    }

    /// Normalized `N(p)`.
    pub fn density(&self, p: f64) -> f64 {
        self.density.value(p) / self.norm.sqrt()
    }

    /// Normalized `N'(p) / N(p)`.
    pub fn log_slope(&self, p: f64) -> f64 {
        self.density.slope(p) / self.density.value(p)
    }

    /// `𝒩(p)` for `p ∈ [0, 1]` (clamped outside).
    pub fn forward(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let s = p * PANELS as f64;
        let k = (s.floor() as usize).min(PANELS - 1);
        let a = k as f64 / PANELS as f64;
        let sq = |x: f64| self.density.value(x).powi(2);
        self.table[k] + simpson_cell(&sq, a, p) / self.norm
    }

    /// `𝒩⁻¹(q)` for `q ∈ [0, 1]` (clamped outside).
    pub fn inverse(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let k = self.table.partition_point(|c| *c <= q).clamp(1, PANELS) - 1;
        let (mut lo, mut hi) = (k as f64 / PANELS as f64, (k + 1) as f64 / PANELS as f64);
        let mut x = lo + (hi - lo) * ((q - self.table[k]) / (self.table[k + 1] - self.table[k])).clamp(0.0, 1.0);
        for _ in 0..60 {
            let g = self.forward(x) - q;
            if g.abs() <= 1e-16 {
                break;
            }
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.density(x).powi(2);
            let newton = x - g / slope;
            x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-17 {
                break;
            }
        }
        x
    }
}

/// Value of `f̃` and whether the argument had to be clamped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeValue {
    pub value: f64,
    pub clamped: bool,
}

/// `f̃(q) = f(𝒩⁻¹ q) N²(𝒩⁻¹ q)` with the normalized `N`.
pub fn tilde_f(map: &GeneFlowMap, nl: &BistableNonlinearity, q: f64) -> TildeValue {
    let clamped = !(0.0..=1.0).contains(&q);
    let p = map.inverse(q);
    TildeValue { value: nl.f(p) * map.density(p).powi(2), clamped }
}

/// `f̃` packaged as a reaction term.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedReaction {
    map: GeneFlowMap,
    nl: BistableNonlinearity,
    lipschitz: f64,
}

impl TransformedReaction {
    pub fn new(map: GeneFlowMap, nl: BistableNonlinearity) -> Self {
        let mut r = Self { map, nl, lipschitz: 0.0 };
        r.lipschitz = (0..=10_000).map(|k| r.rate_slope(k as f64 / 10_000.0).abs()).fold(0.0, f64::max);
        r
    }

    pub fn map(&self) -> &GeneFlowMap {
        &self.map
    }

    /// Bistable sign pattern around `𝒩(θ)`, slopes at the roots and a positive integral.
    pub fn validate(&self) -> Result<()> {
        let th = self.theta();
        let m = 10_000;
        let mut integral = 0.0;
        for k in 1..m {
            let q = k as f64 / m as f64;
            let v = self.rate(q);
            integral += v / m as f64;
            let bad = (q < th - 1e-9 && v >= 0.0) || (q > th + 1e-9 && v <= 0.0);
            if bad {
                return Err(Error::InvalidInput(format!("transformed reaction has wrong sign at q = {q}")));
            }
        }
        if !(self.rate_slope(0.0) < 0.0 && self.rate_slope(1.0) < 0.0 && self.rate_slope(th) > 0.0) {
            return Err(Error::InvalidInput("transformed reaction slopes at the roots are wrong".into()));
        }
        if integral <= 0.0 {
            return Err(Error::InvalidInput("transformed reaction has non-positive integral".into()));
        }
        Ok(())
    }
}

impl Reaction for TransformedReaction {
    fn rate(&self, q: f64) -> f64 {
        if (0.0..=1.0).contains(&q) {
            tilde_f(&self.map, &self.nl, q).value
        } else {
            0.0
        }
    }

    /// `f̃' = f'(p) + 2 f(p) N'(p)/N(p)` at `p = 𝒩⁻¹ q`.
    fn rate_slope(&self, q: f64) -> f64 {
        let p = self.map.inverse(q.clamp(0.0, 1.0));
        self.nl.df(p) + 2.0 * self.nl.f(p) * self.map.log_slope(p)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn theta(&self) -> f64 {
        self.map.forward(self.nl.theta())
    }
}

/// Result of running both formulations side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// `max_t max_x |𝒩(p) - q|`.
    pub discrepancy: f64,
    pub p_final: GridProfile,
    pub q_final: GridProfile,
    /// Time step actually used (after any halving).
    pub dt: f64,
}

/// Crank–Nicolson diffusion with a Heun predictor-corrector for the explicit terms.
struct CnHeun {
    grid: Grid,
    inv_h2: f64,
    dt: f64,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl CnHeun {
    fn new(grid: Grid, dt: f64) -> Self {
        let h = grid.h();
        let inv_h2 = 1.0 / (h * h);
        let m = grid.n - 2;
        let c = 0.5 * dt * inv_h2;
        Self { grid, inv_h2, dt, lower: vec![-c; m], diag: vec![1.0 + 2.0 * c; m], upper: vec![-c; m] }
    }

    fn lap(&self, p: &[f64], i: usize) -> f64 {
        (p[i - 1] - 2.0 * p[i] + p[i + 1]) * self.inv_h2
    }

    fn solve(&self, p: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n;
        let c = 0.5 * self.dt * self.inv_h2;
        let mut rhs: Vec<f64> = (1..n - 1).map(|i| p[i] + 0.5 * self.dt * self.lap(p, i) + self.dt * g[i]).collect();
        rhs[0] += c * p[0];
        rhs[n - 3] += c * p[n - 1];
        let x = solve_tridiagonal(&self.lower, &self.diag, &self.upper, &rhs)?;
        let mut out = p.to_vec();
        out[1..n - 1].copy_from_slice(&x);
        Ok(out)
    }

    fn step<G: Fn(&[f64]) -> Vec<f64>>(&self, p: &[f64], g: G) -> Result<Vec<f64>> {
        let g0 = g(p);
        let pred = self.solve(p, &g0)?;
        let g1 = g(&pred);
        let avg: Vec<f64> = g0.iter().zip(&g1).map(|(a, b)| 0.5 * (a + b)).collect();
        self.solve(p, &avg)
    }
}

/// Simulates the quasilinear equation for `p` and the transformed heat
/// equation for `q = 𝒩(p)` with static boundary value `u` and compares them.
pub fn equivalence_check(
    nl: &BistableNonlinearity,
    density: &InfectionDensity,
    p0: &GridProfile,
    u: f64,
    t_end: f64,
    dt: f64,
) -> Result<EquivalenceReport> {
    if p0.geometry().is_ball() {
        return Err(Error::InvalidInput("equivalence check runs on intervals".into()));
    }
    if !(0.0..=1.0).contains(&u) || !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidInput("need u in [0, 1], dt > 0 and T >= 0".into()));
    }
    let map = build_map(density)?;
    let mut dt = dt;
    for _ in 0..4 {
        match run_pair(nl, &map, p0, u, t_end, dt) {
            Err(Error::GfStiff { .. }) => dt *= 0.5,
            other => return other,
        }
    }
    run_pair(nl, &map, p0, u, t_end, dt)
}

fn run_pair(
    nl: &BistableNonlinearity,
    map: &GeneFlowMap,
    p0: &GridProfile,
    u: f64,
    t_end: f64,
    dt: f64,
) -> Result<EquivalenceReport> {
    let grid = p0.grid;
    let n = grid.n;
    let h = grid.h();
    let mut p = p0.values.clone();
    p[0] = u;
    p[n - 1] = u;
    let mut q: Vec<f64> = p.iter().map(|v| map.forward(*v)).collect();
    let reaction = TransformedReaction::new(map.clone(), nl.clone());
    let steps = (t_end / dt).round().max(0.0) as usize;
    let dt = if steps > 0 { t_end / steps as f64 } else { dt };
    let stepper = CnHeun::new(grid, dt);
    let gp = |p: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; n];
        for i in 1..n - 1 {
            let d = (p[i + 1] - p[i - 1]) / (2.0 * h);
            g[i] = 2.0 * map.log_slope(p[i].clamp(0.0, 1.0)) * d * d + nl.f(p[i]);
        }
        g
    };
    let gq = |q: &[f64]| -> Vec<f64> { q.iter().map(|v| reaction.rate(*v)).collect() };
    let gap = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| (map.forward(*a) - b).abs()).fold(0.0, f64::max);
    let mut discrepancy = gap(&p, &q);
    for k in 0..steps {
        p = stepper.step(&p, gp)?;
        q = stepper.step(&q, gq)?;
        if p.iter().any(|v| !v.is_finite() || *v < -0.5 || *v > 1.5) {
            return Err(Error::GfStiff { t: (k + 1) as f64 * dt });
        }
        discrepancy = discrepancy.max(gap(&p, &q));
    }
    Ok(EquivalenceReport {
        discrepancy,
        p_final: GridProfile::new(grid, p)?,
        q_final: GridProfile::new(grid, q)?,
        dt,
    })
}
