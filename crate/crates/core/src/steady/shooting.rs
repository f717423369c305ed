use crate::error::{finite, Error, Result};
use crate::model::{BistableNonlinearity, DriftField};
use crate::numerics::{hermite, hermite_slope};

/// One accepted integration point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub r: f64,
    pub p: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ExitReason {
    ReachedRmax,
    /// `p` left `[-0.1, 1.1]`.
    LeftBand,
    /// `|p'|` exceeded `1e3`.
    BlowUp,
    /// Stopped at a requested level crossing.
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TrajectoryEvents {
    /// First radius where `p = theta`.
    pub r_theta: Option<f64>,
    /// First radius where `p = theta / 2`.
    pub r_half_theta: Option<f64>,
    pub r_one: Option<f64>,
    pub r_zero: Option<f64>,
    pub blow_up: bool,
    pub exit: ExitReason,
}

/// Solution of `p'' + ((2/σ) N'/N + (d-1)/r) p' + f(p) = 0`, `p(0) = α`, `p'(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTrajectory {
    pub sigma: f64,
    pub alpha: f64,
    pub dim: usize,
    pub samples: Vec<TrajectorySample>,
    pub events: TrajectoryEvents,
    accel: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Terminal {
    pub level: f64,
    pub upward: bool,
}

struct Rhs<'a> {
    nl: &'a BistableNonlinearity,
    drift: &'a DriftField,
    dim: f64,
    alpha: f64,
}

impl Rhs<'_> {
    fn accel(&self, r: f64, p: f64, v: f64) -> f64 {
        if r <= 0.0 {
            return -self.nl.f(self.alpha) / self.dim;
        }
        -self.nl.f(p) - (self.drift.coefficient(r) + (self.dim - 1.0) / r) * v
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const RTOL: f64 = 1e-10;
const ATOL: f64 = 1e-12;

/// Integrates the radial steady equation outward from the centre.
///
/// `h` caps the step of the adaptive Dormand–Prince scheme. Integration
/// stops at `r_max`, when `p` leaves `[-0.1, 1.1]`, or when `|p'| > 1e3`.
pub fn shoot_radial(
    nl: &BistableNonlinearity,
    drift: &DriftField,
    alpha: f64,
    dim: usize,
    r_max: f64,
    h: f64,
) -> Result<RadialTrajectory> {
    integrate(nl, drift, alpha, dim, r_max, h, None)
}

pub(crate) fn integrate(
    nl: &BistableNonlinearity,
    drift: &DriftField,
    alpha: f64,
    dim: usize,
    r_max: f64,
    h: f64,
    terminal: Option<Terminal>,
) -> Result<RadialTrajectory> {
    finite("alpha", alpha)?;
    finite("r_max", r_max)?;
    finite("h", h)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(r_max > 0.0 && h > 0.0) || dim == 0 {
        return Err(Error::InvalidInput("r_max, h and d must be positive".into()));
    }
    let h_max = h.min(1e-3 * r_max);
    let rhs = Rhs { nl, drift, dim: dim as f64, alpha };
    let a0 = rhs.accel(0.0, alpha, 0.0);
    let mut samples = vec![TrajectorySample { r: 0.0, p: alpha, v: 0.0 }];
    let mut accel = vec![a0];

    // Second-order Taylor start off the singular centre.
    let h0 = h_max.min(1e-4);
    let (mut r, mut p, mut v) = (h0, alpha + 0.5 * a0 * h0 * h0, a0 * h0);
    samples.push(TrajectorySample { r, p, v });
    accel.push(rhs.accel(r, p, v));

    let mut step = h_max;
    let mut exit = ExitReason::ReachedRmax;
    let mut k = [[0.0f64; 2]; 7];
    'outer: while r < r_max {
        let mut dt = step.min(r_max - r);
        loop {
            if dt < 1e-14 * r.max(1.0) {
                return Err(Error::StiffFailure { r, step: dt });
            }
            for s in 0..7 {
                let (mut ps, mut vs) = (p, v);
                for (j, kj) in k.iter().enumerate().take(s) {
                    ps += dt * A[s][j] * kj[0];
                    vs += dt * A[s][j] * kj[1];
                }
                let rs = r + C[s] * dt;
                k[s] = [vs, rhs.accel(rs, ps, vs)];
            }
            let mut p5 = p;
            let mut v5 = v;
            let mut ep = 0.0;
            let mut ev = 0.0;
            for s in 0..7 {
                p5 += dt * B5[s] * k[s][0];
                v5 += dt * B5[s] * k[s][1];
                ep += dt * (B5[s] - B4[s]) * k[s][0];
                ev += dt * (B5[s] - B4[s]) * k[s][1];
            }
            let sp = ATOL + RTOL * p.abs().max(p5.abs());
            let sv = ATOL + RTOL * v.abs().max(v5.abs());
            let err = (0.5 * ((ep / sp).powi(2) + (ev / sv).powi(2))).sqrt();
            if err <= 1.0 && p5.is_finite() && v5.is_finite() {
                let last = r_max - r <= dt;
                r = if last { r_max } else { r + dt };
                p = p5;
                v = v5;
                samples.push(TrajectorySample { r, p, v });
                accel.push(rhs.accel(r, p, v));
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                step = (dt * grow).min(h_max);
                if !(-0.1..=1.1).contains(&p) {
                    exit = ExitReason::LeftBand;
                    break 'outer;
                }
                if v.abs() > 1e3 {
                    exit = ExitReason::BlowUp;
                    break 'outer;
                }
                if let Some(t) = terminal {
                    let prev = samples[samples.len() - 2].p;
                    let hit = if t.upward { prev < t.level && p >= t.level } else { prev > t.level && p <= t.level };
                    if hit {
                        exit = ExitReason::Terminal;
                        break 'outer;
                    }
                }
                continue 'outer;
            }
            let shrink = if err.is_finite() { (0.9 * err.powf(-0.25)).clamp(0.1, 0.5) } else { 0.1 };
            dt *= shrink;
        }
    }
    let mut traj = RadialTrajectory {
        sigma: drift.sigma(),
        alpha,
        dim,
        samples,
        events: TrajectoryEvents {
            r_theta: None,
            r_half_theta: None,
            r_one: None,
            r_zero: None,
            blow_up: exit == ExitReason::BlowUp,
            exit,
        },
        accel,
    };
    let th = nl.theta();
    traj.events.r_theta = traj.first_crossing(th);
    traj.events.r_half_theta = traj.first_crossing(0.5 * th);
    traj.events.r_one = traj.first_crossing(1.0);
    traj.events.r_zero = traj.first_crossing(0.0);
    Ok(traj)
}

impl RadialTrajectory {
    pub fn r_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.r)
    }

    fn segment(&self, r: f64) -> Option<usize> {
        if r < 0.0 || r > self.r_end() {
            return None;
        }
        let k = self.samples.partition_point(|s| s.r <= r);
        Some(k.clamp(1, self.samples.len() - 1) - 1)
    }

    /// Cubic Hermite interpolation of `(p, p')` at `r`, if inside the computed range.
    pub fn value_at(&self, r: f64) -> Option<(f64, f64)> {
        let k = self.segment(r)?;
        let (a, b) = (self.samples[k], self.samples[k + 1]);
        let dr = b.r - a.r;
        let t = ((r - a.r) / dr).clamp(0.0, 1.0);
        let p = hermite(a.p, a.v, b.p, b.v, dr, t);
        let v = hermite(a.v, self.accel[k], b.v, self.accel[k + 1], dr, t);
        Some((p, v))
    }

    /// First radius where `p` crosses `level` with a strict sign change.
    pub fn first_crossing(&self, level: f64) -> Option<f64> {
        for k in 0..self.samples.len() - 1 {
            let (a, b) = (self.samples[k], self.samples[k + 1]);
            let ga = a.p - level;
            let gb = b.p - level;
            if ga == 0.0 {
                continue;
            }
            if gb == 0.0 {
                return Some(b.r);
            }
            if ga * gb < 0.0 {
                let dr = b.r - a.r;
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let gm = hermite(a.p, a.v, b.p, b.v, dr, mid) - level;
                    if gm.signum() == ga.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(a.r + 0.5 * (lo + hi) * dr);
            }
        }
        None
    }

    /// Whether `p' >= -tol` (`upward`) or `p' <= tol` on all samples up to `r`.
    pub fn is_monotone_until(&self, r: f64, upward: bool, tol: f64) -> bool {
        self.samples
            .iter()
            .take_while(|s| s.r <= r)
            .all(|s| if upward { s.v >= -tol } else { s.v <= tol })
    }

    /// `dp'/dr` at each stored sample.
    pub fn accelerations(&self) -> &[f64] {
        &self.accel
    }

    #[allow(dead_code)]
    pub(crate) fn slope_at(&self, r: f64) -> Option<f64> {
        let k = self.segment(r)?;
        let (a, b) = (self.samples[k], self.samples[k + 1]);
        let dr = b.r - a.r;
        Some(hermite_slope(a.p, a.v, b.p, b.v, dr, ((r - a.r) / dr).clamp(0.0, 1.0)))
    }
}
