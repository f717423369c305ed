//! Small dense-free numerical kernels used across the crate.

use crate::error::{Error, Result};

/// Tridiagonal system `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::SolverFailure("tridiagonal length mismatch".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta.abs() < 1e-300 || !beta.is_finite() {
        return Err(Error::SolverFailure("zero pivot at row 0".into()));
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta.abs() < 1e-300 || !beta.is_finite() {
            return Err(Error::SolverFailure(format!("zero pivot at row {i}")));
        }
        c[i] = if i + 1 < n { upper[i] / beta } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure("non-finite solution".into()));
    }
    Ok(x)
}

/// Composite Simpson rule with `panels` rounded up to an even count.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2) + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Simpson quadrature of uniformly spaced samples; falls back to a
/// trapezoid correction on the last panel when the sample count is even.
pub fn simpson_samples(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (y[0] + y[1]),
        _ => {
            let m = if n % 2 == 1 { n } else { n - 1 };
            let mut s = y[0] + y[m - 1];
            for (k, v) in y.iter().enumerate().take(m - 1).skip(1) {
                s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = s * h / 3.0;
            if m < n {
                // Cubic correction for the trailing panel.
                let (a, b, c, d) = (y[n - 4], y[n - 3], y[n - 2], y[n - 1]);
                total += h * (a - 5.0 * b + 19.0 * c + 9.0 * d) / 24.0;
            }
            total
        }
    }
}

/// Cubic Hermite interpolant on `[0, h]` evaluated at `t * h`.
pub fn hermite(p0: f64, v0: f64, p1: f64, v1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * p0
        + (t3 - 2.0 * t2 + t) * h * v0
        + (-2.0 * t3 + 3.0 * t2) * p1
        + (t3 - t2) * h * v1
}

/// Derivative of [`hermite`] with respect to the physical variable.
pub fn hermite_slope(p0: f64, v0: f64, p1: f64, v1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    ((6.0 * t2 - 6.0 * t) * p0 + (-6.0 * t2 + 6.0 * t) * p1) / h
        + (3.0 * t2 - 4.0 * t + 1.0) * v0
        + (3.0 * t2 - 2.0 * t) * v1
}

/// Integral of the Hermite interpolant over `[0, t h]`.
pub fn hermite_integral(p0: f64, v0: f64, p1: f64, v1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    h * ((t - t3 + 0.5 * t4) * p0
        + h * (0.5 * t2 - 2.0 * t3 / 3.0 + 0.25 * t4) * v0
        + (t3 - 0.5 * t4) * p1
        + h * (-t3 / 3.0 + 0.25 * t4) * v1)
}

/// Bisection for a sign change of `g` on `[a, b]`.
pub fn bisect<G: FnMut(f64) -> f64>(mut g: G, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> Option<f64> {
    let mut ga = g(a);
    let gb = g(b);
    if ga == 0.0 {
        return Some(a);
    }
    if gb == 0.0 {
        return Some(b);
    }
    if ga.signum() == gb.signum() {
        return None;
    }
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol {
            return Some(m);
        }
        let gm = g(m);
        if gm == 0.0 {
            return Some(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Shape-preserving piecewise cubic interpolant on a uniform grid
/// (Fritsch–Carlson slopes with the three-point end condition).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x0: f64, x1: f64, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 3 {
            return Err(Error::InvalidInput("monotone cubic needs at least 3 samples".into()));
        }
        if !(x1 > x0) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite samples or empty range".into()));
        }
        let h = (x1 - x0) / (n - 1) as f64;
        let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let (a, b) = (delta[k - 1], delta[k]);
            d[k] = if a * b <= 0.0 { 0.0 } else { 2.0 / (1.0 / a + 1.0 / b) };
        }
        d[0] = end_slope(delta[0], delta[1]);
        d[n - 1] = end_slope(delta[n - 2], delta[n - 3]);
        Ok(Self { x0, h, y, d })
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.y.len();
        let s = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        (k, s - k as f64)
    }

    pub fn value(&self, x: f64) -> f64 {
        let (k, t) = self.locate(x);
        hermite(self.y[k], self.d[k], self.y[k + 1], self.d[k + 1], self.h, t)
    }

    pub fn slope(&self, x: f64) -> f64 {
        let (k, t) = self.locate(x);
        hermite_slope(self.y[k], self.d[k], self.y[k + 1], self.d[k + 1], self.h, t)
    }

    /// Exact integral of the interpolant from the left end to `x` (clamped to the range).
    pub fn integral(&self, x: f64) -> f64 {
        let (k, t) = self.locate(x);
        let mut s = 0.0;
        for j in 0..k {
            s += hermite_integral(self.y[j], self.d[j], self.y[j + 1], self.d[j + 1], self.h, 1.0);
        }
        s + hermite_integral(self.y[k], self.d[k], self.y[k + 1], self.d[k + 1], self.h, t)
    }

    pub fn samples(&self) -> &[f64] {
        &self.y
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.h * (self.y.len() - 1) as f64)
    }
}

fn end_slope(d0: f64, d1: f64) -> f64 {
    let s = 0.5 * (3.0 * d0 - d1);
    if s.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}
