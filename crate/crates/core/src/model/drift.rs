use crate::error::{finite, Error, Result};
use crate::numerics::Pchip;

/// `ln N` sampled on a uniform grid and interpolated linearly, so the
/// gradient `N'/N` is piecewise constant. Extended linearly beyond the table.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearLog {
    x0: f64,
    h: f64,
    log_n: Vec<f64>,
}

impl PiecewiseLinearLog {
    pub fn new(x0: f64, h: f64, log_n: Vec<f64>) -> Result<Self> {
        if log_n.len() < 2 || !(h > 0.0) || log_n.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("log-density table needs >= 2 finite samples and h > 0".into()));
        }
        Ok(Self { x0, h, log_n })
    }

    /// Builds `ln N` from cell gradients `m_k` on `[x0 + k h, x0 + (k+1) h]`, anchored at `ln N(0) = 0`
    /// when `0` lies inside the table.
    pub fn from_gradient(x0: f64, h: f64, m: &[f64]) -> Result<Self> {
        let mut log_n = Vec::with_capacity(m.len() + 1);
        log_n.push(0.0);
        for g in m {
            let last = *log_n.last().unwrap();
            log_n.push(last + g * h);
        }
        let mut t = Self::new(x0, h, log_n)?;
        let x_end = x0 + h * m.len() as f64;
        if x0 <= 0.0 && 0.0 <= x_end {
            let shift = t.value(0.0);
            t.log_n.iter_mut().for_each(|v| *v -= shift);
        }
        Ok(t)
    }

    fn cell(&self, x: f64) -> usize {
        let last = self.log_n.len() - 2;
        let s = (x - self.x0) / self.h;
        if s <= 0.0 {
            0
        } else {
            (s.floor() as usize).min(last)
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let k = self.cell(x);
        let xk = self.x0 + k as f64 * self.h;
        self.log_n[k] + self.gradient(x) * (x - xk)
    }

    pub fn gradient(&self, x: f64) -> f64 {
        let k = self.cell(x);
        (self.log_n[k + 1] - self.log_n[k]) / self.h
    }

    fn is_even(&self) -> bool {
        let n = self.log_n.len();
        let x_end = self.x0 + self.h * (n - 1) as f64;
        (self.x0 + x_end).abs() < 1e-12 * self.h.max(1.0)
            && (0..n).all(|k| (self.log_n[k] - self.log_n[n - 1 - k]).abs() < 1e-12)
    }
}

/// Profiles of `ln N` in the space variable.
#[derive(Debug, Clone, PartialEq)]
pub enum LogDensity {
    /// `N = 1`.
    Flat,
    /// `ln N = -kappa x^2 / 2`; `kappa > 0` pushes mass outward.
    Gaussian { kappa: f64 },
    /// `ln N = kappa |x|`.
    AbsExp { kappa: f64 },
    /// `ln N = kappa (1 - cos x)`, so `N'/N = kappa sin x`.
    Cosine { kappa: f64 },
    Table(PiecewiseLinearLog),
}

impl LogDensity {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            LogDensity::Flat => 0.0,
            LogDensity::Gaussian { kappa } => -0.5 * kappa * x * x,
            LogDensity::AbsExp { kappa } => kappa * x.abs(),
            LogDensity::Cosine { kappa } => kappa * (1.0 - x.cos()),
            LogDensity::Table(t) => t.value(x),
        }
    }

    pub fn gradient(&self, x: f64) -> f64 {
        match self {
            LogDensity::Flat => 0.0,
            LogDensity::Gaussian { kappa } => -kappa * x,
            LogDensity::AbsExp { kappa } => kappa * x.signum() * f64::from(x != 0.0),
            LogDensity::Cosine { kappa } => kappa * x.sin(),
            LogDensity::Table(t) => t.gradient(x),
        }
    }
}

/// Spatial gene-flow drift: density profile `N` and intensity `sigma`.
///
/// The transport coefficient in the equation is `(2 / sigma) N'/N` and the
/// associated variational weight is `N^(2 / sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftField {
    density: LogDensity,
    sigma: f64,
}

impl DriftField {
    pub fn new(density: LogDensity, sigma: f64) -> Result<Self> {
        finite("sigma", sigma)?;
        if sigma <= 0.0 {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
        }
        match &density {
            LogDensity::Gaussian { kappa } | LogDensity::AbsExp { kappa } | LogDensity::Cosine { kappa } => {
                finite("kappa", *kappa)?;
            }
            _ => {}
        }
        Ok(Self { density, sigma })
    }

    pub fn homogeneous() -> Self {
        Self { density: LogDensity::Flat, sigma: 1.0 }
    }

    /// `N = exp(-r^2 / 2)`.
    pub fn gauss_out(sigma: f64) -> Result<Self> {
        Self::new(LogDensity::Gaussian { kappa: 1.0 }, sigma)
    }

    /// `N = exp(r^2 / 2)`.
    pub fn gauss_in(sigma: f64) -> Result<Self> {
        Self::new(LogDensity::Gaussian { kappa: -1.0 }, sigma)
    }

    /// `N = exp(|x|)`.
    pub fn abs_exp(sigma: f64) -> Result<Self> {
        Self::new(LogDensity::AbsExp { kappa: 1.0 }, sigma)
    }

    /// `N'/N = sin x`.
    pub fn sinusoidal(sigma: f64) -> Result<Self> {
        Self::new(LogDensity::Cosine { kappa: 1.0 }, sigma)
    }

    /// Weight `exp(eps n)`: the slowly varying form with `N = exp(n)` and `sigma = 2 / eps`.
    pub fn slowly_varying(n: LogDensity, eps: f64) -> Result<Self> {
        finite("eps", eps)?;
        if eps < 0.0 {
            return Err(Error::InvalidInput("eps must be non-negative".into()));
        }
        if eps == 0.0 {
            return Ok(Self::homogeneous());
        }
        Self::new(n, 2.0 / eps)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn density(&self) -> &LogDensity {
        &self.density
    }

    pub fn is_homogeneous(&self) -> bool {
        match &self.density {
            LogDensity::Flat => true,
            LogDensity::Gaussian { kappa } | LogDensity::AbsExp { kappa } | LogDensity::Cosine { kappa } => *kappa == 0.0,
            LogDensity::Table(t) => t.log_n.iter().all(|v| *v == t.log_n[0]),
        }
    }

    /// Whether `ln N` is even in `x`, so that radial reduction applies.
    pub fn is_even(&self) -> bool {
        match &self.density {
            LogDensity::Table(t) => t.is_even(),
            _ => true,
        }
    }

    pub fn log_n(&self, x: f64) -> f64 {
        self.density.value(x)
    }

    /// `N'/N`.
    pub fn log_gradient(&self, x: f64) -> f64 {
        self.density.gradient(x)
    }

    /// The raw transport coefficient `(2 / sigma) N'/N`.
    pub fn coefficient(&self, x: f64) -> f64 {
        2.0 * self.density.gradient(x) / self.sigma
    }

    /// `ln` of the weight `N^(2 / sigma)`.
    pub fn log_weight(&self, x: f64) -> f64 {
        2.0 * self.density.value(x) / self.sigma
    }

    /// A copy with the transport scaled by `lambda`, used for continuation.
    pub fn scaled(&self, lambda: f64) -> Self {
        if lambda == 0.0 {
            return Self::homogeneous();
        }
        Self { density: self.density.clone(), sigma: self.sigma / lambda }
    }

    pub fn label(&self) -> String {
        let fam = match &self.density {
            LogDensity::Flat => "homogeneous".to_string(),
            LogDensity::Gaussian { kappa } if *kappa >= 0.0 => format!("gauss_out(kappa={kappa})"),
            LogDensity::Gaussian { kappa } => format!("gauss_in(kappa={})", -kappa),
            LogDensity::AbsExp { kappa } => format!("abs_exp(kappa={kappa})"),
            LogDensity::Cosine { kappa } => format!("sinusoidal(kappa={kappa})"),
            LogDensity::Table(_) => "table".to_string(),
        };
        format!("{fam},sigma={}", self.sigma)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum InfectionKind {
    Affine { a: f64, b: f64 },
    Table(Pchip),
}

/// Infection-dependent density `N(p) > 0` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfectionDensity {
    kind: InfectionKind,
}

impl InfectionDensity {
    /// `N(p) = a + b p`.
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        finite("a", a)?;
        finite("b", b)?;
        Self::checked(InfectionKind::Affine { a, b })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::affine(c, 0.0)
    }

    /// Samples of `N` at `k / (m - 1)`, interpolated by a monotone cubic (C^1).
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        if samples.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidN("samples must be finite and positive".into()));
        }
        Self::checked(InfectionKind::Table(Pchip::new(0.0, 1.0, samples)?))
    }

    fn checked(kind: InfectionKind) -> Result<Self> {
        let d = Self { kind };
        for k in 0..=1000 {
            let p = k as f64 / 1000.0;
            let v = d.value(p);
            if !(v > 0.0) || !v.is_finite() || !d.slope(p).is_finite() {
                return Err(Error::InvalidN(format!("N({p}) = {v}")));
            }
        }
        Ok(d)
    }

    pub fn value(&self, p: f64) -> f64 {
        match &self.kind {
            InfectionKind::Affine { a, b } => a + b * p,
            InfectionKind::Table(t) => t.value(p),
        }
    }

    pub fn slope(&self, p: f64) -> f64 {
        match &self.kind {
            InfectionKind::Affine { b, .. } => *b,
            InfectionKind::Table(t) => t.slope(p),
        }
    }

    /// The same profile multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let kind = match &self.kind {
            InfectionKind::Affine { a, b } => InfectionKind::Affine { a: a * lambda, b: b * lambda },
            InfectionKind::Table(t) => {
                let y = t.samples().iter().map(|v| v * lambda).collect();
                InfectionKind::Table(Pchip::new(0.0, 1.0, y)?)
            }
        };
        Self::checked(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_convention() {
        let d = DriftField::gauss_out(40.0).unwrap();
        assert!((d.coefficient(2.0) - (-2.0 * 2.0 / 40.0)).abs() < 1e-15);
        assert!((d.log_weight(2.0) - (-2.0 / 40.0 * 2.0)).abs() < 1e-15);
        assert!(DriftField::gauss_out(0.0).is_err());
    }

    #[test]
    fn gradient_table_is_anchored() {
        let t = PiecewiseLinearLog::from_gradient(-1.0, 0.5, &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert!(t.value(0.0).abs() < 1e-15);
        assert_eq!(t.gradient(-0.75), 1.0);
        assert_eq!(t.gradient(0.25), -1.0);
        let d = DriftField::new(LogDensity::Table(t), 1.0).unwrap();
        assert!(d.is_even());
    }

    #[test]
    fn infection_positivity() {
        assert!(InfectionDensity::affine(1.0, -2.0).is_err());
        let n = InfectionDensity::affine(1.0, 1.0).unwrap();
        assert_eq!(n.value(1.0), 2.0);
    }
}
