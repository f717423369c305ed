use crate::error::{finite, Error, Result};
use crate::numerics::{bisect, Pchip};

/// How `f` and `F` are continued outside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// The cubic formula (tabulated reactions are always zero outside).
    Natural,
    /// `f = 0` outside `[0, 1]`, so `F` is constant there.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Cubic,
    Tabulated(Pchip),
}

/// A bistable reaction term with roots `0 < theta < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BistableNonlinearity {
    theta: f64,
    kind: Kind,
}

/// `lipschitz` is `sup |f'|` and `sup_fprime` the signed maximum of `f'`, both over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FprimeBounds {
    pub lipschitz: f64,
    pub sup_fprime: f64,
}

/// Anything usable as the explicit reaction in the time stepper.
pub trait Reaction: Send + Sync {
    fn rate(&self, p: f64) -> f64;
    fn rate_slope(&self, p: f64) -> f64;
    /// `sup |f'|` on `[0, 1]`.
    fn lipschitz(&self) -> f64;
    /// The unstable interior root.
    fn theta(&self) -> f64;
}

const DENSE: usize = 10_000;

impl BistableNonlinearity {
    /// `f(p) = p (p - theta) (1 - p)`, requiring `0 < theta < 1/2`.
    pub fn cubic(theta: f64) -> Result<Self> {
        finite("theta", theta)?;
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::InvalidInput(format!(
                "cubic reaction needs 0 < theta < 1/2 for a positive integral, got {theta}"
            )));
        }
        Ok(Self { theta, kind: Kind::Cubic })
    }

    /// Samples of `f` at `k / (m - 1)`, `k = 0..m`, interpolated by a monotone cubic.
    pub fn tabulated(samples: Vec<f64>) -> Result<Self> {
        let table = Pchip::new(0.0, 1.0, samples)?;
        let y = table.samples();
        let m = y.len();
        if y[0].abs() > 1e-12 || y[m - 1].abs() > 1e-12 {
            return Err(Error::InvalidInput("tabulated reaction must vanish at 0 and 1".into()));
        }
        let g = |p: f64| table.value(p);
        let mut theta = None;
        for k in 1..m - 1 {
            let x = k as f64 / (m - 1) as f64;
            if y[k] == 0.0 && y[k - 1] < 0.0 {
                theta = Some(x);
                break;
            }
            if y[k] < 0.0 && y[k + 1] > 0.0 {
                theta = bisect(g, x, (k + 1) as f64 / (m - 1) as f64, 1e-15, 200);
                break;
            }
        }
        let theta = theta.ok_or_else(|| Error::InvalidInput("no interior sign change".into()))?;
        let nl = Self { theta, kind: Kind::Tabulated(table) };
        nl.validate()?;
        Ok(nl)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_cubic(&self) -> bool {
        matches!(self.kind, Kind::Cubic)
    }

    /// `f(p)` with the natural continuation.
    pub fn f(&self, p: f64) -> f64 {
        match &self.kind {
            Kind::Cubic => p * (p - self.theta) * (1.0 - p),
            Kind::Tabulated(t) => {
                if (0.0..=1.0).contains(&p) {
                    t.value(p)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn f_ext(&self, p: f64, ext: Extension) -> f64 {
        match ext {
            Extension::Zero if !(0.0..=1.0).contains(&p) => 0.0,
            _ => self.f(p),
        }
    }

    pub fn df(&self, p: f64) -> f64 {
        match &self.kind {
            Kind::Cubic => -3.0 * p * p + 2.0 * (1.0 + self.theta) * p - self.theta,
            Kind::Tabulated(t) => {
                if (0.0..=1.0).contains(&p) {
                    t.slope(p)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn df_ext(&self, p: f64, ext: Extension) -> f64 {
        match ext {
            Extension::Zero if !(0.0..=1.0).contains(&p) => 0.0,
            _ => self.df(p),
        }
    }

    /// `F(p) = int_0^p f` with the natural continuation.
    pub fn antiderivative(&self, p: f64) -> f64 {
        match &self.kind {
            Kind::Cubic => {
                let t = self.theta;
                let p2 = p * p;
                -0.25 * p2 * p2 + (1.0 + t) * p2 * p / 3.0 - 0.5 * t * p2
            }
            Kind::Tabulated(tab) => tab.integral(p.clamp(0.0, 1.0)),
        }
    }

    pub fn antiderivative_ext(&self, p: f64, ext: Extension) -> f64 {
        match ext {
            Extension::Zero => self.antiderivative(p.clamp(0.0, 1.0)),
            Extension::Natural => self.antiderivative(p),
        }
    }

    /// Checked evaluation of `f`.
    pub fn eval_f(&self, p: f64) -> Result<f64> {
        Ok(self.f(finite("p", p)?))
    }

    /// Checked evaluation of `F`.
    pub fn eval_big_f(&self, p: f64) -> Result<f64> {
        Ok(self.antiderivative(finite("p", p)?))
    }

    pub fn lipschitz_and_sup_fprime(&self) -> FprimeBounds {
        let mut lip: f64 = 0.0;
        let mut sup = f64::NEG_INFINITY;
        let mut probe = |p: f64| {
            let d = self.df(p);
            lip = lip.max(d.abs());
            sup = sup.max(d);
        };
        for k in 0..=DENSE {
            probe(k as f64 / DENSE as f64);
        }
        match &self.kind {
            Kind::Cubic => probe((1.0 + self.theta) / 3.0),
            Kind::Tabulated(t) => {
                let m = t.samples().len();
                for k in 0..m {
                    probe(k as f64 / (m - 1) as f64);
                }
            }
        }
        FprimeBounds { lipschitz: lip, sup_fprime: sup }
    }

    /// Checks the bistable sign pattern, slopes at the roots and a positive integral.
    pub fn validate(&self) -> Result<()> {
        let th = self.theta;
        let tol = if self.is_cubic() { 0.0 } else { 1e-12 };
        for root in [0.0, th, 1.0] {
            if self.f(root).abs() > tol {
                return Err(Error::InvalidInput(format!("f({root}) = {} is not zero", self.f(root))));
            }
        }
        for k in 1..DENSE {
            let p = k as f64 / DENSE as f64;
            let v = self.f(p);
            let bad = if p < th - 1e-12 {
                v >= 0.0
            } else if p > th + 1e-12 {
                v <= 0.0
            } else {
                false
            };
            if bad {
                return Err(Error::InvalidInput(format!("sign pattern violated at p = {p}")));
            }
        }
        if !(self.df(0.0) < 0.0 && self.df(1.0) < 0.0 && self.df(th) > 0.0) {
            return Err(Error::InvalidInput("slope conditions at the roots violated".into()));
        }
        if self.antiderivative(1.0) <= 0.0 {
            return Err(Error::InvalidInput("integral of f over [0, 1] is not positive".into()));
        }
        Ok(())
    }
}

impl Reaction for BistableNonlinearity {
    fn rate(&self, p: f64) -> f64 {
        self.f(p)
    }
    fn rate_slope(&self, p: f64) -> f64 {
        self.df(p)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz_and_sup_fprime().lipschitz
    }
    fn theta(&self) -> f64 {
        self.theta
    }
}
