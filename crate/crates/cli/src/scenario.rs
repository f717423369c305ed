//! Scenario files: JSON description of one experiment.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use geneflow::{BistableNonlinearity, DomainGeometry, DriftField, InfectionDensity, LogDensity, PiecewiseLinearLog};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Barriers,
    PhasePortrait,
    Simulate,
    Report,
    MintimeScan,
    Eigen,
    Energy,
    TransformCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionSpec {
    Cubic { theta: f64 },
    Table { samples: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GaussOut,
    GaussIn,
    AbsExp,
    Sinusoidal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Homogeneous,
    Radial { family: Family, sigma: f64 },
    /// Node values of `ln N` on `x0 + k h`.
    Table { x0: f64, h: f64, log_n: Vec<f64>, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Interval {
        #[serde(rename = "L")]
        half_length: f64,
    },
    Ball {
        #[serde(rename = "R")]
        radius: f64,
        d: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Zero,
    One,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Const { c: f64 },
    /// CSV with columns `x,p`; values are interpolated onto the grid.
    File { path: PathBuf },
    /// The barrier with the given boundary value.
    Barrier { boundary: Boundary },
    /// Uniform noise in `[lo, hi]` drawn from the scenario seed.
    Random { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSpec {
    Static { u: f64 },
    Piecewise { steps: Vec<(f64, f64)> },
    Staircase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Affine { a: f64, b: f64 },
    Samples { values: Vec<f64> },
}

/// One run of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Run {
    pub name: String,
    pub initial: InitialSpec,
    pub control: ControlSpec,
    /// Target used for the verdict: 0, θ (as "theta") or 1.
    #[serde(default)]
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default = "default_reaction")]
    pub f: ReactionSpec,
    #[serde(default = "default_drift")]
    pub drift: DriftSpec,
    #[serde(default = "default_domain")]
    pub domain: DomainSpec,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_snapshot")]
    pub snapshot_every: f64,
    #[serde(default)]
    pub horizons: Vec<f64>,
    #[serde(default)]
    pub sigmas: Vec<f64>,
    #[serde(default)]
    pub families: Vec<Family>,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    #[serde(default)]
    pub runs: Vec<Run>,
    #[serde(default)]
    pub density: Option<DensitySpec>,
    #[serde(default)]
    pub initial_values: Vec<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_reaction() -> ReactionSpec {
    ReactionSpec::Cubic { theta: 0.33 }
}
fn default_drift() -> DriftSpec {
    DriftSpec::Homogeneous
}
fn default_domain() -> DomainSpec {
    DomainSpec::Interval { half_length: 1.0 }
}
fn default_grid() -> usize {
    201
}
fn default_t_end() -> f64 {
    50.0
}
fn default_snapshot() -> f64 {
    1.0
}
fn default_boundary() -> Boundary {
    Boundary::Both
}

fn config(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ConfigError(msg.into()))
}

impl Scenario {
    /// Parses JSON, expanding a `preset` field into the full scenario and
    /// letting the remaining fields override it.
    pub fn from_json(text: &str, origin: &Path) -> anyhow::Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| config(format!("{}: line {}, column {}: {e}", origin.display(), e.line(), e.column())))?;
        let merged = match value.get("preset").and_then(|p| p.as_str()) {
            Some(name) => {
                let base = preset(name)?;
                let mut base = serde_json::to_value(base).expect("scenario serializes");
                if let (Some(b), Some(o)) = (base.as_object_mut(), value.as_object()) {
                    for (k, v) in o {
                        b.insert(k.clone(), v.clone());
                    }
                }
                base
            }
            None => value,
        };
        let mut s: Scenario = serde_json::from_value(merged).map_err(|e| config(format!("{}: {e}", origin.display())))?;
        if let Some(base) = origin.parent() {
            for run in &mut s.runs {
                if let InitialSpec::File { path } = &mut run.initial {
                    if path.is_relative() {
                        *path = base.join(&*path);
                    }
                }
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path)
    }

    /// Range checks and file existence.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.experiment.is_none() {
            bail!(config("field `experiment`: missing; nothing to run"));
        }
        let in_range = |name: &str, x: f64, lo: f64, hi: f64| -> anyhow::Result<()> {
            if !(x.is_finite() && x >= lo && x <= hi) {
                bail!(config(format!("field `{name}`: {x} outside [{lo}, {hi}]")));
            }
            Ok(())
        };
        if !(3..=100_000).contains(&self.grid) {
            bail!(config(format!("field `grid`: {} outside [3, 100000]", self.grid)));
        }
        if let Some(dt) = self.dt {
            in_range("dt", dt, 1e-12, 10.0)?;
        }
        in_range("t_end", self.t_end, 0.0, 1e6)?;
        in_range("snapshot_every", self.snapshot_every, 1e-9, 1e6)?;
        for (k, h) in self.horizons.iter().enumerate() {
            in_range(&format!("horizons[{k}]"), *h, 1e-9, 1e6)?;
        }
        if self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            bail!(config("field `horizons`: must be increasing"));
        }
        for (k, s) in self.sigmas.iter().enumerate() {
            in_range(&format!("sigmas[{k}]"), *s, 1e-9, 1e9)?;
        }
        for (k, c) in self.initial_values.iter().enumerate() {
            in_range(&format!("initial_values[{k}]"), *c, 0.0, 1.0)?;
        }
        for run in &self.runs {
            match &run.initial {
                InitialSpec::Const { c } => in_range(&format!("runs[{}].initial.c", run.name), *c, 0.0, 1.0)?,
                InitialSpec::File { path } => {
                    if !path.exists() {
                        bail!(config(format!("runs[{}].initial.path: {} does not exist", run.name, path.display())));
                    }
                }
                InitialSpec::Random { lo, hi } => {
                    in_range("initial.lo", *lo, 0.0, 1.0)?;
                    in_range("initial.hi", *hi, *lo, 1.0)?;
                }
                InitialSpec::Barrier { .. } => {}
            }
            match &run.control {
                ControlSpec::Static { u } => in_range(&format!("runs[{}].control.u", run.name), *u, 0.0, 1.0)?,
                ControlSpec::Piecewise { steps } => {
                    for (_, u) in steps {
                        in_range(&format!("runs[{}].control.steps", run.name), *u, 0.0, 1.0)?;
                    }
                }
                ControlSpec::Staircase => {}
            }
            if let Some(t) = &run.target {
                if !matches!(t.as_str(), "0" | "theta" | "1") {
                    bail!(config(format!("runs[{}].target: expected \"0\", \"theta\" or \"1\"", run.name)));
                }
            }
        }
        self.reaction()?;
        self.drift_field()?;
        self.geometry()?;
        Ok(())
    }

    pub fn reaction(&self) -> anyhow::Result<BistableNonlinearity> {
        match &self.f {
            ReactionSpec::Cubic { theta } => BistableNonlinearity::cubic(*theta),
            ReactionSpec::Table { samples } => BistableNonlinearity::tabulated(samples.clone()),
        }
        .map_err(|e| config(format!("field `f`: {e}")))
    }

    pub fn drift_field(&self) -> anyhow::Result<DriftField> {
        drift_of(&self.drift)
    }

    pub fn geometry(&self) -> anyhow::Result<DomainGeometry> {
        match self.domain {
            DomainSpec::Interval { half_length } => DomainGeometry::interval(half_length),
            DomainSpec::Ball { radius, d } => DomainGeometry::ball(radius, d),
        }
        .map_err(|e| config(format!("field `domain`: {e}")))
    }

    pub fn infection_density(&self) -> anyhow::Result<InfectionDensity> {
        match self.density.as_ref().context("field `density`: required for transform-check").map_err(|e| config(e.to_string()))? {
            DensitySpec::Affine { a, b } => InfectionDensity::affine(*a, *b),
            DensitySpec::Samples { values } => InfectionDensity::from_samples(values.clone()),
        }
        .map_err(|e| config(format!("field `density`: {e}")))
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

pub fn drift_of(spec: &DriftSpec) -> anyhow::Result<DriftField> {
    match spec {
        DriftSpec::Homogeneous => Ok(DriftField::homogeneous()),
        DriftSpec::Radial { family, sigma } => family_drift(*family, *sigma),
        DriftSpec::Table { x0, h, log_n, sigma } => {
            PiecewiseLinearLog::new(*x0, *h, log_n.clone()).and_then(|t| DriftField::new(LogDensity::Table(t), *sigma))
        }
    }
    .map_err(|e| config(format!("field `drift`: {e}")))
}

pub fn family_drift(family: Family, sigma: f64) -> geneflow::Result<DriftField> {
    match family {
        Family::GaussOut => DriftField::gauss_out(sigma),
        Family::GaussIn => DriftField::gauss_in(sigma),
        Family::AbsExp => DriftField::abs_exp(sigma),
        Family::Sinusoidal => DriftField::sinusoidal(sigma),
    }
}

pub const PRESETS: [&str; 5] = ["fig4", "fig5", "fig6", "fig7", "mincontr"];

fn base() -> Scenario {
    Scenario {
        preset: None,
        experiment: None,
        f: default_reaction(),
        drift: DriftSpec::Radial { family: Family::GaussOut, sigma: 40.0 },
        domain: DomainSpec::Interval { half_length: 2.5 },
        grid: 401,
        dt: None,
        t_end: 200.0,
        snapshot_every: 1.0,
        horizons: Vec::new(),
        sigmas: Vec::new(),
        families: Vec::new(),
        boundary: Boundary::Both,
        runs: Vec::new(),
        density: None,
        initial_values: Vec::new(),
        delta: None,
        seed: 0,
    }
}

/// Built-in scenarios.
pub fn preset(name: &str) -> anyhow::Result<Scenario> {
    let mut s = base();
    s.preset = Some(name.to_string());
    match name {
        "fig4" => {
            s.experiment = Some(Experiment::PhasePortrait);
            s.boundary = Boundary::One;
        }
        "fig5" => {
            s.experiment = Some(Experiment::PhasePortrait);
            s.boundary = Boundary::Zero;
        }
        "fig6" => {
            s.experiment = Some(Experiment::Simulate);
            s.runs = vec![
                Run { name: "to_zero".into(), initial: InitialSpec::Const { c: 1.0 }, control: ControlSpec::Static { u: 0.0 }, target: Some("0".into()) },
                Run { name: "to_one".into(), initial: InitialSpec::Const { c: 0.0 }, control: ControlSpec::Static { u: 1.0 }, target: Some("1".into()) },
            ];
        }
        "fig7" => {
            s.experiment = Some(Experiment::Simulate);
            s.drift = DriftSpec::Radial { family: Family::AbsExp, sigma: 40.0 };
            s.domain = DomainSpec::Interval { half_length: 15.0 };
            s.grid = 301;
            s.t_end = 150.0;
            s.runs = vec![
                Run { name: "from_one".into(), initial: InitialSpec::Const { c: 1.0 }, control: ControlSpec::Static { u: 0.0 }, target: Some("0".into()) },
                Run { name: "from_zero".into(), initial: InitialSpec::Const { c: 0.0 }, control: ControlSpec::Staircase, target: Some("theta".into()) },
            ];
        }
        "mincontr" => {
            s.experiment = Some(Experiment::MintimeScan);
            s.grid = 101;
            s.families = vec![Family::GaussIn, Family::GaussOut];
            s.sigmas = vec![40.0, 16.0, 8.0, 4.0];
            s.horizons = (1..=100).map(f64::from).collect();
        }
        other => bail!(config(format!("unknown preset `{other}`; available: {}", PRESETS.join(", ")))),
    }
    Ok(s)
}
