//! Dispatch of one scenario to the library and artifact writing.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use geneflow::control::*;
use geneflow::dynamics::{ControlSchedule, ParabolicSolver, Verdict};
use geneflow::energy::*;
use geneflow::io;
use geneflow::spectral::*;
use geneflow::steady::*;
use geneflow::transform::*;
use geneflow::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::scenario::*;
use crate::svg::{line_plot, Series, PALETTE};
use crate::ConfigError;

struct Ctx<'a> {
    s: &'a Scenario,
    out: &'a Path,
    hash: String,
    nl: BistableNonlinearity,
    drift: DriftField,
    geometry: DomainGeometry,
    grid: Grid,
}

impl Ctx<'_> {
    fn file(&self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.out.join(name);
        Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
    }

    fn text(&self, name: &str, body: &str) -> anyhow::Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    }

    fn json(&self, name: &str, v: &Value) -> anyhow::Result<()> {
        io::write_json(self.file(name)?, v)?;
        Ok(())
    }

    fn dt(&self, solver: &ParabolicSolver<BistableNonlinearity>) -> f64 {
        self.s.dt.unwrap_or_else(|| solver.default_dt())
    }

    fn problem(&self, drift: DriftField) -> ControlProblem {
        ControlProblem { nl: self.nl.clone(), drift, grid: self.grid, dt: self.s.dt }
    }
}

/// Runs the scenario, writing artifacts under `out`. Returns a JSON summary.
pub fn run(s: &Scenario, out: &Path) -> anyhow::Result<Value> {
    s.validate()?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let geometry = s.geometry()?;
    let ctx = Ctx {
        s,
        out,
        hash: s.hash(),
        nl: s.reaction()?,
        drift: s.drift_field()?,
        geometry,
        grid: Grid::new(geometry, s.grid)?,
    };
    let experiment = s.experiment.expect("validated");
    let body = match experiment {
        Experiment::Barriers => barriers(&ctx, false)?,
        Experiment::PhasePortrait => barriers(&ctx, true)?,
        Experiment::Simulate => simulate(&ctx)?,
        Experiment::Report => report(&ctx)?,
        Experiment::MintimeScan => mintime(&ctx)?,
        Experiment::Eigen => eigen(&ctx)?,
        Experiment::Energy => energy(&ctx)?,
        Experiment::TransformCheck => transform_check(&ctx)?,
    };
    let summary = json!({
        "scenario_hash": ctx.hash,
        "core_version": geneflow::VERSION,
        "cli_version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment,
        "result": body,
    });
    ctx.json("summary.json", &summary)?;
    Ok(summary)
}

fn boundaries(b: Boundary) -> Vec<BoundaryValue> {
    match b {
        Boundary::Zero => vec![BoundaryValue::Zero],
        Boundary::One => vec![BoundaryValue::One],
        Boundary::Both => vec![BoundaryValue::One, BoundaryValue::Zero],
    }
}

fn tag(b: BoundaryValue) -> &'static str {
    match b {
        BoundaryValue::Zero => "zero",
        BoundaryValue::One => "one",
    }
}

fn barrier_json(b: &Barrier) -> Value {
    json!({
        "residual": b.residual,
        "refined_residual": b.refined_residual,
        "refined_gap": b.refined_gap,
        "min": b.min,
        "max": b.max,
        "alpha": b.alpha,
    })
}

fn find(ctx: &Ctx, which: BoundaryValue) -> anyhow::Result<Option<Barrier>> {
    let opts = BarrierOptions { n: ctx.s.grid, ..BarrierOptions::default() };
    Ok(match which {
        BoundaryValue::One => find_barrier_one(&ctx.nl, &ctx.drift, ctx.geometry, opts)?,
        BoundaryValue::Zero => find_barrier_zero(&ctx.nl, &ctx.drift, ctx.geometry, opts)?,
    })
}

fn barriers(ctx: &Ctx, portrait: bool) -> anyhow::Result<Value> {
    let r = ctx.geometry.inradius();
    let dim = ctx.geometry.dim();
    let mut entries = Vec::new();
    for which in boundaries(ctx.s.boundary) {
        let name = tag(which);
        if which == BoundaryValue::One && !ctx.drift.is_even() {
            entries.push(json!({"boundary": name, "found": false, "note": "drift is not radially symmetric"}));
            continue;
        }
        let found = find(ctx, which)?;
        let mut entry = json!({"boundary": name, "found": found.is_some()});
        if let Some(b) = &found {
            io::write_profile(ctx.file(&format!("barrier_{name}.csv"))?, &ctx.hash, "p", &b.profile)?;
            entry["barrier"] = barrier_json(b);
            if let Some(alpha) = b.alpha {
                let t = shoot_radial(&ctx.nl, &ctx.drift, alpha, dim, r, 1e-3 * r)?;
                io::write_trajectory(ctx.file(&format!("trajectory_{name}.csv"))?, &ctx.hash, &t)?;
                ctx.json(&format!("trajectory_{name}.events.json"), &serde_json::to_value(t.events)?)?;
            }
        }
        if portrait {
            ctx.text(&format!("phase_portrait_{name}.svg"), &phase_portrait(ctx, which, found.as_ref())?)?;
        }
        entries.push(entry);
    }
    Ok(Value::Array(entries))
}

fn level_set(nl: &BistableNonlinearity, level: f64, label: &str, color: &str) -> Vec<Series> {
    let upper: Vec<(f64, f64)> = (0..=400)
        .map(|k| {
            let p = k as f64 / 400.0;
            let g = 2.0 * (level - nl.antiderivative(p));
            (p, if g >= 0.0 { g.sqrt() } else { f64::NAN })
        })
        .collect();
    let lower = upper.iter().map(|(p, v)| (*p, -v)).collect();
    vec![Series::new(label, color, upper), Series::new(format!("{label} (v<0)"), color, lower).dashed()]
}

fn phase_portrait(ctx: &Ctx, which: BoundaryValue, barrier: Option<&Barrier>) -> anyhow::Result<String> {
    let nl = &ctx.nl;
    let theta = nl.theta();
    let r = ctx.geometry.inradius();
    let alphas: Vec<f64> = match which {
        BoundaryValue::One => [0.9, 0.5, 0.2, 0.1, 0.05].iter().map(|s| s * theta).collect(),
        BoundaryValue::Zero => vec![0.6, 0.7, 0.8, 0.9, 0.99],
    };
    let mut series = Vec::new();
    if ctx.drift.is_even() {
        for (k, a) in alphas.iter().enumerate() {
            let t = shoot_radial(nl, &ctx.drift, *a, ctx.geometry.dim(), r, 1e-3 * r)?;
            let pts = t.samples.iter().map(|s| (s.p, s.v)).collect();
            series.push(Series::new(format!("alpha={a:.4}"), PALETTE[k % PALETTE.len()], pts));
        }
    }
    if let Some(b) = barrier {
        let h = b.profile.grid.h();
        let v = &b.profile.values;
        let start = if b.profile.geometry().is_ball() { 0 } else { v.len() / 2 };
        let pts = (start..v.len() - 1).map(|i| (v[i], (v[i + 1] - v[i]) / h)).collect();
        series.push(Series::new("barrier", "black", pts));
    }
    series.extend(level_set(nl, nl.antiderivative(1.0), "E = F(1)", "red"));
    series.extend(level_set(nl, 0.0, "E = F(0)", "#0050d0"));
    Ok(line_plot(&format!("Phase portrait, boundary value {}", which.value()), "p", "p'", &series))
}

fn initial_profile(ctx: &Ctx, spec: &InitialSpec, seed: u64) -> anyhow::Result<GridProfile> {
    Ok(match spec {
        InitialSpec::Const { c } => GridProfile::constant(ctx.grid, *c),
        InitialSpec::Random { lo, hi } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = (0..ctx.grid.n).map(|_| rng.gen_range(*lo..=*hi)).collect();
            GridProfile::new(ctx.grid, v)?
        }
        InitialSpec::Barrier { boundary } => {
            let which = match boundary {
                Boundary::One => BoundaryValue::One,
                _ => BoundaryValue::Zero,
            };
            find(ctx, which)?
                .map(|b| b.profile)
                .ok_or_else(|| anyhow::anyhow!("no barrier with boundary value {} to seed the initial datum", which.value()))?
        }
        InitialSpec::File { path } => read_profile(ctx.grid, path)?,
    })
}

fn read_profile(grid: Grid, path: &PathBuf) -> anyhow::Result<GridProfile> {
    let bad = |msg: String| anyhow::Error::new(ConfigError(format!("{}: {msg}", path.display())));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut xs = Vec::new();
    let mut ps = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let parse = |i: usize| rec.get(i).and_then(|v| v.trim().parse::<f64>().ok());
        match (parse(0), parse(1)) {
            (Some(x), Some(p)) => {
                xs.push(x);
                ps.push(p);
            }
            _ => return Err(bad(format!("line {}: expected two numbers", k + 2))),
        }
    }
    if xs.len() < 2 || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("need at least two rows with increasing x".into()));
    }
    let interp = |x: f64| {
        let k = xs.partition_point(|v| *v <= x).clamp(1, xs.len() - 1);
        let t = ((x - xs[k - 1]) / (xs[k] - xs[k - 1])).clamp(0.0, 1.0);
        ps[k - 1] + t * (ps[k] - ps[k - 1])
    };
    let p = GridProfile::from_fn(grid, interp);
    if !p.is_proportion(0.0) {
        return Err(bad("values must lie in [0, 1]".into()));
    }
    Ok(p)
}

fn target_value(t: &str, theta: f64) -> f64 {
    match t {
        "0" => 0.0,
        "1" => 1.0,
        _ => theta,
    }
}

fn profile_plot(title: &str, profiles: &[(String, &GridProfile)]) -> String {
    let series: Vec<Series> = profiles
        .iter()
        .enumerate()
        .map(|(k, (label, p))| Series::new(label.clone(), PALETTE[k % PALETTE.len()], p.grid.nodes().into_iter().zip(p.values.iter().copied()).collect()))
        .collect();
    line_plot(title, "x", "p", &series)
}

fn simulate(ctx: &Ctx) -> anyhow::Result<Value> {
    if ctx.s.runs.is_empty() {
        anyhow::bail!(ConfigError("field `runs`: simulate needs at least one run".into()));
    }
    let solver = ParabolicSolver::new(ctx.grid, &ctx.drift, ctx.nl.clone())?;
    let dt = ctx.dt(&solver);
    let theta = ctx.nl.theta();
    let mut results = Vec::new();
    for (k, run) in ctx.s.runs.iter().enumerate() {
        let p0 = initial_profile(ctx, &run.initial, ctx.s.seed.wrapping_add(k as u64))?;
        let mut entry = json!({"name": run.name});
        match &run.control {
            ControlSpec::Staircase => {
                let cfg = StaircaseConfig { t_max: ctx.s.t_end, ..StaircaseConfig::default() };
                let rep = staircase_to_theta(&ctx.problem(ctx.drift.clone()), &p0, &cfg)?;
                let rows: Vec<Vec<f64>> = rep.controls.iter().map(|c| vec![c.t, c.left, c.right]).collect();
                io::write_table(ctx.file(&format!("controls_{}.csv", run.name))?, &ctx.hash, &["t", "left", "right"], &rows)?;
                io::write_profile(ctx.file(&format!("final_{}.csv", run.name))?, &ctx.hash, "p", &rep.final_state)?;
                ctx.json(&format!("legs_{}.json", run.name), &serde_json::to_value(&rep.plan.legs)?)?;
                ctx.text(
                    &format!("profile_{}.svg", run.name),
                    &profile_plot(&format!("{}: staircase", run.name), &[("initial".into(), &p0), ("final".into(), &rep.final_state)]),
                )?;
                entry["verdict"] = match rep.outcome {
                    StaircaseOutcome::Success { total_time, terminal_error } => {
                        json!({"status": "converged", "time": total_time, "residual_sup": terminal_error})
                    }
                    StaircaseOutcome::Failure { stage, reason } => json!({
                        "status": if reason == "barrier-to-0" { "blocked" } else { "failed" },
                        "time": null,
                        "residual_sup": rep.final_state.sup_distance_to(theta),
                        "detail": format!("{stage}: {reason}"),
                    }),
                };
            }
            control => {
                let sched = match control {
                    ControlSpec::Static { u } => ControlSchedule::Static(*u),
                    ControlSpec::Piecewise { steps } => ControlSchedule::Piecewise(steps.clone()),
                    ControlSpec::Staircase => unreachable!(),
                };
                let trace = solver.simulate(p0.clone(), &sched, ctx.s.t_end, dt, ctx.s.snapshot_every)?;
                io::write_snapshots(ctx.file(&format!("snapshots_{}.csv", run.name))?, &ctx.hash, &trace.snapshots)?;
                let rows: Vec<Vec<f64>> = trace.distances.iter().map(|d| vec![d.t, d.to_zero, d.to_theta, d.to_one]).collect();
                io::write_table(ctx.file(&format!("distances_{}.csv", run.name))?, &ctx.hash, &["t", "to_zero", "to_theta", "to_one"], &rows)?;
                let picks: Vec<(String, &GridProfile)> = pick(&trace.snapshots, 6).into_iter().map(|s| (format!("t={:.1}", s.t), &s.profile)).collect();
                ctx.text(&format!("profile_{}.svg", run.name), &profile_plot(&run.name, &picks))?;
                if let (Some(t), ControlSpec::Static { u }) = (&run.target, control) {
                    let a = target_value(t, theta);
                    entry["verdict"] = if (a - u).abs() > 1e-12 {
                        json!({"status": "skipped", "detail": "static control differs from target"})
                    } else {
                        match solver.asymptotic_verdict(p0, a, ctx.s.t_end, 1e-3, dt) {
                            Ok(Verdict::Converged { time }) => json!({"status": "converged", "time": time, "residual_sup": null}),
                            Ok(Verdict::Blocked { residual_sup, .. }) => json!({"status": "blocked", "time": null, "residual_sup": residual_sup}),
                            Err(Error::HorizonTooShort { .. }) => json!({"status": "indeterminate", "time": null, "residual_sup": null}),
                            Err(e) => return Err(e.into()),
                        }
                    };
                }
                let last = trace.last();
                entry["final_time"] = json!(last.t);
                entry["final_sup_to_target"] = json!(run.target.as_ref().map(|t| last.profile.sup_distance_to(target_value(t, theta))));
            }
        }
        ctx.json(&format!("verdict_{}.json", run.name), &entry)?;
        results.push(entry);
    }
    Ok(Value::Array(results))
}

fn pick<T>(items: &[T], m: usize) -> Vec<&T> {
    if items.len() <= m {
        return items.iter().collect();
    }
    (0..m).map(|k| &items[k * (items.len() - 1) / (m - 1)]).collect()
}

fn status_name(s: VerdictStatus) -> &'static str {
    match s {
        VerdictStatus::Converged => "converged",
        VerdictStatus::Blocked => "blocked",
        VerdictStatus::Indeterminate => "indeterminate",
        VerdictStatus::Failed => "failed",
    }
}

fn report(ctx: &Ctx) -> anyhow::Result<Value> {
    let initial = if ctx.s.initial_values.is_empty() { vec![0.0, 1.0] } else { ctx.s.initial_values.clone() };
    let cfg = ReportConfig { t_max: ctx.s.t_end, ..ReportConfig::default() };
    let rep = controllability_report(&ctx.problem(ctx.drift.clone()), &initial, &cfg)?;
    let verdicts: Vec<Value> = rep
        .verdicts
        .iter()
        .map(|v| {
            json!({
                "target": v.target,
                "initial": v.initial,
                "status": status_name(v.status),
                "time": v.time,
                "residual_sup": v.residual_sup,
                "detail": v.detail,
                "witness": v.witness.as_ref().map(barrier_json),
            })
        })
        .collect();
    for (k, v) in rep.verdicts.iter().enumerate() {
        if let Some(w) = &v.witness {
            io::write_profile(ctx.file(&format!("witness_{k}.csv"))?, &ctx.hash, "p", &w.profile)?;
        }
    }
    let value = json!({"all_converged": rep.all_converged(), "verdicts": verdicts});
    ctx.json("report.json", &value)?;
    Ok(value)
}

fn mintime(ctx: &Ctx) -> anyhow::Result<Value> {
    if ctx.s.sigmas.is_empty() {
        anyhow::bail!(ConfigError("field `sigmas`: mintime-scan needs at least one value".into()));
    }
    let horizons: Vec<f64> = if ctx.s.horizons.is_empty() { (1..=100).map(f64::from).collect() } else { ctx.s.horizons.clone() };
    let families = if ctx.s.families.is_empty() { vec![Family::GaussIn] } else { ctx.s.families.clone() };
    let cfg = StaircaseConfig::default();
    let base = ctx.problem(DriftField::homogeneous());
    let mut out = Vec::new();
    let mut series = Vec::new();
    for (k, fam) in families.iter().enumerate() {
        let family = match fam {
            Family::GaussIn => DriftFamily::GaussIn,
            Family::GaussOut => DriftFamily::GaussOut,
            Family::Sinusoidal => DriftFamily::Sinusoidal,
            Family::AbsExp => anyhow::bail!(ConfigError("field `families`: abs_exp is not a minimal-time family".into())),
        };
        let res = mintime_scan(&family, &ctx.s.sigmas, &base, &horizons, &cfg)?;
        let rows: Vec<Vec<f64>> = res.iter().map(|r| vec![r.parameter, r.t_min]).collect();
        io::write_table(ctx.file(&format!("mintime_{}.csv", family.name()))?, &ctx.hash, &["parameter", "T_min"], &rows)?;
        series.push(Series::new(family.name(), PALETTE[k % PALETTE.len()], rows.iter().map(|r| (r[0].ln(), if r[1].is_finite() { r[1] } else { f64::NAN })).collect()));
        out.push(json!({
            "family": family.name(),
            "results": res.iter().map(|r| json!({
                "parameter": r.parameter,
                "t_min": if r.t_min.is_finite() { json!(r.t_min) } else { json!("inf") },
                "strategy": r.strategy,
                "monotonicity_violations": r.monotonicity_violations,
            })).collect::<Vec<_>>(),
        }));
    }
    ctx.text("mintime.svg", &line_plot("Minimal control time to theta", "ln sigma", "T_min", &series))?;
    let value = Value::Array(out);
    ctx.json("mintime.json", &value)?;
    Ok(value)
}

fn eigen(ctx: &Ctx) -> anyhow::Result<Value> {
    let n = ctx.s.grid;
    let plain = dirichlet_lambda1(ctx.geometry, n)?;
    let weighted = drift_lambda1(&ctx.drift, ctx.geometry, n)?;
    io::write_profile(ctx.file("eigen.csv")?, &ctx.hash, "eigenprofile", &weighted.eigenprofile)?;
    let cert = uniqueness_certificate(&ctx.nl, &ctx.drift, ctx.geometry, CertificateKind::ZeroBc, n)?;
    let general = uniqueness_certificate(&ctx.nl, &ctx.drift, ctx.geometry, CertificateKind::General, n)?;
    ctx.text("eigen.svg", &profile_plot("First eigenfunction", &[("weighted".into(), &weighted.eigenprofile), ("Dirichlet".into(), &plain.eigenprofile)]))?;
    let value = json!({
        "lambda": weighted.lambda,
        "n": n,
        "residual": weighted.residual,
        "dirichlet_lambda": plain.lambda,
        "certificate_zero_bc": {"holds": cert.holds, "lhs": cert.lhs, "rhs": cert.rhs},
        "certificate_general": {"holds": general.holds, "lhs": general.lhs, "rhs": general.rhs},
        "lipschitz": cert.lipschitz,
        "sup_fprime": cert.sup_fprime,
    });
    ctx.json("eigen.json", &value)?;
    Ok(value)
}

fn energy(ctx: &Ctx) -> anyhow::Result<Value> {
    let delta = ctx.s.delta.unwrap_or(0.2 * ctx.geometry.inradius());
    let eta = plateau_ramp_eta(ctx.grid, delta)?;
    let rep = energy_sigma(&ctx.nl, &ctx.drift, &eta)?;
    let th = negative_energy_sigma_threshold(&ctx.nl, ctx.drift.density(), ctx.grid, delta)?;
    let m = minimize_energy(&ctx.nl, &ctx.drift, &eta, 20_000)?;
    io::write_profile(ctx.file("minimizer.csv")?, &ctx.hash, "p", &m.profile)?;
    let eps: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
    let dim = ctx.geometry.dim();
    let ratios = laplace_ratio_check(1.0, dim, |_| 1.0, &eps)?;
    let rows: Vec<Vec<f64>> = eps.iter().zip(&ratios).map(|(e, r)| vec![*e, *r]).collect();
    io::write_table(ctx.file("laplace_ratio.csv")?, &ctx.hash, &["eps", "ratio"], &rows)?;
    let value = json!({
        "sigma": ctx.drift.sigma(),
        "value": rep.value,
        "gradient_part": rep.gradient_part,
        "potential_part": rep.potential_part,
        "threshold": th,
        "minimizer": {"energy": m.energy.value, "residual": m.residual, "iterations": m.iterations, "monotone": m.is_monotone()},
        "laplace_limit": laplace_limit(1.0, dim),
    });
    ctx.json("energy.json", &value)?;
    Ok(value)
}

fn transform_check(ctx: &Ctx) -> anyhow::Result<Value> {
    let density = ctx.s.infection_density()?;
    let map = build_map(&density)?;
    let rows: Vec<Vec<f64>> = (0..=200)
        .map(|k| {
            let p = k as f64 / 200.0;
            let q = map.forward(p);
            vec![p, q, tilde_f(&map, &ctx.nl, q).value]
        })
        .collect();
    io::write_table(ctx.file("transform.csv")?, &ctx.hash, &["p", "N(p)", "f_tilde(N(p))"], &rows)?;
    let reaction = TransformedReaction::new(map.clone(), ctx.nl.clone());
    let validation = reaction.validate().map(|_| "ok".to_string()).unwrap_or_else(|e| e.to_string());
    let l = ctx.geometry.inradius();
    let p0 = GridProfile::from_fn(ctx.grid, |x| 0.9 * (std::f64::consts::PI * x / (2.0 * l)).cos().powi(4));
    let dt = ctx.s.dt.unwrap_or(0.01);
    let rep = equivalence_check(&ctx.nl, &density, &p0, 0.0, ctx.s.t_end, dt)?;
    let value = json!({
        "theta_image": map.forward(ctx.nl.theta()),
        "validation": validation,
        "discrepancy": rep.discrepancy,
        "dt": rep.dt,
    });
    ctx.json("transform.json", &value)?;
    Ok(value)
}
