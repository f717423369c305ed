use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use geneflow::control::*;
use geneflow::dynamics::{ControlSchedule, ParabolicSolver, Verdict};
use geneflow::energy::*;
use geneflow::operator::EllipticOperator;
use geneflow::spectral::*;
use geneflow::steady::*;
use geneflow::transform::*;
use geneflow::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn nl() -> BistableNonlinearity {
    BistableNonlinearity::cubic(0.33).unwrap()
}

fn interval(l: f64, n: usize) -> Grid {
    Grid::new(DomainGeometry::interval(l).unwrap(), n).unwrap()
}

fn within(elapsed: Duration, limit: f64) -> Check {
    ensure(elapsed.as_secs_f64() < limit, format!("{:.2}s of {limit}s", elapsed.as_secs_f64()))
}

/// `E - F(b)` at both ends of the barrier must have opposite signs.
fn crosses_level(nl: &BistableNonlinearity, b: &Barrier) -> bool {
    let p = &b.profile.values;
    let n = p.len();
    let h = b.profile.grid.h();
    let level = nl.antiderivative(b.boundary_value.value());
    let mid = n / 2;
    let start = phase_energy(nl, p[mid], 0.0) - level;
    let v_end = (3.0 * p[n - 1] - 4.0 * p[n - 2] + p[n - 3]) / (2.0 * h);
    let end = phase_energy(nl, p[n - 1], v_end) - level;
    start * end < 0.0
}

fn barrier_ok(nl: &BistableNonlinearity, b: &Option<Barrier>, label: &str) -> Check {
    match b {
        None => Err(format!("{label}: none found")),
        Some(b) => {
            let dev = b.profile.sup_distance_to(b.boundary_value.value());
            let cross = crosses_level(nl, b);
            ensure(
                b.residual < 1e-6 && dev > 0.1 && cross,
                format!("{label}: residual {:.2e}, deviation {dev:.3}, level crossing {cross}", b.residual),
            )
        }
    }
}

fn c1_barriers() -> Check {
    let t0 = Instant::now();
    let nl = nl();
    let drift = DriftField::gauss_out(40.0).unwrap();
    let g = DomainGeometry::interval(2.5).unwrap();
    let one = find_barrier_one(&nl, &drift, g, BarrierOptions::default()).map_err(|e| e.to_string())?;
    let zero = find_barrier_zero(&nl, &drift, g, BarrierOptions::default()).map_err(|e| e.to_string())?;
    let a = barrier_ok(&nl, &one, "to 1");
    let b = barrier_ok(&nl, &zero, "to 0");
    let t = within(t0.elapsed(), 10.0);
    let msg = format!("{}; {}; {}", a.clone().unwrap_or_else(|e| e), b.clone().unwrap_or_else(|e| e), t.clone().unwrap_or_else(|e| e));
    ensure(a.is_ok() && b.is_ok() && t.is_ok(), msg)
}

fn c2_blocking() -> Check {
    let t0 = Instant::now();
    let nl = nl();
    let drift = DriftField::gauss_out(40.0).unwrap();
    let grid = interval(2.5, 401);
    let solver = ParabolicSolver::new(grid, &drift, nl.clone()).map_err(|e| e.to_string())?;
    let dt = solver.default_dt();
    let verdict = |c: f64, a: f64| solver.asymptotic_verdict(GridProfile::constant(grid, c), a, 200.0, 1e-3, dt);
    let to0 = verdict(1.0, 0.0).map_err(|e| e.to_string())?;
    let to1 = verdict(0.0, 1.0).map_err(|e| e.to_string())?;
    let blocked = |v: &Verdict| matches!(v, Verdict::Blocked { .. });
    let name = |v: &Verdict| if blocked(v) { "blocked" } else { "converged" };
    let witness = find_barrier_zero(&nl, &drift, grid.geometry, BarrierOptions { n: 401, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let dominated = match &witness {
        None => false,
        Some(w) => {
            let trace = solver
                .simulate(GridProfile::constant(grid, 1.0), &ControlSchedule::Static(0.0), 200.0, dt, 1.0)
                .map_err(|e| e.to_string())?;
            trace.snapshots.iter().all(|s| s.profile.values.iter().zip(&w.profile.values).all(|(p, q)| *p >= q - 1e-6))
        }
    };
    let t = within(t0.elapsed(), 30.0);
    ensure(
        blocked(&to0) && blocked(&to1) && dominated && t.is_ok(),
        format!(
            "p0=1 -> 0: {}; p0=0 -> 1: {}; barrier-to-0 witness {}; dominance {dominated}; {}",
            name(&to0),
            name(&to1),
            if witness.is_some() { "found" } else { "absent" },
            t.unwrap_or_else(|e| e)
        ),
    )
}

fn c3_spectral() -> Check {
    let mut msgs = Vec::new();
    let mut ok = true;
    for l in [1.0, 2.5] {
        let g = DomainGeometry::interval(l).unwrap();
        let exact = PI * PI / (4.0 * l * l);
        let err = |n: usize| (dirichlet_lambda1(g, n).unwrap().lambda - exact).abs() / exact;
        let e512 = err(512);
        let (e1, e2) = (err(129), err(257));
        let slope = (e1 / e2).log2();
        ok &= e512 < 1e-4 && (1.8..=2.2).contains(&slope);
        msgs.push(format!("L={l}: rel err {e512:.2e}, order {slope:.3}"));
    }
    ensure(ok, msgs.join("; "))
}

fn c4_sweep() -> Check {
    let nl = nl();
    let drift = DriftField::homogeneous();
    let ls: Vec<f64> = (0..20).map(|k| 0.5 + 3.5 * k as f64 / 19.0).collect();
    let mut mismatches = Vec::new();
    let mut cert_cross = f64::NAN;
    let mut barrier_cross = f64::NAN;
    let mut prev_cert = true;
    for &l in &ls {
        let g = DomainGeometry::interval(l).unwrap();
        let cert = uniqueness_certificate(&nl, &drift, g, CertificateKind::ZeroBc, 401).map_err(|e| e.to_string())?;
        let barrier = find_barrier_zero(&nl, &drift, g, BarrierOptions::default()).map_err(|e| e.to_string())?;
        if cert.holds == barrier.is_some() {
            mismatches.push(format!("{l:.2}"));
        }
        if prev_cert && !cert.holds {
            cert_cross = l;
        }
        if barrier.is_some() && barrier_cross.is_nan() {
            barrier_cross = l;
        }
        prev_cert = cert.holds;
    }
    let predicted = PI / (2.0 * 0.67f64.sqrt());
    let cross_ok = (cert_cross - predicted).abs() <= 0.1 * predicted + 3.5 / 19.0;
    ensure(
        mismatches.is_empty() && cross_ok,
        format!(
            "certificate fails from L={cert_cross:.3} (predicted {predicted:.3}); first barrier at L={barrier_cross:.3}; iff violated at L in [{}]",
            mismatches.join(", ")
        ),
    )
}

fn c5_unblocking() -> Check {
    let t0 = Instant::now();
    let g = DomainGeometry::interval(6.0).unwrap();
    let mut msgs = Vec::new();
    let mut ok = true;
    for sigma in [1.0, 0.5] {
        let lam = |s: f64| drift_lambda1(&DriftField::gauss_in(s).unwrap(), g, 1024).unwrap().lambda;
        let ratio = lam(sigma / 2.0) / lam(sigma);
        ok &= (1.8..=2.2).contains(&ratio);
        msgs.push(format!("sigma={sigma}: ratio {ratio:.4}"));
    }
    let nl = nl();
    for sigma in [0.25, 0.125] {
        for l in [1.0, 2.5, 4.0] {
            let problem = ControlProblem { nl: nl.clone(), drift: DriftField::gauss_in(sigma).unwrap(), grid: interval(l, 321), dt: None };
            let rep = controllability_report(&problem, &[0.0, 1.0], &ReportConfig::default()).map_err(|e| e.to_string())?;
            if !rep.all_converged() {
                ok = false;
                let bad: Vec<String> = rep
                    .verdicts
                    .iter()
                    .filter(|v| v.status != VerdictStatus::Converged)
                    .map(|v| format!("{:?} from {} ({:?} {})", v.target, v.initial, v.status, v.detail))
                    .collect();
                msgs.push(format!("sigma={sigma} L={l}: {}", bad.join(", ")));
            }
        }
    }
    msgs.push("all reports converged".into());
    let t = within(t0.elapsed(), 60.0);
    ok &= t.is_ok();
    msgs.push(t.unwrap_or_else(|e| e));
    ensure(ok, msgs.join("; "))
}

fn c6_ncl2() -> Check {
    let nl = nl();
    let drift = DriftField::gauss_out(40.0).unwrap();
    let alphas = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let mut radii = Vec::new();
    for a in alphas {
        let t = shoot_radial(&nl, &drift, a, 1, 50.0, 1e-2).map_err(|e| e.to_string())?;
        radii.push(t.events.r_theta.unwrap_or(f64::INFINITY));
    }
    let increasing = radii.windows(2).all(|w| w[1] > w[0] + 1e-6 && w[1].is_finite());
    ensure(increasing, format!("r_theta = {radii:.4?}"))
}

fn c7_energy() -> Check {
    let nl = nl();
    let density = LogDensity::Gaussian { kappa: 1.0 };
    let grid = interval(2.5, 401);
    let delta = 0.5;
    let th = negative_energy_sigma_threshold(&nl, &density, grid, delta).map_err(|e| e.to_string())?;
    if th.status != ThresholdStatus::Found {
        return Err(format!("threshold status {:?}", th.status));
    }
    let s = th.sigma_star;
    let eta = plateau_ramp_eta(grid, delta).unwrap();
    let e = |sigma: f64| energy_sigma(&nl, &DriftField::new(density.clone(), sigma).unwrap(), &eta).unwrap().value;
    let (below, above) = (e(s / 2.0), e(2.0 * s));
    let m = minimize_energy(&nl, &DriftField::new(density.clone(), s / 2.0).unwrap(), &eta, 20_000).map_err(|e| e.to_string())?;
    ensure(
        below < 0.0 && above > 0.0 && m.energy.value < 0.0 && m.residual < 1e-5,
        format!(
            "sigma* = {s:.4}, E(sigma*/2) = {below:.4e}, E(2 sigma*) = {above:.4e}, minimizer energy {:.4e}, residual {:.2e}",
            m.energy.value, m.residual
        ),
    )
}

fn c8_laplace() -> Check {
    let r = laplace_ratio_check(1.0, 1, |_| 1.0, &[1e-2, 1e-3, 1e-4]).map_err(|e| e.to_string())?;
    let target = PI.sqrt() / 2.0;
    let rel = (r[2] - target).abs() / target;
    ensure(rel < 0.01, format!("ratio {:.6} vs {target:.6}, rel err {rel:.2e}", r[2]))
}

fn c9_transform() -> Check {
    let nl = nl();
    let density = InfectionDensity::affine(1.0, 1.0).unwrap();
    let mut disc = Vec::new();
    for lvl in 0..3u32 {
        let n = 100 * 2usize.pow(lvl) + 1;
        let grid = interval(1.0, n);
        let p0 = GridProfile::from_fn(grid, |x| 0.9 * (PI * x / 2.0).cos().powi(4));
        let rep = equivalence_check(&nl, &density, &p0, 0.0, 2.0, 0.02 / 2f64.powi(lvl as i32)).map_err(|e| e.to_string())?;
        disc.push(rep.discrepancy);
    }
    let ratios: Vec<f64> = disc.windows(2).map(|w| w[0] / w[1]).collect();
    let map = build_map(&density).map_err(|e| e.to_string())?;
    let theta_err = (map.forward(0.33) - (1.33f64.powi(3) - 1.0) / 7.0).abs();
    ensure(
        ratios.iter().all(|r| (3.5..=4.5).contains(r)) && theta_err < 1e-10,
        format!("discrepancies {disc:?}, ratios {ratios:.3?}, |N(theta) - closed form| = {theta_err:.1e}"),
    )
}

fn c10_control() -> Check {
    let t0 = Instant::now();
    let nl = nl();
    let l1 = ControlProblem { nl: nl.clone(), drift: DriftField::homogeneous(), grid: interval(1.0, 101), dt: None };
    let rep = staircase_to_theta(&l1, &GridProfile::constant(l1.grid, 1.0), &StaircaseConfig::default()).map_err(|e| e.to_string())?;
    let admissible = rep.controls.iter().all(|c| (0.0..=1.0).contains(&c.left) && (0.0..=1.0).contains(&c.right));
    let base = ControlProblem { nl, drift: DriftField::homogeneous(), grid: interval(2.5, 101), dt: None };
    let horizons: Vec<f64> = (1..=100).map(f64::from).collect();
    let sigmas = [40.0, 16.0, 8.0, 4.0];
    let cfg = StaircaseConfig::default();
    let t_in: Vec<f64> = mintime_scan(&DriftFamily::GaussIn, &sigmas, &base, &horizons, &cfg)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|r| r.t_min)
        .collect();
    let t_out: Vec<f64> = mintime_scan(&DriftFamily::GaussOut, &sigmas, &base, &horizons, &cfg)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|r| r.t_min)
        .collect();
    let decreasing = t_in.iter().all(|t| t.is_finite()) && t_in.windows(2).all(|w| w[1] < w[0]);
    let tail = t_out.last().is_some_and(|t| t.is_infinite()) && t_out.first().is_some_and(|t| t.is_finite());
    let t = within(t0.elapsed(), 300.0);
    ensure(
        rep.outcome.is_success() && admissible && decreasing && tail && t.is_ok(),
        format!(
            "staircase L=1: {:?}, controls in [0,1]: {admissible}; gauss_in T_min {t_in:?}; gauss_out T_min {t_out:?}; {}",
            rep.outcome,
            t.unwrap_or_else(|e| e)
        ),
    )
}

fn c11_invariants() -> Check {
    let nl = nl();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let drift = DriftField::gauss_out(2.0).unwrap();
    let grid = interval(2.5, 101);
    let solver = ParabolicSolver::new(grid, &drift, nl.clone()).map_err(|e| e.to_string())?;
    let dt = solver.default_dt();
    let mut order_violations = 0;
    let mut region_violations = 0;
    for _ in 0..50 {
        let lo: Vec<f64> = (0..grid.n).map(|_| rng.gen_range(0.0..0.8)).collect();
        let hi: Vec<f64> = lo.iter().map(|v| v + rng.gen_range(0.0..0.2)).collect();
        let u_lo = rng.gen_range(0.0..0.8);
        let u_hi = u_lo + rng.gen_range(0.0..0.2);
        let mut a = solver.initial_state(GridProfile::new(grid, lo).unwrap()).map_err(|e| e.to_string())?;
        let mut b = solver.initial_state(GridProfile::new(grid, hi).unwrap()).map_err(|e| e.to_string())?;
        for _ in 0..200 {
            a = solver.step(&a, u_lo, u_lo, dt).map_err(|e| e.to_string())?;
            b = solver.step(&b, u_hi, u_hi, dt).map_err(|e| e.to_string())?;
            if a.profile.values.iter().zip(&b.profile.values).any(|(x, y)| x > &(y + 1e-12)) {
                order_violations += 1;
                break;
            }
            if [&a, &b].iter().any(|s| s.profile.min() < -1e-12 || s.profile.max() > 1.0 + 1e-12) {
                region_violations += 1;
                break;
            }
        }
    }

    let wide = interval(10.0, 201);
    let min_drift = DriftField::homogeneous();
    let eta = plateau_ramp_eta(wide, 2.5).unwrap();
    let m = minimize_energy(&nl, &min_drift, &eta, 20_000).map_err(|e| e.to_string())?;
    let wide_solver = ParabolicSolver::new(wide, &min_drift, nl.clone()).map_err(|e| e.to_string())?;
    let wdt = wide_solver.default_dt();
    let mut s = wide_solver.initial_state(m.profile.clone()).map_err(|e| e.to_string())?;
    for _ in 0..10 {
        s = wide_solver.step(&s, 0.0, 0.0, wdt).map_err(|e| e.to_string())?;
    }
    let fixed_gap = s.profile.sup_distance(&m.profile);
    let op = EllipticOperator::new(wide, &min_drift).map_err(|e| e.to_string())?;
    let fixed_ok = m.residual < 1e-8 && fixed_gap < 1e-6 && m.profile.max() > 0.1 && op.residual(&nl, &m.profile.values) < 1e-8;

    let traj = shoot_radial(&nl, &DriftField::gauss_out(5.0).unwrap(), 0.9, 2, 4.0, 1e-3).map_err(|e| e.to_string())?;
    let drift5 = DriftField::gauss_out(5.0).unwrap();
    let damping = |r: f64| drift5.coefficient(r) + 1.0 / r;
    let mut law_err: f64 = 0.0;
    let mut variation: f64 = 0.0;
    for w in traj.samples.windows(2).skip(1) {
        let (a, b) = (w[0], w[1]);
        let de = phase_energy(&nl, b.p, b.v) - phase_energy(&nl, a.p, a.v);
        let mid = 0.5 * (a.r + b.r);
        let vm = traj.value_at(mid).map(|x| x.1).unwrap_or(0.5 * (a.v + b.v));
        let rhs = -(b.r - a.r) / 6.0 * (damping(a.r) * a.v * a.v + 4.0 * damping(mid) * vm * vm + damping(b.r) * b.v * b.v);
        law_err += (de - rhs).abs();
        variation += de.abs();
    }
    let law_rel = law_err / variation.max(1e-300);

    ensure(
        order_violations == 0 && region_violations == 0 && fixed_ok && law_rel < 1e-4,
        format!(
            "comparison violations {order_violations}/50, region violations {region_violations}/50, minimizer residual {:.1e} drift under flow {fixed_gap:.1e}, phase-energy law rel err {law_rel:.1e}",
            m.residual
        ),
    )
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("1 barriers for the outward Gaussian drift on L=2.5", c1_barriers),
        ("2 blocking under static controls", c2_blocking),
        ("3 Dirichlet eigenvalue accuracy and order", c3_spectral),
        ("4 certificate iff no barrier to 0", c4_sweep),
        ("5 unblocking scaling and controllability", c5_unblocking),
        ("6 r_theta strictly increasing as alpha decreases", c6_ncl2),
        ("7 negative-energy threshold and minimizer", c7_energy),
        ("8 Laplace ratio limit", c8_laplace),
        ("9 gene-flow equivalence convergence", c9_transform),
        ("10 staircase and minimal-time trends", c10_control),
        ("11 invariant suite", c11_invariants),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {name}: {msg} [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
