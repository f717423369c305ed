use geneflow::dynamics::*;
use geneflow::steady::{find_barrier_zero, BarrierOptions};
use geneflow::*;
use proptest::prelude::*;

fn nl() -> BistableNonlinearity {
    BistableNonlinearity::cubic(0.33).unwrap()
}

fn drift_strategy() -> impl Strategy<Value = DriftField> {
    (0usize..4, 0.2f64..40.0).prop_map(|(k, s)| match k {
        0 => DriftField::homogeneous(),
        1 => DriftField::gauss_out(s).unwrap(),
        2 => DriftField::gauss_in(s).unwrap(),
        _ => DriftField::sinusoidal(s).unwrap(),
    })
}

fn geometry_strategy() -> impl Strategy<Value = DomainGeometry> {
    prop_oneof![
        (0.5f64..5.0).prop_map(|l| DomainGeometry::interval(l).unwrap()),
        (0.5f64..5.0, 2usize..4).prop_map(|(r, d)| DomainGeometry::ball(r, d).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn comparison_and_invariant_region(
        drift in drift_strategy(),
        geometry in geometry_strategy(),
        seed in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 41),
        u in (0.0f64..1.0, 0.0f64..1.0),
        dt_frac in 0.05f64..0.99,
    ) {
        let grid = Grid::new(geometry, 41).unwrap();
        let solver = ParabolicSolver::new(grid, &drift, nl()).unwrap();
        let dt = dt_frac / 0.67;
        let lo: Vec<f64> = seed.iter().map(|(a, b)| a.min(*b)).collect();
        let hi: Vec<f64> = seed.iter().map(|(a, b)| a.max(*b)).collect();
        let (ul, uh) = (u.0.min(u.1), u.0.max(u.1));
        let mut p = solver.initial_state(GridProfile::new(grid, lo).unwrap()).unwrap();
        let mut q = solver.initial_state(GridProfile::new(grid, hi).unwrap()).unwrap();
        for _ in 0..100 {
            p = solver.step(&p, ul, ul, dt).unwrap();
            q = solver.step(&q, uh, uh, dt).unwrap();
            for (a, b) in p.profile.values.iter().zip(&q.profile.values) {
                prop_assert!(*a <= b + 1e-9);
            }
            for s in [&p, &q] {
                prop_assert!(s.profile.min() >= -1e-9 && s.profile.max() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn even_data_stay_even(sigma in 0.2f64..40.0, u in 0.0f64..1.0, amp in 0.0f64..1.0) {
        let grid = Grid::new(DomainGeometry::interval(2.0).unwrap(), 81).unwrap();
        let solver = ParabolicSolver::new(grid, &DriftField::gauss_out(sigma).unwrap(), nl()).unwrap();
        let p0 = GridProfile::from_fn(grid, |x| amp * (1.0 - (x / 2.0).powi(2)) + u * (x / 2.0).powi(2));
        let trace = solver.simulate(p0, &ControlSchedule::Static(u), 5.0, solver.default_dt(), 1.0).unwrap();
        for s in &trace.snapshots {
            let v = &s.profile.values;
            let asym = (0..v.len()).map(|i| (v[i] - v[v.len() - 1 - i]).abs()).fold(0.0, f64::max);
            prop_assert!(asym < 1e-10);
        }
    }
}

#[test]
fn barrier_is_fixed_point() {
    let nl = nl();
    let drift = DriftField::gauss_out(40.0).unwrap();
    let geometry = DomainGeometry::interval(10.0).unwrap();
    let b = find_barrier_zero(&nl, &drift, geometry, BarrierOptions::default()).unwrap().unwrap();
    let solver = ParabolicSolver::new(b.profile.grid, &drift, nl).unwrap();
    let dt = solver.default_dt();
    let mut s = solver.initial_state(b.profile.clone()).unwrap();
    for _ in 0..100 {
        s = solver.step(&s, 0.0, 0.0, dt).unwrap();
    }
    assert!(s.profile.sup_distance(&b.profile) < 1e-9);
}

#[test]
fn blocked_run_dominates_witness() {
    let nl = nl();
    let drift = DriftField::homogeneous();
    let grid = Grid::new(DomainGeometry::interval(6.0).unwrap(), 201).unwrap();
    let b = find_barrier_zero(&nl, &drift, grid.geometry, BarrierOptions { n: 201, ..Default::default() }).unwrap().unwrap();
    let solver = ParabolicSolver::new(grid, &drift, nl).unwrap();
    let trace = solver.simulate(GridProfile::constant(grid, 1.0), &ControlSchedule::Static(0.0), 100.0, solver.default_dt(), 1.0).unwrap();
    for s in &trace.snapshots {
        assert!(s.profile.values.iter().zip(&b.profile.values).all(|(p, w)| *p >= w - 1e-6));
    }
    let v = solver.asymptotic_verdict(GridProfile::constant(grid, 1.0), 0.0, 200.0, 1e-3, solver.default_dt()).unwrap();
    assert!(matches!(v, Verdict::Blocked { .. }));
}

#[test]
fn short_interval_converges_to_zero() {
    let grid = Grid::new(DomainGeometry::interval(1.0).unwrap(), 101).unwrap();
    let solver = ParabolicSolver::new(grid, &DriftField::homogeneous(), nl()).unwrap();
    let v = solver.asymptotic_verdict(GridProfile::constant(grid, 1.0), 0.0, 100.0, 1e-3, solver.default_dt()).unwrap();
    assert!(matches!(v, Verdict::Converged { .. }));
}

#[test]
fn controls_are_logged_per_step_and_clamped() {
    let grid = Grid::new(DomainGeometry::interval(1.0).unwrap(), 41).unwrap();
    let solver = ParabolicSolver::new(grid, &DriftField::homogeneous(), nl()).unwrap();
    let sched = ControlSchedule::Piecewise(vec![(0.0, -0.5), (0.5, 2.0)]);
    let trace = solver.simulate(GridProfile::constant(grid, 0.5), &sched, 1.0, 0.01, 0.1).unwrap();
    assert_eq!(trace.controls.len(), 100);
    assert!(trace.controls.iter().all(|c| (0.0..=1.0).contains(&c.left) && (0.0..=1.0).contains(&c.right)));
    assert_eq!(trace.controls[10].left, 0.0);
    assert_eq!(trace.controls[90].right, 1.0);
    assert_eq!(trace.snapshots.len(), 11);
}

#[test]
fn horizon_too_short() {
    let grid = Grid::new(DomainGeometry::interval(6.0).unwrap(), 101).unwrap();
    let solver = ParabolicSolver::new(grid, &DriftField::homogeneous(), nl()).unwrap();
    let e = solver.asymptotic_verdict(GridProfile::constant(grid, 1.0), 0.0, 0.5, 1e-3, 0.01).unwrap_err();
    assert!(matches!(e, Error::HorizonTooShort { .. }));
}
