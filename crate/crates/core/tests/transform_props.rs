use geneflow::transform::*;
use geneflow::*;
use proptest::prelude::*;

fn nl() -> BistableNonlinearity {
    BistableNonlinearity::cubic(0.33).unwrap()
}

fn smooth_density(a: f64, b: f64, k: f64) -> InfectionDensity {
    let samples = (0..129).map(|i| {
        let p = i as f64 / 128.0;
        (a * (k * std::f64::consts::PI * p).sin() + b * p).exp()
    });
    InfectionDensity::from_samples(samples.collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn random_densities_give_bistable_reactions(a in -0.15f64..0.15, b in -0.15f64..0.15, k in 1.0f64..3.0) {
        let map = build_map(&smooth_density(a, b, k)).unwrap();
        let r = TransformedReaction::new(map.clone(), nl());
        r.validate().unwrap();
        prop_assert!((r.theta() - map.forward(0.33)).abs() < 1e-15);
    }

    #[test]
    fn inverse_round_trip(a in -0.5f64..0.5, b in -0.5f64..0.5, p in 0.0f64..1.0) {
        let map = build_map(&smooth_density(a, b, 2.0)).unwrap();
        prop_assert!((map.inverse(map.forward(p)) - p).abs() < 1e-12);
    }

    #[test]
    fn normalized_square_integrates_to_one(a in 0.1f64..5.0, b in 0.0f64..5.0) {
        let map = build_map(&InfectionDensity::affine(a, b).unwrap()).unwrap();
        let integral = geneflow::numerics::simpson(|p| map.density(p).powi(2), 0.0, 1.0, 4096);
        prop_assert!((integral - 1.0).abs() < 1e-10);
        prop_assert!((map.forward(1.0) - 1.0).abs() < 1e-15);
    }
}

#[test]
fn scale_invariance() {
    let base = smooth_density(0.1, 0.2, 2.0);
    let map = build_map(&base).unwrap();
    for lambda in [0.1, 10.0] {
        let scaled = build_map(&base.scaled(lambda).unwrap()).unwrap();
        for (x, y) in map.table().iter().zip(scaled.table()) {
            assert!((x - y).abs() < 1e-14, "{}", (x - y).abs());
        }
    }
}

#[test]
fn theta_image_closed_form() {
    let map = build_map(&InfectionDensity::affine(1.0, 1.0).unwrap()).unwrap();
    assert!((map.forward(0.33) - (1.33f64.powi(3) - 1.0) / 7.0).abs() < 1e-10);
}

#[test]
fn equilibria_are_conjugate() {
    let density = InfectionDensity::affine(1.0, 1.0).unwrap();
    let map = build_map(&density).unwrap();
    let grid = Grid::new(DomainGeometry::interval(1.0).unwrap(), 51).unwrap();
    for a in [0.0, 0.33, 1.0] {
        let rep = equivalence_check(&nl(), &density, &GridProfile::constant(grid, a), a, 2.0, 0.01).unwrap();
        assert!(rep.p_final.sup_distance_to(a) < 1e-12);
        assert!(rep.q_final.sup_distance_to(map.forward(a)) < 1e-12);
    }
}

#[test]
fn discrepancy_converges_at_second_order() {
    let density = InfectionDensity::affine(1.0, 1.0).unwrap();
    let disc: Vec<f64> = (0..3)
        .map(|k| {
            let grid = Grid::new(DomainGeometry::interval(1.0).unwrap(), 100 * (1 << k) + 1).unwrap();
            let p0 = GridProfile::from_fn(grid, |x| 0.9 * (std::f64::consts::PI * x / 2.0).cos().powi(4));
            equivalence_check(&nl(), &density, &p0, 0.0, 2.0, 0.02 / (1 << k) as f64).unwrap().discrepancy
        })
        .collect();
    for w in disc.windows(2) {
        assert!((3.5..=4.5).contains(&(w[0] / w[1])), "{disc:?}");
    }
}

#[test]
fn clamp_flag() {
    let map = build_map(&InfectionDensity::constant(1.0).unwrap()).unwrap();
    assert!(tilde_f(&map, &nl(), -0.1).clamped);
    assert!(!tilde_f(&map, &nl(), 0.5).clamped);
}

#[test]
fn invalid_density() {
    assert!(matches!(InfectionDensity::from_samples(vec![1.0, 0.0, 1.0]), Err(Error::InvalidN(_))));
}
