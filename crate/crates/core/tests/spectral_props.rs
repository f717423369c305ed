use std::f64::consts::PI;

use geneflow::operator::EllipticOperator;
use geneflow::spectral::*;
use geneflow::steady::{find_barrier_zero, BarrierOptions};
use geneflow::*;
use proptest::prelude::*;

fn interval(l: f64) -> DomainGeometry {
    DomainGeometry::interval(l).unwrap()
}

#[test]
fn richardson_slope_is_two() {
    let ns = [64usize, 128, 256, 512];
    let exact = PI * PI / 4.0;
    let errs: Vec<f64> = ns.iter().map(|n| (dirichlet_lambda1(interval(1.0), *n).unwrap().lambda - exact).abs()).collect();
    // Least-squares slope of log(err) against log(n).
    let xs: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((-2.2..=-1.8).contains(&slope), "{slope}");
}

#[test]
fn ball_eigenvalue() {
    let r = dirichlet_lambda1(DomainGeometry::ball(PI, 3).unwrap(), 1024).unwrap();
    assert!((r.lambda - 1.0).abs() < 1e-4);
    assert!(r.eigenprofile.min() >= 0.0 && (r.eigenprofile.max() - 1.0).abs() < 1e-12);
}

#[test]
fn hayman_bracket_stable() {
    let products: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|rho| dirichlet_lambda1(interval(*rho), 256).unwrap().lambda * rho * rho)
        .collect();
    for p in &products {
        assert!((p - PI * PI / 4.0).abs() < 1e-3 && *p >= 0.25, "{products:?}");
    }
}

#[test]
fn eigenprofile_rayleigh_quotient() {
    let drift = DriftField::gauss_out(2.0).unwrap();
    let grid = Grid::new(interval(2.0), 257).unwrap();
    let op = EllipticOperator::new(grid, &drift).unwrap();
    let r = lambda1_of(&op).unwrap();
    assert!((rayleigh_quotient(&op, &r.eigenprofile.values) - r.lambda).abs() < 1e-9 * r.lambda);
}

#[test]
fn invalid_sample_weight() {
    let e = weighted_lambda1(interval(1.0), &Weight::Samples(vec![1.0; 40].into_iter().chain([-1.0]).collect()), 41);
    assert!(matches!(e, Err(Error::InvalidWeight { .. })));
    assert!(dirichlet_lambda1(interval(1.0), 16).is_err());
}

#[test]
fn inward_drift_scaling() {
    let g = interval(6.0);
    for sigma in [1.0, 0.5] {
        let a = drift_lambda1(&DriftField::gauss_in(sigma).unwrap(), g, 1024).unwrap().lambda;
        let b = drift_lambda1(&DriftField::gauss_in(sigma / 2.0).unwrap(), g, 1024).unwrap().lambda;
        assert!((1.8..=2.2).contains(&(b / a)));
        // Truncation insensitivity.
        let c = drift_lambda1(&DriftField::gauss_in(sigma).unwrap(), interval(12.0), 2048).unwrap().lambda;
        assert!((a - c).abs() < 1e-3 * a);
    }
    let whole = whole_space_lambda1(&DriftField::gauss_in(1.0).unwrap(), 1, 512, 2.0).unwrap();
    assert!(whole > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn domain_monotonicity(l1 in 0.3f64..5.0, extra in 0.01f64..3.0) {
        let a = dirichlet_lambda1(interval(l1), 128).unwrap().lambda;
        let b = dirichlet_lambda1(interval(l1 + extra), 128).unwrap().lambda;
        prop_assert!(a >= b);
    }

    #[test]
    fn weighted_domain_monotonicity(l1 in 0.5f64..4.0, extra in 0.05f64..2.0, sigma in 0.5f64..20.0) {
        let d = DriftField::gauss_out(sigma).unwrap();
        let a = drift_lambda1(&d, interval(l1), 128).unwrap().lambda;
        let b = drift_lambda1(&d, interval(l1 + extra), 128).unwrap().lambda;
        prop_assert!(a >= b - 1e-9);
    }
}

#[test]
fn certificate_soundness_sweep() {
    let nl = BistableNonlinearity::cubic(0.33).unwrap();
    let drifts = [DriftField::homogeneous(), DriftField::gauss_out(40.0).unwrap(), DriftField::gauss_out(4.0).unwrap()];
    for drift in &drifts {
        for k in 0..20 {
            let l = 0.5 + 3.5 * k as f64 / 19.0;
            let g = interval(l);
            let cert = uniqueness_certificate(&nl, drift, g, CertificateKind::ZeroBc, 401).unwrap();
            if cert.holds {
                assert!(find_barrier_zero(&nl, drift, g, BarrierOptions::default()).unwrap().is_none(), "L = {l}");
            }
        }
    }
}
