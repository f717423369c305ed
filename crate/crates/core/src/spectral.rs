//! First Dirichlet eigenvalues (plain and weighted) and the uniqueness
//! certificates that compare them with the slope of the reaction.

use crate::error::{Error, Result};
use crate::model::{BistableNonlinearity, DomainGeometry, DriftField, Grid, GridProfile};
use crate::operator::EllipticOperator;
use crate::numerics::solve_tridiagonal;

const MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda: f64,
    /// Positive in the interior, zero on the boundary, maximum 1.
    pub eigenprofile: GridProfile,
    pub iterations: usize,
    /// `|S q - lambda q| / |q|` for the symmetrized matrix.
    pub residual: f64,
}

/// Weight in the Rayleigh quotient `∫ w |∇p|^2 / ∫ w p^2`.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Unit,
    /// `w = N^(2/sigma)`; use `sigma = 1` for `w = N^2`.
    Drift(DriftField),
    /// Node values of `w`; face values use the geometric mean.
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CertificateKind {
    /// Compares the plain eigenvalue against `|f'| exp(|eps n|)`.
    ZeroBc,
    /// Compares the weighted eigenvalue against the Lipschitz constant.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub lipschitz: f64,
    pub sup_fprime: f64,
}

pub fn dirichlet_lambda1(geometry: DomainGeometry, n: usize) -> Result<EigenResult> {
    weighted_lambda1(geometry, &Weight::Unit, n)
}

pub fn weighted_lambda1(geometry: DomainGeometry, weight: &Weight, n: usize) -> Result<EigenResult> {
    if n < 32 {
        return Err(Error::InvalidInput(format!("eigenvalue grid needs n >= 32, got {n}")));
    }
    let grid = Grid::new(geometry, n)?;
    let op = match weight {
        Weight::Unit => EllipticOperator::unweighted(grid),
        Weight::Drift(d) => EllipticOperator::new(grid, d)?,
        Weight::Samples(w) => {
            if w.len() != n {
                return Err(Error::InvalidInput(format!("weight has {} samples, grid has {n}", w.len())));
            }
            if let Some(i) = w.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidWeight { node: i, value: w[i] });
            }
            let phi: Vec<f64> = w.iter().map(|v| v.ln()).collect();
            let face = phi.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
            EllipticOperator::from_log_weights(grid, phi, face)?
        }
    };
    lambda1_of(&op)
}

/// `lambda_sigma(Omega, N)`: the eigenvalue with weight `N^(2/sigma)`.
pub fn drift_lambda1(drift: &DriftField, geometry: DomainGeometry, n: usize) -> Result<EigenResult> {
    weighted_lambda1(geometry, &Weight::Drift(drift.clone()), n)
}

/// Symmetrized tridiagonal form `M^{1/2} A M^{-1/2}` on free nodes, with
/// `M = diag(w_i V_i)`. Built from local weight differences only.
fn symmetric_rows(op: &EllipticOperator) -> (Vec<f64>, Vec<f64>) {
    let grid = op.grid();
    let (a, b) = grid.free_range();
    let (phi, face) = op.log_weights();
    let h = grid.h();
    let mut diag = Vec::with_capacity(b - a + 1);
    let mut off = Vec::with_capacity(b - a + 1);
    for i in a..=b {
        let (lo, up) = op.coefficients(i);
        diag.push(lo + up);
        if i < b {
            let vi = grid.cell_volume(i);
            let vj = grid.cell_volume(i + 1);
            let e = (face[i] - 0.5 * (phi[i] + phi[i + 1])).exp();
            off.push(-e * grid.face_area(i) / (h * (vi * vj).sqrt()));
        } else {
            off.push(0.0);
        }
    }
    (diag, off)
}

fn sym_apply(diag: &[f64], off: &[f64], q: &[f64]) -> Vec<f64> {
    let m = q.len();
    (0..m)
        .map(|k| {
            let mut s = diag[k] * q[k];
            if k > 0 {
                s += off[k - 1] * q[k - 1];
            }
            if k + 1 < m {
                s += off[k] * q[k + 1];
            }
            s
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inverse iteration for the smallest eigenvalue of the operator.
pub fn lambda1_of(op: &EllipticOperator) -> Result<EigenResult> {
    let grid = op.grid();
    let (a, b) = grid.free_range();
    let (diag, off) = symmetric_rows(op);
    let m = diag.len();
    let lower: Vec<f64> = std::iter::once(0.0).chain(off[..m - 1].iter().copied()).collect();
    let mut q: Vec<f64> = (0..m).map(|k| (std::f64::consts::PI * (k + 1) as f64 / (m + 1) as f64).sin().max(1e-3)).collect();
    let norm = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|v| *v /= norm);
    let mut lambda = dot(&q, &sym_apply(&diag, &off, &q));
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > MAX_ITER {
            return Err(Error::EigenStall { iterations: MAX_ITER });
        }
        let mut z = solve_tridiagonal(&lower, &diag, &off, &q)?;
        let norm = dot(&z, &z).sqrt();
        z.iter_mut().for_each(|v| *v /= norm);
        let new = dot(&z, &sym_apply(&diag, &off, &z));
        q = z;
        let done = (new - lambda).abs() <= 1e-12 * new.abs().max(1e-300);
        lambda = new;
        if done && iterations > 1 {
            break;
        }
    }
    let sq = sym_apply(&diag, &off, &q);
    let residual = sq.iter().zip(&q).map(|(s, v)| (s - lambda * v).powi(2)).sum::<f64>().sqrt();
    if q.iter().sum::<f64>() < 0.0 {
        q.iter_mut().for_each(|v| *v = -*v);
    }
    let (phi, _) = op.log_weights();
    let phi_min = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let mut values = vec![0.0; grid.n];
    for (k, i) in (a..=b).enumerate() {
        values[i] = q[k] * (-(phi[i] - phi_min) / 2.0).exp() / grid.cell_volume(i).sqrt();
    }
    let peak = values.iter().copied().fold(0.0, f64::max);
    values.iter_mut().for_each(|v| *v /= peak);
    Ok(EigenResult { lambda, eigenprofile: GridProfile::new(grid, values)?, iterations, residual })
}

/// Discrete Rayleigh quotient of `p` (Dirichlet values ignored) for the operator's weight.
pub fn rayleigh_quotient(op: &EllipticOperator, p: &[f64]) -> f64 {
    let grid = op.grid();
    let (phi, face) = op.log_weights();
    let shift = phi.iter().chain(face).copied().fold(f64::NEG_INFINITY, f64::max);
    let h = grid.h();
    let (a, b) = grid.free_range();
    let val = |i: usize| if grid.is_boundary(i) { 0.0 } else { p[i] };
    let mut num = 0.0;
    for (i, fi) in face.iter().enumerate().take(grid.n - 1) {
        let d = val(i + 1) - val(i);
        num += (fi - shift).exp() * grid.face_area(i) / h * d * d;
    }
    let den: f64 = (a..=b).map(|i| (phi[i] - shift).exp() * grid.cell_volume(i) * p[i] * p[i]).sum();
    num / den
}

pub fn uniqueness_certificate(
    nl: &BistableNonlinearity,
    drift: &DriftField,
    geometry: DomainGeometry,
    kind: CertificateKind,
    n: usize,
) -> Result<Certificate> {
    let bounds = nl.lipschitz_and_sup_fprime();
    let (lhs, rhs) = match kind {
        CertificateKind::ZeroBc => {
            let lambda = dirichlet_lambda1(geometry, n)?.lambda;
            let grid = Grid::new(geometry, n)?;
            let sup_n = grid.nodes().iter().map(|x| drift.log_weight(*x).abs()).fold(0.0, f64::max);
            (lambda, bounds.lipschitz * sup_n.exp())
        }
        CertificateKind::General => (drift_lambda1(drift, geometry, n)?.lambda, bounds.lipschitz),
    };
    Ok(Certificate { holds: lhs > rhs, lhs, rhs, lipschitz: bounds.lipschitz, sup_fprime: bounds.sup_fprime })
}

/// Whole-space weighted eigenvalue, approximated on balls of doubling radius
/// until the relative change falls below `1e-3`.
pub fn whole_space_lambda1(drift: &DriftField, dim: usize, n: usize, r0: f64) -> Result<f64> {
    let mut r = r0;
    let mut last = f64::NAN;
    for _ in 0..12 {
        let geometry = if dim == 1 { DomainGeometry::interval(r)? } else { DomainGeometry::ball(r, dim)? };
        let lambda = drift_lambda1(drift, geometry, n)?.lambda;
        if (lambda - last).abs() < 1e-3 * lambda.abs() {
            return Ok(lambda);
        }
        last = lambda;
        r *= 2.0;
    }
    Err(Error::EigenStall { iterations: 12 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn interval_closed_form() {
        for l in [1.0, 2.5] {
            let e = dirichlet_lambda1(DomainGeometry::interval(l).unwrap(), 512).unwrap();
            let exact = PI * PI / (4.0 * l * l);
            assert!(((e.lambda - exact) / exact).abs() < 1e-4);
        }
    }

    #[test]
    fn ball_closed_form() {
        let e = dirichlet_lambda1(DomainGeometry::ball(PI, 3).unwrap(), 1024).unwrap();
        assert!((e.lambda - 1.0).abs() < 1e-4, "{}", e.lambda);
    }

    #[test]
    fn rayleigh_matches_lambda() {
        let g = DomainGeometry::interval(3.0).unwrap();
        let d = DriftField::gauss_in(1.0).unwrap();
        let e = drift_lambda1(&d, g, 200).unwrap();
        let op = EllipticOperator::new(e.eigenprofile.grid, &d).unwrap();
        let rq = rayleigh_quotient(&op, &e.eigenprofile.values);
        assert!(((rq - e.lambda) / e.lambda).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_weights() {
        let g = DomainGeometry::interval(1.0).unwrap();
        let mut w = vec![1.0; 40];
        w[7] = 0.0;
        assert!(matches!(weighted_lambda1(g, &Weight::Samples(w), 40), Err(Error::InvalidWeight { node: 7, .. })));
        assert!(dirichlet_lambda1(g, 16).is_err());
    }
}
