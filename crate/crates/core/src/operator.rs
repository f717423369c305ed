//! Weighted finite-volume discretization of `-(1/w) div(w grad p)`.
//!
//! Every module that needs the steady operator (steady states, eigenvalues,
//! energies, time stepping) shares this one stencil, so a steady state of
//! one is a steady state of all.

use crate::error::{Error, Result};
use crate::model::{DriftField, Grid, GridProfile, Reaction};
use crate::numerics::solve_tridiagonal;

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticOperator {
    grid: Grid,
    /// `ln w` at the nodes.
    phi: Vec<f64>,
    /// `ln w` at the faces `x_i + h/2`, `i = 0..n-1`.
    phi_face: Vec<f64>,
    /// Coupling to `i - 1` and `i + 1` in `(A p)_i = lo_i (p_i - p_{i-1}) + up_i (p_i - p_{i+1})`.
    lo: Vec<f64>,
    up: Vec<f64>,
}

/// Outcome of a Newton solve of `A p = f(p)` with fixed boundary values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl EllipticOperator {
    pub fn from_log_weights(grid: Grid, phi: Vec<f64>, phi_face: Vec<f64>) -> Result<Self> {
        let n = grid.n;
        if phi.len() != n || phi_face.len() != n - 1 {
            return Err(Error::InvalidInput("log-weight arrays do not match the grid".into()));
        }
        if phi.iter().chain(&phi_face).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite log weight".into()));
        }
        let h = grid.h();
        let mut lo = vec![0.0; n];
        let mut up = vec![0.0; n];
        for i in 0..n {
            let v = grid.cell_volume(i);
            if v <= 0.0 {
                continue;
            }
            let centre_row = grid.geometry.is_ball() && i == 0;
            if i + 1 < n {
                up[i] = (phi_face[i] - phi[i]).exp() * grid.face_area(i) / (h * v);
            }
            if i > 0 && !centre_row {
                lo[i] = (phi_face[i - 1] - phi[i]).exp() * grid.face_area(i - 1) / (h * v);
            }
        }
        // Interior interval cells use the full width regardless of boundary halving.
        if !grid.geometry.is_ball() {
            for i in [0, n - 1] {
                lo[i] = 0.0;
                up[i] = 0.0;
            }
        }
        Ok(Self { grid, phi, phi_face, lo, up })
    }

    /// Operator with weight `N^(2/sigma)` taken from `drift`.
    pub fn new(grid: Grid, drift: &DriftField) -> Result<Self> {
        Self::from_log_fn(grid, |x| drift.log_weight(x))
    }

    pub fn from_log_fn<F: Fn(f64) -> f64>(grid: Grid, log_w: F) -> Result<Self> {
        let phi = (0..grid.n).map(|i| log_w(grid.node(i))).collect();
        let phi_face = (0..grid.n - 1).map(|i| log_w(grid.face(i))).collect();
        Self::from_log_weights(grid, phi, phi_face)
    }

    /// Plain Laplacian.
    pub fn unweighted(grid: Grid) -> Self {
        Self::from_log_weights(grid, vec![0.0; grid.n], vec![0.0; grid.n - 1]).expect("zero weights are valid")
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn log_weights(&self) -> (&[f64], &[f64]) {
        (&self.phi, &self.phi_face)
    }

    /// Couplings `(lo_i, up_i)` of node `i`.
    pub fn coefficients(&self, i: usize) -> (f64, f64) {
        (self.lo[i], self.up[i])
    }

    /// `(A p)_i` at a free node.
    pub fn apply_at(&self, p: &[f64], i: usize) -> f64 {
        let mut s = 0.0;
        if self.lo[i] != 0.0 {
            s += self.lo[i] * (p[i] - p[i - 1]);
        }
        if self.up[i] != 0.0 {
            s += self.up[i] * (p[i] - p[i + 1]);
        }
        s
    }

    /// `A p` at free nodes, zero at Dirichlet nodes.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let (a, b) = self.grid.free_range();
        let mut out = vec![0.0; p.len()];
        for (i, o) in out.iter_mut().enumerate().take(b + 1).skip(a) {
            *o = self.apply_at(p, i);
        }
        out
    }

    /// `max |A p - f(p)|` over free nodes.
    pub fn residual<R: Reaction + ?Sized>(&self, reaction: &R, p: &[f64]) -> f64 {
        let (a, b) = self.grid.free_range();
        (a..=b).map(|i| (self.apply_at(p, i) - reaction.rate(p[i])).abs()).fold(0.0, f64::max)
    }

    /// Tridiagonal rows `(lower, diag, upper)` of `c I + A` restricted to free nodes.
    pub fn shifted_rows(&self, c: f64, scale: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (a, b) = self.grid.free_range();
        let m = b - a + 1;
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for (k, i) in (a..=b).enumerate() {
            diag[k] = c + scale * (self.lo[i] + self.up[i]);
            lower[k] = -scale * self.lo[i];
            upper[k] = -scale * self.up[i];
        }
        (lower, diag, upper)
    }

    /// Damped Newton for `A p = f(p)` keeping Dirichlet values of `p` fixed.
    pub fn newton<R: Reaction + ?Sized>(&self, reaction: &R, p: &mut GridProfile, tol: f64, max_iter: usize) -> NewtonReport {
        let (a, b) = self.grid.free_range();
        let mut res = self.residual(reaction, &p.values);
        let mut it = 0;
        while res > tol && it < max_iter {
            it += 1;
            let (mut lower, mut diag, upper) = self.shifted_rows(0.0, 1.0);
            let mut rhs = vec![0.0; b - a + 1];
            for (k, i) in (a..=b).enumerate() {
                diag[k] -= reaction.rate_slope(p.values[i]);
                rhs[k] = reaction.rate(p.values[i]) - self.apply_at(&p.values, i);
            }
            lower[0] = 0.0;
            let Ok(delta) = solve_tridiagonal(&lower, &diag, &upper, &rhs) else {
                break;
            };
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let mut trial = p.values.clone();
                for (k, i) in (a..=b).enumerate() {
                    trial[i] += step * delta[k];
                }
                let r = self.residual(reaction, &trial);
                if r.is_finite() && r < res {
                    p.values = trial;
                    res = r;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        NewtonReport { residual: res, iterations: it, converged: res <= tol }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BistableNonlinearity, DomainGeometry};

    #[test]
    fn reproduces_second_derivative() {
        let g = Grid::new(DomainGeometry::interval(1.0).unwrap(), 101).unwrap();
        let op = EllipticOperator::unweighted(g);
        let p: Vec<f64> = g.nodes().iter().map(|x| x * x).collect();
        let ap = op.apply(&p);
        for v in &ap[1..100] {
            assert!((v + 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn radial_laplacian_of_quadratic() {
        let g = Grid::new(DomainGeometry::ball(1.0, 3).unwrap(), 51).unwrap();
        let op = EllipticOperator::unweighted(g);
        let p: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
        let ap = op.apply(&p);
        for v in &ap[0..50] {
            assert!((v + 6.0).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn drift_term_sign() {
        let g = Grid::new(DomainGeometry::interval(1.0).unwrap(), 2001).unwrap();
        let d = DriftField::gauss_out(2.0).unwrap();
        let op = EllipticOperator::new(g, &d).unwrap();
        let p: Vec<f64> = g.nodes().iter().map(|x| x * x).collect();
        let ap = op.apply(&p);
        // -p'' - (2/sigma)(-x) p' = -2 + 2 x^2
        let i = 1500;
        let x = g.node(i);
        assert!((ap[i] - (-2.0 + 2.0 * x * x)).abs() < 1e-5);
    }

    #[test]
    fn newton_keeps_equilibria() {
        let g = Grid::new(DomainGeometry::interval(1.0).unwrap(), 41).unwrap();
        let nl = BistableNonlinearity::cubic(0.33).unwrap();
        let op = EllipticOperator::unweighted(g);
        let mut p = GridProfile::constant(g, 0.33);
        let r = op.newton(&nl, &mut p, 1e-12, 10);
        assert!(r.converged && r.iterations == 0);
    }
}
