use crate::error::{finite, Error, Result};

/// The spatial domain: a symmetric interval or a ball treated radially.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainGeometry {
    Interval { half_length: f64 },
    Ball { radius: f64, dim: usize },
}

impl DomainGeometry {
    pub fn interval(half_length: f64) -> Result<Self> {
        finite("L", half_length)?;
        if half_length <= 0.0 {
            return Err(Error::InvalidInput(format!("half-length must be positive, got {half_length}")));
        }
        Ok(DomainGeometry::Interval { half_length })
    }

    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        finite("R", radius)?;
        if radius <= 0.0 || dim == 0 {
            return Err(Error::InvalidInput(format!("ball needs R > 0 and d >= 1, got R={radius}, d={dim}")));
        }
        Ok(DomainGeometry::Ball { radius, dim })
    }

    pub fn inradius(&self) -> f64 {
        match *self {
            DomainGeometry::Interval { half_length } => half_length,
            DomainGeometry::Ball { radius, .. } => radius,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            DomainGeometry::Interval { .. } => 1,
            DomainGeometry::Ball { dim, .. } => dim,
        }
    }

    pub fn is_ball(&self) -> bool {
        matches!(self, DomainGeometry::Ball { .. })
    }

    /// Same shape with the inradius multiplied by `factor`.
    pub fn inflated(&self, factor: f64) -> Self {
        match *self {
            DomainGeometry::Interval { half_length } => DomainGeometry::Interval { half_length: half_length * factor },
            DomainGeometry::Ball { radius, dim } => DomainGeometry::Ball { radius: radius * factor, dim },
        }
    }
}

/// Uniform node layout on a geometry. Interval nodes span `[-L, L]`;
/// ball nodes span the radial segment `[0, R]` with the centre at node 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub geometry: DomainGeometry,
    pub n: usize,
}

impl Grid {
    pub fn new(geometry: DomainGeometry, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput(format!("grid needs n >= 3 nodes, got {n}")));
        }
        Ok(Self { geometry, n })
    }

    pub fn h(&self) -> f64 {
        match self.geometry {
            DomainGeometry::Interval { half_length } => 2.0 * half_length / (self.n - 1) as f64,
            DomainGeometry::Ball { radius, .. } => radius / (self.n - 1) as f64,
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        match self.geometry {
            DomainGeometry::Interval { half_length } => {
                if i == self.n - 1 {
                    half_length
                } else {
                    -half_length + i as f64 * self.h()
                }
            }
            DomainGeometry::Ball { radius, .. } => {
                if i == self.n - 1 {
                    radius
                } else {
                    i as f64 * self.h()
                }
            }
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        i == self.n - 1 || (i == 0 && !self.geometry.is_ball())
    }

    /// First and last index of the unknowns (Dirichlet nodes excluded).
    pub fn free_range(&self) -> (usize, usize) {
        let first = usize::from(!self.geometry.is_ball());
        (first, self.n - 2)
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        if self.geometry.is_ball() {
            vec![self.n - 1]
        } else {
            vec![0, self.n - 1]
        }
    }

    /// Distance to the centre of symmetry.
    pub fn radius_of(&self, i: usize) -> f64 {
        self.node(i).abs()
    }

    /// Cell measure around node `i` (`r^(d-1) dr` integrated over the dual cell for balls).
    pub fn cell_volume(&self, i: usize) -> f64 {
        let h = self.h();
        match self.geometry {
            DomainGeometry::Interval { .. } => {
                if self.is_boundary(i) {
                    0.5 * h
                } else {
                    h
                }
            }
            DomainGeometry::Ball { dim, .. } => {
                let d = dim as i32;
                let r = self.node(i);
                let lo = (r - 0.5 * h).max(0.0);
                let hi = if i == self.n - 1 { r } else { r + 0.5 * h };
                (hi.powi(d) - lo.powi(d)) / dim as f64
            }
        }
    }

    /// Face measure between nodes `i` and `i + 1`.
    pub fn face_area(&self, i: usize) -> f64 {
        match self.geometry {
            DomainGeometry::Interval { .. } => 1.0,
            DomainGeometry::Ball { dim, .. } => (self.node(i) + 0.5 * self.h()).powi(dim as i32 - 1),
        }
    }

    /// Midpoint between nodes `i` and `i + 1`.
    pub fn face(&self, i: usize) -> f64 {
        self.node(i) + 0.5 * self.h()
    }

    /// Index of the nearest node to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let x0 = self.node(0);
        (((x - x0) / self.h()).round().max(0.0) as usize).min(self.n - 1)
    }
}

/// Function values at the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridProfile {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridProfile {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidInput(format!("expected {} values, got {}", grid.n, values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidScalar(format!("profile value at node {i} is {}", values[i])));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.n] }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Self {
        Self { grid, values: grid.nodes().into_iter().map(f).collect() }
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn geometry(&self) -> DomainGeometry {
        self.grid.geometry
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_distance(&self, other: &GridProfile) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn sup_distance_to(&self, c: f64) -> f64 {
        self.values.iter().map(|a| (a - c).abs()).fold(0.0, f64::max)
    }

    /// Whether all values lie in `[0, 1]` up to `tol`.
    pub fn is_proportion(&self, tol: f64) -> bool {
        self.values.iter().all(|v| *v >= -tol && *v <= 1.0 + tol)
    }

    /// Linear interpolation at a physical coordinate (clamped to the domain).
    pub fn interpolate(&self, x: f64) -> f64 {
        let x0 = self.grid.node(0);
        let h = self.grid.h();
        let s = ((x - x0) / h).clamp(0.0, (self.n() - 1) as f64);
        let k = (s.floor() as usize).min(self.n() - 2);
        let t = s - k as f64;
        (1.0 - t) * self.values[k] + t * self.values[k + 1]
    }

    /// Resample onto another grid by linear interpolation.
    pub fn resample(&self, grid: Grid) -> GridProfile {
        GridProfile::from_fn(grid, |x| self.interpolate(x))
    }
}
