//! Uniform one-dimensional grids and nodal fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[a, b]` with `n_cells + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n_cells: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!("grid endpoints must satisfy a < b, got [{a}, {b}]")));
        }
        if n_cells < 8 {
            return Err(Error::Config(format!("n_cells = {n_cells}, need at least 8")));
        }
        Ok(Self { a, b, n_cells })
    }

    /// A grid for the radial models; requires `a > 0`.
    pub fn radial(a: f64, b: f64, n_cells: usize) -> Result<Self> {
        if a <= 0.0 {
            return Err(Error::Domain {
                value: a,
                range: "(0, b)".into(),
            });
        }
        Self::new(a, b, n_cells)
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / self.n_cells as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.spacing()
    }

    #[inline]
    pub fn midpoint(&self, i: usize) -> f64 {
        self.a + (i as f64 + 0.5) * self.spacing()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let i = ((x - self.a) / self.spacing()).round();
        i.clamp(0.0, self.n_cells as f64) as usize
    }
}

/// Nodal values of one unknown at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field1D {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field1D {
    pub fn new(grid: Grid1D, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::Config(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect(), 0.0)
    }

    /// One-sided gradients `(u_{i+1} − u_i)/h`, located at cell midpoints.
    pub fn face_gradients(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        self.values.windows(2).map(|w| (w[1] - w[0]) / h).collect()
    }

    /// Centered nodal gradients, one-sided at the two endpoints.
    pub fn nodal_gradients(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        let u = &self.values;
        let n = u.len();
        (0..n)
            .map(|i| {
                if i == 0 {
                    (u[1] - u[0]) / h
                } else if i == n - 1 {
                    (u[n - 1] - u[n - 2]) / h
                } else {
                    (u[i + 1] - u[i - 1]) / (2.0 * h)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(0.0, 1.0, 7).is_err());
        assert!(Grid1D::new(1.0, 1.0, 10).is_err());
        assert!(Grid1D::radial(0.0, 1.0, 10).is_err());
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        assert_eq!(g.n_nodes(), 11);
        assert!((g.spacing() - 0.1).abs() < 1e-15);
        assert_eq!(g.nearest(0.34), 3);
        assert_eq!(g.nearest(-2.0), 0);
    }

    #[test]
    fn field_validation_and_gradients() {
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        assert!(Field1D::new(g, vec![0.0; 10], 0.0).is_err());
        let mut bad = vec![0.0; 11];
        bad[4] = f64::NAN;
        assert_eq!(Field1D::new(g, bad, 0.0), Err(Error::NonFinite { index: 4 }));
        let f = Field1D::from_fn(g, |x| 3.0 * x).unwrap();
        assert!(f.face_gradients().iter().all(|p| (p - 3.0).abs() < 1e-12));
        assert!(f.nodal_gradients().iter().all(|p| (p - 3.0).abs() < 1e-12));
    }
}
