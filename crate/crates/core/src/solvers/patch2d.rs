//! Local two-dimensional Perona-Malik derivative on a small square patch.
//!
//! The full two-dimensional problem is ill-posed; only `u_t` at `t = 0` near
//! one point is ever needed, so this is a single evaluation of
//! `div(φ'(|∇u|) ∇u/|∇u|)` by centered differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearityProfile;

/// Below this `|∇u|` the direction `∇u/|∇u|` is treated as undefined.
pub const GRAD_FLOOR: f64 = 1e-9;

/// Nodal values on `[−w, w]²` with `n` cells per side, stored row-major
/// with `x` varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch2D {
    pub half_width: f64,
    pub n: usize,
    pub values: Vec<f64>,
}

impl Patch2D {
    pub fn new(half_width: f64, n: usize, values: Vec<f64>) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Config(format!("half_width = {half_width} must be positive")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "patch n = {n} must be even and at least 8 so the origin is a node"
            )));
        }
        if values.len() != (n + 1) * (n + 1) {
            return Err(Error::Config(format!(
                "{} values for a {}x{} patch",
                values.len(),
                n + 1,
                n + 1
            )));
        }
        Ok(Self {
            half_width,
            n,
            values,
        })
    }

    pub fn from_fn(half_width: f64, n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = 2.0 * half_width / n as f64;
        let mut values = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                values.push(f(-half_width + i as f64 * h, -half_width + j as f64 * h));
            }
        }
        Self::new(half_width, n, values)
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Index of the node at the origin along either axis.
    pub fn center(&self) -> usize {
        self.n / 2
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * (self.n + 1) + i]
    }
}

/// `u_t = ∂ₓΨ₁ + ∂ᵧΨ₂` with `Ψ = φ'(|∇u|) ∇u/|∇u|`. Gradients and the
/// divergence are both centered, so the result is defined two nodes in from
/// the edge; the outer two rings are NaN.
pub fn patch2d_time_derivative(patch: &Patch2D, profile: &NonlinearityProfile) -> Result<Patch2D> {
    let n = patch.n;
    let m = n + 1;
    let h = patch.spacing();
    let mut psi1 = vec![f64::NAN; m * m];
    let mut psi2 = vec![f64::NAN; m * m];
    for j in 1..n {
        for i in 1..n {
            let ux = (patch.at(i + 1, j) - patch.at(i - 1, j)) / (2.0 * h);
            let uy = (patch.at(i, j + 1) - patch.at(i, j - 1)) / (2.0 * h);
            let norm = ux.hypot(uy);
            if !(norm >= GRAD_FLOOR) {
                return Err(Error::Degenerate { i, j, norm });
            }
            let scale = profile.dphi(norm)? / norm;
            psi1[j * m + i] = scale * ux;
            psi2[j * m + i] = scale * uy;
        }
    }
    let mut out = vec![f64::NAN; m * m];
    for j in 2..n - 1 {
        for i in 2..n - 1 {
            let dx = (psi1[j * m + i + 1] - psi1[j * m + i - 1]) / (2.0 * h);
            let dy = (psi2[(j + 1) * m + i] - psi2[(j - 1) * m + i]) / (2.0 * h);
            out[j * m + i] = dx + dy;
        }
    }
    Ok(Patch2D {
        half_width: patch.half_width,
        n,
        values: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Field1D, Grid1D};
    use crate::solvers::{rhs_pm_radial, Boundary};
    use approx::assert_abs_diff_eq;

    #[test]
    fn planar_field_is_stationary() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = Patch2D::from_fn(0.01, 16, |x, y| s * (x + y)).unwrap();
        let ut = patch2d_time_derivative(&p, &NonlinearityProfile::perona_malik()).unwrap();
        for j in 2..15 {
            for i in 2..15 {
                assert_abs_diff_eq!(ut.at(i, j), 0.0, epsilon = 1e-9);
            }
        }
        assert!(ut.at(0, 0).is_nan());
    }

    #[test]
    fn flat_patch_is_degenerate() {
        let p = Patch2D::from_fn(0.01, 8, |_, _| 1.0).unwrap();
        let err = patch2d_time_derivative(&p, &NonlinearityProfile::perona_malik()).unwrap_err();
        assert!(matches!(err, Error::Degenerate { i: 1, j: 1, .. }));
    }

    #[test]
    fn radial_profile_matches_radial_scheme() {
        // radial function centred at (−1, 0), so the patch origin sits at r = 1
        let f = |r: f64| 0.6 * r + 0.2 * (r - 1.0).powi(2);
        let profile = NonlinearityProfile::perona_malik();
        let p = Patch2D::from_fn(0.02, 16, |x, y| f((x + 1.0).hypot(y))).unwrap();
        let ut = patch2d_time_derivative(&p, &profile).unwrap();
        let c = p.center();

        let grid = Grid1D::radial(0.5, 1.5, 1000).unwrap();
        let u = Field1D::from_fn(grid, f).unwrap();
        let rad = rhs_pm_radial(&u, &profile, 2, Boundary::Neumann).unwrap();
        assert_abs_diff_eq!(ut.at(c, c), rad[500], epsilon = 1e-4);
    }

    #[test]
    fn patch_validation() {
        assert!(Patch2D::new(0.01, 9, vec![0.0; 100]).is_err());
        assert!(Patch2D::new(0.01, 8, vec![0.0; 80]).is_err());
        assert!(Patch2D::new(-1.0, 8, vec![0.0; 81]).is_err());
    }
}
