//! Cubic initial datum whose supercritical boundary is locally convex at the
//! origin while the origin is absorbed by the supercritical region.
//!
//! `u₀ = (√2/2)(x + y) + k₁x² + k₂y² + h₁x³ + h₂y³`, so `|∇u₀(0,0)| = 1`.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nonlinearity::{NonlinearityProfile, SIGMA_CRITICAL};
use crate::solvers::{patch2d_time_derivative, Patch2D};

pub const DEFAULT_N_MAX: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorDatum {
    pub k1: f64,
    pub k2: f64,
    pub h1: f64,
    pub h2: f64,
}

impl TaylorDatum {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        0.5 * SQRT_2 * (x + y) + self.k1 * x * x + self.k2 * y * y + self.h1 * x * x * x + self.h2 * y * y * y
    }

    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        (
            0.5 * SQRT_2 + 2.0 * self.k1 * x + 3.0 * self.h1 * x * x,
            0.5 * SQRT_2 + 2.0 * self.k2 * y + 3.0 * self.h2 * y * y,
        )
    }

    /// Exchanges the roles of the two coordinates.
    pub fn swapped(&self) -> Self {
        Self {
            k1: self.k2,
            k2: self.k1,
            h1: self.h2,
            h2: self.h1,
        }
    }
}

/// `(k₁, k₂, h₁, h₂) = (n, 1, n³, −n²)`.
pub fn datum_from_n(n: u32) -> TaylorDatum {
    let n = f64::from(n);
    TaylorDatum {
        k1: n,
        k2: 1.0,
        h1: n * n * n,
        h2: -n * n,
    }
}

/// `v₀_y(0,0) = 2√2·k₂`; the level set through the origin is a graph over
/// `x` when this is positive.
pub fn dini_condition(d: &TaylorDatum) -> f64 {
    2.0 * SQRT_2 * d.k2
}

/// `8k₁²k₂² + 3√2(k₁²h₂ + k₂²h₁)`; negative means a convex boundary.
pub fn convexity_margin(d: &TaylorDatum) -> f64 {
    let (k1s, k2s) = (d.k1 * d.k1, d.k2 * d.k2);
    8.0 * k1s * k2s + 3.0 * SQRT_2 * (k1s * d.h2 + k2s * d.h1)
}

/// Closed form of `v_t(0,0,0)`.
pub fn vt_origin(d: &TaylorDatum, profile: &NonlinearityProfile) -> Result<f64> {
    let slope = profile.dphi(SIGMA_CRITICAL)?;
    let third = profile.d3phi(SIGMA_CRITICAL)?;
    let bracket = 3.0 * SQRT_2 * (d.h1 + d.h2) + 4.0 * d.k1 * d.k2 - 6.0 * d.k1 * d.k1 - 6.0 * d.k2 * d.k2;
    Ok(slope * bracket + 2.0 * third * (d.k1 + d.k2).powi(2))
}

/// Both conditions and the graph condition for one member of the family.
pub fn certifies(n: u32, profile: &NonlinearityProfile) -> Result<bool> {
    let d = datum_from_n(n);
    Ok(dini_condition(&d) > 0.0 && convexity_margin(&d) < 0.0 && vt_origin(&d, profile)? > 0.0)
}

/// Smallest `n ∈ [1, n_max]` for which [`certifies`] holds.
pub fn find_min_n(profile: &NonlinearityProfile, n_max: u32) -> Result<Option<u32>> {
    for n in 1..=n_max {
        if certifies(n, profile)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crosscheck {
    pub closed_form: f64,
    pub fd_value: f64,
    pub rel_err: f64,
}

/// `v_t(0,0,0) = 2(u_x u_tx + u_y u_ty)` assembled from centered differences
/// of the patch time derivative around the origin.
pub fn crosscheck_fd(
    d: &TaylorDatum,
    profile: &NonlinearityProfile,
    patch_half_width: f64,
    patch_n: usize,
) -> Result<Crosscheck> {
    let closed = vt_origin(d, profile)?;
    let patch = Patch2D::from_fn(patch_half_width, patch_n, |x, y| d.value(x, y))?;
    let ut = patch2d_time_derivative(&patch, profile)?;
    let c = patch.center();
    let h2 = 2.0 * patch.spacing();
    let ux = (patch.at(c + 1, c) - patch.at(c - 1, c)) / h2;
    let uy = (patch.at(c, c + 1) - patch.at(c, c - 1)) / h2;
    let utx = (ut.at(c + 1, c) - ut.at(c - 1, c)) / h2;
    let uty = (ut.at(c, c + 1) - ut.at(c, c - 1)) / h2;
    let fd = 2.0 * (ux * utx + uy * uty);
    let rel_err = if closed == 0.0 {
        fd.abs()
    } else {
        ((fd - closed) / closed).abs()
    };
    Ok(Crosscheck {
        closed_form: closed,
        fd_value: fd,
        rel_err,
    })
}

/// JSON certificate for the minimal member of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub n: u32,
    pub dini: f64,
    pub convexity_margin: f64,
    pub vt_closed_form: f64,
    pub vt_fd: f64,
    pub rel_err: f64,
}

pub fn certificate(profile: &NonlinearityProfile, n_max: u32, half_width: f64, patch_n: usize) -> Result<Option<Certificate>> {
    let Some(n) = find_min_n(profile, n_max)? else {
        return Ok(None);
    };
    let d = datum_from_n(n);
    let cc = crosscheck_fd(&d, profile, half_width, patch_n)?;
    Ok(Some(Certificate {
        n,
        dini: dini_condition(&d),
        convexity_margin: convexity_margin(&d),
        vt_closed_form: cc.closed_form,
        vt_fd: cc.fd_value,
        rel_err: cc.rel_err,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Table;
    use approx::assert_abs_diff_eq;

    fn pm() -> NonlinearityProfile {
        NonlinearityProfile::perona_malik()
    }

    #[test]
    fn family_members() {
        let t = |k1, k2, h1, h2| TaylorDatum { k1, k2, h1, h2 };
        assert_eq!(datum_from_n(1), t(1.0, 1.0, 1.0, -1.0));
        assert_eq!(datum_from_n(2), t(2.0, 1.0, 8.0, -4.0));
        assert_eq!(datum_from_n(10), t(10.0, 1.0, 1000.0, -100.0));
    }

    #[test]
    fn graph_condition() {
        assert_abs_diff_eq!(dini_condition(&datum_from_n(3)), 2.0 * SQRT_2, epsilon = 1e-15);
        let mut d = datum_from_n(3);
        d.k2 = 0.0;
        assert_eq!(dini_condition(&d), 0.0);
        d.k2 = -1.0;
        assert!(dini_condition(&d) < 0.0);
    }

    #[test]
    fn convexity_values() {
        assert_abs_diff_eq!(convexity_margin(&datum_from_n(10)), 800.0 - 27000.0 * SQRT_2, epsilon = 1e-9);
        assert_abs_diff_eq!(convexity_margin(&datum_from_n(10)), -37383.8, epsilon = 0.05);
        assert_abs_diff_eq!(convexity_margin(&datum_from_n(1)), 8.0, epsilon = 1e-12);
        let d = TaylorDatum {
            k1: 1.5,
            k2: 1.5,
            h1: 2.0,
            h2: -2.0,
        };
        assert_abs_diff_eq!(convexity_margin(&d), 8.0 * 1.5f64.powi(4), epsilon = 1e-12);
    }

    #[test]
    fn vt_values() {
        let p = pm();
        assert_abs_diff_eq!(vt_origin(&datum_from_n(10), &p).unwrap(), 0.5 * (2700.0 * SQRT_2 - 566.0) - 121.0, epsilon = 1e-9);
        assert_abs_diff_eq!(vt_origin(&datum_from_n(10), &p).unwrap(), 1505.2, epsilon = 0.05);
        assert_abs_diff_eq!(vt_origin(&datum_from_n(1), &p).unwrap(), -8.0, epsilon = 1e-12);
        let flat = TaylorDatum {
            k1: 0.0,
            k2: 0.0,
            h1: 0.0,
            h2: 0.0,
        };
        assert_eq!(vt_origin(&flat, &p).unwrap(), 0.0);
    }

    #[test]
    fn minimal_member_is_frozen() {
        assert_eq!(find_min_n(&pm(), 50).unwrap(), Some(4));
        assert_eq!(find_min_n(&pm(), 1).unwrap(), None);
        assert_eq!(find_min_n(&pm(), 3).unwrap(), None);
    }

    #[test]
    fn flat_third_derivative_needs_no_larger_n() {
        // φ = s²/2 − s⁴/4 + s⁶/10 − s⁸/56 has φ'' = (1 − s²)³ ≥ 0 and φ'''(1) = 0
        let s: Vec<f64> = (0..=400).map(|i| 2.0 * i as f64 / 400.0).collect();
        let phi: Vec<f64> = s
            .iter()
            .map(|&x| x * x / 2.0 - x.powi(4) / 4.0 + x.powi(6) / 10.0 - x.powi(8) / 56.0)
            .collect();
        let p = NonlinearityProfile::tabulated("flat-third", Table::new(&s, &phi).unwrap());
        let n = find_min_n(&p, 50).unwrap().unwrap();
        assert!(n <= 4);
    }

    #[test]
    fn unit_gradient_at_origin() {
        for n in [1, 4, 17] {
            let (gx, gy) = datum_from_n(n).gradient(0.0, 0.0);
            assert_abs_diff_eq!(gx.hypot(gy), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn finite_differences_agree_with_closed_form() {
        let cc = crosscheck_fd(&datum_from_n(4), &pm(), 1e-3, 64).unwrap();
        assert!(cc.rel_err <= 1e-2, "{cc:?}");
        let flat = TaylorDatum {
            k1: 0.0,
            k2: 0.0,
            h1: 0.0,
            h2: 0.0,
        };
        let cc = crosscheck_fd(&flat, &pm(), 1e-3, 16).unwrap();
        assert_eq!(cc.closed_form, 0.0);
        assert!(cc.fd_value.abs() < 1e-6);
    }

    #[test]
    fn refinement_order() {
        let d = datum_from_n(4);
        let errs: Vec<f64> = [8, 16, 32, 64]
            .iter()
            .map(|&n| crosscheck_fd(&d, &pm(), 1e-2, n).unwrap().rel_err)
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{errs:?}");
            assert!((w[0] / w[1]).log2() >= 1.5, "{errs:?}");
        }
    }
}
