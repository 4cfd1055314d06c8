//! Method-of-lines integration of the four one-dimensional models.
//!
//! The Perona-Malik models use the flux-difference semidiscrete scheme
//! `du_i/dt = [φ'(p_{i+½}) − φ'(p_{i−½})]/h`, which is a well-posed ODE
//! system even where the gradient is supercritical. All models are advanced
//! with explicit Euler and a CFL-limited step.
//!
//! The free-boundary models `v_t = g(v) L[v]` are stepped in the potential
//! `Z = ∫₀^v ds/g(s)`, for which `Z_t = L[v]`. At a positive node this is
//! the same first-order update as `v += dt·g(v)·L[v]`; at a zero node next
//! to a positive one it lets the support advance, which a direct update of
//! `v` cannot do because `g(0) = 0`.

mod patch2d;

pub use patch2d::{patch2d_time_derivative, Patch2D, GRAD_FLOOR};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field1D, Grid1D};
use crate::nonlinearity::{NonlinearityProfile, SIGMA_CRITICAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `u_t = (φ'(u_x))_x`.
    Pm1d,
    /// `u_t = (φ'(u_r))_r + (n − 1) φ'(u_r)/r`.
    PmRadial,
    /// `v_t = g(v) v_xx`.
    Fbp1,
    /// `v_t = g(v) {v_rr + v_r/r − v/r² + φ'(1)/r²}`.
    Fbp2,
}

impl Model {
    pub fn is_free_boundary(self) -> bool {
        matches!(self, Model::Fbp1 | Model::Fbp2)
    }

    pub fn is_radial(self) -> bool {
        matches!(self, Model::PmRadial | Model::Fbp2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Zero flux through both endpoints.
    #[default]
    Neumann,
    /// Endpoint values held fixed.
    Dirichlet,
}

fn default_cfl() -> f64 {
    0.4
}
fn default_dimension() -> u32 {
    2
}
fn default_cap() -> f64 {
    1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    pub t_end: f64,
    pub snapshot_dt: f64,
    #[serde(default = "default_dimension")]
    pub radial_dimension: u32,
    /// Discrete gradient magnitude above which a run counts as broken down.
    #[serde(default = "default_cap")]
    pub grad_blowup_cap: f64,
}

impl RunConfig {
    pub fn new(model: Model, t_end: f64, snapshot_dt: f64) -> Self {
        Self {
            model,
            boundary: Boundary::Neumann,
            cfl_safety: default_cfl(),
            t_end,
            snapshot_dt,
            radial_dimension: default_dimension(),
            grad_blowup_cap: default_cap(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!("cfl_safety = {} not in (0, 1]", self.cfl_safety)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end = {} must be finite and >= 0", self.t_end)));
        }
        if !(self.snapshot_dt > 0.0 && self.snapshot_dt.is_finite()) {
            return Err(Error::Config(format!("snapshot_dt = {} must be > 0", self.snapshot_dt)));
        }
        if self.radial_dimension < 2 {
            return Err(Error::Config(format!(
                "radial_dimension = {}, need at least 2",
                self.radial_dimension
            )));
        }
        if !(self.grad_blowup_cap > 0.0) {
            return Err(Error::Config("grad_blowup_cap must be positive".into()));
        }
        Ok(())
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Fills `out` with the Perona-Malik rates and returns the largest
/// `|φ''(p)|` over the face gradients, which sets the stable step.
/// `inv_r` holds `(n − 1)/r_i` for radial runs and is empty otherwise.
fn pm_rates(
    u: &[f64],
    h: f64,
    profile: &NonlinearityProfile,
    inv_r: &[f64],
    boundary: Boundary,
    fluxes: &mut Vec<f64>,
    out: &mut Vec<f64>,
) -> Result<f64> {
    let n = u.len();
    let inv_h = 1.0 / h;
    let mut max_coeff: f64 = 0.0;
    fluxes.clear();
    for w in u.windows(2) {
        let (flux, coeff) = profile.dphi_d2phi((w[1] - w[0]) * inv_h)?;
        fluxes.push(flux);
        max_coeff = max_coeff.max(coeff.abs());
    }
    out.clear();
    out.resize(n, 0.0);
    // zero-flux ghost values beyond both endpoints
    out[0] = fluxes[0] * inv_h;
    for i in 1..n - 1 {
        out[i] = (fluxes[i] - fluxes[i - 1]) * inv_h;
    }
    out[n - 1] = -fluxes[n - 2] * inv_h;
    if !inv_r.is_empty() {
        let half = 0.5 * inv_h;
        for i in 0..n {
            let centered = (u[(i + 1).min(n - 1)] - u[i.saturating_sub(1)]) * half;
            out[i] += inv_r[i] * profile.dphi(centered)?;
        }
    }
    if boundary == Boundary::Dirichlet {
        out[0] = 0.0;
        out[n - 1] = 0.0;
    }
    Ok(max_coeff)
}

fn radial_weights(grid: &Grid1D, n_dim: u32) -> Vec<f64> {
    let c = (n_dim - 1) as f64;
    (0..grid.n_nodes()).map(|i| c / grid.node(i)).collect()
}

/// Time derivative of the one-dimensional Perona-Malik scheme.
pub fn rhs_pm1d(field: &Field1D, profile: &NonlinearityProfile, boundary: Boundary) -> Result<Vec<f64>> {
    check_finite(&field.values)?;
    let mut out = Vec::new();
    pm_rates(&field.values, field.grid.spacing(), profile, &[], boundary, &mut Vec::new(), &mut out)?;
    Ok(out)
}

/// Time derivative of the radial Perona-Malik scheme in `n_dim` dimensions.
pub fn rhs_pm_radial(
    field: &Field1D,
    profile: &NonlinearityProfile,
    n_dim: u32,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    if field.grid.a <= 0.0 {
        return Err(Error::Domain {
            value: field.grid.a,
            range: "(0, b)".into(),
        });
    }
    if n_dim == 0 {
        return Err(Error::Config("n_dim must be at least 1".into()));
    }
    check_finite(&field.values)?;
    let weights = if n_dim > 1 {
        radial_weights(&field.grid, n_dim)
    } else {
        Vec::new()
    };
    let mut out = Vec::new();
    pm_rates(&field.values, field.grid.spacing(), profile, &weights, boundary, &mut Vec::new(), &mut out)?;
    Ok(out)
}

/// The bracket `L[v]` of the free-boundary models, without the factor
/// `g(v)`. Neumann ends reflect (`v_{−1} = v_1`).
fn fbp_bracket(v: &[f64], grid: &Grid1D, model: Model, plateau: f64, out: &mut Vec<f64>) {
    let n = v.len();
    let h = grid.spacing();
    let at = |i: isize| -> f64 {
        let j = if i < 0 {
            -i
        } else if i >= n as isize {
            2 * (n as isize - 1) - i
        } else {
            i
        };
        v[j as usize]
    };
    out.clear();
    for i in 0..n as isize {
        let (l, c, r) = (at(i - 1), at(i), at(i + 1));
        let mut val = (r - 2.0 * c + l) / (h * h);
        if model == Model::Fbp2 {
            let x = grid.node(i as usize);
            val += (r - l) / (2.0 * h * x) - c / (x * x) + plateau / (x * x);
        }
        out.push(val);
    }
}

fn fbp_rates(
    field: &Field1D,
    profile: &NonlinearityProfile,
    model: Model,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    let plateau = profile.plateau()?;
    let v: Vec<f64> = field.values.iter().map(|&x| x.max(0.0)).collect();
    check_finite(&v)?;
    if let Some(&bad) = v.iter().find(|&&x| x >= plateau) {
        return Err(Error::Range {
            what: "v",
            value: bad,
            lo: 0.0,
            hi: plateau,
        });
    }
    let mut out = Vec::with_capacity(v.len());
    fbp_bracket(&v, &field.grid, model, plateau, &mut out);
    for (rate, &vi) in out.iter_mut().zip(&v) {
        *rate = if vi > 0.0 { profile.coeff_g(vi)? * *rate } else { 0.0 };
    }
    if boundary == Boundary::Dirichlet {
        let n = out.len();
        out[0] = 0.0;
        out[n - 1] = 0.0;
    }
    Ok(out)
}

/// `dv/dt = g(v) v_xx` at positive nodes, zero where `v = 0`; negative
/// inputs are read as 0.
pub fn rhs_fbp1(field: &Field1D, profile: &NonlinearityProfile, boundary: Boundary) -> Result<Vec<f64>> {
    fbp_rates(field, profile, Model::Fbp1, boundary)
}

/// `dv/dt = g(v){v_rr + v_r/r − v/r² + φ'(1)/r²}` at positive nodes.
pub fn rhs_fbp2(field: &Field1D, profile: &NonlinearityProfile, boundary: Boundary) -> Result<Vec<f64>> {
    if field.grid.a <= 0.0 {
        return Err(Error::Domain {
            value: field.grid.a,
            range: "(0, b)".into(),
        });
    }
    fbp_rates(field, profile, Model::Fbp2, boundary)
}

/// `v = φ'(1) − h(u_x)` at cell midpoints, from one-sided gradients.
pub fn transform_u_to_v(u: &Field1D, profile: &NonlinearityProfile) -> Result<Field1D> {
    let g = u.grid;
    let h = g.spacing();
    let grid = Grid1D::new(g.a + 0.5 * h, g.b - 0.5 * h, g.n_cells - 1)?;
    let plateau = profile.plateau()?;
    let values = u
        .face_gradients()
        .into_iter()
        .map(|p| profile.truncated_flux(p).map(|f| (plateau - f).max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    Field1D::new(grid, values, u.time)
}

/// Why a run stopped before `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub time: f64,
    pub reason: String,
    pub max_gradient: f64,
}

/// Step-size statistics over one snapshot interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: u64,
    pub dt_min: f64,
    pub dt_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub model: Model,
    pub profile_name: String,
    pub snapshots: Vec<Field1D>,
    pub dt_history: Vec<DtInterval>,
    pub breakdown: Option<Breakdown>,
    pub total_steps: u64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> &Field1D {
        self.snapshots.last().expect("a trajectory holds at least the initial snapshot")
    }
}

/// Explicit Euler state for one run.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    profile: &'a NonlinearityProfile,
    config: RunConfig,
    field: Field1D,
    // free-boundary models only
    potential: Vec<f64>,
    plateau: f64,
    scratch: Vec<f64>,
    rates: Vec<f64>,
    inv_r: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(initial: Field1D, config: RunConfig, profile: &'a NonlinearityProfile) -> Result<Self> {
        config.validate()?;
        check_finite(&initial.values)?;
        if config.model.is_radial() && initial.grid.a <= 0.0 {
            return Err(Error::Config("radial models need a grid with a > 0".into()));
        }
        let plateau = profile.plateau()?;
        let mut field = initial;
        let mut potential = Vec::new();
        if config.model.is_free_boundary() {
            for (i, v) in field.values.iter_mut().enumerate() {
                *v = v.max(0.0);
                if *v >= plateau {
                    return Err(Error::Config(format!(
                        "initial v[{i}] = {v} reaches the plateau value {plateau}"
                    )));
                }
            }
            potential = field
                .values
                .iter()
                .map(|&v| profile.potential(v))
                .collect::<Result<_>>()?;
        } else {
            let worst = max_abs(&field.face_gradients());
            if worst > config.grad_blowup_cap {
                return Err(Error::Config(format!(
                    "initial gradient {worst} already exceeds the cap {}",
                    config.grad_blowup_cap
                )));
            }
        }
        Ok(Self {
            profile,
            config,
            field,
            potential,
            plateau,
            scratch: Vec::new(),
            rates: Vec::new(),
            inv_r: Vec::new(),
        })
    }

    pub fn field(&self) -> &Field1D {
        &self.field
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// The potential `Z` of a free-boundary run; `1 − Z` is the gradient of
    /// the underlying Perona-Malik solution. Empty for Perona-Malik runs.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Largest diffusion coefficient on the current state.
    pub fn max_coefficient(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        if self.config.model.is_free_boundary() {
            for &z in &self.potential {
                if z > 0.0 {
                    worst = worst.max(self.profile.d2phi(SIGMA_CRITICAL - z)?.abs());
                }
            }
        } else {
            let h = self.field.grid.spacing();
            for w in self.field.values.windows(2) {
                worst = worst.max(self.profile.d2phi((w[1] - w[0]) / h)?.abs());
            }
        }
        Ok(worst)
    }

    /// `cfl_safety·h²/max coeff`, or `None` when every coefficient vanishes.
    pub fn stable_dt(&self) -> Result<Option<f64>> {
        let c = self.max_coefficient()?;
        let h = self.field.grid.spacing();
        Ok((c > 0.0).then(|| self.config.cfl_safety * h * h / c))
    }

    /// Largest `|u_x|` for Perona-Malik runs, 0 for free-boundary runs.
    pub fn max_gradient(&self) -> f64 {
        if self.config.model.is_free_boundary() {
            0.0
        } else {
            let h = self.field.grid.spacing();
                let inv_h = 1.0 / h;
            let grads = self.field.values.windows(2).map(|w| (w[1] - w[0]) * inv_h);
            grads.fold(0.0, |m, p| if p.abs() > m || p.is_nan() { p.abs() } else { m })
        }
    }

    /// One explicit Euler step of length at most `dt_cap`; returns the step used.
    pub fn step(&mut self, dt_cap: f64) -> Result<f64> {
        if self.config.model.is_free_boundary() {
            self.step_free_boundary(dt_cap)
        } else {
            self.step_pm(dt_cap)
        }
    }

    fn step_pm(&mut self, dt_cap: f64) -> Result<f64> {
        let n_dim = if self.config.model == Model::PmRadial {
            self.config.radial_dimension
        } else {
            1
        };
        if self.inv_r.is_empty() && n_dim > 1 {
            self.inv_r = radial_weights(&self.field.grid, n_dim);
        }
        let coeff = pm_rates(
            &self.field.values,
            self.field.grid.spacing(),
            self.profile,
            &self.inv_r,
            self.config.boundary,
            &mut self.scratch,
            &mut self.rates,
        )?;
        let h = self.field.grid.spacing();
        let dt = if coeff > 0.0 {
            (self.config.cfl_safety * h * h / coeff).min(dt_cap)
        } else {
            dt_cap
        };
        for (u, r) in self.field.values.iter_mut().zip(&self.rates) {
            *u += dt * r;
        }
        self.field.time += dt;
        Ok(dt)
    }

    fn step_free_boundary(&mut self, dt_cap: f64) -> Result<f64> {
        let dt = match self.stable_dt()? {
            Some(dt) => dt.min(dt_cap),
            None => dt_cap,
        };
        let model = self.config.model;
        let boundary = self.config.boundary;
        let n = self.potential.len();
        fbp_bracket(&self.field.values, &self.field.grid, model, self.plateau, &mut self.rates);
        let z = &mut self.potential;
        self.scratch.clear();
        self.scratch.extend_from_slice(z);
        let old = &self.scratch;
        for i in 0..n {
            if boundary == Boundary::Dirichlet && (i == 0 || i == n - 1) {
                continue;
            }
            let active =
                old[i] > 0.0 || (i > 0 && old[i - 1] > 0.0) || (i + 1 < n && old[i + 1] > 0.0);
            if active {
                z[i] = (old[i] + dt * self.rates[i]).max(0.0);
            }
        }
        check_finite(z)?;
        for (&zi, v) in z.iter().zip(self.field.values.iter_mut()) {
            // Z = 1 corresponds to v = φ'(1), the edge of g's domain
            if zi >= SIGMA_CRITICAL {
                return Err(Error::Range {
                    what: "v",
                    value: self.plateau,
                    lo: 0.0,
                    hi: self.plateau,
                });
            }
            *v = self.profile.from_potential(zi)?;
        }
        self.field.time += dt;
        Ok(dt)
    }
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| if x.abs() > m || x.is_nan() { x.abs() } else { m })
}

/// One explicit Euler step from `field` of length at most `dt_cap`.
pub fn step_adaptive(
    field: &Field1D,
    config: &RunConfig,
    profile: &NonlinearityProfile,
    dt_cap: f64,
) -> Result<(Field1D, f64)> {
    let mut stepper = Stepper::new(field.clone(), *config, profile)?;
    let dt = stepper.step(dt_cap)?;
    Ok((stepper.field, dt))
}

/// Runs to `t_end`, storing snapshots at multiples of `snapshot_dt`.
pub fn integrate(initial: Field1D, config: RunConfig, profile: &NonlinearityProfile) -> Result<Trajectory> {
    integrate_observed(initial, config, profile, |_| Ok(()))
}

/// As [`integrate`], calling `observer` after every step.
pub fn integrate_observed(
    initial: Field1D,
    config: RunConfig,
    profile: &NonlinearityProfile,
    mut observer: impl FnMut(&Stepper) -> Result<()>,
) -> Result<Trajectory> {
    let mut stepper = Stepper::new(initial, config, profile)?;
    let t0 = stepper.field.time;
    let mut snapshots = vec![stepper.field.clone()];
    let mut dt_history = Vec::new();
    let mut breakdown = None;
    let mut total_steps = 0u64;
    let t_final = t0 + config.t_end;

    let mut k = 1u64;
    let mut interval = DtInterval {
        t_start: t0,
        t_end: t0,
        steps: 0,
        dt_min: f64::INFINITY,
        dt_max: 0.0,
    };
    while stepper.field.time < t_final {
        let target = (t0 + k as f64 * config.snapshot_dt).min(t_final);
        let before = stepper.field.time;
        let dt = stepper.step(target - before)?;
        total_steps += 1;
        interval.steps += 1;
        interval.dt_min = interval.dt_min.min(dt);
        interval.dt_max = interval.dt_max.max(dt);
        let reached = dt >= target - before;
        if reached {
            stepper.field.time = target;
        }
        observer(&stepper)?;

        let nonfinite = stepper.field.values.iter().any(|v| !v.is_finite());
        let grad = stepper.max_gradient();
        if nonfinite || grad > config.grad_blowup_cap {
            let reason = if nonfinite {
                "non-finite value".to_string()
            } else {
                format!("|gradient| = {grad:.1} exceeds cap {}", config.grad_blowup_cap)
            };
            breakdown = Some(Breakdown {
                time: stepper.field.time,
                reason,
                max_gradient: grad,
            });
            if !nonfinite {
                snapshots.push(stepper.field.clone());
            }
            interval.t_end = stepper.field.time;
            dt_history.push(interval);
            break;
        }
        if reached {
            snapshots.push(stepper.field.clone());
            interval.t_end = target;
            dt_history.push(interval);
            interval = DtInterval {
                t_start: target,
                t_end: target,
                steps: 0,
                dt_min: f64::INFINITY,
                dt_max: 0.0,
            };
            k += 1;
        }
    }

    Ok(Trajectory {
        model: config.model,
        profile_name: profile.name().to_string(),
        snapshots,
        dt_history,
        breakdown,
        total_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pm() -> NonlinearityProfile {
        NonlinearityProfile::perona_malik()
    }

    fn field(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Field1D {
        Field1D::from_fn(Grid1D::new(a, b, n).unwrap(), f).unwrap()
    }

    #[test]
    fn linear_fields_are_stationary_in_the_interior() {
        for slope in [0.3, 1.0, 2.5] {
            let f = field(0.0, 1.0, 32, |x| slope * x);
            let r = rhs_pm1d(&f, &pm(), Boundary::Neumann).unwrap();
            for &ri in &r[1..32] {
                assert_abs_diff_eq!(ri, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn parabola_rate_matches_chain_rule() {
        let f = field(0.0, 1.0, 1000, |x| 0.5 * x * x);
        let r = rhs_pm1d(&f, &pm(), Boundary::Neumann).unwrap();
        // u_x = 0.5 at x = 0.5, u_xx = 1, φ''(0.5) = 0.75/1.5625
        assert_abs_diff_eq!(r[500], 0.48, epsilon = 1e-5);
    }

    #[test]
    fn dirichlet_freezes_endpoints() {
        let f = field(0.0, 1.0, 16, |x| x * x);
        let r = rhs_pm1d(&f, &pm(), Boundary::Dirichlet).unwrap();
        assert_eq!(r[0], 0.0);
        assert_eq!(r[16], 0.0);
    }

    #[test]
    fn radial_rates() {
        let p = pm();
        let c = field(0.5, 1.5, 100, |_| 2.0);
        assert!(rhs_pm_radial(&c, &p, 3, Boundary::Neumann).unwrap().iter().all(|&r| r == 0.0));
        let lin = field(0.5, 1.5, 100, |r| r);
        let rates = rhs_pm_radial(&lin, &p, 2, Boundary::Neumann).unwrap();
        assert_abs_diff_eq!(rates[50], 0.5, epsilon = 1e-12);
        let bump = field(0.5, 1.5, 100, |r| (3.0 * r).sin());
        assert_eq!(
            rhs_pm_radial(&bump, &p, 1, Boundary::Neumann).unwrap(),
            rhs_pm1d(&bump, &p, Boundary::Neumann).unwrap()
        );
        let origin = field(0.0, 1.0, 10, |r| r);
        assert!(matches!(
            rhs_pm_radial(&origin, &p, 2, Boundary::Neumann),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn fbp_rates() {
        let p = pm();
        let zero = field(0.0, 1.0, 20, |_| 0.0);
        assert!(rhs_fbp1(&zero, &p, Boundary::Neumann).unwrap().iter().all(|&r| r == 0.0));

        let bump = field(0.0, 1.0, 100, |x| 0.25 - (x - 0.5) * (x - 0.5));
        let r = rhs_fbp1(&bump, &p, Boundary::Neumann).unwrap();
        // v = 0.25 at x = 0.5, discrete Laplacian −2
        assert_abs_diff_eq!(r[50], -2.0 * 0.808_012_701_892_219_3, epsilon = 1e-9);

        let mut top = field(0.0, 1.0, 20, |_| 0.1);
        top.values[7] = 0.5;
        assert!(matches!(rhs_fbp1(&top, &p, Boundary::Neumann), Err(Error::Range { .. })));

        let flat = field(0.5, 1.5, 100, |_| 0.2);
        let r2 = rhs_fbp2(&flat, &p, Boundary::Neumann).unwrap();
        assert_abs_diff_eq!(r2[50], p.coeff_g(0.2).unwrap() * (0.5 - 0.2), epsilon = 1e-12);
        assert!(rhs_fbp2(&field(0.5, 1.5, 40, |_| 0.0), &p, Boundary::Neumann)
            .unwrap()
            .iter()
            .all(|&r| r == 0.0));

        // the radial rate is the planar one plus the lower-order terms
        let g = Grid1D::new(0.5, 1.5, 100).unwrap();
        let v = Field1D::from_fn(g, |r| 0.2 * (std::f64::consts::PI * (r - 0.5)).sin().powi(2)).unwrap();
        let (r1, r2) = (
            rhs_fbp1(&v, &p, Boundary::Neumann).unwrap(),
            rhs_fbp2(&v, &p, Boundary::Neumann).unwrap(),
        );
        let h = g.spacing();
        for i in 1..100 {
            let (x, vi) = (g.node(i), v.values[i]);
            if vi <= 0.0 {
                continue;
            }
            let vr = (v.values[i + 1] - v.values[i - 1]) / (2.0 * h);
            let extra = p.coeff_g(vi).unwrap() * (vr / x - vi / (x * x) + 0.5 / (x * x));
            assert_abs_diff_eq!(r2[i], r1[i] + extra, epsilon = 1e-10);
        }
    }

    #[test]
    fn dt_selection() {
        let p = pm();
        let mut cfg = RunConfig::new(Model::Pm1d, 1.0, 0.5);
        let flat = field(0.0, 1.0, 100, |_| 1.0);
        let (_, dt) = step_adaptive(&flat, &cfg, &p, 1.0).unwrap();
        // φ''(0) = 1, h = 0.01
        assert_abs_diff_eq!(dt, 4e-5, epsilon = 1e-18);

        cfg.model = Model::Fbp1;
        let zero = field(0.0, 1.0, 100, |_| 0.0);
        let (next, dt) = step_adaptive(&zero, &cfg, &p, 0.5).unwrap();
        assert_eq!(dt, 0.5);
        assert_eq!(next.values, zero.values);

        let quarter = field(0.0, 1.0, 100, |_| 0.25);
        let (_, dt) = step_adaptive(&quarter, &cfg, &p, 1.0).unwrap();
        assert_abs_diff_eq!(dt, 0.4 * 1e-4 / 0.808_012_701_892_219_3, epsilon = 1e-15);
    }

    #[test]
    fn integrate_snapshots_and_zero_horizon() {
        let p = pm();
        let u0 = field(0.0, 1.0, 50, |x| 0.9 * x - 0.1 * (6.0 * x).sin());
        let traj = integrate(u0.clone(), RunConfig::new(Model::Pm1d, 0.1, 0.025), &p).unwrap();
        assert!(traj.breakdown.is_none());
        let t = traj.times();
        assert_eq!(t.len(), 5);
        assert_abs_diff_eq!(t[4], 0.1, epsilon = 1e-15);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(traj.dt_history.len(), 4);

        let still = integrate(u0, RunConfig::new(Model::Pm1d, 0.0, 0.025), &p).unwrap();
        assert_eq!(still.snapshots.len(), 1);
    }

    #[test]
    fn breakdown_is_flagged_not_thrown() {
        let p = pm();
        let u0 = field(0.0, 1.0, 20, |x| 40.0 * x);
        let mut cfg = RunConfig::new(Model::Pm1d, 0.1, 0.05);
        cfg.grad_blowup_cap = 39.0;
        assert!(matches!(integrate(u0.clone(), cfg, &p), Err(Error::Config(_))));
        // stairs with large jumps sharpen until the cap is hit
        let stairs = field(0.0, 1.0, 20, |x| (4.0 * x).floor() * 0.5 + 0.5 * x);
        cfg.grad_blowup_cap = 11.0;
        let traj = integrate(stairs, cfg, &p).unwrap();
        let b = traj.breakdown.as_ref().expect("cap exceeded");
        assert!(b.max_gradient > 11.0);
        assert_eq!(traj.last().time, b.time);
    }

    #[test]
    fn transform_values() {
        let p = pm();
        for (slope, want) in [(1.0, 0.0), (0.5, 0.1), (2.0, 0.0)] {
            let v = transform_u_to_v(&field(0.0, 1.0, 20, |x| slope * x), &p).unwrap();
            assert_eq!(v.values.len(), 20);
            assert!(v.values.iter().all(|&x| (x - want).abs() < 1e-12));
            assert_abs_diff_eq!(v.grid.a, 0.025, epsilon = 1e-15);
        }
    }

    #[test]
    fn free_boundary_support_advances() {
        let p = pm();
        let v0 = field(0.0, 1.0, 100, |x| {
            if (0.4..=0.6).contains(&x) {
                0.2 * (std::f64::consts::PI * (x - 0.4) / 0.2).sin().powi(2)
            } else {
                0.0
            }
        });
        let before = v0.values.iter().filter(|&&v| v > 0.0).count();
        let traj = integrate(v0, RunConfig::new(Model::Fbp1, 0.01, 0.01), &p).unwrap();
        let after = traj.last().values.iter().filter(|&&v| v > 0.0).count();
        assert!(after > before, "{before} -> {after}");
    }
}
