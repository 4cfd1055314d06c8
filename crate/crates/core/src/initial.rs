//! Named initial data.
//!
//! Each preset knows its value and its slope in closed form, so a
//! free-boundary datum `v₀ = φ'(1) − h(u₀')` can be sampled at nodes without
//! differencing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field1D, Grid1D};
use crate::nonlinearity::NonlinearityProfile;

fn one() -> f64 {
    1.0
}
fn default_max_slope() -> f64 {
    1.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    /// `u = offset + slope·(x − a)`.
    Ramp {
        #[serde(default = "one")]
        slope: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `u' = max_slope·sin²(π(x − a)/(b − a))`, vanishing at both ends.
    Sine {
        #[serde(default = "default_max_slope")]
        max_slope: f64,
    },
    /// `u = offset + height·tanh((x − center)/width)`.
    TanhFront {
        center: f64,
        width: f64,
        height: f64,
        #[serde(default)]
        offset: f64,
    },
    /// The two-dimensional cubic datum of the convexity counterexample; only
    /// meaningful on a [`crate::solvers::Patch2D`].
    TaylorCounterexample { n: u32 },
    /// `amplitude·sin²(π(x − left)/(right − left))` on `(left, right)`, zero
    /// elsewhere.
    Bump { left: f64, right: f64, amplitude: f64 },
    /// `u' ` piecewise linear through `(x, slope)` knots, constant beyond the
    /// outer knots, and `u(a) = 0`.
    GradientProfile { knots: Vec<(f64, f64)> },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Ramp { .. } => "ramp",
            Preset::Sine { .. } => "sine",
            Preset::TanhFront { .. } => "tanh-front",
            Preset::TaylorCounterexample { .. } => "taylor-counterexample",
            Preset::Bump { .. } => "bump",
            Preset::GradientProfile { .. } => "gradient-profile",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Preset::TanhFront { width, .. } if !(*width > 0.0) => {
                Err(Error::Config(format!("tanh-front width = {width} must be positive")))
            }
            Preset::Bump { left, right, .. } if !(left < right) => {
                Err(Error::Config(format!("bump needs left < right, got ({left}, {right})")))
            }
            Preset::GradientProfile { knots } => {
                if knots.is_empty() {
                    return Err(Error::Config("gradient-profile needs at least one knot".into()));
                }
                if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::Config("gradient-profile knots must be strictly increasing".into()));
                }
                Ok(())
            }
            Preset::TaylorCounterexample { n } if *n == 0 => {
                Err(Error::Config("taylor-counterexample needs n >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    fn one_dimensional(&self) -> Result<()> {
        if let Preset::TaylorCounterexample { .. } = self {
            return Err(Error::Config(
                "taylor-counterexample is a two-dimensional patch datum".into(),
            ));
        }
        self.validate()
    }

    /// `u(x)` on the grid interval `[a, b]`.
    pub fn value(&self, a: f64, b: f64, x: f64) -> Result<f64> {
        self.one_dimensional()?;
        Ok(match self {
            Preset::Ramp { slope, offset } => offset + slope * (x - a),
            Preset::Sine { max_slope } => {
                let len = b - a;
                let xi = (x - a) / len;
                0.5 * max_slope * len * (xi - (2.0 * PI * xi).sin() / (2.0 * PI))
            }
            Preset::TanhFront {
                center,
                width,
                height,
                offset,
            } => offset + height * ((x - center) / width).tanh(),
            Preset::Bump {
                left,
                right,
                amplitude,
            } => {
                if x <= *left || x >= *right {
                    0.0
                } else {
                    amplitude * (PI * (x - left) / (right - left)).sin().powi(2)
                }
            }
            Preset::GradientProfile { knots } => integrate_knots(knots, a, x),
            Preset::TaylorCounterexample { .. } => unreachable!(),
        })
    }

    /// `u'(x)`.
    pub fn slope(&self, a: f64, b: f64, x: f64) -> Result<f64> {
        self.one_dimensional()?;
        Ok(match self {
            Preset::Ramp { slope, .. } => *slope,
            Preset::Sine { max_slope } => max_slope * (PI * (x - a) / (b - a)).sin().powi(2),
            Preset::TanhFront {
                center,
                width,
                height,
                ..
            } => {
                let c = ((x - center) / width).cosh();
                height / (width * c * c)
            }
            Preset::Bump {
                left,
                right,
                amplitude,
            } => {
                if x <= *left || x >= *right {
                    0.0
                } else {
                    let k = PI / (right - left);
                    amplitude * k * (2.0 * k * (x - left)).sin()
                }
            }
            Preset::GradientProfile { knots } => knot_slope(knots, x),
            Preset::TaylorCounterexample { .. } => unreachable!(),
        })
    }

    pub fn sample(&self, grid: Grid1D) -> Result<Field1D> {
        let values = grid
            .nodes()
            .into_iter()
            .map(|x| self.value(grid.a, grid.b, x))
            .collect::<Result<_>>()?;
        Field1D::new(grid, values, 0.0)
    }

    /// Nodal `v₀ = φ'(1) − h(u₀'(x))` for the free-boundary models.
    pub fn sample_transformed(&self, grid: Grid1D, profile: &NonlinearityProfile) -> Result<Field1D> {
        let top = profile.plateau()?;
        let values = grid
            .nodes()
            .into_iter()
            .map(|x| {
                let p = self.slope(grid.a, grid.b, x)?;
                Ok((top - profile.truncated_flux(p)?).max(0.0))
            })
            .collect::<Result<_>>()?;
        Field1D::new(grid, values, 0.0)
    }
}

fn knot_slope(knots: &[(f64, f64)], x: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let k = knots.partition_point(|&(kx, _)| kx <= x);
    let (x0, s0) = knots[k - 1];
    let (x1, s1) = knots[k];
    s0 + (s1 - s0) * (x - x0) / (x1 - x0)
}

/// Exact integral of the piecewise-linear slope from `a` to `x`.
fn integrate_knots(knots: &[(f64, f64)], a: f64, x: f64) -> f64 {
    if x <= a {
        return 0.0;
    }
    let mut breaks = vec![a];
    breaks.extend(knots.iter().map(|k| k.0).filter(|&k| k > a && k < x));
    breaks.push(x);
    breaks
        .windows(2)
        .map(|w| 0.5 * (knot_slope(knots, w[0]) + knot_slope(knots, w[1])) * (w[1] - w[0]))
        .sum()
}
