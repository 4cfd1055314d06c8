//! The nonlinearity `φ` and everything derived from it.
//!
//! `φ` is an even function with `φ'' > 0` on `[0, 1)`, `φ''(1) = 0` and
//! `φ'' < 0` beyond 1; the gradient threshold is fixed at [`SIGMA_CRITICAL`].
//! From `φ` we build the truncated flux `h` (monotone, `C¹`, equal to `φ'` on
//! `[0, 1]` and constant `φ'(1)` beyond), its inverse on `(0, 1)`, and the
//! degenerate diffusivity `g(σ) = φ''(h⁻¹(φ'(1) − σ))` of the transformed
//! free-boundary problem.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Gradient magnitude separating the forward and backward regimes.
pub const SIGMA_CRITICAL: f64 = 1.0;

/// Absolute tolerance on `|h(σ) − y|` accepted by [`NonlinearityProfile::h_inverse`].
pub const TOL_ROOT: f64 = 1e-12;

/// Margin used by the sign tests of [`NonlinearityProfile::check_hypotheses`].
pub const HYPOTHESIS_MARGIN: f64 = 1e-6;

/// Below this potential `v` comes from its two-term expansion.
const SMALL_POTENTIAL: f64 = 1e-6;
/// Below this potential `v` is integrated rather than differenced.
const QUADRATURE_POTENTIAL: f64 = 0.05;
const GAUSS_LEGENDRE_5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
];

/// A sampled even function `φ` with derivatives from fourth-order central
/// differences on a uniform grid.
#[derive(Debug, Clone)]
pub struct Table {
    start: f64,
    spacing: f64,
    values: Vec<f64>,
    // nodal derivatives of order 1, 2, 3; NaN where the stencil does not fit
    derivs: [Vec<f64>; 3],
}

impl Table {
    /// Builds a table from ascending, uniformly spaced samples. A table
    /// starting at `σ = 0` is mirrored onto the negative axis using evenness.
    pub fn new(sigma: &[f64], phi: &[f64]) -> Result<Self> {
        if sigma.len() != phi.len() {
            return Err(Error::Table(format!(
                "{} abscissae but {} values",
                sigma.len(),
                phi.len()
            )));
        }
        if sigma.len() < 8 {
            return Err(Error::Table("need at least 8 samples".into()));
        }
        if sigma.iter().chain(phi).any(|v| !v.is_finite()) {
            return Err(Error::Table("non-finite sample".into()));
        }
        let spacing = sigma[1] - sigma[0];
        if spacing <= 0.0 {
            return Err(Error::Table("abscissae must be ascending".into()));
        }
        for w in sigma.windows(2) {
            if ((w[1] - w[0]) - spacing).abs() > 1e-9 * spacing.max(1.0) {
                return Err(Error::Table("abscissae must be uniformly spaced".into()));
            }
        }

        let (start, values) = if sigma[0].abs() <= 1e-12 * spacing.max(1.0) {
            let mut mirrored: Vec<f64> = phi[1..].iter().rev().copied().collect();
            mirrored.extend_from_slice(phi);
            (-sigma[sigma.len() - 1], mirrored)
        } else {
            (sigma[0], phi.to_vec())
        };

        let n = values.len();
        let h = spacing;
        let mut d1 = vec![f64::NAN; n];
        let mut d2 = vec![f64::NAN; n];
        let mut d3 = vec![f64::NAN; n];
        let f = &values;
        for i in 2..n.saturating_sub(2) {
            d1[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
            d2[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2])
                / (12.0 * h * h);
        }
        for i in 3..n.saturating_sub(3) {
            d3[i] = (f[i - 3] - 8.0 * f[i - 2] + 13.0 * f[i - 1] - 13.0 * f[i + 1]
                + 8.0 * f[i + 2]
                - f[i + 3])
                / (8.0 * h * h * h);
        }
        Ok(Self {
            start,
            spacing,
            values,
            derivs: [d1, d2, d3],
        })
    }

    /// Reads whitespace-separated `σ φ(σ)` rows; blank lines and `#` comments
    /// are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut sigma = Vec::new();
        let mut phi = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let mut next = |name: &str| -> Result<f64> {
                cols.next()
                    .ok_or_else(|| Error::Table(format!("line {}: missing {name}", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Table(format!("line {}: {e}", lineno + 1)))
            };
            sigma.push(next("sigma")?);
            phi.push(next("phi")?);
        }
        Self::new(&sigma, &phi)
    }

    fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing
    }

    /// Inclusive index range where the order-`order` nodal data are defined.
    fn valid(&self, order: usize) -> (usize, usize) {
        let pad = match order {
            0 => 0,
            1 | 2 => 2,
            _ => 3,
        };
        (pad, self.values.len() - 1 - pad)
    }

    fn support(&self, order: usize) -> (f64, f64) {
        let (lo, hi) = self.valid(order);
        (self.node(lo), self.node(hi))
    }

    fn eval(&self, sigma: f64, order: usize) -> Result<f64> {
        let (lo, hi) = self.valid(order);
        let (slo, shi) = (self.node(lo), self.node(hi));
        let tol = 1e-12 * self.spacing;
        if !(sigma >= slo - tol && sigma <= shi + tol) {
            return Err(Error::Range {
                what: "sigma",
                value: sigma,
                lo: slo,
                hi: shi,
            });
        }
        let data = if order == 0 {
            &self.values
        } else {
            &self.derivs[order - 1]
        };
        // cubic Lagrange interpolation on four neighbouring nodes
        let pos = (sigma - self.start) / self.spacing;
        let base = (pos.floor() as isize - 1).clamp(lo as isize, hi as isize - 3) as usize;
        let s = pos - base as f64;
        let f = &data[base..base + 4];
        let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
        let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
        let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
        let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
        Ok(f[0] * l0 + f[1] * l1 + f[2] * l2 + f[3] * l3)
    }
}

#[derive(Debug, Clone)]
pub enum ProfileKind {
    /// `φ(σ) = ½ log(1 + σ²)` with closed-form derivatives.
    ConcretePm,
    Tabulated(Box<Table>),
}

/// One nonlinearity `φ` together with its name.
#[derive(Debug, Clone)]
pub struct NonlinearityProfile {
    kind: ProfileKind,
    name: String,
}

/// Outcome of one hypothesis test; `margin > 0` (or `>= 0` for the
/// equality test) means it holds.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct HypothesisCheck {
    pub holds: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct HypothesisReport {
    /// `φ'' > 0` on `[0, 1)`.
    pub convex_below: HypothesisCheck,
    /// `φ''(1) = 0`.
    pub critical_inflection: HypothesisCheck,
    /// `φ'' < 0` beyond 1.
    pub concave_above: HypothesisCheck,
    /// `φ'''(1) < 0`.
    pub strict_third: HypothesisCheck,
    /// `φ(σ) = φ(−σ)` on the samples.
    pub even: HypothesisCheck,
}

impl HypothesisReport {
    /// The three sign conditions needed by the one-dimensional results.
    pub fn basic(&self) -> bool {
        self.convex_below.holds && self.critical_inflection.holds && self.concave_above.holds
    }

    pub fn all(&self) -> bool {
        self.basic() && self.strict_third.holds && self.even.holds
    }
}

/// Constants entering the radial expansion rate.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct DerivedConstants {
    /// `G = lim g(σ)/√σ = √(2|φ'''(1)|)`.
    pub g_limit: f64,
    /// `A = φ'(1)/r₂²`.
    pub a_const: f64,
    /// `k₀ = G√A`.
    pub k0: f64,
    pub r2: f64,
}

impl NonlinearityProfile {
    pub fn perona_malik() -> Self {
        Self {
            kind: ProfileKind::ConcretePm,
            name: "pm".into(),
        }
    }

    pub fn tabulated(name: impl Into<String>, table: Table) -> Self {
        Self {
            kind: ProfileKind::Tabulated(Box::new(table)),
            name: name.into(),
        }
    }

    /// `"pm"` selects the closed form, anything else is read as a sample file.
    pub fn from_spec(spec: &str) -> Result<Self> {
        if spec == "pm" {
            return Ok(Self::perona_malik());
        }
        let table = Table::from_file(Path::new(spec))?;
        Ok(Self::tabulated(spec, table))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    /// `φ⁽ᵒʳᵈᵉʳ⁾(σ)` for `order ∈ {0, 1, 2, 3}`.
    pub fn eval(&self, sigma: f64, order: u8) -> Result<f64> {
        match &self.kind {
            ProfileKind::ConcretePm => {
                let s2 = sigma * sigma;
                let q = 1.0 + s2;
                Ok(match order {
                    0 => 0.5 * q.ln(),
                    1 => sigma / q,
                    2 => (1.0 - s2) / (q * q),
                    3 => -2.0 * sigma * (3.0 - s2) / (q * q * q),
                    _ => {
                        return Err(Error::Domain {
                            value: order as f64,
                            range: "{0, 1, 2, 3}".into(),
                        })
                    }
                })
            }
            ProfileKind::Tabulated(t) => {
                if order > 3 {
                    return Err(Error::Domain {
                        value: order as f64,
                        range: "{0, 1, 2, 3}".into(),
                    });
                }
                t.eval(sigma, order as usize)
            }
        }
    }

    #[inline]
    pub fn dphi(&self, sigma: f64) -> Result<f64> {
        match self.kind {
            ProfileKind::ConcretePm => Ok(sigma / (1.0 + sigma * sigma)),
            _ => self.eval(sigma, 1),
        }
    }

    #[inline]
    pub fn d2phi(&self, sigma: f64) -> Result<f64> {
        match self.kind {
            ProfileKind::ConcretePm => {
                let q = 1.0 + sigma * sigma;
                Ok((1.0 - sigma * sigma) / (q * q))
            }
            _ => self.eval(sigma, 2),
        }
    }

    /// `(φ'(σ), φ''(σ))` in one evaluation.
    #[inline]
    pub fn dphi_d2phi(&self, sigma: f64) -> Result<(f64, f64)> {
        match self.kind {
            ProfileKind::ConcretePm => {
                let s2 = sigma * sigma;
                let inv = 1.0 / (1.0 + s2);
                Ok((sigma * inv, (1.0 - s2) * inv * inv))
            }
            _ => Ok((self.eval(sigma, 1)?, self.eval(sigma, 2)?)),
        }
    }

    #[inline]
    pub fn d3phi(&self, sigma: f64) -> Result<f64> {
        self.eval(sigma, 3)
    }

    /// Upper end of the gradient range on which `φ''` can be evaluated.
    pub fn sigma_max(&self) -> f64 {
        match &self.kind {
            ProfileKind::ConcretePm => f64::INFINITY,
            ProfileKind::Tabulated(t) => t.support(2).1,
        }
    }

    pub fn check_hypotheses(&self, sample_count: usize) -> Result<HypothesisReport> {
        if sample_count < 16 {
            return Err(Error::Config(format!(
                "sample_count = {sample_count}, need at least 16"
            )));
        }
        let n = sample_count;
        let upper = self.sigma_max().min(5.0);
        if upper <= SIGMA_CRITICAL {
            return Err(Error::Range {
                what: "sigma",
                value: SIGMA_CRITICAL,
                lo: 0.0,
                hi: upper,
            });
        }

        let mut below = f64::INFINITY;
        for i in 0..n {
            let s = i as f64 / n as f64;
            below = below.min(self.d2phi(s)?);
        }
        let mut above = f64::INFINITY;
        for i in 1..=n {
            let s = SIGMA_CRITICAL + (upper - SIGMA_CRITICAL) * i as f64 / n as f64;
            above = above.min(-self.d2phi(s)?);
        }
        let at_one = self.d2phi(SIGMA_CRITICAL)?;
        let third = self.d3phi(SIGMA_CRITICAL)?;

        let mut asym: f64 = 0.0;
        for i in 0..=n {
            let s = upper * i as f64 / n as f64;
            if let (Ok(p), Ok(m)) = (self.eval(s, 0), self.eval(-s, 0)) {
                asym = asym.max((p - m).abs());
            }
        }

        let sign = |margin: f64| HypothesisCheck {
            holds: margin > 0.0,
            margin,
        };
        let eq_margin = HYPOTHESIS_MARGIN - at_one.abs();
        let even_margin = HYPOTHESIS_MARGIN - asym;
        Ok(HypothesisReport {
            convex_below: sign(below),
            critical_inflection: HypothesisCheck {
                holds: eq_margin >= 0.0,
                margin: eq_margin,
            },
            concave_above: sign(above),
            strict_third: sign(-third - HYPOTHESIS_MARGIN),
            even: HypothesisCheck {
                holds: even_margin >= 0.0,
                margin: even_margin,
            },
        })
    }

    /// `φ'(1)`, the plateau value of the truncated flux.
    pub fn plateau(&self) -> Result<f64> {
        self.dphi(SIGMA_CRITICAL)
    }

    /// The truncated flux `h`: `φ'` on `[0, 1]`, `φ'(1)` beyond, the
    /// quadratic joiner `φ''(0)(σ + ½)² − φ''(0)/4` on `[−½, 0)`, constant
    /// below `−½`.
    pub fn truncated_flux(&self, sigma: f64) -> Result<f64> {
        if sigma >= SIGMA_CRITICAL {
            self.plateau()
        } else if sigma >= 0.0 {
            self.dphi(sigma)
        } else {
            let c = self.d2phi(0.0)?;
            let s = sigma.max(-0.5);
            Ok(c * (s + 0.5) * (s + 0.5) - 0.25 * c)
        }
    }

    /// Derivative of [`Self::truncated_flux`].
    pub fn truncated_flux_slope(&self, sigma: f64) -> Result<f64> {
        if sigma >= SIGMA_CRITICAL {
            Ok(0.0)
        } else if sigma >= 0.0 {
            self.d2phi(sigma)
        } else if sigma >= -0.5 {
            Ok(2.0 * self.d2phi(0.0)? * (sigma + 0.5))
        } else {
            Ok(0.0)
        }
    }

    /// Inverse of `h` from `(0, φ'(1))` onto `(0, 1)`, by bisection.
    pub fn h_inverse(&self, y: f64) -> Result<f64> {
        let top = self.plateau()?;
        if !(y > 0.0 && y < top) {
            return Err(Error::Domain {
                value: y,
                range: format!("(0, {top})"),
            });
        }
        let (mut lo, mut hi) = (0.0_f64, SIGMA_CRITICAL);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.dphi(mid)? < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (flo, fhi) = (self.dphi(lo)?, self.dphi(hi)?);
        let root = if (flo - y).abs() <= (fhi - y).abs() {
            lo
        } else {
            hi
        };
        debug_assert!((self.dphi(root)? - y).abs() <= TOL_ROOT);
        Ok(root)
    }

    /// Degenerate diffusivity `g(σ) = φ''(h⁻¹(φ'(1) − σ))` on `(0, φ'(1))`.
    pub fn coeff_g(&self, sigma: f64) -> Result<f64> {
        let top = self.plateau()?;
        if !(sigma > 0.0 && sigma < top) {
            return Err(Error::Domain {
                value: sigma,
                range: format!("(0, {top})"),
            });
        }
        self.d2phi(self.preimage(sigma, top)?)
    }

    /// `h⁻¹(φ'(1) − v)` for `v ∈ (0, φ'(1))`. When `φ'(1) − v` rounds to
    /// `φ'(1)` the leading-order expansion `v ≈ |φ'''(1)| (1 − σ)²/2` is used.
    fn preimage(&self, v: f64, top: f64) -> Result<f64> {
        let y = top - v;
        if y < top {
            return self.h_inverse(y);
        }
        let third = self.d3phi(SIGMA_CRITICAL)?.abs();
        if third == 0.0 {
            return Ok(SIGMA_CRITICAL);
        }
        Ok(SIGMA_CRITICAL - (2.0 * v / third).sqrt())
    }

    /// The potential `Z(v) = ∫₀^v ds / g(s) = 1 − h⁻¹(φ'(1) − v)`, which
    /// turns `v_t = g(v) L` into `Z_t = L`. Defined on `[0, φ'(1))`.
    pub fn potential(&self, v: f64) -> Result<f64> {
        let top = self.plateau()?;
        if v == 0.0 {
            return Ok(0.0);
        }
        if !(v > 0.0 && v < top) {
            return Err(Error::Domain {
                value: v,
                range: format!("[0, {top})"),
            });
        }
        // 1 − h⁻¹ loses all digits once v is below ~10⁻³², so tiny v inverts
        // the same expansion `from_potential` uses.
        let second = self.d2phi(SIGMA_CRITICAL)?.max(0.0);
        let half_third = -0.5 * self.d3phi(SIGMA_CRITICAL)?;
        if half_third > 0.0 && v < second * SMALL_POTENTIAL + half_third * SMALL_POTENTIAL * SMALL_POTENTIAL {
            return Ok(2.0 * v / (second + (second * second + 4.0 * half_third * v).sqrt()));
        }
        Ok(SIGMA_CRITICAL - self.preimage(v, top)?)
    }

    /// Inverse of [`Self::potential`]: `v = φ'(1) − h(1 − Z)`.
    ///
    /// The difference cancels for small `Z` (at `Z ≈ 10⁻⁸` it rounds to zero),
    /// so small potentials use `∫_{1−Z}^{1} φ''` by Gauss-Legendre quadrature
    /// and tiny ones the expansion `φ''(1)Z − φ'''(1)Z²/2`.
    pub fn from_potential(&self, z: f64) -> Result<f64> {
        if z <= 0.0 {
            return Ok(0.0);
        }
        if z < SMALL_POTENTIAL {
            let second = self.d2phi(SIGMA_CRITICAL)?.max(0.0);
            let third = self.d3phi(SIGMA_CRITICAL)?;
            return Ok(second * z - 0.5 * third * z * z);
        }
        if z < QUADRATURE_POTENTIAL {
            let mid = SIGMA_CRITICAL - 0.5 * z;
            let mut sum = 0.0;
            for (x, w) in GAUSS_LEGENDRE_5 {
                sum += w * self.d2phi(mid + 0.5 * z * x)?;
            }
            return Ok(0.5 * z * sum);
        }
        Ok(self.plateau()? - self.truncated_flux(SIGMA_CRITICAL - z)?)
    }

    /// `G`, `A` and `k₀` for outer radius `r2`.
    pub fn constants(&self, r2: f64) -> Result<DerivedConstants> {
        if !(r2 > 0.0 && r2.is_finite()) {
            return Err(Error::Domain {
                value: r2,
                range: "(0, inf)".into(),
            });
        }
        let report = self.check_hypotheses(64)?;
        if !report.convex_below.holds {
            return Err(Error::Hypothesis("phi'' > 0 on [0,1)"));
        }
        if !report.critical_inflection.holds {
            return Err(Error::Hypothesis("phi''(1) = 0"));
        }
        if !report.concave_above.holds {
            return Err(Error::Hypothesis("phi'' < 0 on (1,inf)"));
        }
        let third = self.d3phi(SIGMA_CRITICAL)?;
        if third >= 0.0 || !report.strict_third.holds {
            return Err(Error::Hypothesis("phi'''(1) < 0"));
        }
        let slope = self.plateau()?;
        let g_limit = (2.0 * third.abs()).sqrt();
        let a_const = slope / (r2 * r2);
        Ok(DerivedConstants {
            g_limit,
            a_const,
            k0: g_limit * a_const.sqrt(),
            r2,
        })
    }
}
