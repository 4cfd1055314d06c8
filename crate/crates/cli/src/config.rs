//! Experiment configuration.
//!
//! A config file names a scenario and overrides any subset of that
//! scenario's defaults; objects merge key by key, everything else (arrays,
//! the initial datum) is replaced whole.

use std::path::{Path, PathBuf};

use pmfront::{Boundary, Field1D, Grid1D, Model, NonlinearityProfile, Preset, RunConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{field, io, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "thm1-1d")]
    Thm1OneD,
    #[serde(rename = "thm2-radial")]
    Thm2Radial,
    #[serde(rename = "thm3-nonexistence")]
    Thm3Nonexistence,
    #[serde(rename = "thm5-fbp1")]
    Thm5Fbp1,
    #[serde(rename = "thm6-fbp2")]
    Thm6Fbp2,
    #[serde(rename = "barrier-verify-1")]
    BarrierVerify1,
    #[serde(rename = "barrier-verify-2")]
    BarrierVerify2,
    #[serde(rename = "counterexample")]
    Counterexample,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Thm1OneD,
        Scenario::Thm2Radial,
        Scenario::Thm3Nonexistence,
        Scenario::Thm5Fbp1,
        Scenario::Thm6Fbp2,
        Scenario::BarrierVerify1,
        Scenario::BarrierVerify2,
        Scenario::Counterexample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Thm1OneD => "thm1-1d",
            Scenario::Thm2Radial => "thm2-radial",
            Scenario::Thm3Nonexistence => "thm3-nonexistence",
            Scenario::Thm5Fbp1 => "thm5-fbp1",
            Scenario::Thm6Fbp2 => "thm6-fbp2",
            Scenario::BarrierVerify1 => "barrier-verify-1",
            Scenario::BarrierVerify2 => "barrier-verify-2",
            Scenario::Counterexample => "counterexample",
        }
    }

    pub fn model(self) -> Option<Model> {
        match self {
            Scenario::Thm1OneD => Some(Model::Pm1d),
            Scenario::Thm2Radial | Scenario::Thm3Nonexistence => Some(Model::PmRadial),
            Scenario::Thm5Fbp1 | Scenario::BarrierVerify1 => Some(Model::Fbp1),
            Scenario::Thm6Fbp2 | Scenario::BarrierVerify2 => Some(Model::Fbp2),
            Scenario::Counterexample => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// `(r₁, r₂)` or the planar interval.
    pub domain: [f64; 2],
    /// `(r₃, r₄)`: the initial subcritical seed, or the inner edge of the
    /// steep shell and the point where its slope is read.
    pub seed: [f64; 2],
    /// `r₅`: outer edge of the steep shell.
    #[serde(default)]
    pub shell_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFields {
    /// `None` picks the scenario's derived horizon.
    #[serde(default)]
    pub t_end: Option<f64>,
    pub snapshot_dt: f64,
    pub cfl_safety: f64,
    pub grad_blowup_cap: f64,
    pub boundary: Boundary,
    pub radial_dimension: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Preset(Preset),
    /// Two whitespace- or comma-separated columns `x value`.
    File { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    /// `(x₅, x₆)` or `(r₅, r₆)`.
    pub support: [f64; 2],
    /// Travelling speed as a fraction of `G√A`.
    pub speed_fraction: f64,
    pub t_star: f64,
    pub verify_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSpec {
    pub n_max: u32,
    /// Evaluate this member instead of searching for the smallest one.
    #[serde(default)]
    pub n: Option<u32>,
    pub half_width: f64,
    pub patch_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// `"pm"` or a path to a two-column `σ φ(σ)` table.
    pub profile: String,
    pub geometry: Geometry,
    pub n_cells: usize,
    pub run: RunFields,
    pub initial: InitialSpec,
    /// Sample `v₀ = φ'(1) − h(u₀')` from the preset's slope.
    pub transform_initial: bool,
    #[serde(default)]
    pub barrier: Option<BarrierSpec>,
    pub counterexample: CounterexampleSpec,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn radial_seed_datum() -> Preset {
    Preset::GradientProfile {
        knots: vec![(0.88, 1.3), (0.9, 0.5), (1.1, 0.5), (1.12, 1.3)],
    }
}

impl ExperimentConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        let run = |snapshot_dt: f64, t_end: Option<f64>| RunFields {
            t_end,
            snapshot_dt,
            cfl_safety: 0.4,
            grad_blowup_cap: 1e3,
            boundary: Boundary::Neumann,
            radial_dimension: 2,
        };
        let planar = Geometry {
            domain: [0.0, 1.0],
            seed: [0.3, 0.7],
            shell_end: None,
        };
        let radial = Geometry {
            domain: [0.5, 1.5],
            seed: [0.9, 1.1],
            shell_end: None,
        };
        let bump = InitialSpec::Preset(Preset::Bump {
            left: 0.3,
            right: 0.7,
            amplitude: 0.25,
        });
        let radial_barrier = Some(BarrierSpec {
            support: [0.92, 1.03],
            speed_fraction: 0.5,
            t_star: 0.2,
            verify_nodes: 400,
        });
        let base = ExperimentConfig {
            scenario,
            profile: "pm".into(),
            geometry: planar.clone(),
            n_cells: 400,
            run: run(0.01, Some(0.5)),
            initial: InitialSpec::Preset(Preset::Sine { max_slope: 1.4 }),
            transform_initial: false,
            barrier: None,
            counterexample: CounterexampleSpec {
                n_max: pmfront::counterexample::DEFAULT_N_MAX,
                n: None,
                half_width: 1e-3,
                patch_n: 64,
            },
            output_dir: None,
        };
        match scenario {
            Scenario::Thm1OneD | Scenario::Counterexample => base,
            Scenario::Thm2Radial => ExperimentConfig {
                geometry: radial,
                n_cells: 600,
                run: run(0.05, None),
                initial: InitialSpec::Preset(radial_seed_datum()),
                ..base
            },
            Scenario::Thm3Nonexistence => ExperimentConfig {
                geometry: Geometry {
                    domain: [0.5, 1.5],
                    seed: [0.7, 1.0],
                    shell_end: Some(1.3),
                },
                n_cells: 600,
                run: run(0.05, None),
                initial: InitialSpec::Preset(Preset::GradientProfile {
                    knots: vec![(0.68, 0.5), (0.7, 6.0), (1.3, 6.0), (1.32, 0.5)],
                }),
                ..base
            },
            Scenario::Thm5Fbp1 => ExperimentConfig {
                initial: bump,
                ..base
            },
            Scenario::BarrierVerify1 => ExperimentConfig {
                initial: bump,
                barrier: Some(BarrierSpec {
                    support: [0.35, 0.65],
                    speed_fraction: 0.0,
                    t_star: 0.5,
                    verify_nodes: 400,
                }),
                ..base
            },
            Scenario::Thm6Fbp2 | Scenario::BarrierVerify2 => ExperimentConfig {
                geometry: radial,
                n_cells: 600,
                run: run(0.01, None),
                initial: InitialSpec::Preset(radial_seed_datum()),
                transform_initial: true,
                barrier: radial_barrier,
                ..base
            },
        }
    }

    /// Parses a JSON config, layering it over the scenario defaults.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let user: Value = serde_json::from_str(text)?;
        Self::from_value(&user)
    }

    pub fn from_value(user: &Value) -> CliResult<Self> {
        let full = merged_value(user)?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(&full).map_err(|e| {
            let path = e.path().to_string();
            field(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io(path))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        let [a, b] = self.geometry.domain;
        let [lo, hi] = self.geometry.seed;
        let model = self.scenario.model();
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(field("geometry.domain", format!("need a < b, got [{a}, {b}]")));
        }
        if model.is_some_and(|m| m.is_radial()) && !(a > 0.0) {
            return Err(field("geometry.domain", format!("radial domains need r1 > 0, got {a}")));
        }
        if !(a < lo && lo < hi && hi < b) {
            return Err(field(
                "geometry.seed",
                format!("need {a} < seed[0] < seed[1] < {b}, got [{lo}, {hi}]"),
            ));
        }
        if self.scenario == Scenario::Thm3Nonexistence {
            match self.geometry.shell_end {
                Some(r5) if hi < r5 && r5 < b => {}
                Some(r5) => {
                    return Err(field(
                        "geometry.shell_end",
                        format!("need seed[1] = {hi} < shell_end < {b}, got {r5}"),
                    ))
                }
                None => return Err(field("geometry.shell_end", "required for thm3-nonexistence")),
            }
        }
        if self.n_cells < 8 {
            return Err(field("n_cells", format!("need at least 8, got {}", self.n_cells)));
        }
        if let Some(m) = model {
            self.run_config(1.0)
                .validate()
                .map_err(|e| field("run", e.to_string()))?;
            if let Some(t) = self.run.t_end {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(field("run.t_end", format!("must be finite and >= 0, got {t}")));
                }
            }
            if let InitialSpec::Preset(p) = &self.initial {
                p.validate().map_err(|e| field("initial", e.to_string()))?;
                if matches!(p, Preset::TaylorCounterexample { .. }) {
                    return Err(field("initial", "taylor-counterexample is a two-dimensional datum"));
                }
            } else if self.transform_initial {
                return Err(field("transform_initial", "only preset data can be transformed"));
            }
            if !m.is_free_boundary() && self.transform_initial {
                return Err(field("transform_initial", "only meaningful for free-boundary models"));
            }
        }
        let needs_barrier = matches!(
            self.scenario,
            Scenario::Thm6Fbp2 | Scenario::BarrierVerify1 | Scenario::BarrierVerify2
        );
        match (&self.barrier, needs_barrier) {
            (None, true) => return Err(field("barrier", "required for this scenario")),
            (Some(bar), true) => {
                let [x5, x6] = bar.support;
                if !(a < x5 && x5 < x6 && x6 < b) {
                    return Err(field(
                        "barrier.support",
                        format!("need {a} < support[0] < support[1] < {b}, got [{x5}, {x6}]"),
                    ));
                }
                let radial = self.scenario != Scenario::BarrierVerify1;
                if radial && !(bar.speed_fraction.abs() < 1.0) {
                    return Err(field("barrier.speed_fraction", "need |speed_fraction| < 1"));
                }
                if !(bar.t_star >= 0.0 && bar.t_star.is_finite()) {
                    return Err(field("barrier.t_star", "must be finite and >= 0"));
                }
                if bar.verify_nodes < 8 {
                    return Err(field("barrier.verify_nodes", "need at least 8"));
                }
            }
            _ => {}
        }
        let ce = &self.counterexample;
        if ce.n_max == 0 {
            return Err(field("counterexample.n_max", "need n_max >= 1"));
        }
        if ce.n == Some(0) {
            return Err(field("counterexample.n", "need n >= 1"));
        }
        if !(ce.half_width > 0.0 && ce.half_width <= 1e-2) {
            return Err(field("counterexample.half_width", "need 0 < half_width <= 1e-2"));
        }
        if ce.patch_n < 8 || ce.patch_n % 2 != 0 {
            return Err(field("counterexample.patch_n", "need an even value >= 8"));
        }
        Ok(())
    }

    pub fn run_config(&self, t_end: f64) -> RunConfig {
        RunConfig {
            model: self.scenario.model().unwrap_or(Model::Pm1d),
            boundary: self.run.boundary,
            cfl_safety: self.run.cfl_safety,
            t_end,
            snapshot_dt: self.run.snapshot_dt,
            radial_dimension: self.run.radial_dimension,
            grad_blowup_cap: self.run.grad_blowup_cap,
        }
    }

    pub fn profile(&self) -> CliResult<NonlinearityProfile> {
        NonlinearityProfile::from_spec(&self.profile).map_err(|e| field("profile", e.to_string()))
    }

    pub fn grid(&self) -> CliResult<Grid1D> {
        let [a, b] = self.geometry.domain;
        let radial = self.scenario.model().is_some_and(|m| m.is_radial());
        let g = if radial {
            Grid1D::radial(a, b, self.n_cells)
        } else {
            Grid1D::new(a, b, self.n_cells)
        };
        g.map_err(|e| field("geometry.domain", e.to_string()))
    }

    pub fn initial_field(&self, grid: Grid1D, profile: &NonlinearityProfile) -> CliResult<Field1D> {
        match &self.initial {
            InitialSpec::Preset(p) if self.transform_initial => Ok(p.sample_transformed(grid, profile)?),
            InitialSpec::Preset(p) => Ok(p.sample(grid)?),
            InitialSpec::File { file } => {
                let text = std::fs::read_to_string(file).map_err(io(file))?;
                nodal_file(&text, grid).map_err(|m| field("initial.file", m))
            }
        }
    }
}

/// Linear interpolation of a two-column nodal file onto `grid`.
pub fn nodal_file(text: &str, grid: Grid1D) -> Result<Field1D, String> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let parse = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", k + 1));
        match cols.as_slice() {
            [x, v] => match (parse(x), parse(v)) {
                (Ok(x), Ok(v)) => pts.push((x, v)),
                // a header row
                _ if pts.is_empty() && k == 0 => continue,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            },
            _ => return Err(format!("line {}: expected two columns", k + 1)),
        }
    }
    if pts.len() < 2 || pts.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err("need at least two rows with increasing x".into());
    }
    let (first, last) = (pts[0].0, pts[pts.len() - 1].0);
    let values = grid
        .nodes()
        .into_iter()
        .map(|x| {
            if x < first - 1e-12 || x > last + 1e-12 {
                return Err(format!("node {x} outside the file range [{first}, {last}]"));
            }
            let k = pts.partition_point(|p| p.0 <= x).clamp(1, pts.len() - 1);
            let ((x0, v0), (x1, v1)) = (pts[k - 1], pts[k]);
            Ok(v0 + (v1 - v0) * (x - x0) / (x1 - x0))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Field1D::new(grid, values, 0.0).map_err(|e| e.to_string())
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if k != "initial" && slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// The user's JSON layered over the defaults of the scenario it names.
pub fn merged_value(user: &Value) -> CliResult<Value> {
    let name = user
        .get("scenario")
        .ok_or_else(|| field("scenario", "missing"))?;
    let scenario: Scenario =
        serde_json::from_value(name.clone()).map_err(|e| field("scenario", e.to_string()))?;
    let mut full = serde_json::to_value(ExperimentConfig::defaults(scenario))?;
    merge(&mut full, user);
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_default_validates() {
        for s in Scenario::ALL {
            ExperimentConfig::defaults(s).validate().unwrap();
            let json = serde_json::json!({ "scenario": s.name() });
            assert_eq!(ExperimentConfig::from_value(&json).unwrap(), ExperimentConfig::defaults(s));
        }
    }

    #[test]
    fn overrides_merge() {
        let cfg = ExperimentConfig::from_json(r#"{"scenario": "thm1-1d", "n_cells": 64, "run": {"t_end": 0.01}}"#).unwrap();
        assert_eq!(cfg.n_cells, 64);
        assert_eq!(cfg.run.t_end, Some(0.01));
        assert_eq!(cfg.run.snapshot_dt, 0.01);
        let cfg = ExperimentConfig::from_json(r#"{"scenario": "thm2-radial", "initial": {"preset": "ramp", "slope": 0.5}}"#).unwrap();
        assert_eq!(cfg.initial, InitialSpec::Preset(Preset::Ramp { slope: 0.5, offset: 0.0 }));
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::from_json(r#"{"scenario": "thm1-1d", "geometry": {"seed": [0.7, 0.3]}}"#).unwrap_err();
        assert!(e.to_string().starts_with("geometry.seed"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"scenario": "thm1-1d", "run": {"cfl": 0.3}}"#).unwrap_err();
        assert!(e.to_string().starts_with("run"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"scenario": "thm1-1d", "n_cells": "many"}"#).unwrap_err();
        assert!(e.to_string().starts_with("n_cells"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"scenario": "thm9"}"#).unwrap_err();
        assert!(e.to_string().starts_with("scenario"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"scenario": "thm3-nonexistence", "geometry": {"shell_end": 0.8}}"#).unwrap_err();
        assert!(e.to_string().starts_with("geometry.shell_end"), "{e}");
    }

    #[test]
    fn nodal_files() {
        let g = Grid1D::new(0.0, 1.0, 8).unwrap();
        let f = nodal_file("x,u\n0,0\n1,2\n", g).unwrap();
        assert!((f.values[4] - 1.0).abs() < 1e-15);
        assert!(nodal_file("0 0\n0.5 1\n", g).is_err());
    }
}
