//! One pipeline per scenario: profile, initial datum, integration, analysis
//! and emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pmfront::barriers::{
    check_comparison_fbp1, check_comparison_fbp2, radial_f, select_fbp1, select_fbp2, BarrierFbp1, BarrierFbp2,
};
use pmfront::counterexample::{certifies, convexity_margin, crosscheck_fd, datum_from_n, dini_condition, find_min_n, Certificate};
use pmfront::output::{write_trajectory_csv, RunSummary};
use pmfront::region::{
    check_expansion_rate, check_monotone_inclusion, check_supgrad_bound,
    nonexistence_certificate, track_front, ExpansionSet, FrontSelector, FrontTrajectory, Orientation,
};
use pmfront::solvers::integrate_observed;
use pmfront::{ConeSet, Error, NonlinearityProfile, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Scenario};
use crate::error::{io, CliResult};

/// Slack, in cells, of every region-inclusion check.
pub const SLACK_CELLS: usize = 2;
/// Required fraction of `k₀` for the mean outward front speed.
pub const SPEED_FRACTION: f64 = 0.85;
/// Horizon factor applied to the predicted invasion and existence times.
pub const HORIZON_FACTOR: f64 = 1.25;
pub const SUPGRAD_TOL: f64 = 1e-3;
pub const CROSSCHECK_TOL: f64 = 1e-2;

/// Criterion names every scenario report must list, in order.
pub fn criteria_for(s: Scenario) -> &'static [&'static str] {
    match s {
        Scenario::Thm1OneD => &["monotone-inclusion"],
        Scenario::Thm2Radial => &["cone-containment", "mean-front-speed", "invasion-time"],
        Scenario::Thm3Nonexistence => &["supgrad-bound", "breakdown-before-bound"],
        Scenario::Thm5Fbp1 => &["support-monotone"],
        Scenario::Thm6Fbp2 => &["trapezoid-in-cone", "positivity-on-trapezoid"],
        Scenario::BarrierVerify1 => &["verify-w1", "comparison-fbp1"],
        Scenario::BarrierVerify2 => &["verify-w2", "comparison-fbp2"],
        Scenario::Counterexample => &["certified-n", "convexity", "vt-positive", "fd-crosscheck"],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub criteria: Vec<CriterionResult>,
    /// Finite diagnostic numbers keyed by name.
    pub margins: BTreeMap<String, f64>,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    pub all_pass: bool,
}

struct Builder {
    scenario: Scenario,
    criteria: Vec<CriterionResult>,
    margins: BTreeMap<String, f64>,
    artifacts: Vec<(String, String)>,
}

impl Builder {
    fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            criteria: Vec::new(),
            margins: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    fn criterion(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.criteria.push(CriterionResult {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    fn margin(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.margins.insert(key.into(), value);
        }
    }

    fn artifact(&mut self, name: &str, contents: String) {
        self.artifacts.push((name.into(), contents));
    }

    fn trajectory(&mut self, traj: &Trajectory) -> CliResult<()> {
        let mut csv = Vec::new();
        write_trajectory_csv(traj, &mut csv).map_err(io("trajectory.csv"))?;
        self.artifact("trajectory.csv", String::from_utf8(csv).expect("csv is ascii"));
        let summary = serde_json::to_string_pretty(&RunSummary::of(traj))?;
        self.artifact("summary.json", summary);
        self.margin("total_steps", traj.total_steps as f64);
        self.margin("final_time", traj.last().time);
        Ok(())
    }

    fn finish(self, out: Option<&Path>) -> CliResult<ScenarioReport> {
        let expected = criteria_for(self.scenario);
        let names: Vec<&str> = self.criteria.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, expected, "criteria registry out of sync for {}", self.scenario.name());
        let mut report = ScenarioReport {
            scenario: self.scenario,
            all_pass: self.criteria.iter().all(|c| c.pass),
            criteria: self.criteria,
            margins: self.margins,
            files: Vec::new(),
        };
        if let Some(dir) = out {
            std::fs::create_dir_all(dir).map_err(io(dir))?;
            for (name, contents) in &self.artifacts {
                let path = dir.join(name);
                std::fs::write(&path, contents).map_err(io(&path))?;
                report.files.push(name.clone());
            }
            report.files.push("report.json".into());
            let path = dir.join("report.json");
            std::fs::write(&path, serde_json::to_string_pretty(&report)?).map_err(io(&path))?;
        }
        Ok(report)
    }
}

/// Runs the configured scenario; writes artifacts into `out` when given.
pub fn run_scenario(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<ScenarioReport> {
    cfg.validate()?;
    let mut b = Builder::new(cfg.scenario);
    match cfg.scenario {
        Scenario::Thm1OneD => thm1(cfg, &mut b)?,
        Scenario::Thm2Radial => thm2(cfg, &mut b)?,
        Scenario::Thm3Nonexistence => thm3(cfg, &mut b)?,
        Scenario::Thm5Fbp1 => thm5(cfg, &mut b)?,
        Scenario::Thm6Fbp2 => thm6(cfg, &mut b)?,
        Scenario::BarrierVerify1 => barrier1(cfg, &mut b)?,
        Scenario::BarrierVerify2 => barrier2(cfg, &mut b)?,
        Scenario::Counterexample => counterexample(cfg, &mut b)?,
    }
    b.finish(out)
}

/// `<root>/<scenario>` unless the config names its own directory.
pub fn output_dir(cfg: &ExperimentConfig, root: &Path) -> PathBuf {
    match &cfg.output_dir {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => root.join(d),
        None => root.join(cfg.scenario.name()),
    }
}

fn simulate(cfg: &ExperimentConfig, t_end: f64) -> CliResult<(NonlinearityProfile, Trajectory)> {
    let profile = cfg.profile()?;
    let grid = cfg.grid()?;
    let u0 = cfg.initial_field(grid, &profile)?;
    let traj = pmfront::integrate(u0, cfg.run_config(t_end), &profile)?;
    Ok((profile, traj))
}

fn thm1(cfg: &ExperimentConfig, b: &mut Builder) -> CliResult<()> {
    let (_, traj) = simulate(cfg, cfg.run.t_end.unwrap_or(0.5))?;
    b.trajectory(&traj)?;
    let rep = check_monotone_inclusion(&traj, SLACK_CELLS);
    b.margin("worst_distance", rep.worst_distance);
    b.margin("slack", rep.slack);
    b.criterion(
        "monotone-inclusion",
        rep.holds,
        format!(
            "worst uncovered distance {:.3e} vs slack {:.3e} over {} pairs",
            rep.worst_distance, rep.slack, rep.pairs_checked
        ),
    );
    Ok(())
}

fn front_csv(traj: &Trajectory, fronts: &[FrontTrajectory], set: ExpansionSet) -> String {
    let g = traj.snapshots[0].grid;
    let mut s = String::from("t,left_front,right_front,cone_left,cone_right\n");
    for snap in &traj.snapshots {
        let at = |f: Option<&FrontTrajectory>| {
            f.and_then(|f| f.times.iter().position(|&t| t == snap.time).map(|k| f.positions[k].to_string()))
                .unwrap_or_default()
        };
        let left = at(fronts.iter().find(|f| f.orientation == Orientation::SubcriticalRight));
        let right = at(fronts.iter().find(|f| f.orientation == Orientation::SubcriticalLeft));
        let (cl, cr) = set.section(snap.time, g.a, g.b);
        let _ = writeln!(s, "{},{left},{right},{cl},{cr}", snap.time);
    }
    s
}

fn thm2(cfg: &ExperimentConfig, b: &mut Builder) -> CliResult<()> {
    let [r1, r2] = cfg.geometry.domain;
    let [r3, r4] = cfg.geometry.seed;
    let profile = cfg.profile()?;
    let c = profile.constants(r2)?;
    let horizon = HORIZON_FACTOR * (r2 - r1) / c.k0;
    let t_end = cfg.run.t_end.unwrap_or(horizon);
    let (_, traj) = simulate(cfg, t_end)?;
    b.trajectory(&traj)?;
    let set = ExpansionSet { r3, r4, k0: c.k0, t_end };
    let rep = check_expansion_rate(&traj, set, SLACK_CELLS)?;
    b.margin("k0", c.k0);
    b.margin("worst_cone_distance", rep.worst_cone_distance);
    b.margin("slack", rep.slack);
    b.margin("predicted_invasion_time", rep.predicted_invasion_time);
    b.margin("invasion_time", rep.invasion_time.unwrap_or(f64::NAN));
    b.margin("min_mean_outward_speed", rep.min_mean_outward_speed.unwrap_or(f64::NAN));

    let fronts: Vec<FrontTrajectory> = [Orientation::SubcriticalRight, Orientation::SubcriticalLeft]
        .into_iter()
        .filter_map(|orientation| {
            track_front(
                &traj,
                FrontSelector {
                    anchor: 0.5 * (r3 + r4),
                    orientation,
                    bridge_cells: SLACK_CELLS,
                },
            )
            .ok()
        })
        .collect();
    b.artifact("fronts.csv", front_csv(&traj, &fronts, set));

    b.criterion(
        "cone-containment",
        !rep.vacuous && rep.containment_holds,
        format!(
            "worst distance from the cone section {:.3e} vs slack {:.3e}",
            rep.worst_cone_distance, rep.slack
        ),
    );
    let need = SPEED_FRACTION * c.k0;
    let speed = rep.min_mean_outward_speed;
    b.criterion(
        "mean-front-speed",
        speed.is_some_and(|v| v >= need),
        format!("min mean outward speed {speed:?} vs {need:.5}"),
    );
    b.criterion(
        "invasion-time",
        rep.invasion_time.is_some_and(|t| t <= horizon),
        format!("whole domain subcritical at {:?}, bound {horizon:.4}", rep.invasion_time),
    );
    Ok(())
}

fn thm3(cfg: &ExperimentConfig, b: &mut Builder) -> CliResult<()> {
    let [r1, r2] = cfg.geometry.domain;
    let [r3, r4] = cfg.geometry.seed;
    let r5 = cfg.geometry.shell_end.expect("validated");
    let profile = cfg.profile()?;
    let th = nonexistence_certificate(r1, r2, r3, r4, r5, &profile)?;
    let bound = HORIZON_FACTOR * th.t0;
    let (_, traj) = simulate(cfg, cfg.run.t_end.unwrap_or(bound))?;
    b.trajectory(&traj)?;
    let u0 = &traj.snapshots[0];
    let slope_r4 = u0.nodal_gradients()[u0.grid.nearest(r4)];
    b.margin("gradient_threshold", th.gradient_threshold);
    b.margin("t0", th.t0);
    b.margin("initial_slope_at_r4", slope_r4);
    b.margin("threshold_excess", slope_r4 - th.gradient_threshold);

    let rep = check_supgrad_bound(&traj, r3, r5, &profile, SUPGRAD_TOL)?;
    b.margin("supgrad_worst_margin", rep.worst_margin);
    let mut csv = String::from("t,max_gradient,lower_bound\n");
    for ((t, m), lb) in rep.times.iter().zip(&rep.max_gradient).zip(&rep.lower_bound) {
        let _ = writeln!(csv, "{t},{m},{lb}");
    }
    b.artifact("supgrad.csv", csv);
    let peak = traj
        .snapshots
        .iter()
        .map(|s| s.face_gradients().into_iter().fold(0.0f64, |m, g| m.max(g.abs())))
        .fold(0.0f64, f64::max);
    b.margin("peak_gradient", peak);

    b.criterion(
        "supgrad-bound",
        rep.holds,
        format!("min of M(t) - bound + tol = {:.3e} over {} snapshots", rep.worst_margin, rep.times.len()),
    );
    let brk = traj.breakdown.as_ref();
    b.margin("breakdown_time", brk.map_or(f64::NAN, |x| x.time));
    b.criterion(
        "breakdown-before-bound",
        brk.is_some_and(|x| x.time <= bound),
        match brk {
            Some(x) => format!("breakdown at t = {:.4} ({}), bound {bound:.4}", x.time, x.reason),
            None => format!(
                "no breakdown by t = {:.4}; peak discrete gradient {peak:.1}, cap {}",
                traj.last().time,
                cfg.run.grad_blowup_cap
            ),
        },
    );
    Ok(())
}

fn thm5(cfg: &ExperimentConfig, b: &mut Builder) -> CliResult<()> {
    let profile = cfg.profile()?;
    let grid = cfg.grid()?;
    let v0 = cfg.initial_field(grid, &profile)?;
    let mut support: Vec<bool> = v0.values.iter().map(|&v| v > 0.0).collect();
    let initial = support.iter().filter(|&&p| p).count();
    let mut lost = 0usize;
    let mut steps = 0usize;
    let traj = integrate_observed(v0, cfg.run_config(cfg.run.t_end.unwrap_or(0.5)), &profile, |st| {
        steps += 1;
        for (was, &v) in support.iter_mut().zip(&st.field().values) {
            let now = v > 0.0;
            if *was && !now {
                lost += 1;
            }
            *was = now;
        }
        Ok(())
    })?;
    b.trajectory(&traj)?;
    let last = support.iter().filter(|&&p| p).count();
    b.margin("support_nodes_initial", initial as f64);
    b.margin("support_nodes_final", last as f64);
    b.margin("steps_checked", steps as f64);
    b.criterion(
        "support-monotone",
        lost == 0,
        format!("{lost} node losses over {steps} steps; support {initial} -> {last} nodes"),
    );
    Ok(())
}

fn radial_barrier_params(cfg: &ExperimentConfig, profile: &NonlinearityProfile) -> CliResult<(f64, f64, f64, f64, f64)> {
    let bar = cfg.barrier.as_ref().expect("validated");
    let c = profile.constants(cfg.geometry.domain[1])?;
    Ok((bar.support[0], bar.support[1], bar.speed_fraction * c.k0, bar.t_star, c.a_const))
}

fn thm6(cfg: &ExperimentConfig, b: &mut Builder) -> CliResult<()> {
    let profile = cfg.profile()?;
    let (r5, r6, k, t_star, _) = radial_barrier_params(cfg, &profile)?;
    let [r1, r2] = cfg.geometry.domain;
    let [r3, r4] = cfg.geometry.seed;
    let c = profile.constants(r2)?;
    let (_, traj) = simulate(cfg, cfg.run.t_end.unwrap_or(t_star))?;
    b.trajectory(&traj)?;
    let cone = ConeSet {
        outer: ExpansionSet { r3, r4, k0: c.k0, t_end: t_star },
        r1,
        r2,
        r5,
        r6,
        k,
        t_star,
    };
    let inside = cone.trapezoid_inside_cone(64);
    b.criterion(
        "trapezoid-in-cone",
        inside,
        format!("[{r5} + {k:.4} t, {r6} + {k:.4} t] for t <= {t_star} against the cone of speed {:.4}", c.k0),
    );
    let mut worst = f64::INFINITY;
    let mut nodes = 0usize;
    for snap in traj.snapshots.iter().filter(|s| s.time <= t_star + 1e-12) {
        for (i, &v) in snap.values.iter().enumerate() {
            if cone.in_trapezoid(snap.grid.node(i), snap.time) {
                worst = worst.min(v);
                nodes += 1;
            }
        }
    }
    b.margin("min_value_on_trapezoid", worst);
    b.criterion(
        "positivity-on-trapezoid",
        nodes > 0 && worst > 0.0,
        format!("min v = {worst:.3e} over {nodes} node samples"),
    );
    Ok(())
}

fn heatmap_fbp1(bar: &BarrierFbp1, profile: &NonlinearityProfile, horizon: f64) -> String {
    let mut s = String::from("x,t,margin\n");
    for q in 0..=16 {
        let t = horizon * q as f64 / 16.0;
        for i in 1..64 {
            let x = bar.x5 + (bar.x6 - bar.x5) * i as f64 / 64.0;
            let v = bar.eval(x, t);
            let m = profile
                .coeff_g(v.w)
                .map(|g| g * v.w_xx.unwrap_or(f64::NAN) - v.w_t)
                .unwrap_or(f64::NAN);
            let _ = writeln!(s, "{x},{t},{m}");
        }
    }
    s
}

fn heatmap_fbp2(bar: &BarrierFbp2, profile: &NonlinearityProfile) -> String {
    let mut s = String::from("x,t,margin\n");
    for q in 0..=16 {
        let t = bar.t_star * q as f64 / 16.0;
        for i in 1..64 {
            let y = bar.r5 + (bar.r6 - bar.r5) * i as f64 / 64.0;
            let r = y + bar.k * t;
            let v = bar.eval_y(y);
            let m = profile
                .coeff_g(v.w)
                .map(|g| g * (v.w_xx.unwrap_or(f64::NAN) + radial_f(r, t, v.w, v.w_x) + bar.a_const) - v.w_t)
                .unwrap_or(f64::NAN);
            let _ = writeln!(s, "{r},{t},{m}");
        }
    }
    s
}

/// A failed parameter search fails both barrier criteria instead of
/// aborting the scenario.
fn selection_failure(b: &mut Builder, names: [&str; 2], e: Error) -> CliResult<()> {
    match e {
        Error::Selection(_) | Error::Cone { .. } => {
            b.criterion(names[0], false, format!("parameter selection failed: {e}"));
            b.criterion(names[1], false, "no barrier to compare against");
            Ok(())
        }
        other => Err(other.into()),
    }
}

fn barrier1(cfg: &ExperimentConfig, b: &mut Builder) -> CliResult<()> {
    let bar = cfg.barrier.as_ref().expect("validated");
    let horizon = cfg.run.t_end.unwrap_or(0.5);
    let (profile, traj) = simulate(cfg, horizon)?;
    b.trajectory(&traj)?;
    let names = ["verify-w1", "comparison-fbp1"];
    let sel = match select_fbp1(bar.support[0], bar.support[1], &traj.snapshots[0], &profile, horizon, bar.verify_nodes) {
        Ok(sel) => sel,
        Err(e) => return selection_failure(b, names, e),
    };
    let w = sel.barrier;
    b.artifact("barrier.json", serde_json::to_string_pretty(&sel)?);
    b.artifact("barrier_margin.csv", heatmap_fbp1(&w, &profile, horizon));
    b.margin("delta", w.delta);
    b.margin("lambda", w.lambda);
    b.margin("w1_min_margin", sel.report.min_margin);
    b.margin("w1_min_relative_margin", sel.report.min_relative_margin);
    b.criterion(
        names[0],
        sel.report.all_pass,
        format!(
            "delta {:.3e}, lambda {:.4}, min margin {:.3e} (relative {:.3e}){}",
            w.delta,
            w.lambda,
            sel.report.min_margin,
            sel.report.min_relative_margin,
            if sel.lambda.horizon_exceeds_start { "; horizon supremand exceeds t = 0 sample" } else { "" }
        ),
    );
    let cmp = check_comparison_fbp1(&traj, &w)?;
    b.margin("comparison_worst_margin", cmp.worst_margin);
    b.margin("comparison_raw_margin", cmp.worst_raw_margin);
    b.criterion(
        names[1],
        cmp.holds,
        format!(
            "min (v - w + tol) = {:.3e}, min (v - w) = {:.3e}, tol {:.3e}",
            cmp.worst_margin, cmp.worst_raw_margin, cmp.tol
        ),
    );
    Ok(())
}

fn barrier2(cfg: &ExperimentConfig, b: &mut Builder) -> CliResult<()> {
    let profile = cfg.profile()?;
    let (r5, r6, k, t_star, a_const) = radial_barrier_params(cfg, &profile)?;
    let nodes = cfg.barrier.as_ref().expect("validated").verify_nodes;
    let (_, traj) = simulate(cfg, cfg.run.t_end.unwrap_or(t_star))?;
    b.trajectory(&traj)?;
    let names = ["verify-w2", "comparison-fbp2"];
    let sel = match select_fbp2(r5, r6, k, t_star, a_const, &traj.snapshots[0], &profile, nodes) {
        Ok(sel) => sel,
        Err(e) => return selection_failure(b, names, e),
    };
    let (w, r) = (sel.barrier, &sel.report);
    b.artifact("barrier.json", serde_json::to_string_pretty(&sel)?);
    b.artifact("barrier_margin.csv", heatmap_fbp2(&w, &profile));
    b.margin("k", k);
    b.margin("delta", w.delta);
    b.margin("eps0", w.eps0);
    b.margin("c2", w.c2);
    b.margin("w2_min_margin", r.min_margin);
    b.margin("w2_endpoint_regime_margin", r.endpoint_regime_margin);
    b.margin("w2_middle_regime_margin", r.middle_regime_margin);
    b.margin("w2_amgm_margin", r.amgm_margin);
    b.criterion(
        names[0],
        r.all_pass && r.endpoint_regime_margin > 0.0 && r.middle_regime_margin > 0.0,
        format!(
            "k {k:.4}, delta {:.3e}, eps0 {:.4}, c2 {:.4}; margins: full {:.3e}, endpoint regime {:.3e}, middle regime {:.3e}",
            w.delta, w.eps0, w.c2, r.min_margin, r.endpoint_regime_margin, r.middle_regime_margin
        ),
    );
    let cmp = check_comparison_fbp2(&traj, &w)?;
    b.margin("comparison_worst_margin", cmp.worst_margin);
    b.margin("comparison_raw_margin", cmp.worst_raw_margin);
    b.criterion(
        names[1],
        cmp.holds,
        format!(
            "min (v - w + tol) = {:.3e}, min (v - w) = {:.3e}, tol {:.3e}",
            cmp.worst_margin, cmp.worst_raw_margin, cmp.tol
        ),
    );
    Ok(())
}

fn counterexample(cfg: &ExperimentConfig, b: &mut Builder) -> CliResult<()> {
    let profile = cfg.profile()?;
    let ce = &cfg.counterexample;
    let (n, certified) = match ce.n {
        Some(n) => (Some(n), certifies(n, &profile)?),
        None => {
            let n = find_min_n(&profile, ce.n_max)?;
            (n, n.is_some())
        }
    };
    let Some(n) = n else {
        b.criterion("certified-n", false, format!("no n <= {} satisfies both conditions", ce.n_max));
        b.criterion("convexity", false, "no candidate");
        b.criterion("vt-positive", false, "no candidate");
        b.criterion("fd-crosscheck", false, "no candidate");
        return Ok(());
    };
    let d = datum_from_n(n);
    let conv = convexity_margin(&d);
    let cc = crosscheck_fd(&d, &profile, ce.half_width, ce.patch_n)?;
    let cert = Certificate {
        n,
        dini: dini_condition(&d),
        convexity_margin: conv,
        vt_closed_form: cc.closed_form,
        vt_fd: cc.fd_value,
        rel_err: cc.rel_err,
    };
    b.artifact("certificate.json", serde_json::to_string_pretty(&cert)?);
    b.margin("n", f64::from(n));
    b.margin("dini", cert.dini);
    b.margin("convexity_margin", conv);
    b.margin("vt_closed_form", cc.closed_form);
    b.margin("vt_fd", cc.fd_value);
    b.margin("rel_err", cc.rel_err);
    b.criterion("certified-n", certified, format!("n = {n}"));
    b.criterion("convexity", conv < 0.0, format!("convexity margin {conv:.4}"));
    b.criterion("vt-positive", cc.closed_form > 0.0, format!("v_t(0,0,0) = {:.4}", cc.closed_form));
    b.criterion(
        "fd-crosscheck",
        cc.rel_err <= CROSSCHECK_TOL,
        format!(
            "finite differences {:.4} on {}x{} patch of half-width {:e}, relative error {:.3e}",
            cc.fd_value, ce.patch_n, ce.patch_n, ce.half_width, cc.rel_err
        ),
    );
    Ok(())
}
