//! Subcritical and supercritical regions of a trajectory, interface
//! tracking, and the inclusion, expansion and gradient-bound checks.
//!
//! Set inclusions are tested up to a slack distance: `S ⊆ U` up to `s`
//! means every point of `S` lies within `s` of the closure of `U`. A
//! supercritical jump confined to one or two cells therefore does not count
//! as breaking a subcritical interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field1D;
use crate::nonlinearity::{NonlinearityProfile, SIGMA_CRITICAL};
use crate::solvers::Trajectory;

/// Open interval `(left, right)`.
pub type Interval = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `|u_x| < 1`.
    Subcritical,
    /// `|u_x| > 1`.
    Supercritical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSnapshot {
    pub time: f64,
    pub intervals: Vec<Interval>,
}

impl RegionSnapshot {
    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(l, r)| r - l).sum()
    }
}

/// Maximal intervals where the sampled `|gradient|` lies on the requested
/// side of 1. Endpoints come from linear interpolation between adjacent
/// samples; a run touching the first or last sample extends to `a` or `b`.
pub fn level_intervals(
    xs: &[f64],
    grads: &[f64],
    a: f64,
    b: f64,
    regime: Regime,
) -> Vec<Interval> {
    debug_assert_eq!(xs.len(), grads.len());
    let inside = |p: f64| match regime {
        Regime::Subcritical => p.abs() < SIGMA_CRITICAL,
        Regime::Supercritical => p.abs() > SIGMA_CRITICAL,
    };
    let crossing = |i: usize, j: usize| -> f64 {
        let (p, q) = (grads[i].abs(), grads[j].abs());
        if p == q {
            return 0.5 * (xs[i] + xs[j]);
        }
        let s = ((SIGMA_CRITICAL - p) / (q - p)).clamp(0.0, 1.0);
        xs[i] + s * (xs[j] - xs[i])
    };
    let n = xs.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if !inside(grads[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && inside(grads[i]) {
            i += 1;
        }
        let left = if start == 0 { a } else { crossing(start - 1, start) };
        let right = if i == n { b } else { crossing(i - 1, i) };
        if right > left {
            out.push((left, right));
        }
    }
    out
}

fn midpoint_samples(field: &Field1D) -> (Vec<f64>, Vec<f64>) {
    let g = field.grid;
    let xs = (0..g.n_cells).map(|i| g.midpoint(i)).collect();
    (xs, field.face_gradients())
}

/// `I⁻(t)` of a Perona-Malik field from its midpoint gradients.
pub fn subcritical_intervals(field: &Field1D) -> RegionSnapshot {
    regime_intervals(field, Regime::Subcritical)
}

pub fn supercritical_intervals(field: &Field1D) -> RegionSnapshot {
    regime_intervals(field, Regime::Supercritical)
}

pub fn regime_intervals(field: &Field1D, regime: Regime) -> RegionSnapshot {
    let (xs, grads) = midpoint_samples(field);
    RegionSnapshot {
        time: field.time,
        intervals: level_intervals(&xs, &grads, field.grid.a, field.grid.b, regime),
    }
}

/// Nodal gradients `u_x = 1 − Z` of the Perona-Malik solution underlying a
/// free-boundary field `v`.
pub fn gradient_from_free_boundary(field: &Field1D, profile: &NonlinearityProfile) -> Result<Vec<f64>> {
    field
        .values
        .iter()
        .map(|&v| Ok(SIGMA_CRITICAL - profile.potential(v.max(0.0))?))
        .collect()
}

fn distance_to(x: f64, set: &[Interval]) -> f64 {
    set.iter()
        .map(|&(l, r)| (l - x).max(x - r).max(0.0))
        .fold(f64::INFINITY, f64::min)
}

/// `sup_{x ∈ S} dist(x, U)`: zero when `S ⊆ closure(U)`, infinite when
/// `U` is empty and `S` is not.
pub fn uncovered_distance(s: &[Interval], u: &[Interval]) -> f64 {
    let mut worst: f64 = 0.0;
    for &(l, r) in s {
        if r <= l {
            continue;
        }
        let mut candidates = vec![l, r];
        for w in u.windows(2) {
            let mid = 0.5 * (w[0].1 + w[1].0);
            if mid > l && mid < r {
                candidates.push(mid);
            }
        }
        for &(ul, ur) in u {
            for x in [ul, ur] {
                if x > l && x < r {
                    candidates.push(x);
                }
            }
        }
        for x in candidates {
            worst = worst.max(distance_to(x, u));
        }
    }
    worst
}

/// Joins intervals separated by gaps of at most `gap`.
pub fn bridge(intervals: &[Interval], gap: f64) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::new();
    for &(l, r) in intervals {
        match out.last_mut() {
            Some(last) if l - last.1 <= gap => last.1 = last.1.max(r),
            _ => out.push((l, r)),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub regime: Regime,
    pub slack: f64,
    pub pairs_checked: usize,
    /// Largest `sup dist` over all ordered snapshot pairs.
    pub worst_distance: f64,
    /// Times `(s, t)` of the worst pair.
    pub worst_pair: Option<(f64, f64)>,
    pub holds: bool,
}

/// Checks `region(s) ⊆ region(t)` for every pair of snapshots `s < t` when
/// `growing`, and the reverse inclusion otherwise.
pub fn check_inclusion(regions: &[RegionSnapshot], regime: Regime, slack: f64, growing: bool) -> InclusionReport {
    let mut worst = 0.0;
    let mut worst_pair = None;
    let mut pairs = 0;
    for (i, early) in regions.iter().enumerate() {
        for late in &regions[i + 1..] {
            let (inner, outer) = if growing { (early, late) } else { (late, early) };
            let d = uncovered_distance(&inner.intervals, &outer.intervals);
            pairs += 1;
            if worst_pair.is_none() || d > worst {
                worst = d;
                worst_pair = Some((early.time, late.time));
            }
        }
    }
    InclusionReport {
        regime,
        slack,
        pairs_checked: pairs,
        worst_distance: worst,
        worst_pair,
        holds: worst <= slack,
    }
}

pub fn regions_of(traj: &Trajectory, regime: Regime) -> Vec<RegionSnapshot> {
    traj.snapshots.iter().map(|s| regime_intervals(s, regime)).collect()
}

/// Subcritical intervals never shrink: `I⁻(s) ⊆ I⁻(t)` for `s < t`, up to
/// `slack_cells` grid cells.
pub fn check_monotone_inclusion(traj: &Trajectory, slack_cells: usize) -> InclusionReport {
    let slack = slack_cells as f64 * traj.snapshots[0].grid.spacing();
    check_inclusion(&regions_of(traj, Regime::Subcritical), Regime::Subcritical, slack, true)
}

/// Supercritical intervals never grow: `S(t) ⊆ S(s)` for `s < t`.
pub fn check_supercritical_shrinking(traj: &Trajectory, slack_cells: usize) -> InclusionReport {
    let slack = slack_cells as f64 * traj.snapshots[0].grid.spacing();
    check_inclusion(&regions_of(traj, Regime::Supercritical), Regime::Supercritical, slack, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// The subcritical side is to the left: the right end of an interval.
    SubcriticalLeft,
    /// The left end of an interval.
    SubcriticalRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontStatus {
    /// Present in every snapshot.
    Active,
    /// Reached the edge of the domain.
    Exited,
    /// The tracked interval absorbed its neighbour on the front's side.
    Merged,
    /// The tracked interval disappeared.
    Lost,
}

/// Which interface to follow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontSelector {
    /// A point inside the subcritical interval at `t = 0`.
    pub anchor: f64,
    pub orientation: Orientation,
    /// Gaps of at most this many cells between subcritical intervals are
    /// closed before tracking.
    pub bridge_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontTrajectory {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub orientation: Orientation,
    pub status: FrontStatus,
    /// Time of the first snapshot where the front was no longer present.
    pub end_time: Option<f64>,
}

fn overlaps(a: Interval, b: Interval) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Tracks one endpoint of a subcritical interval through a sequence of
/// region snapshots.
pub fn track_front_in(regions: &[RegionSnapshot], a: f64, b: f64, h: f64, sel: FrontSelector) -> Result<FrontTrajectory> {
    let gap = sel.bridge_cells as f64 * h;
    let first = regions
        .first()
        .ok_or_else(|| Error::Tracking("no snapshots".into()))?;
    let bridged = bridge(&first.intervals, gap);
    let mut current = *bridged
        .iter()
        .find(|&&(l, r)| l <= sel.anchor && sel.anchor <= r)
        .ok_or_else(|| Error::Tracking(format!("no subcritical interval contains {} at t = {}", sel.anchor, first.time)))?;
    let at_edge = |x: f64| (x - a).abs() <= 0.5 * h || (b - x).abs() <= 0.5 * h;
    let endpoint = |iv: Interval| match sel.orientation {
        Orientation::SubcriticalLeft => iv.1,
        Orientation::SubcriticalRight => iv.0,
    };
    if at_edge(endpoint(current)) {
        return Err(Error::Tracking("selected endpoint lies on the domain boundary at t = 0".into()));
    }
    // the neighbouring interval on the front's side, if any
    let neighbour = |set: &[Interval], iv: Interval| -> Option<Interval> {
        match sel.orientation {
            Orientation::SubcriticalLeft => set.iter().find(|x| x.0 >= iv.1).copied(),
            Orientation::SubcriticalRight => set.iter().rev().find(|x| x.1 <= iv.0).copied(),
        }
    };

    let mut times = vec![first.time];
    let mut positions = vec![endpoint(current)];
    let mut next_neighbour = neighbour(&bridged, current);
    let mut status = FrontStatus::Active;
    let mut end_time = None;
    for snap in &regions[1..] {
        let set = bridge(&snap.intervals, gap);
        let Some(&found) = set.iter().find(|&&iv| overlaps(iv, current)) else {
            status = FrontStatus::Lost;
            end_time = Some(snap.time);
            break;
        };
        if let Some(nb) = next_neighbour {
            if overlaps(found, nb) {
                status = FrontStatus::Merged;
                end_time = Some(snap.time);
                break;
            }
        }
        let pos = endpoint(found);
        if at_edge(pos) {
            status = FrontStatus::Exited;
            end_time = Some(snap.time);
            break;
        }
        current = found;
        next_neighbour = neighbour(&set, current);
        times.push(snap.time);
        positions.push(pos);
    }
    Ok(FrontTrajectory {
        times,
        positions,
        orientation: sel.orientation,
        status,
        end_time,
    })
}

/// [`track_front_in`] on the subcritical regions of a Perona-Malik trajectory.
pub fn track_front(traj: &Trajectory, sel: FrontSelector) -> Result<FrontTrajectory> {
    let g = traj.snapshots[0].grid;
    track_front_in(&regions_of(traj, Regime::Subcritical), g.a, g.b, g.spacing(), sel)
}

/// Least-squares slope of `α(t)` over windows of width `window` centred at
/// each sample; samples with fewer than three neighbours are skipped.
pub fn measured_speed(front: &FrontTrajectory, window: f64) -> Vec<(f64, f64)> {
    let t = &front.times;
    let x = &front.positions;
    let mut out = Vec::new();
    for &tc in t {
        let idx: Vec<usize> = (0..t.len()).filter(|&j| (t[j] - tc).abs() <= 0.5 * window + 1e-12).collect();
        if idx.len() < 3 {
            continue;
        }
        let m = idx.len() as f64;
        let tm = idx.iter().map(|&j| t[j]).sum::<f64>() / m;
        let xm = idx.iter().map(|&j| x[j]).sum::<f64>() / m;
        let num: f64 = idx.iter().map(|&j| (t[j] - tm) * (x[j] - xm)).sum();
        let den: f64 = idx.iter().map(|&j| (t[j] - tm).powi(2)).sum();
        if den > 0.0 {
            out.push((tc, num / den));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontGeometry {
    Planar,
    Radial { n_dim: u32 },
}

/// Interface speed predicted by differentiating `u_x(α(t), t) = 1` along the
/// front. Planar: `−φ'''(1) u_xx`. Radial: `|φ'''(1)| u_rr + (n − 1)φ'(1)/(α² u_rr)`,
/// replaced by the arithmetic-geometric mean floor `2√((n − 1)φ'(1)|φ'''(1)|)/α`
/// when `|u_rr| ≤ 10⁻⁹`.
pub fn heuristic_speed_from_curvature(
    profile: &NonlinearityProfile,
    position: f64,
    uxx: f64,
    geometry: FrontGeometry,
) -> Result<f64> {
    let third = profile.d3phi(SIGMA_CRITICAL)?;
    match geometry {
        FrontGeometry::Planar => Ok(-third * uxx),
        FrontGeometry::Radial { n_dim } => {
            let c = (n_dim.max(1) - 1) as f64 * profile.plateau()?;
            if uxx.abs() <= 1e-9 {
                Ok(2.0 * (c * third.abs()).sqrt() / position)
            } else {
                Ok(third.abs() * uxx + c / (position * position * uxx))
            }
        }
    }
}

/// Second difference of `u` interpolated linearly to `position`.
pub fn curvature_at(field: &Field1D, position: f64) -> Result<f64> {
    let g = field.grid;
    if !(position >= g.a && position <= g.b) {
        return Err(Error::Range {
            what: "front position",
            value: position,
            lo: g.a,
            hi: g.b,
        });
    }
    let h = g.spacing();
    let u = &field.values;
    let n = g.n_cells;
    let second = |i: usize| {
        let i = i.clamp(1, n - 1);
        (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h)
    };
    let s = (position - g.a) / h;
    let i = (s.floor() as usize).min(n - 1);
    let w = s - i as f64;
    Ok((1.0 - w) * second(i) + w * second(i + 1))
}

pub fn heuristic_speed(
    field: &Field1D,
    profile: &NonlinearityProfile,
    position: f64,
    geometry: FrontGeometry,
) -> Result<f64> {
    let uxx = curvature_at(field, position)?;
    heuristic_speed_from_curvature(profile, position, uxx, geometry)
}

/// Node pairs behind the resolved edge searched for the interface slope.
const EDGE_PAIRS: usize = 4;

/// Nodes with potential below this fraction of the maximum count as tail.
const EDGE_RESOLUTION: f64 = 1e-3;

/// Edge of the positivity set of a free-boundary field `v`, found by linear
/// extrapolation of the potential `Z` to zero. Returns the position and `Z_x`
/// there (so `u_xx = −Z_x`).
///
/// The explicit scheme grows the positivity set by one node per step with
/// vanishingly small values ahead of the edge. Nodes below
/// [`EDGE_RESOLUTION`] of the largest potential are ignored, and the slope is
/// the steepest of the last [`EDGE_PAIRS`] node pairs.
pub fn support_front(
    field: &Field1D,
    profile: &NonlinearityProfile,
    orientation: Orientation,
) -> Result<Option<(f64, f64)>> {
    let g = field.grid;
    let h = g.spacing();
    let z = field
        .values
        .iter()
        .map(|&v| profile.potential(v.max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    let n = z.len();
    let floor = EDGE_RESOLUTION * z.iter().cloned().fold(0.0, f64::max);
    let resolved: Vec<usize> = (0..n).filter(|&i| z[i] > floor).collect();
    let (Some(&lo), Some(&hi)) = (resolved.first(), resolved.last()) else {
        return Ok(None);
    };
    match orientation {
        Orientation::SubcriticalLeft => {
            if hi == 0 || hi == n - 1 {
                return Ok(None);
            }
            // pair (i − 1, i) with the most negative slope
            let (i, slope) = (hi.saturating_sub(EDGE_PAIRS - 1).max(1)..=hi)
                .map(|i| (i, (z[i] - z[i - 1]) / h))
                .fold((hi, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            if slope >= 0.0 {
                return Ok(Some((g.node(hi) + 0.5 * h, slope)));
            }
            Ok(Some((g.node(i) - z[i] / slope, slope)))
        }
        Orientation::SubcriticalRight => {
            if lo == 0 || lo == n - 1 {
                return Ok(None);
            }
            // pair (i, i + 1) with the most positive slope
            let (i, slope) = (lo..=(lo + EDGE_PAIRS - 1).min(n - 2))
                .map(|i| (i, (z[i + 1] - z[i]) / h))
                .fold((lo, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
            if slope <= 0.0 {
                return Ok(Some((g.node(lo) - 0.5 * h, slope)));
            }
            Ok(Some((g.node(i) - z[i] / slope, slope)))
        }
    }
}

/// Cone `{(r, t): r₃ − k₀t < r < r₄ + k₀t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSet {
    pub r3: f64,
    pub r4: f64,
    pub k0: f64,
    pub t_end: f64,
}

impl ExpansionSet {
    pub fn section(&self, t: f64, a: f64, b: f64) -> Interval {
        ((self.r3 - self.k0 * t).max(a), (self.r4 + self.k0 * t).min(b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    /// No subcritical seed: nothing to check.
    pub vacuous: bool,
    pub slack: f64,
    /// Largest `sup dist` from the cone section to `I⁻(t)`.
    pub worst_cone_distance: f64,
    pub worst_cone_time: Option<f64>,
    pub containment_holds: bool,
    /// First snapshot at which `I⁻(t)` covers the whole domain up to slack.
    pub invasion_time: Option<f64>,
    /// `(r₂ − r₁)/k₀`.
    pub predicted_invasion_time: f64,
    /// Per front, displacement over `[0, min(T/2, exit)]` divided by that time.
    pub mean_outward_speeds: Vec<f64>,
    pub min_mean_outward_speed: Option<f64>,
}

/// Checks `I⁻(t) ⊇ (r₃ − k₀t, r₄ + k₀t) ∩ (r₁, r₂)` at every snapshot and
/// measures the invasion time and mean outward front speeds.
pub fn check_expansion_rate(traj: &Trajectory, set: ExpansionSet, slack_cells: usize) -> Result<ExpansionReport> {
    let g = traj.snapshots[0].grid;
    let h = g.spacing();
    let slack = slack_cells as f64 * h;
    let regions = regions_of(traj, Regime::Subcritical);
    let predicted = if set.k0 > 0.0 { (g.b - g.a) / set.k0 } else { f64::INFINITY };

    let seed = uncovered_distance(&[(set.r3, set.r4)], &regions[0].intervals);
    if set.r4 <= set.r3 || regions[0].intervals.is_empty() || seed > slack {
        return Ok(ExpansionReport {
            vacuous: true,
            slack,
            worst_cone_distance: 0.0,
            worst_cone_time: None,
            containment_holds: true,
            invasion_time: None,
            predicted_invasion_time: predicted,
            mean_outward_speeds: Vec::new(),
            min_mean_outward_speed: None,
        });
    }

    let mut worst: f64 = 0.0;
    let mut worst_time = None;
    let mut invasion = None;
    for reg in &regions {
        let d = uncovered_distance(&[set.section(reg.time, g.a, g.b)], &reg.intervals);
        if d > worst {
            worst = d;
            worst_time = Some(reg.time);
        }
        if invasion.is_none() && uncovered_distance(&[(g.a, g.b)], &reg.intervals) <= slack {
            invasion = Some(reg.time);
        }
    }

    let horizon = 0.5 * set.t_end;
    let mut speeds = Vec::new();
    let anchor = 0.5 * (set.r3 + set.r4);
    for orientation in [Orientation::SubcriticalRight, Orientation::SubcriticalLeft] {
        let sel = FrontSelector {
            anchor,
            orientation,
            bridge_cells: slack_cells,
        };
        let front = match track_front_in(&regions, g.a, g.b, h, sel) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let x0 = front.positions[0];
        let t0 = front.times[0];
        let (t1, x1) = match front.end_time {
            Some(te) if te <= horizon && front.status == FrontStatus::Exited => {
                let edge = match orientation {
                    Orientation::SubcriticalLeft => g.b,
                    Orientation::SubcriticalRight => g.a,
                };
                (te, edge)
            }
            _ => {
                let k = front.times.partition_point(|&t| t <= horizon + 1e-12).max(1) - 1;
                (front.times[k], front.positions[k])
            }
        };
        if t1 > t0 {
            let outward = match orientation {
                Orientation::SubcriticalLeft => x1 - x0,
                Orientation::SubcriticalRight => x0 - x1,
            };
            speeds.push(outward / (t1 - t0));
        }
    }
    let min_speed = speeds.iter().copied().reduce(f64::min);
    Ok(ExpansionReport {
        vacuous: false,
        slack,
        worst_cone_distance: worst,
        worst_cone_time: worst_time,
        containment_holds: worst <= slack,
        invasion_time: invasion,
        predicted_invasion_time: predicted,
        mean_outward_speeds: speeds,
        min_mean_outward_speed: min_speed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupGradReport {
    pub times: Vec<f64>,
    /// `M(t)`: largest centred nodal gradient over `[r₃, r₅]`.
    pub max_gradient: Vec<f64>,
    /// `M(0) − φ'(1) t / r₁²`.
    pub lower_bound: Vec<f64>,
    pub tol: f64,
    /// `min_t (M(t) − bound(t) + tol)`.
    pub worst_margin: f64,
    pub holds: bool,
}

/// Checks `M(t) ≥ M(0) − φ'(1) t/r₁² − tol` at every snapshot strictly
/// before breakdown.
pub fn check_supgrad_bound(
    traj: &Trajectory,
    r3: f64,
    r5: f64,
    profile: &NonlinearityProfile,
    tol: f64,
) -> Result<SupGradReport> {
    let g = traj.snapshots[0].grid;
    if !(g.a <= r3 && r3 < r5 && r5 <= g.b) {
        return Err(Error::Config(format!(
            "[{r3}, {r5}] is not inside the grid [{}, {}]",
            g.a, g.b
        )));
    }
    let rate = profile.plateau()? / (g.a * g.a);
    let stop = traj.breakdown.as_ref().map_or(f64::INFINITY, |b| b.time);
    let (lo, hi) = (
        (0..g.n_nodes()).find(|&i| g.node(i) >= r3 - 1e-12).unwrap_or(0),
        (0..g.n_nodes()).rev().find(|&i| g.node(i) <= r5 + 1e-12).unwrap_or(g.n_cells),
    );
    let mut times = Vec::new();
    let mut maxima = Vec::new();
    let mut bounds = Vec::new();
    let mut worst = f64::INFINITY;
    let t0 = traj.snapshots[0].time;
    let mut m0 = None;
    for snap in traj.snapshots.iter().filter(|s| s.time < stop) {
        let grads = snap.nodal_gradients();
        let m = grads[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let m0 = *m0.get_or_insert(m);
        let bound = m0 - rate * (snap.time - t0);
        worst = worst.min(m - bound + tol);
        times.push(snap.time);
        maxima.push(m);
        bounds.push(bound);
    }
    Ok(SupGradReport {
        times,
        max_gradient: maxima,
        lower_bound: bounds,
        tol,
        worst_margin: worst,
        holds: worst >= 0.0,
    })
}

/// Gradient threshold and time bound beyond which no classical solution
/// exists for data with a steep enough supercritical shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Required `u_r(r₄, 0)`.
    pub gradient_threshold: f64,
    /// Upper bound on the existence time.
    pub t0: f64,
}

pub fn nonexistence_certificate(
    r1: f64,
    r2: f64,
    r3: f64,
    r4: f64,
    r5: f64,
    profile: &NonlinearityProfile,
) -> Result<Thresholds> {
    if !(0.0 < r1 && r1 < r3 && r3 < r4 && r4 < r5 && r5 < r2) {
        return Err(Error::Config(format!(
            "need 0 < r1 < r3 < r4 < r5 < r2, got {r1}, {r3}, {r4}, {r5}, {r2}"
        )));
    }
    let slope = profile.plateau()?;
    let third = profile.d3phi(SIGMA_CRITICAL)?;
    if !(third < -crate::nonlinearity::HYPOTHESIS_MARGIN) {
        return Err(Error::Hypothesis("phi'''(1) < 0"));
    }
    let third = third.abs();
    Ok(Thresholds {
        gradient_threshold: 1.0 + r2 * (r2 - r1) / (r1 * r1) * (slope / (2.0 * third)).sqrt(),
        t0: r2 * (r2 - r1) / (2.0 * slope * third).sqrt(),
    })
}
