//! Trajectory CSV and run summaries.
//!
//! CSV rows are `t, u(x_0), …, u(x_N)` with a header row; values use Rust's
//! shortest round-trip formatting so identical runs give identical bytes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::solvers::{Breakdown, DtInterval, Model, Trajectory};

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    let Some(first) = traj.snapshots.first() else {
        return writeln!(out, "t");
    };
    write!(out, "t")?;
    for i in 0..first.grid.n_nodes() {
        write!(out, ",x_{i}")?;
    }
    writeln!(out)?;
    for snap in &traj.snapshots {
        write!(out, "{}", snap.time)?;
        for v in &snap.values {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Parses a CSV written by [`write_trajectory_csv`] into `(t, values)` rows.
pub fn read_trajectory_csv(text: &str) -> Result<Vec<(f64, Vec<f64>)>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty csv")?;
    if !header.starts_with('t') {
        return Err(format!("unexpected header {header:?}"));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(row, line)| {
            let mut cells = line.split(',').map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("row {}: {e}", row + 1))
            });
            let t = cells.next().ok_or("missing time")??;
            Ok((t, cells.collect::<Result<_, _>>()?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: Model,
    pub profile: String,
    pub a: f64,
    pub b: f64,
    pub n_cells: usize,
    pub snapshots: usize,
    pub total_steps: u64,
    pub final_time: f64,
    pub dt_history: Vec<DtInterval>,
    pub breakdown: Option<Breakdown>,
}

impl RunSummary {
    pub fn of(traj: &Trajectory) -> Self {
        let grid = traj.snapshots.first().map(|s| s.grid);
        Self {
            model: traj.model,
            profile: traj.profile_name.clone(),
            a: grid.map_or(f64::NAN, |g| g.a),
            b: grid.map_or(f64::NAN, |g| g.b),
            n_cells: grid.map_or(0, |g| g.n_cells),
            snapshots: traj.snapshots.len(),
            total_steps: traj.total_steps,
            final_time: traj.snapshots.last().map_or(0.0, |s| s.time),
            dt_history: traj.dt_history.clone(),
            breakdown: traj.breakdown.clone(),
        }
    }
}
