//! Static SVG renderings of scenario artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pmfront::output::RunSummary;

use crate::error::{field, io, CliResult};
use crate::scenarios::ScenarioReport;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#7f7f7f"];

/// Columns of a CSV with a header row; empty cells become `None`.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or("empty csv")?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let rows = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|c| {
                        let c = c.trim();
                        if c.is_empty() {
                            Ok(None)
                        } else {
                            c.parse::<f64>().map(Some).map_err(|e| format!("{c:?}: {e}"))
                        }
                    })
                    .collect()
            })
            .collect::<Result<_, String>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Vec<Option<f64>> {
        let k = self.header.iter().position(|h| h == name);
        self.rows.iter().map(|r| k.and_then(|k| r.get(k).copied().flatten())).collect()
    }
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if lo > hi {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// A line chart with axes, five ticks per axis and a legend.
pub struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<(String, Vec<(f64, f64)>, bool)>,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    /// Adds a polyline; `dashed` marks reference curves.
    pub fn line(&mut self, name: &str, pts: Vec<(f64, f64)>, dashed: bool) -> &mut Self {
        self.series.push((name.into(), pts, dashed));
        self
    }

    pub fn render(&self) -> String {
        let (x0, x1) = finite_range(self.series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
        let (y0, y1) = finite_range(self.series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let mut s = frame(&self.title, &self.x_label, &self.y_label, (x0, x1), (y0, y1));
        for (k, (name, pts, dashed)) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let dash = if *dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            // a gap in the data (non-finite point) starts a new polyline
            for seg in pts.split(|p| !(p.0.is_finite() && p.1.is_finite())) {
                if seg.is_empty() {
                    continue;
                }
                let coords: Vec<String> = seg.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    s,
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
                    coords.join(" ")
                );
            }
            let ly = PAD + 16.0 * k as f64;
            let _ = writeln!(
                s,
                "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\"{dash}/><text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>",
                W - PAD - 150.0,
                W - PAD - 130.0,
                W - PAD - 125.0,
                ly + 4.0,
                escape(name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(title: &str, xl: &str, yl: &str, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">{}</text>", W / 2.0, escape(title));
    let _ = writeln!(
        s,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (x, y) = (PAD + f * (W - 2.0 * PAD), H - PAD - f * (H - 2.0 * PAD));
        let _ = writeln!(
            s,
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/><text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{:.3}</text>",
            H - PAD,
            H - PAD + 5.0,
            H - PAD + 17.0,
            x0 + f * (x1 - x0)
        );
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{PAD}\" y2=\"{y:.1}\" stroke=\"black\"/><text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{:.3e}</text>",
            PAD - 5.0,
            PAD - 7.0,
            y + 3.0,
            y0 + f * (y1 - y0)
        );
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>", W / 2.0, H - 12.0, escape(xl));
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(yl)
    );
    s
}

fn pairs(x: &[Option<f64>], y: &[Option<f64>]) -> Vec<(f64, f64)> {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a.unwrap_or(f64::NAN), b.unwrap_or(f64::NAN)))
        .collect()
}

/// First and last snapshot against the node coordinate.
pub fn profiles_svg(csv: &Table, summary: Option<&RunSummary>) -> String {
    let mut chart = Chart::new("initial and final profiles", "x", "value");
    let n = csv.header.len().saturating_sub(1);
    let xs: Vec<f64> = (0..n)
        .map(|i| match summary {
            Some(s) if s.n_cells + 1 == n => s.a + (s.b - s.a) * i as f64 / s.n_cells as f64,
            _ => i as f64,
        })
        .collect();
    let mut add = |label: String, row: &Vec<Option<f64>>| {
        let pts = xs.iter().zip(&row[1..]).map(|(&x, v)| (x, v.unwrap_or(f64::NAN))).collect();
        chart.line(&label, pts, false);
    };
    if let Some(first) = csv.rows.first() {
        add(format!("t = {}", first[0].unwrap_or(f64::NAN)), first);
    }
    if csv.rows.len() > 1 {
        let last = &csv.rows[csv.rows.len() - 1];
        add(format!("t = {}", last[0].unwrap_or(f64::NAN)), last);
    }
    chart.render()
}

pub fn fronts_svg(csv: &Table) -> String {
    let t = csv.column("t");
    let mut chart = Chart::new("front positions and the expansion cone", "t", "r");
    chart
        .line("left front", pairs(&t, &csv.column("left_front")), false)
        .line("right front", pairs(&t, &csv.column("right_front")), false)
        .line("cone left", pairs(&t, &csv.column("cone_left")), true)
        .line("cone right", pairs(&t, &csv.column("cone_right")), true);
    chart.render()
}

pub fn supgrad_svg(csv: &Table) -> String {
    let t = csv.column("t");
    let mut chart = Chart::new("largest shell gradient and its lower bound", "t", "M(t)");
    chart
        .line("M(t)", pairs(&t, &csv.column("max_gradient")), false)
        .line("lower bound", pairs(&t, &csv.column("lower_bound")), true);
    chart.render()
}

/// Cells coloured by `sign(m)·log10(1 + |m|/scale)`: blue positive, red negative.
pub fn margin_heatmap_svg(csv: &Table) -> String {
    let (xs, ts, ms) = (csv.column("x"), csv.column("t"), csv.column("margin"));
    let (x0, x1) = finite_range(xs.iter().flatten().copied());
    let (t0, t1) = finite_range(ts.iter().flatten().copied());
    let scale = ms
        .iter()
        .flatten()
        .map(|m| m.abs())
        .filter(|m| m.is_finite() && *m > 0.0)
        .fold(f64::INFINITY, f64::min);
    let norm = ms
        .iter()
        .flatten()
        .map(|m| (1.0 + m.abs() / scale).log10())
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut s = frame("subsolution margin", "x", "t", (x0, x1), (t0, t1));
    let distinct = |v: &[Option<f64>]| {
        let mut u: Vec<f64> = v.iter().flatten().copied().collect();
        u.sort_by(f64::total_cmp);
        u.dedup();
        u.len().max(1) as f64
    };
    let (cw, ch) = ((W - 2.0 * PAD) / distinct(&xs), (H - 2.0 * PAD) / distinct(&ts));
    for ((x, t), m) in xs.iter().zip(&ts).zip(&ms) {
        let (Some(x), Some(t)) = (x, t) else { continue };
        let px = PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD - cw);
        let py = H - PAD - ch - (t - t0) / (t1 - t0) * (H - 2.0 * PAD - ch);
        let color = match m {
            Some(m) if m.is_finite() => {
                let a = ((1.0 + m.abs() / scale).log10() / norm).clamp(0.0, 1.0);
                let c = (255.0 * (1.0 - a)) as u8;
                if *m >= 0.0 {
                    format!("rgb({c},{c},255)")
                } else {
                    format!("rgb(255,{c},{c})")
                }
            }
            _ => "rgb(200,200,200)".into(),
        };
        let _ = writeln!(
            s,
            "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\"/>",
            cw + 0.3,
            ch + 0.3
        );
    }
    s.push_str("</svg>\n");
    s
}

fn read(dir: &Path, name: &str) -> CliResult<String> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(io(path))
}

/// Renders every plottable artifact listed in a `report.json` manifest next
/// to it and returns the written paths.
pub fn emit_plots(manifest: &Path) -> CliResult<Vec<PathBuf>> {
    let report: ScenarioReport = serde_json::from_str(&std::fs::read_to_string(manifest).map_err(io(manifest))?)?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let table = |name: &str| -> CliResult<Table> { Table::parse(&read(dir, name)?).map_err(|m| field(name, m)) };
    let mut written = Vec::new();
    for file in &report.files {
        let (svg, name) = match file.as_str() {
            "trajectory.csv" => {
                let summary = if report.files.iter().any(|f| f == "summary.json") {
                    Some(serde_json::from_str::<RunSummary>(&read(dir, "summary.json")?)?)
                } else {
                    None
                };
                (profiles_svg(&table(file)?, summary.as_ref()), "profiles.svg")
            }
            "fronts.csv" => (fronts_svg(&table(file)?), "fronts.svg"),
            "supgrad.csv" => (supgrad_svg(&table(file)?), "supgrad.svg"),
            "barrier_margin.csv" => (margin_heatmap_svg(&table(file)?), "barrier_margin.svg"),
            _ => continue,
        };
        let path = dir.join(name);
        std::fs::write(&path, svg).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_gives_axes_only() {
        let t = Table::parse("t\n").unwrap();
        let svg = profiles_svg(&t, None);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn gaps_split_polylines() {
        let t = Table::parse("t,left_front,right_front,cone_left,cone_right\n0,1,2,1,2\n1,,2.5,0.5,2.5\n2,0.2,3,0,3\n").unwrap();
        assert_eq!(t.column("left_front")[1], None);
        let svg = fronts_svg(&t);
        assert_eq!(svg.matches("<polyline").count(), 5);
    }

    #[test]
    fn heatmap_cells() {
        let t = Table::parse("x,t,margin\n0,0,1\n1,0,-1\n0,1,1e-3\n1,1,\n").unwrap();
        let svg = margin_heatmap_svg(&t);
        assert_eq!(svg.matches("<rect").count(), 2 + 4);
        assert!(svg.contains("rgb(255,"));
    }
}
