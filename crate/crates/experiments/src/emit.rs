//! CSV, SVG and metadata writers.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{ExperimentError, Result};
use crate::scenario::{PlotSpec, COLUMNS};
use crate::sweep::{Row, SweepResult};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 20.0, 55.0); // left, right, top, bottom
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn row_record(r: &Row) -> [String; 11] {
    [
        r.scenario.clone(),
        r.d.to_string(),
        r.r.to_string(),
        r.q.to_string(),
        r.gamma_up.to_string(),
        r.gamma_down.to_string(),
        r.t.to_string(),
        cell(r.sep),
        cell(r.sepi),
        cell(r.coherence_l1),
        cell(r.witness),
    ]
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| ExperimentError::io(path, e))
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    if result.rows.is_empty() {
        return Err(ExperimentError::Empty(result.name.clone()));
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(COLUMNS)?;
    for r in &result.rows {
        w.write_record(row_record(r))?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))
}

/// Probe trace distances of the witness pair, one line per grid time.
pub fn emit_distances_csv(result: &SweepResult, path: &Path) -> Result<()> {
    if result.distances.is_empty() {
        return Err(ExperimentError::Empty(format!("{} has no witness distances", result.name)));
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["scenario", "D", "R", "Q", "Gamma_up", "Gamma_down", "t", "trace_distance"])?;
    for r in &result.distances {
        w.write_record([
            r.scenario.clone(),
            r.d.to_string(),
            r.r.to_string(),
            r.q.to_string(),
            r.gamma_up.to_string(),
            r.gamma_down.to_string(),
            r.t.to_string(),
            r.trace_distance.to_string(),
        ])?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))
}

pub fn emit_metadata(result: &SweepResult, path: &Path) -> Result<()> {
    let mut f = create(path)?;
    let text = serde_json::to_string_pretty(&result.metadata)?;
    writeln!(f, "{text}").map_err(|e| ExperimentError::io(path, e))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

/// Curves are keyed by scenario and every coordinate other than `x`.
fn family(r: &Row, x: &str) -> String {
    let mut key = r.scenario.clone();
    for col in ["D", "R", "Q", "Gamma_up", "Gamma_down", "t"] {
        if col != x {
            let _ = write!(key, " {col}={}", r.column(col).map(|v| v.to_string()).unwrap_or_default());
        }
    }
    key
}

/// Drops coordinates that are constant across the whole result from the legend.
fn legend(keys: &[String]) -> Vec<String> {
    let split: Vec<Vec<&str>> = keys.iter().map(|k| k.split(' ').collect()).collect();
    let varying: BTreeSet<usize> = (0..split.first().map_or(0, Vec::len))
        .filter(|&i| split.iter().any(|s| s.get(i) != split[0].get(i)))
        .collect();
    split
        .iter()
        .map(|s| s.iter().enumerate().filter(|(i, _)| varying.contains(i)).map(|(_, p)| *p).collect::<Vec<_>>().join(" "))
        .map(|s| if s.is_empty() { "all".to_string() } else { s })
        .collect()
}

/// Line chart of `y` against `x`, one polyline per curve family.
pub fn emit_svg(result: &SweepResult, plot: &PlotSpec, path: &Path) -> Result<()> {
    for col in [&plot.x, &plot.y] {
        if !COLUMNS[1..].contains(&col.as_str()) {
            return Err(ExperimentError::invalid(&result.name, format!("unknown plot column {col}")));
        }
    }
    let log_x = plot.log_x.unwrap_or(matches!(plot.x.as_str(), "D" | "R"));
    let mut keys: Vec<String> = Vec::new();
    let mut curves: Vec<Vec<(f64, f64)>> = Vec::new();
    for r in &result.rows {
        let (Some(x), Some(y)) = (r.column(&plot.x), r.column(&plot.y)) else { continue };
        if !x.is_finite() || !y.is_finite() || (log_x && x <= 0.0) {
            continue;
        }
        let key = family(r, &plot.x);
        let k = match keys.iter().position(|k| *k == key) {
            Some(k) => k,
            None => {
                keys.push(key);
                curves.push(Vec::new());
                keys.len() - 1
            }
        };
        curves[k].push((if log_x { x.log10() } else { x }, y));
    }
    if curves.is_empty() {
        return Err(ExperimentError::Empty(format!("{}: no finite ({}, {}) points", result.name, plot.x, plot.y)));
    }

    let all = curves.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (ml, mr, mt, mb) = MARGIN;
    let (pw, ph) = (WIDTH - ml - mr, HEIGHT - mt - mb);
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(&result.name));
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let label = if log_x { format!("1e{}", tick(xv)) } else { tick(xv) };
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, mt + ph + 16.0, escape(&label));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 6.0, py + 4.0, escape(&tick(yv)));
    }
    let xlabel = if log_x { format!("{} (log10)", plot.x) } else { plot.x.clone() };
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, ml + pw / 2.0, HEIGHT - 12.0, escape(&xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(&plot.y)
    );
    let names = legend(&keys);
    for (k, curve) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = curve.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            escape(&names[k])
        );
        let ly = mt + 14.0 + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{color}" text-anchor="end">{}</text>"#,
            ml + pw - 6.0,
            escape(&names[k])
        );
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s).map_err(|e| ExperimentError::io(path, e))
}

/// `x = t` for trajectories, otherwise the first swept coordinate; `y = sepi`
/// when present, otherwise `sep`.
pub fn default_plot(result: &SweepResult) -> PlotSpec {
    let rows = &result.rows;
    let varies = |col: &str| rows.iter().any(|r| r.column(col) != rows.first().and_then(|f| f.column(col)));
    let x = if rows.iter().any(|r| r.t.is_finite()) && varies("t") {
        "t"
    } else {
        ["D", "R", "Q", "Gamma_down"].into_iter().find(|c| varies(c)).unwrap_or("D")
    };
    let y = if rows.iter().any(|r| r.sepi.is_some()) { "sepi" } else { "sep" };
    PlotSpec { x: x.into(), y: y.into(), log_x: None }
}

/// Writes `<name>.csv`, `<name>.svg`, `<name>.metadata.json` and, when a
/// witness ran, `<name>.trace_distance.csv` under `dir`.
pub fn emit_all(result: &SweepResult, plot: Option<&PlotSpec>, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let path = |ext: &str| dir.join(format!("{}.{ext}", result.name));
    let mut written = Vec::new();
    emit_csv(result, &path("csv"))?;
    written.push(path("csv"));
    let fallback = default_plot(result);
    emit_svg(result, plot.unwrap_or(&fallback), &path("svg"))?;
    written.push(path("svg"));
    emit_metadata(result, &path("metadata.json"))?;
    written.push(path("metadata.json"));
    if !result.distances.is_empty() {
        emit_distances_csv(result, &path("trace_distance.csv"))?;
        written.push(path("trace_distance.csv"));
    }
    Ok(written)
}
