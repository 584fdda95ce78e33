//! Artifact writers: CSV tables, JSON summaries, and small self-contained
//! SVG charts (polylines with optional error bars, and heatmaps).
//!
//! Everything here is deterministic: floats print in Rust's shortest
//! round-trip form in CSV, JSON maps are sorted, and SVG geometry is fixed
//! by the input alone.

use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Collects artifacts for one scenario run and writes them under a single
/// output directory.
pub struct Out {
    dir: PathBuf,
    csv: bool,
    json: bool,
    svg: bool,
    written: Vec<String>,
}

impl Out {
    pub fn new(dir: &Path, formats: crate::config::Formats) -> Self {
        Self {
            dir: dir.to_path_buf(),
            csv: formats.csv,
            json: formats.json,
            svg: formats.svg,
            written: Vec::new(),
        }
    }

    fn put(&mut self, name: &str, contents: &str) -> Result<(), String> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| format!("cannot create {}: {e}", self.dir.display()))?;
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, contents: &str) -> Result<(), String> {
        if self.csv {
            self.put(name, contents)?;
        }
        Ok(())
    }

    pub fn svg(&mut self, name: &str, contents: &str) -> Result<(), String> {
        if self.svg {
            self.put(name, contents)?;
        }
        Ok(())
    }

    /// Writes `<scenario>_summary.json` embedding the resolved parameters,
    /// the list of artifacts written so far, and scenario results.
    pub fn summary<P: Serialize>(
        &mut self,
        scenario: &str,
        params: &P,
        results: Value,
    ) -> Result<(), String> {
        if !self.json {
            return Ok(());
        }
        let doc = json!({
            "scenario": scenario,
            "parameters": serde_json::to_value(params).map_err(|e| e.to_string())?,
            "artifacts": self.written,
            "results": results,
        });
        let text = format!(
            "{}\n",
            serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?
        );
        let stem = scenario.replace('-', "_");
        self.put(&format!("{stem}_summary.json"), &text)
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }
}

/// Shortest round-trip float for CSV cells.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Compact float for axis labels and legends.
pub fn label_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Linear white → dark-blue ramp for `v ∈ [0, 1]`.
pub fn blue_ramp(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * v).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(255.0, 8.0),
        lerp(255.0, 48.0),
        lerp(255.0, 107.0)
    )
}

pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    /// Symmetric error-bar half-heights, one per point; empty for none.
    pub bars: Vec<f64>,
}

const W: f64 = 760.0;
const H: f64 = 480.0;
const ML: f64 = 66.0;
const MR: f64 = 170.0;
const MT: f64 = 40.0;
const MB: f64 = 52.0;

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{W}" height="{H}" fill="white"/>
<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        ML + (W - ML - MR) / 2.0,
        escape(title)
    );
    s
}

fn axis_labels(s: &mut String, x_label: &str, y_label: &str) {
    let cx = ML + (W - ML - MR) / 2.0;
    let cy = MT + (H - MT - MB) / 2.0;
    let _ = writeln!(
        s,
        r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>
<text x="16" y="{cy:.1}" text-anchor="middle" transform="rotate(-90 16 {cy:.1})">{}</text>"#,
        H - 12.0,
        escape(x_label),
        escape(y_label)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn legend(s: &mut String, entries: &[(String, String)]) {
    let x = W - MR + 14.0;
    for (i, (color, label)) in entries.iter().enumerate() {
        let y = MT + 14.0 + 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{color}"/>
<text x="{:.1}" y="{:.1}">{}</text>"#,
            y - 10.0,
            x + 18.0,
            y,
            escape(label)
        );
    }
}

/// Polyline chart with circular markers, optional error bars, and a legend.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (x0, x1) = extent(pts.iter().map(|p| p.0));
    let (mut y0, mut y1) = extent(pts.iter().map(|p| p.1).chain(series.iter().flat_map(|s| {
        s.points
            .iter()
            .zip(s.bars.iter())
            .flat_map(|(p, b)| [p.1 - b, p.1 + b])
    })));
    let pad = 0.05 * (y1 - y0).max(1e-12);
    y0 -= pad;
    y1 += pad;
    let sx = |v: f64| ML + (v - x0) / (x1 - x0).max(1e-300) * (W - ML - MR);
    let sy = |v: f64| H - MB - (v - y0) / (y1 - y0).max(1e-300) * (H - MT - MB);

    let mut s = svg_open(title);
    // frame and ticks
    let _ = writeln!(
        s,
        r#"<rect x="{ML}" y="{MT}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        W - ML - MR,
        H - MT - MB
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let px = sx(fx);
        let py = sy(fy);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>
<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>
<line x1="{:.1}" y1="{py:.1}" x2="{ML}" y2="{py:.1}" stroke="black"/>
<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            H - MB,
            H - MB + 5.0,
            H - MB + 18.0,
            label_num(fx),
            ML - 5.0,
            ML - 8.0,
            py + 4.0,
            label_num(fy)
        );
    }
    // zero line when the range crosses it
    if y0 < 0.0 && y1 > 0.0 {
        let py = sy(0.0);
        let _ = writeln!(
            s,
            r##"<line x1="{ML}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#cccccc" stroke-dasharray="4 3"/>"##,
            W - MR
        );
    }
    for ser in series {
        let path: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            path.join(" "),
            ser.color
        );
        for (i, &(x, y)) in ser.points.iter().enumerate() {
            let (px, py) = (sx(x), sy(y));
            if let Some(&b) = ser.bars.get(i) {
                if b > 0.0 {
                    let (t, bt) = (sy(y + b), sy(y - b));
                    let _ = writeln!(
                        s,
                        r#"<line x1="{px:.1}" y1="{t:.1}" x2="{px:.1}" y2="{bt:.1}" stroke="{c}"/>
<line x1="{:.1}" y1="{t:.1}" x2="{:.1}" y2="{t:.1}" stroke="{c}"/>
<line x1="{:.1}" y1="{bt:.1}" x2="{:.1}" y2="{bt:.1}" stroke="{c}"/>"#,
                        px - 3.0,
                        px + 3.0,
                        px - 3.0,
                        px + 3.0,
                        c = ser.color
                    );
                }
            }
            let _ = writeln!(s, r#"<circle cx="{px:.1}" cy="{py:.1}" r="2.5" fill="{}"/>"#, ser.color);
        }
    }
    axis_labels(&mut s, x_label, y_label);
    legend(
        &mut s,
        &series
            .iter()
            .map(|ser| (ser.color.clone(), ser.label.clone()))
            .collect::<Vec<_>>(),
    );
    s.push_str("</svg>\n");
    s
}

/// Grid heatmap. `colors` is row-major with `ny` rows of `nx` cells; row 0
/// is drawn at the bottom. Tick labels are given as (cell index, text).
#[allow(clippy::too_many_arguments)]
pub fn heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    nx: usize,
    ny: usize,
    colors: &[String],
    x_ticks: &[(usize, String)],
    y_ticks: &[(usize, String)],
    legend_entries: &[(String, String)],
) -> String {
    assert_eq!(colors.len(), nx * ny);
    let pw = W - ML - MR;
    let ph = H - MT - MB;
    let (cw, ch) = (pw / nx as f64, ph / ny as f64);
    let mut s = svg_open(title);
    for yi in 0..ny {
        for xi in 0..nx {
            let x = ML + cw * xi as f64;
            let y = H - MB - ch * (yi + 1) as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                cw + 0.05,
                ch + 0.05,
                colors[yi * nx + xi]
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<rect x="{ML}" y="{MT}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#
    );
    for (xi, label) in x_ticks {
        let px = ML + cw * (*xi as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>
<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            H - MB,
            H - MB + 5.0,
            H - MB + 18.0,
            escape(label)
        );
    }
    for (yi, label) in y_ticks {
        let py = H - MB - ch * (*yi as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{ML}" y2="{py:.1}" stroke="black"/>
<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            ML - 5.0,
            ML - 8.0,
            py + 4.0,
            escape(label)
        );
    }
    axis_labels(&mut s, x_label, y_label);
    legend(&mut s, legend_entries);
    s.push_str("</svg>\n");
    s
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
