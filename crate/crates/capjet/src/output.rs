//! CSV tables and SVG line plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A cell is either a number (shortest round-trip decimal) or text.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "pass" } else { "fail" }.into())
    }
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        // Display for f64 is the shortest string that parses back to the same value
        Cell::Num(v) => format!("{v}"),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { comments: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Self { comments: Vec::new(), columns, rows: Vec::new() }
    }

    /// Adds `# key=value`.
    pub fn comment(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.comments.push(format!("{key}={value}"));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            writeln!(s, "# {c}").unwrap();
        }
        writeln!(s, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(cell_text).collect();
            writeln!(s, "{}", cells.join(",")).unwrap();
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }
}

/// One named polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// A self-contained SVG line plot with axes and tick labels.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let (w, h, margin) = (640.0, 420.0, 60.0);
    let tf = |y: f64| if log_y { y.abs().max(1e-300).log10() } else { y };
    let finite = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && tf(p.1).is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(tf(y));
        y1 = y1.max(tf(y));
    }
    if !(x0 < x1) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !(y0 < y1) {
        let pad = if y0.is_finite() { y0.abs().max(1.0) * 1e-3 } else { 1.0 };
        y0 = if y0.is_finite() { y0 - pad } else { 0.0 };
        y1 = if y1.is_finite() { y1 + pad } else { 1.0 };
    }
    let px = |x: f64| margin + (x - x0) / (x1 - x0) * (w - 2.0 * margin);
    let py = |y: f64| h - margin - (tf(y) - y0) / (y1 - y0) * (h - 2.0 * margin);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, w / 2.0, escape(title)).unwrap();
    let (left, right, top, bottom) = (margin, w - margin, margin, h - margin);
    writeln!(s, r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" stroke="black" fill="none"/>"#).unwrap();
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let xp = left + f * (right - left);
        let yp = bottom - f * (bottom - top);
        writeln!(s, r#"<text x="{xp}" y="{}" text-anchor="middle" font-size="11">{}</text>"#, bottom + 16.0, tick(xv)).unwrap();
        let ylab = if log_y { format!("1e{}", tick(yv)) } else { tick(yv) };
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{ylab}</text>"#, left - 6.0, yp + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, h - 12.0, escape(x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    )
    .unwrap();
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && tf(p.1).is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if !pts.is_empty() {
            writeln!(s, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, pts.join(" ")).unwrap();
        }
        if !ser.label.is_empty() {
            let ly = top + 14.0 * i as f64;
            writeln!(s, r#"<text x="{}" y="{ly}" font-size="11" fill="{color}">{}</text>"#, right - 110.0, escape(&ser.label))
                .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.comment("config_sha256", "abc");
        let vals = [0.1 + 0.2, 1e-300, -2.5e17, f64::MIN_POSITIVE];
        for &v in &vals {
            t.push(vec![v.into(), Cell::Int(3)]);
        }
        let text = t.render();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# config_sha256=abc"));
        assert_eq!(lines.next(), Some("a,b"));
        for (line, &v) in lines.zip(&vals) {
            let first = line.split(',').next().unwrap();
            assert_eq!(first.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn text_cells_are_quoted() {
        let mut t = CsvTable::new(&["msg"]);
        t.push(vec![Cell::Text("a, \"b\"".into())]);
        assert!(t.render().ends_with("\"a, \"\"b\"\"\"\n"));
    }

    #[test]
    fn plot_is_well_formed() {
        let s = line_plot(
            "t < 1",
            "z",
            "eta",
            &[Series { label: "x".into(), points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)] }],
            false,
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("t &lt; 1"));
        assert_eq!(s.matches("<polyline").count(), 1);
        // degenerate ranges do not produce NaN coordinates
        let flat = line_plot("", "", "", &[Series { label: String::new(), points: vec![(0.0, 0.0)] }], true);
        assert!(!flat.contains("NaN"));
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
