//! Parameter sweeps over a base configuration.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use capjet_core::dynamics::Outcome;
use capjet_core::linstab;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commands::{self, SimulateReport};
use crate::config::SimConfig;
use crate::error::{CliError, Result};
use crate::output::{sha256_hex, Cell, CsvTable};

/// Axis named `kR` sets `grid.half_period = pi R / kR`, putting mode 1 at
/// `xi R = kR`. Any other name is a dotted path into the configuration.
pub const KR_AXIS: &str = "kR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub values: Vec<Value>,
}

fn default_cap() -> usize {
    64
}

fn default_mode() -> i64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: SimConfig,
    #[serde(default)]
    pub axes: Vec<Axis>,
    /// Most runs a sweep may expand to.
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Mode whose growth rate goes in the summary.
    #[serde(default = "default_mode")]
    pub growth_mode: i64,
}

impl SweepSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
    }

    pub fn sha256(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("spec serializes").as_bytes())
    }

    pub fn run_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// All configurations, first axis slowest. Fails before anything runs if
    /// the cap is exceeded or any point is invalid.
    pub fn expand(&self) -> Result<Vec<(Vec<Value>, SimConfig)>> {
        let count = self.run_count();
        if count > self.cap {
            return Err(CliError::config(format!("sweep expands to {count} runs, cap is {}", self.cap)));
        }
        let base = serde_json::to_value(&self.base).expect("config serializes");
        let mut out = Vec::with_capacity(count);
        for index in 0..count {
            let mut rem = index;
            let mut point = vec![Value::Null; self.axes.len()];
            for (slot, axis) in self.axes.iter().enumerate().rev() {
                point[slot] = axis.values[rem % axis.values.len()].clone();
                rem /= axis.values.len();
            }
            let mut doc = base.clone();
            for (axis, value) in self.axes.iter().zip(&point) {
                apply_axis(&mut doc, &axis.name, value)?;
            }
            let cfg: SimConfig = serde_json::from_value(doc)
                .map_err(|e| CliError::config(format!("sweep point {index}: {e}")))?;
            cfg.validate()?;
            out.push((point, cfg));
        }
        Ok(out)
    }
}

fn apply_axis(doc: &mut Value, name: &str, value: &Value) -> Result<()> {
    if name == KR_AXIS {
        let kr = value.as_f64().filter(|v| *v > 0.0).ok_or_else(|| CliError::config("kR values must be positive"))?;
        let radius = doc["physics"]["radius"].as_f64().ok_or_else(|| CliError::config("base physics.radius"))?;
        doc["grid"]["half_period"] = Value::from(std::f64::consts::PI * radius / kr);
        return Ok(());
    }
    let mut node = doc;
    for key in name.split('.') {
        node = node
            .as_object_mut()
            .and_then(|m| m.get_mut(key))
            .ok_or_else(|| CliError::config(format!("sweep axis {name:?} does not name a configuration field")))?;
    }
    *node = value.clone();
    Ok(())
}

/// One finished (or failed) sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub point: Vec<Value>,
    pub result: std::result::Result<RowResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowResult {
    pub final_time: f64,
    pub outcome: Outcome,
    pub growth_measured: Option<f64>,
    pub growth_expected: f64,
}

fn summarize(report: &SimulateReport, cfg: &SimConfig, mode: i64) -> RowResult {
    let grid = cfg.grid_spec().expect("validated");
    let xi = grid.fundamental() * mode as f64;
    let expected = linstab::growth_rate(cfg.physics.radius, cfg.physics.kappa, xi.abs()).sigma.re;
    RowResult {
        final_time: report.trajectory.last().time(),
        outcome: report.trajectory.outcome,
        growth_measured: linstab::measure_growth(&report.trajectory, mode).ok(),
        growth_expected: expected,
    }
}

/// Runs every point on `threads` workers. Each run writes to
/// `out/run_NNNN/`; rows come back in index order whatever the thread count.
pub fn run(spec: &SweepSpec, out: &Path, threads: usize, seed: u64, base_dir: &Path) -> Result<Vec<SweepRow>> {
    let points = spec.expand()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::with_capacity(points.len()));
    let workers = threads.max(1).min(points.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                let Some((point, cfg)) = points.get(index) else { break };
                let dir = run_dir(out, index);
                let result = commands::simulate(cfg, seed, base_dir, &dir)
                    .map(|report| summarize(&report, cfg, spec.growth_mode))
                    .map_err(|e| e.to_string());
                rows.lock().expect("no worker panicked").push(SweepRow { index, point: point.clone(), result });
            });
        }
    });
    let mut rows = rows.into_inner().expect("no worker panicked");
    rows.sort_by_key(|r| r.index);
    Ok(rows)
}

pub fn run_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("run_{index:04}"))
}

pub fn summary_table(spec: &SweepSpec, rows: &[SweepRow]) -> CsvTable {
    let mut columns = vec!["index".to_string()];
    columns.extend(spec.axes.iter().map(|a| a.name.clone()));
    columns.extend(
        ["final_time", "outcome", "growth_measured", "growth_expected", "growth_rel_error", "error"].map(String::from),
    );
    let mut t = CsvTable::with_columns(columns);
    t.comment("config_sha256", spec.sha256());
    for row in rows {
        let mut cells = vec![Cell::from(row.index)];
        cells.extend(row.point.iter().map(value_cell));
        match &row.result {
            Ok(r) => {
                let outcome = match r.outcome {
                    Outcome::Completed => "completed",
                    Outcome::PinchOff { .. } => "pinch_off",
                };
                cells.push(r.final_time.into());
                cells.push(outcome.into());
                match r.growth_measured {
                    Some(g) => {
                        cells.push(g.into());
                        cells.push(r.growth_expected.into());
                        let err = if r.growth_expected != 0.0 { (g / r.growth_expected - 1.0).abs() } else { g.abs() };
                        cells.push(err.into());
                    }
                    None => {
                        cells.push("".into());
                        cells.push(r.growth_expected.into());
                        cells.push("".into());
                    }
                }
                cells.push("".into());
            }
            Err(msg) => {
                cells.extend(["", "failed", "", "", ""].map(Cell::from));
                cells.push(msg.clone().into());
            }
        }
        t.push(cells);
    }
    t
}

fn value_cell(v: &Value) -> Cell {
    match v {
        Value::Number(n) if n.is_i64() => Cell::Int(n.as_i64().expect("checked")),
        Value::Number(n) => Cell::Num(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => Cell::Text(s.clone()),
        other => Cell::Text(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(axes: &str) -> SweepSpec {
        let text = format!(
            r#"{{
                "base": {{
                    "grid": {{"half_period": 3.141592653589793, "points": 16}},
                    "physics": {{"radius": 2.0, "kappa": 1.0}},
                    "integrator": {{"end_time": 0.1}}
                }},
                "axes": {axes},
                "cap": 4
            }}"#
        );
        serde_json::from_str(&text).unwrap()
    }

    #[test]
    fn empty_axes_give_the_base_run() {
        let s = spec("[]");
        let pts = s.expand().unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].1, s.base);
    }

    #[test]
    fn cap_is_checked_first() {
        let s = spec(r#"[{"name": "physics.kappa", "values": [1, 2, 3]}, {"name": "kR", "values": [0.5, 0.7]}]"#);
        assert!(matches!(s.expand(), Err(CliError::Config(m)) if m.contains("cap")));
    }

    #[test]
    fn axes_expand_first_slowest() {
        let s = spec(r#"[{"name": "kR", "values": [0.5, 1.0]}, {"name": "grid.points", "values": [8, 32]}]"#);
        let pts = s.expand().unwrap();
        let got: Vec<(f64, usize)> = pts.iter().map(|(_, c)| (c.grid.half_period, c.grid.points)).collect();
        let l = |kr: f64| std::f64::consts::PI * 2.0 / kr;
        assert_eq!(got, vec![(l(0.5), 8), (l(0.5), 32), (l(1.0), 8), (l(1.0), 32)]);
    }

    #[test]
    fn bad_paths_and_values() {
        assert!(spec(r#"[{"name": "physics.viscosity", "values": [1]}]"#).expand().is_err());
        assert!(spec(r#"[{"name": "grid.points", "values": [15]}]"#).expand().is_err());
        assert!(spec(r#"[{"name": "kR", "values": [-1]}]"#).expand().is_err());
    }
}
