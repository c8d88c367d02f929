//! The four subcommands, minus argument parsing.

use std::fs;
use std::path::Path;

use capjet_core::dynamics::{self, Outcome, Trajectory};
use capjet_core::linstab;
use serde_json::json;

use crate::config::{Format, SimConfig};
use crate::error::{CliError, Result};
use crate::output::{line_plot, sha256_hex, Cell, CsvTable, Series};
use crate::snapshot;
use crate::verify::{self, Check};

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub trajectory: Trajectory,
    pub dt: f64,
    pub config_sha256: String,
}

impl SimulateReport {
    pub fn outcome_json(&self) -> serde_json::Value {
        let last = self.trajectory.last();
        let mut v = json!({
            "outcome": "completed",
            "final_time": last.time(),
            "steps": (last.time() / self.dt).round() as u64,
            "dt": self.dt,
            "config_sha256": self.config_sha256,
        });
        if let Outcome::PinchOff { time, min_radius } = self.trajectory.outcome {
            v["outcome"] = json!("pinch_off");
            v["pinch_off"] = json!({ "time": time, "min_radius": min_radius });
        }
        v
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Runs `cfg` and writes its artifacts into `out`.
pub fn simulate(cfg: &SimConfig, seed: u64, base_dir: &Path, out: &Path) -> Result<SimulateReport> {
    let spec = cfg.run_spec(seed, base_dir)?;
    let trajectory = dynamics::run(&spec)?;
    let report = SimulateReport { trajectory, dt: spec.dt, config_sha256: cfg.sha256() };
    create_dir(out)?;
    let traj = &report.trajectory;
    if cfg.has_format(Format::Csv) {
        trajectory_table(cfg, &report, seed).write(&out.join("trajectory.csv"))?;
    }
    if cfg.has_format(Format::Cjsnap) {
        for s in &traj.snapshots {
            let step = (s.time() / spec.dt).round() as u64;
            snapshot::write(&out.join(snapshot::file_name(step)), s)?;
        }
    }
    if cfg.has_format(Format::Svg) {
        write_plots(cfg, traj, out)?;
    }
    let outcome = serde_json::to_string_pretty(&report.outcome_json()).expect("json") + "\n";
    write_text(&out.join("outcome.json"), &outcome)?;
    Ok(report)
}

fn trajectory_table(cfg: &SimConfig, report: &SimulateReport, seed: u64) -> CsvTable {
    let s = cfg.diagnostics.sobolev_index;
    let mut columns: Vec<String> =
        vec!["t".into(), "E".into(), "min_eta".into(), format!("eta_H{s}"), format!("psi_H{s}")];
    columns.extend(cfg.diagnostics.tracked_modes.iter().map(|k| format!("amp_{k}")));
    let mut t = CsvTable::with_columns(columns);
    t.comment("config_sha256", &report.config_sha256);
    t.comment("seed", seed);
    t.comment("dt", report.dt);
    for r in &report.trajectory.diagnostics {
        let mut row: Vec<Cell> =
            vec![r.time.into(), r.energy.into(), r.min_eta.into(), r.eta_norm.into(), r.psi_norm.into()];
        row.extend(r.modes.iter().map(|&a| Cell::from(a)));
        t.push(row);
    }
    t
}

fn write_plots(cfg: &SimConfig, traj: &Trajectory, out: &Path) -> Result<()> {
    // at most eight profiles, evenly spread over the saved snapshots
    let snaps = &traj.snapshots;
    let picks: Vec<usize> = if snaps.len() <= 8 {
        (0..snaps.len()).collect()
    } else {
        let mut v: Vec<usize> = (0..8).map(|i| i * (snaps.len() - 1) / 7).collect();
        v.dedup();
        v
    };
    let profiles: Vec<Series> = picks
        .iter()
        .map(|&i| {
            let s = &snaps[i];
            let nodes = s.grid().nodes();
            Series {
                label: format!("t={:.4}", s.time()),
                points: nodes.iter().zip(s.eta().values()).map(|(&z, &e)| (z, e)).collect(),
            }
        })
        .collect();
    write_text(&out.join("eta_profiles.svg"), &line_plot("surface profiles", "z", "eta", &profiles, false))?;
    let rows = &traj.diagnostics;
    let series = |label: &str, f: &dyn Fn(&dynamics::DiagnosticRow) -> f64| Series {
        label: label.into(),
        points: rows.iter().map(|r| (r.time, f(r))).collect(),
    };
    let diag = [
        series("E", &|r| r.energy),
        series("min eta", &|r| r.min_eta),
        series("|eta - R|_Hs", &|r| r.eta_norm),
        series("|psi|_Hs", &|r| r.psi_norm),
    ];
    write_text(&out.join("diagnostics.svg"), &line_plot("diagnostics", "t", "value", &diag, false))?;
    if !cfg.diagnostics.tracked_modes.is_empty() {
        let modes: Vec<Series> = cfg
            .diagnostics
            .tracked_modes
            .iter()
            .enumerate()
            .map(|(i, k)| Series {
                label: format!("|eta_{k}|"),
                points: rows.iter().map(|r| (r.time, r.modes[i])).collect(),
            })
            .collect();
        write_text(&out.join("modes.svg"), &line_plot("mode amplitudes", "t", "amplitude", &modes, true))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionArgs {
    pub radius: f64,
    pub kappa: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionReport {
    pub table: CsvTable,
    pub x_star: f64,
    pub xi_star: f64,
    pub sigma_star: f64,
}

/// Samples `sigma(xi)` on an even grid over `[xi_min, xi_max]`, plus the
/// neutral wavenumber `1/R` whenever it lies in range.
pub fn dispersion(a: &DispersionArgs) -> Result<DispersionReport> {
    let ok = a.radius.is_finite()
        && a.radius > 0.0
        && a.kappa.is_finite()
        && a.kappa >= 0.0
        && a.xi_min.is_finite()
        && a.xi_max.is_finite()
        && 0.0 <= a.xi_min
        && a.xi_min <= a.xi_max
        && a.points >= 1;
    if !ok {
        return Err(CliError::config("need R > 0, kappa >= 0, 0 <= xi_min <= xi_max and points >= 1"));
    }
    let mut xs: Vec<f64> = if a.points == 1 {
        vec![a.xi_min]
    } else {
        (0..a.points).map(|i| a.xi_min + (a.xi_max - a.xi_min) * i as f64 / (a.points - 1) as f64).collect()
    };
    let neutral = 1.0 / a.radius;
    if (a.xi_min..=a.xi_max).contains(&neutral) {
        xs.push(neutral);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let (xi_star, sigma_star) = linstab::most_unstable(a.radius, a.kappa);
    let params = json!({"radius": a.radius, "kappa": a.kappa, "xi_min": a.xi_min, "xi_max": a.xi_max, "points": a.points});
    let mut t = CsvTable::new(&["xi", "sigma2", "sigma_re", "sigma_im"]);
    t.comment("config_sha256", sha256_hex(params.to_string().as_bytes()));
    t.comment("x_star", xi_star * a.radius);
    t.comment("xi_star", xi_star);
    t.comment("sigma_star", sigma_star);
    for xi in xs {
        let s = linstab::growth_rate(a.radius, a.kappa, xi);
        t.push(vec![xi.into(), s.sigma2.into(), s.sigma.re.into(), s.sigma.im.into()]);
    }
    Ok(DispersionReport { table: t, x_star: xi_star * a.radius, xi_star, sigma_star })
}

/// Runs a suite, writes `verify_<suite>.csv` into `out` and returns the checks.
pub fn verify(suite: &str, out: &Path) -> Result<Vec<Check>> {
    let checks = verify::run_suite(suite)?;
    create_dir(out)?;
    let mut table = verify::table(&checks);
    table.comment("config_sha256", sha256_hex(suite.as_bytes()));
    table.write(&out.join(format!("verify_{suite}.csv")))?;
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(kappa: f64) -> DispersionArgs {
        DispersionArgs { radius: 2.0, kappa, xi_min: 0.0, xi_max: 1.0, points: 5 }
    }

    #[test]
    fn neutral_row_is_present() {
        let r = dispersion(&args(1.0)).unwrap();
        let row = r.table.rows.iter().find(|row| row[0] == Cell::Num(0.5)).expect("xi = 1/R row");
        assert_eq!(row[1], Cell::Num(0.0));
        assert_eq!(r.table.rows.len(), 5);
        assert!((r.x_star - 0.697).abs() < 1e-3);
    }

    #[test]
    fn zero_tension_is_neutral_everywhere() {
        let r = dispersion(&args(0.0)).unwrap();
        for row in &r.table.rows {
            assert!(matches!(row[1], Cell::Num(v) if v == 0.0));
        }
        assert_eq!(r.sigma_star, 0.0);
    }

    #[test]
    fn bad_ranges() {
        let mut a = args(1.0);
        a.xi_min = 2.0;
        assert!(dispersion(&a).is_err());
    }
}
