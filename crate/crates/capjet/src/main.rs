use std::path::{Path, PathBuf};
use std::process::ExitCode;

use capjet::commands::{self, DispersionArgs};
use capjet::config::SimConfig;
use capjet::sweep::{self, SweepSpec};
use capjet::verify;
use capjet::{CliError, Result};
use capjet_core::dynamics::Outcome;
use clap::{Parser, Subcommand};

const EXIT_FAILED_CHECKS: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_PINCH_OFF: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "capjet", version, about = "Pseudospectral capillary-jet simulator")]
struct Cli {
    /// Run configuration (simulate) or sweep specification (sweep).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir` in the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for random-phase initial data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one configuration.
    Simulate,
    /// Tabulate the linear dispersion relation.
    Dispersion {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 0.0)]
        xi_min: f64,
        #[arg(long, default_value_t = 2.0)]
        xi_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Run an invariant suite.
    Verify {
        /// bessel, dno, shape, energy, dispersion, jacobian, gravity, paradiff, paralin or all.
        suite: String,
    },
    /// Run a parameter sweep.
    Sweep,
}

fn need_config(cli: &Cli) -> Result<&Path> {
    cli.config.as_deref().ok_or_else(|| CliError::config("--config is required"))
}

fn parent(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn run(cli: &Cli) -> Result<u8> {
    let default_out = PathBuf::from("out");
    match &cli.command {
        Command::Simulate => {
            let path = need_config(cli)?;
            let cfg = SimConfig::from_path(path)?;
            let out = cli.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or(default_out);
            let report = commands::simulate(&cfg, cli.seed, &parent(path), &out)?;
            println!("{}", report.outcome_json());
            Ok(match report.trajectory.outcome {
                Outcome::Completed => 0,
                Outcome::PinchOff { .. } => EXIT_PINCH_OFF,
            })
        }
        &Command::Dispersion { radius, kappa, xi_min, xi_max, points } => {
            let report = commands::dispersion(&DispersionArgs { radius, kappa, xi_min, xi_max, points })?;
            match &cli.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                    report.table.write(&dir.join("dispersion.csv"))?;
                }
                None => print!("{}", report.table.render()),
            }
            let summary = serde_json::json!({"x_star": report.x_star, "xi_star": report.xi_star, "sigma_star": report.sigma_star});
            eprintln!("{summary}");
            Ok(0)
        }
        Command::Verify { suite } => {
            let out = cli.out.clone().unwrap_or(default_out);
            let checks = commands::verify(suite, &out)?;
            print!("{}", verify::text(&checks));
            Ok(if checks.iter().all(|c| c.passed) { 0 } else { EXIT_FAILED_CHECKS })
        }
        Command::Sweep => {
            let path = need_config(cli)?;
            let spec = SweepSpec::from_path(path)?;
            let out = cli.out.clone().or_else(|| spec.base.output.dir.clone()).unwrap_or(default_out);
            let threads = cli
                .threads
                .or(spec.threads)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
            let rows = sweep::run(&spec, &out, threads, cli.seed, &parent(path))?;
            let table = sweep::summary_table(&spec, &rows);
            table.write(&out.join("summary.csv"))?;
            let failed = rows.iter().filter(|r| r.result.is_err()).count();
            println!("{}", serde_json::json!({"runs": rows.len(), "failed": failed}));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(EXIT_ERROR)
        }
    }
}
