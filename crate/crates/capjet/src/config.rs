//! JSON run configuration.
//!
//! Every section except `grid`, `physics` and `integrator` has defaults.
//! Unknown keys are rejected so typos do not silently fall back to defaults.

use std::path::{Path, PathBuf};

use capjet_core::dno::SolverOptions;
use capjet_core::dynamics::{
    self, DiagnosticsSpec, DynamicsOptions, JetState, Mollifier, MollifierMode, RunSpec, DEFAULT_CFL,
};
use capjet_core::{Complex64, GridSpec, RealField, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::output::sha256_hex;
use crate::snapshot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// The period is `2 L`.
    pub half_period: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub radius: f64,
    pub kappa: f64,
    #[serde(default)]
    pub gravity: f64,
}

/// `amplitude * cos(xi_k z + phase)` with `xi_k = pi k / L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub amplitude: f64,
    pub mode: i64,
    #[serde(default)]
    pub phase: f64,
}

/// Random-phase data with `|coeff_k| = amplitude <xi_k>^{-decay}` on every
/// resolved nonzero mode; phases come from `--seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpectrum {
    pub amplitude: f64,
    pub decay: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Added to `R`.
    #[serde(default)]
    pub eta_modes: Vec<ModeSpec>,
    #[serde(default)]
    pub psi_modes: Vec<ModeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_eta: Option<RandomSpectrum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_psi: Option<RandomSpectrum>,
    /// Start from a `.cjsnap` file instead; relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierModeConfig {
    Flat,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierPlacement {
    /// Smooth `eta - R` and `psi` after every step.
    #[default]
    Smoothing,
    /// Apply `J_eps` to the tendencies inside the right-hand side.
    Rhs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierConfig {
    pub eps: f64,
    pub mode: MollifierModeConfig,
    #[serde(default)]
    pub placement: MollifierPlacement,
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

fn default_one() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Fixed step; absent means `cfl * sqrt(2/kappa) * xi_max^{-3/2}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub end_time: f64,
    #[serde(default = "default_one")]
    pub save_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollifier: Option<MollifierConfig>,
    #[serde(default = "default_true")]
    pub dealias: bool,
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Radial cells `M`; absent means `2N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { cells: None, tol: default_tol() }
    }
}

fn default_sobolev() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_sobolev")]
    pub sobolev_index: f64,
    #[serde(default)]
    pub tracked_modes: Vec<i64>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self { sobolev_index: default_sobolev(), tracked_modes: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Svg,
    Cjsnap,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Cjsnap]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, formats: default_formats() }
    }
}

fn check(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(msg))
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
    }

    /// Canonical JSON (field order of the struct, shortest floats).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.grid.half_period, self.grid.points)?)
    }

    pub fn has_format(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    /// Checks everything that does not need the initial state.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid_spec()?;
        let p = &self.physics;
        check(p.radius.is_finite() && p.radius > 0.0, "physics.radius must be positive")?;
        check(p.kappa.is_finite() && p.kappa >= 0.0, "physics.kappa must be nonnegative")?;
        check(p.gravity.is_finite(), "physics.gravity must be finite")?;
        let half = (grid.len() / 2) as i64;
        let modes_ok = |ms: &[ModeSpec]| {
            ms.iter().all(|m| m.amplitude.is_finite() && m.phase.is_finite() && m.mode.abs() < half)
        };
        check(modes_ok(&self.initial.eta_modes), "initial.eta_modes: amplitudes finite, |mode| < N/2")?;
        check(modes_ok(&self.initial.psi_modes), "initial.psi_modes: amplitudes finite, |mode| < N/2")?;
        for r in [&self.initial.random_eta, &self.initial.random_psi].into_iter().flatten() {
            check(r.amplitude.is_finite() && r.decay.is_finite(), "random spectrum parameters must be finite")?;
        }
        if self.initial.snapshot.is_some() {
            let i = &self.initial;
            check(
                i.eta_modes.is_empty() && i.psi_modes.is_empty() && i.random_eta.is_none() && i.random_psi.is_none(),
                "initial.snapshot excludes mode lists and random data",
            )?;
        }
        let it = &self.integrator;
        check(it.end_time.is_finite() && it.end_time >= 0.0, "integrator.end_time must be nonnegative")?;
        check(it.save_every >= 1, "integrator.save_every must be at least 1")?;
        match it.dt {
            Some(dt) => check(dt.is_finite() && dt > 0.0, "integrator.dt must be positive")?,
            None => {
                check(it.cfl.is_finite() && it.cfl > 0.0, "integrator.cfl must be positive")?;
                check(p.kappa > 0.0, "automatic dt needs kappa > 0; set integrator.dt")?;
            }
        }
        if let Some(m) = &it.mollifier {
            check(m.eps.is_finite() && m.eps >= 0.0, "integrator.mollifier.eps must be nonnegative")?;
        }
        check(self.solver.tol > 0.0 && self.solver.tol < 1.0, "solver.tol must lie in (0, 1)")?;
        check(self.solver.cells.map_or(true, |m| m >= 2), "solver.cells must be at least 2")?;
        check(self.diagnostics.sobolev_index.is_finite(), "diagnostics.sobolev_index must be finite")?;
        check(
            self.diagnostics.tracked_modes.iter().all(|k| k.abs() < half),
            "diagnostics.tracked_modes must satisfy |k| < N/2",
        )?;
        Ok(())
    }

    pub fn dt(&self) -> Result<f64> {
        match self.integrator.dt {
            Some(dt) => Ok(dt),
            None => Ok(dynamics::auto_dt(&self.grid_spec()?, self.physics.kappa, self.integrator.cfl)?),
        }
    }

    pub fn dynamics_options(&self) -> DynamicsOptions {
        let mut opts = DynamicsOptions {
            solver: SolverOptions { cells: self.solver.cells, tol: self.solver.tol, max_iter: None },
            dealias: self.integrator.dealias,
            smoothing: None,
            rhs_mollifier: None,
        };
        if let Some(m) = &self.integrator.mollifier {
            let mode = match m.mode {
                MollifierModeConfig::Flat => MollifierMode::Flat,
                MollifierModeConfig::Full => MollifierMode::Full,
            };
            let moll = Some(Mollifier { eps: m.eps, mode });
            match m.placement {
                MollifierPlacement::Smoothing => opts.smoothing = moll,
                MollifierPlacement::Rhs => opts.rhs_mollifier = moll,
            }
        }
        opts
    }

    /// The initial state. `base_dir` resolves a relative snapshot path.
    pub fn initial_state(&self, seed: u64, base_dir: &Path) -> Result<JetState> {
        self.validate()?;
        let grid = self.grid_spec()?;
        let p = &self.physics;
        if let Some(path) = &self.initial.snapshot {
            let path = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
            let state = snapshot::read(&path)?;
            check(state.grid() == &grid, "snapshot grid differs from the configured grid")?;
            check(
                state.radius() == p.radius && state.kappa() == p.kappa && state.gravity() == p.gravity,
                "snapshot physics (radius, kappa, gravity) differs from the configuration",
            )?;
            return Ok(state);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut eta = modes_field(&grid, &self.initial.eta_modes).values().iter().map(|v| v + p.radius).collect::<Vec<_>>();
        let mut psi = modes_field(&grid, &self.initial.psi_modes).into_values();
        if let Some(r) = &self.initial.random_eta {
            add(&mut eta, random_field(&grid, r, &mut rng)?.values());
        }
        if let Some(r) = &self.initial.random_psi {
            add(&mut psi, random_field(&grid, r, &mut rng)?.values());
        }
        let state = JetState::new(RealField::new(&grid, eta)?, RealField::new(&grid, psi)?, p.radius, p.kappa)?;
        Ok(state.with_gravity(p.gravity))
    }

    pub fn run_spec(&self, seed: u64, base_dir: &Path) -> Result<RunSpec> {
        let initial = self.initial_state(seed, base_dir)?;
        Ok(RunSpec {
            initial,
            dt: self.dt()?,
            end_time: self.integrator.end_time,
            save_every: self.integrator.save_every,
            options: self.dynamics_options(),
            diagnostics: DiagnosticsSpec {
                sobolev_index: self.diagnostics.sobolev_index,
                tracked_modes: self.diagnostics.tracked_modes.clone(),
            },
        })
    }
}

fn add(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

pub fn modes_field(grid: &GridSpec, modes: &[ModeSpec]) -> RealField {
    let dxi = grid.fundamental();
    RealField::from_fn(grid, |z| modes.iter().map(|m| m.amplitude * (m.mode as f64 * dxi * z + m.phase).cos()).sum())
}

/// Random phases, deterministic amplitudes `amplitude <xi>^{-decay}`.
pub fn random_field(grid: &GridSpec, spec: &RandomSpectrum, rng: &mut impl Rng) -> Result<RealField> {
    let n = grid.len();
    let half = (n / 2) as i64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..half {
        let xi = grid.wavenumber(grid.slot(k).expect("resolved"));
        let amp = spec.amplitude * (1.0 + xi * xi).powf(-spec.decay / 2.0);
        let c = Complex64::from_polar(amp, rng.gen_range(0.0..std::f64::consts::TAU));
        coeffs[grid.slot(k).expect("resolved")] = c;
        coeffs[grid.slot(-k).expect("resolved")] = c.conj();
    }
    Ok(SpectralField::new(grid, coeffs)?.to_real())
}
