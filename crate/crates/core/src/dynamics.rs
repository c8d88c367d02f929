//! Time evolution of the Zakharov system for the jet
//!
//! ```text
//! eta_t = G[eta] psi
//! psi_t = -psi_z^2 / 2 + (eta_z psi_z + G[eta] psi)^2 / (2 (1 + eta_z^2))
//!         + kappa (H(eta) + 1/(2R)) + g z
//! ```
//!
//! With gravity the potential is not periodic. It is stored as
//! `psi = psi_p + s z` with periodic `psi_p` and slope `s`, and `s_t = g`
//! absorbs the `g z` term. Because `G[eta] z = -eta_z` exactly, the system
//! for the periodic part reads
//!
//! ```text
//! eta_t   = G[eta] psi_p - s eta_z
//! psi_p,t = -(psi_p,z + s)^2 / 2 + (eta_z psi_p,z + G[eta] psi_p)^2 / (2 (1 + eta_z^2))
//!           + kappa (H(eta) + 1/(2R))
//! ```

#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use crate::dno::{DnOperator, SolverOptions};
use crate::grid::{GridSpec, RealField};
use crate::paradiff::{self, CutoffPair};
use crate::surface;
use crate::{Error, Result};

/// Runs stop once `min eta` reaches this fraction of `R`.
pub const PINCH_OFF_FLOOR: f64 = 1e-6;

/// Default Courant factor of the capillary step bound.
pub const DEFAULT_CFL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct JetState {
    time: f64,
    eta: RealField,
    psi: RealField,
    radius: f64,
    kappa: f64,
    gravity: f64,
    slope: f64,
}

impl JetState {
    pub fn new(eta: RealField, psi: RealField, radius: f64, kappa: f64) -> Result<Self> {
        eta.ensure_same_grid(&psi)?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter("reference radius must be positive"));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter("surface tension must be nonnegative"));
        }
        if !eta.is_finite() || !psi.is_finite() {
            return Err(Error::NonFinite);
        }
        let min = eta.min();
        if !(min > PINCH_OFF_FLOOR * radius) {
            return Err(Error::NonpositiveRadius { min_radius: min });
        }
        Ok(Self { time: 0.0, eta, psi, radius, kappa, gravity: 0.0, slope: 0.0 })
    }

    /// The trivial solution `(R, 0)`.
    pub fn equilibrium(grid: &GridSpec, radius: f64, kappa: f64) -> Result<Self> {
        Self::new(RealField::constant(grid, radius), RealField::zeros(grid), radius, kappa)
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn with_gravity(mut self, gravity: f64) -> Self {
        self.gravity = gravity;
        self
    }

    /// Sets the slope `s` of the non-periodic part `s z` of the potential.
    pub fn with_slope(mut self, slope: f64) -> Self {
        self.slope = slope;
        self
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn eta(&self) -> &RealField {
        &self.eta
    }

    /// Periodic part of the potential.
    pub fn psi(&self) -> &RealField {
        &self.psi
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn grid(&self) -> &GridSpec {
        self.eta.grid()
    }

    fn floor(&self) -> f64 {
        PINCH_OFF_FLOOR * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MollifierMode {
    /// The multiplier `exp(-eps |xi|^{3/2} / sqrt 2)`.
    Flat,
    /// The paradifferential operator with symbol `exp(-eps gamma^{(3/2)}(z, xi))`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    pub eps: f64,
    pub mode: MollifierMode,
}

/// `J_eps u`. In full mode the frequencies removed by the paraproduct
/// low-frequency cut are passed through unchanged, so `eps = 0` is the identity.
pub fn mollify(u: &RealField, eps: f64, eta: &RealField, mode: MollifierMode) -> Result<RealField> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter("mollifier strength must be nonnegative"));
    }
    if eps == 0.0 {
        return Ok(u.clone());
    }
    match mode {
        MollifierMode::Flat => Ok(u.apply_even(|xi| (-eps * xi.powf(1.5) / SQRT_2).exp())),
        MollifierMode::Full => {
            u.ensure_same_grid(eta)?;
            let cut = CutoffPair::default();
            let symbol = paradiff::mollifier_symbol(eta, eps)?;
            let high = paradiff::paraop_apply(&symbol, u, &cut)?;
            let low = u.apply_even(|xi| 1.0 - cut.phi(xi));
            Ok(&high + &low)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsOptions {
    pub solver: SolverOptions,
    /// 2/3-rule filter on the quadratic Bernoulli terms.
    pub dealias: bool,
    /// Smoothing of `eta - R` and `psi` after every step.
    pub smoothing: Option<Mollifier>,
    /// `J_eps` applied to both tendencies inside the right-hand side.
    pub rhs_mollifier: Option<Mollifier>,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self { solver: SolverOptions::default(), dealias: true, smoothing: None, rhs_mollifier: None }
    }
}

/// Time derivatives of a state, plus `G[eta] psi` of the full potential.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub eta_t: RealField,
    pub psi_t: RealField,
    pub slope_t: f64,
    pub dn: RealField,
}

pub fn rhs(state: &JetState, opts: &DynamicsOptions) -> Result<Tendency> {
    let eta = &state.eta;
    let min = eta.min();
    if !(min > state.floor()) {
        return Err(Error::NonpositiveRadius { min_radius: min });
    }
    let op = DnOperator::new(eta, &opts.solver)?;
    let g_periodic = op.dn(&state.psi)?;
    let eta_z = eta.derivative();
    let psi_z = state.psi.derivative();
    let s = state.slope;
    let n = eta.len();
    let mut dn = Vec::with_capacity(n);
    let mut quad = Vec::with_capacity(n);
    for j in 0..n {
        let ez = eta_z.values()[j];
        let pz = psi_z.values()[j] + s;
        let gp = g_periodic.values()[j];
        let g = gp - s * ez;
        // eta_z psi_z + G psi: the slope contributions cancel
        let num = ez * psi_z.values()[j] + gp;
        dn.push(g);
        quad.push(-0.5 * pz * pz + num * num / (2.0 * (1.0 + ez * ez)));
    }
    let grid = eta.grid();
    let dn = RealField::from_vec_unchecked(grid, dn);
    let mut quad = RealField::from_vec_unchecked(grid, quad);
    if opts.dealias {
        quad = quad.dealias();
    }
    let h = surface::mean_curvature(eta)?;
    let tension = h.map(|v| state.kappa * (v + 0.5 / state.radius));
    let mut psi_t = &quad + &tension;
    let mut eta_t = dn.clone();
    if let Some(m) = opts.rhs_mollifier {
        eta_t = mollify(&eta_t, m.eps, eta, m.mode)?;
        psi_t = mollify(&psi_t, m.eps, eta, m.mode)?;
    }
    Ok(Tendency { eta_t, psi_t, slope_t: state.gravity, dn })
}

fn stage(base: &JetState, k: &Tendency, h: f64) -> JetState {
    let mut next = base.clone();
    next.time = base.time + h;
    next.eta = base.eta.zip_map(&k.eta_t, |a, b| a + h * b).expect("same grid");
    next.psi = base.psi.zip_map(&k.psi_t, |a, b| a + h * b).expect("same grid");
    next.slope = base.slope + h * k.slope_t;
    next
}

fn reject(state: &JetState, err: Error) -> Error {
    match err {
        Error::NonpositiveRadius { min_radius } => Error::StepRejected { time: state.time, min_radius },
        other => other,
    }
}

/// One classical Runge-Kutta step. Also returns the first-stage tendency,
/// whose `dn` is `G[eta] psi` at the starting state.
pub fn step_rk4_with_tendency(state: &JetState, dt: f64, opts: &DynamicsOptions) -> Result<(JetState, Tendency)> {
    let k1 = rhs(state, opts).map_err(|e| reject(state, e))?;
    let s2 = stage(state, &k1, 0.5 * dt);
    let k2 = rhs(&s2, opts).map_err(|e| reject(state, e))?;
    let s3 = stage(state, &k2, 0.5 * dt);
    let k3 = rhs(&s3, opts).map_err(|e| reject(state, e))?;
    let s4 = stage(state, &k3, dt);
    let k4 = rhs(&s4, opts).map_err(|e| reject(state, e))?;
    let w = dt / 6.0;
    let combine = |f: &dyn Fn(&Tendency) -> &RealField, base: &RealField| {
        let (a, b, c, d) = (f(&k1).values(), f(&k2).values(), f(&k3).values(), f(&k4).values());
        let v = base
            .values()
            .iter()
            .enumerate()
            .map(|(j, &x)| x + w * (a[j] + 2.0 * (b[j] + c[j]) + d[j]))
            .collect();
        RealField::from_vec_unchecked(base.grid(), v)
    };
    let mut next = state.clone();
    next.time = state.time + dt;
    next.eta = combine(&|k| &k.eta_t, &state.eta);
    next.psi = combine(&|k| &k.psi_t, &state.psi);
    next.slope = state.slope + w * (k1.slope_t + 2.0 * (k2.slope_t + k3.slope_t) + k4.slope_t);
    if let Some(m) = opts.smoothing {
        let dev = (&next.eta - state.radius).clone();
        let dev = mollify(&dev, m.eps, &next.eta, m.mode)?;
        next.eta = &dev + state.radius;
        next.psi = mollify(&next.psi, m.eps, &state.eta, m.mode)?;
    }
    if !next.eta.is_finite() || !next.psi.is_finite() {
        return Err(Error::NonFinite);
    }
    let min = next.eta.min();
    if !(min > next.floor()) {
        return Err(Error::StepRejected { time: state.time, min_radius: min });
    }
    Ok((next, k1))
}

pub fn step_rk4(state: &JetState, dt: f64, opts: &DynamicsOptions) -> Result<JetState> {
    step_rk4_with_tendency(state, dt, opts).map(|(s, _)| s)
}

/// `dt = C sqrt(2/kappa) xi_max^{-3/2}`.
pub fn auto_dt(grid: &GridSpec, kappa: f64, cfl: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter("automatic time step needs positive surface tension"));
    }
    if !(cfl > 0.0) {
        return Err(Error::InvalidParameter("Courant factor must be positive"));
    }
    Ok(cfl * (2.0 / kappa).sqrt() * grid.max_wavenumber().powf(-1.5))
}

/// What to record at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSpec {
    pub sobolev_index: f64,
    pub tracked_modes: Vec<i64>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self { sobolev_index: 3.0, tracked_modes: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub time: f64,
    pub energy: f64,
    pub min_eta: f64,
    /// `H^s` norm of `eta - R`.
    pub eta_norm: f64,
    /// `H^s` norm of the periodic potential.
    pub psi_norm: f64,
    /// Cosine amplitudes of `eta` at the tracked modes.
    pub modes: Vec<f64>,
}

/// Diagnostics of `state`; `g` must be `G[eta] psi` for the periodic potential.
pub fn diagnostics(state: &JetState, g_periodic: &RealField, spec: &DiagnosticsSpec) -> Result<DiagnosticRow> {
    let energy = surface::hamiltonian_energy(state, g_periodic)?;
    let dev = &state.eta - state.radius;
    Ok(DiagnosticRow {
        time: state.time,
        energy,
        min_eta: state.eta.min(),
        eta_norm: dev.sobolev_norm(spec.sobolev_index),
        psi_norm: state.psi.sobolev_norm(spec.sobolev_index),
        modes: spec.tracked_modes.iter().map(|&k| state.eta.mode_amplitude(k).unwrap_or(f64::NAN)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Completed,
    /// The surface reached the floor during the step starting at `time`.
    PinchOff { time: f64, min_radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<JetState>,
    pub diagnostics: Vec<DiagnosticRow>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn last(&self) -> &JetState {
        self.snapshots.last().expect("a trajectory holds at least its initial state")
    }
}

/// A fully resolved run: every choice made, nothing left to defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub initial: JetState,
    pub dt: f64,
    pub end_time: f64,
    /// Keep a snapshot every this many steps (the final state is always kept).
    pub save_every: usize,
    pub options: DynamicsOptions,
    pub diagnostics: DiagnosticsSpec,
}

/// Integrates from `spec.initial` to `spec.end_time` with steps of `spec.dt`.
///
/// Time advances by repeated addition of `dt`, and snapshots are kept when the
/// step index `round(t/dt)` is a multiple of `save_every`, so a run restarted
/// from any saved snapshot reproduces the original bit for bit.
pub fn run(spec: &RunSpec) -> Result<Trajectory> {
    if !(spec.dt > 0.0) || !spec.dt.is_finite() {
        return Err(Error::InvalidParameter("time step must be positive"));
    }
    if !(spec.end_time >= spec.initial.time) {
        return Err(Error::InvalidParameter("end time precedes the initial time"));
    }
    if spec.save_every == 0 {
        return Err(Error::InvalidParameter("save cadence must be at least one step"));
    }
    let mut state = spec.initial.clone();
    let mut snapshots = alloc::vec![state.clone()];
    let mut rows = Vec::new();
    let mut outcome = Outcome::Completed;
    while state.time + 0.5 * spec.dt < spec.end_time {
        match step_rk4_with_tendency(&state, spec.dt, &spec.options) {
            Ok((next, k1)) => {
                let g_periodic = periodic_dn(&state, &k1);
                rows.push(diagnostics(&state, &g_periodic, &spec.diagnostics)?);
                state = next;
                let index = (state.time / spec.dt).round() as u64;
                if index % spec.save_every as u64 == 0 {
                    snapshots.push(state.clone());
                }
            }
            Err(Error::StepRejected { time, min_radius }) => {
                outcome = Outcome::PinchOff { time, min_radius };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if snapshots.last().map(|s| s.time) != Some(state.time) {
        snapshots.push(state.clone());
    }
    if outcome == Outcome::Completed {
        let g = DnOperator::new(&state.eta, &spec.options.solver)?.dn(&state.psi)?;
        rows.push(diagnostics(&state, &g, &spec.diagnostics)?);
    }
    Ok(Trajectory { snapshots, diagnostics: rows, outcome })
}

// k1.dn is G of the full potential; undo the slope part for the periodic energy
fn periodic_dn(state: &JetState, k1: &Tendency) -> RealField {
    if state.slope == 0.0 {
        return k1.dn.clone();
    }
    let eta_z = state.eta.derivative();
    k1.dn.zip_map(&eta_z, |g, ez| g + state.slope * ez).expect("same grid")
}

/// Maps a `g = 0` trajectory to the solution under gravity `g`:
/// `eta^g(t, z) = eta(t, z - g t^2/2)` and
/// `psi^g(t, z) = psi(t, z - g t^2/2) + g t z - g^2 t^3 / 6`.
///
/// Shifts are spectral. The affine term becomes the slope `g t`; the constant
/// joins the periodic part. Diagnostics are not carried over.
pub fn gravity_transform(traj: &Trajectory, g: f64) -> Trajectory {
    let snapshots = traj
        .snapshots
        .iter()
        .map(|s| {
            let t = s.time;
            let shift = 0.5 * g * t * t;
            let mut out = s.clone();
            out.eta = s.eta.translate(shift);
            out.psi = &s.psi.translate(shift) - g * g * t * t * t / 6.0;
            out.gravity = s.gravity + g;
            out.slope = s.slope + g * t;
            out
        })
        .collect();
    Trajectory { snapshots, diagnostics: Vec::new(), outcome: traj.outcome }
}
