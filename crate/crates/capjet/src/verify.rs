//! Invariant suites behind `capjet verify`.
//!
//! Each suite runs a fixed experiment and returns one [`Check`] per gated
//! quantity. The parameters are the ones the acceptance tests use.

use std::f64::consts::PI;
use std::fmt::Write as _;

use capjet_core::bessel::BesselEval;
use capjet_core::dno::{self, SolverOptions};
use capjet_core::dynamics::{self, DynamicsOptions, JetState, RunSpec, DEFAULT_CFL};
use capjet_core::linstab;
use capjet_core::paradiff::{self, CutoffPair, SeparableSymbol};
use capjet_core::quadrature::GaussLegendre;
use capjet_core::{Complex64, GridSpec, RealField, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen;
use crate::error::{CliError, Result};
use crate::output::{Cell, CsvTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(suite: &'static str, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { suite, name: name.into(), measured, relation: Relation::AtMost, bound, passed: measured <= bound }
    }

    pub fn at_least(suite: &'static str, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { suite, name: name.into(), measured, relation: Relation::AtLeast, bound, passed: measured >= bound }
    }
}

pub const SUITES: [&str; 9] = ["bessel", "dno", "shape", "energy", "dispersion", "jacobian", "gravity", "paradiff", "paralin"];

pub fn run_suite(name: &str) -> Result<Vec<Check>> {
    match name {
        "bessel" => Ok(bessel()),
        "dno" => dno(),
        "shape" => shape(),
        "energy" => energy(),
        "dispersion" => dispersion(),
        "jacobian" => jacobian(),
        "gravity" => gravity(),
        "paradiff" => paradiff(),
        "paralin" => paralin(),
        "all" => {
            let mut all = Vec::new();
            for s in SUITES {
                all.extend(run_suite(s)?);
            }
            Ok(all)
        }
        other => Err(CliError::config(format!("unknown suite {other:?}; expected one of {SUITES:?} or \"all\""))),
    }
}

pub fn table(checks: &[Check]) -> CsvTable {
    let mut t = CsvTable::new(&["suite", "check", "measured", "relation", "bound", "status"]);
    for c in checks {
        t.push(vec![
            c.suite.into(),
            c.name.clone().into(),
            c.measured.into(),
            c.relation.symbol().into(),
            c.bound.into(),
            Cell::from(c.passed),
        ]);
    }
    t
}

pub fn text(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.suite.len() + c.name.len() + 1).max().unwrap_or(0);
    let mut s = String::new();
    for c in checks {
        let label = format!("{}/{}", c.suite, c.name);
        let status = if c.passed { "PASS" } else { "FAIL" };
        writeln!(s, "{status}  {label:<width$}  {:<12.4e} {} {:.1e}", c.measured, c.relation.symbol(), c.bound).unwrap();
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(s, "{} checks, {failed} failed", checks.len()).unwrap();
    s
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub const BESSEL_K: [u32; 5] = [0, 1, 2, 3, 4];
pub const BESSEL_X: [f64; 9] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 500.0];

pub fn bessel_y() -> Vec<f64> {
    (1..=20).map(|j| j as f64 * 0.05).collect()
}

/// `int_0^1 ratio_i0k(k, y, x)^2 dy` and an error estimate from two rule orders.
///
/// The integrand concentrates in a layer of width `1/x` at `y = 1`, so the
/// panels halve towards it.
pub fn bessel_y_integral(ev: &BesselEval, k: u32, x: f64) -> (f64, f64) {
    let levels = (x.max(1.0).log2().ceil() as i32 + 6).max(6);
    let mut breaks = vec![0.0];
    breaks.extend((1..=levels).map(|j| 1.0 - 0.5f64.powi(j)));
    breaks.push(1.0);
    let f = |y: f64| ev.ratio_i0k(k, y, x).powi(2);
    let coarse = GaussLegendre::new(20).integrate_panels(&breaks, f);
    let fine = GaussLegendre::new(30).integrate_panels(&breaks, f);
    (fine, (fine - coarse).abs())
}

fn bessel() -> Vec<Check> {
    const S: &str = "bessel";
    let ev = BesselEval::default();
    let mut excess = f64::NEG_INFINITY;
    let (mut first, mut second, mut err) = (0.0f64, 0.0f64, 0.0f64);
    for &k in &BESSEL_K {
        for &x in &BESSEL_X {
            let ln_i0 = ev.ln_i0(x);
            for y in bessel_y() {
                let r = ev.ratio_i0k(k, y, x);
                excess = excess.max(2.0 * r.abs().ln() + 2.0 * (1.0 - y) * ln_i0);
            }
            let (j, e) = bessel_y_integral(&ev, k, x);
            first = first.max(j);
            second = second.max(x * j);
            err = err.max(e);
        }
    }
    vec![
        Check::at_most(S, "pointwise log excess 2ln|r|+2(1-y)ln I0(x)", excess, 1e-12),
        Check::at_most(S, "max int |r|^2 dy", first, 1.0),
        Check::at_most(S, "max x int |r|^2 dy", second, 3.0),
        Check::at_most(S, "y-quadrature error estimate", err, 1e-10),
    ]
}

fn flat_discrepancy(cells: usize) -> Result<f64> {
    let g = GridSpec::new(PI, 128)?;
    let psi = RealField::from_fn(&g, |z| z.sin() + 0.3 * (3.0 * z).cos());
    let eta = RealField::constant(&g, 1.0);
    let num = dno::dn_general(&eta, &psi, &SolverOptions::with_cells(cells, 1e-10))?;
    let exact = dno::dn_flat(1.0, &psi);
    Ok((&num - &exact).l2() / exact.l2())
}

fn dno() -> Result<Vec<Check>> {
    const S: &str = "dno";
    let e1 = flat_discrepancy(256)?;
    let e2 = flat_discrepancy(512)?;
    Ok(vec![
        Check::at_most(S, "flat oracle discrepancy M=256", e1, 5e-6),
        Check::at_least(S, "discrepancy ratio M=256/M=512", e1 / e2, 3.5),
    ])
}

/// Relative mismatches of the difference quotients at `eps = 1e-2, 1e-3, 1e-4`
/// and of their Richardson extrapolation.
pub fn shape_mismatches() -> Result<([f64; 3], f64)> {
    let g = GridSpec::new(PI, 64)?;
    let eta = RealField::from_fn(&g, |z| 1.0 + 0.1 * z.cos());
    let psi = RealField::from_fn(&g, |z| z.sin());
    let h = RealField::from_fn(&g, |z| (2.0 * z).cos());
    let opts = SolverOptions::with_cells(256, 1e-14);
    let formula = dno::shape_derivative(&eta, &psi, &h, &opts)?;
    let g0 = dno::dn_general(&eta, &psi, &opts)?;
    let norm = formula.l2();
    let mut quotients = Vec::new();
    let mut mism = [0.0; 3];
    for (i, eps) in [1e-2, 1e-3, 1e-4].into_iter().enumerate() {
        let ge = dno::dn_general(&(&eta + &h.scale(eps)), &psi, &opts)?;
        let d = (&ge - &g0).scale(1.0 / eps);
        mism[i] = (&d - &formula).l2() / norm;
        quotients.push(d);
    }
    let extrapolated = (&quotients[2].scale(10.0) - &quotients[1]).scale(1.0 / 9.0);
    Ok((mism, (&extrapolated - &formula).l2() / norm))
}

fn shape() -> Result<Vec<Check>> {
    const S: &str = "shape";
    let (m, ext) = shape_mismatches()?;
    let order = (m[0] / m[1]).log10().min((m[1] / m[2]).log10());
    Ok(vec![
        Check::at_least(S, "observed order in eps", order, 0.9),
        Check::at_most(S, "extrapolated relative mismatch", ext, 1e-4),
    ])
}

/// `R = kappa = 1`, `eta = 1 + amplitude cos(k z)` on `[-L, L]`, `psi = 0`.
pub fn mode_state(half_period: f64, points: usize, k: i64, amplitude: f64) -> Result<JetState> {
    let g = GridSpec::new(half_period, points)?;
    let xi = g.fundamental() * k as f64;
    let eta = RealField::from_fn(&g, |z| 1.0 + amplitude * (xi * z).cos());
    Ok(JetState::new(eta, RealField::zeros(&g), 1.0, 1.0)?)
}

/// Largest step no bigger than `dt` that divides `horizon`.
pub fn fit_step(dt: f64, horizon: f64) -> f64 {
    horizon / (horizon / dt).ceil()
}

fn solver_opts(cells: usize) -> DynamicsOptions {
    DynamicsOptions { solver: SolverOptions::with_cells(cells, 1e-13), ..Default::default() }
}

/// Maximum relative energy drift over ten linear periods of the stable mode `kR = 2`.
pub fn energy_drift(dt_divisor: f64) -> Result<f64> {
    let initial = mode_state(PI, 16, 2, 1e-3)?;
    let period = 2.0 * PI / linstab::growth_rate(1.0, 1.0, 2.0).sigma.im;
    let horizon = 10.0 * period;
    let dt0 = dynamics::auto_dt(initial.grid(), 1.0, DEFAULT_CFL)? / dt_divisor;
    let spec = RunSpec {
        initial,
        dt: fit_step(dt0, horizon),
        end_time: horizon,
        save_every: usize::MAX,
        options: solver_opts(64),
        diagnostics: Default::default(),
    };
    let traj = dynamics::run(&spec)?;
    let e0 = traj.diagnostics[0].energy;
    Ok(traj.diagnostics.iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max) / e0.abs())
}

fn energy() -> Result<Vec<Check>> {
    const S: &str = "energy";
    let d1 = energy_drift(1.0)?;
    let d2 = energy_drift(2.0)?;
    Ok(vec![
        Check::at_most(S, "relative drift, auto dt", d1, 1e-6),
        Check::at_least(S, "drift reduction when dt halves", d1 / d2, 10.0),
    ])
}

/// Measured growth of mode 1 for `R = kappa = 1`, `L = pi/kR`, `a0 = 1e-4`.
pub fn measured_growth(kr: f64, horizon: Option<f64>) -> Result<(f64, f64)> {
    let initial = mode_state(PI / kr, 16, 1, 1e-4)?;
    let sigma = linstab::growth_rate(1.0, 1.0, kr).sigma.re;
    let dt = dynamics::auto_dt(initial.grid(), 1.0, DEFAULT_CFL)?;
    let end_time = horizon.unwrap_or(400f64.ln() / sigma + 2.0 * dt);
    let spec = RunSpec {
        initial,
        dt,
        end_time,
        save_every: 1,
        options: DynamicsOptions { solver: SolverOptions::with_cells(64, 1e-12), ..Default::default() },
        diagnostics: Default::default(),
    };
    let traj = dynamics::run(&spec)?;
    Ok((linstab::measure_growth(&traj, 1)?, sigma))
}

/// Brute-force maximizer of `x (1 - x^2) I1(x)/I0(x)` on a `1e-5` lattice.
pub fn brute_force_x_star() -> f64 {
    let ev = BesselEval::default();
    let mut best = (0.0, f64::NEG_INFINITY);
    for j in 1..100_000 {
        let x = j as f64 * 1e-5;
        let f = x * (1.0 - x * x) * ev.ratio_i1_i0(x);
        if f > best.1 {
            best = (x, f);
        }
    }
    best.0
}

fn dispersion() -> Result<Vec<Check>> {
    const S: &str = "dispersion";
    let mut out = Vec::new();
    for kr in [0.3, 0.5, 0.7, 0.9] {
        let (measured, sigma) = measured_growth(kr, None)?;
        out.push(Check::at_most(S, format!("growth rate error kR={kr}"), (measured / sigma - 1.0).abs(), 0.02));
    }
    let (_, sigma_star) = linstab::most_unstable(1.0, 1.0);
    let (neutral, _) = measured_growth(1.0, Some(20.0))?;
    out.push(Check::at_most(S, "neutral kR=1 |fit|/sigma*", neutral.abs() / sigma_star, 1e-2));
    let (xi_star, _) = linstab::most_unstable(1.0, 1.0);
    out.push(Check::at_most(S, "x* vs brute force", (xi_star - brute_force_x_star()).abs(), 0.005));
    Ok(out)
}

/// Absolute tolerance for the modes with `sigma = 0` (`k = 0` and `|xi| R = 1`).
///
/// Both are nilpotent Jordan blocks of the linearization, so a perturbation
/// of size `delta` in the finite-difference Jacobian moves their eigenvalues by
/// about `sqrt(delta)`; a relative tolerance is meaningless there.
pub const NEUTRAL_EIGEN_TOL: f64 = 1e-4;

fn jacobian() -> Result<Vec<Check>> {
    const S: &str = "jacobian";
    let g = GridSpec::new(PI, 64)?;
    let opts = DynamicsOptions { solver: SolverOptions::with_cells(4096, 1e-13), ..Default::default() };
    let matches = eigen::jacobian_spectrum_check(&g, 1.0, 1.0, 1e-5, &opts, 8.0)?;
    let (mut rel, mut abs) = (0.0f64, 0.0f64);
    for m in &matches {
        if m.expected.norm() == 0.0 {
            abs = abs.max(m.error);
        } else {
            rel = rel.max(m.error);
        }
    }
    Ok(vec![
        Check::at_most(S, "max relative eigenvalue error, |xi|R<=8", rel, 1e-6),
        Check::at_most(S, "max absolute error on neutral modes", abs, NEUTRAL_EIGEN_TOL),
    ])
}

/// Sup-norm gap between a direct `g = 0.5` run and the transformed `g = 0` run.
pub fn gravity_gap() -> Result<f64> {
    let initial = mode_state(PI / 2.0, 16, 1, 1e-3)?;
    let period = 2.0 * PI / linstab::growth_rate(1.0, 1.0, 2.0).sigma.im;
    let dt = fit_step(dynamics::auto_dt(initial.grid(), 1.0, DEFAULT_CFL)?, period);
    let base = RunSpec {
        initial,
        dt,
        end_time: period,
        save_every: 10,
        options: solver_opts(64),
        diagnostics: Default::default(),
    };
    let plain = dynamics::run(&base)?;
    let mut direct_spec = base.clone();
    direct_spec.initial = direct_spec.initial.with_gravity(0.5);
    let direct = dynamics::run(&direct_spec)?;
    let mapped = dynamics::gravity_transform(&plain, 0.5);
    let mut worst = 0.0f64;
    for (a, b) in direct.snapshots.iter().zip(&mapped.snapshots) {
        worst = worst.max((a.eta() - b.eta()).sup());
    }
    Ok(worst)
}

fn gravity() -> Result<Vec<Check>> {
    Ok(vec![Check::at_most("gravity", "sup |eta_direct - eta_mapped| / R", gravity_gap()?, 1e-6)])
}

/// The symbol zoo at `eta`: `(name, symbol)` for lambda, ell, p, q, gamma and `J_eps`.
pub fn symbol_zoo(eta: &RealField, radius: f64, eps: f64) -> Result<Vec<(&'static str, SeparableSymbol)>> {
    let sym = paradiff::symmetrizer_symbols(eta, radius)?;
    Ok(vec![
        ("lambda", paradiff::symbol_lambda(eta)?),
        ("ell", paradiff::symbol_ell(eta)?.0),
        ("p", sym.p),
        ("q", sym.q),
        ("gamma", sym.gamma),
        ("J_eps", paradiff::mollifier_symbol(eta, eps)?),
    ])
}

pub const ORDER_PROBES: [f64; 5] = [4.0, 8.0, 16.0, 32.0, 64.0];

/// Fitted exponent of `|T_a u_K| / |u_K|` against `1 + K`.
pub fn fitted_order(a: &SeparableSymbol, cut: &CutoffPair) -> Result<f64> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in ORDER_PROBES {
        let u = paradiff::wave_packet(a.grid(), k, 0.5);
        xs.push((1.0 + k).ln());
        ys.push((paradiff::paraop_apply(a, &u, cut)?.l2() / u.l2()).ln());
    }
    Ok(fit_slope(&xs, &ys))
}

fn paradiff() -> Result<Vec<Check>> {
    const S: &str = "paradiff";
    let g = GridSpec::new(PI, 256)?;
    let eta = RealField::from_fn(&g, |z| 1.0 + 0.1 * z.cos());
    let cut = CutoffPair::default();
    let zoo = symbol_zoo(&eta, 1.0, 1e-4)?;
    let constant = RealField::constant(&g, 1.7);
    let mut out = Vec::new();
    let (mut annihilate, mut reality) = (0.0f64, 0.0f64);
    for (_, a) in &zoo {
        annihilate = annihilate.max(paradiff::paraop_apply(a, &constant, &cut)?.sup());
        reality = reality.max(a.reality_defect());
    }
    out.push(Check::at_most(S, "sup |T_a c| over the symbol zoo", annihilate, 1e-12));
    out.push(Check::at_most(S, "symbol reality defect", reality, 1e-12));
    let f = RealField::from_fn(&g, |z| z.sin().exp() + (7.0 * z).cos() + 0.5 * (40.0 * z).sin());
    let c = SeparableSymbol::function(&RealField::constant(&g, 2.5));
    let lhs = paradiff::paraop_apply(&c, &f, &cut)?;
    let rhs = f.apply_even(|xi| 2.5 * cut.phi(xi));
    out.push(Check::at_most(S, "T_c f - c phi(D) f", (&lhs - &rhs).sup() / f.sup(), 1e-12));
    for (name, a) in &zoo {
        let fit = fitted_order(a, &cut)?;
        out.push(Check::at_most(S, format!("order of {name} (declared {})", a.order()), (fit - a.order()).abs(), 0.2));
    }
    let flat = RealField::constant(&g, 1.0);
    let mut prev = None;
    for k in [8.0, 16.0, 32.0] {
        let (r1, _) = paradiff::symmetrizer_residual(&flat, 1.0, &cut, k)?;
        let ratio = r1 / k.powf(1.5);
        if let Some(p) = prev {
            out.push(Check::at_least(S, format!("r1/K^1.5 decrease {}->{k}", k / 2.0), p / ratio, 2.0));
        }
        prev = Some(ratio);
    }
    Ok(out)
}

/// `psi` with `|psi_k| = <xi_k>^{-decay}` and seeded random phases.
pub fn algebraic_psi(grid: &GridSpec, decay: f64, seed: u64) -> Result<RealField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len() as i64;
    let mut c = vec![Complex64::new(0.0, 0.0); grid.len()];
    for k in 1..n / 2 {
        let xi = grid.fundamental() * k as f64;
        let z = Complex64::from_polar((1.0 + xi * xi).powf(-decay / 2.0), rng.gen_range(0.0..2.0 * PI));
        c[grid.slot(k).expect("resolved")] = z;
        c[grid.slot(-k).expect("resolved")] = z.conj();
    }
    Ok(SpectralField::new(grid, c)?.to_real())
}

/// Fitted `log |u_k|` against `log xi_k` over `8 <= xi_k <= 32`.
pub fn tail_slope(u: &RealField) -> f64 {
    let s = u.to_spectral();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let half = (u.len() / 2) as i64;
    for k in 1..half {
        let xi = u.grid().fundamental() * k as f64;
        if (8.0..=32.0).contains(&xi) {
            xs.push(xi.ln());
            ys.push(s.coeff(k).expect("resolved").norm().ln());
        }
    }
    fit_slope(&xs, &ys)
}

fn paralin() -> Result<Vec<Check>> {
    const S: &str = "paralin";
    let g = GridSpec::new(PI, 128)?;
    let opts = SolverOptions::with_cells(1024, 1e-13);
    let cut = CutoffPair::default();
    let psi = algebraic_psi(&g, 4.0, 0)?;
    let eta = RealField::from_fn(&g, |z| 1.0 + 0.05 * z.cos());
    let gval = dno::dn_general(&eta, &psi, &opts)?;
    let resid = paradiff::paralin_residual_with(&eta, &psi, &gval, &cut)?;
    let gain = tail_slope(&gval) - tail_slope(&resid);
    let flat = RealField::constant(&g, 1.0);
    let gflat = dno::dn_general(&flat, &psi, &opts)?;
    let rflat = paradiff::paralin_residual_with(&flat, &psi, &gflat, &cut)?.to_spectral();
    let ps = psi.to_spectral();
    let mut worst = 0.0f64;
    for k in 1..(g.len() / 2) as i64 {
        let xi = g.fundamental() * k as f64;
        if xi >= 20.0 {
            let bound = 2.0 / xi * ps.coeff(k).expect("resolved").norm();
            worst = worst.max(rflat.coeff(k).expect("resolved").norm() / bound);
        }
    }
    Ok(vec![
        Check::at_least(S, "tail exponent gain of R_G over G", gain, 1.0),
        Check::at_most(S, "flat |R_G| / (2|psi|/(R^2|xi|)), R|xi|>=20", worst, 1.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_suite_passes() {
        let checks = run_suite("bessel").unwrap();
        assert!(checks.iter().all(|c| c.passed), "{}", text(&checks));
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        assert!(matches!(run_suite("nope"), Err(CliError::Config(_))));
    }

    #[test]
    fn relations() {
        assert!(Check::at_most("s", "n", 1.0, 1.0).passed);
        assert!(!Check::at_least("s", "n", 0.5, 1.0).passed);
        assert!(!Check::at_most("s", "n", f64::NAN, 1.0).passed);
        let t = table(&[Check::at_least("s", "a, b", 2.0, 1.0)]).render();
        assert!(t.contains("s,\"a, b\",2,>=,1,pass"));
    }

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = (1..10).map(|i| (i as f64).ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -3.0 * x + 0.7).collect();
        assert!((fit_slope(&xs, &ys) + 3.0).abs() < 1e-12);
        assert_eq!(fit_step(0.3, 1.0), 0.25);
    }
}
