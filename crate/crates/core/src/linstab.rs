//! Rayleigh-Plateau linear stability of the cylinder `(R, 0)`.
//!
//! Linearizing the evolution at the cylinder gives, per Fourier mode,
//! `eta_t = m(xi) psi` and `psi_t = kappa (1/(2R^2) - xi^2/2) eta`, so
//!
//! ```text
//! sigma^2(xi) = kappa m(xi) (1/(2R^2) - xi^2/2),   m(xi) = xi I1(R xi)/I0(R xi).
//! ```
//!
//! This uses the half-curvature convention `H(R) = -1/(2R)`. The textbook
//! Rayleigh form (with `gamma/rho` for the tension and the full curvature) is
//!
//! ```text
//! sigma^2 = (gamma / (rho R^3)) x I1(x)/I0(x) (1 - x^2),   x = xi R,
//! ```
//!
//! which is the same curve up to the constant `kappa = 2 gamma / rho`; the
//! maximizer `x* ~ 0.697` is shared.

#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dno::flat_multiplier;
use crate::dynamics::{self, DynamicsOptions, JetState, Trajectory};
use crate::grid::{GridSpec, RealField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSample {
    pub xi: f64,
    pub sigma2: f64,
    /// `sqrt(sigma2)` when nonnegative, `i sqrt(-sigma2)` otherwise.
    pub sigma: Complex64,
}

pub fn growth_rate(radius: f64, kappa: f64, xi: f64) -> DispersionSample {
    let sigma2 = kappa * flat_multiplier(radius, xi) * (0.5 / (radius * radius) - 0.5 * xi * xi);
    let sigma = if sigma2 >= 0.0 { Complex64::new(sigma2.sqrt(), 0.0) } else { Complex64::new(0.0, (-sigma2).sqrt()) };
    DispersionSample { xi, sigma2, sigma }
}

/// Golden-section maximization of `sigma^2` over `(0, 1/R)`; returns `(xi*, sigma*)`.
pub fn most_unstable(radius: f64, kappa: f64) -> (f64, f64) {
    // work in x = xi R so the stopping rule is scale free
    let f = |x: f64| growth_rate(1.0, 1.0, x).sigma2;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let xi = 0.5 * (a + b) / radius;
    (xi, growth_rate(radius, kappa, xi).sigma2.max(0.0).sqrt())
}

/// Samples needed inside the fit window.
pub const MIN_WINDOW: usize = 10;

/// Exponential rate of the mode-`k` amplitude of `eta` along a trajectory.
///
/// The fit is the least-squares slope of `log |eta_k|` over the snapshots with
/// `10 a0 <= |eta_k| <= 1e-2 R`, `a0` being the initial amplitude. When the
/// amplitude never leaves `[0, 10 a0)` (stable or neutral modes) the slope is
/// fitted to the local maxima of the amplitude instead, or to all samples if
/// there are fewer than two maxima.
pub fn measure_growth(traj: &Trajectory, k: i64) -> Result<f64> {
    let first = traj.snapshots.first().ok_or(Error::WindowTooShort { samples: 0 })?;
    let radius = first.radius();
    let series: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| Ok((s.time(), s.eta().mode_amplitude(k).ok_or(Error::InvalidParameter("mode not resolved"))?)))
        .collect::<Result<_>>()?;
    let a0 = series[0].1;
    let window: Vec<(f64, f64)> =
        series.iter().copied().filter(|&(_, a)| a >= 10.0 * a0 && a <= 1e-2 * radius).collect();
    if window.len() >= MIN_WINDOW {
        return Ok(log_slope(&window));
    }
    let grew = series.iter().any(|&(_, a)| a >= 10.0 * a0);
    if grew || series.len() < MIN_WINDOW || a0 == 0.0 {
        return Err(Error::WindowTooShort { samples: window.len() });
    }
    let peaks: Vec<(f64, f64)> =
        series.windows(3).filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1).map(|w| w[1]).collect();
    if peaks.len() >= 2 {
        Ok(log_slope(&peaks))
    } else {
        Ok(log_slope(&series))
    }
}

fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, a) in points {
        sxy += (t - tm) * (a.ln() - ym);
        sxx += (t - tm) * (t - tm);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub size: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.size + col]
    }
}

/// Central-difference Jacobian of the right-hand side at the cylinder, acting
/// on the stacked unknowns `(eta_0..eta_{N-1}, psi_0..psi_{N-1})`.
pub fn rhs_jacobian(grid: &GridSpec, radius: f64, kappa: f64, h: f64, opts: &DynamicsOptions) -> Result<DenseMatrix> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("difference step must be positive"));
    }
    let n = grid.len();
    let size = 2 * n;
    let mut data = vec![0.0; size * size];
    let eval = |col: usize, delta: f64| -> Result<Vec<f64>> {
        let mut eta = vec![radius; n];
        let mut psi = vec![0.0; n];
        if col < n {
            eta[col] += delta;
        } else {
            psi[col - n] += delta;
        }
        let state = JetState::new(RealField::new(grid, eta)?, RealField::new(grid, psi)?, radius, kappa)?;
        let t = dynamics::rhs(&state, opts)?;
        let mut out = t.eta_t.into_values();
        out.extend_from_slice(t.psi_t.values());
        Ok(out)
    };
    for col in 0..size {
        let plus = eval(col, h)?;
        let minus = eval(col, -h)?;
        for row in 0..size {
            data[row * size + col] = (plus[row] - minus[row]) / (2.0 * h);
        }
    }
    Ok(DenseMatrix { size, data })
}
