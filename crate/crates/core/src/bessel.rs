//! Modified Bessel functions `I0`, `I1`, the derivative family `I0^(k)`, and
//! the ratios behind the cylindrical Dirichlet-Neumann multiplier.
//!
//! Below the crossover `x_c` (default 20) `I0` and `I1` are summed from their
//! power series; above it the exponentially scaled forms `e^{-|x|} I_nu(x)`
//! come from the Hankel asymptotic expansion. Derivatives of order `k >= 2`
//! use `I0^(k)(x) = (1/pi) int_0^pi e^{x cos t} cos^k t dt`.
//!
//! Everything on the multiplier path goes through scaled evaluations, so the
//! ratios are total on finite input.

#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

pub const DEFAULT_CROSSOVER: f64 = 20.0;

/// Largest `|x|` accepted by the unscaled evaluations.
pub const OVERFLOW_GUARD: f64 = 700.0;

/// Highest derivative order supported by [`BesselEval::i0_deriv`].
pub const MAX_DERIV_ORDER: u32 = 6;

const QUADRATURE_NODES: usize = 64;

#[derive(Debug, Clone)]
pub struct BesselEval {
    crossover: f64,
    rule: GaussLegendre,
}

impl Default for BesselEval {
    fn default() -> Self {
        Self::new(DEFAULT_CROSSOVER)
    }
}

impl BesselEval {
    pub fn new(crossover: f64) -> Self {
        Self { crossover, rule: GaussLegendre::new(QUADRATURE_NODES) }
    }

    pub fn crossover(&self) -> f64 {
        self.crossover
    }

    /// `e^{-|x|} I0(x)`.
    pub fn i0_scaled(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax < self.crossover {
            series_i0(ax) * (-ax).exp()
        } else {
            hankel_scaled(0.0, ax)
        }
    }

    /// `e^{-|x|} I1(x)`, odd in `x`.
    pub fn i1_scaled(&self, x: f64) -> f64 {
        let ax = x.abs();
        let v = if ax < self.crossover { series_i1(ax) * (-ax).exp() } else { hankel_scaled(1.0, ax) };
        v.copysign(x)
    }

    pub fn i0(&self, x: f64) -> Result<f64> {
        guard(x)?;
        let ax = x.abs();
        Ok(if ax < self.crossover { series_i0(ax) } else { hankel_scaled(0.0, ax) * ax.exp() })
    }

    pub fn i1(&self, x: f64) -> Result<f64> {
        guard(x)?;
        let ax = x.abs();
        let v = if ax < self.crossover { series_i1(ax) } else { hankel_scaled(1.0, ax) * ax.exp() };
        Ok(v.copysign(x))
    }

    /// `ln I0(x)`, finite for every finite `x`.
    pub fn ln_i0(&self, x: f64) -> f64 {
        x.abs() + self.i0_scaled(x).ln()
    }

    /// `e^{-|x|} I0^(k)(x)` for `k <= 6`.
    pub fn i0_deriv_scaled(&self, k: u32, x: f64) -> f64 {
        assert!(k <= MAX_DERIV_ORDER, "derivative order {k} exceeds {MAX_DERIV_ORDER}");
        match k {
            0 => self.i0_scaled(x),
            1 => self.i1_scaled(x),
            _ => {
                let ax = x.abs();
                let breaks = panel_breaks(ax);
                let v = self.rule.integrate_panels(&breaks, |t| {
                    let c = t.cos();
                    // e^{|x|(cos t - 1)} with cos t - 1 = -2 sin^2(t/2) to avoid cancellation
                    let s = (0.5 * t).sin();
                    (-2.0 * ax * s * s).exp() * c.powi(k as i32)
                }) / PI;
                if k % 2 == 1 && x < 0.0 {
                    -v
                } else {
                    v
                }
            }
        }
    }

    pub fn i0_deriv(&self, k: u32, x: f64) -> Result<f64> {
        guard(x)?;
        match k {
            0 => self.i0(x),
            1 => self.i1(x),
            _ => Ok(self.i0_deriv_scaled(k, x) * x.abs().exp()),
        }
    }

    /// `I1(x) / I0(x)`: odd, increasing, in `(-1, 1)`.
    pub fn ratio_i1_i0(&self, x: f64) -> f64 {
        let ax = x.abs();
        let r = if ax < self.crossover {
            series_i1(ax) / series_i0(ax)
        } else {
            hankel_scaled(1.0, ax) / hankel_scaled(0.0, ax)
        };
        r.copysign(x)
    }

    /// `I0^(k)(y x) / I0(x)` for `y in [0, 1]`, evaluated from scaled pieces.
    pub fn ratio_i0k(&self, k: u32, y: f64, x: f64) -> f64 {
        if k == 0 && y == 1.0 {
            return 1.0;
        }
        let ax = x.abs();
        let num = self.i0_deriv_scaled(k, y * x);
        let den = self.i0_scaled(x);
        (-(ax - (y * x).abs())).exp() * num / den
    }
}

fn guard(x: f64) -> Result<()> {
    if x.abs() > OVERFLOW_GUARD {
        Err(Error::Overflow { argument: x })
    } else {
        Ok(())
    }
}

/// `sum (x^2/4)^j / (j!)^2`, stopped once a term drops below `1e-17` of the sum.
fn series_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = 1.0;
    while term > 1e-17 * sum {
        term *= q / (j * j);
        sum += term;
        j += 1.0;
    }
    sum
}

fn series_i1(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    let mut j = 1.0;
    while term > 1e-17 * sum {
        term *= q / (j * (j + 1.0));
        sum += term;
        j += 1.0;
    }
    sum
}

/// `e^{-x} I_nu(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k(nu) / x^k` for `x > 0`,
/// truncated at the smallest term.
fn hankel_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0f64;
    let mut sum = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

/// Panels for the derivative integral: one panel for small `x`, otherwise
/// geometrically graded towards `t = 0` where `e^{x (cos t - 1)}` has width
/// `x^{-1/2}`.
fn panel_breaks(x: f64) -> Vec<f64> {
    if x <= 16.0 {
        return vec![0.0, PI];
    }
    let width = 1.0 / x.sqrt();
    let mut breaks = vec![PI];
    let mut t = PI;
    while t > 0.5 * width {
        t *= 0.5;
        breaks.push(t);
    }
    breaks.push(0.0);
    breaks.reverse();
    breaks
}

/// `I0(x)` with the default evaluator.
pub fn i0(x: f64) -> Result<f64> {
    BesselEval::default().i0(x)
}

pub fn i1(x: f64) -> Result<f64> {
    BesselEval::default().i1(x)
}

pub fn i0_deriv(k: u32, x: f64) -> Result<f64> {
    BesselEval::default().i0_deriv(k, x)
}

/// `I1(x)/I0(x)`; does not build a quadrature rule, so it is cheap to call per mode.
pub fn ratio_i1_i0(x: f64) -> f64 {
    let ax = x.abs();
    let r = if ax < DEFAULT_CROSSOVER {
        series_i1(ax) / series_i0(ax)
    } else {
        hankel_scaled(1.0, ax) / hankel_scaled(0.0, ax)
    };
    r.copysign(x)
}

/// `I0(y x)/I0(x)` (the flat Poisson kernel); cheap, no quadrature.
pub fn ratio_i0(y: f64, x: f64) -> f64 {
    if y == 1.0 {
        return 1.0;
    }
    let scaled = |t: f64| {
        let at = t.abs();
        if at < DEFAULT_CROSSOVER {
            series_i0(at) * (-at).exp()
        } else {
            hankel_scaled(0.0, at)
        }
    };
    let ax = x.abs();
    (-(ax - (y * x).abs())).exp() * scaled(y * x) / scaled(x)
}

pub fn ratio_i0k(k: u32, y: f64, x: f64) -> f64 {
    if k == 0 {
        ratio_i0(y, x)
    } else {
        BesselEval::default().ratio_i0k(k, y, x)
    }
}
