//! Spectrum of the linearized right-hand side.

use capjet_core::dynamics::DynamicsOptions;
use capjet_core::linstab::{self, DenseMatrix};
use capjet_core::{Complex64, GridSpec};
use nalgebra::DMatrix;

use crate::error::Result;

/// All eigenvalues of a dense real matrix, via the real Schur form.
pub fn eigenvalues(m: &DenseMatrix) -> Vec<Complex64> {
    let a = DMatrix::from_row_slice(m.size, m.size, &m.data);
    a.complex_eigenvalues().iter().map(|z| Complex64::new(z.re, z.im)).collect()
}

/// One predicted eigenvalue and its nearest unclaimed partner in the computed spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMatch {
    pub mode: i64,
    pub xi: f64,
    pub expected: Complex64,
    pub found: Complex64,
    /// `|found - expected| / |expected|`, or the absolute distance when `expected = 0`.
    pub error: f64,
}

/// `+-sigma(xi_k)` for every mode `k` with `|xi_k| R <= xr_max`, counted with
/// multiplicity (`k` and `-k` are separate modes; Nyquist is excluded).
pub fn predicted_spectrum(grid: &GridSpec, radius: f64, kappa: f64, xr_max: f64) -> Vec<(i64, f64, Complex64)> {
    let half = (grid.len() / 2) as i64;
    let mut out = Vec::new();
    for k in (1 - half)..half {
        let xi = grid.fundamental() * k as f64;
        if xi.abs() * radius > xr_max {
            continue;
        }
        let s = linstab::growth_rate(radius, kappa, xi.abs()).sigma;
        out.push((k, xi, s));
        out.push((k, xi, -s));
    }
    out
}

/// Greedy nearest-neighbour matching of the predicted spectrum to `computed`,
/// each computed eigenvalue claimed at most once. Exact predictions are matched
/// first, largest magnitude first, so the clustered zero modes go last.
pub fn match_spectrum(predicted: &[(i64, f64, Complex64)], computed: &[Complex64]) -> Vec<ModeMatch> {
    let mut order: Vec<usize> = (0..predicted.len()).collect();
    order.sort_by(|&a, &b| predicted[b].2.norm().total_cmp(&predicted[a].2.norm()));
    let mut used = vec![false; computed.len()];
    let mut out = Vec::with_capacity(predicted.len());
    for i in order {
        let (mode, xi, expected) = predicted[i];
        let best = (0..computed.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (computed[a] - expected).norm().total_cmp(&(computed[b] - expected).norm()));
        let Some(j) = best else { break };
        used[j] = true;
        let dist = (computed[j] - expected).norm();
        let error = if expected.norm() > 0.0 { dist / expected.norm() } else { dist };
        out.push(ModeMatch { mode, xi, expected, found: computed[j], error });
    }
    out.sort_by_key(|m| (m.mode, m.expected.re.total_cmp(&0.0), m.expected.im.total_cmp(&0.0)));
    out
}

/// Finite-difference Jacobian at the cylinder, its spectrum, and the match
/// against the closed-form dispersion relation.
pub fn jacobian_spectrum_check(
    grid: &GridSpec,
    radius: f64,
    kappa: f64,
    h: f64,
    opts: &DynamicsOptions,
    xr_max: f64,
) -> Result<Vec<ModeMatch>> {
    let jac = linstab::rhs_jacobian(grid, radius, kappa, h, opts)?;
    let eig = eigenvalues(&jac);
    Ok(match_spectrum(&predicted_spectrum(grid, radius, kappa, xr_max), &eig))
}
