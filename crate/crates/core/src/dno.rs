//! The cylindrical Dirichlet-Neumann operator `G[eta]`.
//!
//! For the flat cylinder `eta = R` it is the Fourier multiplier
//! `m(xi) = xi I1(R xi) / I0(R xi)`. For a general surface the fluid region
//! `0 <= r <= eta(z)` is flattened by `y = r / eta(z)` onto the strip
//! `[0, 2L) x [0, 1]`, where the potential solves `-div(A grad v) = 0` with
//!
//! ```text
//! A = | y eta^2            -y^2 eta eta_z      |
//!     | -y^2 eta eta_z     y (1 + y^2 eta_z^2) |
//! ```
//!
//! `v(., 1) = psi` and a natural (degenerate-weight) condition at the axis.
//!
//! # Discretization
//!
//! The weak form `Q(v) = int int grad v . A grad v dz dy` is discretized
//! directly: `z` derivatives are spectral, and on each `y` cell between
//! levels `m` and `m + 1` the integrand is evaluated at the cell midpoint
//! with `v_z` averaged over the two levels and `v_y` a one-sided difference.
//! Minimizing the resulting quadratic form gives a symmetric positive
//! semidefinite system. The axis needs no extra condition: the weight `y`
//! vanishes there and the stencil only reaches cell midpoints. The boundary
//! flux `eta G = A21 v_z + A22 v_y` is the variational one, i.e. the residual
//! of the top row, which keeps second-order accuracy in `y`.
//!
//! The interior system is solved by preconditioned conjugate gradients, with
//! the exact discrete flat operator at `R = mean(eta)` as preconditioner
//! (tridiagonal per Fourier mode).

#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::bessel;
use crate::grid::{GridSpec, RealField};
use crate::{Error, Result};

/// Surfaces whose minimum radius falls to this fraction of the mean radius are rejected.
pub const PINCH_OFF_FRACTION: f64 = 1e-6;

/// Flat-cylinder multiplier `m(xi) = xi I1(R xi)/I0(R xi)`.
pub fn flat_multiplier(radius: f64, xi: f64) -> f64 {
    xi.abs() * bessel::ratio_i1_i0(radius * xi.abs())
}

/// `G[R] psi`.
pub fn dn_flat(radius: f64, psi: &RealField) -> RealField {
    psi.apply_even(|xi| flat_multiplier(radius, xi))
}

/// `M + 1` equispaced levels on `[0, 1]`.
pub fn uniform_levels(cells: usize) -> Vec<f64> {
    (0..=cells).map(|m| m as f64 / cells as f64).collect()
}

/// A potential sampled on the flattened strip; level-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct StripField {
    grid: GridSpec,
    y_levels: Vec<f64>,
    values: Vec<f64>,
}

impl StripField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn y_levels(&self) -> &[f64] {
        &self.y_levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn level(&self, m: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[m * n..(m + 1) * n]
    }

    pub fn level_count(&self) -> usize {
        self.y_levels.len()
    }

    /// Samples on `y = 1`.
    pub fn trace(&self) -> RealField {
        RealField::from_vec_unchecked(&self.grid, self.level(self.y_levels.len() - 1).to_vec())
    }

    pub fn sup_distance(&self, other: &StripField) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `v(z, y) = sum_xi psi_hat(xi) I0(y R xi)/I0(R xi) e^{i xi z}`.
pub fn harmonic_extension_flat(radius: f64, psi: &RealField, y_levels: &[f64]) -> StripField {
    let grid = psi.grid().clone();
    let mut values = Vec::with_capacity(grid.len() * y_levels.len());
    for &y in y_levels {
        let level = psi.apply_even(|xi| bessel::ratio_i0(y, radius * xi));
        values.extend_from_slice(level.values());
    }
    StripField { grid, y_levels: y_levels.to_vec(), values }
}

/// Entries of `A(z, y)` at the nodes `(z_j, y_m)`; level-major.
#[derive(Debug, Clone)]
pub struct CoefficientMatrixField {
    pub y_levels: Vec<f64>,
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
}

impl CoefficientMatrixField {
    /// Smallest eigenvalue of the sampled 2x2 blocks at level `m`.
    pub fn min_eigenvalue_at_level(&self, m: usize) -> f64 {
        let n = self.a11.len() / self.y_levels.len();
        (m * n..(m + 1) * n)
            .map(|i| {
                let (a, b, d) = (self.a11[i], self.a12[i], self.a22[i]);
                let mean = 0.5 * (a + d);
                let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
                mean - rad
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_radius(eta: &RealField) -> Result<()> {
    let min = eta.min();
    if !(min > PINCH_OFF_FRACTION * eta.mean()) {
        return Err(Error::NonpositiveRadius { min_radius: min });
    }
    Ok(())
}

pub fn assemble_coefficients(eta: &RealField, y_levels: &[f64]) -> Result<CoefficientMatrixField> {
    check_radius(eta)?;
    let eta_z = eta.derivative();
    let n = eta.len();
    let mut out = CoefficientMatrixField {
        y_levels: y_levels.to_vec(),
        a11: Vec::with_capacity(n * y_levels.len()),
        a12: Vec::with_capacity(n * y_levels.len()),
        a22: Vec::with_capacity(n * y_levels.len()),
    };
    for &y in y_levels {
        for (&e, &ez) in eta.values().iter().zip(eta_z.values()) {
            out.a11.push(y * e * e);
            out.a12.push(-y * y * e * ez);
            out.a22.push(y * (1.0 + y * y * ez * ez));
        }
    }
    Ok(out)
}

/// Elliptic solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Number of `y` cells `M`; `None` means `2N`.
    pub cells: Option<usize>,
    /// Relative residual target, measured against the right-hand side.
    pub tol: f64,
    /// `None` means `10N`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { cells: None, tol: 1e-10, max_iter: None }
    }
}

impl SolverOptions {
    pub fn with_cells(cells: usize, tol: f64) -> Self {
        Self { cells: Some(cells), tol, max_iter: None }
    }
}

/// Iteration count and final relative residual of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
}

/// The discrete flattened problem for one surface `eta`.
#[derive(Debug, Clone)]
pub struct DnOperator {
    grid: GridSpec,
    eta: RealField,
    y: Vec<f64>,
    // per cell: midpoint and width
    yc: Vec<f64>,
    dy: Vec<f64>,
    // per cell and node, level-major
    a11: Vec<f64>,
    a12: Vec<f64>,
    a22: Vec<f64>,
    precond: FlatPreconditioner,
    tol: f64,
    max_iter: usize,
}

impl DnOperator {
    pub fn new(eta: &RealField, opts: &SolverOptions) -> Result<Self> {
        let cells = opts.cells.unwrap_or(2 * eta.len());
        Self::with_levels(eta, &uniform_levels(cells), opts)
    }

    /// Uses the given `y` levels (`0 = y_0 < ... < y_M = 1`).
    pub fn with_levels(eta: &RealField, y_levels: &[f64], opts: &SolverOptions) -> Result<Self> {
        check_radius(eta)?;
        if !(opts.tol > 0.0) {
            return Err(Error::InvalidParameter("solver tolerance must be positive"));
        }
        let valid = y_levels.len() >= 2
            && y_levels[0] == 0.0
            && *y_levels.last().unwrap() == 1.0
            && y_levels.windows(2).all(|w| w[1] > w[0]);
        if !valid {
            return Err(Error::InvalidParameter("y levels must increase from 0 to 1"));
        }
        let grid = eta.grid().clone();
        let n = grid.len();
        let cells = y_levels.len() - 1;
        let yc: Vec<f64> = y_levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let dy: Vec<f64> = y_levels.windows(2).map(|w| w[1] - w[0]).collect();
        let eta_z = eta.derivative();
        let mut a11 = Vec::with_capacity(cells * n);
        let mut a12 = Vec::with_capacity(cells * n);
        let mut a22 = Vec::with_capacity(cells * n);
        for &y in &yc {
            for (&e, &ez) in eta.values().iter().zip(eta_z.values()) {
                a11.push(y * e * e);
                a12.push(-y * y * e * ez);
                a22.push(y * (1.0 + y * y * ez * ez));
            }
        }
        let precond = FlatPreconditioner::new(&grid, eta.mean(), &yc, &dy);
        Ok(Self {
            grid,
            eta: eta.clone(),
            y: y_levels.to_vec(),
            yc,
            dy,
            a11,
            a12,
            a22,
            precond,
            tol: opts.tol,
            max_iter: opts.max_iter.unwrap_or(10 * n),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn eta(&self) -> &RealField {
        &self.eta
    }

    pub fn y_levels(&self) -> &[f64] {
        &self.y
    }

    pub fn cells(&self) -> usize {
        self.yc.len()
    }

    /// Half the gradient of the discrete form (divided by `dz`): `Q(v) = dz v.Kv`.
    /// `v` holds all `M + 1` levels; so does the result. The top row is `eta G`
    /// once the interior rows vanish.
    pub fn apply_operator(&self, v: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let cells = self.cells();
        assert_eq!(v.len(), (cells + 1) * n);
        let dv = derive_rows(&self.grid, v);
        let mut p = vec![0.0; cells * n];
        let mut q = vec![0.0; cells * n];
        for c in 0..cells {
            let inv = 1.0 / self.dy[c];
            for j in 0..n {
                let lo = c * n + j;
                let hi = lo + n;
                let a = 0.5 * (dv[lo] + dv[hi]);
                let b = (v[hi] - v[lo]) * inv;
                p[lo] = self.a11[lo] * a + self.a12[lo] * b;
                q[lo] = self.a12[lo] * a + self.a22[lo] * b;
            }
        }
        let dp = derive_rows(&self.grid, &p);
        let mut out = vec![0.0; (cells + 1) * n];
        for c in 0..cells {
            let h = 0.5 * self.dy[c];
            for j in 0..n {
                let i = c * n + j;
                let t = h * dp[i];
                out[i] -= t + q[i];
                out[i + n] += q[i] - t;
            }
        }
        out
    }

    /// Discrete Dirichlet energy `sum dz dy grad v . A grad v`.
    pub fn energy(&self, v: &StripField) -> f64 {
        let kv = self.apply_operator(&v.values);
        self.grid.spacing() * v.values.iter().zip(&kv).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Solves for the potential with `v(., 1) = psi`.
    pub fn solve(&self, psi: &RealField) -> Result<(StripField, SolveReport)> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.len();
        let cells = self.cells();
        let interior = cells * n;
        // lift: psi copied to every level, so the correction vanishes on y = 1
        let mut lift = Vec::with_capacity((cells + 1) * n);
        for _ in 0..=cells {
            lift.extend_from_slice(psi.values());
        }
        let mut b = self.apply_operator(&lift);
        b.truncate(interior);
        b.iter_mut().for_each(|x| *x = -*x);
        let (w, report) = self.pcg(&b)?;
        for (l, x) in lift.iter_mut().zip(&w) {
            *l += x;
        }
        Ok((StripField { grid: self.grid.clone(), y_levels: self.y.clone(), values: lift }, report))
    }

    /// `G[eta] psi` from the variational boundary flux.
    pub fn dn(&self, psi: &RealField) -> Result<RealField> {
        let (v, _) = self.solve(psi)?;
        Ok(self.dn_from_potential(&v))
    }

    pub fn dn_from_potential(&self, v: &StripField) -> RealField {
        let n = self.grid.len();
        let kv = self.apply_operator(&v.values);
        let top = &kv[self.cells() * n..];
        RealField::from_vec_unchecked(
            &self.grid,
            top.iter().zip(self.eta.values()).map(|(f, e)| f / e).collect(),
        )
    }

    fn apply_interior(&self, w: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let mut full = Vec::with_capacity(w.len() + n);
        full.extend_from_slice(w);
        full.resize(w.len() + n, 0.0);
        let mut out = self.apply_operator(&full);
        out.truncate(w.len());
        out
    }

    fn pcg(&self, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        let bnorm = norm(b);
        let mut x = vec![0.0; b.len()];
        if bnorm == 0.0 {
            return Ok((x, SolveReport { iterations: 0, residual: 0.0 }));
        }
        let mut r = b.to_vec();
        let mut z = self.precond.apply(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut rel = 1.0;
        for it in 1..=self.max_iter {
            let ap = self.apply_interior(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::NoConvergence { iterations: it, residual: rel });
            }
            let alpha = rz / pap;
            for i in 0..x.len() {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            rel = norm(&r) / bnorm;
            if rel <= self.tol {
                return Ok((x, SolveReport { iterations: it, residual: rel }));
            }
            z = self.precond.apply(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..p.len() {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::NoConvergence { iterations: self.max_iter, residual: rel })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Spectral `z` derivative of every row of a level-major array.
fn derive_rows(grid: &GridSpec, src: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let rows = src.len() / n;
    let mut out = vec![0.0; src.len()];
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let mut r = 0;
    while r + 1 < rows {
        let (a, b) = (&src[r * n..(r + 1) * n], &src[(r + 1) * n..(r + 2) * n]);
        let (da, db) = out[r * n..(r + 2) * n].split_at_mut(n);
        grid.differentiate_pair(a, b, da, db, &mut scratch);
        r += 2;
    }
    if r < rows {
        grid.differentiate_into(&src[r * n..], &mut out[r * n..], &mut scratch);
    }
    out
}

/// Inverse of the discrete operator at a constant radius, restricted to the
/// interior levels. Each Fourier mode decouples into a real tridiagonal system.
#[derive(Debug, Clone)]
struct FlatPreconditioner {
    grid: GridSpec,
    cells: usize,
    // per slot: modified super-diagonal and reciprocal pivots of the Thomas sweep
    upper: Vec<f64>,
    pivot: Vec<f64>,
}

impl FlatPreconditioner {
    fn new(grid: &GridSpec, radius: f64, yc: &[f64], dy: &[f64]) -> Self {
        let n = grid.len();
        let cells = yc.len();
        let mut upper = vec![0.0; n * cells];
        let mut pivot = vec![0.0; n * cells];
        let nyq = grid.nyquist_slot();
        for s in 0..n {
            let xi = if s == nyq { 0.0 } else { grid.wavenumber(s) };
            let alpha: Vec<f64> =
                (0..cells).map(|c| 0.25 * xi * xi * yc[c] * radius * radius * dy[c]).collect();
            let beta: Vec<f64> = (0..cells).map(|c| yc[c] / dy[c]).collect();
            let base = s * cells;
            let mut prev_upper = 0.0;
            for m in 0..cells {
                let mut diag = alpha[m] + beta[m];
                let mut sub = 0.0;
                if m > 0 {
                    diag += alpha[m - 1] + beta[m - 1];
                    sub = alpha[m - 1] - beta[m - 1];
                }
                let sup = if m + 1 < cells { alpha[m] - beta[m] } else { 0.0 };
                let piv = 1.0 / (diag - sub * prev_upper);
                pivot[base + m] = piv;
                upper[base + m] = sup * piv;
                prev_upper = upper[base + m];
            }
        }
        Self { grid: grid.clone(), cells, upper, pivot }
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let cells = self.cells;
        // transform every level (two real rows per complex transform)
        let mut hat = vec![Complex64::new(0.0, 0.0); cells * n];
        for m in 0..cells {
            let row = &mut hat[m * n..(m + 1) * n];
            for (h, &x) in row.iter_mut().zip(&r[m * n..(m + 1) * n]) {
                *h = Complex64::new(x, 0.0);
            }
            self.grid.fft().forward(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); cells];
        for s in 0..n {
            let base = s * cells;
            let mut prev = Complex64::new(0.0, 0.0);
            for m in 0..cells {
                let sub = if m > 0 { self.sub(s, m) } else { 0.0 };
                let val = (hat[m * n + s] - prev * sub) * self.pivot[base + m];
                col[m] = val;
                prev = val;
            }
            for m in (0..cells.saturating_sub(1)).rev() {
                let next = col[m + 1];
                col[m] -= next * self.upper[base + m];
            }
            for m in 0..cells {
                hat[m * n + s] = col[m];
            }
        }
        let scale = 1.0 / n as f64;
        let mut out = vec![0.0; cells * n];
        for m in 0..cells {
            let row = &mut hat[m * n..(m + 1) * n];
            self.grid.fft().inverse(row);
            for (o, h) in out[m * n..(m + 1) * n].iter_mut().zip(row.iter()) {
                *o = h.re * scale;
            }
        }
        out
    }

    // sub-diagonal entry (m, m-1), recovered from the factorization: the
    // matrix is symmetric, so it equals the original super-diagonal of row m-1
    fn sub(&self, s: usize, m: usize) -> f64 {
        let base = s * self.cells;
        self.upper[base + m - 1] / self.pivot[base + m - 1]
    }
}

/// Solves the flattened problem and returns the discrete potential.
pub fn solve_elliptic(eta: &RealField, psi: &RealField, opts: &SolverOptions) -> Result<StripField> {
    DnOperator::new(eta, opts)?.solve(psi).map(|(v, _)| v)
}

/// `G[eta] psi` by the flattened elliptic solve.
pub fn dn_general(eta: &RealField, psi: &RealField, opts: &SolverOptions) -> Result<RealField> {
    eta.ensure_same_grid(psi)?;
    DnOperator::new(eta, opts)?.dn(psi)
}

/// Radial and axial velocity traces on the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceVelocities {
    pub b: RealField,
    pub v: RealField,
}

/// `B = (eta_z psi_z + G)/(1 + eta_z^2)`, `V = psi_z - B eta_z`.
pub fn trace_velocities(eta: &RealField, psi: &RealField, g: &RealField) -> Result<TraceVelocities> {
    eta.ensure_same_grid(psi)?;
    eta.ensure_same_grid(g)?;
    let eta_z = eta.derivative();
    let psi_z = psi.derivative();
    let n = eta.len();
    let mut b = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for j in 0..n {
        let ez = eta_z.values()[j];
        let pz = psi_z.values()[j];
        let bj = (ez * pz + g.values()[j]) / (1.0 + ez * ez);
        b.push(bj);
        v.push(pz - bj * ez);
    }
    let grid = eta.grid();
    Ok(TraceVelocities {
        b: RealField::from_vec_unchecked(grid, b),
        v: RealField::from_vec_unchecked(grid, v),
    })
}

/// `d_eta G[eta](psi) h = -G[eta](h B) - (h V)_z - h B / eta`.
pub fn shape_derivative(
    eta: &RealField,
    psi: &RealField,
    h: &RealField,
    opts: &SolverOptions,
) -> Result<RealField> {
    eta.ensure_same_grid(psi)?;
    eta.ensure_same_grid(h)?;
    let op = DnOperator::new(eta, opts)?;
    let g = op.dn(psi)?;
    let tv = trace_velocities(eta, psi, &g)?;
    let hb = h * &tv.b;
    let g_hb = op.dn(&hb)?;
    let hv_z = (h * &tv.v).derivative();
    let n = eta.len();
    let out = (0..n)
        .map(|j| -g_hb.values()[j] - hv_z.values()[j] - hb.values()[j] / eta.values()[j])
        .collect();
    Ok(RealField::from_vec_unchecked(eta.grid(), out))
}

/// `G[eta](B) + V_z`, which is one derivative smoother than either term.
pub fn cancellation_probe(eta: &RealField, psi: &RealField, opts: &SolverOptions) -> Result<RealField> {
    eta.ensure_same_grid(psi)?;
    let op = DnOperator::new(eta, opts)?;
    let g = op.dn(psi)?;
    let tv = trace_velocities(eta, psi, &g)?;
    let gb = op.dn(&tv.b)?;
    Ok(&gb + &tv.v.derivative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn rel_l2(a: &RealField, b: &RealField) -> f64 {
        (a - b).l2() / b.l2()
    }

    #[test]
    fn flat_multiplier_examples() {
        assert_eq!(flat_multiplier(1.0, 0.0), 0.0);
        let r = 2.0;
        assert!((flat_multiplier(r, 0.5) - bessel::ratio_i1_i0(1.0) / r).abs() < 1e-16);
        for &x in &[20.0, 35.0, 100.0, 1000.0] {
            let xi = x / r;
            let m = flat_multiplier(r, xi);
            assert!((m - (xi - 1.0 / (2.0 * r))).abs() <= 2.0 / (r * r * xi));
            assert!(m <= xi && m >= 0.0);
        }
    }

    #[test]
    fn dn_flat_basics() {
        let g = GridSpec::new(PI, 32).unwrap();
        let c = RealField::constant(&g, 3.0);
        assert!(dn_flat(1.3, &c).sup() < 1e-15);
        let u = RealField::from_fn(&g, |z| (3.0 * z).cos());
        let out = dn_flat(1.3, &u);
        assert!((&out - &u.scale(flat_multiplier(1.3, 3.0))).sup() < 1e-13);
    }

    #[test]
    fn dn_flat_scale_covariance() {
        // grid of half period lambda L carries psi(z / lambda)
        let lam = 2.5;
        let g1 = GridSpec::new(PI, 32).unwrap();
        let g2 = GridSpec::new(lam * PI, 32).unwrap();
        let f = |z: f64| z.sin() + 0.4 * (2.0 * z).cos();
        let a = dn_flat(0.8, &RealField::from_fn(&g1, f));
        let b = dn_flat(lam * 0.8, &RealField::from_fn(&g2, |z| f(z / lam)));
        for j in 0..32 {
            assert!((b.values()[j] - a.values()[j] / lam).abs() < 1e-13);
        }
    }

    #[test]
    fn extension_trace_and_constants() {
        let g = GridSpec::new(PI, 16).unwrap();
        let ys = uniform_levels(8);
        let psi = RealField::from_fn(&g, |z| z.sin() + 0.3 * (3.0 * z).cos());
        let ext = harmonic_extension_flat(1.0, &psi, &ys);
        assert!((&ext.trace() - &psi).sup() < 1e-12);
        let c = harmonic_extension_flat(1.0, &RealField::constant(&g, 2.0), &ys);
        assert!(c.values().iter().all(|v| (v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn flat_coefficients() {
        let g = GridSpec::new(PI, 16).unwrap();
        let ys = uniform_levels(4);
        let a = assemble_coefficients(&RealField::constant(&g, 1.5), &ys).unwrap();
        for (m, &y) in ys.iter().enumerate() {
            for j in 0..16 {
                let i = m * 16 + j;
                assert_eq!(a.a11[i], y * 2.25);
                assert_eq!(a.a12[i], 0.0);
                assert_eq!(a.a22[i], y);
            }
        }
        let bumpy = RealField::from_fn(&g, |z| 1.0 + 0.3 * z.cos());
        let a = assemble_coefficients(&bumpy, &ys).unwrap();
        for m in 1..ys.len() {
            assert!(a.min_eigenvalue_at_level(m) > 0.0);
        }
        let bad = RealField::from_fn(&g, |z| z.cos());
        assert!(matches!(assemble_coefficients(&bad, &ys), Err(Error::NonpositiveRadius { .. })));
    }

    #[test]
    fn flat_solve_matches_exact_extension() {
        let g = GridSpec::new(PI, 32).unwrap();
        let psi = RealField::from_fn(&g, |z| z.sin() + 0.3 * (3.0 * z).cos());
        let eta = RealField::constant(&g, 1.0);
        let mut prev = f64::INFINITY;
        for cells in [32, 64, 128] {
            let opts = SolverOptions::with_cells(cells, 1e-12);
            let v = solve_elliptic(&eta, &psi, &opts).unwrap();
            let exact = harmonic_extension_flat(1.0, &psi, v.y_levels());
            let err = v.sup_distance(&exact);
            assert!(err < prev / 3.5, "cells {cells}: {err} vs {prev}");
            prev = err;
        }
    }

    #[test]
    fn constant_data_gives_constant_potential() {
        let g = GridSpec::new(PI, 16).unwrap();
        let eta = RealField::from_fn(&g, |z| 1.0 + 0.2 * z.cos());
        let psi = RealField::constant(&g, 0.7);
        let v = solve_elliptic(&eta, &psi, &SolverOptions::default()).unwrap();
        assert!(v.values().iter().all(|x| (x - 0.7).abs() < 1e-13));
        let gpsi = dn_general(&eta, &psi, &SolverOptions::default()).unwrap();
        assert!(gpsi.sup() < 1e-12);
    }

    #[test]
    fn general_dn_matches_flat_multiplier() {
        let g = GridSpec::new(PI, 32).unwrap();
        let psi = RealField::from_fn(&g, |z| z.sin() + 0.3 * (3.0 * z).cos());
        let eta = RealField::constant(&g, 1.0);
        let exact = dn_flat(1.0, &psi);
        let e1 = rel_l2(&dn_general(&eta, &psi, &SolverOptions::with_cells(64, 1e-12)).unwrap(), &exact);
        let e2 = rel_l2(&dn_general(&eta, &psi, &SolverOptions::with_cells(128, 1e-12)).unwrap(), &exact);
        assert!(e1 < 1e-4);
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn flux_integrates_to_zero_and_parity() {
        let g = GridSpec::new(PI, 32).unwrap();
        let eta = RealField::from_fn(&g, |z| 1.0 + 0.2 * z.cos() + 0.05 * (2.0 * z).cos());
        let psi = RealField::from_fn(&g, |z| z.cos() + 0.3 * (3.0 * z).cos());
        let opts = SolverOptions::with_cells(64, 1e-12);
        let gpsi = dn_general(&eta, &psi, &opts).unwrap();
        let flux: f64 = (&eta * &gpsi).integral();
        assert!(flux.abs() < 1e-10, "{flux}");
        // even data stays even: compare z and -z samples
        let n = 32;
        for j in 1..n {
            assert!((gpsi.values()[j] - gpsi.values()[n - j]).abs() < 1e-10);
        }
    }

    #[test]
    fn bilinear_form_is_symmetric_and_nonnegative() {
        let g = GridSpec::new(PI, 32).unwrap();
        let eta = RealField::from_fn(&g, |z| 1.0 + 0.15 * (z + 0.3).sin());
        let a = RealField::from_fn(&g, |z| z.sin() + 0.2 * (2.0 * z).cos());
        let b = RealField::from_fn(&g, |z| (3.0 * z + 1.0).cos() - 0.1 * z.cos());
        let op = DnOperator::new(&eta, &SolverOptions::with_cells(64, 1e-13)).unwrap();
        let ga = op.dn(&a).unwrap();
        let gb = op.dn(&b).unwrap();
        let ab = (&(&b * &eta) * &ga).integral();
        let ba = (&(&a * &eta) * &gb).integral();
        assert!((ab - ba).abs() < 1e-10 * ab.abs().max(1.0));
        assert!((&(&a * &eta) * &ga).integral() > 0.0);
        // the kinetic term equals the discrete Dirichlet energy
        let (v, _) = op.solve(&a).unwrap();
        let e = op.energy(&v);
        assert!((e - (&(&a * &eta) * &ga).integral()).abs() < 1e-10 * e);
    }

    #[test]
    fn trace_velocity_identity() {
        let g = GridSpec::new(PI, 32).unwrap();
        let eta = RealField::from_fn(&g, |z| 1.0 + 0.2 * z.cos());
        let psi = RealField::from_fn(&g, |z| z.sin());
        let gpsi = dn_general(&eta, &psi, &SolverOptions::with_cells(64, 1e-12)).unwrap();
        let tv = trace_velocities(&eta, &psi, &gpsi).unwrap();
        let back = &tv.b - &(&tv.v * &eta.derivative());
        assert!((&back - &gpsi).sup() < 1e-12);

        let flat = RealField::constant(&g, 1.0);
        let gf = dn_flat(1.0, &psi);
        let tv = trace_velocities(&flat, &psi, &gf).unwrap();
        assert!((&tv.b - &gf).sup() < 1e-15);
        assert!((&tv.v - &psi.derivative()).sup() < 1e-15);

        let zero = RealField::zeros(&g);
        let tv = trace_velocities(&eta, &zero, &zero).unwrap();
        assert_eq!(tv.b.sup(), 0.0);
        assert_eq!(tv.v.sup(), 0.0);
    }

    #[test]
    fn shape_derivative_zero_direction_and_flat_form() {
        let g = GridSpec::new(PI, 32).unwrap();
        let eta = RealField::from_fn(&g, |z| 1.0 + 0.1 * z.cos());
        let psi = RealField::from_fn(&g, |z| z.sin());
        let opts = SolverOptions::with_cells(64, 1e-12);
        let zero = RealField::zeros(&g);
        assert!(shape_derivative(&eta, &psi, &zero, &opts).unwrap().sup() < 1e-14);

        let flat = RealField::constant(&g, 1.0);
        let h = RealField::from_fn(&g, |z| (2.0 * z).cos());
        let got = shape_derivative(&flat, &psi, &h, &opts).unwrap();
        let gpsi = dn_general(&flat, &psi, &opts).unwrap();
        let inner = dn_general(&flat, &(&h * &gpsi), &opts).unwrap();
        let want = &(&(-&inner) - &(&h * &psi.derivative()).derivative()) - &(&h * &gpsi);
        assert!((&got - &want).sup() < 1e-10);
    }

    #[test]
    fn preconditioner_is_exact_on_flat_surfaces() {
        let g = GridSpec::new(PI, 16).unwrap();
        let eta = RealField::constant(&g, 1.0);
        let psi = RealField::from_fn(&g, |z| z.sin() + (5.0 * z).cos());
        let op = DnOperator::new(&eta, &SolverOptions::with_cells(32, 1e-12)).unwrap();
        let (_, rep) = op.solve(&psi).unwrap();
        assert!(rep.iterations <= 2, "{rep:?}");
    }

    #[test]
    fn rejects_bad_levels_and_tolerance() {
        let g = GridSpec::new(PI, 16).unwrap();
        let eta = RealField::constant(&g, 1.0);
        let opts = SolverOptions::default();
        assert!(DnOperator::with_levels(&eta, &[0.0, 0.5, 0.4, 1.0], &opts).is_err());
        assert!(DnOperator::new(&eta, &SolverOptions { tol: 0.0, ..opts }).is_err());
    }

    #[test]
    fn stalled_iteration_is_reported() {
        let g = GridSpec::new(PI, 16).unwrap();
        let eta = RealField::from_fn(&g, |z| 1.0 + 0.3 * z.cos());
        let psi = RealField::from_fn(&g, |z| z.sin());
        let opts = SolverOptions { cells: Some(32), tol: 1e-14, max_iter: Some(1) };
        assert!(matches!(dn_general(&eta, &psi, &opts), Err(Error::NoConvergence { .. })));
    }
}
