//! Discrete paradifferential calculus on the periodic grid.
//!
//! For a symbol `a(z, xi) = sum_j c_j(z) m_j(xi)` the operator acts by the
//! exact frequency convolution
//!
//! ```text
//! (T_a u)^(xi) = sum_zeta chi(xi - zeta, zeta) sum_j c_j^(xi - zeta) m_j(zeta) phi(zeta) u^(zeta)
//! ```
//!
//! with the `1/N` coefficient convention of [`crate::grid`], so a constant
//! coefficient `c` has `c^(0) = c` and `T_c = c phi(D)`. The Nyquist slot and
//! frequency differences outside the resolved band are dropped.
//!
//! The symbol zoo of the jet system lives here too: `lambda`, `ell`, the
//! symmetrizer `(p, q, gamma)` and the mollifier `J_eps`.

#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;
use core::fmt;

use num_complex::Complex64;

use crate::dno::{self, DnOperator, SolverOptions};
use crate::grid::{GridSpec, RealField};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Imaginary parts above this fraction of the output size are reported, not discarded.
pub const REALITY_TOL: f64 = 1e-12;

/// `6t^5 - 15t^4 + 10t^3` clamped to `[0, 1]`.
fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

/// Bony cutoffs: `chi(theta, zeta)` equals 1 for `|theta| <= eps1 |zeta|` and 0
/// for `|theta| >= eps2 |zeta|`; `phi` vanishes on `|zeta| <= 1/2` and equals 1
/// on `|zeta| >= 1`. Both transitions are C^2 smoothsteps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPair {
    eps1: f64,
    eps2: f64,
}

impl Default for CutoffPair {
    fn default() -> Self {
        Self { eps1: 0.1, eps2: 0.5 }
    }
}

impl CutoffPair {
    pub fn new(eps1: f64, eps2: f64) -> Result<Self> {
        if !(0.0 < eps1 && eps1 < eps2 && eps2 < 1.0) {
            return Err(Error::InvalidParameter("cutoffs need 0 < eps1 < eps2 < 1"));
        }
        Ok(Self { eps1, eps2 })
    }

    pub fn eps1(&self) -> f64 {
        self.eps1
    }

    pub fn eps2(&self) -> f64 {
        self.eps2
    }

    pub fn chi(&self, theta: f64, zeta: f64) -> f64 {
        let z = zeta.abs();
        if z == 0.0 {
            return if theta == 0.0 { 1.0 } else { 0.0 };
        }
        1.0 - smoothstep((theta.abs() / z - self.eps1) / (self.eps2 - self.eps1))
    }

    pub fn phi(&self, zeta: f64) -> f64 {
        smoothstep(2.0 * zeta.abs() - 1.0)
    }
}

type Multiplier = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// One `c(z) m(xi)` product.
#[derive(Clone)]
pub struct SymbolTerm {
    coeff: Vec<Complex64>,
    mult: Multiplier,
}

impl fmt::Debug for SymbolTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolTerm").field("coeff", &self.coeff).finish_non_exhaustive()
    }
}

impl SymbolTerm {
    pub fn coeff(&self) -> &[Complex64] {
        &self.coeff
    }

    pub fn multiplier(&self, xi: f64) -> Complex64 {
        (self.mult)(xi)
    }
}

/// `a(z, xi) = sum_j c_j(z) m_j(xi)` with a declared order.
#[derive(Debug, Clone)]
pub struct SeparableSymbol {
    grid: GridSpec,
    order: f64,
    terms: Vec<SymbolTerm>,
}

impl SeparableSymbol {
    pub fn new(grid: &GridSpec, order: f64) -> Self {
        Self { grid: grid.clone(), order, terms: Vec::new() }
    }

    /// Adds the term `c(z) m(xi)` with a real coefficient field.
    pub fn push(&mut self, coeff: &RealField, m: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> &mut Self {
        assert!(coeff.grid() == &self.grid, "coefficient lives on another grid");
        self.terms.push(SymbolTerm {
            coeff: coeff.values().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            mult: Arc::new(m),
        });
        self
    }

    /// Adds a term with complex coefficient samples.
    pub fn push_complex(
        &mut self,
        coeff: Vec<Complex64>,
        m: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<&mut Self> {
        if coeff.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), found: coeff.len() });
        }
        self.terms.push(SymbolTerm { coeff, mult: Arc::new(m) });
        Ok(self)
    }

    /// A `z`-independent symbol `m(xi)`.
    pub fn multiplier(grid: &GridSpec, order: f64, m: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        let mut s = Self::new(grid, order);
        s.push(&RealField::constant(grid, 1.0), m);
        s
    }

    /// An order-0 symbol `c(z)`.
    pub fn function(c: &RealField) -> Self {
        let mut s = Self::new(c.grid(), 0.0);
        s.push(c, |_| Complex64::new(1.0, 0.0));
        s
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    /// `a(z_j, xi)`.
    pub fn eval(&self, j: usize, xi: f64) -> Complex64 {
        self.terms.iter().map(|t| t.coeff[j] * (t.mult)(xi)).sum()
    }

    /// Largest `|conj(a(z, xi)) - a(z, -xi)|` over nodes and grid wavenumbers.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.grid.len() {
            for &xi in self.grid.wavenumbers() {
                worst = worst.max((self.eval(j, xi).conj() - self.eval(j, -xi)).norm());
            }
        }
        worst
    }

    /// Sum of two symbols on the same grid; the order is the larger one.
    pub fn plus(&self, other: &SeparableSymbol) -> SeparableSymbol {
        assert!(self.grid == other.grid);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        SeparableSymbol { grid: self.grid.clone(), order: self.order.max(other.order), terms }
    }
}

/// `T_a u`.
pub fn paraop_apply(a: &SeparableSymbol, u: &RealField, cut: &CutoffPair) -> Result<RealField> {
    let coeffs = paraop_coefficients(a, u, cut)?;
    let grid = u.grid();
    let mut buf = coeffs;
    grid.inverse_in_place(&mut buf);
    let scale = buf.iter().fold(1.0f64, |m, c| m.max(c.re.abs()));
    let residue = buf.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if residue > REALITY_TOL * scale {
        return Err(Error::NonRealOutput { residue });
    }
    Ok(RealField::from_vec_unchecked(grid, buf.into_iter().map(|c| c.re).collect()))
}

/// Fourier coefficients of `T_a u` (transform order, `1/N` convention).
pub fn paraop_coefficients(a: &SeparableSymbol, u: &RealField, cut: &CutoffPair) -> Result<Vec<Complex64>> {
    if a.grid() != u.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid();
    let n = grid.len();
    let half = (n / 2) as i64;
    let nyq = grid.nyquist_slot();
    let u_hat = grid.forward(u.values());
    let c_hats: Vec<Vec<Complex64>> = a
        .terms
        .iter()
        .map(|t| {
            let mut c = t.coeff.clone();
            grid.forward_in_place(&mut c);
            c
        })
        .collect();
    let mults: Vec<Vec<Complex64>> =
        a.terms.iter().map(|t| grid.wavenumbers().iter().map(|&xi| (t.mult)(xi)).collect()).collect();
    let dxi = grid.fundamental();
    let mut out = vec![ZERO; n];
    for s in 0..n {
        if s == nyq || u_hat[s] == ZERO {
            continue;
        }
        let zeta = grid.wavenumber(s);
        let ph = cut.phi(zeta);
        if ph == 0.0 {
            continue;
        }
        let ks = grid.mode(s);
        let weighted: Vec<Complex64> = mults.iter().map(|m| m[s] * ph * u_hat[s]).collect();
        let dmax = (cut.eps2 * zeta.abs() / dxi).ceil() as i64;
        for d in -dmax..=dmax {
            let k = ks + d;
            if k <= -half || k >= half || d <= -half || d >= half {
                continue;
            }
            let w = cut.chi(d as f64 * dxi, zeta);
            if w == 0.0 {
                continue;
            }
            let ds = d.rem_euclid(n as i64) as usize;
            let mut acc = ZERO;
            for (c, m) in c_hats.iter().zip(&weighted) {
                acc += c[ds] * m;
            }
            out[k.rem_euclid(n as i64) as usize] += acc * w;
        }
    }
    Ok(out)
}

fn sgn(xi: f64) -> f64 {
    if xi > 0.0 {
        1.0
    } else if xi < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `i sgn(xi) |xi|^power`, zero at `xi = 0`.
fn odd_power(power: f64) -> impl Fn(f64) -> Complex64 + Send + Sync + 'static {
    move |xi: f64| if xi == 0.0 { ZERO } else { Complex64::new(0.0, sgn(xi) * xi.abs().powf(power)) }
}

/// `|xi|^power`, zero at `xi = 0`.
fn even_power(power: f64) -> impl Fn(f64) -> Complex64 + Send + Sync + 'static {
    move |xi: f64| if xi == 0.0 { ZERO } else { real(xi.abs().powf(power)) }
}

fn check_radius(eta: &RealField) -> Result<()> {
    let min = eta.min();
    if !(min > 0.0) {
        return Err(Error::NonpositiveRadius { min_radius: min });
    }
    Ok(())
}

fn field(grid: &GridSpec, values: Vec<f64>) -> RealField {
    RealField::from_vec_unchecked(grid, values)
}

/// `lambda = |xi| - (1 + 2 eta_z^2 + i eta_z^3 sgn xi) / (2 eta)`.
pub fn symbol_lambda(eta: &RealField) -> Result<SeparableSymbol> {
    check_radius(eta)?;
    let grid = eta.grid();
    let ez = eta.derivative();
    let e = eta.values();
    let d = ez.values();
    let n = eta.len();
    let re0 = field(grid, (0..n).map(|j| -(1.0 + 2.0 * d[j] * d[j]) / (2.0 * e[j])).collect());
    let im0 = field(grid, (0..n).map(|j| -d[j] * d[j] * d[j] / (2.0 * e[j])).collect());
    let mut s = SeparableSymbol::new(grid, 1.0);
    s.push(&RealField::constant(grid, 1.0), |xi| real(xi.abs()));
    s.push(&re0, |_| real(1.0));
    s.push(&im0, |xi| Complex64::new(0.0, sgn(xi)));
    Ok(s)
}

/// `Re lambda^{(0)} = -(1 + 2 eta_z^2)/(2 eta)`.
fn re_lambda0(eta: &RealField, eta_z: &RealField) -> Vec<f64> {
    eta.values().iter().zip(eta_z.values()).map(|(e, d)| -(1.0 + 2.0 * d * d) / (2.0 * e)).collect()
}

/// `(ell, ell^{(0)})` with `ell = |xi|^2 / (2 w^{3/2}) + i xi eta_z (3 eta eta_zz - 1 - eta_z^2) / (2 eta w^{5/2})`,
/// `ell^{(0)} = 1 / (2 eta^2 sqrt w)` and `w = 1 + eta_z^2`.
pub fn symbol_ell(eta: &RealField) -> Result<(SeparableSymbol, RealField)> {
    check_radius(eta)?;
    let grid = eta.grid();
    let ez = eta.derivative();
    let ezz = ez.derivative();
    let (e, d, dd) = (eta.values(), ez.values(), ezz.values());
    let n = eta.len();
    let w: Vec<f64> = d.iter().map(|x| 1.0 + x * x).collect();
    let c2 = field(grid, w.iter().map(|w| 0.5 * w.powf(-1.5)).collect());
    let c1 = field(
        grid,
        (0..n).map(|j| d[j] * (3.0 * e[j] * dd[j] - 1.0 - d[j] * d[j]) / (2.0 * e[j] * w[j].powf(2.5))).collect(),
    );
    let l0 = field(grid, (0..n).map(|j| 1.0 / (2.0 * e[j] * e[j] * w[j].sqrt())).collect());
    let mut s = SeparableSymbol::new(grid, 2.0);
    s.push(&c2, |xi| real(xi * xi));
    s.push(&c1, |xi| Complex64::new(0.0, xi));
    Ok((s, l0))
}

/// The symmetrizer of the jet system.
#[derive(Debug, Clone)]
pub struct Symmetrizer {
    pub p: SeparableSymbol,
    pub q: SeparableSymbol,
    pub gamma: SeparableSymbol,
    /// `gamma^{(3/2)}` alone.
    pub gamma_principal: SeparableSymbol,
    /// Samples of `q` (the periodic factor; see `q_drift`).
    pub q_values: RealField,
    /// Mean `mu` of `eta_z^3 / (6 eta)`. On the torus the antiderivative in `q`
    /// is `mu z` plus a periodic part; the factor `exp(mu z)` is not periodic,
    /// so `q` holds the periodic factor and the drift is reported here.
    pub q_drift: f64,
}

/// `(p, q, gamma)` with, writing `w = 1 + eta_z^2` and `G0 = 1/(sqrt 2 w^{3/4})`,
///
/// ```text
/// gamma = G0 |xi|^{3/2} + G0 |xi|^{1/2} Re lambda0 / 2 - (3/4) G0_z i sgn(xi) |xi|^{1/2}
/// q     = (eta/R)^{1/3} w^{1/4} exp(int_0^z eta_z^3 / (6 eta))
/// p     = P0 |xi|^{1/2}
///         + [L1 q / G0 + (3/2) P0_z + (3/4) P0 G0_z / G0] i sgn(xi) |xi|^{-1/2}
///         - (P0 Re lambda0 / 2) |xi|^{-1/2}
/// ```
///
/// with `P0 = G0 q` and `L1` the coefficient of `i xi` in `ell^{(1)}`. The
/// `z` derivatives are analytic in terms of spectral derivatives of `eta`.
pub fn symmetrizer_symbols(eta: &RealField, radius: f64) -> Result<Symmetrizer> {
    check_radius(eta)?;
    let grid = eta.grid();
    let n = eta.len();
    let ez = eta.derivative();
    let ezz = ez.derivative();
    let (e, d, dd) = (eta.values(), ez.values(), ezz.values());
    let w: Vec<f64> = d.iter().map(|x| 1.0 + x * x).collect();
    let w_z: Vec<f64> = (0..n).map(|j| 2.0 * d[j] * dd[j]).collect();
    let g0: Vec<f64> = w.iter().map(|w| w.powf(-0.75) / SQRT_2).collect();
    let g0_z: Vec<f64> = (0..n).map(|j| -0.75 * w[j].powf(-1.75) * w_z[j] / SQRT_2).collect();
    let rel0 = re_lambda0(eta, &ez);

    // periodic antiderivative of f = eta_z^3 / (6 eta), anchored at z = 0
    let f = field(grid, (0..n).map(|j| d[j] * d[j] * d[j] / (6.0 * e[j])).collect());
    let mu = f.mean();
    let anti = f.apply_multiplier(|xi| if xi == 0.0 { ZERO } else { Complex64::new(0.0, -1.0 / xi) })?;
    let anti0 = anti.values()[0];
    let q: Vec<f64> = (0..n)
        .map(|j| {
            (e[j] / radius).cbrt() * w[j].powf(0.25) * (anti.values()[j] - anti0).exp()
        })
        .collect();
    // d/dz ln q = eta_z/(3 eta) + w_z/(4 w) + (f - mu)
    let q_z: Vec<f64> = (0..n)
        .map(|j| q[j] * (d[j] / (3.0 * e[j]) + w_z[j] / (4.0 * w[j]) + (f.values()[j] - mu)))
        .collect();
    let p0: Vec<f64> = (0..n).map(|j| g0[j] * q[j]).collect();
    let p0_z: Vec<f64> = (0..n).map(|j| g0_z[j] * q[j] + g0[j] * q_z[j]).collect();
    let l1: Vec<f64> =
        (0..n).map(|j| d[j] * (3.0 * e[j] * dd[j] - 1.0 - d[j] * d[j]) / (2.0 * e[j] * w[j].powf(2.5))).collect();

    let mut gamma_principal = SeparableSymbol::new(grid, 1.5);
    gamma_principal.push(&field(grid, g0.clone()), even_power(1.5));

    let mut gamma = gamma_principal.clone();
    gamma.push(&field(grid, (0..n).map(|j| 0.5 * g0[j] * rel0[j]).collect()), even_power(0.5));
    gamma.push(&field(grid, (0..n).map(|j| -0.75 * g0_z[j]).collect()), odd_power(0.5));

    let q_values = field(grid, q);
    let q_sym = SeparableSymbol::function(&q_values);

    let mut p = SeparableSymbol::new(grid, 0.5);
    p.push(&field(grid, p0.clone()), even_power(0.5));
    let odd_coeff = (0..n)
        .map(|j| l1[j] * q_values.values()[j] / g0[j] + 1.5 * p0_z[j] + 0.75 * p0[j] * g0_z[j] / g0[j])
        .collect();
    p.push(&field(grid, odd_coeff), odd_power(-0.5));
    p.push(&field(grid, (0..n).map(|j| -0.5 * p0[j] * rel0[j]).collect()), even_power(-0.5));

    Ok(Symmetrizer { p, q: q_sym, gamma, gamma_principal, q_values, q_drift: mu })
}

/// Default rank of the separable mollifier approximation.
pub const MOLLIFIER_RANK: usize = 8;

/// Pointwise accuracy the separable mollifier must reach on the grid.
pub const MOLLIFIER_TOL: f64 = 1e-10;

/// `J_eps^{(0)} = exp(-eps |xi|^{3/2} u(z) / sqrt 2)` with `u = w^{-3/4}`,
/// approximated by Lagrange interpolation in `u` at Chebyshev points of the
/// sampled `u` range. The rank starts at [`MOLLIFIER_RANK`] and doubles until
/// the approximation matches pointwise evaluation to [`MOLLIFIER_TOL`] on
/// every node and grid wavenumber.
pub fn mollifier_symbol(eta: &RealField, eps: f64) -> Result<SeparableSymbol> {
    check_radius(eta)?;
    let grid = eta.grid();
    let ez = eta.derivative();
    let u: Vec<f64> = ez.values().iter().map(|d| (1.0 + d * d).powf(-0.75)).collect();
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exact = move |uj: f64, xi: f64| (-eps * xi.abs().powf(1.5) * uj / SQRT_2).exp();
    if hi - lo <= 1e-15 * hi {
        let mut s = SeparableSymbol::new(grid, 0.0);
        let c = 0.5 * (lo + hi);
        s.push(&RealField::constant(grid, 1.0), move |xi| real(exact(c, xi)));
        return Ok(s);
    }
    let mut rank = MOLLIFIER_RANK;
    loop {
        let nodes: Vec<f64> = (0..rank)
            .map(|t| {
                let x = (core::f64::consts::PI * (t as f64 + 0.5) / rank as f64).cos();
                0.5 * (lo + hi) + 0.5 * (hi - lo) * x
            })
            .collect();
        let mut s = SeparableSymbol::new(grid, 0.0);
        for t in 0..rank {
            let basis: Vec<f64> = u
                .iter()
                .map(|&x| {
                    (0..rank).filter(|&r| r != t).map(|r| (x - nodes[r]) / (nodes[t] - nodes[r])).product()
                })
                .collect();
            let ut = nodes[t];
            s.push(&field(grid, basis), move |xi| real(exact(ut, xi)));
        }
        let err = (0..grid.len())
            .flat_map(|j| grid.wavenumbers().iter().map(move |&xi| (j, xi)))
            .map(|(j, xi)| (s.eval(j, xi).re - exact(u[j], xi)).abs())
            .fold(0.0, f64::max);
        if err <= MOLLIFIER_TOL || rank >= 64 {
            return Ok(s);
        }
        rank *= 2;
    }
}

/// Alinhac's good unknown `U = psi - T_B eta`.
pub fn good_unknown(eta: &RealField, psi: &RealField, b: &RealField, cut: &CutoffPair) -> Result<RealField> {
    eta.ensure_same_grid(psi)?;
    let tb = paraop_apply(&SeparableSymbol::function(b), eta, cut)?;
    Ok(psi - &tb)
}

/// `R_G = G[eta] psi - T_lambda U + T_V eta_z`, the remainder of the
/// paralinearization of the Dirichlet-Neumann operator.
pub fn paralin_residual(eta: &RealField, psi: &RealField, cut: &CutoffPair, opts: &SolverOptions) -> Result<RealField> {
    eta.ensure_same_grid(psi)?;
    let op = DnOperator::new(eta, opts)?;
    let g = op.dn(psi)?;
    paralin_residual_with(eta, psi, &g, cut)
}

/// As [`paralin_residual`] with `G[eta] psi` supplied.
pub fn paralin_residual_with(eta: &RealField, psi: &RealField, g: &RealField, cut: &CutoffPair) -> Result<RealField> {
    let tv = dno::trace_velocities(eta, psi, g)?;
    let u = good_unknown(eta, psi, &tv.b, cut)?;
    let lambda = symbol_lambda(eta)?;
    let tl = paraop_apply(&lambda, &u, cut)?;
    let tv_eta = paraop_apply(&SeparableSymbol::function(&tv.v), &eta.derivative(), cut)?;
    Ok(&(g - &tl) + &tv_eta)
}

/// Gaussian-windowed wave packet with carrier `k`, centred mid-period.
pub fn wave_packet(grid: &GridSpec, k: f64, width: f64) -> RealField {
    let c = grid.half_period();
    RealField::from_fn(grid, |z| {
        let x = z - c;
        (-x * x / (2.0 * width * width)).exp() * (k * z).cos()
    })
}

/// Relative sizes of `(T_p T_lambda - T_gamma T_q) u` and
/// `(T_q T_ell - T_gamma T_p) u` for a wave packet `u` at carrier `k`.
pub fn symmetrizer_residual(eta: &RealField, radius: f64, cut: &CutoffPair, k: f64) -> Result<(f64, f64)> {
    let sym = symmetrizer_symbols(eta, radius)?;
    let lambda = symbol_lambda(eta)?;
    let (ell, _) = symbol_ell(eta)?;
    let u = wave_packet(eta.grid(), k, 0.5);
    let t = |a: &SeparableSymbol, f: &RealField| paraop_apply(a, f, cut);
    let r1 = &t(&sym.p, &t(&lambda, &u)?)? - &t(&sym.gamma, &t(&sym.q, &u)?)?;
    let r2 = &t(&sym.q, &t(&ell, &u)?)? - &t(&sym.gamma, &t(&sym.p, &u)?)?;
    let norm = u.l2();
    Ok((r1.l2() / norm, r2.l2() / norm))
}
