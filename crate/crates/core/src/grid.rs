//! Periodic Fourier collocation grid and the fields that live on it.
//!
//! A grid covers `z in [0, 2L)` with `N` equispaced nodes. Spectral
//! coefficients are stored in transform order: slot `i` holds mode
//! `k = i` for `i < N/2` and `k = i - N` otherwise, so slot `N/2` is the
//! unpaired Nyquist mode `k = -N/2`. Wavenumbers are `xi_k = pi k / L`.
//!
//! The forward transform carries the `1/N` factor, so a constant field `c`
//! has `coeff(0) = c` and `a cos(k z)` has `coeff(+-k) = a/2`.

#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::fft::Fft;
use crate::{Error, Result};

/// Tolerance used when checking the Hermitian symmetry of multipliers.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct GridSpec {
    half_period: f64,
    points: usize,
    wavenumbers: Arc<[f64]>,
    fft: Arc<Fft>,
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.half_period.to_bits() == other.half_period.to_bits()
    }
}

impl GridSpec {
    /// Builds the grid for half period `L` and `N` points (`N` even, `N >= 8`).
    pub fn new(half_period: f64, points: usize) -> Result<Self> {
        if !(half_period > 0.0) || !half_period.is_finite() {
            return Err(Error::NonpositiveHalfPeriod(half_period));
        }
        if points % 2 == 1 {
            return Err(Error::OddPointCount(points));
        }
        if points < 8 {
            return Err(Error::TooFewPoints(points));
        }
        let wavenumbers = (0..points)
            .map(|i| PI * mode_of_slot(i, points) as f64 / half_period)
            .collect::<Vec<_>>()
            .into();
        Ok(Self { half_period, points, wavenumbers, fft: Arc::new(Fft::new(points)) })
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_period
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period() / self.points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    /// Wavenumbers in transform order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn wavenumber(&self, slot: usize) -> f64 {
        self.wavenumbers[slot]
    }

    /// Integer mode index `k` stored in `slot`.
    pub fn mode(&self, slot: usize) -> i64 {
        mode_of_slot(slot, self.points)
    }

    /// Storage slot of mode `k`, if the grid resolves it.
    pub fn slot(&self, mode: i64) -> Option<usize> {
        let half = (self.points / 2) as i64;
        if mode >= -half && mode < half {
            Some(mode.rem_euclid(self.points as i64) as usize)
        } else {
            None
        }
    }

    pub fn nyquist_slot(&self) -> usize {
        self.points / 2
    }

    /// Largest resolved `|xi|`, i.e. the Nyquist wavenumber `pi N / (2L)`.
    pub fn max_wavenumber(&self) -> f64 {
        PI * (self.points / 2) as f64 / self.half_period
    }

    /// Wavenumber spacing `pi / L`.
    pub fn fundamental(&self) -> f64 {
        PI / self.half_period
    }

    pub fn fft(&self) -> &Fft {
        &self.fft
    }

    /// Forward transform of real samples, normalized by `1/N`.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.fft.forward(buf);
        let scale = 1.0 / self.points as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    /// Inverse transform (no normalization; pairs with [`GridSpec::forward`]).
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.fft.inverse(buf);
    }

    /// Evaluates `m` on the grid wavenumbers, applying the Nyquist rule:
    /// the unpaired Nyquist slot receives the real even part
    /// `Re[(m(xi_N) + m(-xi_N)) / 2]`, which zeroes odd multipliers and keeps
    /// even ones.
    pub fn sample_multiplier(&self, m: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let nyq = self.nyquist_slot();
        self.wavenumbers
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                if i == nyq {
                    Complex64::new(0.5 * (m(xi) + m(-xi)).re, 0.0)
                } else {
                    m(xi)
                }
            })
            .collect()
    }

    /// Checks `m(-xi) = conj(m(xi))` on every paired slot and `Im m(0) = 0`.
    pub fn check_hermitian(&self, samples: &[Complex64]) -> Result<()> {
        let n = self.points;
        for i in 0..n / 2 {
            let j = (n - i) % n;
            let a = samples[i];
            let b = samples[j];
            let deviation = (b - a.conj()).norm();
            let scale = a.norm().max(b.norm()).max(1.0);
            if !(deviation <= HERMITIAN_TOL * scale) {
                return Err(Error::NonHermitianMultiplier {
                    wavenumber: self.wavenumbers[i],
                    deviation,
                });
            }
        }
        Ok(())
    }

    /// Spectral derivative of a real sample vector, written into `out`.
    /// `scratch` must hold `N` entries.
    pub fn differentiate_into(&self, values: &[f64], out: &mut [f64], scratch: &mut [Complex64]) {
        // constants differentiate to exact zeros, without transform roundoff
        if values.iter().all(|&v| v == values[0]) {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        for (s, &v) in scratch.iter_mut().zip(values) {
            *s = Complex64::new(v, 0.0);
        }
        self.apply_derivative_complex(scratch);
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o = s.re;
        }
    }

    /// Differentiates two real vectors with one complex transform.
    pub fn differentiate_pair(
        &self,
        a: &[f64],
        b: &[f64],
        da: &mut [f64],
        db: &mut [f64],
        scratch: &mut [Complex64],
    ) {
        for ((s, &x), &y) in scratch.iter_mut().zip(a).zip(b) {
            *s = Complex64::new(x, y);
        }
        self.apply_derivative_complex(scratch);
        for ((s, x), y) in scratch.iter().zip(da.iter_mut()).zip(db.iter_mut()) {
            *x = s.re;
            *y = s.im;
        }
    }

    fn apply_derivative_complex(&self, buf: &mut [Complex64]) {
        self.forward_in_place(buf);
        let nyq = self.nyquist_slot();
        for (i, (c, &xi)) in buf.iter_mut().zip(self.wavenumbers.iter()).enumerate() {
            *c = if i == nyq { Complex64::new(0.0, 0.0) } else { *c * Complex64::new(0.0, xi) };
        }
        self.inverse_in_place(buf);
    }
}

fn mode_of_slot(slot: usize, points: usize) -> i64 {
    if slot < points / 2 {
        slot as i64
    } else {
        slot as i64 - points as i64
    }
}

/// Physical samples of a real periodic function.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid: grid.clone(), values })
    }

    /// Builds a field without the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_vec_unchecked(grid: &GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: grid.clone(), values }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn constant(grid: &GridSpec, value: f64) -> Self {
        Self { grid: grid.clone(), values: vec![value; grid.len()] }
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_spectral(&self) -> SpectralField {
        SpectralField { grid: self.grid.clone(), coeffs: self.grid.forward(&self.values) }
    }

    /// `coeff_out(xi) = m(xi) coeff_in(xi)`, returned as a real field.
    ///
    /// Fails with [`Error::NonHermitianMultiplier`] when `m` would produce a
    /// complex output.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> Complex64) -> Result<RealField> {
        let samples = self.grid.sample_multiplier(m);
        self.grid.check_hermitian(&samples)?;
        Ok(self.apply_sampled(&samples))
    }

    /// Applies a multiplier already sampled with [`GridSpec::sample_multiplier`].
    pub fn apply_sampled(&self, samples: &[Complex64]) -> RealField {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward_in_place(&mut buf);
        for (c, m) in buf.iter_mut().zip(samples) {
            *c *= m;
        }
        self.grid.inverse_in_place(&mut buf);
        RealField::from_vec_unchecked(&self.grid, buf.into_iter().map(|c| c.re).collect())
    }

    /// Applies an even real multiplier `m(|xi|)` (no Hermitian check needed).
    pub fn apply_even(&self, m: impl Fn(f64) -> f64) -> RealField {
        let samples: Vec<Complex64> =
            self.grid.wavenumbers().iter().map(|&xi| Complex64::new(m(xi.abs()), 0.0)).collect();
        self.apply_sampled(&samples)
    }

    /// Spectral derivative with the Nyquist mode zeroed.
    pub fn derivative(&self) -> RealField {
        let mut out = vec![0.0; self.len()];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.len()];
        self.grid.differentiate_into(&self.values, &mut out, &mut scratch);
        RealField::from_vec_unchecked(&self.grid, out)
    }

    /// Discrete `H^s` norm: `sqrt(2L sum_k (1 + xi_k^2)^s |coeff_k|^2)`.
    ///
    /// At `s = 0` this equals the trapezoid value of `(int |u|^2 dz)^(1/2)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let coeffs = self.grid.forward(&self.values);
        let sum: f64 = coeffs
            .iter()
            .zip(self.grid.wavenumbers())
            .map(|(c, &xi)| (1.0 + xi * xi).powf(s) * c.norm_sqr())
            .sum();
        (self.grid.period() * sum).sqrt()
    }

    /// 2/3-rule filter: zeroes every mode with `|k| > N/3`.
    pub fn dealias(&self) -> RealField {
        let n = self.len() as i64;
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward_in_place(&mut buf);
        for (i, c) in buf.iter_mut().enumerate() {
            if 3 * self.grid.mode(i).abs() > n {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.grid.inverse_in_place(&mut buf);
        RealField::from_vec_unchecked(&self.grid, buf.into_iter().map(|c| c.re).collect())
    }

    /// Spectral translation: returns `u(z - shift)`.
    pub fn translate(&self, shift: f64) -> RealField {
        let samples = self.grid.sample_multiplier(|xi| Complex64::from_polar(1.0, -xi * shift));
        self.apply_sampled(&samples)
    }

    /// Cosine amplitude of mode `k`, i.e. `2 |coeff_k|` (just `|coeff_0|` for `k = 0`).
    pub fn mode_amplitude(&self, mode: i64) -> Option<f64> {
        let slot = self.grid.slot(mode)?;
        let c = self.grid.forward(&self.values)[slot];
        Some(if mode == 0 { c.norm() } else { 2.0 * c.norm() })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Trapezoid quadrature of the field over one period.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }

    /// Plain Euclidean norm of the sample vector.
    pub fn l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField::from_vec_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<RealField> {
        self.ensure_same_grid(other)?;
        Ok(RealField::from_vec_unchecked(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn scale(&self, factor: f64) -> RealField {
        self.map(|v| factor * v)
    }

    pub fn ensure_same_grid(&self, other: &RealField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

macro_rules! pointwise_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&RealField> for &RealField {
            type Output = RealField;

            /// Panics if the operands live on different grids.
            fn $method(self, rhs: &RealField) -> RealField {
                assert!(self.grid == rhs.grid, "pointwise operation across different grids");
                RealField::from_vec_unchecked(
                    &self.grid,
                    self.values.iter().zip(&rhs.values).map(|(a, b)| a $op b).collect(),
                )
            }
        }
    };
}

pointwise_op!(Add, add, +);
pointwise_op!(Sub, sub, -);
pointwise_op!(Mul, mul, *);

impl Add<f64> for &RealField {
    type Output = RealField;
    fn add(self, rhs: f64) -> RealField {
        self.map(|v| v + rhs)
    }
}

impl Sub<f64> for &RealField {
    type Output = RealField;
    fn sub(self, rhs: f64) -> RealField {
        self.map(|v| v - rhs)
    }
}

impl Mul<f64> for &RealField {
    type Output = RealField;
    fn mul(self, rhs: f64) -> RealField {
        self.scale(rhs)
    }
}

impl Neg for &RealField {
    type Output = RealField;
    fn neg(self) -> RealField {
        self.scale(-1.0)
    }
}

/// Fourier coefficients in transform order (see the module docs).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: &GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), found: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, mode: i64) -> Option<Complex64> {
        self.grid.slot(mode).map(|s| self.coeffs[s])
    }

    /// `coeff_out(xi) = m(xi) coeff_in(xi)`; no realness requirement.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> Complex64) -> SpectralField {
        let samples = self.grid.sample_multiplier(m);
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().zip(&samples).map(|(c, m)| c * m).collect(),
        }
    }

    /// Largest violation of `coeff(-k) = conj(coeff(k))`, plus the imaginary
    /// parts of the self-paired mean and Nyquist slots.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.coeffs.len();
        let mut defect = self.coeffs[0].im.abs().max(self.coeffs[n / 2].im.abs());
        for i in 1..n / 2 {
            defect = defect.max((self.coeffs[n - i] - self.coeffs[i].conj()).norm());
        }
        defect
    }

    /// Inverse transform keeping the real part.
    pub fn to_real(&self) -> RealField {
        let mut buf = self.coeffs.clone();
        self.grid.inverse_in_place(&mut buf);
        RealField::from_vec_unchecked(&self.grid, buf.into_iter().map(|c| c.re).collect())
    }

    /// Inverse transform returning complex samples.
    pub fn to_complex_samples(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        self.grid.inverse_in_place(&mut buf);
        buf
    }
}
