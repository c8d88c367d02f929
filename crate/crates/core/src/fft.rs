//! Complex discrete Fourier transforms of arbitrary length.
//!
//! Power-of-two lengths use an in-place iterative radix-2 kernel; every other
//! length goes through Bluestein's chirp-z reformulation on a padded
//! power-of-two buffer. Transforms are unnormalized:
//! `forward` computes `X_k = sum_j x_j exp(-2 pi i j k / n)` and `inverse`
//! uses the conjugate kernel.

#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;
use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone)]
enum Plan {
    Radix2 { twiddles: Vec<Complex64>, reversed: Vec<usize> },
    Bluestein { chirp: Vec<Complex64>, kernel_hat: Vec<Complex64>, inner: Box<Fft> },
}

/// A reusable transform plan for one length.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    plan: Plan,
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "transform length must be positive");
        if len.is_power_of_two() {
            Self { len, plan: radix2_plan(len) }
        } else {
            Self { len, plan: bluestein_plan(len) }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.len, "buffer length does not match the plan");
        match &self.plan {
            Plan::Radix2 { twiddles, reversed } => radix2(buf, twiddles, reversed, inverse),
            Plan::Bluestein { chirp, kernel_hat, inner } => {
                if inverse {
                    buf.iter_mut().for_each(|c| *c = c.conj());
                }
                bluestein(buf, chirp, kernel_hat, inner);
                if inverse {
                    buf.iter_mut().for_each(|c| *c = c.conj());
                }
            }
        }
    }
}

fn radix2_plan(len: usize) -> Plan {
    let twiddles = (0..len / 2)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
        .collect();
    let bits = len.trailing_zeros();
    let reversed = (0..len)
        .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
        .collect();
    Plan::Radix2 { twiddles, reversed }
}

fn radix2(buf: &mut [Complex64], twiddles: &[Complex64], reversed: &[usize], inverse: bool) {
    let n = buf.len();
    for (i, &j) in reversed.iter().enumerate() {
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut span = 2;
    while span <= n {
        let half = span / 2;
        let stride = n / span;
        for start in (0..n).step_by(span) {
            for j in 0..half {
                let w = twiddles[j * stride];
                let w = if inverse { w.conj() } else { w };
                let u = buf[start + j];
                let v = buf[start + j + half] * w;
                buf[start + j] = u + v;
                buf[start + j + half] = u - v;
            }
        }
        span *= 2;
    }
}

fn bluestein_plan(len: usize) -> Plan {
    let padded = (2 * len - 1).next_power_of_two();
    // k^2 is reduced mod 2n before scaling so the phase stays accurate for large k.
    let chirp: Vec<Complex64> = (0..len)
        .map(|k| {
            let k2 = (k as u128 * k as u128) % (2 * len as u128);
            Complex64::from_polar(1.0, -PI * k2 as f64 / len as f64)
        })
        .collect();
    let mut kernel = vec![Complex64::new(0.0, 0.0); padded];
    kernel[0] = chirp[0].conj();
    for k in 1..len {
        kernel[k] = chirp[k].conj();
        kernel[padded - k] = chirp[k].conj();
    }
    let inner = Fft::new(padded);
    inner.forward(&mut kernel);
    Plan::Bluestein { chirp, kernel_hat: kernel, inner: Box::new(inner) }
}

fn bluestein(buf: &mut [Complex64], chirp: &[Complex64], kernel_hat: &[Complex64], inner: &Fft) {
    let n = buf.len();
    let padded = inner.len();
    let mut work = vec![Complex64::new(0.0, 0.0); padded];
    for k in 0..n {
        work[k] = buf[k] * chirp[k];
    }
    inner.forward(&mut work);
    for (w, h) in work.iter_mut().zip(kernel_hat) {
        *w *= h;
    }
    inner.inverse(&mut work);
    let scale = 1.0 / padded as f64;
    for k in 0..n {
        buf[k] = work[k] * chirp[k] * scale;
    }
}

/// Reference `O(n^2)` DFT used to check the fast paths.
pub fn naive_dft(input: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = input.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    (0..n)
        .map(|k| {
            input
                .iter()
                .enumerate()
                .map(|(j, x)| {
                    let phase = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    x * Complex64::new(phase.cos(), phase.sin())
                })
                .sum()
        })
        .collect()
}
