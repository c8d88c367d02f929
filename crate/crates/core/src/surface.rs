//! Mean curvature, Young-Laplace pressure and the Hamiltonian of a jet.
//!
//! Sign convention: the flat cylinder has `H(R) = -1/(2R)` (half the
//! textbook mean curvature, negative for a convex cross-section).

#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use crate::dynamics::JetState;
use crate::grid::RealField;
use crate::{Error, Result};

fn ensure_positive(eta: &RealField) -> Result<()> {
    let min = eta.min();
    if !(min > 0.0) {
        return Err(Error::NonpositiveRadius { min_radius: min });
    }
    Ok(())
}

/// `H = (eta_z / (2 sqrt(1 + eta_z^2)))_z - 1/(2 eta sqrt(1 + eta_z^2))`.
pub fn mean_curvature(eta: &RealField) -> Result<RealField> {
    ensure_positive(eta)?;
    let eta_z = eta.derivative();
    let root: Vec<f64> = eta_z.values().iter().map(|d| (1.0 + d * d).sqrt()).collect();
    let slope = RealField::from_vec_unchecked(
        eta.grid(),
        eta_z.values().iter().zip(&root).map(|(d, r)| d / (2.0 * r)).collect(),
    );
    let bend = slope.derivative();
    let h = bend
        .values()
        .iter()
        .zip(eta.values())
        .zip(&root)
        .map(|((b, e), r)| b - 1.0 / (2.0 * e * r))
        .collect();
    Ok(RealField::from_vec_unchecked(eta.grid(), h))
}

/// `P = -kappa/(2R) - kappa H(eta)`; zero on the flat cylinder.
pub fn surface_pressure(eta: &RealField, radius: f64, kappa: f64) -> Result<RealField> {
    let h = mean_curvature(eta)?;
    Ok(h.map(|v| -kappa * (v + 0.5 / radius)))
}

/// `eta sqrt(1 + eta_z^2)`: the area element of the surface of revolution per unit angle.
pub fn area_density(eta: &RealField) -> RealField {
    let eta_z = eta.derivative();
    eta.zip_map(&eta_z, |e, d| e * (1.0 + d * d).sqrt()).expect("same grid")
}

/// The two parts of the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    /// `pi int psi eta G psi dz`
    pub kinetic: f64,
    /// `pi kappa int eta (sqrt(1 + eta_z^2) - 1) - (eta - R)^2 / (2R) dz`
    pub potential: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

/// Energy split for explicit fields; `g` must be `G[eta] psi`.
pub fn energy_parts(eta: &RealField, psi: &RealField, g: &RealField, radius: f64, kappa: f64) -> Result<Energy> {
    eta.ensure_same_grid(psi)?;
    eta.ensure_same_grid(g)?;
    ensure_positive(eta)?;
    let dz = eta.grid().spacing();
    let pi = core::f64::consts::PI;
    let kinetic: f64 = psi
        .values()
        .iter()
        .zip(eta.values())
        .zip(g.values())
        .map(|((p, e), gv)| p * e * gv)
        .sum::<f64>()
        * dz
        * pi;
    let eta_z = eta.derivative();
    let potential: f64 = eta
        .values()
        .iter()
        .zip(eta_z.values())
        .map(|(&e, &d)| {
            let q = d * d;
            // sqrt(1 + q) - 1 without cancellation
            let stretch = q / ((1.0 + q).sqrt() + 1.0);
            e * stretch - (e - radius) * (e - radius) / (2.0 * radius)
        })
        .sum::<f64>()
        * dz
        * pi
        * kappa;
    Ok(Energy { kinetic, potential })
}

/// Hamiltonian of a state, with `g = G[eta] psi` for its periodic potential.
pub fn hamiltonian_energy(state: &JetState, g: &RealField) -> Result<f64> {
    energy_parts(state.eta(), state.psi(), g, state.radius(), state.kappa()).map(|e| e.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dno::{dn_flat, dn_general, SolverOptions};
    use crate::grid::GridSpec;
    use core::f64::consts::PI;

    #[test]
    fn flat_cylinder() {
        let g = GridSpec::new(PI, 16).unwrap();
        let eta = RealField::constant(&g, 0.8);
        let h = mean_curvature(&eta).unwrap();
        assert!(h.values().iter().all(|v| (v + 1.0 / 1.6).abs() < 1e-15));
        assert!(surface_pressure(&eta, 0.8, 2.0).unwrap().sup() < 1e-15);
        let bumpy = RealField::from_fn(&g, |z| 1.0 + 0.2 * z.cos());
        assert_eq!(surface_pressure(&bumpy, 1.0, 0.0).unwrap().sup(), 0.0);
        let bad = RealField::from_fn(&g, |z| z.sin());
        assert!(mean_curvature(&bad).is_err());
    }

    #[test]
    fn sphere_cap() {
        // cap sqrt(rho^2 - x^2) on the central third, blended by a smooth
        // plateau into a constant near the period ends
        let (rho, l) = (2.0, 1.0);
        let g = GridSpec::new(l, 256).unwrap();
        let f = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
        let step = |t: f64| f(t) / (f(t) + f(1.0 - t));
        let plateau = |x: f64| step((0.9 - x.abs()) / (0.9 - 1.0 / 3.0));
        let far = (rho * rho - 0.81f64).sqrt();
        let eta = RealField::from_fn(&g, |z| {
            let x = z - l;
            let w = plateau(x);
            w * (rho * rho - x * x).sqrt() + (1.0 - w) * far
        });
        let h = mean_curvature(&eta).unwrap();
        let mut checked = 0;
        for j in 0..256 {
            let x = g.node(j) - l;
            if x.abs() <= l / 3.0 {
                assert!((h.values()[j] + 1.0 / rho).abs() < 1e-6, "x = {x}: {}", h.values()[j]);
                checked += 1;
            }
        }
        assert!(checked > 80);
    }

    #[test]
    fn curvature_linearization() {
        let g = GridSpec::new(PI, 32).unwrap();
        let (r, a, k) = (1.3, 1e-5, 3.0);
        let eta = RealField::from_fn(&g, |z| r + a * (k * z).cos());
        let h = mean_curvature(&eta).unwrap().map(|v| v + 0.5 / r);
        // project onto cos(kz)
        let proj = h.zip_map(&RealField::from_fn(&g, |z| (k * z).cos()), |a, b| a * b).unwrap().integral() / PI;
        let want = a * (-k * k / 2.0 + 1.0 / (2.0 * r * r));
        assert!((proj - want).abs() < 1e-6 * want.abs(), "{proj} {want}");
    }

    #[test]
    fn area_density_matches_parametrization() {
        // dS = eta sqrt(1 + eta_z^2) dtheta dz integrated in theta over 2 pi
        let g = GridSpec::new(PI, 64).unwrap();
        let eta = RealField::from_fn(&g, |z| 1.0 + 0.2 * z.cos());
        let surface: f64 = (0..64)
            .map(|j| {
                let z = g.node(j);
                let e = 1.0 + 0.2 * z.cos();
                let d = -0.2 * z.sin();
                2.0 * PI * e * (1.0 + d * d).sqrt()
            })
            .sum::<f64>()
            * g.spacing();
        assert!((area_density(&eta).integral() - surface / (2.0 * PI)).abs() < 1e-10);
    }

    #[test]
    fn equilibrium_energy_is_zero() {
        let g = GridSpec::new(PI, 16).unwrap();
        let eta = RealField::constant(&g, 1.0);
        let psi = RealField::zeros(&g);
        let e = energy_parts(&eta, &psi, &dn_flat(1.0, &psi), 1.0, 1.0).unwrap();
        assert_eq!(e.total(), 0.0);
    }

    #[test]
    fn potential_energy_against_quadrature() {
        let g = GridSpec::new(PI, 64).unwrap();
        let (a, k) = (0.05, 2.0);
        let eta = RealField::from_fn(&g, |z| 1.0 + a * (k * z).cos());
        let zero = RealField::zeros(&g);
        let e = energy_parts(&eta, &zero, &zero, 1.0, 1.0).unwrap();
        // midpoint rule with the analytic derivative, many points
        let n = 20000;
        let h = 2.0 * PI / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let z = (i as f64 + 0.5) * h;
                let e = 1.0 + a * (k * z).cos();
                let d = -a * k * (k * z).sin();
                e * ((1.0 + d * d).sqrt() - 1.0) - (e - 1.0) * (e - 1.0) / 2.0
            })
            .sum::<f64>()
            * h
            * PI;
        assert!(e.potential > 0.0);
        assert!((e.potential - oracle).abs() < 1e-9 * oracle);
        assert_eq!(e.kinetic, 0.0);
    }

    #[test]
    fn kinetic_energy_is_nonnegative() {
        let g = GridSpec::new(PI, 32).unwrap();
        let eta = RealField::from_fn(&g, |z| 1.0 + 0.1 * (z + 0.4).cos());
        for seed in 0..5u32 {
            let s = seed as f64;
            let psi = RealField::from_fn(&g, |z| (z + s).sin() + 0.3 * (2.0 * z - s).cos() + 0.1 * (5.0 * z).sin());
            let gpsi = dn_general(&eta, &psi, &SolverOptions::with_cells(64, 1e-12)).unwrap();
            let e = energy_parts(&eta, &psi, &gpsi, 1.0, 1.0).unwrap();
            assert!(e.kinetic > 0.0);
        }
    }
}
