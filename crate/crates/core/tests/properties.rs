use std::f64::consts::PI;

use capjet_core::bessel::{self, BesselEval};
use capjet_core::dno::{self, SolverOptions};
use capjet_core::dynamics::{self, DynamicsOptions, JetState};
use capjet_core::linstab;
use capjet_core::paradiff::{self, CutoffPair, SeparableSymbol};
use capjet_core::surface;
use capjet_core::{GridSpec, RealField};
use proptest::prelude::*;

/// A band-limited field from a few random modes.
fn field(g: &GridSpec, modes: &[(f64, f64)]) -> RealField {
    RealField::from_fn(g, |z| modes.iter().enumerate().map(|(k, &(a, ph))| a * ((k + 1) as f64 * z + ph).cos()).sum())
}

fn modes(n: usize, amp: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-amp..amp, 0.0..2.0 * PI), n)
}

fn dot(a: &RealField, b: &RealField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(ms in modes(6, 1.0), c in -1.0..1.0f64) {
        let g = GridSpec::new(2.0, 32).unwrap();
        let u = &field(&g, &ms) + c;
        let mean_sq = dot(&u, &u);
        let spec: f64 = u.to_spectral().coeffs().iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((mean_sq - spec).abs() <= 1e-13 * (1.0 + mean_sq));
    }

    #[test]
    fn spectral_roundtrip(ms in modes(8, 2.0)) {
        let g = GridSpec::new(PI, 32).unwrap();
        let u = field(&g, &ms);
        let back = u.to_spectral().to_real();
        prop_assert!((&back - &u).sup() <= 1e-13);
        prop_assert!(u.to_spectral().hermitian_defect() <= 1e-14);
    }

    #[test]
    fn translation_composes_and_commutes(ms in modes(5, 1.0), s in -3.0..3.0f64, t in -3.0..3.0f64) {
        let g = GridSpec::new(PI, 32).unwrap();
        let u = field(&g, &ms);
        prop_assert!((&u.translate(s).translate(t) - &u.translate(s + t)).sup() <= 1e-12);
        prop_assert!((&u.translate(s).derivative() - &u.derivative().translate(s)).sup() <= 1e-12);
        prop_assert!((&u.translate(g.period()) - &u).sup() <= 1e-12);
    }

    #[test]
    fn flat_dn_is_linear_and_nonnegative(a in modes(5, 1.0), b in modes(5, 1.0), c in -2.0..2.0f64, r in 0.2..3.0f64) {
        let g = GridSpec::new(PI, 32).unwrap();
        let (u, v) = (field(&g, &a), field(&g, &b));
        let lhs = dno::dn_flat(r, &(&u + &v.scale(c)));
        let rhs = &dno::dn_flat(r, &u) + &dno::dn_flat(r, &v).scale(c);
        prop_assert!((&lhs - &rhs).sup() <= 1e-12 * (1.0 + rhs.sup()));
        prop_assert!(dot(&u, &dno::dn_flat(r, &u)) >= -1e-14);
        prop_assert!(dno::dn_flat(r, &RealField::constant(&g, c)).sup() <= 1e-15);
    }

    #[test]
    fn ratio_bounds(k in 0u32..5, y in 0.0..1.0f64, x in 1e-3..300.0f64) {
        let r = bessel::ratio_i0k(k, y, x);
        prop_assert!(r.is_finite() && r.abs() <= 1.0 + 1e-14);
        let q = bessel::ratio_i1_i0(x);
        prop_assert!((0.0..1.0).contains(&q));
        // I0 is increasing, so the y = 1 ratio is the largest
        prop_assert!(bessel::ratio_i0(y, x) <= 1.0 + 1e-14);
    }

    #[test]
    fn scaled_bessel_matches_power_series(x in 0.0..2.0f64) {
        let q = 0.25 * x * x;
        let (mut t, mut s) = (1.0, 1.0);
        for j in 1..40 {
            t *= q / (j * j) as f64;
            s += t;
        }
        let lib = BesselEval::default().i0_scaled(x) * x.exp();
        prop_assert!((lib / s - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn dispersion_scaling(x in 0.01..3.0f64, r in 0.1..5.0f64, kappa in 0.0..4.0f64) {
        let s = linstab::growth_rate(r, kappa, x / r).sigma2;
        let unit = linstab::growth_rate(1.0, 1.0, x).sigma2;
        prop_assert!((s - kappa / r.powi(3) * unit).abs() <= 1e-12 * (1.0 + unit.abs()) * (1.0 + kappa / r.powi(3)));
        if kappa > 0.0 {
            prop_assert_eq!(s > 0.0, x < 1.0);
        }
    }

    #[test]
    fn cutoff_ranges(zeta in -5.0..5.0f64, theta in -5.0..5.0f64) {
        let cut = CutoffPair::default();
        let phi = cut.phi(zeta);
        let chi = cut.chi(theta, zeta);
        prop_assert!((0.0..=1.0).contains(&phi) && (0.0..=1.0).contains(&chi));
        if zeta.abs() <= 0.5 {
            prop_assert_eq!(phi, 0.0);
        }
        if zeta.abs() >= 1.0 {
            prop_assert_eq!(phi, 1.0);
        }
        if theta.abs() <= cut.eps1() * zeta.abs() {
            prop_assert_eq!(chi, 1.0);
        }
        if theta.abs() >= cut.eps2() * zeta.abs() {
            prop_assert_eq!(chi, 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn paraproduct_is_linear_and_kills_constants(eta_m in modes(3, 0.1), a in modes(6, 1.0), b in modes(6, 1.0), c in -2.0..2.0f64) {
        let g = GridSpec::new(PI, 64).unwrap();
        let eta = &field(&g, &eta_m) + 1.0;
        let cut = CutoffPair::default();
        let sym = paradiff::symbol_lambda(&eta).unwrap();
        let (u, v) = (field(&g, &a), field(&g, &b));
        let lhs = paradiff::paraop_apply(&sym, &(&u + &v.scale(c)), &cut).unwrap();
        let rhs = &paradiff::paraop_apply(&sym, &u, &cut).unwrap() + &paradiff::paraop_apply(&sym, &v, &cut).unwrap().scale(c);
        prop_assert!((&lhs - &rhs).sup() <= 1e-12 * (1.0 + rhs.sup()));
        prop_assert!(paradiff::paraop_apply(&sym, &RealField::constant(&g, c), &cut).unwrap().sup() <= 1e-12);
        prop_assert!(sym.reality_defect() <= 1e-12);
        let s = paradiff::symmetrizer_symbols(&eta, 1.0).unwrap();
        for x in [&s.p, &s.q, &s.gamma] {
            prop_assert!(x.reality_defect() <= 1e-12);
        }
    }

    #[test]
    fn function_symbol_multiplies_well_separated_frequencies(cm in modes(2, 0.5), fm in modes(12, 1.0)) {
        let g = GridSpec::new(PI, 128).unwrap();
        let c = &field(&g, &cm) + 1.0;
        // f lives on modes 20..31 and c on modes 0..2, so every pair sits inside
        // the eps1 cone and phi(D) f = f: the paraproduct is the plain product
        let f = RealField::from_fn(&g, |z| fm.iter().enumerate().map(|(k, &(a, ph))| a * ((k + 20) as f64 * z + ph).cos()).sum());
        let tc = paradiff::paraop_apply(&SeparableSymbol::function(&c), &f, &CutoffPair::default()).unwrap();
        let prod = c.zip_map(&f, |a, b| a * b).unwrap();
        prop_assert!((&tc - &prod).sup() <= 1e-12 * (1.0 + prod.sup()));
    }

    #[test]
    fn dn_is_linear_and_kills_constants(eta_m in modes(3, 0.15), a in modes(4, 1.0), b in modes(4, 1.0), c in -2.0..2.0f64) {
        let g = GridSpec::new(PI, 16).unwrap();
        let eta = &field(&g, &eta_m) + 1.0;
        let op = dno::DnOperator::new(&eta, &SolverOptions::with_cells(32, 1e-13)).unwrap();
        let (u, v) = (field(&g, &a), field(&g, &b));
        let lhs = op.dn(&(&u + &v.scale(c))).unwrap();
        let rhs = &op.dn(&u).unwrap() + &op.dn(&v).unwrap().scale(c);
        prop_assert!((&lhs - &rhs).sup() <= 1e-9 * (1.0 + rhs.sup()));
        prop_assert!(op.dn(&RealField::constant(&g, c)).unwrap().sup() <= 1e-11);
    }

    #[test]
    fn dn_commutes_with_grid_shifts(eta_m in modes(3, 0.15), a in modes(4, 1.0), shift in 0usize..16) {
        let g = GridSpec::new(PI, 16).unwrap();
        let s = shift as f64 * g.spacing();
        let eta = &field(&g, &eta_m) + 1.0;
        let psi = field(&g, &a);
        let opts = SolverOptions::with_cells(32, 1e-13);
        let moved = dno::dn_general(&eta.translate(s), &psi.translate(s), &opts).unwrap();
        let expect = dno::dn_general(&eta, &psi, &opts).unwrap().translate(s);
        prop_assert!((&moved - &expect).sup() <= 1e-9 * (1.0 + expect.sup()));
    }

    #[test]
    fn kinetic_energy_is_nonnegative(eta_m in modes(3, 0.2), a in modes(4, 1.0)) {
        let g = GridSpec::new(PI, 16).unwrap();
        let eta = &field(&g, &eta_m) + 1.0;
        let psi = field(&g, &a);
        let gp = dno::dn_general(&eta, &psi, &SolverOptions::with_cells(32, 1e-13)).unwrap();
        let e = surface::energy_parts(&eta, &psi, &gp, 1.0, 1.0).unwrap();
        prop_assert!(e.kinetic >= -1e-12);
    }

    #[test]
    fn cylinder_is_a_fixed_point(r in 0.3..3.0f64, kappa in 0.0..3.0f64) {
        let g = GridSpec::new(2.0, 16).unwrap();
        let state = JetState::equilibrium(&g, r, kappa).unwrap();
        let next = dynamics::step_rk4(&state, 0.01, &DynamicsOptions::default()).unwrap();
        prop_assert!((next.eta() - state.eta()).sup() <= 1e-13 * r);
        prop_assert!(next.psi().sup() <= 1e-13);
        let p = surface::surface_pressure(state.eta(), r, kappa).unwrap();
        prop_assert!(p.sup() <= 1e-13 * (1.0 + kappa / r));
    }
}
