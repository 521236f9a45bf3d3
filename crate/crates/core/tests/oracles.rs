//! Cross-module checks against closed forms and a direct ODE integration.

use proptest::prelude::*;
use rhs_spectra_core::eigen::{eval_eigenfunction, FamilyTag};
use rhs_spectra_core::green::green_function;
use rhs_spectra_core::quadrature::QuadratureSpec;
use rhs_spectra_core::spectral::rho;
use rhs_spectra_core::transform::{inner_product, to_energy_at, RadialFunction};
use rhs_spectra_core::{BarrierConfig, ComplexEnergy};
use std::f64::consts::PI;

fn free(kappa: f64) -> BarrierConfig {
    BarrierConfig::new(kappa, 1.0, 0.0, 1.0, 2.0).unwrap()
}

/// `χ'' = κ(V - E)χ` from `χ(0) = 0`, `χ'(0) = √(κE)` with classical RK4.
fn rk4_chi(cfg: &BarrierConfig, e: f64, r_end: f64) -> f64 {
    let v = |r: f64| if r > cfg.a && r < cfg.b { cfg.v0 } else { 0.0 };
    let mut x = 0.0;
    let (mut y, mut dy) = (0.0, (cfg.kappa * e).sqrt());
    // step sizes that land exactly on a and b
    let marks = [cfg.a, cfg.b, r_end];
    for &stop in &marks {
        let n = ((stop - x) / 2e-4).ceil().max(1.0) as usize;
        let h = (stop - x) / n as f64;
        let mid = |x0: f64| v(x0 + 0.5 * h);
        for _ in 0..n {
            let pot = mid(x);
            let f = |_: f64, y: f64, dy: f64| (dy, cfg.kappa * (pot - e) * y);
            let (k1y, k1d) = f(x, y, dy);
            let (k2y, k2d) = f(x, y + 0.5 * h * k1y, dy + 0.5 * h * k1d);
            let (k3y, k3d) = f(x, y + 0.5 * h * k2y, dy + 0.5 * h * k2d);
            let (k4y, k4d) = f(x, y + h * k3y, dy + h * k3d);
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            dy += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            x += h;
        }
    }
    y
}

#[test]
fn chi_matches_direct_integration() {
    let cfg = BarrierConfig::default();
    for e in [0.3, 0.8, 1.7, 4.0] {
        let want = rk4_chi(&cfg, e, 3.5);
        let got = eval_eigenfunction(&cfg, FamilyTag::Chi, ComplexEnergy::real(e), 3.5).unwrap();
        assert!(
            (got.re - want).abs() < 1e-9 * want.abs().max(1.0),
            "E={e}: {got} vs {want}"
        );
        assert!(got.im.abs() < 1e-12, "E={e}: {got}");
    }
}

#[test]
fn free_transform_of_r_exp() {
    // ∫ r e^{-r} sin(kr) dr = 2k / (1 + k²)², times √ρ = (πk)^{-1/2}
    let cfg = free(1.0);
    let f = RadialFunction::exp_poly(&cfg, 1.0, &[0.0, 1.0]).unwrap();
    let es = [0.1, 0.5, 1.0, 2.5, 6.0];
    let got = to_energy_at(&cfg, &f, &es, &QuadratureSpec::default()).unwrap();
    for (&e, g) in es.iter().zip(&got) {
        let k = e.sqrt();
        let want = 2.0 * k / (1.0 + k * k).powi(2) / (PI * k).sqrt();
        assert!((g - want).norm() < 1e-9 * want, "E={e}: {g} vs {want}");
    }
}

#[test]
fn free_position_integrals() {
    let cfg = free(1.0);
    let quad = QuadratureSpec::default();
    let f = RadialFunction::exp_poly(&cfg, 1.0, &[0.0, 1.0]).unwrap();
    let g = RadialFunction::exp_poly(&cfg, 2.0, &[1.0]).unwrap();
    // ∫ r e^{-3r} dr = 1/9
    let v = inner_product(&cfg, &f, &g, &quad).unwrap();
    assert!((v.re - 1.0 / 9.0).abs() < 1e-14 && v.im == 0.0, "{v}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_density(kappa in 0.2f64..5.0, e in 0.01f64..50.0) {
        let cfg = free(kappa);
        let want = kappa / (PI * (kappa * e).sqrt());
        let got = rho(&cfg, e).unwrap().rho;
        prop_assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
    }

    #[test]
    fn free_green_below_spectrum(
        kappa in 0.2f64..5.0,
        e in -20.0f64..-0.05,
        r in 0.01f64..6.0,
        s in 0.01f64..6.0,
    ) {
        // (E - h)G = δ with G'(s+) - G'(s-) = κ
        let cfg = free(kappa);
        let q = (-kappa * e).sqrt();
        let (lo, hi) = (r.min(s), r.max(s));
        let want = -(kappa / q) * (q * lo).sinh() * (-q * hi).exp();
        let got = green_function(&cfg, r, s, ComplexEnergy::real(e)).unwrap();
        prop_assert!((got.re - want).abs() < 1e-12 * want.abs().max(1e-300), "{got} vs {want}");
        prop_assert!(got.im.abs() <= 1e-14 * want.abs());
    }

    #[test]
    fn green_is_symmetric(
        er in -4.0f64..6.0,
        ei in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
        r in 0.05f64..4.0,
        s in 0.05f64..4.0,
    ) {
        let cfg = BarrierConfig::default();
        let e = ComplexEnergy::new(er, ei);
        let a = green_function(&cfg, r, s, e).unwrap();
        let b = green_function(&cfg, s, r, e).unwrap();
        prop_assert!((a - b).norm() <= 1e-13 * a.norm().max(1e-300));
        // reflection across the real axis
        let c = green_function(&cfg, r, s, e.conj()).unwrap();
        prop_assert!((c - a.conj()).norm() <= 1e-12 * a.norm().max(1e-300));
    }
}
