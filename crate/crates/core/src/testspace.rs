//! Constructible elements of the test space Φ, the `‖·‖ₙ,ₘ` norms, domain
//! diagnostics and Dirac kets `|E⟩`.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::bump::Bump;
use crate::error::{Error, Result};
use crate::model::BarrierConfig;
use crate::quadrature::{fd_weights, QuadratureSpec};
use crate::spectral::DeltaEigenfunction;
use crate::transform::{
    make_packet, to_energy, to_energy_at, weighted_inner_product, EnergyFunction, EnergyProfile, RadialFunction,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Step of the one-sided difference stencils.
pub const STENCIL_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    /// `φ = ∫ g(E) σ(r;E) dE` for a compactly supported smooth `g`.
    SpectralProfile,
    /// A smooth bump whose support avoids `0`, `a` and `b`.
    PositionBump,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub kind: TestKind,
    pub function: RadialFunction,
    /// `Uφ` when known; exact for spectral profiles.
    pub cached_transform: Option<EnergyFunction>,
}

impl TestFunction {
    pub fn eval(&self, r: f64) -> Complex64 {
        self.function.eval(r)
    }

    /// `hφ`, again a test function of the same kind.
    pub fn apply_h(&self, cfg: &BarrierConfig) -> Result<TestFunction> {
        let function = self.function.apply_h(cfg)?;
        let cached_transform = match &self.function {
            RadialFunction::Packet(p) => Some(EnergyFunction::from_profile(p.profile.times_energy())),
            _ => None,
        };
        Ok(TestFunction {
            kind: self.kind,
            function,
            cached_transform,
        })
    }

    pub fn apply_h_power(&self, cfg: &BarrierConfig, n: u32) -> Result<TestFunction> {
        let mut f = self.clone();
        for _ in 0..n {
            f = f.apply_h(cfg)?;
        }
        Ok(f)
    }

    /// Caches `to_energy(φ)` for later ket evaluations.
    pub fn with_transform(mut self, cfg: &BarrierConfig, quad: &QuadratureSpec) -> Result<Self> {
        if self.cached_transform.is_none() {
            self.cached_transform = Some(to_energy(cfg, &self.function, quad)?);
        }
        Ok(self)
    }

    /// Energy interval outside of which `Uφ` vanishes, when known exactly.
    pub fn energy_support(&self) -> Option<(f64, f64)> {
        self.cached_transform.as_ref()?.profile().map(|p| p.support())
    }
}

/// The spectral test function with profile `amplitude · ψ((E - center)/halfwidth)`.
pub fn make_spectral_test_function(
    cfg: &BarrierConfig,
    center: f64,
    halfwidth: f64,
    amplitude: f64,
    quad: &QuadratureSpec,
) -> Result<TestFunction> {
    let profile = EnergyProfile::new(cfg, center, halfwidth, amplitude)?;
    let function = make_packet(cfg, profile.clone(), quad)?;
    Ok(TestFunction {
        kind: TestKind::SpectralProfile,
        function,
        cached_transform: Some(EnergyFunction::from_profile(profile)),
    })
}

/// `amplitude · ψ((r - center)/halfwidth)`.
pub fn make_position_bump(cfg: &BarrierConfig, center: f64, halfwidth: f64, amplitude: f64) -> Result<TestFunction> {
    Ok(TestFunction {
        kind: TestKind::PositionBump,
        function: RadialFunction::bump(cfg, center, halfwidth, amplitude)?,
        cached_transform: None,
    })
}

/// `‖φ‖ₙ,ₘ = (∫ |(r+1)ⁿ (h+1)ᵐ φ|² dr)^{1/2}`.
pub fn phi_norm(cfg: &BarrierConfig, phi: &RadialFunction, n: u32, m: u32, quad: &QuadratureSpec) -> Result<f64> {
    if m > 0 && !phi.supports_h() {
        return Err(Error::CapabilityError {
            what: "h cannot be applied to this function",
        });
    }
    let g = phi.apply_h_plus_one(cfg, m)?;
    Ok(weighted_inner_product(cfg, &g, &g, n, quad)?.re.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `φ(0) = 0`.
    VanishesAtOrigin,
    /// `hᵐφ(0) = 0`.
    PowerVanishesAtOrigin,
    /// `φ⁽ⁿ⁾ = 0` at `a` or `b`, from one side.
    DerivativeVanishes,
    /// `hᵐφ` and its first derivative continuous across `a` or `b`.
    PowerMatched,
    /// `‖φ‖ₙ,ₘ < ∞`.
    NormFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The function does not support the operation the check needs.
    Unavailable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipCheck {
    pub condition: Condition,
    /// Derivative order, or `n` of the norm.
    pub n: u32,
    /// Power of `h`, or `m` of the norm.
    pub m: u32,
    /// Radius where the check was made.
    pub point: Option<f64>,
    /// `None` for the left limit, `Some(true)` for the right one.
    pub right_side: Option<bool>,
    pub value: f64,
    pub threshold: f64,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub kind: &'static str,
    pub max_order: u32,
    pub checks: Vec<MembershipCheck>,
    /// `C^∞` on `[0, ∞)` by construction; `None` when not known.
    pub smooth: Option<bool>,
    /// `φ` and `φ'` absolutely continuous by construction.
    pub ac2: Option<bool>,
}

impl MembershipReport {
    pub fn passed(&self, condition: Condition) -> bool {
        self.checks
            .iter()
            .filter(|c| c.condition == condition)
            .all(|c| c.status == CheckStatus::Pass)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == CheckStatus::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &MembershipCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

/// Largest `|f|` on a uniform sample of its numerical support.
fn sup_estimate(f: &RadialFunction, tol: f64) -> f64 {
    let (lo, hi) = f.support(tol, 0);
    if !(hi > lo) {
        return 0.0;
    }
    let n = 4000;
    (0..=n)
        .map(|i| f.eval(lo + (hi - lo) * i as f64 / n as f64).norm())
        .fold(0.0, f64::max)
}

/// One-sided `n`-th derivative at `p`: exact when available, otherwise a
/// sixth-order one-sided stencil. Returns the value and its noise floor
/// relative to `sup |f|`.
fn one_sided(f: &RadialFunction, p: f64, n: usize, right_side: bool) -> (Complex64, f64) {
    if let Some(d) = f.derivative(p, n, right_side) {
        return (d, 0.0);
    }
    let sign = if right_side { 1.0 } else { -1.0 };
    let xs: Vec<f64> = (0..n + 6).map(|j| p + sign * STENCIL_STEP * j as f64).collect();
    let w = fd_weights(p, &xs, n);
    let d = xs.iter().zip(&w).fold(ZERO, |acc, (&x, &c)| acc + f.eval(x) * c);
    let noise = 1e3 * f64::EPSILON * w.iter().map(|c| c.abs()).sum::<f64>();
    (d, noise)
}

/// Necessary conditions for `φ ∈ Φ`, checked up to `max_order`.
///
/// Reports the literal conditions `φ⁽ⁿ⁾(a) = φ⁽ⁿ⁾(b) = 0` together with the
/// weaker matching of `hᵐφ` across the barrier edges; the two disagree for
/// spectral test functions, which are in every `D(Hⁿ)` without vanishing at
/// `a` and `b`.
pub fn membership_report(
    cfg: &BarrierConfig,
    phi: &RadialFunction,
    max_order: u32,
    quad: &QuadratureSpec,
) -> MembershipReport {
    let mut checks = Vec::new();
    let sup = sup_estimate(phi, quad.tol);
    let floor = 1e-8;
    let threshold = |scale: f64, noise: f64| (floor + noise) * scale.max(f64::MIN_POSITIVE);

    let v0 = phi.eval(0.0).norm();
    checks.push(MembershipCheck {
        condition: Condition::VanishesAtOrigin,
        n: 0,
        m: 0,
        point: Some(0.0),
        right_side: Some(true),
        value: v0,
        threshold: threshold(sup, 0.0),
        status: status(v0 <= threshold(sup, 0.0)),
    });

    for p in [cfg.a, cfg.b] {
        for n in 0..=max_order {
            for right_side in [false, true] {
                let (d, noise) = one_sided(phi, p, n as usize, right_side);
                let thr = threshold(sup, noise);
                checks.push(MembershipCheck {
                    condition: Condition::DerivativeVanishes,
                    n,
                    m: 0,
                    point: Some(p),
                    right_side: Some(right_side),
                    value: d.norm(),
                    threshold: thr,
                    status: status(d.norm() <= thr),
                });
            }
        }
    }

    let mut power = Some(phi.clone());
    for m in 0..=max_order {
        let Some(g) = power.take() else {
            for condition in [Condition::PowerVanishesAtOrigin, Condition::PowerMatched] {
                checks.push(unavailable(condition, 0, m));
            }
            continue;
        };
        let g_sup = sup_estimate(&g, quad.tol);
        if m > 0 {
            let v = g.eval(0.0).norm();
            checks.push(MembershipCheck {
                condition: Condition::PowerVanishesAtOrigin,
                n: 0,
                m,
                point: Some(0.0),
                right_side: Some(true),
                value: v,
                threshold: threshold(g_sup, 0.0),
                status: status(v <= threshold(g_sup, 0.0)),
            });
        }
        for p in [cfg.a, cfg.b] {
            for n in 0..=1usize {
                let (l, nl) = one_sided(&g, p, n, false);
                let (r, nr) = one_sided(&g, p, n, true);
                let jump = (r - l).norm();
                let thr = threshold(g_sup, nl + nr);
                checks.push(MembershipCheck {
                    condition: Condition::PowerMatched,
                    n: n as u32,
                    m,
                    point: Some(p),
                    right_side: None,
                    value: jump,
                    threshold: thr,
                    status: status(jump <= thr),
                });
            }
        }
        power = if g.supports_h() { g.apply_h(cfg).ok() } else { None };
    }

    for n in 0..=max_order {
        for m in 0..=max_order {
            checks.push(match phi_norm(cfg, phi, n, m, quad) {
                Ok(v) => MembershipCheck {
                    condition: Condition::NormFinite,
                    n,
                    m,
                    point: None,
                    right_side: None,
                    value: v,
                    threshold: f64::INFINITY,
                    status: status(v.is_finite()),
                },
                Err(Error::CapabilityError { .. }) => unavailable(Condition::NormFinite, n, m),
                Err(_) => MembershipCheck {
                    condition: Condition::NormFinite,
                    n,
                    m,
                    point: None,
                    right_side: None,
                    value: f64::NAN,
                    threshold: f64::INFINITY,
                    status: CheckStatus::Fail,
                },
            });
        }
    }

    let (smooth, ac2) = match phi {
        RadialFunction::Bump(_) => (Some(true), Some(true)),
        RadialFunction::Packet(_) => (None, Some(true)),
        _ => (None, None),
    };
    MembershipReport {
        kind: phi.kind(),
        max_order,
        checks,
        smooth,
        ac2,
    }
}

fn status(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

fn unavailable(condition: Condition, n: u32, m: u32) -> MembershipCheck {
    MembershipCheck {
        condition,
        n,
        m,
        point: None,
        right_side: None,
        value: f64::NAN,
        threshold: f64::NAN,
        status: CheckStatus::Unavailable,
    }
}

/// The ket `|E⟩`, labelled by a spectral energy off the exclusion bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KetHandle {
    pub energy: f64,
}

impl KetHandle {
    pub fn new(cfg: &BarrierConfig, energy: f64) -> Result<Self> {
        if !(energy > 0.0) || !cfg.is_admissible_energy(energy) {
            return Err(Error::Domain {
                what: "ket energy",
                value: energy,
            });
        }
        Ok(KetHandle { energy })
    }
}

/// `⟨φ|E⟩ = conj(φ̂(E))` from the radial integral.
pub fn ket_action_direct(
    cfg: &BarrierConfig,
    phi: &RadialFunction,
    e: f64,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    let ket = KetHandle::new(cfg, e)?;
    Ok(to_energy_at(cfg, phi, &[ket.energy], quad)?[0].conj())
}

/// `⟨φ|E⟩`, from the cached transform when present.
pub fn ket_action(cfg: &BarrierConfig, phi: &TestFunction, e: f64, quad: &QuadratureSpec) -> Result<Complex64> {
    let ket = KetHandle::new(cfg, e)?;
    match &phi.cached_transform {
        Some(t) => Ok(t.eval(ket.energy).conj()),
        None => ket_action_direct(cfg, &phi.function, e, quad),
    }
}

/// `|⟨hⁿφ|E⟩ - Eⁿ⟨φ|E⟩| / |Eⁿ⟨φ|E⟩|`, with `⟨hⁿφ|E⟩` from the radial
/// integral of `hⁿφ`. Zero when `E` lies outside a known energy support.
pub fn ket_eigen_check(cfg: &BarrierConfig, phi: &TestFunction, e: f64, n: u32, quad: &QuadratureSpec) -> Result<f64> {
    KetHandle::new(cfg, e)?;
    if let Some((lo, hi)) = phi.energy_support() {
        if e <= lo || e >= hi {
            return Ok(0.0);
        }
    }
    let hn = phi.function.apply_h_power(cfg, n)?;
    let lhs = ket_action_direct(cfg, &hn, e, quad)?;
    let rhs = ket_action(cfg, phi, e, quad)? * e.powi(n as i32);
    let diff = (lhs - rhs).norm();
    if diff == 0.0 {
        return Ok(0.0);
    }
    Ok(diff / (rhs.norm() + f64::MIN_POSITIVE))
}

/// `M(E) = sup_r |σ(r;E)|`, so that `|⟨φ|E⟩| ≤ M(E) ‖φ‖₁,₀`.
pub fn ket_bound(cfg: &BarrierConfig, e: f64) -> Result<f64> {
    KetHandle::new(cfg, e)?;
    Ok(DeltaEigenfunction::new(cfg, e)?.sup_norm())
}

/// `|⟨φ|E⟩ - conj(φ̂(E))|` with `φ̂` from the energy transform.
pub fn schwartz_delta_check(cfg: &BarrierConfig, phi: &TestFunction, e: f64, quad: &QuadratureSpec) -> Result<f64> {
    let ket = ket_action(cfg, phi, e, quad)?;
    let hat = match &phi.cached_transform {
        Some(t) => t.eval(e),
        None => to_energy(cfg, &phi.function, quad)?.eval(e),
    };
    Ok((ket - hat.conj()).norm())
}

/// Boundary terms `[φ'σ - φσ']` at `r`, which vanish beyond the support of
/// a bump.
pub fn surface_terms(phi: &RadialFunction, sigma: &DeltaEigenfunction, r: f64) -> Option<(Complex64, Complex64)> {
    let d0 = phi.derivative(r, 0, true)?;
    let d1 = phi.derivative(r, 1, true)?;
    Some((d1 * sigma.value(r), d0 * sigma.derivative(r, 1)))
}

/// Bump parameters used to build a test function; handy for reports.
pub fn bump_of(phi: &TestFunction) -> Option<Bump> {
    match (&phi.function, &phi.cached_transform) {
        (RadialFunction::Bump(b), _) => Some(b.bump),
        (_, Some(t)) => t.profile().map(|p| p.bump),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::l2_norm;
    use proptest::prelude::*;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn cfg() -> BarrierConfig {
        BarrierConfig::default()
    }

    #[test]
    fn position_bump_examples() {
        let cfg = cfg();
        let f = make_position_bump(&cfg, 4.0, 1.0, 2.0).unwrap();
        assert!((f.eval(4.0).re - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(matches!(
            make_position_bump(&cfg, 1.0, 0.5, 1.0),
            Err(Error::SupportError { .. })
        ));
        let g = make_position_bump(&cfg, 0.5, 0.3, 1.0).unwrap();
        assert_eq!(g.eval(0.0), ZERO);
        assert_eq!(g.eval(0.81), ZERO);
        assert!(make_position_bump(&cfg, 2.1, 0.3, 1.0).is_err());
    }

    #[test]
    fn spectral_profile_rules() {
        let cfg = cfg();
        assert!(matches!(
            make_spectral_test_function(&cfg, 1.0, 0.5, 1.0, &quad()),
            Err(Error::SupportError { .. })
        ));
        let f = make_spectral_test_function(&cfg, 6.0, 4.0, 1.0, &quad()).unwrap();
        assert_eq!(f.kind, TestKind::SpectralProfile);
        assert_eq!(f.energy_support(), Some((2.0, 10.0)));
    }

    #[test]
    fn free_weighted_norm() {
        let free = BarrierConfig::with_height(0.0).unwrap();
        let f = RadialFunction::exp_poly(&free, 1.0, &[0.0, 1.0]).unwrap();
        let n = phi_norm(&free, &f, 1, 0, &quad()).unwrap();
        assert!((n - 1.75f64.sqrt()).abs() < 1e-10, "{n}");
        let n0 = phi_norm(&free, &f, 0, 0, &quad()).unwrap();
        assert!((n0 - l2_norm(&free, &f, &quad()).unwrap()).abs() < 1e-15);
        // (h+1)φ = (2 - r + r) e^{-r} = 2 e^{-r}.
        let n01 = phi_norm(&free, &f, 0, 1, &quad()).unwrap();
        assert!((n01 - 2.0f64.sqrt()).abs() < 1e-10, "{n01}");
    }

    #[test]
    fn sampled_functions_have_no_h() {
        let s = crate::transform::Sampled::cubic(
            (0..10).map(|i| i as f64).collect(),
            alloc::vec![Complex64::new(1.0, 0.0); 10],
        )
        .unwrap();
        let f = RadialFunction::Sampled(s);
        assert!(matches!(
            phi_norm(&cfg(), &f, 0, 1, &quad()),
            Err(Error::CapabilityError { .. })
        ));
        let rep = membership_report(&cfg(), &f, 1, &quad());
        assert!(rep.checks.iter().any(|c| c.status == CheckStatus::Unavailable));
    }

    #[test]
    fn exponential_fails_derivative_condition_at_a() {
        let cfg = cfg();
        let f = RadialFunction::exp_poly(&cfg, 1.0, &[0.0, 1.0]).unwrap();
        let rep = membership_report(&cfg, &f, 3, &quad());
        assert!(rep.passed(Condition::VanishesAtOrigin));
        let second = rep
            .checks
            .iter()
            .find(|c| c.condition == Condition::DerivativeVanishes && c.n == 2 && c.point == Some(1.0))
            .unwrap();
        assert_eq!(second.status, CheckStatus::Fail);
        assert!((second.value - (-1.0f64).exp()).abs() < 1e-12);
        // hφ jumps by V₀φ at a.
        assert!(!rep.passed(Condition::PowerMatched));
    }

    #[test]
    fn bump_passes_every_check() {
        let cfg = cfg();
        for (c, w) in [(0.5, 0.3), (1.5, 0.3), (4.0, 1.0)] {
            let f = make_position_bump(&cfg, c, w, 1.0).unwrap();
            let rep = membership_report(&cfg, &f.function, 3, &quad());
            assert!(rep.all_passed(), "{c} {:?}", rep.failures().collect::<Vec<_>>());
            assert_eq!(rep.smooth, Some(true));
        }
    }

    #[test]
    fn spectral_function_report() {
        let cfg = cfg();
        let f = make_spectral_test_function(&cfg, 6.0, 4.0, 1.0, &quad()).unwrap();
        let rep = membership_report(&cfg, &f.function, 3, &quad());
        assert!(rep.passed(Condition::VanishesAtOrigin));
        assert!(rep.passed(Condition::PowerVanishesAtOrigin));
        assert!(
            rep.passed(Condition::PowerMatched),
            "{:?}",
            rep.failures().collect::<Vec<_>>()
        );
        assert!(rep.passed(Condition::NormFinite));
        // φ(a) ≠ 0 in general, so the literal edge conditions fail.
        assert!(!rep.passed(Condition::DerivativeVanishes));
    }

    #[test]
    fn ket_paths_agree() {
        let cfg = cfg();
        let q = quad();
        let f = make_position_bump(&cfg, 4.0, 1.0, 1.0).unwrap();
        let direct = ket_action(&cfg, &f, 1.5, &q).unwrap();
        let cached = ket_action(&cfg, &f.clone().with_transform(&cfg, &q).unwrap(), 1.5, &q).unwrap();
        assert!((direct - cached).norm() < 1e-8, "{direct} {cached}");
        assert!(schwartz_delta_check(&cfg, &f, 1.5, &q).unwrap() < 1e-8);
        assert!(ket_action(&cfg, &f, 1.0, &q).is_err());

        let s = make_spectral_test_function(&cfg, 6.0, 4.0, 1.0, &q).unwrap();
        let g = s.cached_transform.as_ref().unwrap().profile().unwrap().clone();
        assert_eq!(ket_action(&cfg, &s, 5.0, &q).unwrap(), g.eval(5.0).conj());
        assert_eq!(ket_action(&cfg, &s, 12.0, &q).unwrap(), ZERO);
        assert_eq!(schwartz_delta_check(&cfg, &s, 5.0, &q).unwrap(), 0.0);
        let direct = ket_action_direct(&cfg, &s.function, 5.0, &q).unwrap();
        assert!((direct - g.eval(5.0)).norm() < 1e-8);
    }

    #[test]
    fn generalized_eigenvalue_property() {
        let cfg = cfg();
        let q = quad();
        let s = make_spectral_test_function(&cfg, 6.0, 4.0, 1.0, &q).unwrap();
        for n in 1..=3 {
            for e in [3.0, 6.5, 9.0] {
                let res = ket_eigen_check(&cfg, &s, e, n, &q).unwrap();
                assert!(res < 1e-7, "n={n} E={e} {res}");
            }
        }
        assert_eq!(ket_eigen_check(&cfg, &s, 11.0, 1, &q).unwrap(), 0.0);
        let b = make_position_bump(&cfg, 4.0, 1.0, 1.0).unwrap();
        for n in 1..=2 {
            let res = ket_eigen_check(&cfg, &b, 2.5, n, &q).unwrap();
            assert!(res < 1e-7, "n={n} {res}");
        }
    }

    #[test]
    fn ket_bound_examples() {
        let free = BarrierConfig::with_height(0.0).unwrap();
        let m = ket_bound(&free, 1.0).unwrap();
        assert!((m - (1.0 / core::f64::consts::PI).sqrt()).abs() < 1e-12);
        let cfg = cfg();
        for i in 0..40 {
            let e = 10f64.powf(-3.0 + 5.0 * i as f64 / 39.0);
            if cfg.is_admissible_energy(e) {
                let m = ket_bound(&cfg, e).unwrap();
                assert!(m.is_finite() && m > 0.0, "{e}");
            }
        }
    }

    #[test]
    fn continuity_bound_holds() {
        let cfg = cfg();
        let q = quad();
        let f = make_position_bump(&cfg, 3.0, 0.8, 1.3).unwrap();
        let n10 = phi_norm(&cfg, &f.function, 1, 0, &q).unwrap();
        for e in [0.4, 2.0, 7.0] {
            let k = ket_action(&cfg, &f, e, &q).unwrap().norm();
            assert!(k < ket_bound(&cfg, e).unwrap() * n10);
        }
    }

    #[test]
    fn h_is_stable_and_bounded() {
        let cfg = cfg();
        let q = quad();
        let s = make_spectral_test_function(&cfg, 6.0, 4.0, 1.0, &q).unwrap();
        let hs = s.apply_h(&cfg).unwrap();
        assert_eq!(hs.kind, TestKind::SpectralProfile);
        let p = hs.cached_transform.as_ref().unwrap().profile().unwrap();
        assert!((p.eval(5.0) - s.cached_transform.as_ref().unwrap().eval(5.0) * 5.0).norm() < 1e-15);
        for n in 0..=2 {
            for m in 0..=2 {
                let lhs = phi_norm(&cfg, &hs.function, n, m, &q).unwrap();
                let rhs =
                    phi_norm(&cfg, &s.function, n, m + 1, &q).unwrap() + phi_norm(&cfg, &s.function, n, m, &q).unwrap();
                assert!(lhs <= rhs, "{n} {m}");
            }
        }
    }

    #[test]
    fn surface_terms_vanish_beyond_support() {
        let cfg = cfg();
        let f = make_position_bump(&cfg, 4.0, 1.0, 1.0).unwrap();
        let sigma = DeltaEigenfunction::new(&cfg, 3.0).unwrap();
        for r in [0.0, 5.0, 7.5] {
            let (x, y) = surface_terms(&f.function, &sigma, r).unwrap();
            assert!(x.norm() < 1e-12 && y.norm() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn norm_axioms(
            c1 in 2.5f64..6.0, w1 in 0.2f64..0.45,
            c2 in 2.5f64..6.0, w2 in 0.2f64..0.45,
            alpha in -3.0f64..3.0, n in 0u32..3, m in 0u32..3,
        ) {
            let cfg = cfg();
            let q = quad();
            let f = RadialFunction::bump(&cfg, c1, w1, 1.0).unwrap();
            let g = RadialFunction::bump(&cfg, c2, w2, -0.7).unwrap();
            let nf = phi_norm(&cfg, &f, n, m, &q).unwrap();
            let ng = phi_norm(&cfg, &g, n, m, &q).unwrap();
            let nfg = phi_norm(&cfg, &f.plus(&g), n, m, &q).unwrap();
            prop_assert!(nfg <= (nf + ng) * (1.0 + 1e-12));
            let scaled = phi_norm(&cfg, &f.scaled(Complex64::new(alpha, 0.0)), n, m, &q).unwrap();
            prop_assert!((scaled - alpha.abs() * nf).abs() <= 1e-12 * nf.max(1.0));
        }
    }
}
