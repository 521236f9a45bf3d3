//! The resolvent kernel `G(r,s;E)` and the resolvent `(E-H)⁻¹` as an
//! integral operator.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::eigen::{closed_form_coefficients, Eigenfunction, FamilyTag};
use crate::error::{Error, Result};
use crate::model::{check_nondegenerate, wavenumbers, BarrierConfig, ComplexEnergy, EnergyRegion};
use crate::quadrature::{panels, GaussLegendre, QuadratureSpec};
use crate::transform::RadialFunction;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEvaluation {
    pub value: Complex64,
    pub region: EnergyRegion,
    /// True when `r < s`.
    pub ordered: bool,
}

/// `G(r,s;E) = prefactor · u(min(r,s)) · v(max(r,s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenKernel {
    pub energy: ComplexEnergy,
    pub region: EnergyRegion,
    /// Solution regular at the origin.
    pub regular: Eigenfunction,
    /// Solution decaying at infinity.
    pub decaying: Eigenfunction,
    pub prefactor: Complex64,
    /// Exponential decay rate of `decaying`.
    pub decay_rate: f64,
}

impl GreenKernel {
    pub fn new(cfg: &BarrierConfig, e: ComplexEnergy) -> Result<Self> {
        check_nondegenerate(cfg, e)?;
        let region = e.region();
        let w = wavenumbers(cfg, e)?;
        let kap = cfg.kappa;
        let (reg, dec, prefactor, decay_rate) = match region {
            EnergyRegion::PositiveReal => return Err(Error::OnSpectrum { energy: e.as_complex() }),
            EnergyRegion::NegativeRe => {
                let j = closed_form_coefficients(cfg, FamilyTag::ChiTilde, e)?;
                let pre = -kap / (w.k_tilde * 2.0 * j.c3);
                (FamilyTag::ChiTilde, FamilyTag::ThetaTilde, pre, w.k_tilde.re)
            }
            EnergyRegion::UpperHalf => {
                let j = closed_form_coefficients(cfg, FamilyTag::Chi, e)?;
                let pre = kap / (w.k * 2.0 * I * j.c4);
                (FamilyTag::Chi, FamilyTag::ThetaPlus, pre, w.k.im.abs())
            }
            EnergyRegion::LowerHalf => {
                let j = closed_form_coefficients(cfg, FamilyTag::Chi, e)?;
                let pre = -kap / (w.k * 2.0 * I * j.c3);
                (FamilyTag::Chi, FamilyTag::ThetaMinus, pre, w.k.im.abs())
            }
        };
        Ok(GreenKernel {
            energy: e,
            region,
            regular: Eigenfunction::new(cfg, reg, e)?,
            decaying: Eigenfunction::new(cfg, dec, e)?,
            prefactor,
            decay_rate,
        })
    }

    pub fn value(&self, r: f64, s: f64) -> Complex64 {
        let (lo, hi) = if r <= s { (r, s) } else { (s, r) };
        self.prefactor * self.regular.value(lo) * self.decaying.value(hi)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain {
            what: "radius",
            value: r,
        });
    }
    Ok(())
}

pub fn green_evaluation(cfg: &BarrierConfig, r: f64, s: f64, e: ComplexEnergy) -> Result<GreenEvaluation> {
    check_radius(r)?;
    check_radius(s)?;
    let kernel = GreenKernel::new(cfg, e)?;
    Ok(GreenEvaluation {
        value: kernel.value(r, s),
        region: kernel.region,
        ordered: r < s,
    })
}

pub fn green_function(cfg: &BarrierConfig, r: f64, s: f64, e: ComplexEnergy) -> Result<Complex64> {
    Ok(green_evaluation(cfg, r, s, e)?.value)
}

/// `(E-H)⁻¹ f`, evaluated lazily at any radius from precomputed panel
/// integrals over the support of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    source: RadialFunction,
    kernel: GreenKernel,
    panels: Vec<(f64, f64)>,
    /// `∫ u f` over panels `0..p`.
    prefix: Vec<Complex64>,
    /// `∫ v f` over panels `p..`.
    suffix: Vec<Complex64>,
    rule: GaussLegendre,
    support: (f64, f64),
    phase_width: f64,
    /// Relative change of the panel integrals under halving the panels.
    pub error_estimate: f64,
}

impl Resolved {
    pub fn source(&self) -> &RadialFunction {
        &self.source
    }

    pub fn energy(&self) -> ComplexEnergy {
        self.kernel.energy
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        if r < 0.0 || self.panels.is_empty() {
            return ZERO;
        }
        let k = &self.kernel;
        let n = self.panels.len();
        let (left, right) = if r <= self.support.0 {
            (ZERO, self.suffix[0])
        } else if r >= self.support.1 {
            (self.prefix[n], ZERO)
        } else {
            let p = self.panels.partition_point(|q| q.1 < r).min(n - 1);
            let (lo, hi) = self.panels[p];
            let f = &self.source;
            let l = self.rule.integrate(lo, r, |s| k.regular.value(s) * f.eval(s));
            let rr = self.rule.integrate(r, hi, |s| k.decaying.value(s) * f.eval(s));
            (self.prefix[p] + l, rr + self.suffix[p + 1])
        };
        k.prefactor * (k.decaying.value(r) * left + k.regular.value(r) * right)
    }

    /// Radius beyond which `(1+r)^n |g|` has decayed by `tol` relative to its
    /// value at the edge of the source support.
    pub fn cutoff(&self, tol: f64, weight_power: u32) -> f64 {
        let hi = self.support.1;
        let gamma = self.kernel.decay_rate.max(1e-3);
        let mut r = hi + (1.0 / tol).ln() / gamma;
        for _ in 0..6 {
            r = hi + ((1.0 + r).powi(weight_power as i32) / tol).ln() / gamma;
        }
        r
    }

    pub fn feature_width(&self) -> f64 {
        self.source.feature_width().min(self.phase_width)
    }
}

fn panel_sums(
    layout: &[(f64, f64)],
    rule: &GaussLegendre,
    kernel: &GreenKernel,
    f: &RadialFunction,
) -> (Vec<Complex64>, Vec<Complex64>, f64) {
    let mut left = Vec::with_capacity(layout.len());
    let mut right = Vec::with_capacity(layout.len());
    let mut scale = 0.0;
    for &(lo, hi) in layout {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let (mut a, mut b) = (ZERO, ZERO);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let s = mid + half * x;
            let fs = f.eval(s);
            let u = kernel.regular.value(s) * fs;
            let v = kernel.decaying.value(s) * fs;
            a += u * (w * half);
            b += v * (w * half);
            scale += (u.norm() + v.norm()) * w * half;
        }
        left.push(a);
        right.push(b);
    }
    (left, right, scale)
}

/// `g(r) = ∫₀^∞ G(r,s;E) f(s) ds`.
pub fn apply_resolvent(
    cfg: &BarrierConfig,
    f: &RadialFunction,
    e: ComplexEnergy,
    quad: &QuadratureSpec,
) -> Result<RadialFunction> {
    quad.validate()?;
    let kernel = GreenKernel::new(cfg, e)?;
    if f.is_zero() {
        return Ok(RadialFunction::Zero);
    }
    let w = wavenumbers(cfg, e)?;
    let growth = kernel.decay_rate;
    // Truncate where the kernel-weighted source is below 1e-14.
    let (lo, mut hi) = f.support(1e-14, 0);
    if let Some(rc) = quad.r_cutoff {
        hi = hi.min(rc);
    } else if matches!(f, RadialFunction::ExpPoly(_) | RadialFunction::Combination(_)) {
        for _ in 0..8 {
            let next = f.support(1e-14 * (-growth * hi).exp(), 0).1;
            if !(next.is_finite()) || next > 1e4 {
                return Err(Error::QuadratureFailure {
                    estimate: f64::INFINITY,
                    tolerance: quad.tol,
                });
            }
            hi = next;
        }
    }
    let wave = w.k.norm().max(w.q.norm()).max(1e-3);
    let phase_width = quad.max_panel_phase / wave;
    let width = phase_width.min(f.feature_width()).min(1.0);
    let mut breaks = Vec::from([cfg.a, cfg.b]);
    f.breaks(&mut breaks);
    let layout = panels(lo, hi, &breaks, width);
    let rule = quad.rule();
    let (left, right, scale) = panel_sums(&layout, &rule, &kernel, f);

    let fine = panels(lo, hi, &breaks, 0.5 * width);
    let (fl, fr, _) = panel_sums(&fine, &rule, &kernel, f);
    let total = |v: &[Complex64]| v.iter().fold(ZERO, |a, b| a + b);
    let diff = (total(&left) - total(&fl)).norm() + (total(&right) - total(&fr)).norm();
    let error_estimate = diff / scale.max(1e-300);
    if error_estimate > quad.tol {
        return Err(Error::QuadratureFailure {
            estimate: error_estimate,
            tolerance: quad.tol,
        });
    }

    let n = layout.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(ZERO);
    for v in &left {
        let last = *prefix.last().unwrap();
        prefix.push(last + v);
    }
    let mut suffix = alloc::vec![ZERO; n + 1];
    for p in (0..n).rev() {
        suffix[p] = suffix[p + 1] + right[p];
    }
    Ok(RadialFunction::Resolved(Arc::new(Resolved {
        source: f.clone(),
        kernel,
        panels: layout,
        prefix,
        suffix,
        rule,
        support: (lo, hi),
        phase_width,
        error_estimate,
    })))
}
