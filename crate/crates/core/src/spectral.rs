//! Spectral density, δ-normalized eigenfunctions, the θ-matrices of the
//! resolvent and the Stone formula for the spectral measure.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::eigen::{closed_form_coefficients, Eigenfunction, FamilyTag};
use crate::error::{Error, Result};
use crate::model::{check_nondegenerate, wavenumbers, BarrierConfig, ComplexEnergy, EnergyRegion};
use crate::quadrature::{panels, richardson, GaussLegendre};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub energy: f64,
    pub rho: f64,
}

fn check_real_energy(cfg: &BarrierConfig, e: f64) -> Result<()> {
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::Domain {
            what: "spectral energy",
            value: e,
        });
    }
    check_nondegenerate(cfg, ComplexEnergy::real(e))
}

/// `ρ(E) = κ / (4π √(κE) |J₄(E)|²)`.
pub fn rho(cfg: &BarrierConfig, e: f64) -> Result<SpectralDensity> {
    check_real_energy(cfg, e)?;
    let j = closed_form_coefficients(cfg, FamilyTag::Chi, ComplexEnergy::real(e))?;
    let k = (cfg.kappa * e).sqrt();
    Ok(SpectralDensity {
        energy: e,
        rho: cfg.kappa / (4.0 * PI * k * j.c4.norm_sqr()),
    })
}

/// `σ(r; E) = √ρ(E) χ(r; E)` at one real energy, ready for repeated
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEigenfunction {
    pub energy: f64,
    pub rho: f64,
    pub sqrt_rho: f64,
    pub chi: Eigenfunction,
}

/// Tolerance on `Im χ` relative to the local envelope.
const REALITY_TOL: f64 = 1e-12;

impl DeltaEigenfunction {
    pub fn new(cfg: &BarrierConfig, e: f64) -> Result<Self> {
        let density = rho(cfg, e)?;
        let chi = Eigenfunction::new(cfg, FamilyTag::Chi, ComplexEnergy::real(e))?;
        Ok(DeltaEigenfunction {
            energy: e,
            rho: density.rho,
            sqrt_rho: density.rho.sqrt(),
            chi,
        })
    }

    pub fn value(&self, r: f64) -> f64 {
        self.sqrt_rho * self.chi.value(r).re
    }

    pub fn derivative(&self, r: f64, order: u32) -> f64 {
        self.sqrt_rho * self.chi.derivative(r, order).re
    }

    /// `sup_r |σ(r; E)|` from the per-region envelopes.
    pub fn sup_norm(&self) -> f64 {
        let bounds = [(0.0, self.chi.a), (self.chi.a, self.chi.b), (self.chi.b, f64::INFINITY)];
        let mut m: f64 = 0.0;
        for (piece, (lo, hi)) in self.chi.pieces.iter().zip(bounds) {
            m = m.max(piece_sup(piece.rate, piece.plus, piece.minus, lo, hi));
        }
        self.sqrt_rho * m
    }
}

/// `sup_{r∈[lo,hi]} |p e^{λr} + m e^{-λr}|` for `λ` real or imaginary.
fn piece_sup(rate: Complex64, p: Complex64, m: Complex64, lo: f64, hi: f64) -> f64 {
    let at = |r: f64| (p * (rate * r).exp() + m * (-rate * r).exp()).norm();
    if rate.im.abs() <= 1e-300 || rate.re.abs() > 1e3 * rate.im.abs() {
        // |f|² = A x + B/x + C in x = e^{2λr}: convex, so the endpoints win.
        return at(lo).max(if hi.is_finite() { at(hi) } else { 0.0 });
    }
    let omega = rate.im;
    // |f|² = |p|² + |m|² + 2|p||m| cos(2ωr + arg p - arg m)
    let peak = p.norm() + m.norm();
    if !hi.is_finite() || omega.abs() * (hi - lo) >= PI {
        return peak;
    }
    let phase = p.arg() - m.arg();
    let mut best = at(lo).max(at(hi));
    // r with 2ωr + phase ≡ 0 (mod 2π)
    let period = PI / omega.abs();
    let r0 = -phase / (2.0 * omega);
    let n = ((lo - r0) / period).ceil();
    let r_star = r0 + n * period;
    if r_star >= lo && r_star <= hi {
        best = best.max(at(r_star));
    }
    best
}

/// `√ρ(E) · χ(r; E)`, after checking that `χ` is real there.
pub fn sigma_delta(cfg: &BarrierConfig, e: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain {
            what: "radius",
            value: r,
        });
    }
    let s = DeltaEigenfunction::new(cfg, e)?;
    let v = s.chi.value(r);
    let envelope = s.chi.pieces[s.chi.region_of(r)].plus.norm() + s.chi.pieces[s.chi.region_of(r)].minus.norm();
    if v.im.abs() > REALITY_TOL * envelope.max(1.0) {
        return Err(Error::NonRealEigenfunction { imaginary: v.im });
    }
    Ok(s.sqrt_rho * v.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaHalf {
    /// `Re E < 0`; the `r < s` representation in the basis `(σ̃₁, Θ̃)`.
    MinusRegion,
    /// `Im E > 0`; the `r > s` representation in the basis `(χ, σ₂)`.
    UpperHalf,
    /// `Im E < 0`; the `r > s` representation in the basis `(χ, σ₂)`.
    LowerHalf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaMatrix {
    pub entries: [[Complex64; 2]; 2],
    pub half: ThetaHalf,
}

/// `W(E) = J₄C₃ - J₃C₄`.
pub fn basis_wronskian(cfg: &BarrierConfig, e: ComplexEnergy) -> Result<Complex64> {
    let j = closed_form_coefficients(cfg, FamilyTag::Chi, e)?;
    let c = closed_form_coefficients(cfg, FamilyTag::Sigma2, e)?;
    Ok(j.c4 * c.c3 - j.c3 * c.c4)
}

pub fn theta_matrices(cfg: &BarrierConfig, e: ComplexEnergy) -> Result<ThetaMatrix> {
    let zero = Complex64::new(0.0, 0.0);
    match e.region() {
        EnergyRegion::PositiveReal => Err(Error::OnSpectrum { energy: e.as_complex() }),
        EnergyRegion::NegativeRe => {
            let w = wavenumbers(cfg, e)?;
            let j = closed_form_coefficients(cfg, FamilyTag::ChiTilde, e)?;
            let pre = -cfg.kappa / w.k_tilde * 0.5;
            Ok(ThetaMatrix {
                entries: [[zero, pre], [zero, pre * j.c4 / j.c3]],
                half: ThetaHalf::MinusRegion,
            })
        }
        region => {
            let w = wavenumbers(cfg, e)?;
            let j = closed_form_coefficients(cfg, FamilyTag::Chi, e)?;
            let c = closed_form_coefficients(cfg, FamilyTag::Sigma2, e)?;
            let wr = j.c4 * c.c3 - j.c3 * c.c4;
            let pre = cfg.kappa / w.k / (2.0 * I);
            let (t11, half) = if region == EnergyRegion::UpperHalf {
                (pre * (-c.c4) / (j.c4 * wr), ThetaHalf::UpperHalf)
            } else {
                (-pre * c.c3 / (j.c3 * wr), ThetaHalf::LowerHalf)
            };
            Ok(ThetaMatrix {
                entries: [[t11, zero], [pre / wr, zero]],
                half,
            })
        }
    }
}

/// Result of the Stone-formula evaluation over `(E₁, E₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StoneMeasure {
    pub e1: f64,
    pub e2: f64,
    /// Extrapolated `ρ_ij((E₁,E₂))`; complex to expose any spurious
    /// imaginary part.
    pub entries: [[Complex64; 2]; 2],
    /// Extrapolation error estimate for each entry.
    pub errors: [[f64; 2]; 2],
    /// Unextrapolated values at each `ε`, entry `(1,1)`.
    pub raw: Vec<(f64, Complex64)>,
}

impl StoneMeasure {
    pub fn rho11(&self) -> f64 {
        self.entries[0][0].re
    }
}

pub const DEFAULT_STONE_EPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// `(1/2πi) ∫_{E₁}^{E₂} [θ⁺(E-iε) - θ⁺(E+iε)] dE` for each `ε`, extrapolated
/// to `ε → 0`. Fails when the extrapolation error of any entry exceeds
/// `tol · max(1, |ρ₁₁|)`.
#[allow(clippy::needless_range_loop)]
pub fn stone_measure(cfg: &BarrierConfig, e1: f64, e2: f64, eps_sequence: &[f64], tol: f64) -> Result<StoneMeasure> {
    if !(e1 > 0.0 && e2 > e1 && e2.is_finite()) {
        return Err(Error::Domain {
            what: "stone interval",
            value: e1,
        });
    }
    if eps_sequence.len() < 2
        || eps_sequence.windows(2).any(|w| !(w[1] < w[0]))
        || eps_sequence.iter().any(|&x| !(x > 0.0))
    {
        return Err(Error::InvalidConfig {
            field: "eps_sequence",
            reason: "must be positive and strictly decreasing, with at least two values",
        });
    }
    let rule = GaussLegendre::new(16);
    let smallest = eps_sequence[eps_sequence.len() - 1];
    // Resolve features of width ε near the axis.
    let width = (8.0 * smallest).max((e2 - e1) / 64.0).min(0.25);
    let layout = panels(e1, e2, &[cfg.v0], width);
    let mut samples: Vec<[[Complex64; 2]; 2]> = Vec::with_capacity(eps_sequence.len());
    let mut raw = Vec::with_capacity(eps_sequence.len());
    for &eps in eps_sequence {
        let mut acc = [[Complex64::new(0.0, 0.0); 2]; 2];
        for &(lo, hi) in &layout {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let e = mid + half * x;
                let below = theta_matrices(cfg, ComplexEnergy::new(e, -eps))?;
                let above = theta_matrices(cfg, ComplexEnergy::new(e, eps))?;
                for i in 0..2 {
                    for j in 0..2 {
                        acc[i][j] += (below.entries[i][j] - above.entries[i][j]) * (w * half);
                    }
                }
            }
        }
        for row in acc.iter_mut() {
            for v in row.iter_mut() {
                *v /= 2.0 * PI * I;
            }
        }
        raw.push((eps, acc[0][0]));
        samples.push(acc);
    }
    let mut entries = [[Complex64::new(0.0, 0.0); 2]; 2];
    let mut errors = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let v: Vec<Complex64> = samples.iter().map(|s| s[i][j]).collect();
            let (lim, err) = richardson(eps_sequence, &v);
            entries[i][j] = lim;
            errors[i][j] = err;
        }
    }
    let scale = entries[0][0].norm().max(1.0);
    let worst = errors.iter().flatten().fold(0.0f64, |m, &e| m.max(e));
    if worst > tol * scale {
        return Err(Error::ExtrapolationFailure {
            estimate: worst,
            tolerance: tol * scale,
        });
    }
    Ok(StoneMeasure {
        e1,
        e2,
        entries,
        errors,
        raw,
    })
}

/// `∫_{E₁}^{E₂} ρ(E) dE` by Gauss–Legendre in `k`.
pub fn integrated_rho(cfg: &BarrierConfig, e1: f64, e2: f64) -> Result<f64> {
    let rule = GaussLegendre::new(16);
    let kap = cfg.kappa;
    let (k1, k2) = ((kap * e1).sqrt(), (kap * e2).sqrt());
    let layout = panels(k1, k2, &[(kap * cfg.v0).sqrt()], 0.05 * (k2 - k1).max(0.1));
    let mut total = 0.0;
    for (lo, hi) in layout {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let k = mid + half * x;
            let e = k * k / kap;
            total += rho(cfg, e)?.rho * w * half * 2.0 * k / kap;
        }
    }
    Ok(total)
}

/// Structure of the spectrum, independent of the barrier parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumInfo {
    /// Absolutely continuous spectrum `[lo, hi)`.
    pub continuous: (f64, f64),
    /// Eigenvalues; always empty for a repulsive barrier.
    pub point: Vec<f64>,
    pub resolvent_set: &'static str,
    pub multiplicity: u32,
}

pub fn spectrum_info(_cfg: &BarrierConfig) -> SpectrumInfo {
    SpectrumInfo {
        continuous: (0.0, f64::INFINITY),
        point: Vec::new(),
        resolvent_set: "C \\ [0, inf)",
        multiplicity: 1,
    }
}
