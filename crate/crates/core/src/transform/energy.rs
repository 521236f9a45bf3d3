//! Functions of the energy `E ∈ (0, ∞)`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::bump::Bump;
use crate::error::{Error, Result};
use crate::model::BarrierConfig;
use crate::quadrature::Grid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `P(E) · amplitude · ψ((E - center)/halfwidth)`: a smooth compactly
/// supported profile with a polynomial multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    pub bump: Bump,
    /// Ascending coefficients of `P`.
    pub poly: Vec<Complex64>,
}

impl EnergyProfile {
    /// Rejects supports that touch `(0, eps]` or `[V₀-eps, V₀+eps]`.
    pub fn new(cfg: &BarrierConfig, center: f64, halfwidth: f64, amplitude: f64) -> Result<Self> {
        if !(halfwidth > 0.0 && halfwidth.is_finite() && center.is_finite() && amplitude.is_finite()) {
            return Err(Error::SupportError {
                reason: "profile needs a positive halfwidth and finite parameters",
            });
        }
        let (lo, hi) = (center - halfwidth, center + halfwidth);
        if lo <= cfg.eps_energy {
            return Err(Error::SupportError {
                reason: "profile support must lie above the band at E = 0",
            });
        }
        if lo <= cfg.v0 + cfg.eps_energy && hi >= cfg.v0 - cfg.eps_energy {
            return Err(Error::SupportError {
                reason: "profile support must not meet the band around E = V0",
            });
        }
        Ok(EnergyProfile {
            bump: Bump {
                center,
                halfwidth,
                amplitude,
            },
            poly: alloc::vec![Complex64::new(1.0, 0.0)],
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.bump.lower(), self.bump.upper())
    }

    pub fn eval(&self, e: f64) -> Complex64 {
        let b = self.bump.value(e);
        if b == 0.0 {
            return ZERO;
        }
        self.poly.iter().rev().fold(ZERO, |acc, &c| acc * e + c) * b
    }

    /// Profile of `h φ`: `E · g(E)`.
    pub fn times_energy(&self) -> Self {
        let mut poly = Vec::with_capacity(self.poly.len() + 1);
        poly.push(ZERO);
        poly.extend_from_slice(&self.poly);
        EnergyProfile { bump: self.bump, poly }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        EnergyProfile {
            bump: self.bump,
            poly: self.poly.iter().map(|c| c * s).collect(),
        }
    }

    /// Sum of two profiles sharing the same bump.
    pub fn plus(&self, other: &Self) -> Self {
        debug_assert_eq!(self.bump, other.bump);
        let n = self.poly.len().max(other.poly.len());
        let poly = (0..n)
            .map(|i| self.poly.get(i).copied().unwrap_or(ZERO) + other.poly.get(i).copied().unwrap_or(ZERO))
            .collect();
        EnergyProfile { bump: self.bump, poly }
    }
}

/// Whether values are `f̂ = Uf` (δ-normalized) or `f̃ = Ũf` (ρ-normalized,
/// `f̂ = √ρ f̃`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Delta,
    Rho,
}

/// Numerical bookkeeping attached to every computed transform.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransformInfo {
    /// Largest radius that entered the computation.
    pub r_cutoff: f64,
    /// Largest energy that entered the computation.
    pub e_cutoff: f64,
    pub panels: usize,
    pub nodes: usize,
    /// Change of the result under panel refinement.
    pub error_estimate: f64,
    /// Estimated contribution beyond the cutoff.
    pub tail_estimate: f64,
    /// Bound on the contribution of the excluded energy bands.
    pub band_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnergyRepr {
    Zero,
    Profile(EnergyProfile),
    /// Values at the nodes of a grid in `k = √(κE)`.
    Grid {
        grid: Arc<Grid>,
        values: Vec<Complex64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyFunction {
    pub normalization: Normalization,
    pub repr: EnergyRepr,
    pub info: TransformInfo,
}

impl EnergyFunction {
    pub fn zero(normalization: Normalization) -> Self {
        EnergyFunction {
            normalization,
            repr: EnergyRepr::Zero,
            info: TransformInfo::default(),
        }
    }

    pub fn from_profile(profile: EnergyProfile) -> Self {
        let e_cutoff = profile.support().1;
        EnergyFunction {
            normalization: Normalization::Delta,
            repr: EnergyRepr::Profile(profile),
            info: TransformInfo {
                e_cutoff,
                ..TransformInfo::default()
            },
        }
    }

    pub fn on_grid(normalization: Normalization, grid: Arc<Grid>, values: Vec<Complex64>, info: TransformInfo) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        EnergyFunction {
            normalization,
            repr: EnergyRepr::Grid { grid, values },
            info,
        }
    }

    pub fn eval(&self, e: f64) -> Complex64 {
        match &self.repr {
            EnergyRepr::Zero => ZERO,
            EnergyRepr::Profile(p) => p.eval(e),
            EnergyRepr::Grid { grid, values } => grid.interpolate(values, e),
        }
    }

    pub fn profile(&self) -> Option<&EnergyProfile> {
        match &self.repr {
            EnergyRepr::Profile(p) => Some(p),
            _ => None,
        }
    }

    pub fn grid(&self) -> Option<(&Arc<Grid>, &[Complex64])> {
        match &self.repr {
            EnergyRepr::Grid { grid, values } => Some((grid, values)),
            _ => None,
        }
    }

    /// `(E, value)` pairs at the grid nodes.
    pub fn samples(&self) -> Vec<(f64, Complex64)> {
        match &self.repr {
            EnergyRepr::Grid { grid, values } => grid.nodes.iter().copied().zip(values.iter().copied()).collect(),
            _ => Vec::new(),
        }
    }

    /// Interval outside of which the function vanishes or was truncated.
    pub fn support(&self) -> (f64, f64) {
        match &self.repr {
            EnergyRepr::Zero => (0.0, 0.0),
            EnergyRepr::Profile(p) => p.support(),
            EnergyRepr::Grid { grid, .. } => (grid.lower(), grid.upper()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            EnergyRepr::Zero => true,
            EnergyRepr::Profile(p) => p.bump.amplitude == 0.0 || p.poly.iter().all(|c| *c == ZERO),
            EnergyRepr::Grid { values, .. } => values.iter().all(|v| *v == ZERO),
        }
    }

    /// `(∫ |f|² dE)^{1/2}` on the grid, or by the given grid for profiles.
    pub fn l2_norm_on(&self, grid: &Grid) -> f64 {
        let v: Vec<Complex64> = grid.nodes.iter().map(|&e| self.eval(e)).collect();
        grid.l2_norm(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{panels, GaussLegendre, GridVariable};

    #[test]
    fn profile_support_rules() {
        let cfg = BarrierConfig::default();
        assert!(EnergyProfile::new(&cfg, 2.0, 0.5, 1.0).is_ok());
        assert!(EnergyProfile::new(&cfg, 0.5, 0.3, 1.0).is_ok());
        for (c, w) in [(1.0, 0.5), (0.5, 0.5), (0.2, 0.3), (1.2, 0.2), (2.0, 0.0)] {
            assert!(
                matches!(EnergyProfile::new(&cfg, c, w, 1.0), Err(Error::SupportError { .. })),
                "{c} {w}"
            );
        }
    }

    #[test]
    fn profile_algebra() {
        let cfg = BarrierConfig::default();
        let p = EnergyProfile::new(&cfg, 3.0, 1.0, 2.0).unwrap();
        let e = 3.4;
        assert!((p.times_energy().eval(e) - p.eval(e) * e).norm() < 1e-15);
        let s = p.scaled(Complex64::new(0.0, 2.0)).plus(&p);
        assert!((s.eval(e) - p.eval(e) * Complex64::new(1.0, 2.0)).norm() < 1e-15);
        assert_eq!(p.eval(4.0), ZERO);
        assert_eq!(p.support(), (2.0, 4.0));
    }

    #[test]
    fn grid_function_vanishes_in_gaps() {
        let kap = 1.0;
        let layout: Vec<(f64, f64)> = panels(0.5, 2.0, &[1.0, 1.2], 0.5)
            .into_iter()
            .filter(|p| !(p.0 >= 1.0 && p.1 <= 1.2))
            .collect();
        let grid = Arc::new(Grid::new(
            GridVariable::Wavenumber { kappa: kap },
            layout,
            &GaussLegendre::new(8),
        ));
        let vals = grid.nodes.iter().map(|&e| Complex64::new(e, 0.0)).collect();
        let f = EnergyFunction::on_grid(Normalization::Delta, grid, vals, TransformInfo::default());
        assert!((f.eval(2.0) - Complex64::new(2.0, 0.0)).norm() < 1e-13);
        assert_eq!(f.eval(1.21), ZERO);
        assert_eq!(f.eval(5.0), ZERO);
    }
}
