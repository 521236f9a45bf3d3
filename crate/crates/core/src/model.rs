//! Problem definition: the barrier, the complex energy plane and the
//! square-root branch shared by every other module.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result, Threshold};

/// Physical parameters of one square-barrier problem.
///
/// `kappa` is `2m/ħ²`, so that `h = -(1/κ) d²/dr² + V(r)`. `hbar` only
/// enters the time evolution phase `exp(-iEt/ħ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierConfig {
    pub kappa: f64,
    pub hbar: f64,
    pub v0: f64,
    pub a: f64,
    pub b: f64,
    /// Half-width of the excluded bands around `E = 0` and `E = V₀`.
    pub eps_energy: f64,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        BarrierConfig {
            kappa: 1.0,
            hbar: 1.0,
            v0: 1.0,
            a: 1.0,
            b: 2.0,
            eps_energy: default_eps_energy(1.0),
        }
    }
}

/// `1e-9 · max(1, V₀)`.
pub fn default_eps_energy(v0: f64) -> f64 {
    1e-9 * v0.max(1.0)
}

impl BarrierConfig {
    /// Validated configuration with the default exclusion half-width.
    pub fn new(kappa: f64, hbar: f64, v0: f64, a: f64, b: f64) -> Result<Self> {
        let cfg = BarrierConfig {
            kappa,
            hbar,
            v0,
            a,
            b,
            eps_energy: default_eps_energy(v0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default geometry with a different barrier height.
    pub fn with_height(v0: f64) -> Result<Self> {
        let d = BarrierConfig::default();
        BarrierConfig::new(d.kappa, d.hbar, v0, d.a, d.b)
    }

    pub fn with_eps_energy(mut self, eps: f64) -> Result<Self> {
        self.eps_energy = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.kappa, self.hbar, self.v0, self.a, self.b, self.eps_energy]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidConfig {
                field: "barrier",
                reason: "all parameters must be finite",
            });
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "kappa",
                reason: "must be positive",
            });
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "hbar",
                reason: "must be positive",
            });
        }
        if self.v0 < 0.0 {
            return Err(Error::InvalidConfig {
                field: "v0",
                reason: "must be non-negative",
            });
        }
        if self.a <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "a",
                reason: "must be positive",
            });
        }
        if self.b <= self.a {
            return Err(Error::InvalidConfig {
                field: "b",
                reason: "must exceed a",
            });
        }
        if self.eps_energy <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "eps_energy",
                reason: "must be positive",
            });
        }
        Ok(())
    }

    /// Index of the spatial region containing `r`: 0 for `[0, a]`, 1 for
    /// `(a, b]`, 2 for `(b, ∞)`. Interface points belong to the left piece.
    pub fn region_index(&self, r: f64) -> usize {
        if r <= self.a {
            0
        } else if r <= self.b {
            1
        } else {
            2
        }
    }

    /// Potential on an open region (0, 1 or 2).
    pub fn region_potential(&self, region: usize) -> f64 {
        if region == 1 {
            self.v0
        } else {
            0.0
        }
    }

    /// Energy bands that every energy integral skips, as `(lo, hi)` pairs.
    pub fn exclusion_bands(&self) -> [(f64, f64); 2] {
        [
            (0.0, self.eps_energy),
            (self.v0 - self.eps_energy, self.v0 + self.eps_energy),
        ]
    }

    /// Whether a real energy avoids both exclusion bands.
    pub fn is_admissible_energy(&self, e: f64) -> bool {
        e > self.eps_energy && (e - self.v0).abs() > self.eps_energy
    }
}

/// Square-barrier potential. At `r = a` and `r = b` the barrier value is
/// returned (closed barrier interval).
pub fn potential_value(cfg: &BarrierConfig, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain {
            what: "radius",
            value: r,
        });
    }
    Ok(if r < cfg.a || r > cfg.b { 0.0 } else { cfg.v0 })
}

/// Square root with `arg z ∈ (-π, π]` mapped to `arg ∈ (-π/2, π/2]`.
///
/// The negative real axis (including `-x - 0i`) maps onto the positive
/// imaginary axis.
pub fn branch_sqrt(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    if y == 0.0 {
        return if x >= 0.0 {
            Complex64::new(x.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-x).sqrt())
        };
    }
    let t = ((x.hypot(y) + x.abs()) * 0.5).sqrt();
    if x >= 0.0 {
        Complex64::new(t, y / (2.0 * t))
    } else {
        Complex64::new(y.abs() / (2.0 * t), t.copysign(y))
    }
}

/// Region of the complex energy plane; selects which eigenfunction pair
/// builds the resolvent kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnergyRegion {
    /// `Re E < 0`, including the negative real axis.
    NegativeRe,
    /// `Re E ≥ 0`, `Im E > 0`.
    UpperHalf,
    /// `Re E ≥ 0`, `Im E < 0`.
    LowerHalf,
    /// `Re E ≥ 0`, `Im E = 0`: the spectrum.
    PositiveReal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEnergy {
    pub re: f64,
    pub im: f64,
}

impl ComplexEnergy {
    pub fn new(re: f64, im: f64) -> Self {
        // -0.0 → +0.0 so that real energies classify unambiguously.
        ComplexEnergy { re, im: im + 0.0 }
    }

    pub fn real(e: f64) -> Self {
        ComplexEnergy::new(e, 0.0)
    }

    pub fn as_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im + 0.0)
    }

    pub fn conj(self) -> Self {
        ComplexEnergy::new(self.re, -self.im)
    }

    pub fn region(self) -> EnergyRegion {
        let im = self.im + 0.0;
        if self.re < 0.0 {
            EnergyRegion::NegativeRe
        } else if im > 0.0 {
            EnergyRegion::UpperHalf
        } else if im < 0.0 {
            EnergyRegion::LowerHalf
        } else {
            EnergyRegion::PositiveReal
        }
    }

    pub fn is_real(self) -> bool {
        self.im == 0.0
    }
}

impl From<f64> for ComplexEnergy {
    fn from(e: f64) -> Self {
        ComplexEnergy::real(e)
    }
}

impl From<Complex64> for ComplexEnergy {
    fn from(z: Complex64) -> Self {
        ComplexEnergy::new(z.re, z.im)
    }
}

/// Rejects energies inside the exclusion bands around `0` and `V₀`.
pub fn check_nondegenerate(cfg: &BarrierConfig, e: ComplexEnergy) -> Result<()> {
    let z = e.as_complex();
    if z.norm() < cfg.eps_energy {
        return Err(Error::DegenerateEnergy {
            threshold: Threshold::Zero,
            energy: z,
        });
    }
    if (z - cfg.v0).norm() < cfg.eps_energy {
        return Err(Error::DegenerateEnergy {
            threshold: Threshold::BarrierTop,
            energy: z,
        });
    }
    Ok(())
}

/// `k = √(κE)`, `Q = √(κ(E-V₀))`, `k̃ = √(-κE)`, `Q̃ = √(-κ(E-V₀))`, each on
/// the branch of [`branch_sqrt`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumbers {
    pub k: Complex64,
    pub q: Complex64,
    pub k_tilde: Complex64,
    pub q_tilde: Complex64,
}

pub fn wavenumbers(cfg: &BarrierConfig, e: ComplexEnergy) -> Result<Wavenumbers> {
    check_nondegenerate(cfg, e)?;
    let z = e.as_complex();
    let shifted = z - cfg.v0;
    Ok(Wavenumbers {
        k: branch_sqrt(z * cfg.kappa),
        q: branch_sqrt(shifted * cfg.kappa),
        k_tilde: branch_sqrt(-z * cfg.kappa),
        q_tilde: branch_sqrt(-shifted * cfg.kappa),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn potential_regions() {
        let cfg = BarrierConfig::default();
        assert_eq!(potential_value(&cfg, 0.5).unwrap(), 0.0);
        assert_eq!(potential_value(&cfg, 1.5).unwrap(), 1.0);
        assert_eq!(potential_value(&cfg, 3.0).unwrap(), 0.0);
        assert_eq!(potential_value(&cfg, 1.0).unwrap(), 1.0);
        assert_eq!(potential_value(&cfg, 2.0).unwrap(), 1.0);
        assert!(matches!(potential_value(&cfg, -0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn potential_agrees_with_region_classification() {
        let cfg = BarrierConfig::default();
        for i in 0..400 {
            let r = i as f64 * 0.0137;
            if r == cfg.a || r == cfg.b {
                continue;
            }
            let v = potential_value(&cfg, r).unwrap();
            assert_eq!(v, cfg.region_potential(cfg.region_index(r)));
        }
    }

    #[test]
    fn branch_examples() {
        assert_eq!(branch_sqrt(c(4.0, 0.0)), c(2.0, 0.0));
        assert_eq!(branch_sqrt(c(-4.0, 0.0)), c(0.0, 2.0));
        assert_eq!(branch_sqrt(c(-4.0, -0.0)), c(0.0, 2.0));
        let z = branch_sqrt(c(0.0, -2.0));
        assert!((z - c(1.0, -1.0)).norm() < 1e-15);
        assert_eq!(branch_sqrt(c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn wavenumber_examples() {
        let cfg = BarrierConfig::default();
        let w = wavenumbers(&cfg, ComplexEnergy::real(-1.0)).unwrap();
        assert_eq!(w.k_tilde, c(1.0, 0.0));
        let w = wavenumbers(&cfg, ComplexEnergy::real(0.5)).unwrap();
        assert!((w.q - c(0.0, 0.5f64.sqrt())).norm() < 1e-15);
        let w = wavenumbers(&cfg, ComplexEnergy::real(4.0)).unwrap();
        assert_eq!(w.k, c(2.0, 0.0));
        assert!((w.q - c(3f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn degenerate_energies_rejected() {
        let cfg = BarrierConfig::default();
        let err = wavenumbers(&cfg, ComplexEnergy::real(1e-12)).unwrap_err();
        assert!(matches!(
            err,
            Error::DegenerateEnergy {
                threshold: Threshold::Zero,
                ..
            }
        ));
        let err = wavenumbers(&cfg, ComplexEnergy::new(1.0, 1e-11)).unwrap_err();
        assert!(matches!(
            err,
            Error::DegenerateEnergy {
                threshold: Threshold::BarrierTop,
                ..
            }
        ));
        assert!(wavenumbers(&cfg, ComplexEnergy::real(1.0 + 1e-6)).is_ok());
    }

    #[test]
    fn signed_zero_is_normalized() {
        let e = ComplexEnergy::new(2.0, -0.0);
        assert_eq!(e.region(), EnergyRegion::PositiveReal);
        assert!(e.as_complex().im.is_sign_positive());
        let e = ComplexEnergy { re: -2.0, im: -0.0 };
        let cfg = BarrierConfig::default();
        let w = wavenumbers(&cfg, e).unwrap();
        // -κE = 2 - 0i is positive real either way; k must be on the +i axis
        assert_eq!(w.k, c(0.0, 2f64.sqrt()));
    }

    #[test]
    fn region_classification() {
        assert_eq!(ComplexEnergy::new(-1.0, 0.0).region(), EnergyRegion::NegativeRe);
        assert_eq!(ComplexEnergy::new(-1.0, 2.0).region(), EnergyRegion::NegativeRe);
        assert_eq!(ComplexEnergy::new(1.0, 2.0).region(), EnergyRegion::UpperHalf);
        assert_eq!(ComplexEnergy::new(1.0, -2.0).region(), EnergyRegion::LowerHalf);
        assert_eq!(ComplexEnergy::new(1.0, 0.0).region(), EnergyRegion::PositiveReal);
        assert_eq!(ComplexEnergy::new(0.0, 1.0).region(), EnergyRegion::UpperHalf);
    }

    #[test]
    fn config_validation() {
        assert!(BarrierConfig::new(1.0, 1.0, 1.0, 2.0, 1.0).is_err());
        assert!(BarrierConfig::new(0.0, 1.0, 1.0, 1.0, 2.0).is_err());
        assert!(BarrierConfig::new(1.0, 1.0, -1.0, 1.0, 2.0).is_err());
        let cfg = BarrierConfig::new(1.0, 1.0, 5.0, 1.0, 2.0).unwrap();
        assert_eq!(cfg.eps_energy, 5e-9);
    }

    #[test]
    fn wavenumbers_continuous_within_regions() {
        let cfg = BarrierConfig::default();
        let starts = [c(-2.0, 0.5), c(-0.5, -0.7), c(0.4, 0.3), c(3.0, -0.2), c(2.0, 1.0)];
        for z0 in starts {
            let mut prev = wavenumbers(&cfg, z0.into()).unwrap();
            for step in 1..200 {
                let z = z0 + c(1e-3, 1e-4) * step as f64;
                let w = wavenumbers(&cfg, z.into()).unwrap();
                for (x, y) in [
                    (w.k, prev.k),
                    (w.q, prev.q),
                    (w.k_tilde, prev.k_tilde),
                    (w.q_tilde, prev.q_tilde),
                ] {
                    assert!((x - y).norm() < 5e-3, "jump at {z}");
                }
                prev = w;
            }
        }
    }

    proptest! {
        #[test]
        fn branch_sqrt_squares_back(logr in -20.0f64..20.0, theta in -0.99999 * core::f64::consts::PI..0.99999 * core::f64::consts::PI) {
            let z = Complex64::from_polar(logr.exp(), theta);
            let s = branch_sqrt(z);
            let back = s * s;
            prop_assert!((back - z).norm() <= 4.0 * f64::EPSILON * z.norm());
        }

        #[test]
        fn branch_sqrt_right_half_plane(x in -1e6f64..1e6, y in -1e6f64..1e6) {
            let s = branch_sqrt(Complex64::new(x, y));
            prop_assert!(s.re >= 0.0);
            if s.re == 0.0 {
                prop_assert!(y == 0.0 && x <= 0.0);
                prop_assert!(s.im >= 0.0);
            }
        }
    }
}
