//! Seeded random members of the two test-function families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rhs_spectra_core::quadrature::QuadratureSpec;
use rhs_spectra_core::testspace::{make_position_bump, make_spectral_test_function, TestFunction};
use rhs_spectra_core::{BarrierConfig, Result};

/// Deterministic source of test functions and energies.
pub struct FamilyRng {
    rng: ChaCha8Rng,
}

impl FamilyRng {
    pub fn new(seed: u64) -> Self {
        FamilyRng {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    /// A bump inside `(0,a)`, inside `(a,b)` or beyond `b`.
    pub fn bump(&mut self, cfg: &BarrierConfig) -> Result<TestFunction> {
        let amp = self.uniform(0.5, 2.0);
        let (c, w) = match self.rng.random_range(0..3) {
            0 => (cfg.a * self.uniform(0.45, 0.55), cfg.a * self.uniform(0.3, 0.4)),
            1 => {
                let len = cfg.b - cfg.a;
                (cfg.a + len * self.uniform(0.45, 0.55), len * self.uniform(0.3, 0.4))
            }
            _ => (cfg.b + self.uniform(1.5, 3.0), self.uniform(0.8, 1.3)),
        };
        make_position_bump(cfg, c, w, amp)
    }

    /// A packet with an energy profile above the barrier top.
    pub fn spectral(&mut self, cfg: &BarrierConfig, quad: &QuadratureSpec) -> Result<TestFunction> {
        let floor = cfg.v0.max(0.0) + 0.5;
        let hw = self.uniform(2.5, 3.5);
        let c = floor + hw + self.uniform(0.0, 2.0);
        let amp = self.uniform(0.5, 2.0);
        make_spectral_test_function(cfg, c, hw, amp, quad)
    }

    /// `n` functions alternating between bumps and packets.
    pub fn mixed(&mut self, cfg: &BarrierConfig, quad: &QuadratureSpec, n: usize) -> Result<Vec<TestFunction>> {
        (0..n)
            .map(|i| {
                if i % 2 == 0 {
                    self.bump(cfg)
                } else {
                    self.spectral(cfg, quad)
                }
            })
            .collect()
    }

    /// A spectral energy in `(lo, hi)` away from the exclusion bands.
    pub fn energy(&mut self, cfg: &BarrierConfig, lo: f64, hi: f64) -> f64 {
        loop {
            let e = self.uniform(lo, hi);
            if cfg.is_admissible_energy(e) && (e - cfg.v0).abs() > 1e-3 {
                return e;
            }
        }
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn order(&mut self, max: u32) -> u32 {
        self.rng.random_range(0..=max)
    }

    /// A complex scalar with modulus in `[0.25, 2]`.
    pub fn scalar(&mut self) -> num_complex::Complex64 {
        num_complex::Complex64::from_polar(self.uniform(0.25, 2.0), self.uniform(0.0, std::f64::consts::TAU))
    }
}
