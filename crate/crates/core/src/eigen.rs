//! Eigenfunction families of `h σ = E σ` and their matching coefficients.
//!
//! Every family is piecewise `p·e^{λr} + m·e^{-λr}` on `[0,a]`, `(a,b]` and
//! `(b,∞)`. One region carries fixed seed amplitudes; the other two carry the
//! coefficients `c1..c4` of [`RegionCoefficients`] in left-to-right order.

use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result, Threshold};
use crate::model::{wavenumbers, BarrierConfig, ComplexEnergy, EnergyRegion, Wavenumbers};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const HALF: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyTag {
    /// Regular at the origin, `sin(kr)` on `[0,a]`.
    Chi,
    /// Outgoing `e^{ikr}` beyond `b`.
    ThetaPlus,
    /// Incoming `e^{-ikr}` beyond `b`.
    ThetaMinus,
    /// Regular at the origin, `e^{k̃r} - e^{-k̃r}` on `[0,a]`.
    ChiTilde,
    /// Decaying `e^{-k̃r}` beyond `b`.
    ThetaTilde,
    /// Growing `e^{k̃r}` beyond `b`.
    Sigma1Tilde,
    /// `cos(kr)` on `[0,a]`.
    Sigma2,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 7] = [
        FamilyTag::Chi,
        FamilyTag::ThetaPlus,
        FamilyTag::ThetaMinus,
        FamilyTag::ChiTilde,
        FamilyTag::ThetaTilde,
        FamilyTag::Sigma1Tilde,
        FamilyTag::Sigma2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::Chi => "chi",
            FamilyTag::ThetaPlus => "theta_plus",
            FamilyTag::ThetaMinus => "theta_minus",
            FamilyTag::ChiTilde => "chi_tilde",
            FamilyTag::ThetaTilde => "theta_tilde",
            FamilyTag::Sigma1Tilde => "sigma1_tilde",
            FamilyTag::Sigma2 => "sigma2",
        }
    }

    /// Whether the family is defined for energies in `region`.
    ///
    /// `Chi` is also accepted below the axis, where it pairs with
    /// `ThetaMinus` in the resolvent kernel.
    pub fn valid_in(self, region: EnergyRegion) -> bool {
        use EnergyRegion::*;
        match self {
            FamilyTag::Chi => matches!(region, UpperHalf | LowerHalf | PositiveReal),
            FamilyTag::ThetaPlus => matches!(region, UpperHalf | PositiveReal),
            FamilyTag::ThetaMinus => matches!(region, LowerHalf | PositiveReal),
            FamilyTag::ChiTilde | FamilyTag::ThetaTilde | FamilyTag::Sigma1Tilde => region == NegativeRe,
            FamilyTag::Sigma2 => matches!(region, UpperHalf | LowerHalf | PositiveReal),
        }
    }

    fn is_tilde(self) -> bool {
        matches!(
            self,
            FamilyTag::ChiTilde | FamilyTag::ThetaTilde | FamilyTag::Sigma1Tilde
        )
    }

    /// True when the seed amplitudes sit in `[0,a]` (otherwise beyond `b`).
    fn seeded_left(self) -> bool {
        matches!(self, FamilyTag::Chi | FamilyTag::ChiTilde | FamilyTag::Sigma2)
    }

    /// `(plus, minus)` seed amplitudes.
    fn seed(self) -> (Complex64, Complex64) {
        match self {
            // sin(kr) = (e^{ikr} - e^{-ikr}) / 2i
            FamilyTag::Chi => (Complex64::new(0.0, -HALF), Complex64::new(0.0, HALF)),
            FamilyTag::Sigma2 => (Complex64::new(HALF, 0.0), Complex64::new(HALF, 0.0)),
            FamilyTag::ChiTilde => (ONE, -ONE),
            FamilyTag::ThetaPlus | FamilyTag::Sigma1Tilde => (ONE, Complex64::new(0.0, 0.0)),
            FamilyTag::ThetaMinus | FamilyTag::ThetaTilde => (Complex64::new(0.0, 0.0), ONE),
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or(Error::InvalidConfig {
                field: "family",
                reason: "unknown eigenfunction family",
            })
    }
}

/// The four matching coefficients of one family at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCoefficients {
    pub c1: Complex64,
    pub c2: Complex64,
    pub c3: Complex64,
    pub c4: Complex64,
}

impl RegionCoefficients {
    pub fn as_array(&self) -> [Complex64; 4] {
        [self.c1, self.c2, self.c3, self.c4]
    }

    /// `max_i |c_i - d_i| / max_i |c_i|`.
    pub fn relative_distance(&self, other: &RegionCoefficients) -> f64 {
        let a = self.as_array();
        let b = other.as_array();
        let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

/// Which form of the `Ã₂` exponent to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transcription {
    /// `e^{-Q̃a}`.
    #[default]
    Corrected,
    /// `e^{-√(-Q̃)a}` as typeset in the source tables; kept only to show that
    /// it breaks continuity.
    Printed,
}

fn check_family(cfg: &BarrierConfig, family: FamilyTag, e: ComplexEnergy) -> Result<Wavenumbers> {
    let region = e.region();
    if !family.valid_in(region) {
        return Err(Error::IncompatibleRegion { family, region });
    }
    wavenumbers(cfg, e)
}

pub fn closed_form_coefficients(
    cfg: &BarrierConfig,
    family: FamilyTag,
    e: ComplexEnergy,
) -> Result<RegionCoefficients> {
    closed_form_coefficients_with(cfg, family, e, Transcription::Corrected)
}

pub fn closed_form_coefficients_with(
    cfg: &BarrierConfig,
    family: FamilyTag,
    e: ComplexEnergy,
    transcription: Transcription,
) -> Result<RegionCoefficients> {
    let w = check_family(cfg, family, e)?;
    Ok(coefficients_from(cfg, family, &w, transcription))
}

fn coefficients_from(
    cfg: &BarrierConfig,
    family: FamilyTag,
    w: &Wavenumbers,
    transcription: Transcription,
) -> RegionCoefficients {
    let (a, b) = (cfg.a, cfg.b);
    match family {
        FamilyTag::Chi => j_coefficients(w.k, w.q, a, b),
        FamilyTag::Sigma2 => c_coefficients(w.k, w.q, a, b),
        FamilyTag::ThetaPlus => a_plus_coefficients(w.k, w.q, a, b),
        FamilyTag::ThetaMinus => a_minus_coefficients(w.k, w.q, a, b),
        FamilyTag::ChiTilde => j_tilde_coefficients(w.k_tilde, w.q_tilde, a, b),
        FamilyTag::ThetaTilde => a_tilde_coefficients(w.k_tilde, w.q_tilde, a, b, transcription),
        FamilyTag::Sigma1Tilde => b_tilde_coefficients(w.k_tilde, w.q_tilde, a, b),
    }
}

fn exp(z: Complex64) -> Complex64 {
    z.exp()
}

fn j_tilde_coefficients(k: Complex64, q: Complex64, a: f64, b: f64) -> RegionCoefficients {
    let j1 = exp(-q * a) * HALF * ((ONE + k / q) * exp(k * a) + (-ONE + k / q) * exp(-k * a));
    let j2 = exp(q * a) * HALF * ((ONE - k / q) * exp(k * a) + (-ONE - k / q) * exp(-k * a));
    let j3 = exp(-k * b) * HALF * ((ONE + q / k) * exp(q * b) * j1 + (ONE - q / k) * exp(-q * b) * j2);
    let j4 = exp(k * b) * HALF * ((ONE - q / k) * exp(q * b) * j1 + (ONE + q / k) * exp(-q * b) * j2);
    RegionCoefficients {
        c1: j1,
        c2: j2,
        c3: j3,
        c4: j4,
    }
}

fn a_tilde_coefficients(
    k: Complex64,
    q: Complex64,
    a: f64,
    b: f64,
    transcription: Transcription,
) -> RegionCoefficients {
    let a3 = exp(-q * b) * HALF * (ONE - k / q) * exp(-k * b);
    let a4 = exp(q * b) * HALF * (ONE + k / q) * exp(-k * b);
    let a1 = exp(-k * a) * HALF * ((ONE + q / k) * exp(q * a) * a3 + (ONE - q / k) * exp(-q * a) * a4);
    let a2_decay = match transcription {
        Transcription::Corrected => exp(-q * a),
        Transcription::Printed => exp(-crate::model::branch_sqrt(-q) * a),
    };
    let a2 = exp(k * a) * HALF * ((ONE - q / k) * exp(q * a) * a3 + (ONE + q / k) * a2_decay * a4);
    RegionCoefficients {
        c1: a1,
        c2: a2,
        c3: a3,
        c4: a4,
    }
}

fn b_tilde_coefficients(k: Complex64, q: Complex64, a: f64, b: f64) -> RegionCoefficients {
    let b3 = exp(-q * b) * HALF * (ONE + k / q) * exp(k * b);
    let b4 = exp(q * b) * HALF * (ONE - k / q) * exp(k * b);
    let b1 = exp(-k * a) * HALF * ((ONE + q / k) * exp(q * a) * b3 + (ONE - q / k) * exp(-q * a) * b4);
    let b2 = exp(k * a) * HALF * ((ONE - q / k) * exp(q * a) * b3 + (ONE + q / k) * exp(-q * a) * b4);
    RegionCoefficients {
        c1: b1,
        c2: b2,
        c3: b3,
        c4: b4,
    }
}

/// Outer-region pair shared by `J` and `C`.
fn outer_from_inner(k: Complex64, q: Complex64, b: f64, c1: Complex64, c2: Complex64) -> (Complex64, Complex64) {
    let c3 = exp(-I * k * b) * HALF * ((ONE + q / k) * exp(I * q * b) * c1 + (ONE - q / k) * exp(-I * q * b) * c2);
    let c4 = exp(I * k * b) * HALF * ((ONE - q / k) * exp(I * q * b) * c1 + (ONE + q / k) * exp(-I * q * b) * c2);
    (c3, c4)
}

fn j_coefficients(k: Complex64, q: Complex64, a: f64, b: f64) -> RegionCoefficients {
    let (s, c) = ((k * a).sin(), (k * a).cos());
    let j1 = exp(-I * q * a) * HALF * (s + k / (I * q) * c);
    let j2 = exp(I * q * a) * HALF * (s - k / (I * q) * c);
    let (j3, j4) = outer_from_inner(k, q, b, j1, j2);
    RegionCoefficients {
        c1: j1,
        c2: j2,
        c3: j3,
        c4: j4,
    }
}

fn c_coefficients(k: Complex64, q: Complex64, a: f64, b: f64) -> RegionCoefficients {
    let (s, c) = ((k * a).sin(), (k * a).cos());
    let c1 = exp(-I * q * a) * HALF * (c - k / (I * q) * s);
    let c2 = exp(I * q * a) * HALF * (c + k / (I * q) * s);
    let (c3, c4) = outer_from_inner(k, q, b, c1, c2);
    RegionCoefficients { c1, c2, c3, c4 }
}

/// Inner-region pair shared by `A⁺` and `A⁻`.
fn inner_from_barrier(k: Complex64, q: Complex64, a: f64, a3: Complex64, a4: Complex64) -> (Complex64, Complex64) {
    let a1 = exp(-I * k * a) * HALF * ((ONE + q / k) * exp(I * q * a) * a3 + (ONE - q / k) * exp(-I * q * a) * a4);
    let a2 = exp(I * k * a) * HALF * ((ONE - q / k) * exp(I * q * a) * a3 + (ONE + q / k) * exp(-I * q * a) * a4);
    (a1, a2)
}

fn a_plus_coefficients(k: Complex64, q: Complex64, a: f64, b: f64) -> RegionCoefficients {
    let a3 = exp(-I * q * b) * HALF * (ONE + k / q) * exp(I * k * b);
    let a4 = exp(I * q * b) * HALF * (ONE - k / q) * exp(I * k * b);
    let (a1, a2) = inner_from_barrier(k, q, a, a3, a4);
    RegionCoefficients {
        c1: a1,
        c2: a2,
        c3: a3,
        c4: a4,
    }
}

fn a_minus_coefficients(k: Complex64, q: Complex64, a: f64, b: f64) -> RegionCoefficients {
    let a3 = exp(-I * q * b) * HALF * (ONE - k / q) * exp(-I * k * b);
    let a4 = exp(I * q * b) * HALF * (ONE + k / q) * exp(-I * k * b);
    let (a1, a2) = inner_from_barrier(k, q, a, a3, a4);
    RegionCoefficients {
        c1: a1,
        c2: a2,
        c3: a3,
        c4: a4,
    }
}

/// Exponents `λ` of the three regions.
fn rates(family: FamilyTag, w: &Wavenumbers) -> [Complex64; 3] {
    if family.is_tilde() {
        [w.k_tilde, w.q_tilde, w.k_tilde]
    } else {
        [I * w.k, I * w.q, I * w.k]
    }
}

/// Carries `(p, m)` of `p e^{λ_from x} + m e^{-λ_from x}` across the interface
/// at `x` by solving the value/derivative matching system for the amplitudes
/// with rate `λ_to`.
fn match_across(
    x: f64,
    from: (Complex64, Complex64, Complex64),
    to_rate: Complex64,
    energy: Complex64,
) -> Result<(Complex64, Complex64)> {
    let (l, p, m) = from;
    let ep = (l * x).exp();
    let em = (-l * x).exp();
    let value = p * ep + m * em;
    let slope = l * (p * ep - m * em);
    // [ e^{μx}    e^{-μx}  ] [P]   [value]
    // [ μe^{μx}  -μe^{-μx} ] [M] = [slope]
    let mu = to_rate;
    let (a11, a12) = ((mu * x).exp(), (-mu * x).exp());
    let (a21, a22) = (mu * a11, -mu * a12);
    let det = a11 * a22 - a12 * a21;
    let scale = a11.norm() * a22.norm() + a12.norm() * a21.norm();
    if !(det.norm() > 1e-14 * scale) {
        return Err(Error::DegenerateEnergy {
            threshold: Threshold::BarrierTop,
            energy,
        });
    }
    let pp = (value * a22 - a12 * slope) / det;
    let mm = (a11 * slope - a21 * value) / det;
    Ok((pp, mm))
}

/// Coefficients from numerically propagating the seed across both
/// interfaces. Independent of the closed forms.
pub fn transfer_matrix_coefficients(
    cfg: &BarrierConfig,
    family: FamilyTag,
    e: ComplexEnergy,
) -> Result<RegionCoefficients> {
    let w = check_family(cfg, family, e)?;
    let lam = rates(family, &w);
    let (sp, sm) = family.seed();
    let z = e.as_complex();
    if family.seeded_left() {
        let (p1, m1) = match_across(cfg.a, (lam[0], sp, sm), lam[1], z)?;
        let (p2, m2) = match_across(cfg.b, (lam[1], p1, m1), lam[2], z)?;
        Ok(RegionCoefficients {
            c1: p1,
            c2: m1,
            c3: p2,
            c4: m2,
        })
    } else {
        let (p1, m1) = match_across(cfg.b, (lam[2], sp, sm), lam[1], z)?;
        let (p0, m0) = match_across(cfg.a, (lam[1], p1, m1), lam[0], z)?;
        Ok(RegionCoefficients {
            c1: p0,
            c2: m0,
            c3: p1,
            c4: m1,
        })
    }
}

/// One piece `p e^{λr} + m e^{-λr}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub rate: Complex64,
    pub plus: Complex64,
    pub minus: Complex64,
}

impl Piece {
    /// `order`-th derivative at `r`.
    pub fn derivative(&self, r: f64, order: u32) -> Complex64 {
        let ep = (self.rate * r).exp();
        let em = (-self.rate * r).exp();
        let lp = self.rate.powu(order);
        let lm = if order.is_multiple_of(2) { lp } else { -lp };
        self.plus * lp * ep + self.minus * lm * em
    }

    pub fn value(&self, r: f64) -> Complex64 {
        self.plus * (self.rate * r).exp() + self.minus * (-self.rate * r).exp()
    }

    /// `(f, f')` at `r`.
    pub fn value_and_slope(&self, r: f64) -> (Complex64, Complex64) {
        let ep = self.plus * (self.rate * r).exp();
        let em = self.minus * (-self.rate * r).exp();
        (ep + em, self.rate * (ep - em))
    }
}

/// An eigenfunction assembled from its three pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenfunction {
    pub family: FamilyTag,
    pub energy: ComplexEnergy,
    pub a: f64,
    pub b: f64,
    pub pieces: [Piece; 3],
}

impl Eigenfunction {
    pub fn new(cfg: &BarrierConfig, family: FamilyTag, e: ComplexEnergy) -> Result<Self> {
        let coeffs = closed_form_coefficients(cfg, family, e)?;
        Self::from_coefficients(cfg, family, e, &coeffs)
    }

    pub fn from_coefficients(
        cfg: &BarrierConfig,
        family: FamilyTag,
        e: ComplexEnergy,
        c: &RegionCoefficients,
    ) -> Result<Self> {
        let w = check_family(cfg, family, e)?;
        Ok(Self::assemble(cfg, family, e, &w, c))
    }

    fn assemble(
        cfg: &BarrierConfig,
        family: FamilyTag,
        e: ComplexEnergy,
        w: &Wavenumbers,
        c: &RegionCoefficients,
    ) -> Self {
        let lam = rates(family, w);
        let (sp, sm) = family.seed();
        let (amp0, amp1, amp2) = if family.seeded_left() {
            ((sp, sm), (c.c1, c.c2), (c.c3, c.c4))
        } else {
            ((c.c1, c.c2), (c.c3, c.c4), (sp, sm))
        };
        let piece = |i: usize, (plus, minus): (Complex64, Complex64)| Piece {
            rate: lam[i],
            plus,
            minus,
        };
        Eigenfunction {
            family,
            energy: e,
            a: cfg.a,
            b: cfg.b,
            pieces: [piece(0, amp0), piece(1, amp1), piece(2, amp2)],
        }
    }

    /// Builds the family at any non-degenerate energy, ignoring the region
    /// it is displayed for. Used to compare region formulas at their borders.
    #[cfg(test)]
    pub(crate) fn unchecked(cfg: &BarrierConfig, family: FamilyTag, e: ComplexEnergy) -> Result<Self> {
        let w = wavenumbers(cfg, e)?;
        let c = coefficients_from(cfg, family, &w, Transcription::Corrected);
        Ok(Self::assemble(cfg, family, e, &w, &c))
    }

    /// Region index with interface points assigned to the left piece.
    pub fn region_of(&self, r: f64) -> usize {
        if r <= self.a {
            0
        } else if r <= self.b {
            1
        } else {
            2
        }
    }

    pub fn value(&self, r: f64) -> Complex64 {
        self.pieces[self.region_of(r)].value(r)
    }

    pub fn derivative(&self, r: f64, order: u32) -> Complex64 {
        self.pieces[self.region_of(r)].derivative(r, order)
    }

    pub fn value_and_slope(&self, r: f64) -> (Complex64, Complex64) {
        self.pieces[self.region_of(r)].value_and_slope(r)
    }

    /// Largest relative jump of value or slope across `a` and `b`.
    pub fn continuity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (x, l, r) in [(self.a, 0, 1), (self.b, 1, 2)] {
            let (fl, dl) = self.pieces[l].value_and_slope(x);
            let (fr, dr) = self.pieces[r].value_and_slope(x);
            let vs = fl.norm().max(fr.norm());
            let ds = dl.norm().max(dr.norm());
            // Value and slope scales are coupled through the local rate.
            let rate = self.pieces[l].rate.norm().max(self.pieces[r].rate.norm());
            let scale = vs.max(ds / rate.max(1e-300));
            if scale > 0.0 {
                worst = worst.max((fl - fr).norm() / scale);
                worst = worst.max((dl - dr).norm() / (rate * scale));
            }
        }
        worst
    }
}

pub fn eval_eigenfunction(cfg: &BarrierConfig, family: FamilyTag, e: ComplexEnergy, r: f64) -> Result<Complex64> {
    if !(r >= 0.0) {
        return Err(Error::Domain {
            what: "radius",
            value: r,
        });
    }
    Ok(Eigenfunction::new(cfg, family, e)?.value(r))
}

/// `f g' - f' g` from analytic derivatives.
pub fn wronskian(
    cfg: &BarrierConfig,
    family_a: FamilyTag,
    family_b: FamilyTag,
    e: ComplexEnergy,
    r: f64,
) -> Result<Complex64> {
    if !(r >= 0.0) || r == cfg.a || r == cfg.b {
        return Err(Error::Domain {
            what: "wronskian radius",
            value: r,
        });
    }
    let f = Eigenfunction::new(cfg, family_a, e)?;
    let g = Eigenfunction::new(cfg, family_b, e)?;
    Ok(wronskian_of(&f, &g, r))
}

pub fn wronskian_of(f: &Eigenfunction, g: &Eigenfunction, r: f64) -> Complex64 {
    let (fv, fd) = f.value_and_slope(r);
    let (gv, gd) = g.value_and_slope(r);
    fv * gd - fd * gv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::second_derivative_5pt;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free() -> BarrierConfig {
        BarrierConfig::with_height(0.0).unwrap()
    }

    fn sample_energy(region: EnergyRegion, x: f64) -> ComplexEnergy {
        match region {
            EnergyRegion::NegativeRe => ComplexEnergy::new(-x, 0.3 * x),
            EnergyRegion::UpperHalf => ComplexEnergy::new(x, 0.4 * x),
            EnergyRegion::LowerHalf => ComplexEnergy::new(x, -0.4 * x),
            EnergyRegion::PositiveReal => ComplexEnergy::real(x),
        }
    }

    #[test]
    fn free_chi_coefficients() {
        let co = closed_form_coefficients(&free(), FamilyTag::Chi, 1.0.into()).unwrap();
        assert!((co.c3 - c(0.0, -0.5)).norm() < 1e-15);
        assert!((co.c4 - c(0.0, 0.5)).norm() < 1e-15);
        let v = eval_eigenfunction(&free(), FamilyTag::Chi, 1.0.into(), PI / 2.0).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn free_theta_plus_is_plane_wave() {
        let cfg = free();
        let e = ComplexEnergy::real(2.0);
        let co = transfer_matrix_coefficients(&cfg, FamilyTag::ThetaPlus, e).unwrap();
        let k = 2f64.sqrt();
        for r in [0.3, 1.4, 2.7] {
            let f = Eigenfunction::from_coefficients(&cfg, FamilyTag::ThetaPlus, e, &co).unwrap();
            let want = c(0.0, k * r).exp();
            assert!((f.value(r) - want).norm() < 1e-14);
        }
        assert!(co.c2.norm() < 1e-15 && co.c4.norm() < 1e-15);
    }

    #[test]
    fn theta_plus_seed_region() {
        let cfg = BarrierConfig::default();
        let v = eval_eigenfunction(&cfg, FamilyTag::ThetaPlus, 2.0.into(), 3.0).unwrap();
        let want = c(0.0, 2f64.sqrt() * 3.0).exp();
        assert!((v - want).norm() < 1e-15);
    }

    #[test]
    fn closed_form_matches_transfer_matrix_everywhere() {
        let cfg = BarrierConfig::default();
        for family in FamilyTag::ALL {
            for region in [
                EnergyRegion::NegativeRe,
                EnergyRegion::UpperHalf,
                EnergyRegion::LowerHalf,
                EnergyRegion::PositiveReal,
            ] {
                if !family.valid_in(region) {
                    continue;
                }
                for i in 0..50 {
                    let x = 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0);
                    let e = sample_energy(region, x);
                    if !cfg.is_admissible_energy(e.re) && e.is_real() {
                        continue;
                    }
                    let cf = closed_form_coefficients(&cfg, family, e).unwrap();
                    let tm = transfer_matrix_coefficients(&cfg, family, e).unwrap();
                    let d = cf.relative_distance(&tm);
                    assert!(d < 1e-10, "{family} {e:?}: {d:e}");
                    let f = Eigenfunction::from_coefficients(&cfg, family, e, &cf).unwrap();
                    assert!(f.continuity_residual() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn incompatible_region_is_rejected() {
        let cfg = BarrierConfig::default();
        let err = closed_form_coefficients(&cfg, FamilyTag::ThetaPlus, ComplexEnergy::new(1.0, -1.0));
        assert!(matches!(err, Err(Error::IncompatibleRegion { .. })));
        let err = closed_form_coefficients(&cfg, FamilyTag::ChiTilde, 2.0.into());
        assert!(matches!(err, Err(Error::IncompatibleRegion { .. })));
        let err = closed_form_coefficients(&cfg, FamilyTag::Chi, 1.0.into());
        assert!(matches!(err, Err(Error::DegenerateEnergy { .. })));
    }

    #[test]
    fn printed_a2_breaks_continuity() {
        let cfg = BarrierConfig::default();
        let e = ComplexEnergy::real(-1.0);
        let bad = closed_form_coefficients_with(&cfg, FamilyTag::ThetaTilde, e, Transcription::Printed).unwrap();
        let f = Eigenfunction::from_coefficients(&cfg, FamilyTag::ThetaTilde, e, &bad).unwrap();
        assert!(f.continuity_residual() > 1e-3);
        let good = Eigenfunction::new(&cfg, FamilyTag::ThetaTilde, e).unwrap();
        assert!(good.continuity_residual() < 1e-12);
    }

    #[test]
    fn wronskian_free_value() {
        let w = wronskian(&free(), FamilyTag::Chi, FamilyTag::ThetaPlus, 1.0.into(), 0.3).unwrap();
        assert!((w - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn wronskian_identities() {
        let cfg = BarrierConfig::default();
        let e = ComplexEnergy::real(2.0);
        let wn = wavenumbers(&cfg, e).unwrap();
        let j = closed_form_coefficients(&cfg, FamilyTag::Chi, e).unwrap();
        for r in [0.5, 1.5, 3.0] {
            let w = wronskian(&cfg, FamilyTag::Chi, FamilyTag::ThetaPlus, e, r).unwrap();
            let want = 2.0 * I * wn.k * j.c4;
            assert!((w - want).norm() < 1e-10 * want.norm());
            let w = wronskian(&cfg, FamilyTag::Chi, FamilyTag::ThetaMinus, e, r).unwrap();
            let want = -2.0 * I * wn.k * j.c3;
            assert!((w - want).norm() < 1e-10 * want.norm());
        }
        let e = ComplexEnergy::real(-1.0);
        let wn = wavenumbers(&cfg, e).unwrap();
        let jt = closed_form_coefficients(&cfg, FamilyTag::ChiTilde, e).unwrap();
        let want = -2.0 * wn.k_tilde * jt.c3;
        for r in [0.5, 1.5, 3.0] {
            let w = wronskian(&cfg, FamilyTag::ChiTilde, FamilyTag::ThetaTilde, e, r).unwrap();
            assert!((w - want).norm() < 1e-10 * want.norm());
        }
        assert!(wronskian(&cfg, FamilyTag::Chi, FamilyTag::Sigma2, 2.0.into(), 1.0).is_err());
    }

    #[test]
    fn schrodinger_residual_by_finite_differences() {
        let cfg = BarrierConfig::default();
        let cases = [
            (FamilyTag::Chi, ComplexEnergy::real(0.5)),
            (FamilyTag::Chi, ComplexEnergy::new(2.0, 1.0)),
            (FamilyTag::ThetaPlus, ComplexEnergy::real(3.0)),
            (FamilyTag::ThetaMinus, ComplexEnergy::new(2.0, -0.5)),
            (FamilyTag::Sigma2, ComplexEnergy::real(3.0)),
            (FamilyTag::ChiTilde, ComplexEnergy::new(-1.0, 0.2)),
            (FamilyTag::ThetaTilde, ComplexEnergy::real(-1.0)),
            (FamilyTag::Sigma1Tilde, ComplexEnergy::real(-2.0)),
        ];
        for (family, e) in cases {
            let f = Eigenfunction::new(&cfg, family, e).unwrap();
            for r in [0.3, 0.8, 1.3, 1.7, 2.5, 4.0] {
                let h = 1e-4;
                let d2 = second_derivative_5pt(|x| Ok(f.value(x)), r, h).unwrap();
                let v = cfg.region_potential(cfg.region_index(r));
                let hf = -d2 / cfg.kappa + f.value(r) * v;
                let res = (hf - f.value(r) * e.as_complex()).norm();
                let tol = 1e-6 * (1.0 + e.as_complex().norm()) * f.value(r).norm().max(1e-3);
                assert!(res < tol, "{family} at r={r}: {res:e}");
            }
        }
    }

    #[test]
    fn chi_is_real_on_positive_axis() {
        let cfg = BarrierConfig::default();
        for e in [0.3, 0.9, 1.1, 4.0, 25.0] {
            let f = Eigenfunction::new(&cfg, FamilyTag::Chi, e.into()).unwrap();
            let j = closed_form_coefficients(&cfg, FamilyTag::Chi, e.into()).unwrap();
            assert!((j.c3 - j.c4.conj()).norm() < 1e-12 * j.c4.norm());
            for r in [0.2, 1.5, 2.5, 7.0] {
                assert!(f.value(r).im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn family_names_round_trip() {
        for f in FamilyTag::ALL {
            assert_eq!(f.name().parse::<FamilyTag>().unwrap(), f);
        }
        assert!("psi".parse::<FamilyTag>().is_err());
    }

    #[test]
    fn continuity_shrinks_linearly_off_interface() {
        let cfg = BarrierConfig::default();
        let f = Eigenfunction::new(&cfg, FamilyTag::Chi, 0.5.into()).unwrap();
        let jump = |d: f64| (f.value(cfg.a + d) - f.value(cfg.a - d)).norm();
        let r1 = jump(1e-3);
        let r2 = jump(5e-4);
        assert!((r1 / r2 - 2.0).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn conjugation_symmetry(re in 0.1f64..6.0, im in 0.05f64..3.0, r in 0.0f64..5.0) {
            let cfg = BarrierConfig::default();
            let e = ComplexEnergy::new(re, im);
            let f = Eigenfunction::new(&cfg, FamilyTag::Sigma2, e).unwrap();
            let g = Eigenfunction::new(&cfg, FamilyTag::Sigma2, e.conj()).unwrap();
            let (u, v) = (f.value(r), g.value(r));
            prop_assert!((u.conj() - v).norm() <= 1e-10 * (1.0 + u.norm()));
            let e = ComplexEnergy::new(-re, im);
            let f = Eigenfunction::new(&cfg, FamilyTag::Sigma1Tilde, e).unwrap();
            let g = Eigenfunction::new(&cfg, FamilyTag::Sigma1Tilde, e.conj()).unwrap();
            let (u, v) = (f.value(r), g.value(r));
            prop_assert!((u.conj() - v).norm() <= 1e-10 * (1.0 + u.norm()));
        }

        #[test]
        fn wronskian_is_constant(re in 0.1f64..8.0, im in 0.01f64..2.0, r in 0.05f64..6.0) {
            let cfg = BarrierConfig::default();
            let e = ComplexEnergy::new(re, im);
            prop_assume!((e.as_complex() - cfg.v0).norm() > 1e-3);
            let f = Eigenfunction::new(&cfg, FamilyTag::Chi, e).unwrap();
            let g = Eigenfunction::new(&cfg, FamilyTag::ThetaPlus, e).unwrap();
            prop_assume!(r != cfg.a && r != cfg.b);
            let w0 = wronskian_of(&f, &g, 0.5);
            let w = wronskian_of(&f, &g, r);
            prop_assert!((w - w0).norm() <= 1e-9 * w0.norm());
        }
    }
}
