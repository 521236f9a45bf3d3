//! Functions on `[0, ∞)` in the position representation.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::bump::{fourier_cutoff, Bump, Template};
use crate::error::{Error, Result};
use crate::green::Resolved;
use crate::model::BarrierConfig;
use crate::quadrature::{GaussLegendre, Grid};
use crate::spectral::DeltaEigenfunction;

use super::basis::{Folded, SpectralBasis};
use super::energy::EnergyProfile;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `e^{-αr} P_i(r)` with one polynomial per spatial region.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPoly {
    pub rate: f64,
    /// Ascending coefficients on `[0,a]`, `(a,b]`, `(b,∞)`.
    pub polys: [Vec<Complex64>; 3],
    pub a: f64,
    pub b: f64,
}

fn poly_eval(p: &[Complex64], r: f64) -> Complex64 {
    p.iter().rev().fold(ZERO, |acc, &c| acc * r + c)
}

fn poly_derivative(p: &[Complex64]) -> Vec<Complex64> {
    if p.len() <= 1 {
        return vec![ZERO];
    }
    p.iter().enumerate().skip(1).map(|(j, &c)| c * j as f64).collect()
}

fn poly_axpy(out: &mut Vec<Complex64>, alpha: Complex64, p: &[Complex64]) {
    if out.len() < p.len() {
        out.resize(p.len(), ZERO);
    }
    for (o, &c) in out.iter_mut().zip(p) {
        *o += alpha * c;
    }
}

/// `∫_lo^hi r^j e^{μr} dr`, `hi = ∞` allowed when `Re μ < 0`.
fn exp_moment(j: usize, mu: Complex64, lo: f64, hi: f64, rule: &GaussLegendre) -> Complex64 {
    let antiderivative = |r: f64| {
        // e^{μr} Σ_l (-1)^l j!/(j-l)! r^{j-l} / μ^{l+1}
        let mut sum = ZERO;
        let mut fall = 1.0;
        let mut mu_pow = mu;
        for l in 0..=j {
            let term = Complex64::new(fall * r.powi((j - l) as i32), 0.0) / mu_pow;
            if l % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            fall *= (j - l) as f64;
            mu_pow *= mu;
        }
        (mu * r).exp() * sum
    };
    if hi.is_infinite() {
        return -antiderivative(lo);
    }
    if mu.norm() * (hi - lo) < 1.0 {
        return rule.integrate(lo, hi, |r| (mu * r).exp() * r.powi(j as i32));
    }
    antiderivative(hi) - antiderivative(lo)
}

impl ExpPoly {
    pub fn new(cfg: &BarrierConfig, rate: f64, coeffs: &[Complex64]) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Domain {
                what: "exponential rate",
                value: rate,
            });
        }
        let p: Vec<Complex64> = if coeffs.is_empty() { vec![ZERO] } else { coeffs.to_vec() };
        Ok(ExpPoly {
            rate,
            polys: [p.clone(), p.clone(), p],
            a: cfg.a,
            b: cfg.b,
        })
    }

    fn region(&self, r: f64) -> usize {
        if r <= self.a {
            0
        } else if r <= self.b {
            1
        } else {
            2
        }
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        if r < 0.0 {
            return ZERO;
        }
        poly_eval(&self.polys[self.region(r)], r) * (-self.rate * r).exp()
    }

    /// `n`-th derivative with the piece on the given side of interfaces.
    pub fn derivative(&self, r: f64, n: usize, right_side: bool) -> Complex64 {
        let region = if right_side && (r == self.a || r == self.b) {
            self.region(r) + 1
        } else {
            self.region(r)
        };
        let mut p = self.polys[region].clone();
        for _ in 0..n {
            // (e^{-αr}P)' = e^{-αr}(P' - αP)
            let mut d = poly_derivative(&p);
            poly_axpy(&mut d, Complex64::new(-self.rate, 0.0), &p);
            p = d;
        }
        poly_eval(&p, r) * (-self.rate * r).exp()
    }

    pub fn apply_h(&self, cfg: &BarrierConfig) -> ExpPoly {
        let alpha = self.rate;
        let polys = core::array::from_fn(|i| {
            let p = &self.polys[i];
            let d1 = poly_derivative(p);
            let d2 = poly_derivative(&d1);
            // -(1/κ)(P'' - 2αP' + α²P) + V P
            let mut out = Vec::new();
            poly_axpy(&mut out, Complex64::new(-1.0 / cfg.kappa, 0.0), &d2);
            poly_axpy(&mut out, Complex64::new(2.0 * alpha / cfg.kappa, 0.0), &d1);
            let c0 = -alpha * alpha / cfg.kappa + cfg.region_potential(i);
            poly_axpy(&mut out, Complex64::new(c0, 0.0), p);
            out
        });
        ExpPoly {
            rate: alpha,
            polys,
            a: self.a,
            b: self.b,
        }
    }

    /// Radius beyond which `|f| < tol · max|coeff|`.
    pub fn cutoff(&self, tol: f64) -> f64 {
        let scale = self
            .polys
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        let degree = self.polys.iter().map(|p| p.len()).max().unwrap_or(1) as f64 - 1.0;
        let mut r = self.b + (1.0 / tol).ln() / self.rate;
        for _ in 0..8 {
            let poly_growth = (1.0 + r).powf(degree) * (degree + 1.0);
            r = self.b + ((poly_growth * scale / scale) / tol).ln() / self.rate;
        }
        r
    }

    /// `∫₀^∞ f(r) σ(r; E) dr` in closed form.
    pub fn transform_at(&self, sigma: &DeltaEigenfunction, rule: &GaussLegendre) -> Complex64 {
        let bounds = [(0.0, self.a), (self.a, self.b), (self.b, f64::INFINITY)];
        let mut total = ZERO;
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            let piece = &sigma.chi.pieces[i];
            let lam = piece.rate.conj();
            let (p, m) = (piece.plus.conj(), piece.minus.conj());
            let mu_p = lam - self.rate;
            let mu_m = -lam - self.rate;
            for (j, &c) in self.polys[i].iter().enumerate() {
                if c == ZERO {
                    continue;
                }
                total += c * (p * exp_moment(j, mu_p, lo, hi, rule) + m * exp_moment(j, mu_m, lo, hi, rule));
            }
        }
        total * sigma.sqrt_rho
    }
}

/// `Σ_n c_n φ⁽ⁿ⁾` for a position bump `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSeries {
    pub bump: Bump,
    pub coeffs: Vec<Complex64>,
    template: Arc<Template>,
}

impl BumpSeries {
    /// Validates that the closed support avoids `0`, `a` and `b`.
    pub fn new(cfg: &BarrierConfig, bump: Bump) -> Result<Self> {
        if !(bump.halfwidth > 0.0) || !bump.center.is_finite() || !bump.amplitude.is_finite() {
            return Err(Error::SupportError {
                reason: "bump needs a positive halfwidth and finite parameters",
            });
        }
        let (lo, hi) = (bump.lower(), bump.upper());
        if lo <= 0.0 {
            return Err(Error::SupportError {
                reason: "bump support must stay inside (0, inf)",
            });
        }
        for x in [cfg.a, cfg.b] {
            if lo <= x && x <= hi {
                return Err(Error::SupportError {
                    reason: "bump support must not contain a barrier edge",
                });
            }
        }
        Ok(BumpSeries {
            bump,
            coeffs: vec![Complex64::new(1.0, 0.0)],
            template: Arc::new(Template::new(8)),
        })
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        self.derivative(r, 0)
    }

    pub fn derivative(&self, r: f64, n: usize) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(|(j, &c)| c * self.bump.derivative(&self.template, r, j + n))
            .fold(ZERO, |a, b| a + b)
    }

    fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Breaks graded towards the support edges, where `e^{-s} s^{2n}` with
    /// `s = 1/(1-x²)` varies too fast for a single panel. Consecutive breaks
    /// differ by at most a factor 2 and an offset 4 in `s`.
    pub fn edge_breaks(&self, out: &mut Vec<f64>) {
        let n = self.order() as f64;
        let log_f = |s: f64| -s + 2.0 * n * s.ln();
        let peak = log_f((2.0 * n).max(1.0));
        let mut s: f64 = 1.25;
        while log_f(s) > peak - 46.0 || s < 2.0 * n {
            let x = (1.0 - 1.0 / s).sqrt() * self.bump.halfwidth;
            out.push(self.bump.center - x);
            out.push(self.bump.center + x);
            s = (2.0 * s).min(s + 4.0);
        }
    }

    pub fn apply_h(&self, cfg: &BarrierConfig) -> BumpSeries {
        let v = cfg.region_potential(cfg.region_index(self.bump.center));
        let mut coeffs = vec![ZERO; self.coeffs.len() + 2];
        for (n, &c) in self.coeffs.iter().enumerate() {
            coeffs[n] += c * v;
            coeffs[n + 2] -= c / cfg.kappa;
        }
        let need = coeffs.len() + 2;
        let template = if self.template.max_order() >= need {
            self.template.clone()
        } else {
            Arc::new(Template::new(need + 4))
        };
        BumpSeries {
            bump: self.bump,
            coeffs,
            template,
        }
    }

    fn scaled(&self, s: Complex64) -> BumpSeries {
        BumpSeries {
            bump: self.bump,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            template: self.template.clone(),
        }
    }
}

/// Precomputed synthesis data of a spectral packet.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketData {
    pub basis: SpectralBasis,
    /// Quadrature weights in `E` of the synthesis nodes.
    pub weights: Vec<f64>,
    /// Radius up to which the synthesis grid resolves the oscillation.
    pub r_resolved: f64,
    pub k_range: (f64, f64),
    /// Profile halfwidth converted to wavenumber at the upper edge.
    pub k_width: f64,
}

/// `φ(r) = ∫ g(E) σ(r; E) dE` for a compactly supported profile `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub profile: EnergyProfile,
    pub data: Arc<PacketData>,
    /// `g(E_j) w_j √ρ(E_j)`.
    coef: Arc<Vec<Complex64>>,
    folded: Arc<Option<Folded>>,
}

impl Packet {
    pub fn new(profile: EnergyProfile, data: Arc<PacketData>) -> Self {
        let coef: Vec<Complex64> = data
            .basis
            .energies
            .iter()
            .zip(&data.weights)
            .zip(&data.basis.sqrt_rho)
            .map(|((&e, &w), &s)| profile.eval(e) * (w * s))
            .collect();
        let folded = data.basis.fold(&coef);
        Packet {
            profile,
            data,
            coef: Arc::new(coef),
            folded: Arc::new(folded),
        }
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        if r < 0.0 {
            return ZERO;
        }
        self.data
            .basis
            .combine_folded(&self.coef, self.folded.as_ref().as_ref(), r)
    }

    pub fn apply_h(&self) -> Packet {
        Packet::new(self.profile.times_energy(), self.data.clone())
    }

    fn scaled(&self, s: Complex64) -> Packet {
        Packet::new(self.profile.scaled(s), self.data.clone())
    }

    /// Radius where the envelope of `(1+r)^n |φ|` drops below `tol` relative
    /// to the peak, capped at the resolved radius.
    pub fn cutoff(&self, tol: f64, weight_power: u32) -> f64 {
        packet_cutoff(self.data.k_width, self.data.basis_b(), tol, weight_power).min(self.data.r_resolved)
    }
}

impl PacketData {
    fn basis_b(&self) -> f64 {
        self.basis.outer_edge()
    }
}

/// Radius beyond which `(1+r)^n |φ|` of a packet whose profile has edge
/// width `k_width` in wavenumber falls below `tol` times its peak.
pub(crate) fn packet_cutoff(k_width: f64, b: f64, tol: f64, weight_power: u32) -> f64 {
    (fourier_cutoff(tol, weight_power) / k_width).max(b + 1.0)
}

/// How a sampled function interpolates between nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleGrid {
    /// Composite Gauss–Legendre nodes, interpolated panel by panel.
    Panels(Arc<Grid>),
    /// Arbitrary increasing nodes starting at 0, four-point cubic
    /// interpolation.
    Cubic(Arc<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub grid: SampleGrid,
    pub values: Arc<Vec<Complex64>>,
    /// Largest wavenumber present, when known.
    pub k_max: Option<f64>,
}

impl Sampled {
    pub fn on_grid(grid: Arc<Grid>, values: Vec<Complex64>, k_max: Option<f64>) -> Self {
        Sampled {
            grid: SampleGrid::Panels(grid),
            values: Arc::new(values),
            k_max,
        }
    }

    pub fn cubic(nodes: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if nodes.len() < 4 || nodes.len() != values.len() {
            return Err(Error::InvalidConfig {
                field: "samples",
                reason: "need at least four nodes and one value per node",
            });
        }
        if nodes[0] != 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig {
                field: "samples",
                reason: "nodes must start at 0 and increase strictly",
            });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "samples",
                reason: "values must be finite",
            });
        }
        Ok(Sampled {
            grid: SampleGrid::Cubic(Arc::new(nodes)),
            values: Arc::new(values),
            k_max: None,
        })
    }

    pub fn upper(&self) -> f64 {
        match &self.grid {
            SampleGrid::Panels(g) => g.upper(),
            SampleGrid::Cubic(n) => *n.last().unwrap(),
        }
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        match &self.grid {
            SampleGrid::Panels(g) => g.interpolate(&self.values, r),
            SampleGrid::Cubic(nodes) => cubic_interpolate(nodes, &self.values, r),
        }
    }

    /// Integration weights matching the interpolation rule.
    pub fn weights(&self) -> Vec<f64> {
        match &self.grid {
            SampleGrid::Panels(g) => g.weights.clone(),
            SampleGrid::Cubic(nodes) => cubic_weights(nodes),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        match &self.grid {
            SampleGrid::Panels(g) => &g.nodes,
            SampleGrid::Cubic(n) => n,
        }
    }
}

fn cubic_stencil(nodes: &[f64], r: f64) -> Option<usize> {
    let n = nodes.len();
    if r < nodes[0] || r > nodes[n - 1] {
        return None;
    }
    let i = nodes.partition_point(|&x| x <= r).saturating_sub(1);
    Some(i.saturating_sub(1).min(n - 4))
}

fn lagrange4(xs: &[f64], r: f64) -> [f64; 4] {
    let mut w = [1.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                w[i] *= (r - xs[j]) / (xs[i] - xs[j]);
            }
        }
    }
    w
}

fn cubic_interpolate(nodes: &[f64], values: &[Complex64], r: f64) -> Complex64 {
    let Some(s) = cubic_stencil(nodes, r) else {
        return ZERO;
    };
    let w = lagrange4(&nodes[s..s + 4], r);
    (0..4).fold(ZERO, |acc, i| acc + values[s + i] * w[i])
}

fn cubic_weights(nodes: &[f64]) -> Vec<f64> {
    let rule = GaussLegendre::new(3);
    let mut out = vec![0.0; nodes.len()];
    for k in 0..nodes.len() - 1 {
        let (lo, hi) = (nodes[k], nodes[k + 1]);
        let half = 0.5 * (hi - lo);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let r = 0.5 * (lo + hi) + half * x;
            let s = cubic_stencil(nodes, r).unwrap();
            let l = lagrange4(&nodes[s..s + 4], r);
            for i in 0..4 {
                out[s + i] += w * half * l[i];
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum RadialFunction {
    Zero,
    ExpPoly(ExpPoly),
    Bump(BumpSeries),
    Packet(Packet),
    Sampled(Sampled),
    Combination(Vec<(Complex64, RadialFunction)>),
    Resolved(Arc<Resolved>),
}

impl RadialFunction {
    /// `e^{-αr} Σ c_j r^j`.
    pub fn exp_poly(cfg: &BarrierConfig, rate: f64, coeffs: &[f64]) -> Result<Self> {
        let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Ok(RadialFunction::ExpPoly(ExpPoly::new(cfg, rate, &c)?))
    }

    pub fn bump(cfg: &BarrierConfig, center: f64, halfwidth: f64, amplitude: f64) -> Result<Self> {
        Ok(RadialFunction::Bump(BumpSeries::new(
            cfg,
            Bump {
                center,
                halfwidth,
                amplitude,
            },
        )?))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RadialFunction::Zero => "zero",
            RadialFunction::ExpPoly(_) => "exp_poly",
            RadialFunction::Bump(_) => "bump",
            RadialFunction::Packet(_) => "packet",
            RadialFunction::Sampled(_) => "sampled",
            RadialFunction::Combination(_) => "combination",
            RadialFunction::Resolved(_) => "resolved",
        }
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        match self {
            RadialFunction::Zero => ZERO,
            RadialFunction::ExpPoly(f) => f.eval(r),
            RadialFunction::Bump(f) => f.eval(r),
            RadialFunction::Packet(f) => f.eval(r),
            RadialFunction::Sampled(f) => f.eval(r),
            RadialFunction::Combination(terms) => terms.iter().fold(ZERO, |acc, (c, f)| acc + c * f.eval(r)),
            RadialFunction::Resolved(f) => f.eval(r),
        }
    }

    pub fn eval_many(&self, rs: &[f64]) -> Vec<Complex64> {
        rs.iter().map(|&r| self.eval(r)).collect()
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RadialFunction::Zero => true,
            RadialFunction::Combination(t) => t.iter().all(|(c, f)| *c == ZERO || f.is_zero()),
            RadialFunction::Bump(b) => b.bump.amplitude == 0.0 || b.coeffs.iter().all(|c| *c == ZERO),
            _ => false,
        }
    }

    /// Interval outside of which `|(1+r)^n f| < tol · scale`.
    pub fn support(&self, tol: f64, weight_power: u32) -> (f64, f64) {
        match self {
            RadialFunction::Zero => (0.0, 0.0),
            RadialFunction::ExpPoly(f) => {
                let mut r = f.cutoff(tol);
                for _ in 0..4 {
                    r = f.cutoff(tol / (1.0 + r).powi(weight_power as i32));
                }
                (0.0, r)
            }
            RadialFunction::Bump(b) => (b.bump.lower(), b.bump.upper()),
            RadialFunction::Packet(p) => (0.0, p.cutoff(tol, weight_power)),
            RadialFunction::Sampled(s) => (0.0, s.upper()),
            RadialFunction::Combination(terms) => {
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                for (_, f) in terms.iter().filter(|(_, f)| !f.is_zero()) {
                    let (l, h) = f.support(tol, weight_power);
                    lo = lo.min(l);
                    hi = hi.max(h);
                }
                if lo > hi {
                    (0.0, 0.0)
                } else {
                    (lo, hi)
                }
            }
            RadialFunction::Resolved(g) => (0.0, g.cutoff(tol, weight_power)),
        }
    }

    /// Points where the function or its derivatives may be non-smooth.
    pub fn breaks(&self, out: &mut Vec<f64>) {
        match self {
            RadialFunction::Bump(b) => {
                out.push(b.bump.lower());
                out.push(b.bump.center);
                out.push(b.bump.upper());
                b.edge_breaks(out);
            }
            RadialFunction::Combination(terms) => terms.iter().for_each(|(_, f)| f.breaks(out)),
            RadialFunction::Resolved(g) => g.source().breaks(out),
            RadialFunction::Sampled(s) => match &s.grid {
                SampleGrid::Panels(g) => out.extend(g.panels.iter().map(|p| p.0)),
                SampleGrid::Cubic(n) => out.extend(n.iter().copied()),
            },
            _ => {}
        }
    }

    /// Wavenumber below which `Uf` vanishes, when known.
    pub fn k_floor(&self) -> Option<f64> {
        match self {
            RadialFunction::Packet(p) => Some(p.data.k_range.0),
            RadialFunction::Combination(terms) => {
                let mut k = f64::INFINITY;
                for (_, f) in terms.iter().filter(|(_, f)| !f.is_zero()) {
                    k = k.min(f.k_floor()?);
                }
                Some(k)
            }
            _ => None,
        }
    }

    /// Wavenumber above which `Uf` vanishes, when known.
    pub fn k_ceiling(&self) -> Option<f64> {
        match self {
            RadialFunction::Zero => Some(0.0),
            RadialFunction::Packet(p) => Some(p.data.k_range.1),
            RadialFunction::Combination(terms) => {
                let mut k: f64 = 0.0;
                for (_, f) in terms.iter().filter(|(_, f)| !f.is_zero()) {
                    k = k.max(f.k_ceiling()?);
                }
                Some(k)
            }
            _ => None,
        }
    }

    /// Largest panel width that resolves the shape of the function.
    pub fn feature_width(&self) -> f64 {
        match self {
            RadialFunction::Zero => f64::INFINITY,
            RadialFunction::ExpPoly(f) => 1.0 / f.rate,
            RadialFunction::Bump(b) => b.bump.halfwidth / (4.0 + b.order() as f64),
            RadialFunction::Packet(p) => core::f64::consts::PI / p.data.k_range.1,
            RadialFunction::Sampled(s) => match &s.grid {
                SampleGrid::Panels(g) => g.panels.iter().map(|(l, h)| h - l).fold(f64::INFINITY, f64::min),
                SampleGrid::Cubic(_) => f64::INFINITY,
            },
            RadialFunction::Combination(terms) => terms
                .iter()
                .map(|(_, f)| f.feature_width())
                .fold(f64::INFINITY, f64::min),
            RadialFunction::Resolved(g) => g.feature_width(),
        }
    }

    /// Wavenumber beyond which `|Uf|` (weighted by `E^moment`) falls below
    /// `tol` relative to its peak, when known a priori.
    pub fn k_content(&self, tol: f64, moment: u32) -> Option<f64> {
        match self {
            RadialFunction::Zero => Some(0.0),
            RadialFunction::ExpPoly(_) => None,
            RadialFunction::Bump(b) => {
                let n = 2 * moment + b.order() as u32;
                Some(fourier_cutoff(tol, n) / b.bump.halfwidth)
            }
            RadialFunction::Packet(p) => Some(p.data.k_range.1),
            RadialFunction::Sampled(s) => s.k_max,
            RadialFunction::Combination(terms) => {
                let mut k: f64 = 0.0;
                for (_, f) in terms.iter().filter(|(_, f)| !f.is_zero()) {
                    k = k.max(f.k_content(tol, moment)?);
                }
                Some(k)
            }
            RadialFunction::Resolved(g) => g.source().k_content(tol, moment),
        }
    }

    /// Radius that bounds the oscillation frequency of `Uf` in `k`.
    pub fn phase_extent(&self, tol: f64) -> f64 {
        match self {
            RadialFunction::ExpPoly(f) => f.b + (1e6f64).ln() / f.rate,
            _ => self.support(tol, 0).1,
        }
    }

    pub fn supports_h(&self) -> bool {
        match self {
            RadialFunction::Zero
            | RadialFunction::ExpPoly(_)
            | RadialFunction::Bump(_)
            | RadialFunction::Packet(_)
            | RadialFunction::Resolved(_) => true,
            RadialFunction::Sampled(_) => false,
            RadialFunction::Combination(t) => t.iter().all(|(_, f)| f.supports_h()),
        }
    }

    /// `h f` in closed form.
    pub fn apply_h(&self, cfg: &BarrierConfig) -> Result<RadialFunction> {
        Ok(match self {
            RadialFunction::Zero => RadialFunction::Zero,
            RadialFunction::ExpPoly(f) => RadialFunction::ExpPoly(f.apply_h(cfg)),
            RadialFunction::Bump(b) => RadialFunction::Bump(b.apply_h(cfg)),
            RadialFunction::Packet(p) => RadialFunction::Packet(p.apply_h()),
            RadialFunction::Sampled(_) => {
                return Err(Error::CapabilityError {
                    what: "h cannot be applied to sampled functions",
                })
            }
            RadialFunction::Combination(terms) => RadialFunction::Combination(
                terms
                    .iter()
                    .map(|(c, f)| Ok((*c, f.apply_h(cfg)?)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            RadialFunction::Resolved(g) => {
                // h (E-H)^{-1} f = E (E-H)^{-1} f - f
                let e = g.energy().as_complex();
                RadialFunction::Combination(vec![
                    (e, RadialFunction::Resolved(g.clone())),
                    (-Complex64::new(1.0, 0.0), g.source().clone()),
                ])
            }
        })
    }

    pub fn apply_h_power(&self, cfg: &BarrierConfig, m: u32) -> Result<RadialFunction> {
        let mut f = self.clone();
        for _ in 0..m {
            f = f.apply_h(cfg)?;
        }
        Ok(f)
    }

    /// `(h + 1)^m f`.
    pub fn apply_h_plus_one(&self, cfg: &BarrierConfig, m: u32) -> Result<RadialFunction> {
        let mut f = self.clone();
        for _ in 0..m {
            f = f.apply_h(cfg)?.plus(&f);
        }
        Ok(f)
    }

    pub fn scaled(&self, s: Complex64) -> RadialFunction {
        match self {
            RadialFunction::Zero => RadialFunction::Zero,
            RadialFunction::ExpPoly(f) => {
                let mut g = f.clone();
                g.polys.iter_mut().flatten().for_each(|c| *c *= s);
                RadialFunction::ExpPoly(g)
            }
            RadialFunction::Bump(b) => RadialFunction::Bump(b.scaled(s)),
            RadialFunction::Packet(p) => RadialFunction::Packet(p.scaled(s)),
            other => RadialFunction::Combination(vec![(s, other.clone())]),
        }
    }

    /// `self + other`, merging like terms where the representation allows.
    pub fn plus(&self, other: &RadialFunction) -> RadialFunction {
        match (self, other) {
            (RadialFunction::Zero, g) => g.clone(),
            (f, RadialFunction::Zero) => f.clone(),
            (RadialFunction::ExpPoly(f), RadialFunction::ExpPoly(g))
                if f.rate == g.rate && f.a == g.a && f.b == g.b =>
            {
                let mut h = f.clone();
                for i in 0..3 {
                    poly_axpy(&mut h.polys[i], Complex64::new(1.0, 0.0), &g.polys[i]);
                }
                RadialFunction::ExpPoly(h)
            }
            (RadialFunction::Bump(f), RadialFunction::Bump(g)) if f.bump == g.bump => {
                let mut coeffs = f.coeffs.clone();
                poly_axpy(&mut coeffs, Complex64::new(1.0, 0.0), &g.coeffs);
                let template = if f.template.max_order() >= g.template.max_order() {
                    f.template.clone()
                } else {
                    g.template.clone()
                };
                RadialFunction::Bump(BumpSeries {
                    bump: f.bump,
                    coeffs,
                    template,
                })
            }
            (RadialFunction::Packet(f), RadialFunction::Packet(g))
                if Arc::ptr_eq(&f.data, &g.data) && f.profile.bump == g.profile.bump =>
            {
                RadialFunction::Packet(Packet::new(f.profile.plus(&g.profile), f.data.clone()))
            }
            (f, g) => {
                let one = Complex64::new(1.0, 0.0);
                let mut out: Vec<(Complex64, RadialFunction)> = Vec::new();
                let mut all = Vec::new();
                f.flatten_into(one, &mut all);
                g.flatten_into(one, &mut all);
                for (c, t) in all {
                    match out.iter_mut().find(|(c0, u)| *c0 == c && u.merges_with(&t)) {
                        Some(slot) => slot.1 = slot.1.plus(&t),
                        None => out.push((c, t)),
                    }
                }
                match out.len() {
                    0 => RadialFunction::Zero,
                    1 if out[0].0 == one => out.pop().unwrap().1,
                    _ => RadialFunction::Combination(out),
                }
            }
        }
    }

    /// Appends the terms of `c·self`, folding the coefficient into terms
    /// that scale natively.
    fn flatten_into(&self, c: Complex64, out: &mut Vec<(Complex64, RadialFunction)>) {
        match self {
            RadialFunction::Zero => {}
            RadialFunction::Combination(terms) => {
                for (d, g) in terms {
                    g.flatten_into(c * d, out);
                }
            }
            RadialFunction::ExpPoly(_) | RadialFunction::Bump(_) | RadialFunction::Packet(_) => {
                let one = Complex64::new(1.0, 0.0);
                out.push((one, if c == one { self.clone() } else { self.scaled(c) }));
            }
            other => out.push((c, other.clone())),
        }
    }

    /// Whether `plus` combines the two into a single term.
    fn merges_with(&self, other: &RadialFunction) -> bool {
        match (self, other) {
            (RadialFunction::ExpPoly(f), RadialFunction::ExpPoly(g)) => f.rate == g.rate && f.a == g.a && f.b == g.b,
            (RadialFunction::Bump(f), RadialFunction::Bump(g)) => f.bump == g.bump,
            (RadialFunction::Packet(f), RadialFunction::Packet(g)) => {
                Arc::ptr_eq(&f.data, &g.data) && f.profile.bump == g.profile.bump
            }
            _ => false,
        }
    }

    /// One-sided `n`-th derivative, exact for closed forms.
    pub fn derivative(&self, r: f64, n: usize, right_side: bool) -> Option<Complex64> {
        match self {
            RadialFunction::Zero => Some(ZERO),
            RadialFunction::ExpPoly(f) => Some(f.derivative(r, n, right_side)),
            RadialFunction::Bump(b) => Some(b.derivative(r, n)),
            RadialFunction::Combination(terms) => {
                let mut acc = ZERO;
                for (c, f) in terms {
                    acc += c * f.derivative(r, n, right_side)?;
                }
                Some(acc)
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn free() -> BarrierConfig {
        BarrierConfig::with_height(0.0).unwrap()
    }

    #[test]
    fn exp_poly_h_image() {
        let cfg = free();
        let f = RadialFunction::exp_poly(&cfg, 1.0, &[0.0, 1.0]).unwrap();
        let hf = f.apply_h(&cfg).unwrap();
        for r in [0.0, 0.5, 1.5, 3.0] {
            let want = (2.0 - r) * (-r).exp();
            assert!((hf.eval(r) - c(want)).norm() < 1e-15);
        }
    }

    #[test]
    fn exp_poly_h_sees_barrier() {
        let cfg = BarrierConfig::default();
        let f = RadialFunction::exp_poly(&cfg, 1.0, &[0.0, 1.0]).unwrap();
        let hf = f.apply_h(&cfg).unwrap();
        let r: f64 = 1.5;
        let want = (2.0 - r) * (-r).exp() + r * (-r).exp();
        assert!((hf.eval(r) - c(want)).norm() < 1e-15);
    }

    #[test]
    fn exp_poly_derivatives() {
        let cfg = BarrierConfig::default();
        let RadialFunction::ExpPoly(f) = RadialFunction::exp_poly(&cfg, 1.0, &[0.0, 1.0]).unwrap() else {
            unreachable!()
        };
        // (r e^{-r})'' = (r - 2) e^{-r}
        let d2 = f.derivative(1.0, 2, false);
        assert!((d2 - c(-(-1f64).exp())).norm() < 1e-15);
    }

    #[test]
    fn exp_moment_matches_quadrature() {
        let rule = GaussLegendre::new(16);
        for (j, mu) in [
            (0, Complex64::new(-1.0, 3.0)),
            (3, Complex64::new(-0.5, -7.0)),
            (2, Complex64::new(0.2, 0.1)),
        ] {
            let exact = exp_moment(j, mu, 0.3, 2.1, &rule);
            let mut q = ZERO;
            let n = 64;
            for p in 0..n {
                let lo = 0.3 + 1.8 * p as f64 / n as f64;
                let hi = 0.3 + 1.8 * (p + 1) as f64 / n as f64;
                q += rule.integrate(lo, hi, |r| (mu * r).exp() * r.powi(j as i32));
            }
            assert!((exact - q).norm() < 1e-13 * q.norm().max(1.0), "j={j}");
        }
        // ∫_0^∞ r² e^{-r} = 2
        let v = exp_moment(2, c(-1.0), 0.0, f64::INFINITY, &rule);
        assert!((v - c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn bump_validation() {
        let cfg = BarrierConfig::default();
        assert!(RadialFunction::bump(&cfg, 4.0, 1.0, 1.0).is_ok());
        assert!(matches!(
            RadialFunction::bump(&cfg, 1.0, 0.5, 1.0),
            Err(Error::SupportError { .. })
        ));
        assert!(RadialFunction::bump(&cfg, 0.2, 0.3, 1.0).is_err());
        assert!(RadialFunction::bump(&cfg, 2.5, 0.5, 1.0).is_err());
        let f = RadialFunction::bump(&cfg, 0.5, 0.3, 1.0).unwrap();
        assert_eq!(f.eval(0.0), ZERO);
        assert_eq!(f.eval(0.85), ZERO);
        let g = RadialFunction::bump(&cfg, 4.0, 1.0, 3.0).unwrap();
        assert!((g.eval(4.0) - c(3.0 * (-1f64).exp())).norm() < 1e-15);
    }

    #[test]
    fn bump_h_image_matches_finite_differences() {
        let cfg = BarrierConfig::default();
        let f = RadialFunction::bump(&cfg, 1.5, 0.4, 1.0).unwrap();
        let hf = f.apply_h(&cfg).unwrap();
        let h = 1e-4;
        for r in [1.3, 1.45, 1.6, 1.8] {
            let d2 = (f.eval(r + h) - f.eval(r) * 2.0 + f.eval(r - h)) / (h * h);
            let want = -d2 + f.eval(r) * cfg.v0;
            assert!((hf.eval(r) - want).norm() < 1e-5 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn cubic_samples_reproduce_cubics() {
        let nodes: Vec<f64> = (0..30).map(|i| (i as f64 * 0.1).powf(1.3)).collect();
        let f = |r: f64| 1.0 + r - 0.5 * r * r + 0.1 * r * r * r;
        let vals = nodes.iter().map(|&r| c(f(r))).collect();
        let s = Sampled::cubic(nodes.clone(), vals).unwrap();
        for r in [0.05, 0.77, 2.1, 3.9] {
            assert!((s.eval(r) - c(f(r))).norm() < 1e-12);
        }
        let w = s.weights();
        let integral: f64 = w.iter().zip(&nodes).map(|(w, &r)| w * f(r)).sum();
        let top = *nodes.last().unwrap();
        let exact = top + top * top / 2.0 - top.powi(3) / 6.0 + 0.025 * top.powi(4);
        assert!((integral - exact).abs() < 1e-11 * exact.abs());
        assert!(Sampled::cubic(vec![0.0, 1.0, 0.5, 2.0], vec![ZERO; 4]).is_err());
        assert!(Sampled::cubic(vec![0.1, 1.0, 1.5, 2.0], vec![ZERO; 4]).is_err());
    }

    #[test]
    fn sampled_refuses_h() {
        let s = Sampled::cubic(vec![0.0, 1.0, 2.0, 3.0], vec![ZERO; 4]).unwrap();
        let f = RadialFunction::Sampled(s);
        assert!(matches!(
            f.apply_h(&BarrierConfig::default()),
            Err(Error::CapabilityError { .. })
        ));
    }

    #[test]
    fn linear_combinations_merge() {
        let cfg = BarrierConfig::default();
        let f = RadialFunction::bump(&cfg, 4.0, 1.0, 1.0).unwrap();
        let g = f.scaled(c(2.0)).plus(&f);
        assert!(matches!(g, RadialFunction::Bump(_)));
        assert!((g.eval(4.2) - f.eval(4.2) * 3.0).norm() < 1e-15);
        let h = RadialFunction::exp_poly(&cfg, 1.0, &[0.0, 1.0]).unwrap();
        let s = f.plus(&h);
        assert!((s.eval(3.5) - f.eval(3.5) - h.eval(3.5)).norm() < 1e-15);
    }
}
