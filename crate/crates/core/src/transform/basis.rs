//! δ-normalized eigenfunctions tabulated at the nodes of an energy grid.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::eigen::Piece;
use crate::error::Result;
use crate::model::BarrierConfig;
use crate::spectral::DeltaEigenfunction;

/// `Re(p e^{λr} + m e^{-λr})` with `λ = x + iy`, pre-split for fast
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RealPiece {
    x: f64,
    y: f64,
    pr: f64,
    pi: f64,
    mr: f64,
    mi: f64,
}

impl RealPiece {
    fn new(p: &Piece) -> Self {
        RealPiece {
            x: p.rate.re,
            y: p.rate.im,
            pr: p.plus.re,
            pi: p.plus.im,
            mr: p.minus.re,
            mi: p.minus.im,
        }
    }

    #[inline]
    fn value(&self, r: f64) -> f64 {
        let (s, c) = (self.y * r).sin_cos();
        if self.x == 0.0 {
            (self.pr + self.mr) * c + (self.mi - self.pi) * s
        } else {
            let ep = (self.x * r).exp();
            let em = 1.0 / ep;
            ep * (self.pr * c - self.pi * s) + em * (self.mr * c + self.mi * s)
        }
    }
}

/// `σ(r; E_j)` for a fixed list of energies.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub energies: Vec<f64>,
    pub rho: Vec<f64>,
    pub sqrt_rho: Vec<f64>,
    pieces: Vec<[RealPiece; 3]>,
    blocks: Option<Blocks>,
    a: f64,
    b: f64,
}

/// Runs of energies whose wavenumber offsets repeat from run to run, so that
/// `e^{i k_j r}` outside the barrier costs one rotation per node.
#[derive(Debug, Clone, PartialEq)]
struct Blocks {
    /// `(first index, template, k of the first node)`; runs without a
    /// template are evaluated directly.
    starts: Vec<(usize, Option<usize>, f64)>,
    /// Run length.
    size: usize,
    /// `k_j` of every energy.
    ys: Vec<f64>,
    /// Offsets `k_j - k_first` shared by the runs.
    templates: Vec<Vec<f64>>,
    /// Actual offset minus template offset.
    residual: Vec<f64>,
    /// `(p_r + m_r, m_i - p_i)` for `r ≤ a` and `r > b`.
    coef: Vec<[(f64, f64); 2]>,
}

const MAX_TEMPLATES: usize = 32;
const OFFSET_TOL: f64 = 1e-12;

impl Blocks {
    fn build(pieces: &[[RealPiece; 3]], size: usize) -> Option<Self> {
        if size < 2 || pieces.len() < 2 * size {
            return None;
        }
        let mut starts = Vec::new();
        let mut templates: Vec<Vec<f64>> = Vec::new();
        let mut residual = Vec::with_capacity(pieces.len());
        let mut coef = Vec::with_capacity(pieces.len());
        for p in pieces {
            let (inner, outer) = (&p[0], &p[2]);
            if inner.x != 0.0 || outer.x != 0.0 || inner.y != outer.y {
                return None;
            }
            coef.push([
                (inner.pr + inner.mr, inner.mi - inner.pi),
                (outer.pr + outer.mr, outer.mi - outer.pi),
            ]);
        }
        for (b, run) in pieces.chunks(size).enumerate() {
            let y0 = run[0][2].y;
            let offsets: Vec<f64> = run.iter().map(|p| p[2].y - y0).collect();
            let found = templates.iter().position(|t| {
                t.len() == offsets.len() && t.iter().zip(&offsets).all(|(x, y)| (x - y).abs() <= OFFSET_TOL)
            });
            let t = match found {
                Some(t) => Some(t),
                None if templates.len() < MAX_TEMPLATES && run.len() == size => {
                    templates.push(offsets.clone());
                    Some(templates.len() - 1)
                }
                None => None,
            };
            match t {
                Some(t) => residual.extend(offsets.iter().zip(&templates[t]).map(|(x, y)| x - y)),
                None => residual.extend(core::iter::repeat_n(0.0, run.len())),
            }
            starts.push((b * size, t, y0));
        }
        Some(Blocks {
            starts,
            size,
            ys: pieces.iter().map(|p| p[2].y).collect(),
            templates,
            residual,
            coef,
        })
    }

    /// Calls `sink(j, χ_j(r))` for every `j`, with `slot` 0 inside `a` and 1
    /// beyond `b`.
    #[inline]
    fn for_each(&self, slot: usize, r: f64, mut sink: impl FnMut(usize, f64)) {
        let rot: Vec<Vec<(f64, f64)>> = self
            .templates
            .iter()
            .map(|t| {
                t.iter()
                    .map(|&d| {
                        let (s, c) = (d * r).sin_cos();
                        (c, s)
                    })
                    .collect()
            })
            .collect();
        for &(start, t, y0) in &self.starts {
            let Some(t) = t else {
                let end = (start + self.size).min(self.ys.len());
                for j in start..end {
                    let (s, c) = (self.ys[j] * r).sin_cos();
                    let (p, q) = self.coef[j][slot];
                    sink(j, p * c + q * s);
                }
                continue;
            };
            let (s0, c0) = (y0 * r).sin_cos();
            for (m, &(co, so)) in rot[t].iter().enumerate() {
                let j = start + m;
                let mut c = c0 * co - s0 * so;
                let mut s = s0 * co + c0 * so;
                let e = self.residual[j] * r;
                if e != 0.0 {
                    (c, s) = (c - s * e, s + c * e);
                }
                let (p, q) = self.coef[j][slot];
                sink(j, p * c + q * s);
            }
        }
    }
}

impl Blocks {
    /// `Σ_j (a_j cos k_j r + b_j sin k_j r)`.
    fn sum(&self, r: f64, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let rot: Vec<Vec<(f64, f64)>> = self
            .templates
            .iter()
            .map(|t| {
                t.iter()
                    .map(|&d| {
                        let (s, c) = (d * r).sin_cos();
                        (c, s)
                    })
                    .collect()
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for &(start, t, y0) in &self.starts {
            let end = (start + self.size).min(self.ys.len());
            let Some(t) = t else {
                for j in start..end {
                    let (s, c) = (self.ys[j] * r).sin_cos();
                    acc += a[j] * c + b[j] * s;
                }
                continue;
            };
            let (s0, c0) = (y0 * r).sin_cos();
            let mut sc = Complex64::new(0.0, 0.0);
            let mut ss = Complex64::new(0.0, 0.0);
            for ((j, &(co, so)), (&aj, &bj)) in (start..end).zip(&rot[t]).zip(a[start..end].iter().zip(&b[start..end]))
            {
                let e = self.residual[j] * r;
                let (aa, bb) = if e != 0.0 { (aj + bj * e, bj - aj * e) } else { (aj, bj) };
                sc += aa * co + bb * so;
                ss += bb * co - aa * so;
            }
            acc += sc * c0 + ss * s0;
        }
        acc
    }
}

/// Combination coefficients folded into the amplitudes outside the barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Folded {
    /// `c_j (p + m)` and `c_j (m - p)·i` parts per slot, as cosine and sine
    /// amplitudes.
    cos: [Vec<Complex64>; 2],
    sin: [Vec<Complex64>; 2],
}

impl SpectralBasis {
    pub fn new(cfg: &BarrierConfig, energies: &[f64]) -> Result<Self> {
        let mut rho = Vec::with_capacity(energies.len());
        let mut sqrt_rho = Vec::with_capacity(energies.len());
        let mut pieces = Vec::with_capacity(energies.len());
        for &e in energies {
            let d = DeltaEigenfunction::new(cfg, e)?;
            rho.push(d.rho);
            sqrt_rho.push(d.sqrt_rho);
            pieces.push(core::array::from_fn(|i| RealPiece::new(&d.chi.pieces[i])));
        }
        Ok(SpectralBasis {
            energies: energies.to_vec(),
            rho,
            sqrt_rho,
            pieces,
            blocks: None,
            a: cfg.a,
            b: cfg.b,
        })
    }

    /// Enables the fast path for energies laid out in runs of `size`
    /// (panels of a Gauss-Legendre grid in `k`).
    pub fn blocked(mut self, size: usize) -> Self {
        self.blocks = Blocks::build(&self.pieces, size);
        self
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Outer barrier edge `b`.
    pub fn outer_edge(&self) -> f64 {
        self.b
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

    /// `χ(r; E_j)` (real for real energies).
    #[inline]
    pub fn chi(&self, j: usize, r: f64) -> f64 {
        self.pieces[j][self.region(r)].value(r)
    }

    #[inline]
    pub fn sigma(&self, j: usize, r: f64) -> f64 {
        self.sqrt_rho[j] * self.chi(j, r)
    }

    /// `Σ_i w_i f(r_i) σ(r_i; E_j)` for every `j`.
    pub fn analyze(&self, rs: &[f64], weighted_values: &[Complex64]) -> Vec<Complex64> {
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); self.len()];
        for (&r, &fv) in rs.iter().zip(weighted_values) {
            if fv.re == 0.0 && fv.im == 0.0 {
                continue;
            }
            let region = self.region(r);
            match &self.blocks {
                Some(bl) if region != 1 => bl.for_each(region / 2, r, |j, v| out[j] += fv * v),
                _ => {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o += fv * self.pieces[j][region].value(r);
                    }
                }
            }
        }
        for (o, s) in out.iter_mut().zip(&self.sqrt_rho) {
            *o *= *s;
        }
        out
    }

    /// `Σ_j c_j σ(r; E_j)` at every radius.
    pub fn synthesize(&self, coefficients: &[Complex64], rs: &[f64]) -> Vec<Complex64> {
        let scaled: Vec<Complex64> = coefficients.iter().zip(&self.sqrt_rho).map(|(c, s)| c * *s).collect();
        self.synthesize_chi(&scaled, rs)
    }

    /// `Σ_j c_j χ(r; E_j)` at every radius.
    pub fn synthesize_chi(&self, coefficients: &[Complex64], rs: &[f64]) -> Vec<Complex64> {
        rs.iter().map(|&r| self.combine_chi(coefficients, r)).collect()
    }

    /// Precomputes `coefficients` for [`Self::combine_folded`]; `None` without
    /// the fast path.
    pub fn fold(&self, coefficients: &[Complex64]) -> Option<Folded> {
        let bl = self.blocks.as_ref()?;
        let part = |slot: usize, sine: bool| -> Vec<Complex64> {
            coefficients
                .iter()
                .zip(&bl.coef)
                .map(|(c, k)| c * if sine { k[slot].1 } else { k[slot].0 })
                .collect()
        };
        Some(Folded {
            cos: [part(0, false), part(1, false)],
            sin: [part(0, true), part(1, true)],
        })
    }

    /// Same as [`Self::combine_chi`], using coefficients folded by
    /// [`Self::fold`] where possible.
    pub fn combine_folded(&self, coefficients: &[Complex64], folded: Option<&Folded>, r: f64) -> Complex64 {
        let region = self.region(r);
        match (folded, &self.blocks) {
            (Some(f), Some(bl)) if region != 1 => bl.sum(r, &f.cos[region / 2], &f.sin[region / 2]),
            _ => self.combine_chi(coefficients, r),
        }
    }

    /// `Σ_j c_j χ(r; E_j)`.
    pub fn combine_chi(&self, coefficients: &[Complex64], r: f64) -> Complex64 {
        let region = self.region(r);
        let mut acc = Complex64::new(0.0, 0.0);
        match &self.blocks {
            Some(bl) if region != 1 => bl.for_each(region / 2, r, |j, v| acc += coefficients[j] * v),
            _ => {
                for (c, p) in coefficients.iter().zip(&self.pieces) {
                    acc += c * p[region].value(r);
                }
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::sigma_delta;

    #[test]
    fn matches_sigma_delta() {
        let cfg = BarrierConfig::default();
        let es = [0.3, 0.99, 1.01, 2.5, 40.0];
        let basis = SpectralBasis::new(&cfg, &es).unwrap();
        for (j, &e) in es.iter().enumerate() {
            for r in [0.0, 0.4, 1.0, 1.3, 2.0, 2.7, 15.0] {
                let want = sigma_delta(&cfg, e, r).unwrap();
                let got = basis.sigma(j, r);
                assert!((got - want).abs() < 1e-13 * (1.0 + want.abs()), "E={e} r={r}");
            }
        }
    }

    #[test]
    fn analysis_and_synthesis_are_transposes() {
        let cfg = BarrierConfig::default();
        let basis = SpectralBasis::new(&cfg, &[0.5, 3.0]).unwrap();
        let rs = [0.5, 1.5, 2.5];
        let f = [
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        let c = [Complex64::new(0.3, -1.0), Complex64::new(2.0, 0.5)];
        let af = basis.analyze(&rs, &f);
        let sc = basis.synthesize(&c, &rs);
        let lhs: Complex64 = af.iter().zip(&c).map(|(x, y)| x * y).sum();
        let rhs: Complex64 = sc.iter().zip(&f).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn blocked_path_matches_direct() {
        use crate::quadrature::{panels, GaussLegendre, Grid, GridVariable};
        let cfg = BarrierConfig::default();
        let layout = panels(0.2, 4.0, &[1.0, 1.5], 0.05);
        let grid = Grid::new(GridVariable::Wavenumber { kappa: 1.0 }, layout, &GaussLegendre::new(16));
        let direct = SpectralBasis::new(&cfg, &grid.nodes).unwrap();
        let c: Vec<Complex64> = (0..grid.len())
            .map(|j| Complex64::new((j as f64).sin(), (0.3 * j as f64).cos()))
            .collect();
        // Runs of 7 straddle panels, so most of them have no template.
        for size in [16, 7] {
            let fast = direct.clone().blocked(size);
            assert!(fast.blocks.is_some());
            let folded = fast.fold(&c);
            assert!(folded.is_some());
            for r in [0.3, 1.0, 1.7, 2.5, 40.0, 1234.5] {
                let want = direct.combine_chi(&c, r);
                let got = fast.combine_chi(&c, r);
                assert!((got - want).norm() < 1e-10 * (1.0 + want.norm()), "r={r}: {got} {want}");
                let got = fast.combine_folded(&c, folded.as_ref(), r);
                assert!((got - want).norm() < 1e-10 * (1.0 + want.norm()), "r={r}: {got} {want}");
            }
            let rs = [0.5, 1.2, 3.0, 700.0];
            let f = [Complex64::new(1.0, 0.0); 4];
            for (x, y) in fast.analyze(&rs, &f).iter().zip(direct.analyze(&rs, &f)) {
                assert!((x - y).norm() < 1e-11);
            }
        }
        assert!(direct.fold(&c).is_none());
    }
}
