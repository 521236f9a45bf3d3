//! Composite Gauss–Legendre quadrature on panel grids, panel-wise
//! barycentric interpolation, Richardson extrapolation and finite-difference
//! weights.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Barycentric interpolation weights for the nodes.
    pub bary: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let bary = nodes
            .iter()
            .zip(&weights)
            .enumerate()
            .map(|(j, (&x, &w))| {
                let s = ((1.0 - x * x) * w).sqrt();
                if j % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        GaussLegendre { nodes, weights, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_lo^hi f` with this rule on a single panel.
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, lo: f64, hi: f64, mut f: F) -> Complex64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }

    /// Barycentric interpolation at `u` of values at the nodes mapped onto
    /// `panel`.
    pub fn interpolate(&self, panel: (f64, f64), values: &[Complex64], u: f64) -> Complex64 {
        let (lo, hi) = panel;
        let t = (2.0 * u - lo - hi) / (hi - lo);
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for ((&x, &b), &v) in self.nodes.iter().zip(&self.bary).zip(values) {
            let d = t - x;
            if d == 0.0 {
                return v;
            }
            let c = b / d;
            num += v * c;
            den += c;
        }
        num / den
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Controls every integral over `r` and `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Radial truncation; `None` lets each operation choose from decay hints.
    pub r_cutoff: Option<f64>,
    /// Energy truncation; `None` lets each operation find the tail.
    pub e_cutoff: Option<f64>,
    pub nodes_per_panel: usize,
    /// Maximum oscillation phase (radians) inside one panel.
    pub max_panel_phase: f64,
    /// Target relative accuracy.
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            r_cutoff: None,
            e_cutoff: None,
            nodes_per_panel: 16,
            max_panel_phase: 2.0 * PI,
            tol: 1e-8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 4 {
            return Err(Error::InvalidConfig {
                field: "nodes_per_panel",
                reason: "must be at least 4",
            });
        }
        if !(self.max_panel_phase > 0.0) {
            return Err(Error::InvalidConfig {
                field: "max_panel_phase",
                reason: "must be positive",
            });
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidConfig {
                field: "tol",
                reason: "must lie in (0, 1)",
            });
        }
        for (field, c) in [("r_cutoff", self.r_cutoff), ("e_cutoff", self.e_cutoff)] {
            if let Some(c) = c {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidConfig {
                        field,
                        reason: "must be positive and finite",
                    });
                }
            }
        }
        Ok(())
    }

    pub fn rule(&self) -> GaussLegendre {
        GaussLegendre::new(self.nodes_per_panel)
    }

    /// Same spec with `factor` times as many panels per unit length.
    pub fn refined(&self, factor: f64) -> Self {
        QuadratureSpec {
            max_panel_phase: self.max_panel_phase / factor,
            ..*self
        }
    }
}

/// Splits `[lo, hi]` at `breaks` and subdivides every piece so no panel is
/// wider than `max_width`.
pub fn panels(lo: f64, hi: f64, breaks: &[f64], max_width: f64) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let n = ((b - a) / max_width).ceil().max(1.0) as usize;
        let step = (b - a) / n as f64;
        for i in 0..n {
            let p_lo = a + step * i as f64;
            let p_hi = if i + 1 == n { b } else { a + step * (i + 1) as f64 };
            out.push((p_lo, p_hi));
        }
    }
    out
}

/// How the panel parameter `u` maps onto the physical variable `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridVariable {
    /// `x = u` (radii).
    Identity,
    /// `u = k`, `x = E = k²/κ`, `dE = (2k/κ) dk` (energies).
    Wavenumber { kappa: f64 },
}

impl GridVariable {
    pub fn to_physical(self, u: f64) -> f64 {
        match self {
            GridVariable::Identity => u,
            GridVariable::Wavenumber { kappa } => u * u / kappa,
        }
    }

    pub fn to_parameter(self, x: f64) -> f64 {
        match self {
            GridVariable::Identity => x,
            GridVariable::Wavenumber { kappa } => (kappa * x).max(0.0).sqrt(),
        }
    }

    fn jacobian(self, u: f64) -> f64 {
        match self {
            GridVariable::Identity => 1.0,
            GridVariable::Wavenumber { kappa } => 2.0 * u / kappa,
        }
    }
}

/// Composite Gauss–Legendre grid: panels in a parameter `u`, nodes and
/// weights in the physical variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub variable: GridVariable,
    /// Panel bounds in the parameter `u`.
    pub panels: Vec<(f64, f64)>,
    /// Parameter values of the nodes.
    pub params: Vec<f64>,
    /// Physical node positions.
    pub nodes: Vec<f64>,
    /// Weights for `∫ dx` in the physical variable.
    pub weights: Vec<f64>,
    pub order: usize,
    rule: GaussLegendre,
}

impl Grid {
    pub fn new(variable: GridVariable, panels: Vec<(f64, f64)>, rule: &GaussLegendre) -> Self {
        let order = rule.len();
        let mut params = Vec::with_capacity(panels.len() * order);
        let mut nodes = Vec::with_capacity(panels.len() * order);
        let mut weights = Vec::with_capacity(panels.len() * order);
        for &(lo, hi) in &panels {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let u = mid + half * x;
                params.push(u);
                nodes.push(variable.to_physical(u));
                weights.push(w * half * variable.jacobian(u));
            }
        }
        Grid {
            variable,
            panels,
            params,
            nodes,
            weights,
            order,
            rule: rule.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.panels
            .first()
            .map(|p| self.variable.to_physical(p.0))
            .unwrap_or(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.panels
            .last()
            .map(|p| self.variable.to_physical(p.1))
            .unwrap_or(0.0)
    }

    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        values
            .iter()
            .zip(&self.weights)
            .fold(Complex64::new(0.0, 0.0), |acc, (v, w)| acc + v * *w)
    }

    pub fn integrate_real(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// `(∫ |v|²)^{1/2}`.
    pub fn l2_norm(&self, values: &[Complex64]) -> f64 {
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    }

    fn panel_of(&self, u: f64) -> Option<usize> {
        if self.panels.is_empty() {
            return None;
        }
        let first = self.panels[0].0;
        let last = self.panels[self.panels.len() - 1].1;
        let slack = 1e-12 * (1.0 + last.abs());
        if u < first - slack || u > last + slack {
            return None;
        }
        let idx = self.panels.partition_point(|p| p.1 < u).min(self.panels.len() - 1);
        let (lo, hi) = self.panels[idx];
        // Gaps between panels (excluded bands) are outside the grid.
        if u < lo - slack || u > hi + slack {
            return None;
        }
        Some(idx)
    }

    /// Barycentric Lagrange interpolation inside the panel containing `x`;
    /// zero outside the grid.
    pub fn interpolate(&self, values: &[Complex64], x: f64) -> Complex64 {
        let u = self.variable.to_parameter(x);
        let Some(p) = self.panel_of(u) else {
            return Complex64::new(0.0, 0.0);
        };
        let base = p * self.order;
        self.rule
            .interpolate(self.panels[p], &values[base..base + self.order], u)
    }
}

/// Polynomial extrapolation to `h → 0` through `(h_i, v_i)` (Neville).
/// Returns the limit and the difference to the next-lower-order estimate.
pub fn richardson(h: &[f64], v: &[Complex64]) -> (Complex64, f64) {
    let n = h.len();
    assert!(n == v.len() && n >= 1);
    let mut table: Vec<Complex64> = v.to_vec();
    let mut prev_top = table[0];
    for m in 1..n {
        prev_top = table[0];
        for i in 0..n - m {
            table[i] = (table[i + 1] * h[i] - table[i] * h[i + m]) / (h[i] - h[i + m]);
        }
    }
    let err = if n > 1 {
        (table[0] - prev_top).norm()
    } else {
        f64::INFINITY
    };
    (table[0], err)
}

/// Finite-difference weights for the `order`-th derivative at `x0` from
/// samples at `xs` (Fornberg's recursion).
pub fn fd_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Second derivative from the centred five-point stencil.
pub fn second_derivative_5pt<F: FnMut(f64) -> Result<Complex64>>(mut f: F, x: f64, h: f64) -> Result<Complex64> {
    let fm2 = f(x - 2.0 * h)?;
    let fm1 = f(x - h)?;
    let f0 = f(x)?;
    let fp1 = f(x + h)?;
    let fp2 = f(x + 2.0 * h)?;
    Ok((-fm2 + fm1 * 16.0 - f0 * 30.0 + fp1 * 16.0 - fp2) / (12.0 * h * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let rule = GaussLegendre::new(16);
        for p in 0..32 {
            let got = rule.integrate(-1.0, 1.0, |x| c(x.powi(p))).re;
            let want = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((got - want).abs() < 1e-14, "degree {p}: {got} vs {want}");
        }
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_odd_order_has_center_node() {
        let rule = GaussLegendre::new(5);
        assert_eq!(rule.nodes[2], 0.0);
        assert!((rule.weights[2] - 128.0 / 225.0).abs() < 1e-15);
    }

    #[test]
    fn panel_layout_respects_breaks_and_width() {
        let p = panels(0.0, 3.0, &[1.0, 2.0, 5.0], 0.4);
        assert!(p.iter().all(|(a, b)| b - a <= 0.4 + 1e-15));
        assert!(p.iter().any(|&(_, b)| b == 1.0));
        assert!(p.iter().any(|&(a, _)| a == 2.0));
        assert_eq!(p.first().unwrap().0, 0.0);
        assert_eq!(p.last().unwrap().1, 3.0);
    }

    #[test]
    fn grid_integrates_and_interpolates() {
        let rule = GaussLegendre::new(16);
        let g = Grid::new(GridVariable::Identity, panels(0.0, 10.0, &[], 1.0), &rule);
        let vals: Vec<_> = g.nodes.iter().map(|&x| c((-x).exp() * x.sin())).collect();
        let exact = 0.5 * (1.0 - (-10f64).exp() * (10f64.sin() + 10f64.cos()));
        assert!((g.integrate(&vals).re - exact).abs() < 1e-14);
        for x in [0.3, 2.5, 7.77] {
            let want = (-x).exp() * x.sin();
            assert!((g.interpolate(&vals, x).re - want).abs() < 1e-13);
        }
        assert_eq!(g.interpolate(&vals, 11.0), c(0.0));
    }

    #[test]
    fn wavenumber_grid_maps_energy_measure() {
        let rule = GaussLegendre::new(16);
        let kappa = 2.0;
        let g = Grid::new(GridVariable::Wavenumber { kappa }, panels(1.0, 3.0, &[], 0.5), &rule);
        // ∫ E dE from E=1/2 to E=9/2
        let vals: Vec<_> = g.nodes.iter().map(|&e| c(e)).collect();
        let want = 0.5 * (4.5f64.powi(2) - 0.5f64.powi(2));
        assert!((g.integrate(&vals).re - want).abs() < 1e-12);
        assert!((g.lower() - 0.5).abs() < 1e-15);
        assert!((g.upper() - 4.5).abs() < 1e-15);
        let x = 2.2;
        assert!((g.interpolate(&vals, x).re - x).abs() < 1e-13);
    }

    #[test]
    fn richardson_removes_polynomial_error() {
        let h = [0.01, 0.005, 0.0025];
        let v: Vec<_> = h.iter().map(|&h| c(3.0 + 2.0 * h - 7.0 * h * h)).collect();
        let (lim, _) = richardson(&h, &v);
        assert!((lim.re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fornberg_matches_known_stencils() {
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w = fd_weights(0.0, &xs, 2);
        let want = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-13);
        }
        // one-sided first derivative of x³ at 0 from the right
        let xs: Vec<f64> = (0..7).map(|i| i as f64 * 0.1).collect();
        let w = fd_weights(0.0, &xs, 1);
        let d: f64 = xs.iter().zip(&w).map(|(x, w)| (x * x * x + 2.0 * x) * w).sum();
        assert!((d - 2.0).abs() < 1e-10);
    }
}
