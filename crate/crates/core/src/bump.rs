//! The smooth compactly supported template `ψ(x) = exp(-1/(1-x²))` on
//! `(-1, 1)` and its derivatives of every order.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// Polynomials `P_n` with `ψ⁽ⁿ⁾(x) = P_n(x) (1-x²)^{-2n} ψ(x)`, ascending
/// coefficients.
fn derivative_polynomials(max_order: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![vec![1.0]];
    for n in 0..max_order {
        let p = &out[n];
        // P_{n+1} = P'(1-x²)² + 4n x (1-x²) P - 2x P
        let mut next = vec![0.0; p.len() + 4];
        for (j, &c) in p.iter().enumerate() {
            if j >= 1 {
                let d = c * j as f64;
                // d·x^{j-1}·(1 - 2x² + x⁴)
                next[j - 1] += d;
                next[j + 1] -= 2.0 * d;
                next[j + 3] += d;
            }
            let nn = 4.0 * n as f64;
            // 4n·c·(x^{j+1} - x^{j+3})
            next[j + 1] += nn * c;
            next[j + 3] -= nn * c;
            next[j + 1] -= 2.0 * c;
        }
        while next.len() > 1 && *next.last().unwrap() == 0.0 {
            next.pop();
        }
        out.push(next);
    }
    out
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Derivative tables for the template, built once per order bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    polys: Vec<Vec<f64>>,
}

impl Template {
    pub fn new(max_order: usize) -> Self {
        Template {
            polys: derivative_polynomials(max_order),
        }
    }

    pub fn max_order(&self) -> usize {
        self.polys.len() - 1
    }

    /// `ψ⁽ⁿ⁾(x)`; zero outside `(-1, 1)`.
    pub fn derivative(&self, x: f64, n: usize) -> f64 {
        if !(x > -1.0 && x < 1.0) {
            return 0.0;
        }
        let u = 1.0 - x * x;
        let log_factor = -1.0 / u - 2.0 * n as f64 * u.ln();
        if log_factor < -745.0 {
            return 0.0;
        }
        horner(&self.polys[n], x) * log_factor.exp()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }
}

/// `amplitude · ψ((t - center)/halfwidth)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub halfwidth: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn lower(&self) -> f64 {
        self.center - self.halfwidth
    }

    pub fn upper(&self) -> f64 {
        self.center + self.halfwidth
    }

    pub fn value(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.halfwidth;
        if !(x > -1.0 && x < 1.0) {
            return 0.0;
        }
        self.amplitude * (-1.0 / (1.0 - x * x)).exp()
    }

    /// `n`-th derivative in `t`, using `template` for the polynomial tables.
    pub fn derivative(&self, template: &Template, t: f64, n: usize) -> f64 {
        let x = (t - self.center) / self.halfwidth;
        self.amplitude * template.derivative(x, n) / self.halfwidth.powi(n as i32)
    }
}

/// Bound on `|ψ̂(ξ)| / ψ̂(0)` for the template: `5 ξ^{-3/4} e^{-√ξ}`, capped
/// at 1.
pub fn fourier_envelope(xi: f64) -> f64 {
    if xi <= 1.0 {
        return 1.0;
    }
    (5.0 * xi.powf(-0.75) * (-xi.sqrt()).exp()).min(1.0)
}

/// Smallest `ξ` with `ξ^n · fourier_envelope(ξ) ≤ tol · max(1, peak)` where
/// `peak` is the maximum of `ξ^n · fourier_envelope(ξ)`.
pub fn fourier_cutoff(tol: f64, n: u32) -> f64 {
    let f = |xi: f64| xi.powi(n as i32) * fourier_envelope(xi);
    let mut peak: f64 = 1.0;
    let mut xi = 1.0;
    while xi < 1e7 {
        let v = f(xi);
        peak = peak.max(v);
        if v <= tol * peak && xi > 4.0 * (n as f64 + 1.0) * (n as f64 + 1.0) {
            return xi;
        }
        xi *= 1.02;
    }
    xi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_value_at_center() {
        let t = Template::new(4);
        assert!((t.value(0.0) - (-1f64).exp()).abs() < 1e-16);
        assert_eq!(t.value(1.0), 0.0);
        assert_eq!(t.value(-1.5), 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let t = Template::new(8);
        let h = 1e-3;
        for &x in &[-0.7, -0.2, 0.1, 0.55, 0.8] {
            for n in 0..7 {
                let fd = (t.derivative(x + h, n) - t.derivative(x - h, n)) / (2.0 * h);
                let exact = t.derivative(x, n + 1);
                let scale = 1.0 + exact.abs();
                assert!(
                    (fd - exact).abs() < 1e-4 * scale * (n as f64 + 1.0).powi(3),
                    "n={n} x={x}"
                );
            }
        }
    }

    #[test]
    fn first_derivative_closed_form() {
        let t = Template::new(1);
        let x: f64 = 0.3;
        let u = 1.0 - x * x;
        let want = -2.0 * x / (u * u) * (-1.0 / u).exp();
        assert!((t.derivative(x, 1) - want).abs() < 1e-15);
    }

    #[test]
    fn derivatives_vanish_near_edges() {
        let t = Template::new(10);
        for n in 0..=10 {
            assert!(t.derivative(0.999, n).abs() < 1e-150);
        }
    }

    #[test]
    fn scaled_bump() {
        let b = Bump {
            center: 4.0,
            halfwidth: 1.0,
            amplitude: 2.0,
        };
        assert!((b.value(4.0) - 2.0 * (-1f64).exp()).abs() < 1e-15);
        assert_eq!(b.value(5.0), 0.0);
        assert_eq!(b.value(2.9), 0.0);
    }

    #[test]
    fn cutoff_grows_with_derivative_order() {
        let c0 = fourier_cutoff(1e-9, 0);
        let c4 = fourier_cutoff(1e-9, 4);
        assert!(c0 > 300.0 && c0 < 600.0, "{c0}");
        assert!(c4 > c0);
    }
}
