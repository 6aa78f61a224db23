//! Quadrature rules: Gauss–Legendre and adaptive Simpson.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::linalg::C64;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev-like initial
    /// guesses; accurate to machine precision for the sizes used here.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_c(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> C64) -> C64 {
        self.mapped(a, b).fold(C64::new(0.0, 0.0), |acc, (x, w)| acc + f(x) * w)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive Simpson with Richardson correction for complex integrands.
/// `tol` is an absolute target for the whole interval.
pub fn adaptive_simpson(f: &mut impl FnMut(f64) -> C64, a: f64, b: f64, tol: f64, max_depth: u32) -> C64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

fn simpson_rec(
    f: &mut impl FnMut(f64) -> C64,
    a: f64,
    b: f64,
    fa: C64,
    fm: C64,
    fb: C64,
    whole: C64,
    tol: f64,
    depth: u32,
) -> C64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Legendre: a 16-point panel is accepted when it agrees
/// with the sum over its two halves to its share of `tol` (absolute).
/// Panels are not split below depth `max_depth`, and at most
/// [`ADAPTIVE_PANEL_BUDGET`] panels are refined in total.
pub fn adaptive_gl(f: &mut impl FnMut(f64) -> C64, a: f64, b: f64, tol: f64, max_depth: u32) -> C64 {
    let rule = GaussLegendre::new(16);
    let whole = rule.integrate_c(a, b, &mut *f);
    let mut stack = alloc::vec![(a, b, whole, tol, max_depth)];
    let mut acc = C64::new(0.0, 0.0);
    let mut budget = ADAPTIVE_PANEL_BUDGET;
    while let Some((a, b, whole, tol, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let left = rule.integrate_c(a, m, &mut *f);
        let right = rule.integrate_c(m, b, &mut *f);
        let split = left + right;
        if depth == 0 || budget == 0 || (split - whole).norm() <= tol {
            acc += split;
            continue;
        }
        budget -= 1;
        stack.push((a, m, left, 0.5 * tol, depth - 1));
        stack.push((m, b, right, 0.5 * tol, depth - 1));
    }
    acc
}

/// Refinement budget of [`adaptive_gl`].
pub const ADAPTIVE_PANEL_BUDGET: usize = 20_000;

/// Composite Gauss–Legendre over the panels delimited by `breaks`
/// (which must be increasing and include both ends).
pub fn panels_c(rule: &GaussLegendre, breaks: &[f64], mut f: impl FnMut(f64) -> C64) -> C64 {
    breaks.windows(2).filter(|w| w[1] > w[0]).fold(C64::new(0.0, 0.0), |acc, w| acc + rule.integrate_c(w[0], w[1], &mut f))
}

/// `∫_a^∞ f` through `x = a + s/(1 − s)`, integrated panel-wise in `s`
/// with Gauss–Legendre; `f` must decay faster than `1/x`.
pub fn half_line_c(rule: &GaussLegendre, a: f64, panels: usize, mut f: impl FnMut(f64) -> C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..panels {
        let s0 = p as f64 / panels as f64;
        let s1 = (p + 1) as f64 / panels as f64;
        acc += rule.integrate_c(s0, s1, |s| {
            let one_minus = 1.0 - s;
            let x = a + s / one_minus;
            f(x) * (1.0 / (one_minus * one_minus))
        });
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(10);
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(19) - 3.0 * x.powi(4));
        let exact = (2f64.powi(20) - 1.0) / 20.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
        let wsum: f64 = gl.weights().iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gl_64_nodes_are_symmetric_and_sorted() {
        let gl = GaussLegendre::new(64);
        assert!(gl.nodes().windows(2).all(|w| w[0] < w[1]));
        for i in 0..32 {
            assert!((gl.nodes()[i] + gl.nodes()[63 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn simpson_on_smooth_function() {
        let mut f = |x: f64| C64::new(x.sin(), x.cos());
        let v = adaptive_simpson(&mut f, 0.0, PI, 1e-12, 40);
        assert!((v - C64::new(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn half_line_of_inverse_square() {
        let gl = GaussLegendre::new(32);
        let v = half_line_c(&gl, 1.0, 4, |x| C64::new(1.0 / (x * x), 0.0));
        assert!((v.re - 1.0).abs() < 1e-12);
    }
}
