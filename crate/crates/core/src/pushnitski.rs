//! Transforms tying `ξ(·; A₊, A₋)` to `ξ(·; H₂, H₁)` and the Witten index
//! read off at the origin.
//!
//! `ξ_H(λ) = π⁻¹ ∫_{−√λ}^{√λ} ξ_A(ν)(λ − ν²)^{−1/2} dν` is evaluated after
//! `ν = √λ sin θ`, which turns every linear piece of `ξ_A` into an elementary
//! integral in `θ`. The kernel identities are checked by adaptive quadrature
//! with the one-sided square-root singularities of `ξ_H` mapped away.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::determinants::OperatorPair;
use crate::linalg::C64;
use crate::model::{resolvent_traces, DeltaRCurve, ModelDiscretization};
use crate::quad::adaptive_gl;
use crate::ssf::{Normalization, Piece, SsfCurve};
use crate::{Error, Result};

/// Absolute quadrature target per integral.
const QUAD_TOL: f64 = 1e-13;
const QUAD_DEPTH: u32 = 40;

/// Largest tolerated contribution of an uncovered tail.
pub const TAIL_TOL: f64 = 1e-8;

/// Tolerance on the Lebesgue-point extrapolation.
pub const LEBESGUE_TOL: f64 = 1e-4;

/// Tolerance of the consistency check inside [`witten_from_ssf`].
pub const WITTEN_CONSISTENCY_TOL: f64 = 1e-6;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Whether `curve` is defined on all of `[a, b]`.
fn covers(curve: &SsfCurve, a: f64, b: f64) -> bool {
    curve.step().is_some() || curve.tails().is_some() || curve.covers(a, b)
}

/// `π⁻¹ ∫ (α + βν)(λ − ν²)^{−1/2} dν` over the part of the piece inside
/// `(−r, r)`, `r = √λ`.
fn abel_piece(p: &Piece, r: f64, lo_cut: f64) -> f64 {
    let lo = p.a.max(lo_cut);
    let hi = p.b.min(r);
    if hi <= lo || (p.alpha == 0.0 && p.beta == 0.0) {
        return 0.0;
    }
    let asin = |x: f64| libm::asin((x / r).clamp(-1.0, 1.0));
    let cos = |x: f64| libm::sqrt((1.0 - (x / r) * (x / r)).max(0.0));
    let mut v = p.alpha * (asin(hi) - asin(lo));
    if p.beta != 0.0 {
        v -= p.beta * r * (cos(hi) - cos(lo));
    }
    v / PI
}

/// The exact transform at one `λ`; zero for `λ ≤ 0`.
pub fn abel_value(curve: &SsfCurve, lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Ok(0.0);
    }
    let r = libm::sqrt(lambda);
    if !covers(curve, -r, r) {
        let (a, b) = curve.support();
        return Err(Error::Coverage(format!("ξ_A is known on [{a}, {b}] but [−{r}, {r}] is needed")));
    }
    Ok(curve.pieces().iter().map(|p| abel_piece(p, r, -r)).sum())
}

fn check_lambda_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty λ grid".into()));
    }
    if grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidInput("λ grid must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("λ grid must be strictly increasing".into()));
    }
    Ok(())
}

fn transformed_curve(lambda_grid: &[f64], values: Vec<f64>) -> Result<SsfCurve> {
    let top = *lambda_grid.last().unwrap();
    let mut grid = Vec::with_capacity(lambda_grid.len() + 2);
    grid.push(-top);
    grid.push(0.0);
    grid.extend_from_slice(lambda_grid);
    let mut vals = Vec::with_capacity(grid.len());
    vals.push(0.0);
    vals.push(0.0);
    vals.extend(values);
    SsfCurve::sampled(grid, vals, Normalization::ZeroBelowSpectrum)
}

/// `ξ_H` on a positive grid, with zeros at `−λ_max` and `0` prepended.
pub fn abel_transform(ssf_a: &SsfCurve, lambda_grid: &[f64]) -> Result<SsfCurve> {
    check_lambda_grid(lambda_grid)?;
    let values = lambda_grid.iter().map(|&l| abel_value(ssf_a, l)).collect::<Result<Vec<_>>>()?;
    transformed_curve(lambda_grid, values)
}

/// The same transform written over `[0, √λ]` with the symmetrized integrand
/// `ξ_A(ν) + ξ_A(−ν)`.
pub fn halfline_symmetrized_form(ssf_a: &SsfCurve, lambda_grid: &[f64]) -> Result<SsfCurve> {
    check_lambda_grid(lambda_grid)?;
    let pieces = ssf_a.pieces();
    let values = lambda_grid
        .iter()
        .map(|&l| {
            let r = libm::sqrt(l);
            if !covers(ssf_a, -r, r) {
                return Err(Error::Coverage(format!("ξ_A does not cover [−{r}, {r}]")));
            }
            let mut v = 0.0;
            for p in &pieces {
                let mirrored = Piece { a: -p.b, b: -p.a, alpha: p.alpha, beta: -p.beta };
                v += abel_piece(p, r, 0.0) + abel_piece(&mirrored, r, 0.0);
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    transformed_curve(lambda_grid, values)
}

/// How `ξ(·; H₂, H₁)` is supplied to the kernel checks.
#[derive(Clone, Copy)]
pub enum HShift<'a> {
    /// A curve on `[0, ∞)`, extended by its upper tail when it has one.
    Curve(&'a SsfCurve),
    /// The exact transform of an `A`-side curve.
    AbelOf(&'a SsfCurve),
    /// A function on `(0, ∞)` with the points where it may fail to be smooth.
    Function { f: &'a dyn Fn(f64) -> f64, breakpoints: &'a [f64] },
}

/// `∫_a^b f` with `λ = a + (b − a)s²`, absorbing a square-root onset at `a`.
fn integrate_sqrt_onset(f: &mut impl FnMut(f64) -> C64, a: f64, b: f64) -> C64 {
    let w = b - a;
    adaptive_gl(&mut |s: f64| f(a + w * s * s) * (2.0 * w * s), 0.0, 1.0, QUAD_TOL, QUAD_DEPTH)
}

/// `∫_R^∞ f` with `λ = R/w²`.
fn integrate_to_infinity(f: &mut impl FnMut(f64) -> C64, r: f64) -> C64 {
    adaptive_gl(
        &mut |w: f64| if w <= 0.0 { zero() } else { f(r / (w * w)) * (2.0 * r / (w * w * w)) },
        0.0,
        1.0,
        QUAD_TOL,
        QUAD_DEPTH,
    )
}

/// `∫_0^∞ ξ(λ) K(λ) dλ` through the breakpoints of `ξ`, the last one
/// continued to infinity.
fn half_line_integral(f: &dyn Fn(f64) -> f64, breakpoints: &[f64], kernel: &dyn Fn(f64) -> C64) -> C64 {
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > 0.0 && b.is_finite()).collect();
    pts.push(0.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() == 1 {
        pts.push(1.0);
    }
    let mut g = |x: f64| kernel(x) * f(x);
    let mut acc = zero();
    for w in pts.windows(2) {
        acc += integrate_sqrt_onset(&mut g, w[0], w[1]);
    }
    acc + integrate_to_infinity(&mut g, *pts.last().unwrap())
}

/// Breakpoints of the transform of `curve`: squares of its knots.
fn abel_breakpoints(curve: &SsfCurve) -> Vec<f64> {
    let mut b: Vec<f64> = curve.knots().iter().map(|k| k * k).filter(|&x| x > 0.0).collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `∫_0^∞ ξ_H K` for the closed-form kernels; `closed` integrates one curve
/// piece exactly, `kernel` is the pointwise kernel, `tail` bounds
/// `∫_Λ^∞ |K|`.
fn h_side_integral(
    h: HShift<'_>,
    kernel: &dyn Fn(f64) -> C64,
    closed: &dyn Fn(&Piece) -> Result<C64>,
    tail: &dyn Fn(f64) -> f64,
) -> Result<(C64, f64)> {
    match h {
        HShift::Curve(curve) => {
            let mut acc = zero();
            for p in curve.pieces() {
                if p.b <= 0.0 {
                    continue;
                }
                let clipped = Piece { a: p.a.max(0.0), ..p };
                acc += closed(&clipped)?;
            }
            let mut bound = 0.0;
            if curve.step().is_none() && curve.tails().is_none() {
                let (_, end) = curve.support();
                let last = *curve.values().last().unwrap();
                bound = last.abs() * tail(end);
                if bound > TAIL_TOL {
                    return Err(Error::Coverage(format!(
                        "ξ_H stops at {end} with value {last}; the uncovered tail may contribute {bound:e}"
                    )));
                }
            }
            Ok((acc, bound))
        }
        HShift::AbelOf(a_curve) => {
            let f = |l: f64| abel_value(a_curve, l).unwrap_or(f64::NAN);
            // probe coverage once at a large λ
            let last = abel_breakpoints(a_curve).last().copied().unwrap_or(1.0);
            abel_value(a_curve, 4.0 * last.max(1.0))?;
            if !(a_curve.step().is_some() || a_curve.tails().is_some()) {
                return Err(Error::Coverage("the transform needs ξ_A on all of ℝ (attach tails)".into()));
            }
            Ok((half_line_integral(&f, &abel_breakpoints(a_curve), kernel), 0.0))
        }
        HShift::Function { f, breakpoints } => Ok((half_line_integral(f, breakpoints, kernel), 0.0)),
    }
}

/// `∫_ℝ ξ_A k`, the tails of `ξ_A` included; `tail(R)` bounds
/// `∫_{|ν|>R} |k|` for curves without tails.
fn a_side_integral(curve: &SsfCurve, kernel: &dyn Fn(f64) -> C64, tail: &dyn Fn(f64) -> f64) -> Result<(C64, f64)> {
    let mut acc = zero();
    for p in curve.pieces() {
        if p.alpha == 0.0 && p.beta == 0.0 {
            continue;
        }
        let mut g = |x: f64| kernel(x) * p.value(x);
        let (mut a, mut b) = (p.a, p.b);
        if a == f64::NEG_INFINITY {
            let r = b.min(-1.0);
            acc += integrate_to_infinity(&mut |x: f64| g(-x), -r);
            a = r;
        }
        if b == f64::INFINITY {
            let r = a.max(1.0);
            acc += integrate_to_infinity(&mut g, r);
            b = r;
        }
        if b > a {
            acc += adaptive_gl(&mut g, a, b, QUAD_TOL, QUAD_DEPTH);
        }
    }
    let mut bound = 0.0;
    if curve.step().is_none() && curve.tails().is_none() {
        let (lo, hi) = curve.support();
        let v = curve.values();
        bound = v[0].abs() * tail(lo.abs()) + v[v.len() - 1].abs() * tail(hi.abs());
        if bound > TAIL_TOL {
            return Err(Error::Coverage(format!("ξ_A is cut off at [{lo}, {hi}]; the tails may contribute {bound:e}")));
        }
    }
    Ok((acc, bound))
}

/// Both sides of a kernel identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelCheck {
    pub lhs: C64,
    pub rhs: C64,
    /// `lhs − rhs`.
    pub residual: C64,
    /// Bound on contributions beyond the supplied curves.
    pub tail_bound: f64,
}

fn off_half_line(z: C64, name: &str) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("spectral parameter"));
    }
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(Error::InvalidInput(format!("{name} must lie off [0, ∞)")));
    }
    Ok(())
}

/// `∫ξ_H[(λ−z)⁻¹ − (λ−z₀)⁻¹]dλ` against `∫ξ_A[(ν²−z)^{−1/2} − (ν²−z₀)^{−1/2}]dν`.
pub fn cauchy_kernel_check(ssf_a: &SsfCurve, ssf_h: HShift<'_>, z: C64, z0: C64) -> Result<KernelCheck> {
    off_half_line(z, "z")?;
    off_half_line(z0, "z₀")?;
    let dz = (z - z0).norm();
    let reach = z.norm().max(z0.norm());
    let (lhs, t1) = h_side_integral(
        ssf_h,
        &|l| (C64::new(l, 0.0) - z).inv() - (C64::new(l, 0.0) - z0).inv(),
        &|p| p.cauchy_difference(z, z0),
        &|end| if end > 2.0 * reach { 2.0 * dz / end } else { f64::INFINITY },
    )?;
    let (rhs, t2) = a_side_integral(
        ssf_a,
        &|nu| (C64::new(nu * nu, 0.0) - z).sqrt().inv() - (C64::new(nu * nu, 0.0) - z0).sqrt().inv(),
        &|r| if r * r > 2.0 * reach { 2.0 * dz / (r * r) } else { f64::INFINITY },
    )?;
    Ok(KernelCheck { lhs, rhs, residual: lhs - rhs, tail_bound: t1 + t2 })
}

/// `∫ξ_H(λ−z)⁻²dλ` against `½∫ξ_A(ν²−z)^{−3/2}dν`.
pub fn krein_moment_check(ssf_h: HShift<'_>, ssf_a: &SsfCurve, z: C64) -> Result<KernelCheck> {
    off_half_line(z, "z")?;
    let reach = z.norm();
    let (lhs, t1) = h_side_integral(ssf_h, &|l| (C64::new(l, 0.0) - z).powi(-2), &|p| p.inverse_square(z), &|end| {
        if end > 2.0 * reach {
            2.0 / end
        } else {
            f64::INFINITY
        }
    })?;
    let (half, t2) = a_side_integral(
        ssf_a,
        &|nu| {
            let w = (C64::new(nu * nu, 0.0) - z).sqrt();
            (w * w * w).inv()
        },
        &|r| if r * r > 2.0 * reach { 2.0 / (r * r) } else { f64::INFINITY },
    )?;
    let rhs = half * 0.5;
    Ok(KernelCheck { lhs, rhs, residual: lhs - rhs, tail_bound: t1 + 0.5 * t2 })
}

/// `Δ_r(λ) = (−λ/2) ∫ ξ_A(ν)(ν² − λ)^{−3/2} dν` for `λ < 0`.
pub fn delta_r_from_ssf(ssf_a: &SsfCurve, lambda: f64) -> Result<f64> {
    if !(lambda < 0.0) {
        return Err(Error::InvalidInput("Δ_r needs λ < 0".into()));
    }
    let (v, _) = a_side_integral(ssf_a, &|nu| C64::new(libm::pow(nu * nu - lambda, -1.5), 0.0), &|r| 2.0 / (r * r))?;
    Ok(-0.5 * lambda * v.re)
}

/// `g_z(x) = x (x² − z)^{−1/2}`, principal branch.
pub fn g_z(x: f64, z: C64) -> C64 {
    (C64::new(x * x, 0.0) - z).sqrt().inv() * x
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GzCheck {
    /// `tr((H₂−z)⁻¹ − (H₁−z)⁻¹)` from the model.
    pub lhs: C64,
    /// `(2z)⁻¹ tr(g_z(A₊) − g_z(A₋))`.
    pub rhs: C64,
    pub residual: C64,
}

/// The model trace against the asymptotes `A₋ = pair.base()`,
/// `A₊ = pair.perturbed()`.
pub fn gz_trace_check(pair: &OperatorPair, model: &ModelDiscretization, z: C64) -> Result<GzCheck> {
    off_half_line(z, "z")?;
    if z.norm() == 0.0 {
        return Err(Error::InvalidInput("z must be nonzero".into()));
    }
    let spectra = pair.spectra()?;
    let sum = |ev: &[f64]| ev.iter().fold(zero(), |acc, &x| acc + g_z(x, z));
    let rhs = (sum(&spectra.perturbed.eigenvalues) - sum(&spectra.base.eigenvalues)) / (z * 2.0);
    let (t1, t2) = resolvent_traces(model, z)?;
    let lhs = t2 - t1;
    Ok(GzCheck { lhs, rhs, residual: lhs - rhs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LebesgueOptions {
    /// Largest window; the others are `h0·2^{−k}`.
    pub h0: f64,
    pub levels: usize,
    pub tolerance: f64,
}

impl Default for LebesgueOptions {
    fn default() -> Self {
        Self { h0: 1.0, levels: 9, tolerance: LEBESGUE_TOL }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LebesguePoint {
    pub value: f64,
    /// `(h, h⁻¹∫₀ʰ ξ(at ± s) ds)`.
    pub averages: Vec<(f64, f64)>,
    /// First-order Richardson values `2a_{k+1} − a_k`.
    pub extrapolated: Vec<f64>,
    /// Spread of the last three extrapolated values.
    pub spread: f64,
}

/// One-sided Lebesgue value of a function with known breakpoints.
pub fn lebesgue_point_fn(
    f: &dyn Fn(f64) -> f64,
    breakpoints: &[f64],
    side: Side,
    at: f64,
    options: &LebesgueOptions,
) -> Result<LebesguePoint> {
    if !(options.h0 > 0.0) || options.levels < 3 {
        return Err(Error::InvalidInput("Lebesgue windows need h0 > 0 and at least three levels".into()));
    }
    let mut averages = Vec::with_capacity(options.levels);
    for k in 0..options.levels {
        let h = options.h0 / libm::pow(2.0, k as f64);
        let (a, b) = match side {
            Side::Right => (at, at + h),
            Side::Left => (at - h, at),
        };
        let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
        pts.push(a);
        pts.push(b);
        pts.sort_by(f64::total_cmp);
        let mut g = |x: f64| C64::new(f(x), 0.0);
        let integral: f64 = pts.windows(2).map(|w| adaptive_gl(&mut g, w[0], w[1], QUAD_TOL * h, QUAD_DEPTH).re).sum();
        if !integral.is_finite() {
            return Err(Error::NonFinite("window average"));
        }
        averages.push((h, integral / h));
    }
    let extrapolated: Vec<f64> = averages.windows(2).map(|w| 2.0 * w[1].1 - w[0].1).collect();
    let tail = &extrapolated[extrapolated.len() - 3..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let spread = hi - lo;
    if spread > options.tolerance {
        return Err(Error::NoLebesguePoint { spread, tolerance: options.tolerance });
    }
    Ok(LebesguePoint { value: *extrapolated.last().unwrap(), averages, extrapolated, spread })
}

/// Largest window that stays inside the curve's domain, capped at 1.
fn default_window(curve: &SsfCurve, side: Side, at: f64) -> f64 {
    if let Some(step) = curve.step() {
        // shrink the window to the nearest jump on that side
        let gap = step
            .breaks()
            .iter()
            .map(|&b| match side {
                Side::Right => b - at,
                Side::Left => at - b,
            })
            .filter(|&d| d > 0.0)
            .fold(1.0, f64::min);
        return gap;
    }
    if curve.tails().is_some() {
        return 1.0;
    }
    let (lo, hi) = curve.support();
    match side {
        Side::Right => (hi - at).min(1.0),
        Side::Left => (at - lo).min(1.0),
    }
}

pub fn lebesgue_point(curve: &SsfCurve, side: Side, at: f64) -> Result<LebesguePoint> {
    let h0 = default_window(curve, side, at);
    if !(h0 > 0.0) {
        return Err(Error::Coverage(format!("the curve has no samples on the requested side of {at}")));
    }
    let f = |x: f64| curve.eval(x).unwrap_or(f64::NAN);
    lebesgue_point_fn(&f, curve.knots(), side, at, &LebesgueOptions { h0, ..LebesgueOptions::default() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WittenDiagnostics {
    /// `|L̂ξ_H(0₊) − W_r|`.
    pub consistency_residual: f64,
    pub consistent: bool,
    pub right_h: LebesguePoint,
    pub right_a: LebesguePoint,
    pub left_a: LebesguePoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WittenReport {
    pub lebesgue_right_h: f64,
    pub lebesgue_right_a: f64,
    pub lebesgue_left_a: f64,
    pub witten_index: f64,
    pub delta_r_samples: Vec<(f64, f64)>,
    pub plateau_window: Option<(f64, f64)>,
    pub plateau_value: Option<f64>,
    pub diagnostics: WittenDiagnostics,
}

impl WittenReport {
    /// Attaches a `Δ_r` curve and its plateau.
    pub fn with_delta_r(mut self, curve: &DeltaRCurve) -> Self {
        self.delta_r_samples = curve.lambdas.iter().copied().zip(curve.values.iter().copied()).collect();
        self.plateau_window = curve.plateau.map(|p| (p.lambda_far, p.lambda_near));
        self.plateau_value = curve.plateau.map(|p| p.value);
        self
    }
}

/// `W_r = [L̂ξ_A(0₊) + L̂ξ_A(0₋)]/2`, checked against the right Lebesgue
/// value of the transform `ξ_H` at 0.
pub fn witten_from_ssf(ssf_a: &SsfCurve) -> Result<WittenReport> {
    let right_a = lebesgue_point(ssf_a, Side::Right, 0.0)?;
    let left_a = lebesgue_point(ssf_a, Side::Left, 0.0)?;
    let h0 = default_window(ssf_a, Side::Right, 0.0).min(default_window(ssf_a, Side::Left, 0.0));
    let f = |l: f64| abel_value(ssf_a, l).unwrap_or(f64::NAN);
    let right_h = lebesgue_point_fn(
        &f,
        &abel_breakpoints(ssf_a),
        Side::Right,
        0.0,
        &LebesgueOptions { h0: h0 * h0, ..LebesgueOptions::default() },
    )?;
    let witten_index = 0.5 * (right_a.value + left_a.value);
    let consistency_residual = (right_h.value - witten_index).abs();
    Ok(WittenReport {
        lebesgue_right_h: right_h.value,
        lebesgue_right_a: right_a.value,
        lebesgue_left_a: left_a.value,
        witten_index,
        delta_r_samples: Vec::new(),
        plateau_window: None,
        plateau_value: None,
        diagnostics: WittenDiagnostics {
            consistency_residual,
            consistent: consistency_residual <= WITTEN_CONSISTENCY_TOL,
            right_h,
            right_a,
            left_a,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{indicator_curve, indicator_transform};
    use crate::linalg::c;
    use crate::ssf::StepFunction;
    use alloc::vec;
    use proptest::prelude::*;

    fn constant(v: f64) -> SsfCurve {
        SsfCurve::sampled(vec![-2.0, 2.0], vec![v, v], Normalization::Counting).unwrap().with_tails(v, v)
    }

    fn grid() -> Vec<f64> {
        (1..=60).map(|k| 0.05 * k as f64).collect()
    }

    #[test]
    fn constants_are_preserved() {
        for v in [0.0, 0.3, -1.7] {
            let out = abel_transform(&constant(v), &grid()).unwrap();
            assert!(out.values()[2..].iter().all(|x| (x - v).abs() < 1e-12));
            assert_eq!(out.normalization(), Normalization::ZeroBelowSpectrum);
            assert_eq!(out.eval(-0.5), Some(0.0));
        }
    }

    #[test]
    fn indicator_transform_closed_form() {
        let out = abel_transform(&indicator_curve(), &grid()).unwrap();
        for (l, v) in out.grid().iter().zip(out.values()).skip(2) {
            assert!((v - indicator_transform(*l)).abs() < 1e-13, "{l}");
        }
    }

    #[test]
    fn symmetrized_form_and_parity() {
        let odd = SsfCurve::from_fn(vec![-3.0, -1.0, 0.0, 1.0, 3.0], |x| x, Normalization::Counting).unwrap();
        let out = halfline_symmetrized_form(&odd, &grid()).unwrap();
        assert!(out.values().iter().all(|v| v.abs() < 1e-14));
        let even = SsfCurve::from_fn(vec![-3.0, -1.0, 0.0, 1.0, 3.0], |x| 1.0 - 0.2 * x * x, Normalization::Counting).unwrap();
        let a = abel_transform(&even, &grid()).unwrap();
        let b = halfline_symmetrized_form(&even, &grid()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn coverage_is_checked() {
        let short = SsfCurve::sampled(vec![-1.0, 1.0], vec![1.0, 1.0], Normalization::Counting).unwrap();
        assert!(matches!(abel_transform(&short, &[0.5, 4.0]), Err(Error::Coverage(_))));
    }

    #[test]
    fn cauchy_identity_for_the_indicator() {
        let f = |l: f64| indicator_transform(l);
        let bp = [1.0];
        let chk =
            cauchy_kernel_check(&indicator_curve(), HShift::Function { f: &f, breakpoints: &bp }, c(-1.0, 0.0), c(-2.0, 0.0))
                .unwrap();
        assert!(chk.residual.norm() < 1e-6, "{chk:?}");
        let g = |l: f64| indicator_transform(l) + 0.1;
        let bad =
            cauchy_kernel_check(&indicator_curve(), HShift::Function { f: &g, breakpoints: &bp }, c(-1.0, 0.0), c(-2.0, 0.0))
                .unwrap();
        assert!(bad.residual.norm() > 1e-2);
        let exact =
            cauchy_kernel_check(&indicator_curve(), HShift::AbelOf(&indicator_curve()), c(0.5, 1.0), c(-2.0, 0.3)).unwrap();
        assert!(exact.residual.norm() < 1e-9, "{exact:?}");
    }

    #[test]
    fn zero_curves_give_zero() {
        let z = constant(0.0);
        assert_eq!(cauchy_kernel_check(&z, HShift::Curve(&z), c(-1.0, 0.0), c(-2.0, 0.0)).unwrap().residual, c(0.0, 0.0));
        assert_eq!(krein_moment_check(HShift::Curve(&z), &z, c(-1.0, 0.0)).unwrap().residual, c(0.0, 0.0));
    }

    #[test]
    fn krein_moment_for_constants_and_counting() {
        let h =
            SsfCurve::sampled(vec![0.0, 50.0], vec![0.7, 0.7], Normalization::ZeroBelowSpectrum).unwrap().with_tails(0.0, 0.7);
        let chk = krein_moment_check(HShift::Curve(&h), &constant(0.7), c(-1.5, 0.0)).unwrap();
        assert!((chk.rhs - c(0.7 / 1.5, 0.0)).norm() < 1e-10);
        assert!(chk.residual.norm() < 1e-10, "{chk:?}");

        let step = StepFunction::counting(&[-3.0, -1.0, 0.5, 2.0], &[-2.5, -0.2, 0.9, 2.6]);
        let a = SsfCurve::from_step(step, vec![-4.0, 4.0], Normalization::Counting).unwrap();
        for z in [c(-1.0, 0.0), c(2.0, 1.0)] {
            let chk = krein_moment_check(HShift::AbelOf(&a), &a, z).unwrap();
            assert!(chk.residual.norm() < 1e-6, "{chk:?}");
        }
    }

    #[test]
    fn lebesgue_points() {
        let c3 = constant(0.3);
        assert!((lebesgue_point(&c3, Side::Right, 0.0).unwrap().value - 0.3).abs() < 1e-12);
        let ind = indicator_curve();
        assert!((lebesgue_point(&ind, Side::Left, 0.0).unwrap().value - 1.0).abs() < 1e-12);
        assert!(lebesgue_point(&ind, Side::Right, 0.0).unwrap().value.abs() < 1e-12);
        let lin = SsfCurve::from_fn(vec![-1.0, 0.0, 1.0], |x| x, Normalization::Counting).unwrap();
        for side in [Side::Left, Side::Right] {
            assert!(lebesgue_point(&lin, side, 0.0).unwrap().value.abs() < 1e-12);
        }
        let near = SsfCurve::from_step(
            StepFunction::new(vec![-0.3, 0.004], vec![0.0, 2.0, 5.0]).unwrap(),
            vec![-1.0, 1.0],
            Normalization::Counting,
        )
        .unwrap();
        assert!((lebesgue_point(&near, Side::Right, 0.0).unwrap().value - 2.0).abs() < 1e-12);
        assert!((lebesgue_point(&near, Side::Left, 0.0).unwrap().value - 2.0).abs() < 1e-12);
        let wild = |x: f64| libm::sin(1.0 / x);
        let err = lebesgue_point_fn(&wild, &[], Side::Right, 0.0, &LebesgueOptions { h0: 0.5, levels: 9, tolerance: 1e-4 });
        assert!(matches!(err, Err(Error::NoLebesguePoint { .. })), "{err:?}");
    }

    #[test]
    fn witten_index_from_curves() {
        let r = witten_from_ssf(&constant(0.3)).unwrap();
        assert!((r.witten_index - 0.3).abs() < 1e-12);
        assert!(r.diagnostics.consistent);
        let r = witten_from_ssf(&indicator_curve()).unwrap();
        assert!((r.witten_index - 0.5).abs() < 1e-12);
        assert!((r.lebesgue_right_h - 0.5).abs() < 1e-6);
        let r = witten_from_ssf(&constant(0.0)).unwrap();
        assert_eq!(r.witten_index, 0.0);
        assert!((r.witten_index - 0.5 * (r.lebesgue_left_a + r.lebesgue_right_a)).abs() < 1e-12);
    }

    #[test]
    fn delta_r_synthesis() {
        assert!((delta_r_from_ssf(&constant(0.3), -0.01).unwrap() - 0.3).abs() < 1e-9);
        for l in [-1e-3, -0.1, -1.0] {
            let v = delta_r_from_ssf(&indicator_curve(), l).unwrap();
            assert!((v - 0.5 / libm::sqrt(1.0 - l)).abs() < 1e-9, "{l} {v}");
        }
    }

    #[test]
    fn g_z_is_odd() {
        for x in [0.3, 2.0] {
            let z = c(-1.0, 0.5);
            assert!((g_z(-x, z) + g_z(x, z)).norm() < 1e-15);
        }
    }

    #[test]
    fn gz_trace_formula_on_the_tanh_model() {
        use crate::fixtures::scalar_path;
        use crate::model::{assemble, TimeScheme};
        let pair = OperatorPair::from_endpoints(
            crate::operator::HermitianOperator::from_real_diag(&[-1.0]).unwrap(),
            crate::operator::HermitianOperator::from_real_diag(&[1.0]).unwrap(),
        )
        .unwrap();
        let run = |n| {
            let model = assemble(&scalar_path(TimeScheme::SplitDirichlet, 12.0, n, 1.0), TimeScheme::SplitDirichlet).unwrap();
            gz_trace_check(&pair, &model, c(-1.0, 0.0)).unwrap().residual.norm()
        };
        let (coarse, fine) = (run(200), run(400));
        assert!(fine < 5e-3, "{fine}");
        assert!(coarse / fine > 2.0, "{coarse} {fine}");
    }

    #[test]
    fn gz_trace_formula_without_perturbation() {
        use crate::model::{assemble, time_grid, OperatorPath, TimeScheme};
        let t = time_grid(TimeScheme::SplitDirichlet, 4.0, 40);
        let model = assemble(&OperatorPath::scalar(t, 1.0, |_| 1.0, |_| 0.0).unwrap(), TimeScheme::SplitDirichlet).unwrap();
        let one = crate::operator::HermitianOperator::from_real_diag(&[1.0]).unwrap();
        let pair = OperatorPair::from_endpoints(one.clone(), one).unwrap();
        let chk = gz_trace_check(&pair, &model, c(-0.5, 0.2)).unwrap();
        assert!(chk.lhs.norm() < 1e-12 && chk.rhs.norm() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn abel_is_linear_and_positive(vals in proptest::collection::vec(0.0f64..2.0, 6), s in -2.0f64..2.0) {
            let g = vec![-2.5, -1.5, -0.5, 0.5, 1.5, 2.5];
            let a = SsfCurve::sampled(g.clone(), vals.clone(), Normalization::Counting).unwrap().with_tails(vals[0], vals[5]);
            let lam = [0.1, 1.0, 3.0, 9.0];
            let ta = abel_transform(&a, &lam).unwrap();
            prop_assert!(ta.values().iter().all(|&v| v >= -1e-14));
            let scaled = SsfCurve::sampled(g, vals.iter().map(|v| s * v).collect(), Normalization::Counting).unwrap().with_tails(s * vals[0], s * vals[5]);
            let ts = abel_transform(&scaled, &lam).unwrap();
            for (x, y) in ta.values().iter().zip(ts.values()) {
                prop_assert!((s * x - y).abs() < 1e-12);
            }
            let hs = halfline_symmetrized_form(&a, &lam).unwrap();
            for (x, y) in ta.values().iter().zip(hs.values()) {
                prop_assert!((x - y).abs() < 1e-10);
            }
            let w = witten_from_ssf(&a).unwrap();
            prop_assert!(w.diagnostics.consistency_residual < 1e-6);
        }
    }
}
