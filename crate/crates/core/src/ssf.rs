//! Spectral shift functions of finite pairs.
//!
//! Three routes produce a curve `ξ(λ; A, A₀)`:
//!
//! * counting, `#{eig A₀ ≤ λ} − #{eig A ≤ λ}`, exact and right-continuous;
//! * the boundary phase `π⁻¹ arg D_{A/A₀}(λ + iε)` of the perturbation
//!   determinant, tracked continuously from below the joint spectrum;
//! * the symmetrized `det₂` plus the `η` correction, whose additive constant
//!   is fixed afterwards (zero below the spectrum, or Cayley).
//!
//! The `ε ↓ 0` limit in the phase routes is taken by the two-point
//! Richardson combination `2φ(ε) − φ(2ε)`, which removes the `O(ε)` smearing
//! of every jump.
//!
//! Curves are either exact step functions or piecewise-linear interpolants of
//! their samples, and every integral against a rational kernel is evaluated
//! in closed form on each piece.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::determinants::{track_log_branch_refined, OperatorPair, PairSpectra, DEFAULT_MAX_STEP};
use crate::linalg::{self, C64};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    Counting,
    ZeroBelowSpectrum,
    Cayley,
    Unnormalized,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Counting => "counting",
            Normalization::ZeroBelowSpectrum => "zero-below-spectrum",
            Normalization::Cayley => "cayley",
            Normalization::Unnormalized => "unnormalized",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "counting" => Some(Normalization::Counting),
            "zero-below-spectrum" => Some(Normalization::ZeroBelowSpectrum),
            "cayley" => Some(Normalization::Cayley),
            "unnormalized" => Some(Normalization::Unnormalized),
            _ => None,
        }
    }
}

/// Right-continuous step function: `levels[k]` holds on
/// `[breaks[k-1], breaks[k])`, with `levels.len() == breaks.len() + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    levels: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breaks.len() + 1 {
            return Err(Error::DimensionMismatch { expected: breaks.len() + 1, found: levels.len() });
        }
        if breaks.iter().chain(&levels).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("step function"));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("step breaks must be strictly increasing".into()));
        }
        Ok(Self { breaks, levels })
    }

    pub fn constant(c: f64) -> Self {
        Self { breaks: Vec::new(), levels: alloc::vec![c] }
    }

    /// `#{base ≤ λ} − #{perturbed ≤ λ}`. Coincident jump locations (within a
    /// few ulps) are merged and zero net jumps dropped.
    pub fn counting(base: &[f64], perturbed: &[f64]) -> Self {
        let mut jumps: Vec<(f64, f64)> = base.iter().map(|&x| (x, 1.0)).chain(perturbed.iter().map(|&x| (x, -1.0))).collect();
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (x, d) in jumps {
            match merged.last_mut() {
                Some((y, e)) if (x - *y).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) => *e += d,
                _ => merged.push((x, d)),
            }
        }
        let mut breaks = Vec::new();
        let mut levels = alloc::vec![0.0];
        let mut level = 0.0;
        for (x, d) in merged {
            if d != 0.0 {
                level += d;
                breaks.push(x);
                levels.push(level);
            }
        }
        Self { breaks, levels }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Jump locations and sizes.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breaks.iter().zip(self.levels.windows(2)).map(|(&x, w)| (x, w[1] - w[0]))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b <= x);
        self.levels[k]
    }

    /// Left limit at `x`.
    pub fn eval_left(&self, x: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b < x);
        self.levels[k]
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self { breaks: self.breaks.clone(), levels: self.levels.iter().map(|l| l + c).collect() }
    }
}

/// A sampled spectral shift function with its normalization tag.
///
/// When `step` is present the curve is that exact step function and `values`
/// are its samples on `grid`. Otherwise the curve is the linear interpolant of
/// the samples, extended by the constant `tails` if those are known.
#[derive(Clone, Debug, PartialEq)]
pub struct SsfCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
    normalization: Normalization,
    tails: Option<(f64, f64)>,
    step: Option<StepFunction>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("grid"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    Ok(())
}

impl SsfCurve {
    pub fn sampled(grid: Vec<f64>, values: Vec<f64>, normalization: Normalization) -> Result<Self> {
        check_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("curve values"));
        }
        Ok(Self { grid, values, normalization, tails: None, step: None })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl FnMut(f64) -> f64, normalization: Normalization) -> Result<Self> {
        let values = grid.iter().copied().map(f).collect();
        Self::sampled(grid, values, normalization)
    }

    pub fn from_step(step: StepFunction, grid: Vec<f64>, normalization: Normalization) -> Result<Self> {
        check_grid(&grid)?;
        let values = grid.iter().map(|&x| step.eval(x)).collect();
        let tails = Some((step.levels[0], *step.levels.last().unwrap()));
        Ok(Self { grid, values, normalization, tails, step: Some(step) })
    }

    /// Constant extension outside the grid.
    pub fn with_tails(mut self, below: f64, above: f64) -> Self {
        if self.step.is_none() {
            self.tails = Some((below, above));
        }
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn tails(&self) -> Option<(f64, f64)> {
        self.tails
    }

    pub fn step(&self) -> Option<&StepFunction> {
        self.step.as_ref()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Interval on which the curve is known.
    pub fn support(&self) -> (f64, f64) {
        if self.tails.is_some() {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (self.grid[0], self.grid[self.grid.len() - 1])
        }
    }

    pub fn covers(&self, a: f64, b: f64) -> bool {
        let (lo, hi) = self.support();
        lo <= a && b <= hi
    }

    /// Points where the curve may fail to be smooth.
    pub fn knots(&self) -> &[f64] {
        match &self.step {
            Some(s) => &s.breaks,
            None => &self.grid,
        }
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        if let Some(s) = &self.step {
            return Some(s.eval(x));
        }
        let n = self.grid.len();
        if x < self.grid[0] {
            return self.tails.map(|t| t.0);
        }
        if x > self.grid[n - 1] {
            return self.tails.map(|t| t.1);
        }
        let k = self.grid.partition_point(|&g| g <= x);
        if k >= n {
            return Some(self.values[n - 1]);
        }
        let (x0, x1) = (self.grid[k - 1], self.grid[k]);
        let t = (x - x0) / (x1 - x0);
        Some(self.values[k - 1] + t * (self.values[k] - self.values[k - 1]))
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
            normalization: self.normalization,
            tails: self.tails.map(|(a, b)| (a + c, b + c)),
            step: self.step.as_ref().map(|s| s.shifted(c)),
        }
    }

    pub fn resample(&self, grid: Vec<f64>) -> Result<Self> {
        check_grid(&grid)?;
        if !self.covers(grid[0], grid[grid.len() - 1]) {
            return Err(Error::Coverage("resampling grid leaves the curve support".into()));
        }
        let values = grid.iter().map(|&x| self.eval(x).unwrap_or(0.0)).collect();
        Ok(Self { grid, values, ..self.clone() })
    }

    /// The curve as closed-form pieces `α + βλ` on `(a, b)`.
    pub fn pieces(&self) -> Vec<Piece> {
        let mut out = Vec::new();
        if let Some(s) = &self.step {
            let mut a = f64::NEG_INFINITY;
            for (k, &b) in s.breaks.iter().enumerate() {
                out.push(Piece::constant(a, b, s.levels[k]));
                a = b;
            }
            out.push(Piece::constant(a, f64::INFINITY, *s.levels.last().unwrap()));
            return out;
        }
        let n = self.grid.len();
        if let Some((lo, _)) = self.tails {
            out.push(Piece::constant(f64::NEG_INFINITY, self.grid[0], lo));
        }
        for k in 1..n {
            out.push(Piece::linear(self.grid[k - 1], self.grid[k], self.values[k - 1], self.values[k]));
        }
        if let Some((_, hi)) = self.tails {
            out.push(Piece::constant(self.grid[n - 1], f64::INFINITY, hi));
        }
        out
    }

    /// `∫ ξ dλ` over the support; infinite if a nonzero tail is present.
    pub fn integral(&self) -> f64 {
        self.pieces().iter().map(Piece::integral).sum()
    }

    /// `∫ ξ(λ)(λ − z)⁻² dλ`.
    pub fn integrate_inverse_square(&self, z: C64) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for p in self.pieces() {
            acc += p.inverse_square(z)?;
        }
        Ok(acc)
    }

    /// `∫ ξ(λ)[(λ − z)⁻¹ − (λ − z₀)⁻¹] dλ`.
    pub fn integrate_cauchy_difference(&self, z: C64, z0: C64) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for p in self.pieces() {
            acc += p.cauchy_difference(z, z0)?;
        }
        Ok(acc)
    }

    /// `∫ ξ(λ)/((λ − x₀)² + y₀²) dλ` with `z0 = x₀ + iy₀`, `y₀ ≠ 0`.
    pub fn integrate_poisson(&self, z0: C64) -> f64 {
        self.pieces().iter().map(|p| p.poisson(z0.re, z0.im.abs())).sum()
    }
}

/// `α + βλ` on `(a, b)`; infinite ends only with `β = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Piece {
    pub fn constant(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, alpha: c, beta: 0.0 }
    }

    /// Linear through `(a, fa)` and `(b, fb)`.
    pub fn linear(a: f64, b: f64, fa: f64, fb: f64) -> Self {
        let beta = (fb - fa) / (b - a);
        Self { a, b, alpha: fa - beta * a, beta }
    }

    pub fn value(&self, x: f64) -> f64 {
        if self.beta == 0.0 {
            self.alpha
        } else {
            self.alpha + self.beta * x
        }
    }

    fn is_zero(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }

    pub fn integral(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if !(self.a.is_finite() && self.b.is_finite()) {
            return f64::INFINITY * self.alpha.signum();
        }
        self.alpha * (self.b - self.a) + 0.5 * self.beta * (self.b * self.b - self.a * self.a)
    }

    fn check_pole(&self, z: C64) -> Result<()> {
        if z.im == 0.0 && z.re >= self.a && z.re <= self.b {
            return Err(Error::DegeneratePole(alloc::format!("real point {} lies on a piece where the curve is nonzero", z.re)));
        }
        Ok(())
    }

    pub fn inverse_square(&self, z: C64) -> Result<C64> {
        if self.is_zero() {
            return Ok(C64::new(0.0, 0.0));
        }
        self.check_pole(z)?;
        let c = C64::new(self.alpha, 0.0) + z * self.beta;
        let f = |x: f64| if x.is_finite() { -c / (C64::new(x, 0.0) - z) } else { C64::new(0.0, 0.0) };
        let mut v = f(self.b) - f(self.a);
        if self.beta != 0.0 {
            v += log_ratio(self.a, self.b, z) * self.beta;
        }
        Ok(v)
    }

    pub fn cauchy_difference(&self, z: C64, z0: C64) -> Result<C64> {
        if self.is_zero() {
            return Ok(C64::new(0.0, 0.0));
        }
        self.check_pole(z)?;
        self.check_pole(z0)?;
        if self.a.is_finite() && self.b.is_finite() {
            let cz = C64::new(self.alpha, 0.0) + z * self.beta;
            let cz0 = C64::new(self.alpha, 0.0) + z0 * self.beta;
            return Ok(cz * log_ratio(self.a, self.b, z) - cz0 * log_ratio(self.a, self.b, z0));
        }
        // constant on a half-line: G(x) = ln(x − z) − ln(x − z₀), G(+∞) = 0
        let g = |x: f64| -> C64 {
            if x == f64::INFINITY {
                C64::new(0.0, 0.0)
            } else if x == f64::NEG_INFINITY {
                C64::new(0.0, far_left_arg(z) - far_left_arg(z0))
            } else {
                (C64::new(x, 0.0) - z).ln() - (C64::new(x, 0.0) - z0).ln()
            }
        };
        Ok((g(self.b) - g(self.a)) * self.alpha)
    }

    /// `∫(α + βλ)/((λ − x₀)² + y₀²)`.
    pub fn poisson(&self, x0: f64, y0: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let at = |x: f64| libm::atan((x - x0) / y0);
        let mut v = (self.alpha + self.beta * x0) / y0 * (at(self.b) - at(self.a));
        if self.beta != 0.0 {
            let q = |x: f64| (x - x0) * (x - x0) + y0 * y0;
            v += 0.5 * self.beta * libm::log(q(self.b) / q(self.a));
        }
        v
    }
}

/// `ln(b − z) − ln(a − z)` along the segment, for `z` off `[a, b]`.
fn log_ratio(a: f64, b: f64, z: C64) -> C64 {
    (C64::new(b, 0.0) - z).ln() - (C64::new(a, 0.0) - z).ln()
}

/// `lim arg(x − z)` as `x → −∞` on the principal branch.
fn far_left_arg(z: C64) -> f64 {
    if z.im > 0.0 {
        -PI
    } else {
        PI
    }
}

/// Counting spectral shift function, exact.
pub fn ssf_counting(pair: &OperatorPair, grid: &[f64]) -> Result<SsfCurve> {
    let base = pair.base().eigenvalues()?;
    let perturbed = pair.perturbed().eigenvalues()?;
    ssf_counting_from_spectra(&base, &perturbed, grid)
}

pub fn ssf_counting_from_spectra(base: &[f64], perturbed: &[f64], grid: &[f64]) -> Result<SsfCurve> {
    SsfCurve::from_step(StepFunction::counting(base, perturbed), grid.to_vec(), Normalization::Counting)
}

/// `ε = 1e-5 · max(1, spectral diameter)`.
pub fn default_epsilon(spectra: &PairSpectra) -> f64 {
    1e-5 * (spectra.spectral_ceiling() - spectra.spectral_floor()).max(1.0)
}

/// Tracking controls for the determinant-phase routes.
#[derive(Clone, Copy, Debug)]
pub struct PhaseTracking {
    pub max_step: f64,
    pub max_depth: u32,
    /// Combine `ε` and `2ε` to cancel the first-order smearing.
    pub richardson: bool,
}

impl Default for PhaseTracking {
    fn default() -> Self {
        Self { max_step: DEFAULT_MAX_STEP, max_depth: 48, richardson: true }
    }
}

/// Anchor below the joint spectrum, where every phase is close to 0.
fn anchor_point(spectra: &PairSpectra) -> f64 {
    let floor = spectra.spectral_floor();
    floor - (spectra.spectral_ceiling() - floor).max(1.0)
}

/// Continuous `Im ln eval(λ)` on `grid`, anchored at the principal value at
/// `anchor`. The joint eigenvalues are inserted as intermediate tracking
/// points so no full winding can hide between two samples.
fn tracked_phase(
    grid: &[f64],
    anchor: f64,
    extra: &[f64],
    tracking: PhaseTracking,
    eval: impl FnMut(f64) -> Result<C64>,
) -> Result<Vec<f64>> {
    let mut path: Vec<(f64, Option<usize>)> = Vec::with_capacity(grid.len() + extra.len() + 1);
    let start = anchor.min(grid[0]);
    path.push((start, None));
    path.extend(grid.iter().enumerate().map(|(i, &x)| (x, Some(i))));
    path.extend(extra.iter().filter(|&&x| x > start).map(|&x| (x, None)));
    path.sort_by(|a, b| a.0.total_cmp(&b.0));
    path.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 = a.1.or(b.1);
            true
        } else {
            false
        }
    });
    let params: Vec<f64> = path.iter().map(|p| p.0).collect();
    let branch = track_log_branch_refined(&params, eval, tracking.max_step, tracking.max_depth)?;
    let mut out = alloc::vec![0.0; grid.len()];
    for (p, v) in path.iter().zip(&branch.values) {
        if let Some(i) = p.1 {
            out[i] = v.im;
        }
    }
    Ok(out)
}

fn richardson(fine: &[f64], coarse: Option<&[f64]>) -> Vec<f64> {
    match coarse {
        Some(c) => fine.iter().zip(c).map(|(f, c)| 2.0 * f - c).collect(),
        None => fine.to_vec(),
    }
}

/// `ξ(λ) = π⁻¹ lim_{ε↓0} arg D_{A/A₀}(λ + iε)`, tagged zero-below-spectrum.
pub fn ssf_via_det_phase(pair: &OperatorPair, grid: &[f64], epsilon: f64) -> Result<SsfCurve> {
    ssf_via_det_phase_with(&pair.spectra()?, grid, epsilon, PhaseTracking::default())
}

pub fn ssf_via_det_phase_with(spectra: &PairSpectra, grid: &[f64], epsilon: f64, tracking: PhaseTracking) -> Result<SsfCurve> {
    check_grid(grid)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let anchor = anchor_point(spectra);
    let joint = spectra.joint_eigenvalues();
    let phase = |eps: f64| tracked_phase(grid, anchor, &joint, tracking, |x| spectra.perturbation_determinant(C64::new(x, eps)));
    let fine = phase(epsilon)?;
    let coarse = if tracking.richardson { Some(phase(2.0 * epsilon)?) } else { None };
    let values = richardson(&fine, coarse.as_deref()).into_iter().map(|p| p / PI).collect();
    Ok(SsfCurve::sampled(grid.to_vec(), values, Normalization::ZeroBelowSpectrum)?.with_tails(0.0, 0.0))
}

/// `η(z) = (z − z₀) tr((A₀ − z)⁻¹ B (A₀ − z₀)⁻¹)`, evaluated through the
/// diagonal of `B` in the eigenbasis of `A₀`.
pub struct Eta {
    mu: Vec<f64>,
    b_diag: Vec<f64>,
    z0: C64,
}

impl Eta {
    pub fn new(spectra: &PairSpectra, z0: C64) -> Result<Self> {
        if z0.im == 0.0 {
            return Err(Error::InvalidInput("η needs Im z0 ≠ 0".into()));
        }
        let v = &spectra.base.eigenvectors;
        let bv = spectra.perturbation.matmul(v);
        let n = spectra.dim();
        let b_diag = (0..n).map(|k| (0..n).fold(C64::new(0.0, 0.0), |acc, i| acc + v[(i, k)].conj() * bv[(i, k)]).re).collect();
        Ok(Self { mu: spectra.base.eigenvalues.clone(), b_diag, z0 })
    }

    /// `tr(B (A₀ − z)⁻¹)`.
    pub fn trace_b_resolvent(&self, z: C64) -> C64 {
        self.mu.iter().zip(&self.b_diag).fold(C64::new(0.0, 0.0), |acc, (&m, &b)| acc + b / (C64::new(m, 0.0) - z))
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.trace_b_resolvent(z) - self.trace_b_resolvent(self.z0)
    }

    /// `η′(z) = tr((A₀ − z)⁻¹ B (A₀ − z)⁻¹)`.
    pub fn derivative(&self, z: C64) -> C64 {
        self.mu.iter().zip(&self.b_diag).fold(C64::new(0.0, 0.0), |acc, (&m, &b)| {
            let r = C64::new(1.0, 0.0) / (C64::new(m, 0.0) - z);
            acc + r * r * b
        })
    }
}

/// `π⁻¹[Im ln det₂(I + sgn(B)|B|^{1/2}(A₀ − λ − iε)⁻¹|B|^{1/2}) + Im η(λ + iε)]`
/// with no additive constant. `ln det₂ = ln det(I + K) − tr K`; the first
/// term is tracked from its principal value at the anchor below the spectrum.
pub fn ssf_symmetrized_raw(
    spectra: &PairSpectra,
    grid: &[f64],
    epsilon: f64,
    z0: C64,
    tracking: PhaseTracking,
) -> Result<SsfCurve> {
    check_grid(grid)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let eta = Eta::new(spectra, z0)?;
    let anchor = anchor_point(spectra);
    let joint = spectra.joint_eigenvalues();
    let mut with_anchor = alloc::vec![anchor];
    with_anchor.extend_from_slice(grid);
    let phase = |eps: f64| -> Result<Vec<f64>> {
        let det =
            tracked_phase(&with_anchor, anchor, &joint, tracking, |x| spectra.symmetrized_parts(C64::new(x, eps)).map(|p| p.0))?;
        let mut out = Vec::with_capacity(det.len());
        for (p, &x) in det.iter().zip(&with_anchor) {
            let z = C64::new(x, eps);
            let trace_k = spectra.symmetrized_parts(z)?.1;
            out.push(p - trace_k.im + eta.eval(z).im);
        }
        Ok(out)
    };
    let fine = phase(epsilon)?;
    let coarse = if tracking.richardson { Some(phase(2.0 * epsilon)?) } else { None };
    let all: Vec<f64> = richardson(&fine, coarse.as_deref()).into_iter().map(|p| p / PI).collect();
    let anchor_value = all[0];
    SsfCurve::sampled(grid.to_vec(), all[1..].to_vec(), Normalization::Unnormalized)
        .map(|c| c.with_tails(anchor_value, anchor_value))
}

/// Symmetrized route with the constant fixed by `ξ = 0` below the joint
/// spectrum.
pub fn ssf_symmetrized(pair: &OperatorPair, grid: &[f64], epsilon: f64, z0: C64) -> Result<SsfCurve> {
    let spectra = pair.spectra()?;
    let raw = ssf_symmetrized_raw(&spectra, grid, epsilon, z0, PhaseTracking::default())?;
    let c = raw.tails().map(|t| t.0).unwrap_or(0.0);
    Ok(raw.shifted(-c).with_tails(0.0, 0.0).with_normalization(Normalization::ZeroBelowSpectrum))
}

/// Outcome of [`cayley_normalize`].
#[derive(Clone, Debug)]
pub struct CayleyNormalized {
    pub curve: SsfCurve,
    /// Shift added to the input curve.
    pub kappa: f64,
    /// `Im tr ln(U(z₀)U₀(z₀)⁻¹)` from principal eigenvalue arguments.
    pub target: f64,
    /// `2 Im z₀ ∫ ξ/|λ − z₀|²` of the input curve.
    pub weighted_integral: f64,
    /// `(Σ arg eigenvalues − arg det)/2π`: the integer separating the
    /// eigenvalue-wise logarithm from the principal logarithm of the
    /// determinant.
    pub branch_integer: i64,
}

/// `Im tr ln(U U₀⁻¹)` with `U = (A − z₀)(A − z̄₀)⁻¹`, and the branch integer.
pub fn cayley_target(spectra: &PairSpectra, z0: C64) -> Result<(f64, i64)> {
    let zb = z0.conj();
    let u = spectra.perturbed.apply(|x| (C64::new(x, 0.0) - z0) / (C64::new(x, 0.0) - zb))?;
    let u0_inv = spectra.base.apply(|x| (C64::new(x, 0.0) - zb) / (C64::new(x, 0.0) - z0))?;
    let w = u.matmul(&u0_inv);
    let ev = linalg::eigenvalues_general(&w).ok_or(Error::NoConvergence("complex QR iteration"))?;
    let target: f64 = ev.iter().map(|e| e.arg()).sum();
    let det_arg = ev.iter().fold(C64::new(1.0, 0.0), |a, e| a * e).arg();
    Ok((target, libm::round((target - det_arg) / (2.0 * PI)) as i64))
}

/// Shift `curve` by the unique constant making its Poisson-weighted integral
/// match the Cayley-transform trace.
pub fn cayley_normalize(curve: &SsfCurve, pair: &OperatorPair, z0: C64) -> Result<CayleyNormalized> {
    cayley_normalize_with(curve, &pair.spectra()?, z0)
}

pub fn cayley_normalize_with(curve: &SsfCurve, spectra: &PairSpectra, z0: C64) -> Result<CayleyNormalized> {
    if z0.im <= 0.0 {
        return Err(Error::InvalidInput("Cayley point z0 needs Im z0 > 0".into()));
    }
    if curve.tails().is_none() {
        // Poisson mass outside the grid times the largest sample
        let (a, b) = curve.support();
        let outside = PI - (libm::atan((b - z0.re) / z0.im) - libm::atan((a - z0.re) / z0.im));
        let sup = curve.values().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let missing = 2.0 * outside * sup;
        if missing > 1e-6 {
            return Err(Error::Coverage(alloc::format!(
                "curve grid [{a}, {b}] misses Poisson weight {missing:e} around z0 = {z0}"
            )));
        }
    }
    let (target, branch_integer) = cayley_target(spectra, z0)?;
    let weighted_integral = 2.0 * z0.im * curve.integrate_poisson(z0);
    let kappa = (target - weighted_integral) / (2.0 * PI);
    Ok(CayleyNormalized {
        curve: curve.shifted(kappa).with_normalization(Normalization::Cayley),
        kappa,
        target,
        weighted_integral,
        branch_integer,
    })
}

/// Difference of the Cayley shifts obtained at two points; zero when the
/// two normalizations agree.
pub fn cayley_shift_between(curve: &SsfCurve, spectra: &PairSpectra, z0: C64, z1: C64) -> Result<f64> {
    Ok(cayley_normalize_with(curve, spectra, z0)?.kappa - cayley_normalize_with(curve, spectra, z1)?.kappa)
}

/// `tr((A − z)⁻¹ − (A₀ − z)⁻¹) + ∫ ξ(λ)(λ − z)⁻² dλ`.
pub fn krein_residual(pair: &OperatorPair, curve: &SsfCurve, z: C64) -> Result<C64> {
    krein_residual_with(&pair.spectra()?, curve, z)
}

pub fn krein_residual_with(spectra: &PairSpectra, curve: &SsfCurve, z: C64) -> Result<C64> {
    Ok(spectra.resolvent_trace_difference(z)? + curve.integrate_inverse_square(z)?)
}

/// `∫ |a − b| (ν² + 1)⁻¹ dν` over the common support, exact for the
/// piecewise-linear / step representation.
pub fn weighted_l1_distance(a: &SsfCurve, b: &SsfCurve) -> Result<f64> {
    let (la, ha) = a.support();
    let (lb, hb) = b.support();
    let (lo, hi) = (la.max(lb), ha.min(hb));
    if lo >= hi {
        return Err(Error::Coverage("curves have disjoint supports".into()));
    }
    let pa = a.pieces();
    let pb = b.pieces();
    let mut cuts: Vec<f64> = pa.iter().chain(&pb).flat_map(|p| [p.a, p.b]).filter(|x| *x > lo && *x < hi).collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut ia, mut ib) = (0, 0);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        while pa[ia].b <= x0 {
            ia += 1;
        }
        while pb[ib].b <= x0 {
            ib += 1;
        }
        let d = Piece { a: x0, b: x1, alpha: pa[ia].alpha - pb[ib].alpha, beta: pa[ia].beta - pb[ib].beta };
        total += abs_weighted(d);
    }
    Ok(total)
}

/// `∫|α + βλ|/(λ² + 1)` on one piece, split at the root.
fn abs_weighted(p: Piece) -> f64 {
    if p.beta != 0.0 {
        let root = -p.alpha / p.beta;
        if root > p.a && root < p.b {
            let left = Piece { b: root, ..p };
            let right = Piece { a: root, ..p };
            return left.poisson(0.0, 1.0).abs() + right.poisson(0.0, 1.0).abs();
        }
    }
    p.poisson(0.0, 1.0).abs()
}

/// A grid of `n` points spanning the joint spectrum with `margin` on both
/// sides.
pub fn spectrum_grid(spectra: &PairSpectra, margin: f64, n: usize) -> Vec<f64> {
    let lo = spectra.spectral_floor() - margin;
    let hi = spectra.spectral_ceiling() + margin;
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Grid points at distance at least `d` from every listed eigenvalue.
pub fn away_from(grid: &[f64], eigenvalues: &[f64], d: f64) -> Vec<usize> {
    grid.iter().enumerate().filter(|(_, &x)| eigenvalues.iter().all(|&e| (x - e).abs() >= d)).map(|(i, _)| i).collect()
}
