//! `A₋ = −i d/dx` on the line perturbed by a real potential `φ`.
//!
//! The spectral shift function of the pair `(A₋ + φ, A₋)` is constant and
//! equal to `(1/2π)∫φ`. This module evaluates it through a Nyström
//! discretization of the `χ_n`-sandwiched resolvent, and builds a direct
//! `(t, x)` model of the associated operator `D_A` for comparison.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::determinants::{track_log_branch_refined, DEFAULT_MAX_STEP};
use crate::error::{Error, Result};
use crate::linalg::{CMat, Lu, C64};
use crate::model::{assemble, periodic_derivative, time_grid, ModelDiscretization, OperatorPath, TimeScheme, DENSE_BUDGET};
use crate::operator::HermitianOperator;
use crate::pushnitski::{witten_from_ssf, WittenReport};
use crate::quad::GaussLegendre;
use crate::ssf::{Normalization, SsfCurve};

/// Nyström nodes used unless the caller asks otherwise.
pub const DEFAULT_NODES: usize = 400;
/// Minimum number of nodes per period of `e^{iνx}`.
pub const NODES_PER_PERIOD: f64 = 8.0;
const POLE_GAP: f64 = 1e-10;
const BISECTION_DEPTH: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileKind {
    Gaussian,
    Sech2,
}

impl ProfileKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileKind::Gaussian => "gaussian",
            ProfileKind::Sech2 => "sech2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(ProfileKind::Gaussian),
            "sech2" => Some(ProfileKind::Sech2),
            _ => None,
        }
    }
}

/// A potential `φ` with a closed-form integral, switched on by
/// `θ(t) = (1 + tanh t)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracProfile {
    pub kind: ProfileKind,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
}

impl DiracProfile {
    pub fn new(kind: ProfileKind, amplitude: f64, width: f64, center: f64) -> Result<Self> {
        if !(amplitude.is_finite() && center.is_finite()) {
            return Err(Error::NonFinite("profile parameters"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidInput(format!("profile width must be positive, got {width}")));
        }
        Ok(Self { kind, amplitude, width, center })
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        Self { kind: ProfileKind::Gaussian, amplitude, width, center: 0.0 }
    }

    pub fn sech2(amplitude: f64, width: f64) -> Self {
        Self { kind: ProfileKind::Sech2, amplitude, width, center: 0.0 }
    }

    /// Gaussian profile of unit width whose integral is `integral`.
    pub fn gaussian_with_integral(integral: f64, width: f64) -> Self {
        Self::gaussian(integral / (width * libm::sqrt(2.0 * PI)), width)
    }

    pub fn sech2_with_integral(integral: f64, width: f64) -> Self {
        Self::sech2(integral / (2.0 * width), width)
    }

    pub fn phi(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        match self.kind {
            ProfileKind::Gaussian => self.amplitude * libm::exp(-0.5 * u * u),
            ProfileKind::Sech2 => {
                let c = libm::cosh(u);
                self.amplitude / (c * c)
            }
        }
    }

    pub fn integral(&self) -> f64 {
        match self.kind {
            ProfileKind::Gaussian => self.amplitude * self.width * libm::sqrt(2.0 * PI),
            ProfileKind::Sech2 => 2.0 * self.amplitude * self.width,
        }
    }

    /// `(1/2π)∫φ`, the value of the spectral shift function.
    pub fn reference(&self) -> f64 {
        self.integral() / (2.0 * PI)
    }

    /// Interval outside which `∫|φ|` is below `1e-10` of the total.
    pub fn support(&self) -> (f64, f64) {
        let r = match self.kind {
            ProfileKind::Gaussian => 8.0,
            ProfileKind::Sech2 => 12.5,
        } * self.width;
        (self.center - r, self.center + r)
    }

    pub fn theta(&self, t: f64) -> f64 {
        0.5 * (1.0 + libm::tanh(t))
    }

    pub fn theta_prime(&self, t: f64) -> f64 {
        let c = libm::cosh(t);
        0.5 / (c * c)
    }

    /// The same profile rescaled as `φ(x/σ)/σ`, which keeps `∫φ`.
    pub fn dilated(&self, sigma: f64) -> Self {
        Self { amplitude: self.amplitude / sigma, width: self.width * sigma, center: self.center * sigma, ..*self }
    }
}

/// Kernel of `(A₋ − ν − iε)⁻¹`, with the value `i/2` on the diagonal.
pub fn free_resolvent_kernel(nu: f64, eps: f64, x: f64, y: f64) -> C64 {
    let s = x - y;
    if s > 0.0 {
        C64::i() * (C64::i() * C64::new(nu, eps) * s).exp()
    } else if s < 0.0 {
        C64::new(0.0, 0.0)
    } else {
        C64::new(0.0, 0.5)
    }
}

/// Kernel of `χ_n(A₋)(A₋ − ν − iε)⁻¹χ_n(A₋)` with `χ_n(k)² = n²/(k² + n²)`,
/// by residues at `k = ν + iε` and `k = ±in`. For `ε = 0` the pole on the
/// axis is taken from above.
pub fn smoothed_resolvent_kernel(nu: f64, eps: f64, n: u32, x: f64, y: f64) -> Result<C64> {
    let w = C64::new(nu, eps);
    check_poles(w, n)?;
    Ok(smoothed_kernel(w, n as f64, x - y))
}

fn check_poles(w: C64, n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::DegeneratePole("the cutoff index must be positive".into()));
    }
    let gap = (w - C64::new(0.0, n as f64)).norm();
    if gap < POLE_GAP {
        return Err(Error::DegeneratePole(format!("ν + iε collides with the pole i·{n} (gap {gap:.1e})")));
    }
    Ok(())
}

fn smoothed_kernel(w: C64, n: f64, s: f64) -> C64 {
    let i = C64::i();
    let pole_n = C64::new(0.0, n);
    let upper = |s: f64| i * n * n * (i * w * s).exp() / (w * w + n * n) + n * libm::exp(-n * s) / (2.0 * (pole_n - w));
    if s >= 0.0 {
        upper(s)
    } else {
        -n * libm::exp(n * s) / (2.0 * (pole_n + w))
    }
}

/// The same kernel by direct quadrature of the momentum integral, folded
/// about `k = ν` so that the pole is integrable. Slow; used as an
/// independent check of [`smoothed_resolvent_kernel`].
pub fn smoothed_resolvent_kernel_quadrature(nu: f64, eps: f64, n: u32, x: f64, y: f64) -> Result<C64> {
    let w = C64::new(nu, eps);
    check_poles(w, n)?;
    let (n, s) = (n as f64, x - y);
    let f = |k: f64| C64::from_polar(n * n / (k * k + n * n) / (2.0 * PI), k * s);
    let mut g = |u: f64| {
        let a = f(nu + u) / C64::new(u, -eps);
        let b = f(nu - u) / C64::new(-u, -eps);
        if eps == 0.0 && u == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            a + b
        }
    };
    let rule = GaussLegendre::new(24);
    // panels short against both the oscillation and the scales ε, n
    let width = (0.5 / s.abs().max(1e-3)).min(0.5 * n).min(1.0);
    let cut = 4.0e4 * n.max(1.0);
    let mut acc = C64::new(0.0, 0.0);
    // geometric panels resolve the near-pole region when ε > 0
    let mut a = 0.0;
    let mut h = if eps > 0.0 { eps.min(width) * 1e-3 } else { width };
    while a < cut {
        let b = (a + h).min(cut);
        acc += rule.integrate_c(a, b, &mut g);
        a = b;
        h = (2.0 * h).min(width.max(a * 1e-3).min(4.0));
    }
    // δ-contribution of the pole on the axis
    if eps == 0.0 {
        acc += C64::i() * 0.5 * n * n / (nu * nu + n * n) * C64::from_polar(1.0, nu * s);
    }
    Ok(acc)
}

/// Nyström discretization of an integral operator on `L²`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelOperator {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kernel_matrix: CMat,
}

impl KernelOperator {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kernel_matrix(&self) -> &CMat {
        &self.kernel_matrix
    }

    pub fn hs_norm(&self) -> f64 {
        self.kernel_matrix.norm_fro()
    }

    /// `ln det(I + M)` (branch of the pivots) and `tr M`.
    pub fn det2_parts(&self) -> Result<(C64, C64)> {
        let m = &self.kernel_matrix;
        let lu = Lu::new(&m.shift_diag(C64::new(1.0, 0.0))).map_err(|_| Error::SingularSample { at: f64::NAN })?;
        Ok((lu.log_det(), m.trace()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub nodes: usize,
    /// Integration interval; the profile support when `None`.
    pub interval: Option<(f64, f64)>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes: DEFAULT_NODES, interval: None }
    }
}

impl QuadratureSpec {
    fn points(&self, profile: &DiracProfile) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.nodes < 2 {
            return Err(Error::InvalidInput("at least two quadrature nodes are needed".into()));
        }
        let (a, b) = self.interval.unwrap_or_else(|| profile.support());
        if !(b > a) {
            return Err(Error::InvalidInput(format!("empty quadrature interval [{a}, {b}]")));
        }
        let rule = GaussLegendre::new(self.nodes);
        Ok(rule.mapped(a, b).unzip())
    }
}

fn max_spacing(nodes: &[f64]) -> f64 {
    nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// `sgn φ |φ|^{1/2} K_n |φ|^{1/2}` with `√w` weighting on both sides.
pub fn assemble_sandwiched(profile: &DiracProfile, nu: f64, eps: f64, n: u32, quad: &QuadratureSpec) -> Result<KernelOperator> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidInput(format!("ε must be nonnegative, got {eps}")));
    }
    check_poles(C64::new(nu, eps), n)?;
    let (nodes, weights) = quad.points(profile)?;
    let spacing = max_spacing(&nodes);
    if nu != 0.0 {
        let required = 2.0 * PI / nu.abs() / NODES_PER_PERIOD;
        if spacing > required {
            return Err(Error::UnderResolved { spacing, required });
        }
    }
    let phi: Vec<f64> = nodes.iter().map(|&x| profile.phi(x)).collect();
    let root: Vec<f64> = phi.iter().zip(&weights).map(|(p, w)| libm::sqrt(p.abs() * w)).collect();
    let w = C64::new(nu, eps);
    let nf = n as f64;
    let m = nodes.len();
    let kernel_matrix = CMat::from_fn(m, m, |i, j| {
        if root[i] == 0.0 || root[j] == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let sign = if phi[i] < 0.0 { -1.0 } else { 1.0 };
        smoothed_kernel(w, nf, nodes[i] - nodes[j]) * (sign * root[i] * root[j])
    });
    Ok(KernelOperator { nodes, weights, kernel_matrix })
}

/// Doubles the node count of `start` until the Hilbert–Schmidt norm of the
/// sandwiched operator changes by less than `tol`. Returns the coarser of the
/// last two specs and the final change.
pub fn converge_quadrature(
    profile: &DiracProfile,
    nu: f64,
    eps: f64,
    n: u32,
    start: QuadratureSpec,
    tol: f64,
    max_nodes: usize,
) -> Result<(QuadratureSpec, f64)> {
    let mut spec = start;
    let mut norm = assemble_sandwiched(profile, nu, eps, n, &spec)?.hs_norm();
    while 2 * spec.nodes <= max_nodes {
        let finer = QuadratureSpec { nodes: 2 * spec.nodes, ..spec };
        let next = assemble_sandwiched(profile, nu, eps, n, &finer)?.hs_norm();
        let change = (next - norm).abs();
        if change < tol {
            return Ok((spec, change));
        }
        spec = finer;
        norm = next;
    }
    Err(Error::NoConvergence("Hilbert–Schmidt norm under quadrature doubling"))
}

/// `(1/2π)·n²/(ν² + n²)·∫φ`.
pub fn additive_term(profile: &DiracProfile, nu: f64, n: u32) -> f64 {
    let n2 = (n as f64) * (n as f64);
    profile.reference() * n2 / (nu * nu + n2)
}

/// `ξ(ν; A₋ + χ_n φ χ_n, A₋)` on `nu_grid` (strictly increasing). The phase
/// of `det(I + M)` is unwound starting from the grid end of largest `|ν|`,
/// where it is taken on the principal branch.
pub fn dirac_ssf(profile: &DiracProfile, nu_grid: &[f64], n: u32, eps: f64, quad: &QuadratureSpec) -> Result<SsfCurve> {
    check_nu_grid(nu_grid)?;
    let samples = nu_grid.iter().map(|&nu| dirac_sample(profile, nu, n, eps, quad)).collect::<Result<Vec<_>>>()?;
    dirac_ssf_from_samples(profile, &samples, n, eps, quad)
}

fn check_nu_grid(nu_grid: &[f64]) -> Result<()> {
    if nu_grid.len() < 2 {
        return Err(Error::InvalidInput("the ν grid needs at least two points".into()));
    }
    if nu_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("the ν grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `det(I + M)` and `tr M` of the sandwiched operator at one `ν`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracSample {
    pub nu: f64,
    pub det: C64,
    pub trace: C64,
}

pub fn dirac_sample(profile: &DiracProfile, nu: f64, n: u32, eps: f64, quad: &QuadratureSpec) -> Result<DiracSample> {
    let op = assemble_sandwiched(profile, nu, eps, n, quad)?;
    let (ld, trace) = op.det2_parts().map_err(|_| Error::SingularSample { at: nu })?;
    let det = ld.exp();
    if det == C64::new(0.0, 0.0) || !det.is_finite() {
        return Err(Error::SingularSample { at: nu });
    }
    Ok(DiracSample { nu, det, trace })
}

/// Serial phase unwinding over samples computed in any order (sorted by
/// `ν` here). Intervals whose phase increment is too large are bisected
/// with fresh evaluations.
pub fn dirac_ssf_from_samples(
    profile: &DiracProfile,
    samples: &[DiracSample],
    n: u32,
    eps: f64,
    quad: &QuadratureSpec,
) -> Result<SsfCurve> {
    let mut samples = samples.to_vec();
    samples.sort_by(|a, b| a.nu.total_cmp(&b.nu));
    let nu_grid: Vec<f64> = samples.iter().map(|s| s.nu).collect();
    check_nu_grid(&nu_grid)?;
    let reverse = nu_grid[nu_grid.len() - 1].abs() >= nu_grid[0].abs();
    let mut order = samples.clone();
    if reverse {
        order.reverse();
    }
    let params: Vec<f64> = order.iter().map(|s| s.nu).collect();
    let eval = |nu: f64| -> Result<C64> {
        match nu_grid.binary_search_by(|x| x.total_cmp(&nu)) {
            Ok(i) => Ok(samples[i].det),
            Err(_) => Ok(dirac_sample(profile, nu, n, eps, quad)?.det),
        }
    };
    let branch = track_log_branch_refined(&params, eval, DEFAULT_MAX_STEP, BISECTION_DEPTH)?;
    let mut values: Vec<f64> =
        branch.values.iter().zip(&order).map(|(l, s)| (l.im - s.trace.im) / PI + additive_term(profile, s.nu, n)).collect();
    if reverse {
        values.reverse();
    }
    SsfCurve::sampled(nu_grid, values, Normalization::Unnormalized)
}

/// Witten index of `D_A` from the spectral shift function at cutoff `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracWitten {
    pub n: u32,
    pub curve: SsfCurve,
    pub report: WittenReport,
    /// `(1/2π)∫φ`.
    pub reference: f64,
    pub error: f64,
}

/// Runs [`dirac_ssf`] at the largest cutoff in `n_values`.
pub fn dirac_witten(
    profile: &DiracProfile,
    n_values: &[u32],
    nu_grid: &[f64],
    eps: f64,
    quad: &QuadratureSpec,
) -> Result<DiracWitten> {
    let n = n_values.iter().copied().max().ok_or_else(|| Error::InvalidInput("no cutoff values given".into()))?;
    let curve = dirac_ssf(profile, nu_grid, n, eps, quad)?;
    let report = witten_from_ssf(&curve)?;
    let reference = profile.reference();
    let error = (report.witten_index - reference).abs();
    Ok(DiracWitten { n, curve, report, reference, error })
}

/// A `(t, x)` discretization of `D_A` on a periodic box `[−L, L)`.
#[derive(Clone, Debug)]
pub struct DiracDirectModel {
    pub model: ModelDiscretization,
    /// Momentum spacing `π/L`, the finest resolvable `ν` scale.
    pub momentum_spacing: f64,
    pub x: Vec<f64>,
}

/// Split-scheme model with `A₋ = −i∂ₓ` (Fourier, `N_x` points) and
/// `A(t) = A₋ + θ(t)φ` on `N_t` interior times of `[−T, T]`.
pub fn dirac_direct_model(
    profile: &DiracProfile,
    half_width: f64,
    n_t: usize,
    box_half_width: f64,
    n_x: usize,
) -> Result<DiracDirectModel> {
    if n_t < 2 || n_x < 2 {
        return Err(Error::InvalidInput("need at least two time and two space points".into()));
    }
    if !(half_width > 0.0 && box_half_width > 0.0) {
        return Err(Error::InvalidInput("half-widths must be positive".into()));
    }
    let dim = n_t * n_x;
    if dim > DENSE_BUDGET {
        return Err(Error::Budget { dim, cap: DENSE_BUDGET });
    }
    let l = box_half_width;
    let x: Vec<f64> = (0..n_x).map(|j| -l + 2.0 * l * j as f64 / n_x as f64).collect();
    let a_minus = HermitianOperator::new(periodic_derivative(n_x, 2.0 * l).scale(C64::new(0.0, -1.0)).hermitian_part())?;
    let phi: Vec<f64> = x.iter().map(|&s| profile.phi(s)).collect();
    let b_plus = HermitianOperator::from_real_diag(&phi)?;
    let t = time_grid(TimeScheme::SplitDirichlet, half_width, n_t);
    let path = OperatorPath::switching(t, a_minus, &b_plus, |s| profile.theta(s), |s| profile.theta_prime(s))?;
    let model = assemble(&path, TimeScheme::SplitDirichlet)?;
    Ok(DiracDirectModel { model, momentum_spacing: PI / l, x })
}
