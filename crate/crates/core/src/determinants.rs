//! Fredholm and modified Fredholm determinants of finite truncations,
//! perturbation determinants and continuous branches of their logarithms.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::linalg::{self, CMat, Lu, C64};
use crate::operator::{HermitianOperator, SpectralDecomposition};
use crate::{Error, Result};

/// Default largest admissible principal phase increment between samples.
pub const DEFAULT_MAX_STEP: f64 = PI / 2.0;

const PAIR_TOL: f64 = 1e-12;

/// `(A₀, A, B = A − A₀)` with `A₀` and `A` self-adjoint.
#[derive(Clone, Debug)]
pub struct OperatorPair {
    base: HermitianOperator,
    perturbed: HermitianOperator,
    perturbation: HermitianOperator,
}

impl OperatorPair {
    pub fn new(base: HermitianOperator, perturbation: HermitianOperator) -> Result<Self> {
        if base.dim() != perturbation.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), found: perturbation.dim() });
        }
        let perturbed = base.add(&perturbation);
        Ok(Self { base, perturbed, perturbation })
    }

    /// From both endpoints; `B` is their difference.
    pub fn from_endpoints(base: HermitianOperator, perturbed: HermitianOperator) -> Result<Self> {
        if base.dim() != perturbed.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), found: perturbed.dim() });
        }
        let perturbation = perturbed.sub(&base);
        Ok(Self { base, perturbed, perturbation })
    }

    /// All three members supplied; checks `A − A₀ − B` entrywise.
    pub fn from_parts(base: HermitianOperator, perturbed: HermitianOperator, perturbation: HermitianOperator) -> Result<Self> {
        let n = base.dim();
        for d in [perturbed.dim(), perturbation.dim()] {
            if d != n {
                return Err(Error::DimensionMismatch { expected: n, found: d });
            }
        }
        let defect = perturbed.matrix().sub(base.matrix()).sub(perturbation.matrix()).norm_max();
        let scale = base.matrix().norm_max().max(perturbed.matrix().norm_max()).max(1.0);
        if defect > PAIR_TOL * scale {
            return Err(Error::InvalidInput(alloc::format!("A − A₀ − B has entries of size {defect:e}")));
        }
        Ok(Self { base, perturbed, perturbation })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn base(&self) -> &HermitianOperator {
        &self.base
    }

    pub fn perturbed(&self) -> &HermitianOperator {
        &self.perturbed
    }

    pub fn perturbation(&self) -> &HermitianOperator {
        &self.perturbation
    }

    pub fn spectra(&self) -> Result<PairSpectra> {
        PairSpectra::new(self)
    }
}

/// Spectral data of a pair, computed once and shared by the determinant
/// evaluators.
#[derive(Clone, Debug)]
pub struct PairSpectra {
    pub base: SpectralDecomposition,
    pub perturbed: SpectralDecomposition,
    /// `B` itself.
    pub perturbation: CMat,
    /// `sgn(B)|B|^{1/2}` and `|B|^{1/2}`.
    pub signed_root: CMat,
    pub abs_root: CMat,
}

impl PairSpectra {
    pub fn new(pair: &OperatorPair) -> Result<Self> {
        let base = pair.base.eig()?;
        let perturbed = pair.perturbed.eig()?;
        let b = pair.perturbation.eig()?;
        // sgn(0) = 0 on the kernel of B
        let signed_root = b.apply(|x| C64::new(if x == 0.0 { 0.0 } else { x.signum() * libm::sqrt(x.abs()) }, 0.0))?;
        let abs_root = b.apply(|x| C64::new(libm::sqrt(x.abs()), 0.0))?;
        Ok(Self { base, perturbed, perturbation: pair.perturbation.matrix().clone(), signed_root, abs_root })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Lowest eigenvalue of either operator.
    pub fn spectral_floor(&self) -> f64 {
        self.base.eigenvalues[0].min(self.perturbed.eigenvalues[0])
    }

    pub fn spectral_ceiling(&self) -> f64 {
        let n = self.dim();
        self.base.eigenvalues[n - 1].max(self.perturbed.eigenvalues[n - 1])
    }

    /// All eigenvalues of both operators, ascending.
    pub fn joint_eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.base.eigenvalues.iter().chain(&self.perturbed.eigenvalues).copied().collect();
        all.sort_by(f64::total_cmp);
        all
    }

    pub fn perturbation_determinant(&self, z: C64) -> Result<C64> {
        let r0 = self.base.resolvent(z)?;
        let m = CMat::identity(self.dim()).add(&self.perturbation.matmul(&r0));
        Ok(det(&m))
    }

    /// `det(A − z)/det(A₀ − z)` from the two spectra; algebraically the same
    /// number as [`Self::perturbation_determinant`].
    pub fn perturbation_determinant_spectral(&self, z: C64) -> Result<C64> {
        self.base.check_resolvent_point(z)?;
        let mut acc = C64::new(1.0, 0.0);
        for (l, m) in self.perturbed.eigenvalues.iter().zip(&self.base.eigenvalues) {
            acc *= (C64::new(*l, 0.0) - z) / (C64::new(*m, 0.0) - z);
        }
        Ok(acc)
    }

    pub fn cayley_modified_determinant(&self, z: C64, z0: C64) -> Result<C64> {
        if z0.im <= 0.0 {
            return Err(Error::InvalidInput("Cayley point z0 needs Im z0 > 0".into()));
        }
        self.perturbed.check_resolvent_point(z)?;
        let n = self.dim();
        let zb = z0.conj();
        let a = self.perturbed.reconstruct();
        let a0 = self.base.reconstruct();
        let m =
            a.shift_diag(-z).matmul(&self.perturbed.resolvent(zb)?).matmul(&a0.shift_diag(-zb)).matmul(&self.base.resolvent(z)?);
        debug_assert_eq!(m.rows(), n);
        Ok(det(&m))
    }

    /// The sandwiched operator `sgn(B)|B|^{1/2}(A₀ − z)⁻¹|B|^{1/2}`.
    pub fn sandwiched(&self, z: C64) -> Result<CMat> {
        let r0 = self.base.resolvent(z)?;
        Ok(self.signed_root.matmul(&r0).matmul(&self.abs_root))
    }

    /// `det₂(I + sgn(B)|B|^{1/2}(A₀ − z)⁻¹|B|^{1/2})` by the eigenvalue product.
    pub fn symmetrized_det2(&self, z: C64) -> Result<C64> {
        det2_one_minus(&self.sandwiched(z)?.scale_real(-1.0))
    }

    /// Same value via `det(I + K)·e^{−tr K}` (LU), used when many
    /// evaluations are needed.
    pub fn symmetrized_det2_lu(&self, z: C64) -> Result<C64> {
        let (d, t) = self.symmetrized_parts(z)?;
        Ok(d * (-t).exp())
    }

    /// `(det(I + K), tr K)` for the sandwiched `K`; `ln det₂ = ln det(I + K) − tr K`
    /// without overflowing the exponential near the spectrum.
    pub fn symmetrized_parts(&self, z: C64) -> Result<(C64, C64)> {
        let k = self.sandwiched(z)?;
        let t = k.trace();
        Ok((det(&CMat::identity(self.dim()).add(&k)), t))
    }

    /// `tr(R_A(z) − R_{A₀}(z))` from the spectra.
    pub fn resolvent_trace_difference(&self, z: C64) -> Result<C64> {
        Ok(self.perturbed.resolvent_trace(z)? - self.base.resolvent_trace(z)?)
    }
}

fn det(m: &CMat) -> C64 {
    match Lu::new(m) {
        Ok(lu) => lu.det(),
        Err(_) => C64::new(0.0, 0.0),
    }
}

/// `det₂(I − A) = ∏(1 − λₖ)e^{λₖ}` over the eigenvalues of `A`.
pub fn det2_one_minus(a: &CMat) -> Result<C64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("det2 argument"));
    }
    let ev = linalg::eigenvalues_general(a).ok_or(Error::NoConvergence("complex QR iteration"))?;
    Ok(ev.iter().fold(C64::new(1.0, 0.0), |acc, &l| acc * (C64::new(1.0, 0.0) - l) * l.exp()))
}

/// `det((I − A)·exp(A))`, the product-free definition.
pub fn det2_one_minus_expm(a: &CMat) -> Result<C64> {
    if !a.is_finite() {
        return Err(Error::NonFinite("det2 argument"));
    }
    let n = a.rows();
    let m = CMat::identity(n).sub(a).matmul(&linalg::expm(a));
    Ok(det(&m))
}

/// `D_{A/A₀}(z) = det(I + B(A₀ − z)⁻¹)`.
pub fn perturbation_determinant(pair: &OperatorPair, z: C64) -> Result<C64> {
    let base = pair.base.eig()?;
    let r0 = base.resolvent(z)?;
    let m = CMat::identity(pair.dim()).add(&pair.perturbation.matrix().matmul(&r0));
    Ok(det(&m))
}

/// `det((A − z)(A − z̄₀)⁻¹(A₀ − z̄₀)(A₀ − z)⁻¹)`.
pub fn cayley_modified_determinant(pair: &OperatorPair, z: C64, z0: C64) -> Result<C64> {
    pair.spectra()?.cayley_modified_determinant(z, z0)
}

pub fn symmetrized_det2(pair: &OperatorPair, z: C64) -> Result<C64> {
    pair.spectra()?.symmetrized_det2(z)
}

/// A logarithm of a determinant along a parameter path, with the imaginary
/// part unwound to be continuous.
#[derive(Clone, Debug, PartialEq)]
pub struct LogDetBranch {
    pub parameters: Vec<f64>,
    pub values: Vec<C64>,
}

impl LogDetBranch {
    pub fn len(&self) -> usize {
        self.parameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameters.is_empty()
    }

    pub fn imag(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    /// Winding accumulated along the path, `(Im last − Im first)/2π`.
    pub fn winding(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(a), Some(b)) => (b.im - a.im) / (2.0 * PI),
            _ => 0.0,
        }
    }
}

fn check_sample(d: C64, at: f64) -> Result<()> {
    if !(d.re.is_finite() && d.im.is_finite()) {
        return Err(Error::NonFinite("determinant sample"));
    }
    if d.re == 0.0 && d.im == 0.0 {
        return Err(Error::SingularSample { at });
    }
    Ok(())
}

/// Principal-argument increment from `prev` to `next`, in `(−π, π]`.
#[inline]
fn phase_increment(prev: C64, next: C64) -> f64 {
    (next / prev).arg()
}

/// Continuous `ln` of `eval` along `params` (strictly increasing or
/// decreasing). Starts on the principal branch. Never refines: an increment
/// larger than `max_step` is reported as [`Error::RefinementNeeded`].
pub fn track_log_branch(params: &[f64], eval: impl FnMut(f64) -> Result<C64>) -> Result<LogDetBranch> {
    track_log_branch_with(params, eval, DEFAULT_MAX_STEP)
}

pub fn track_log_branch_with(params: &[f64], mut eval: impl FnMut(f64) -> Result<C64>, max_step: f64) -> Result<LogDetBranch> {
    let mut values = Vec::with_capacity(params.len());
    let mut prev: Option<C64> = None;
    let mut phase = 0.0;
    for (k, &t) in params.iter().enumerate() {
        let d = eval(t)?;
        check_sample(d, t)?;
        match prev {
            None => phase = d.arg(),
            Some(p) => {
                let step = phase_increment(p, d);
                if step.abs() > max_step {
                    return Err(Error::RefinementNeeded { from: params[k - 1], to: t, jump: step });
                }
                phase += step;
            }
        }
        values.push(C64::new(libm::log(d.norm()), phase));
        prev = Some(d);
    }
    Ok(LogDetBranch { parameters: params.to_vec(), values })
}

/// Like [`track_log_branch_with`], but an oversized increment triggers
/// bisection of that interval (up to `max_depth` levels). Only the requested
/// parameters appear in the output.
pub fn track_log_branch_refined(
    params: &[f64],
    mut eval: impl FnMut(f64) -> Result<C64>,
    max_step: f64,
    max_depth: u32,
) -> Result<LogDetBranch> {
    let mut values = Vec::with_capacity(params.len());
    let mut prev: Option<(f64, C64)> = None;
    let mut phase = 0.0;
    for &t in params {
        let d = eval(t)?;
        check_sample(d, t)?;
        match prev {
            None => phase = d.arg(),
            Some((tp, dp)) => phase += refined_increment(&mut eval, tp, dp, t, d, max_step, max_depth)?,
        }
        values.push(C64::new(libm::log(d.norm()), phase));
        prev = Some((t, d));
    }
    Ok(LogDetBranch { parameters: params.to_vec(), values })
}

fn refined_increment(
    eval: &mut impl FnMut(f64) -> Result<C64>,
    a: f64,
    da: C64,
    b: f64,
    db: C64,
    max_step: f64,
    depth: u32,
) -> Result<f64> {
    let step = phase_increment(da, db);
    if step.abs() <= max_step {
        return Ok(step);
    }
    if depth == 0 {
        return Err(Error::RefinementNeeded { from: a, to: b, jump: step });
    }
    let m = 0.5 * (a + b);
    let dm = eval(m)?;
    check_sample(dm, m)?;
    Ok(refined_increment(eval, a, da, m, dm, max_step, depth - 1)? + refined_increment(eval, m, dm, b, db, max_step, depth - 1)?)
}
