//! The `χ_n` smoothing of a perturbation and the `χ̃_s` path joining
//! `A₊,₁` to `A₊`.

use alloc::vec::Vec;

use crate::determinants::OperatorPair;
use crate::linalg::{CMat, C64};
use crate::operator::{schatten_norm, HermitianOperator, SchattenP, SpectralDecomposition};
use crate::quad::GaussLegendre;
use crate::ssf::{cayley_normalize_with, ssf_counting, weighted_l1_distance, SsfCurve};
use crate::{Error, Result};

/// Default dyadic cutoff levels.
pub const DEFAULT_N_VALUES: [u32; 7] = [1, 2, 4, 8, 16, 32, 64];

/// `χ_n(ν) = n/(ν² + n²)^{1/2}`.
pub fn chi_n(n: f64, nu: f64) -> f64 {
    n / libm::sqrt(nu * nu + n * n)
}

/// `χ̃_s(ν) = [(1 − s)ν² + 1]^{−1/2}`.
pub fn chi_tilde(s: f64, nu: f64) -> f64 {
    1.0 / libm::sqrt((1.0 - s) * nu * nu + 1.0)
}

/// `f(A₋) B₊ f(A₋)`.
fn sandwich(
    dec: &SpectralDecomposition,
    b_plus: &HermitianOperator,
    f: impl Fn(f64) -> f64,
) -> Result<(HermitianOperator, CMat)> {
    let chi = dec.apply_real(&f)?.into_matrix();
    let b = chi.matmul(b_plus.matrix()).matmul(&chi);
    Ok((HermitianOperator::new(b.hermitian_part())?, chi))
}

#[derive(Clone, Debug)]
pub struct CutoffFamily {
    pub a_minus: HermitianOperator,
    pub b_plus: HermitianOperator,
    pub n_values: Vec<u32>,
    /// `(A₋, A₊,ₙ)` for each `n`.
    pub approximants: Vec<OperatorPair>,
    /// `χ_n(A₋)` for each `n`.
    pub chi: Vec<CMat>,
    /// `‖χ_n(A₋)B₊χ_n(A₋)‖₁`.
    pub trace_norms: Vec<f64>,
}

impl CutoffFamily {
    /// The unsmoothed pair `(A₋, A₊)`.
    pub fn limit_pair(&self) -> Result<OperatorPair> {
        OperatorPair::new(self.a_minus.clone(), self.b_plus.clone())
    }
}

fn check_dims(a_minus: &HermitianOperator, b_plus: &HermitianOperator) -> Result<()> {
    if a_minus.dim() != b_plus.dim() {
        return Err(Error::DimensionMismatch { expected: a_minus.dim(), found: b_plus.dim() });
    }
    Ok(())
}

/// Builds `A₊,ₙ = A₋ + χ_n(A₋)B₊χ_n(A₋)` for each `n`.
pub fn build_cutoff_family(a_minus: &HermitianOperator, b_plus: &HermitianOperator, n_values: &[u32]) -> Result<CutoffFamily> {
    check_dims(a_minus, b_plus)?;
    if n_values.is_empty() || n_values.contains(&0) || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("n values must be positive and strictly increasing".into()));
    }
    let dec = a_minus.eig()?;
    let mut approximants = Vec::with_capacity(n_values.len());
    let mut chi = Vec::with_capacity(n_values.len());
    let mut trace_norms = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let nf = n as f64;
        let (b_n, c) = sandwich(&dec, b_plus, |x| chi_n(nf, x))?;
        trace_norms.push(schatten_norm(b_n.matrix(), SchattenP::One)?);
        approximants.push(OperatorPair::new(a_minus.clone(), b_n)?);
        chi.push(c);
    }
    Ok(CutoffFamily {
        a_minus: a_minus.clone(),
        b_plus: b_plus.clone(),
        n_values: n_values.to_vec(),
        approximants,
        chi,
        trace_norms,
    })
}

/// `(A₋, A₋ + χ̃_s(A₋)B₊χ̃_s(A₋))` for each `s ∈ [0, 1]`.
pub fn interpolation_family(
    a_minus: &HermitianOperator,
    b_plus: &HermitianOperator,
    s_values: &[f64],
) -> Result<Vec<OperatorPair>> {
    check_dims(a_minus, b_plus)?;
    if let Some(s) = s_values.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::InvalidInput(alloc::format!("interpolation parameter {s} outside [0, 1]")));
    }
    let dec = a_minus.eig()?;
    s_values
        .iter()
        .map(|&s| {
            let (b, _) = sandwich(&dec, b_plus, |x| chi_tilde(s, x))?;
            OperatorPair::new(a_minus.clone(), b)
        })
        .collect()
}

/// `‖(A_a − z)⁻¹ − (A_b − z)⁻¹‖₁` for the perturbed members. When the bases
/// agree this equals the distance between the two resolvent differences.
pub fn resolvent_trace_distance(pair_a: &OperatorPair, pair_b: &OperatorPair, z: C64) -> Result<f64> {
    if pair_a.dim() != pair_b.dim() {
        return Err(Error::DimensionMismatch { expected: pair_a.dim(), found: pair_b.dim() });
    }
    let ra = pair_a.perturbed().eig()?.resolvent(z)?;
    let rb = pair_b.perturbed().eig()?.resolvent(z)?;
    if pair_a.base() != pair_b.base() {
        pair_a.base().eig()?.check_resolvent_point(z)?;
        pair_b.base().eig()?.check_resolvent_point(z)?;
    }
    schatten_norm(&ra.sub(&rb), SchattenP::One)
}

/// `∫ ξ g dν` over the curve support; pieces are integrated with a 16-point
/// Gauss–Legendre rule, infinite pieces must carry a zero value.
pub fn weighted_moment(curve: &SsfCurve, g: &dyn Fn(f64) -> f64) -> Result<f64> {
    let rule = GaussLegendre::new(16);
    let mut acc = 0.0;
    for p in curve.pieces() {
        if p.alpha == 0.0 && p.beta == 0.0 {
            continue;
        }
        if !(p.a.is_finite() && p.b.is_finite()) {
            return Err(Error::Coverage("moment over an infinite piece with nonzero value".into()));
        }
        acc += rule.integrate(p.a, p.b, |x| p.value(x) * g(x));
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: u32,
    /// `‖R_{A₊,ₙ}(z) − R_{A₊}(z)‖₁`.
    pub distance_b1: f64,
    /// `‖ξₙ − ξ‖` in `L¹((ν² + 1)⁻¹dν)`.
    pub distance_wl1: f64,
    /// `∫ξₙ g − ∫ξ g` for each supplied `g`.
    pub moment_errors: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub z: C64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Last distance at most `1e-2` times the first, the pass rule used for
    /// these tables.
    pub fn passes(&self) -> bool {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => {
                let ok = |x0: f64, x1: f64| x1 <= 1e-2 * x0 || x0 == 0.0;
                ok(a.distance_wl1, b.distance_wl1) && ok(a.distance_b1, b.distance_b1)
            }
            _ => false,
        }
    }
}

/// Distances of each `ξ(·; A₊,ₙ, A₋)` (counting) from `reference`, plus
/// resolvent trace-norm distances at `z` and weighted moments.
pub fn ssf_convergence_report(
    family: &CutoffFamily,
    reference: &SsfCurve,
    z: C64,
    moments: &[&dyn Fn(f64) -> f64],
) -> Result<ConvergenceReport> {
    let limit = family.limit_pair()?;
    let ref_moments: Vec<f64> = moments.iter().map(|g| weighted_moment(reference, *g)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(family.n_values.len());
    for (&n, pair) in family.n_values.iter().zip(&family.approximants) {
        let curve = ssf_counting(pair, reference.grid())?;
        let moment_errors =
            moments.iter().zip(&ref_moments).map(|(g, r)| weighted_moment(&curve, *g).map(|m| m - r)).collect::<Result<_>>()?;
        rows.push(ConvergenceRow {
            n,
            distance_b1: resolvent_trace_distance(pair, &limit, z)?,
            distance_wl1: weighted_l1_distance(&curve, reference)?,
            moment_errors,
        });
    }
    Ok(ConvergenceReport { z, rows })
}

/// Cayley shifts of the counting curves along the `χ̃_s` path, starting at
/// `s = 0` (that is, `A₊,₁`). At finite truncation every shift is zero; the
/// report records how far from zero they come out.
#[derive(Clone, Debug)]
pub struct AnchoredShift {
    pub s_values: Vec<f64>,
    pub kappas: Vec<f64>,
}

impl AnchoredShift {
    pub fn max_abs(&self) -> f64 {
        self.kappas.iter().fold(0.0, |m: f64, k| m.max(k.abs()))
    }
}

pub fn anchored_normalization_shift(
    a_minus: &HermitianOperator,
    b_plus: &HermitianOperator,
    s_values: &[f64],
    z0: C64,
) -> Result<AnchoredShift> {
    let pairs = interpolation_family(a_minus, b_plus, s_values)?;
    let mut kappas = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let spectra = pair.spectra()?;
        let curve = ssf_counting(pair, &[0.0])?;
        kappas.push(cayley_normalize_with(&curve, &spectra, z0)?.kappa);
    }
    Ok(AnchoredShift { s_values: s_values.to_vec(), kappas })
}
