//! The model operator `D_A = d/dt + A(t)` on a truncated time interval.
//!
//! A path is sampled on a time grid and turned into a finite model by one of
//! four schemes:
//!
//! * `SpectralPeriodic` and `FiniteDifferenceDirichlet` assemble a square
//!   `D = D_t ⊗ I + blockdiag(A(t_k))` and set `H₁ = D*D`, `H₂ = DD*`. Being
//!   square, `D` has index 0 and `Δ_r` vanishes identically; these schemes are
//!   used for the structural identities.
//! * `Staggered` evaluates `d/dt + A` at interval midpoints and imposes the
//!   spectral boundary conditions `f(t₀) ∈ Ran P_{<0}(A(t₀))`,
//!   `f(t_N) ∈ Ran P_{>0}(A(t_N))`. The resulting rectangular `D` has index
//!   equal to the spectral flow of the path.
//! * `SplitDirichlet` builds `H_j = −∂²_h ⊗ I + A(t)² ∓ B′(t)` directly. It is
//!   block tridiagonal, so traces and eigenvalue counts scale linearly in the
//!   number of time nodes, and its `Δ_r` approximates the continuum curve.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::cutoff::chi_n;
use crate::linalg::{BlockTridiag, CMat, Lu, C64};
use crate::operator::{hermitian_norm, schatten_norm, HermitianOperator, SchattenP, NEAR_SINGULAR_TOL};
use crate::{Error, Result};

/// Largest model dimension handled with dense eigensolves.
pub const DENSE_BUDGET: usize = 6000;

/// Default tolerance for `‖B(t₀)‖`.
pub const DEFAULT_LEFT_DECAY: f64 = 1e-6;

/// Largest allowed `|d log Δ_r / d log |λ||` inside a plateau.
pub const PLATEAU_SLOPE: f64 = 0.05;

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2).zip(f.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1])).sum()
}

fn norm_inf(h: &HermitianOperator) -> Result<f64> {
    hermitian_norm(h.matrix())
}

/// Samples of `A(t) = A₋ + B(t)` and `B′(t)` on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorPath {
    t: Vec<f64>,
    a_minus: HermitianOperator,
    b: Vec<HermitianOperator>,
    b_prime: Vec<HermitianOperator>,
}

impl OperatorPath {
    pub fn new(
        t: Vec<f64>,
        a_minus: HermitianOperator,
        b: Vec<HermitianOperator>,
        b_prime: Vec<HermitianOperator>,
    ) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::InvalidInput("a path needs at least two time samples".into()));
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("time grid"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
        }
        for v in [&b, &b_prime] {
            if v.len() != t.len() {
                return Err(Error::DimensionMismatch { expected: t.len(), found: v.len() });
            }
        }
        let m = a_minus.dim();
        if let Some(bad) = b.iter().chain(&b_prime).find(|x| x.dim() != m) {
            return Err(Error::DimensionMismatch { expected: m, found: bad.dim() });
        }
        Ok(Self { t, a_minus, b, b_prime })
    }

    pub fn from_fn(
        t: Vec<f64>,
        a_minus: HermitianOperator,
        mut b: impl FnMut(f64) -> CMat,
        mut b_prime: impl FnMut(f64) -> CMat,
    ) -> Result<Self> {
        let bs = t.iter().map(|&x| HermitianOperator::new(b(x))).collect::<Result<Vec<_>>>()?;
        let bps = t.iter().map(|&x| HermitianOperator::new(b_prime(x))).collect::<Result<Vec<_>>>()?;
        Self::new(t, a_minus, bs, bps)
    }

    /// `B(t) = θ(t) B₊`.
    pub fn switching(
        t: Vec<f64>,
        a_minus: HermitianOperator,
        b_plus: &HermitianOperator,
        theta: impl Fn(f64) -> f64,
        theta_prime: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let bp = b_plus.matrix();
        Self::from_fn(t, a_minus, |x| bp.scale_real(theta(x)), |x| bp.scale_real(theta_prime(x)))
    }

    /// One-dimensional path `A(t) = a(t)` with `A₋ = a_minus`.
    pub fn scalar(t: Vec<f64>, a_minus: f64, a: impl Fn(f64) -> f64, a_prime: impl Fn(f64) -> f64) -> Result<Self> {
        let one = |v: f64| CMat::from_real_diag(&[v]);
        Self::from_fn(t, HermitianOperator::from_real_diag(&[a_minus])?, |x| one(a(x) - a_minus), |x| one(a_prime(x)))
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t
    }

    pub fn a_minus(&self) -> &HermitianOperator {
        &self.a_minus
    }

    pub fn b_samples(&self) -> &[HermitianOperator] {
        &self.b
    }

    pub fn b_prime_samples(&self) -> &[HermitianOperator] {
        &self.b_prime
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn spatial_dim(&self) -> usize {
        self.a_minus.dim()
    }

    /// `B₊`, the last sample.
    pub fn b_plus(&self) -> &HermitianOperator {
        self.b.last().expect("non-empty path")
    }

    /// `A(t_k) = A₋ + B(t_k)`.
    pub fn a_at(&self, k: usize) -> HermitianOperator {
        self.a_minus.add(&self.b[k])
    }

    pub fn a_plus(&self) -> HermitianOperator {
        self.a_at(self.len() - 1)
    }

    /// `‖B(t₀)‖`.
    pub fn left_decay(&self) -> Result<f64> {
        norm_inf(&self.b[0])
    }

    /// `‖∫B′ − (B(t_end) − B(t₀))‖_F / max(1, ‖B(t_end) − B(t₀)‖_F)` with the
    /// trapezoidal rule on the path grid.
    pub fn derivative_consistency(&self) -> f64 {
        let m = self.spatial_dim();
        let mut integral = CMat::zeros(m, m);
        for k in 0..self.len() - 1 {
            let h = self.t[k + 1] - self.t[k];
            integral.add_assign(&self.b_prime[k].matrix().add(self.b_prime[k + 1].matrix()).scale_real(0.5 * h));
        }
        let jump = self.b_plus().matrix().sub(self.b[0].matrix());
        integral.sub(&jump).norm_fro() / jump.norm_fro().max(1.0)
    }

    /// Checks left-end decay and derivative consistency.
    pub fn validate(&self, delta_left: f64, consistency_tol: f64) -> Result<()> {
        let left = self.left_decay()?;
        if left > delta_left {
            return Err(Error::InvalidInput(format!("‖B(t₀)‖ = {left:e} exceeds the left-decay tolerance {delta_left:e}")));
        }
        let c = self.derivative_consistency();
        if c > consistency_tol {
            return Err(Error::InvalidInput(format!("∫B′ misses B(t_end) − B(t₀) by {c:e} (tolerance {consistency_tol:e})")));
        }
        Ok(())
    }

    /// Conjugates `A₋`, every `B(t_k)` and every `B′(t_k)` by the unitary `u`.
    pub fn conjugated(&self, u: &CMat) -> Self {
        Self {
            t: self.t.clone(),
            a_minus: self.a_minus.conjugate_by(u),
            b: self.b.iter().map(|x| x.conjugate_by(u)).collect(),
            b_prime: self.b_prime.iter().map(|x| x.conjugate_by(u)).collect(),
        }
    }

    /// `B_n(t) = χ B(t) χ` and likewise for `B′`.
    pub fn sandwiched(&self, chi: &CMat) -> Result<Self> {
        let s = |x: &HermitianOperator| HermitianOperator::new(chi.matmul(x.matrix()).matmul(chi).hermitian_part());
        Ok(Self {
            t: self.t.clone(),
            a_minus: self.a_minus.clone(),
            b: self.b.iter().map(s).collect::<Result<_>>()?,
            b_prime: self.b_prime.iter().map(s).collect::<Result<_>>()?,
        })
    }

    /// The path regularized by `χ_n(A₋)`.
    pub fn with_cutoff(&self, n: f64) -> Result<Self> {
        let chi = self.a_minus.eig()?.apply_real(|nu| chi_n(n, nu))?;
        self.sandwiched(chi.matrix())
    }

    fn sup_b_prime(&self) -> Result<f64> {
        self.b_prime.iter().map(norm_inf).try_fold(0.0_f64, |m, x| Ok(m.max(x?)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TimeScheme {
    SpectralPeriodic,
    FiniteDifferenceDirichlet,
    Staggered,
    SplitDirichlet,
}

impl TimeScheme {
    pub const ALL: [TimeScheme; 4] =
        [TimeScheme::SpectralPeriodic, TimeScheme::FiniteDifferenceDirichlet, TimeScheme::Staggered, TimeScheme::SplitDirichlet];

    pub fn as_str(self) -> &'static str {
        match self {
            TimeScheme::SpectralPeriodic => "spectral-periodic",
            TimeScheme::FiniteDifferenceDirichlet => "finite-difference-dirichlet",
            TimeScheme::Staggered => "staggered",
            TimeScheme::SplitDirichlet => "split-dirichlet",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.as_str() == s)
    }

    /// Whether `H₁ = D*D` and `H₂ = DD*` for an explicit `D`.
    pub fn is_factorized(self) -> bool {
        !matches!(self, TimeScheme::SplitDirichlet)
    }
}

/// Time nodes for `n` unknowns per channel on `[−T, T]`: `n` periodic
/// points, `n` interior Dirichlet points, or `n + 1` staggered nodes.
pub fn time_grid(scheme: TimeScheme, half_width: f64, n: usize) -> Vec<f64> {
    let t = half_width;
    match scheme {
        TimeScheme::SpectralPeriodic => (0..n).map(|k| -t + 2.0 * t * k as f64 / n as f64).collect(),
        TimeScheme::FiniteDifferenceDirichlet | TimeScheme::SplitDirichlet => {
            (1..=n).map(|k| -t + 2.0 * t * k as f64 / (n + 1) as f64).collect()
        }
        TimeScheme::Staggered => (0..=n).map(|k| -t + 2.0 * t * k as f64 / n as f64).collect(),
    }
}

/// Fourier differentiation matrix on `n` equispaced points of a period.
/// Frequencies are `2πk/period` for `|k| < n/2`; for even `n` the Nyquist
/// mode is mapped to 0.
pub fn periodic_derivative(n: usize, period: f64) -> CMat {
    let scale = PI / period;
    CMat::from_fn(n, n, |j, k| {
        if j == k {
            return C64::new(0.0, 0.0);
        }
        let d = j as f64 - k as f64;
        let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
        let x = d * PI / n as f64;
        let v = if n.is_multiple_of(2) { libm::cos(x) / libm::sin(x) } else { 1.0 / libm::sin(x) };
        C64::new(scale * sign * v, 0.0)
    })
}

/// Central difference `(f_{k+1} − f_{k−1})/2h` with zero Dirichlet padding.
pub fn central_difference(n: usize, h: f64) -> CMat {
    CMat::from_fn(n, n, |j, k| {
        if k == j + 1 {
            C64::new(0.5 / h, 0.0)
        } else if j == k + 1 {
            C64::new(-0.5 / h, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// A model operator in dense or block-tridiagonal storage.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelOperator {
    Dense(HermitianOperator),
    Banded(BlockTridiag),
}

impl ModelOperator {
    pub fn dim(&self) -> usize {
        match self {
            ModelOperator::Dense(h) => h.dim(),
            ModelOperator::Banded(b) => b.dim(),
        }
    }

    /// Dense copy; `Budget` above [`DENSE_BUDGET`].
    pub fn to_dense(&self) -> Result<HermitianOperator> {
        match self {
            ModelOperator::Dense(h) => Ok(h.clone()),
            ModelOperator::Banded(b) => {
                check_budget(b.dim())?;
                HermitianOperator::new(b.to_dense())
            }
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        check_budget(self.dim())?;
        self.to_dense()?.eigenvalues()
    }

    /// `#{eigenvalues < x}`.
    pub fn count_below(&self, x: f64) -> Result<usize> {
        match self {
            ModelOperator::Dense(h) => Ok(h.eigenvalues()?.iter().filter(|&&e| e < x).count()),
            ModelOperator::Banded(b) => b
                .count_below(x)
                .or_else(|| b.count_below(x + 1e-13 * x.abs().max(1.0)))
                .ok_or(Error::NoConvergence("block inertia count")),
        }
    }

    /// The `k`-th smallest eigenvalue.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        match self {
            ModelOperator::Dense(h) => h.eigenvalues()?.get(k).copied().ok_or(Error::InvalidInput("eigenvalue index".into())),
            ModelOperator::Banded(b) => {
                let (lo, hi) = b.gershgorin();
                b.eigenvalue(k, 1e-13 * (hi - lo).max(1.0)).ok_or(Error::NoConvergence("inertia bisection"))
            }
        }
    }

    fn spectral_scale(&self) -> f64 {
        match self {
            ModelOperator::Dense(h) => h.matrix().norm_max() * libm::sqrt(h.dim() as f64),
            ModelOperator::Banded(b) => {
                let (lo, hi) = b.gershgorin();
                lo.abs().max(hi.abs())
            }
        }
    }

    /// Block diagonal of a banded operator as a dense matrix, or the dense
    /// matrix itself.
    fn dense_matrix(&self) -> Result<CMat> {
        Ok(self.to_dense()?.into_matrix())
    }
}

fn check_budget(dim: usize) -> Result<()> {
    if dim > DENSE_BUDGET {
        Err(Error::Budget { dim, cap: DENSE_BUDGET })
    } else {
        Ok(())
    }
}

/// Evaluates `tr (H − z)⁻¹` repeatedly: dense operators are diagonalized
/// once, banded ones are swept per call.
enum TraceEvaluator<'a> {
    Eigen(Vec<f64>),
    Banded(&'a BlockTridiag),
}

impl<'a> TraceEvaluator<'a> {
    fn new(op: &'a ModelOperator) -> Result<Self> {
        match op {
            ModelOperator::Dense(h) => Ok(TraceEvaluator::Eigen(h.eigenvalues()?)),
            ModelOperator::Banded(b) => Ok(TraceEvaluator::Banded(b)),
        }
    }

    fn trace(&self, z: C64) -> Result<C64> {
        match self {
            TraceEvaluator::Eigen(ev) => {
                let scale = ev.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
                let threshold = NEAR_SINGULAR_TOL * scale;
                let mut acc = C64::new(0.0, 0.0);
                for &e in ev {
                    let d = C64::new(e, 0.0) - z;
                    if d.norm() <= threshold {
                        return Err(Error::NearSingular { gap: d.norm(), threshold });
                    }
                    acc += d.inv();
                }
                Ok(acc)
            }
            TraceEvaluator::Banded(b) => {
                b.trace_resolvent(z).ok_or(Error::NearSingular { gap: 0.0, threshold: NEAR_SINGULAR_TOL })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelMeta {
    pub scheme: TimeScheme,
    pub half_width: f64,
    /// Number of time unknowns per channel.
    pub n_t: usize,
    pub spatial_dim: usize,
    pub spacing: f64,
    /// `min |spec(A±)|`, or `None` when an asymptote is (numerically) not
    /// invertible.
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct AssembleOptions {
    /// Turn the resolution warning into an error.
    pub strict: bool,
}

/// A discretized model: `H₀`, `H₁`, `H₂` and, where it exists, the operator
/// `B′_h` with `H₂ − H₁ = 2B′_h`.
#[derive(Clone, Debug)]
pub struct ModelDiscretization {
    meta: ModelMeta,
    d: Option<CMat>,
    h0: ModelOperator,
    h1: ModelOperator,
    h2: ModelOperator,
    b_prime: Option<ModelOperator>,
    warnings: Vec<String>,
}

impl ModelDiscretization {
    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn scheme(&self) -> TimeScheme {
        self.meta.scheme
    }

    pub fn d(&self) -> Option<&CMat> {
        self.d.as_ref()
    }

    pub fn h0(&self) -> &ModelOperator {
        &self.h0
    }

    pub fn h1(&self) -> &ModelOperator {
        &self.h1
    }

    pub fn h2(&self) -> &ModelOperator {
        &self.h2
    }

    pub fn b_prime(&self) -> Option<&ModelOperator> {
        self.b_prime.as_ref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

fn uniform_spacing(t: &[f64]) -> Result<f64> {
    let h = t[1] - t[0];
    if t.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::InvalidInput("this scheme needs a uniform time grid".into()));
    }
    Ok(h)
}

fn min_abs_eig(h: &HermitianOperator) -> Result<f64> {
    Ok(h.eigenvalues()?.iter().fold(f64::INFINITY, |m, x| m.min(x.abs())))
}

pub fn assemble(path: &OperatorPath, scheme: TimeScheme) -> Result<ModelDiscretization> {
    assemble_with(path, scheme, &AssembleOptions::default())
}

pub fn assemble_with(path: &OperatorPath, scheme: TimeScheme, options: &AssembleOptions) -> Result<ModelDiscretization> {
    let t = path.t_grid();
    let m = path.spatial_dim();
    let n = t.len();
    let h = uniform_spacing(t)?;
    let mut warnings = Vec::new();

    let sup_bp = path.sup_b_prime()?;
    if sup_bp * h > 1.0 {
        if options.strict {
            return Err(Error::UnderResolved { spacing: h, required: 1.0 / sup_bp });
        }
        warnings.push(format!("time step {h:.4} is coarse for sup‖B′‖ = {sup_bp:.4}"));
    }

    let (half_width, n_t) = match scheme {
        TimeScheme::SpectralPeriodic => (0.5 * h * n as f64, n),
        TimeScheme::FiniteDifferenceDirichlet | TimeScheme::SplitDirichlet => (0.5 * h * (n + 1) as f64, n),
        TimeScheme::Staggered => (0.5 * (t[n - 1] - t[0]), n - 1),
    };
    let kappa_raw = min_abs_eig(path.a_minus())?.min(min_abs_eig(&path.a_plus())?);
    let a_scale = norm_inf(path.a_minus())?.max(norm_inf(&path.a_plus())?).max(1.0);
    let kappa = (kappa_raw > 1e-8 * a_scale).then_some(kappa_raw);
    let meta = ModelMeta { scheme, half_width, n_t, spatial_dim: m, spacing: h, kappa };

    let (d, h0, h1, h2, b_prime) = match scheme {
        TimeScheme::SpectralPeriodic | TimeScheme::FiniteDifferenceDirichlet => {
            check_budget(n * m)?;
            if scheme == TimeScheme::SpectralPeriodic {
                let mismatch = path.b_plus().matrix().sub(path.b_samples()[0].matrix()).norm_fro();
                if mismatch > 1e-8 * path.b_plus().matrix().norm_fro().max(1.0) {
                    warnings.push(format!("path is not periodic: ‖B(t_end) − B(t₀)‖_F = {mismatch:.3e}"));
                }
            }
            let dt = match scheme {
                TimeScheme::SpectralPeriodic => periodic_derivative(n, 2.0 * half_width),
                _ => central_difference(n, h),
            };
            square_model(path, &dt)?
        }
        TimeScheme::Staggered => {
            check_budget(n * m)?;
            staggered_model(path)?
        }
        TimeScheme::SplitDirichlet => {
            check_budget(m)?;
            split_model(path, h)?
        }
    };
    Ok(ModelDiscretization { meta, d, h0, h1, h2, b_prime, warnings })
}

type Parts = (Option<CMat>, ModelOperator, ModelOperator, ModelOperator, Option<ModelOperator>);

fn block_diag(blocks: &[CMat]) -> CMat {
    let m = blocks[0].rows();
    let mut out = CMat::zeros(m * blocks.len(), m * blocks.len());
    for (k, b) in blocks.iter().enumerate() {
        out.set_block(k * m, k * m, b);
    }
    out
}

fn square_model(path: &OperatorPath, dt: &CMat) -> Result<Parts> {
    let m = path.spatial_dim();
    let id = CMat::identity(m);
    let dtk = dt.kron(&id);
    let a_blocks: Vec<CMat> = (0..path.len()).map(|k| path.a_at(k).into_matrix()).collect();
    let b_blocks: Vec<CMat> = path.b_samples().iter().map(|b| b.matrix().clone()).collect();
    let d = dtk.add(&block_diag(&a_blocks));
    let da = d.adjoint();
    let h1 = HermitianOperator::new(da.matmul(&d).hermitian_part())?;
    let h2 = HermitianOperator::new(d.matmul(&da).hermitian_part())?;
    let a2 = path.a_minus().matrix().matmul(path.a_minus().matrix());
    let h0 = dtk.matmul(&dtk).scale_real(-1.0).add(&CMat::identity(dt.rows()).kron(&a2));
    let h0 = HermitianOperator::new(h0.hermitian_part())?;
    let bd = block_diag(&b_blocks);
    let comm = dtk.matmul(&bd).sub(&bd.matmul(&dtk));
    let b_prime = HermitianOperator::new(comm.hermitian_part())?;
    Ok((
        Some(d),
        ModelOperator::Dense(h0),
        ModelOperator::Dense(h1),
        ModelOperator::Dense(h2),
        Some(ModelOperator::Dense(b_prime)),
    ))
}

/// Columns spanning the eigenvectors of `a` whose eigenvalues satisfy `keep`.
fn spectral_subspace(a: &HermitianOperator, keep: impl Fn(f64) -> bool) -> Result<CMat> {
    let dec = a.eig()?;
    let idx: Vec<usize> = (0..dec.dim()).filter(|&i| keep(dec.eigenvalues[i])).collect();
    Ok(dec.eigenvectors.select_cols(&idx))
}

fn staggered_d(path: &OperatorPath, with_b: bool, first: &CMat, last: &CMat) -> CMat {
    let t = path.t_grid();
    let m = path.spatial_dim();
    let intervals = t.len() - 1;
    let id = CMat::identity(m);
    let (c0, cn) = (first.cols(), last.cols());
    let cols = c0 + (intervals - 1) * m + cn;
    let offset = |node: usize| if node == 0 { 0 } else { c0 + (node - 1) * m };
    let mut d = CMat::zeros(intervals * m, cols);
    for k in 0..intervals {
        let h = t[k + 1] - t[k];
        let mid = if with_b {
            path.a_minus().matrix().add(&path.b_samples()[k].matrix().add(path.b_samples()[k + 1].matrix()).scale_real(0.5))
        } else {
            path.a_minus().matrix().clone()
        };
        let half = mid.scale_real(0.5);
        let left = half.sub(&id.scale_real(1.0 / h));
        let right = half.add(&id.scale_real(1.0 / h));
        for (node, coef) in [(k, left), (k + 1, right)] {
            let block = if node == 0 {
                coef.matmul(first)
            } else if node == intervals {
                coef.matmul(last)
            } else {
                coef
            };
            if block.cols() > 0 {
                d.set_block(k * m, offset(node), &block);
            }
        }
    }
    d
}

fn staggered_model(path: &OperatorPath) -> Result<Parts> {
    let first = spectral_subspace(&path.a_at(0), |e| e < 0.0)?;
    let last = spectral_subspace(&path.a_plus(), |e| e > 0.0)?;
    let d = staggered_d(path, true, &first, &last);
    let d0 = staggered_d(path, false, &first, &last);
    if d.cols() == 0 {
        return Err(Error::InvalidInput("staggered domain is empty".into()));
    }
    let h1 = HermitianOperator::new(d.adjoint().matmul(&d).hermitian_part())?;
    let h2 = HermitianOperator::new(d.matmul(&d.adjoint()).hermitian_part())?;
    let h0 = HermitianOperator::new(d0.adjoint().matmul(&d0).hermitian_part())?;
    Ok((Some(d), ModelOperator::Dense(h0), ModelOperator::Dense(h1), ModelOperator::Dense(h2), None))
}

fn split_model(path: &OperatorPath, h: f64) -> Result<Parts> {
    let m = path.spatial_dim();
    let n = path.len();
    let id = CMat::identity(m);
    let kinetic = id.scale_real(2.0 / (h * h));
    let lower: Vec<CMat> = (1..n).map(|_| id.scale_real(-1.0 / (h * h))).collect();
    let a2m = path.a_minus().matrix().matmul(path.a_minus().matrix());
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    let mut bp = Vec::with_capacity(n);
    for k in 0..n {
        let a = path.a_at(k).into_matrix();
        let base = kinetic.add(&a.matmul(&a)).hermitian_part();
        let b = path.b_prime_samples()[k].matrix();
        d1.push(base.sub(b));
        d2.push(base.add(b));
        bp.push(b.clone());
    }
    let d0 = (0..n).map(|_| kinetic.add(&a2m).hermitian_part()).collect();
    Ok((
        None,
        ModelOperator::Banded(BlockTridiag::new(d0, lower.clone())),
        ModelOperator::Banded(BlockTridiag::new(d1, lower.clone())),
        ModelOperator::Banded(BlockTridiag::new(d2, lower)),
        Some(ModelOperator::Banded(BlockTridiag::block_diagonal(bp))),
    ))
}

/// `max_j ‖H_j − [H₀ + BA₋ + A₋B + B² + (−1)ʲB′]‖_F / ‖H_j‖_F` with the
/// sampled `B′`. Square and split schemes only.
pub fn decomposition_residual(model: &ModelDiscretization, path: &OperatorPath) -> Result<f64> {
    let m = path.spatial_dim();
    if model.meta.spatial_dim != m || model.meta.n_t != path.len() {
        return Err(Error::InvalidInput("model was not assembled from this path".into()));
    }
    let am = path.a_minus().matrix();
    let sandwich: Vec<CMat> = path
        .b_samples()
        .iter()
        .map(|b| {
            let b = b.matrix();
            b.matmul(am).add(&am.matmul(b)).add(&b.matmul(b))
        })
        .collect();
    let bp: Vec<CMat> = path.b_prime_samples().iter().map(|b| b.matrix().clone()).collect();
    let mut worst: f64 = 0.0;
    for (sign, hj) in [(-1.0, &model.h1), (1.0, &model.h2)] {
        let (num, den) = match (hj, &model.h0) {
            (ModelOperator::Dense(hj), ModelOperator::Dense(h0)) => {
                if model.meta.scheme == TimeScheme::Staggered {
                    return Err(Error::InvalidInput("the staggered scheme has no square decomposition".into()));
                }
                let mut expect = h0.matrix().clone();
                for k in 0..path.len() {
                    expect.add_block(k * m, k * m, &sandwich[k].add(&bp[k].scale_real(sign)));
                }
                (hj.matrix().sub(&expect).norm_fro(), hj.matrix().norm_fro())
            }
            (ModelOperator::Banded(hj), ModelOperator::Banded(h0)) => {
                let mut num2 = 0.0;
                let mut den2 = 0.0;
                for k in 0..path.len() {
                    let expect = h0.diag_blocks()[k].add(&sandwich[k]).add(&bp[k].scale_real(sign));
                    num2 += sq(hj.diag_blocks()[k].sub(&expect).norm_fro());
                    den2 += sq(hj.diag_blocks()[k].norm_fro());
                }
                for (a, b) in hj.lower_blocks().iter().zip(h0.lower_blocks()) {
                    num2 += 2.0 * sq(a.sub(b).norm_fro());
                    den2 += 2.0 * sq(a.norm_fro());
                }
                (libm::sqrt(num2), libm::sqrt(den2))
            }
            _ => unreachable!("H₀ and H_j share storage"),
        };
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    Ok(worst)
}

/// `tr((H₂−z)⁻¹ − (H₁−z)⁻¹)` with the factorized cross-check
/// `−tr((H₁−z)⁻¹ 2B′_h (H₂−z)⁻¹)` where available.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceCheck {
    pub value: C64,
    pub factorized: Option<C64>,
    pub relative_residual: Option<f64>,
}

/// Dimension up to which the factorized cross-check is formed densely for
/// banded models.
const FACTORIZED_CAP: usize = 1500;

fn checked_resolvent(h: &HermitianOperator, z: C64) -> Result<CMat> {
    let scale = h.matrix().norm_max().max(1.0);
    let threshold = NEAR_SINGULAR_TOL * scale;
    let lu = Lu::new(&h.matrix().shift_diag(-z)).map_err(|_| Error::NearSingular { gap: 0.0, threshold })?;
    let r = lu.inverse();
    let rn = r.norm_max();
    if !rn.is_finite() || rn * threshold > 1.0 {
        return Err(Error::NearSingular { gap: 1.0 / rn, threshold });
    }
    Ok(r)
}

pub fn resolvent_diff_trace(model: &ModelDiscretization, z: C64) -> Result<TraceCheck> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("spectral parameter"));
    }
    let dense_ok = model.h1.dim() <= FACTORIZED_CAP || matches!(model.h1, ModelOperator::Dense(_));
    if let (true, Some(bp)) = (dense_ok, &model.b_prime) {
        let h1 = model.h1.to_dense()?;
        let h2 = model.h2.to_dense()?;
        let r1 = checked_resolvent(&h1, z)?;
        let r2 = checked_resolvent(&h2, z)?;
        let value = r2.trace() - r1.trace();
        let bp = bp.dense_matrix()?;
        let factorized = -(r1.matmul(&bp).matmul(&r2).trace() * 2.0);
        // relative to the individual traces, since the difference can vanish
        let scale = value.norm().max(factorized.norm()).max(r1.trace().norm()).max(f64::MIN_POSITIVE);
        let rel = (value - factorized).norm() / scale;
        return Ok(TraceCheck { value, factorized: Some(factorized), relative_residual: Some(rel) });
    }
    let t1 = TraceEvaluator::new(&model.h1)?.trace(z)?;
    let t2 = TraceEvaluator::new(&model.h2)?.trace(z)?;
    Ok(TraceCheck { value: t2 - t1, factorized: None, relative_residual: None })
}

/// Contiguous run of `λ` samples on which `Δ_r` is flat.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plateau {
    /// Sample closest to 0.
    pub lambda_near: f64,
    /// Sample farthest from 0.
    pub lambda_far: f64,
    pub value: f64,
    /// `max − min` of `Δ_r` over the run.
    pub spread: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaRCurve {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    /// `Λ_lo`: samples with `|λ|` below this are excluded from the plateau.
    pub infrared_floor: f64,
    pub plateau: Option<Plateau>,
}

/// `Λ_lo = 10·e^{−2κT}` for invertible asymptotes, else `10·(π/2T)²`.
pub fn infrared_floor(meta: &ModelMeta) -> f64 {
    let t = meta.half_width;
    let scale = match meta.kappa {
        Some(k) => libm::exp(-2.0 * k * t),
        None => sq(PI / (2.0 * t)),
    };
    10.0 * scale
}

/// `Δ_r(λ) = (−λ) tr((H₁−λ)⁻¹ − (H₂−λ)⁻¹)` on a negative grid.
pub fn delta_r_curve(model: &ModelDiscretization, lambda_grid: &[f64]) -> Result<DeltaRCurve> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidInput("empty λ grid".into()));
    }
    if lambda_grid.iter().any(|&l| !(l < 0.0) || !l.is_finite()) {
        return Err(Error::InvalidInput("Δ_r needs λ < 0".into()));
    }
    if lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("λ grid must be strictly increasing".into()));
    }
    let e1 = TraceEvaluator::new(&model.h1)?;
    let e2 = TraceEvaluator::new(&model.h2)?;
    let values = lambda_grid
        .iter()
        .map(|&l| {
            let z = C64::new(l, 0.0);
            Ok(-l * (e1.trace(z)? - e2.trace(z)?).re)
        })
        .collect::<Result<Vec<_>>>()?;
    let floor = infrared_floor(&model.meta);
    let plateau = find_plateau(lambda_grid, &values, floor);
    Ok(DeltaRCurve { lambdas: lambda_grid.to_vec(), values, infrared_floor: floor, plateau })
}

/// Longest (in `log|λ|`) run of consecutive intervals with
/// `|d log Δ_r / d log|λ|| < PLATEAU_SLOPE`, restricted to `|λ| ≥ floor`.
fn find_plateau(lambdas: &[f64], values: &[f64], floor: f64) -> Option<Plateau> {
    let flat = |i: usize| {
        let (a, b) = (values[i], values[i + 1]);
        if a * b <= 0.0 || lambdas[i].abs() < floor || lambdas[i + 1].abs() < floor {
            return false;
        }
        let slope = libm::log(b / a) / libm::log(lambdas[i + 1] / lambdas[i]);
        slope.abs() < PLATEAU_SLOPE
    };
    let mut best: Option<(usize, usize, f64)> = None;
    let mut i = 0;
    while i + 1 < lambdas.len() {
        if !flat(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < lambdas.len() && flat(i) {
            i += 1;
        }
        let extent = libm::log(lambdas[start] / lambdas[i]);
        // later runs are closer to 0, so ties go to them
        if best.is_none_or(|(_, _, e)| extent >= e) {
            best = Some((start, i, extent));
        }
    }
    let (s, e, _) = best?;
    let run = &values[s..=e];
    let mean = run.iter().sum::<f64>() / run.len() as f64;
    let (lo, hi) = run.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    Some(Plateau { lambda_near: lambdas[e], lambda_far: lambdas[s], value: mean, spread: hi - lo, points: run.len() })
}

/// Log-spaced negative grid from `−hi` to `−lo`, ascending.
pub fn log_lambda_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = libm::log10(hi / lo);
    let n = (libm::ceil(decades * per_decade as f64) as usize).max(1);
    (0..=n).map(|k| -hi * libm::pow(lo / hi, k as f64 / n as f64)).collect()
}

/// `#{eig(H₁) < threshold} − #{eig(H₂) < threshold}`.
///
/// The band `(threshold/√10, threshold·√10)` must be free of eigenvalues of
/// both operators.
pub fn near_kernel_index(model: &ModelDiscretization, threshold: f64) -> Result<i64> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::InvalidInput("threshold must be positive".into()));
    }
    let root = libm::sqrt(10.0);
    let mut counts = [0usize; 2];
    for (slot, op) in [&model.h1, &model.h2].into_iter().enumerate() {
        let below = op.count_below(threshold / root)?;
        let above = op.count_below(threshold * root)?;
        if below != above {
            let c = op.count_below(threshold)?;
            let lower = if c > 0 { op.eigenvalue(c - 1)? } else { f64::NEG_INFINITY };
            let upper = if c < op.dim() { op.eigenvalue(c)? } else { f64::INFINITY };
            return Err(Error::AmbiguousCluster { below: lower, above: upper });
        }
        counts[slot] = op.count_below(threshold)?;
    }
    Ok(counts[0] as i64 - counts[1] as i64)
}

/// Counting `ξ(·; H₂, H₁)` with `H₁` as the base.
pub fn ssf_h_pair(model: &ModelDiscretization, grid: &[f64]) -> Result<crate::ssf::SsfCurve> {
    let e1 = model.h1.eigenvalues()?;
    let e2 = model.h2.eigenvalues()?;
    Ok(crate::ssf::ssf_counting_from_spectra(&e1, &e2, grid)?.with_normalization(crate::ssf::Normalization::ZeroBelowSpectrum))
}

/// Largest relative mismatch between the nonzero spectra of `H₁` and `H₂`.
///
/// Eigenvalues below `1e-10·‖H‖` count as zero; the operator with more of
/// them sheds the surplus before the comparison. For the split scheme the
/// operators are not a factorization and the number is only informative.
pub fn spectrum_duality_defect(model: &ModelDiscretization) -> Result<f64> {
    let mut e1 = model.h1.eigenvalues()?;
    let mut e2 = model.h2.eigenvalues()?;
    let scale = e1.iter().chain(&e2).fold(1.0_f64, |m, x| m.max(x.abs()));
    let cut = 1e-10 * scale;
    e1.retain(|&x| x.abs() > cut);
    e2.retain(|&x| x.abs() > cut);
    let (long, short) = if e1.len() >= e2.len() { (&e1, &e2) } else { (&e2, &e1) };
    let surplus = long.len() - short.len();
    let mut worst: f64 = 0.0;
    // the unmatched eigenvalues are the smallest ones of the longer list
    for (a, b) in long[surplus..].iter().zip(short) {
        worst = worst.max((a - b).abs() / scale);
    }
    for a in &long[..surplus] {
        worst = worst.max(a.abs() / scale);
    }
    Ok(worst)
}

/// Smallest eigenvalue of `H₁` and `H₂` relative to their norm.
pub fn positivity_defect(model: &ModelDiscretization) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for op in [&model.h1, &model.h2] {
        let lowest = op.eigenvalue(0)?;
        worst = worst.max(-lowest / op.spectral_scale().max(1.0));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisThresholds {
    pub delta_left: f64,
    pub max_l1_b_prime: f64,
    pub max_hilbert_schmidt: f64,
    /// Upper bound for the relative-bound constant `a′`.
    pub relative_bound: f64,
    pub n_values: Vec<u32>,
}

impl Default for HypothesisThresholds {
    fn default() -> Self {
        Self {
            delta_left: DEFAULT_LEFT_DECAY,
            max_l1_b_prime: 1e6,
            max_hilbert_schmidt: 1e6,
            relative_bound: 1.0,
            n_values: crate::cutoff::DEFAULT_N_VALUES.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub left_decay: f64,
    /// Trapezoidal `∫‖B′(t)‖ dt`.
    pub l1_b_prime: f64,
    pub sup_b_prime: f64,
    /// `‖|B₊|^{1/2}(A₋ − z₀)⁻¹‖₂`.
    pub hs_b_plus: f64,
    /// `‖|B′|^{1/2}(H₀ − z₀)⁻¹‖₂` on the time grid; `None` for the staggered
    /// scheme, whose `H₀` lives on the constrained domain.
    pub hs_b_prime_h0: Option<f64>,
    /// `‖A₋B (H₀ − iy)⁻¹‖` at `y = 10‖H₀‖`.
    pub relative_bound: Option<f64>,
    /// `(n, ∫‖B_n′(t)‖₁ dt)`.
    pub cutoff_trace_norms: Vec<(u32, f64)>,
    pub pass_left_decay: bool,
    pub pass_l1: bool,
    pub pass_hs_b_plus: bool,
    pub pass_hs_b_prime: bool,
    pub pass_relative_bound: bool,
    pub pass_trace_class: bool,
}

impl HypothesisReport {
    pub fn passes(&self) -> bool {
        self.pass_left_decay
            && self.pass_l1
            && self.pass_hs_b_plus
            && self.pass_hs_b_prime
            && self.pass_relative_bound
            && self.pass_trace_class
    }
}

fn abs_sqrt(h: &HermitianOperator) -> Result<CMat> {
    Ok(h.eig()?.apply_real(|x| libm::sqrt(x.abs()))?.into_matrix())
}

pub fn verify_hypotheses(
    path: &OperatorPath,
    model: &ModelDiscretization,
    z0: C64,
    thresholds: &HypothesisThresholds,
) -> Result<HypothesisReport> {
    let t = path.t_grid();
    let left_decay = path.left_decay()?;
    let bp_norms = path.b_prime_samples().iter().map(norm_inf).collect::<Result<Vec<_>>>()?;
    let l1_b_prime = trapezoid(t, &bp_norms);
    let sup_b_prime = bp_norms.iter().fold(0.0_f64, |m, &x| m.max(x));

    let r_minus = checked_resolvent(path.a_minus(), z0)?;
    let hs_b_plus = abs_sqrt(path.b_plus())?.matmul(&r_minus).norm_fro();

    let m = path.spatial_dim();
    let grid_space = model.h0.dim() == m * path.len();
    let (hs_b_prime_h0, relative_bound) = if grid_space && model.h0.dim() <= DENSE_BUDGET {
        let h0 = model.h0.to_dense()?;
        let roots: Vec<CMat> = path.b_prime_samples().iter().map(abs_sqrt).collect::<Result<_>>()?;
        let r0 = checked_resolvent(&h0, z0)?;
        let hs = block_diag(&roots).matmul(&r0).norm_fro();
        let y = 10.0 * norm_inf(&h0)?.max(1.0);
        let ri = checked_resolvent(&h0, C64::new(0.0, y))?;
        let ab: Vec<CMat> = path.b_samples().iter().map(|b| path.a_minus().matrix().matmul(b.matrix())).collect();
        let a_prime = schatten_norm(&block_diag(&ab).matmul(&ri), SchattenP::Inf)?;
        (Some(hs), Some(a_prime))
    } else {
        (None, None)
    };

    let mut cutoff_trace_norms = Vec::with_capacity(thresholds.n_values.len());
    let dec = path.a_minus().eig()?;
    for &n in &thresholds.n_values {
        let chi = dec.apply_real(|nu| chi_n(n as f64, nu))?.into_matrix();
        let norms = path
            .b_prime_samples()
            .iter()
            .map(|b| schatten_norm(&chi.matmul(b.matrix()).matmul(&chi), SchattenP::One))
            .collect::<Result<Vec<_>>>()?;
        cutoff_trace_norms.push((n, trapezoid(t, &norms)));
    }

    let ok = |x: f64, cap: f64| x.is_finite() && x <= cap;
    Ok(HypothesisReport {
        left_decay,
        l1_b_prime,
        sup_b_prime,
        hs_b_plus,
        hs_b_prime_h0,
        relative_bound,
        pass_left_decay: left_decay <= thresholds.delta_left,
        pass_l1: ok(l1_b_prime, thresholds.max_l1_b_prime),
        pass_hs_b_plus: ok(hs_b_plus, thresholds.max_hilbert_schmidt),
        pass_hs_b_prime: hs_b_prime_h0.is_none_or(|x| ok(x, thresholds.max_hilbert_schmidt)),
        pass_relative_bound: relative_bound.is_none_or(|x| x.is_finite() && x < thresholds.relative_bound),
        pass_trace_class: cutoff_trace_norms.iter().all(|&(_, x)| x.is_finite()),
        cutoff_trace_norms,
    })
}

/// Distances between the `χ_n`-regularized model and the unregularized one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConvergenceRow {
    pub n: u32,
    /// `‖[(H₂,ₙ−z)⁻¹ − (H₁,ₙ−z)⁻¹] − [(H₂−z)⁻¹ − (H₁−z)⁻¹]‖₁`.
    pub trace_distance: f64,
    /// `max_j ‖B′ₙ(H_{j,n}−z)⁻¹ − B′(H_j−z)⁻¹‖₂`.
    pub hs_distance: f64,
}

/// Convergence of the regularized models as `n` grows, for schemes that
/// expose `B′_h` (split and square).
pub fn model_cutoff_convergence(
    path: &OperatorPath,
    scheme: TimeScheme,
    n_values: &[u32],
    z: C64,
) -> Result<Vec<ModelConvergenceRow>> {
    struct Resolved {
        r1: CMat,
        r2: CMat,
        bp: CMat,
    }
    let resolve = |p: &OperatorPath| -> Result<Resolved> {
        let model = assemble(p, scheme)?;
        let bp = model.b_prime.as_ref().ok_or(Error::InvalidInput("scheme has no B′ operator".into()))?.dense_matrix()?;
        Ok(Resolved { r1: checked_resolvent(&model.h1.to_dense()?, z)?, r2: checked_resolvent(&model.h2.to_dense()?, z)?, bp })
    };
    let limit = resolve(path)?;
    let limit_diff = limit.r2.sub(&limit.r1);
    let limit_b = [limit.bp.matmul(&limit.r1), limit.bp.matmul(&limit.r2)];
    n_values
        .iter()
        .map(|&n| {
            let reg = resolve(&path.with_cutoff(n as f64)?)?;
            let trace_distance = schatten_norm(&reg.r2.sub(&reg.r1).sub(&limit_diff), SchattenP::One)?;
            let hs1 = reg.bp.matmul(&reg.r1).sub(&limit_b[0]).norm_fro();
            let hs2 = reg.bp.matmul(&reg.r2).sub(&limit_b[1]).norm_fro();
            Ok(ModelConvergenceRow { n, trace_distance, hs_distance: hs1.max(hs2) })
        })
        .collect()
}

/// `tr (H_j − z)⁻¹` for `j = 1, 2`.
pub fn resolvent_traces(model: &ModelDiscretization, z: C64) -> Result<(C64, C64)> {
    Ok((TraceEvaluator::new(&model.h1)?.trace(z)?, TraceEvaluator::new(&model.h2)?.trace(z)?))
}

/// Evaluates `tr((H₂−z)⁻¹ − (H₁−z)⁻¹)` at many points, diagonalizing dense
/// operators once.
pub fn resolvent_diff_traces(model: &ModelDiscretization, zs: &[C64]) -> Result<Vec<C64>> {
    let e1 = TraceEvaluator::new(&model.h1)?;
    let e2 = TraceEvaluator::new(&model.h2)?;
    zs.iter().map(|&z| Ok(e2.trace(z)? - e1.trace(z)?)).collect()
}

fn sq(x: f64) -> f64 {
    x * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{scalar_path, switching_path_16};
    use crate::linalg::{c, eigenvalues_general};
    use alloc::vec;

    fn tanh(x: f64) -> f64 {
        libm::tanh(x)
    }

    fn sech2(x: f64) -> f64 {
        let c = libm::cosh(x);
        1.0 / (c * c)
    }

    #[test]
    fn periodic_kernel_of_zero_path_is_constants() {
        for n in [9usize, 10] {
            let t = time_grid(TimeScheme::SpectralPeriodic, 3.0, n);
            let path = OperatorPath::scalar(t, 0.0, |_| 0.0, |_| 0.0).unwrap();
            let model = assemble(&path, TimeScheme::SpectralPeriodic).unwrap();
            let d = model.d().unwrap();
            let ones = vec![c(1.0, 0.0); n];
            assert!(d.matvec(&ones).iter().all(|z| z.norm() < 1e-12));
            let zero = model.h1().eigenvalues().unwrap().iter().filter(|x| x.abs() < 1e-10).count();
            // the Nyquist mode of an even grid is a second zero mode
            assert_eq!(zero, if n % 2 == 1 { 1 } else { 2 });
        }
    }

    #[test]
    fn constant_periodic_spectrum_is_shifted_frequencies() {
        let (n, half, a) = (11usize, 2.5, 0.7);
        let t = time_grid(TimeScheme::SpectralPeriodic, half, n);
        let path = OperatorPath::scalar(t, a, |_| a, |_| 0.0).unwrap();
        let model = assemble(&path, TimeScheme::SpectralPeriodic).unwrap();
        let mut ev = eigenvalues_general(model.d().unwrap()).unwrap();
        ev.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        for (k, z) in ev.iter().enumerate() {
            let omega = PI / half * (k as f64 - 5.0);
            assert!((z - c(a, omega)).norm() < 1e-9, "{z} vs {omega}");
        }
    }

    #[test]
    fn adjoint_of_d_matches_swapped_sign_assembly() {
        let path = scalar_path(TimeScheme::FiniteDifferenceDirichlet, 5.0, 40, 1.0);
        let model = assemble(&path, TimeScheme::FiniteDifferenceDirichlet).unwrap();
        let d = model.d().unwrap();
        let h = model.meta().spacing;
        let dt = central_difference(40, h);
        let a: Vec<f64> = path.t_grid().iter().map(|&x| tanh(x)).collect();
        let dstar = dt.scale_real(-1.0).add(&CMat::from_real_diag(&a));
        assert!(dstar.sub(&d.adjoint()).norm_max() < 1e-12);
    }

    #[test]
    fn zero_perturbation_gives_zero_everything() {
        let t = time_grid(TimeScheme::FiniteDifferenceDirichlet, 4.0, 30);
        let path = OperatorPath::scalar(t.clone(), 1.0, |_| 1.0, |_| 0.0).unwrap();
        let model = assemble(&path, TimeScheme::FiniteDifferenceDirichlet).unwrap();
        assert_eq!(decomposition_residual(&model, &path).unwrap(), 0.0);
        assert!(resolvent_diff_trace(&model, c(-1.0, 0.0)).unwrap().value.norm() < 1e-12);
        let d = delta_r_curve(&model, &[-1.0, -0.1, -0.01]).unwrap();
        assert!(d.values.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(near_kernel_index(&model, 1e-3).unwrap(), 0);
        let xi = ssf_h_pair(&model, &[-1.0, 0.5, 2.0, 10.0]).unwrap();
        assert!(xi.values().iter().all(|v| *v == 0.0));
        let rep = verify_hypotheses(&path, &model, c(0.0, 1.0), &HypothesisThresholds::default()).unwrap();
        assert_eq!(rep.l1_b_prime, 0.0);
        assert_eq!(rep.hs_b_plus, 0.0);
        assert_eq!(rep.hs_b_prime_h0, Some(0.0));
        assert_eq!(rep.relative_bound, Some(0.0));
        assert!(rep.cutoff_trace_norms.iter().all(|&(_, x)| x == 0.0));
        assert!(rep.passes());
    }

    #[test]
    fn time_independent_b_has_no_residual() {
        let t = time_grid(TimeScheme::FiniteDifferenceDirichlet, 4.0, 30);
        let path = OperatorPath::scalar(t, -1.0, |_| 0.5, |_| 0.0).unwrap();
        let model = assemble(&path, TimeScheme::FiniteDifferenceDirichlet).unwrap();
        assert!(decomposition_residual(&model, &path).unwrap() < 1e-12);
    }

    #[test]
    fn decomposition_residual_is_second_order() {
        let r = |n| {
            let path = scalar_path(TimeScheme::FiniteDifferenceDirichlet, 12.0, n, 1.0);
            let model = assemble(&path, TimeScheme::FiniteDifferenceDirichlet).unwrap();
            decomposition_residual(&model, &path).unwrap()
        };
        let ratio = r(200) / r(400);
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
        let path = scalar_path(TimeScheme::SplitDirichlet, 12.0, 200, 1.0);
        let model = assemble(&path, TimeScheme::SplitDirichlet).unwrap();
        assert!(decomposition_residual(&model, &path).unwrap() < 1e-14);
    }

    #[test]
    fn resolvent_trace_matches_eigenvalue_sums() {
        for scheme in [TimeScheme::FiniteDifferenceDirichlet, TimeScheme::SplitDirichlet] {
            let path = scalar_path(scheme, 12.0, 200, 1.0);
            let model = assemble(&path, scheme).unwrap();
            let z = c(-1.0, 0.0);
            let check = resolvent_diff_trace(&model, z).unwrap();
            let e1 = model.h1().eigenvalues().unwrap();
            let e2 = model.h2().eigenvalues().unwrap();
            let oracle: f64 = e2.iter().map(|e| 1.0 / (e + 1.0)).sum::<f64>() - e1.iter().map(|e| 1.0 / (e + 1.0)).sum::<f64>();
            assert!((check.value.re - oracle).abs() < 1e-10 * oracle.abs().max(1.0));
            assert!(check.value.im.abs() < 1e-12);
            assert!(check.relative_residual.unwrap() < 1e-8, "{scheme:?} {check:?}");
            let zc = c(0.3, 0.8);
            let a = resolvent_diff_trace(&model, zc).unwrap().value;
            let b = resolvent_diff_trace(&model, zc.conj()).unwrap().value;
            assert!((a - b.conj()).norm() < 1e-10 * a.norm().max(1.0));
            let banded = resolvent_diff_traces(&model, &[zc]).unwrap()[0];
            assert!((banded - a).norm() < 1e-9 * a.norm().max(1.0));
        }
    }

    #[test]
    fn tanh_index_and_reversal() {
        for (sign, expect) in [(1.0, 1i64), (-1.0, -1)] {
            for scheme in [TimeScheme::Staggered, TimeScheme::SplitDirichlet] {
                let path = scalar_path(scheme, 12.0, 400, sign);
                let model = assemble(&path, scheme).unwrap();
                assert_eq!(near_kernel_index(&model, 1e-3).unwrap(), expect, "{scheme:?}");
            }
        }
        let t = time_grid(TimeScheme::FiniteDifferenceDirichlet, 6.0, 60);
        let path = OperatorPath::scalar(t, 1.0, |_| 1.0, |_| 0.0).unwrap();
        let model = assemble(&path, TimeScheme::FiniteDifferenceDirichlet).unwrap();
        assert_eq!(near_kernel_index(&model, 1e-3).unwrap(), 0);
    }

    #[test]
    fn ambiguous_threshold_is_reported() {
        let path = scalar_path(TimeScheme::Staggered, 12.0, 200, 1.0);
        let model = assemble(&path, TimeScheme::Staggered).unwrap();
        let ev = model.h1().eigenvalues().unwrap();
        let err = near_kernel_index(&model, ev[1]).unwrap_err();
        assert!(matches!(err, Error::AmbiguousCluster { .. }), "{err:?}");
    }

    #[test]
    fn staggered_duality_and_positivity() {
        let path = scalar_path(TimeScheme::Staggered, 12.0, 200, 1.0);
        let model = assemble(&path, TimeScheme::Staggered).unwrap();
        assert!(spectrum_duality_defect(&model).unwrap() < 1e-8);
        assert!(positivity_defect(&model).unwrap() < 1e-10);
        let fd =
            assemble(&scalar_path(TimeScheme::FiniteDifferenceDirichlet, 6.0, 80, 1.0), TimeScheme::FiniteDifferenceDirichlet)
                .unwrap();
        assert!(spectrum_duality_defect(&fd).unwrap() < 1e-8);
        assert!(positivity_defect(&fd).unwrap() < 1e-10);
    }

    #[test]
    fn ssf_of_h_pair_counts_the_kernel() {
        let path = scalar_path(TimeScheme::Staggered, 12.0, 200, 1.0);
        let model = assemble(&path, TimeScheme::Staggered).unwrap();
        let grid = vec![-1.0, -0.1, -1e-6, 1e-6, 1e-4, 0.5];
        let xi = ssf_h_pair(&model, &grid).unwrap();
        assert_eq!(&xi.values()[..3], &[0.0, 0.0, 0.0]);
        assert_eq!(xi.values()[4], near_kernel_index(&model, 1e-4).unwrap() as f64);
    }

    #[test]
    fn delta_r_plateaus() {
        let grid = log_lambda_grid(1e-4, 1.0, 8);
        let path = scalar_path(TimeScheme::SplitDirichlet, 12.0, 400, 1.0);
        let model = assemble(&path, TimeScheme::SplitDirichlet).unwrap();
        let curve = delta_r_curve(&model, &grid).unwrap();
        let p = curve.plateau.unwrap();
        assert!((p.value - 1.0).abs() < 5e-2, "{p:?}");

        let t = time_grid(TimeScheme::SplitDirichlet, 40.0, 1600);
        let half = OperatorPath::scalar(t, -1.0, |x| 0.5 * (tanh(x) - 1.0), |x| 0.5 * sech2(x)).unwrap();
        let model = assemble(&half, TimeScheme::SplitDirichlet).unwrap();
        let curve = delta_r_curve(&model, &grid).unwrap();
        let p = curve.plateau.unwrap();
        assert!((p.value - 0.5).abs() < 5e-2, "{p:?}");
        assert!(curve.infrared_floor > 1e-2);
    }

    #[test]
    fn delta_r_decays_at_large_negative_lambda() {
        let path = scalar_path(TimeScheme::FiniteDifferenceDirichlet, 8.0, 120, 1.0);
        let model = assemble(&path, TimeScheme::FiniteDifferenceDirichlet).unwrap();
        let bp = model.b_prime().unwrap().to_dense().unwrap();
        let bound = 2.0 * schatten_norm(bp.matrix(), SchattenP::One).unwrap();
        let grid = [-1e4, -1e3, -1e2];
        let curve = delta_r_curve(&model, &grid).unwrap();
        for (l, v) in grid.iter().zip(&curve.values) {
            assert!(v.abs() <= bound / l.abs() + 1e-12);
        }
    }

    #[test]
    fn hypotheses_for_scalar_switching() {
        let path = scalar_path(TimeScheme::FiniteDifferenceDirichlet, 12.0, 200, 1.0);
        let model = assemble(&path, TimeScheme::FiniteDifferenceDirichlet).unwrap();
        let rep = verify_hypotheses(&path, &model, c(0.0, 1.0), &HypothesisThresholds::default()).unwrap();
        assert!((rep.l1_b_prime - 2.0).abs() < 1e-3, "{}", rep.l1_b_prime);
        let a = rep.relative_bound.unwrap();
        assert!(a < 1.0);
        // scalar case: a′ = sup|B| · ‖A₋(H₀ − iy)⁻¹‖ = sup|B| / |H₀ − iy| at the bottom of H₀
        assert!(a > 0.0);
        assert!(rep.passes(), "{rep:?}");
    }

    #[test]
    fn index_is_unitarily_invariant() {
        let path = switching_path_16(TimeScheme::Staggered, 6.0, 24);
        let model = assemble(&path, TimeScheme::Staggered).unwrap();
        let idx = near_kernel_index(&model, 1e-6).unwrap();
        let m = path.spatial_dim();
        let gen = CMat::from_fn(m, m, |i, j| c(((i * 7 + j * 3) % 5) as f64 * 0.1, ((i + 2 * j) % 3) as f64 * 0.1 - 0.1));
        let herm = gen.hermitian_part();
        let u = crate::linalg::expm(&herm.scale(c(0.0, 1.0)));
        let rotated = assemble(&path.conjugated(&u), TimeScheme::Staggered).unwrap();
        assert_eq!(near_kernel_index(&rotated, 1e-6).unwrap(), idx);
    }

    #[test]
    fn cutoff_convergence_improves_with_n() {
        let path = switching_path_16(TimeScheme::SplitDirichlet, 8.0, 16);
        let rows = model_cutoff_convergence(&path, TimeScheme::SplitDirichlet, &[1, 8, 64], c(-1.0, 1.0)).unwrap();
        assert!(rows[0].trace_distance > 10.0 * rows[2].trace_distance, "{rows:?}");
        assert!(rows[0].hs_distance > 10.0 * rows[2].hs_distance, "{rows:?}");
    }

    #[test]
    fn strict_resolution_check() {
        let t = time_grid(TimeScheme::FiniteDifferenceDirichlet, 6.0, 7);
        let path = OperatorPath::scalar(t, -1.0, |x| libm::tanh(4.0 * x), |x| 4.0 * sech2(4.0 * x)).unwrap();
        assert!(!assemble(&path, TimeScheme::FiniteDifferenceDirichlet).unwrap().warnings().is_empty());
        let err = assemble_with(&path, TimeScheme::FiniteDifferenceDirichlet, &AssembleOptions { strict: true }).unwrap_err();
        assert!(matches!(err, Error::UnderResolved { .. }));
    }

    #[test]
    fn path_validation() {
        let path = scalar_path(TimeScheme::SplitDirichlet, 12.0, 400, 1.0);
        assert!(path.validate(1e-6, 1e-3).is_ok());
        let short = scalar_path(TimeScheme::SplitDirichlet, 3.0, 100, 1.0);
        assert!(short.validate(1e-6, 1e-3).is_err());
        let bad = OperatorPath::scalar(vec![0.0, 0.0], 0.0, |_| 0.0, |_| 0.0);
        assert!(bad.is_err());
    }
}
