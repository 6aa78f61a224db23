//! Dense self-adjoint operators, their spectral decompositions, functional
//! calculus, resolvents, traces and Schatten norms.

use alloc::vec::Vec;

use crate::linalg::{self, CMat, C64};
use crate::{Error, Result};

/// Relative hermiticity tolerance accepted by [`HermitianOperator::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Resolvent singularity threshold relative to `max(1, spectral radius)`.
pub const NEAR_SINGULAR_TOL: f64 = 1e-12;

/// A finite-dimensional self-adjoint operator.
///
/// The stored matrix is the exact Hermitian part of the validated input.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    mat: CMat,
}

impl HermitianOperator {
    pub fn new(mat: CMat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch { expected: mat.rows(), found: mat.cols() });
        }
        if mat.rows() == 0 {
            return Err(Error::InvalidInput("operator dimension must be positive".into()));
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite("operator entries"));
        }
        let defect = mat.hermiticity_defect();
        let allowed = HERMITICITY_TOL * mat.norm_max();
        if defect > allowed {
            return Err(Error::NotHermitian { defect, allowed });
        }
        Ok(Self { mat: mat.hermitian_part() })
    }

    pub fn from_real_diag(d: &[f64]) -> Result<Self> {
        Self::new(CMat::from_real_diag(d))
    }

    pub fn zeros(n: usize) -> Self {
        Self { mat: CMat::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { mat: self.mat.add(&other.mat) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { mat: self.mat.sub(&other.mat) }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mat: self.mat.scale_real(s) }
    }

    /// `U* H U` for unitary `U`.
    pub fn conjugate_by(&self, u: &CMat) -> Self {
        Self { mat: u.adjoint().matmul(&self.mat).matmul(u).hermitian_part() }
    }

    pub fn eig(&self) -> Result<SpectralDecomposition> {
        eig(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigvals(&self.mat).ok_or(Error::NoConvergence("Hermitian QL iteration"))
    }
}

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// (as columns).
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// `V diag(f(λ)) V*`.
    pub fn apply(&self, mut f: impl FnMut(f64) -> C64) -> Result<CMat> {
        let mut fv = Vec::with_capacity(self.dim());
        for &l in &self.eigenvalues {
            let v = f(l);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::FunctionSingular { eigenvalue: l });
            }
            fv.push(v);
        }
        Ok(self.apply_values(&fv))
    }

    /// `V diag(values) V*` for precomputed spectral values.
    pub fn apply_values(&self, values: &[C64]) -> CMat {
        let v = &self.eigenvectors;
        let n = self.dim();
        let vt = v.adjoint();
        let scaled = CMat::from_fn(n, n, |i, j| v[(i, j)] * values[j]);
        scaled.matmul(&vt)
    }

    pub fn apply_real(&self, mut f: impl FnMut(f64) -> f64) -> Result<HermitianOperator> {
        let m = self.apply(|x| C64::new(f(x), 0.0))?;
        Ok(HermitianOperator { mat: m.hermitian_part() })
    }

    pub fn distance_to_spectrum(&self, z: C64) -> f64 {
        self.eigenvalues.iter().map(|&l| (C64::new(l, 0.0) - z).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn check_resolvent_point(&self, z: C64) -> Result<()> {
        let gap = self.distance_to_spectrum(z);
        let threshold = NEAR_SINGULAR_TOL * self.spectral_radius().max(1.0);
        if gap <= threshold {
            return Err(Error::NearSingular { gap, threshold });
        }
        Ok(())
    }

    pub fn resolvent(&self, z: C64) -> Result<CMat> {
        self.check_resolvent_point(z)?;
        let vals: Vec<C64> = self.eigenvalues.iter().map(|&l| C64::new(1.0, 0.0) / (C64::new(l, 0.0) - z)).collect();
        Ok(self.apply_values(&vals))
    }

    /// `tr (H − z)⁻¹` straight from the eigenvalues.
    pub fn resolvent_trace(&self, z: C64) -> Result<C64> {
        self.check_resolvent_point(z)?;
        Ok(self.eigenvalues.iter().fold(C64::new(0.0, 0.0), |acc, &l| acc + C64::new(1.0, 0.0) / (C64::new(l, 0.0) - z)))
    }

    pub fn reconstruct(&self) -> CMat {
        let vals: Vec<C64> = self.eigenvalues.iter().map(|&l| C64::new(l, 0.0)).collect();
        self.apply_values(&vals)
    }
}

/// Spectral decomposition of a Hermitian operator.
pub fn eig(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    let (eigenvalues, eigenvectors) = linalg::hermitian_eig(h.matrix()).ok_or(Error::NoConvergence("Hermitian QL iteration"))?;
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// `f(H)` by the spectral theorem.
pub fn apply_function(h: &HermitianOperator, f: impl FnMut(f64) -> C64) -> Result<CMat> {
    eig(h)?.apply(f)
}

/// `(H − z)⁻¹`.
pub fn resolvent(h: &HermitianOperator, z: C64) -> Result<CMat> {
    eig(h)?.resolvent(z)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchattenP {
    One,
    Two,
    Inf,
}

/// Singular values, descending, from the eigenvalues of `M*M` (or `MM*`,
/// whichever is smaller).
pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix"));
    }
    let g = if m.rows() >= m.cols() { m.adjoint().matmul(m) } else { m.matmul(&m.adjoint()) };
    let mut ev = linalg::hermitian_eigvals(&g).ok_or(Error::NoConvergence("Hermitian QL iteration"))?;
    ev.reverse();
    Ok(ev.into_iter().map(|x| libm::sqrt(x.max(0.0))).collect())
}

pub fn schatten_norm(m: &CMat, p: SchattenP) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix"));
    }
    match p {
        SchattenP::Two => Ok(m.norm_fro()),
        SchattenP::One => Ok(singular_values(m)?.iter().sum()),
        SchattenP::Inf => Ok(singular_values(m)?.first().copied().unwrap_or(0.0)),
    }
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

/// Operator norm of a Hermitian matrix (largest |eigenvalue|).
pub fn hermitian_norm(h: &CMat) -> Result<f64> {
    let ev = linalg::hermitian_eigvals(h).ok_or(Error::NoConvergence("Hermitian QL iteration"))?;
    Ok(ev.iter().fold(0.0, |m: f64, x| m.max(x.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianOperator {
        let m = CMat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        HermitianOperator::new(m.hermitian_part()).unwrap()
    }

    #[test]
    fn eig_of_diagonal() {
        let h = HermitianOperator::from_real_diag(&[2.0, 1.0]).unwrap();
        let d = h.eig().unwrap();
        assert_eq!(d.eigenvalues, alloc::vec![1.0, 2.0]);
        // permuted identity up to phases
        assert!((d.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((d.eigenvectors[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eig_of_identity() {
        let h = HermitianOperator::new(CMat::identity(3)).unwrap();
        assert_eq!(h.eig().unwrap().eigenvalues, alloc::vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn eig_reconstruction_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(&mut rng, 5);
        let d = h.eig().unwrap();
        let r = d.reconstruct().sub(h.matrix()).norm_fro();
        assert!(r < 1e-12, "{r}");
        let u = d.eigenvectors.adjoint().matmul(&d.eigenvectors).sub(&CMat::identity(5)).norm_fro();
        assert!(u < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_and_non_finite() {
        let mut m = CMat::identity(2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
        let mut m = CMat::identity(2);
        m[(1, 1)] = c(f64::NAN, 0.0);
        assert_eq!(HermitianOperator::new(m), Err(Error::NonFinite("operator entries")));
    }

    fn chi(n: f64) -> impl Fn(f64) -> C64 {
        move |x| c(n / (x * x + n * n).sqrt(), 0.0)
    }

    #[test]
    fn apply_function_examples() {
        let h0 = HermitianOperator::from_real_diag(&[0.0]).unwrap();
        assert!((apply_function(&h0, chi(1.0)).unwrap()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let h2 = HermitianOperator::from_real_diag(&[2.0]).unwrap();
        let v = apply_function(&h2, chi(2.0)).unwrap()[(0, 0)];
        assert!((v.re - 0.707_106_781_186_547_5).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_hermitian(&mut rng, 6);
        let one = apply_function(&h, |_| c(1.0, 0.0)).unwrap();
        assert!(one.sub(&CMat::identity(6)).norm_fro() < 1e-12);
    }

    #[test]
    fn apply_function_flags_singularity() {
        let h = HermitianOperator::from_real_diag(&[0.0, 1.0]).unwrap();
        let err = apply_function(&h, |x| c(1.0 / x, 0.0)).unwrap_err();
        assert_eq!(err, Error::FunctionSingular { eigenvalue: 0.0 });
    }

    #[test]
    fn resolvent_examples() {
        let h = HermitianOperator::from_real_diag(&[0.0]).unwrap();
        let r = resolvent(&h, c(0.0, 1.0)).unwrap();
        assert!((r[(0, 0)] - c(0.0, 1.0)).norm() < 1e-15);
        let z = HermitianOperator::zeros(4);
        let r = resolvent(&z, c(-1.0, 0.0)).unwrap();
        assert!(r.sub(&CMat::identity(4)).norm_fro() < 1e-15);
        assert!(matches!(resolvent(&h, c(1e-14, 0.0)), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn resolvent_residual_and_norm_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [3, 8] {
            let h = random_hermitian(&mut rng, n);
            let z = c(0.3, 0.25);
            let r = resolvent(&h, z).unwrap();
            let res = h.matrix().shift_diag(-z).matmul(&r).sub(&CMat::identity(n)).norm_fro();
            assert!(res < 1e-10 * n as f64);
            let nrm = schatten_norm(&r, SchattenP::Inf).unwrap();
            assert!(nrm <= 1.0 / z.im + 1e-10);
        }
    }

    #[test]
    fn schatten_examples() {
        assert!((schatten_norm(&CMat::identity(4), SchattenP::One).unwrap() - 4.0).abs() < 1e-12);
        let d = CMat::from_real_diag(&[3.0, 4.0]);
        assert!((schatten_norm(&d, SchattenP::Two).unwrap() - 5.0).abs() < 1e-15);
        let u = [c(1.0, 1.0), c(0.0, 2.0), c(-1.0, 0.0)];
        let v = [c(0.5, 0.0), c(2.0, -1.0), c(0.0, 0.0)];
        let uv = CMat::from_fn(3, 3, |i, j| u[i] * v[j].conj());
        let nu = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for p in [SchattenP::One, SchattenP::Two, SchattenP::Inf] {
            assert!((schatten_norm(&uv, p).unwrap() - nu * nv).abs() < 1e-7 * nu * nv, "{p:?}");
        }
    }

    #[test]
    fn trace_examples() {
        assert_eq!(trace(&CMat::identity(5)), c(5.0, 0.0));
        assert_eq!(trace(&CMat::from_diag(&[c(1.0, 2.0), c(3.0, 0.0)])), c(4.0, 2.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(&mut rng, 5).into_matrix();
        let b = CMat::from_fn(5, 5, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let comm = a.matmul(&b).sub(&b.matmul(&a));
        assert!(trace(&comm).norm() < 1e-12 * a.matmul(&b).norm_fro());
    }

    mod props {
        use super::{c, random_hermitian, schatten_norm, trace, CMat, ChaCha8Rng, SchattenP};
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn functional_calculus_is_multiplicative(seed in 0u64..10_000, n in 2usize..7) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let h = random_hermitian(&mut rng, n);
                let d = h.eig().unwrap();
                let f = |x: f64| c(x.sin(), 0.5 * x);
                let g = |x: f64| c((0.3 * x).exp(), 0.0);
                let fg = d.apply(|x| f(x) * g(x)).unwrap();
                let prod = d.apply(f).unwrap().matmul(&d.apply(g).unwrap());
                prop_assert!(fg.sub(&prod).norm_fro() <= 1e-10 * fg.norm_fro().max(1.0));
            }

            #[test]
            fn resolvent_identity(seed in 0u64..10_000, n in 2usize..7) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let h = random_hermitian(&mut rng, n);
                let d = h.eig().unwrap();
                let (z, w) = (c(0.2, 0.7), c(-1.1, -0.4));
                let (rz, rw) = (d.resolvent(z).unwrap(), d.resolvent(w).unwrap());
                let lhs = rz.sub(&rw);
                let rhs = rz.matmul(&rw).scale(z - w);
                prop_assert!(lhs.sub(&rhs).norm_fro() <= 1e-10 * lhs.norm_fro().max(1.0));
            }

            #[test]
            fn schatten_ordering_and_trace_bound(seed in 0u64..10_000, n in 1usize..7) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = CMat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                let s1 = schatten_norm(&m, SchattenP::One).unwrap();
                let s2 = schatten_norm(&m, SchattenP::Two).unwrap();
                let si = schatten_norm(&m, SchattenP::Inf).unwrap();
                prop_assert!(s1 + 1e-12 >= s2 && s2 + 1e-12 >= si);
                prop_assert!(s1 + 1e-12 >= trace(&m).norm());
            }
        }
    }
}
