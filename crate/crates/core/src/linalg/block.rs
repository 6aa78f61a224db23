use alloc::vec::Vec;

use super::{hermitian_eigvals, CMat, Lu, C64};

/// Hermitian block-tridiagonal matrix. `diag[k]` are the diagonal blocks,
/// `lower[k]` couples block `k + 1` to block `k` (the upper blocks are the
/// adjoints).
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTridiag {
    diag: Vec<CMat>,
    lower: Vec<CMat>,
}

impl BlockTridiag {
    /// Panics on inconsistent block shapes.
    pub fn new(diag: Vec<CMat>, lower: Vec<CMat>) -> Self {
        assert!(!diag.is_empty());
        let m = diag[0].rows();
        assert!(diag.iter().all(|d| d.rows() == m && d.cols() == m), "diagonal blocks must be m×m");
        assert!(lower.len() + 1 == diag.len() && lower.iter().all(|c| c.rows() == m && c.cols() == m));
        Self { diag, lower }
    }

    pub fn block_diagonal(diag: Vec<CMat>) -> Self {
        let m = diag[0].rows();
        let lower = (1..diag.len()).map(|_| CMat::zeros(m, m)).collect();
        Self::new(diag, lower)
    }

    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn block_size(&self) -> usize {
        self.diag[0].rows()
    }

    pub fn dim(&self) -> usize {
        self.blocks() * self.block_size()
    }

    pub fn diag_blocks(&self) -> &[CMat] {
        &self.diag
    }

    pub fn lower_blocks(&self) -> &[CMat] {
        &self.lower
    }

    pub fn to_dense(&self) -> CMat {
        let m = self.block_size();
        let mut out = CMat::zeros(self.dim(), self.dim());
        for (k, d) in self.diag.iter().enumerate() {
            out.set_block(k * m, k * m, d);
        }
        for (k, c) in self.lower.iter().enumerate() {
            out.set_block((k + 1) * m, k * m, c);
            out.set_block(k * m, (k + 1) * m, &c.adjoint());
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let m = self.block_size();
        let mut out = alloc::vec![C64::new(0.0, 0.0); self.dim()];
        for k in 0..self.blocks() {
            let y = self.diag[k].matvec(&v[k * m..(k + 1) * m]);
            for (o, x) in out[k * m..(k + 1) * m].iter_mut().zip(y) {
                *o += x;
            }
        }
        for (k, c) in self.lower.iter().enumerate() {
            let y = c.matvec(&v[k * m..(k + 1) * m]);
            for (o, x) in out[(k + 1) * m..(k + 2) * m].iter_mut().zip(y) {
                *o += x;
            }
            let y = c.adjoint().matvec(&v[(k + 1) * m..(k + 2) * m]);
            for (o, x) in out[k * m..(k + 1) * m].iter_mut().zip(y) {
                *o += x;
            }
        }
        out
    }

    /// `tr (H − z)⁻¹` from the diagonal blocks of the inverse, built out of a
    /// left and a right Schur-complement sweep. `None` if a Schur complement
    /// is exactly singular.
    pub fn trace_resolvent(&self, z: C64) -> Option<C64> {
        let n = self.blocks();
        let shifted: Vec<CMat> = self.diag.iter().map(|d| d.shift_diag(-z)).collect();
        // left[k] = C_{k-1} S_{k-1}⁻¹ C_{k-1}*, right[k] = C_k* T_{k+1}⁻¹ C_k
        let mut left = Vec::with_capacity(n);
        let mut s_inv: Option<CMat> = None;
        for k in 0..n {
            let corr = match (&s_inv, k) {
                (Some(si), k) if k > 0 => {
                    let c = &self.lower[k - 1];
                    Some(c.matmul(si).matmul(&c.adjoint()))
                }
                _ => None,
            };
            let s = match &corr {
                Some(cc) => shifted[k].sub(cc),
                None => shifted[k].clone(),
            };
            s_inv = Some(Lu::new(&s).ok()?.inverse());
            left.push(corr);
        }
        let mut right: Vec<Option<CMat>> = alloc::vec![None; n];
        let mut t_inv: Option<CMat> = None;
        for k in (0..n).rev() {
            let corr = match &t_inv {
                Some(ti) if k + 1 < n => {
                    let c = &self.lower[k];
                    Some(c.adjoint().matmul(ti).matmul(c))
                }
                _ => None,
            };
            let t = match &corr {
                Some(cc) => shifted[k].sub(cc),
                None => shifted[k].clone(),
            };
            t_inv = Some(Lu::new(&t).ok()?.inverse());
            right[k] = corr;
        }
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            let mut g = shifted[k].clone();
            if let Some(l) = &left[k] {
                g = g.sub(l);
            }
            if let Some(r) = &right[k] {
                g = g.sub(r);
            }
            acc += Lu::new(&g).ok()?.inverse().trace();
        }
        Some(acc)
    }

    /// Number of eigenvalues `< x`, by Sylvester inertia of the block `LDL*`
    /// factorization of `H − x`. `None` if a pivot block is singular.
    pub fn count_below(&self, x: f64) -> Option<usize> {
        let z = C64::new(x, 0.0);
        let mut count = 0;
        let mut s_inv: Option<CMat> = None;
        for k in 0..self.blocks() {
            let mut s = self.diag[k].shift_diag(-z);
            if let (Some(si), true) = (&s_inv, k > 0) {
                let c = &self.lower[k - 1];
                s = s.sub(&c.matmul(si).matmul(&c.adjoint()));
            }
            let s = s.hermitian_part();
            let ev = hermitian_eigvals(&s)?;
            if ev.contains(&0.0) {
                return None;
            }
            count += ev.iter().filter(|&&e| e < 0.0).count();
            s_inv = Some(Lu::new(&s).ok()?.inverse());
        }
        Some(count)
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let m = self.block_size();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..self.blocks() {
            for i in 0..m {
                let mut r = 0.0;
                for j in 0..m {
                    if j != i {
                        r += self.diag[k][(i, j)].norm();
                    }
                }
                if k > 0 {
                    r += self.lower[k - 1].row(i).iter().map(|z| z.norm()).sum::<f64>();
                }
                if k + 1 < self.blocks() {
                    r += (0..m).map(|j| self.lower[k][(j, i)].norm()).sum::<f64>();
                }
                let d = self.diag[k][(i, i)].re;
                lo = lo.min(d - r);
                hi = hi.max(d + r);
            }
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by inertia bisection.
    pub fn eigenvalue(&self, k: usize, tol: f64) -> Option<f64> {
        if k >= self.dim() {
            return None;
        }
        let (mut lo, mut hi) = self.gershgorin();
        lo -= 1.0;
        hi += 1.0;
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let c = match self.count_below(mid) {
                Some(c) => c,
                None => self.count_below(mid + 0.25 * tol)?,
            };
            if c > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{c, hermitian_eigvals};
    use super::*;

    fn sample() -> BlockTridiag {
        let m = 3;
        let diag = (0..5)
            .map(|k| {
                CMat::from_fn(m, m, |i, j| c(((i * 3 + j + k) % 4) as f64 - 1.5, (i as f64 - j as f64) * 0.2)).hermitian_part()
            })
            .collect();
        let lower = (0..4).map(|k| CMat::from_fn(m, m, |i, j| c(0.3 * (i + k) as f64 - 0.4, 0.1 * j as f64))).collect();
        BlockTridiag::new(diag, lower)
    }

    #[test]
    fn trace_resolvent_matches_dense() {
        let b = sample();
        let dense = b.to_dense();
        assert!(dense.hermiticity_defect() < 1e-15);
        for z in [c(0.3, 0.7), c(-5.0, 0.0), c(1.1, -0.2)] {
            let exact = dense.shift_diag(-z).inverse().unwrap().trace();
            let t = b.trace_resolvent(z).unwrap();
            assert!((t - exact).norm() < 1e-10 * exact.norm().max(1.0), "{t} {exact}");
        }
    }

    #[test]
    fn inertia_counts_and_bisection() {
        let b = sample();
        let ev = hermitian_eigvals(&b.to_dense()).unwrap();
        for x in [-3.0, -0.77, 0.0, 0.5, 2.2, 9.0] {
            let expect = ev.iter().filter(|&&e| e < x).count();
            assert_eq!(b.count_below(x), Some(expect));
        }
        for k in [0, 4, 14] {
            assert!((b.eigenvalue(k, 1e-12).unwrap() - ev[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let b = sample();
        let v: Vec<C64> = (0..b.dim()).map(|i| c(i as f64 * 0.1, 1.0 - i as f64 * 0.05)).collect();
        let d = b.to_dense().matvec(&v);
        for (x, y) in b.matvec(&v).iter().zip(&d) {
            assert!((x - y).norm() < 1e-13);
        }
    }
}
