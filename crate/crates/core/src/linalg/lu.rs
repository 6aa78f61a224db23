use alloc::vec::Vec;

use super::{CMat, C64};

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: CMat,
    perm: Vec<usize>,
    sign: f64,
}

/// Returned when a pivot vanishes exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularPivot(pub usize);

impl Lu {
    pub fn new(a: &CMat) -> Result<Self, SingularPivot> {
        assert!(a.is_square(), "LU of a non-square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in (k + 1)..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(SingularPivot(k));
            }
            if p != k {
                let s = lu.as_mut_slice();
                for j in 0..n {
                    s.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            let inv = C64::new(1.0, 0.0) / pivot;
            let s = lu.as_mut_slice();
            let (head, tail) = s.split_at_mut((k + 1) * n);
            let prow = &head[k * n..(k + 1) * n];
            for row in tail.chunks_exact_mut(n) {
                let f = row[k] * inv;
                row[k] = f;
                if f.re == 0.0 && f.im == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    row[j] -= f * prow[j];
                }
            }
        }
        Ok(Self { n, lu, perm, sign })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn det(&self) -> C64 {
        let mut d = C64::new(self.sign, 0.0);
        for i in 0..self.n {
            d *= self.lu[(i, i)];
        }
        d
    }

    /// `ln det` as a sum of principal logarithms of the pivots; the imaginary
    /// part is only meaningful modulo 2π.
    pub fn log_det(&self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.n {
            acc += self.lu[(i, i)].ln();
        }
        if self.sign < 0.0 {
            acc += C64::new(0.0, core::f64::consts::PI);
        }
        acc
    }

    /// Smallest pivot modulus, a cheap conditioning indicator.
    pub fn min_pivot(&self) -> f64 {
        (0..self.n).map(|i| self.lu[(i, i)].norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in 0..i {
                s -= row[j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &CMat) -> CMat {
        assert_eq!(b.rows(), self.n);
        let bt = b.transpose();
        let mut out = CMat::zeros(b.cols(), self.n);
        for j in 0..b.cols() {
            let x = self.solve_vec(bt.row(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(j, i)] = v;
            }
        }
        out.transpose()
    }

    pub fn inverse(&self) -> CMat {
        self.solve(&CMat::identity(self.n))
    }
}
