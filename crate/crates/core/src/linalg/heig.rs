//! Hermitian eigensolver: Householder reduction to a real symmetric
//! tridiagonal matrix followed by implicit QL iterations (the EISPACK
//! `tql2` recurrence).

use alloc::vec;
use alloc::vec::Vec;

use super::{hypot, CMat, C64};

struct Tridiagonal {
    diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`; last entry is zero.
    off: Vec<f64>,
    /// Unitary `Q·D` with `A = (QD) T (QD)*`, only when vectors were requested.
    basis: Option<CMat>,
}

fn tridiagonalize(a: &CMat, want_vectors: bool) -> Tridiagonal {
    let n = a.rows();
    let mut s = a.hermitian_part();
    let mut reflectors: Vec<(usize, Vec<C64>, f64)> = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<C64> = (0..m).map(|i| s[(k + 1 + i, k)]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = libm::sqrt(tail + x[0].norm_sqr());
        let phase = if x[0].norm() == 0.0 { C64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / vnorm2;

        // w = tau * S v on the trailing block
        let off = k + 1;
        for i in 0..m {
            let row = &s.row(off + i)[off..];
            let mut acc = C64::new(0.0, 0.0);
            for (a_ij, v_j) in row.iter().zip(&v) {
                acc += a_ij * v_j;
            }
            w[i] = acc * tau;
        }
        let mut vw = C64::new(0.0, 0.0);
        for i in 0..m {
            vw += v[i].conj() * w[i];
        }
        let kk = vw * (tau * 0.5);
        for i in 0..m {
            w[i] -= kk * v[i];
        }
        for i in 0..m {
            let vi = v[i];
            let qi = w[i];
            let row = &mut s.as_mut_slice()[(off + i) * n + off..(off + i) * n + n];
            for j in 0..m {
                row[j] -= vi * w[j].conj() + qi * v[j].conj();
            }
        }
        s[(k + 1, k)] = alpha;
        s[(k, k + 1)] = alpha.conj();
        for i in (k + 2)..n {
            s[(i, k)] = C64::new(0.0, 0.0);
            s[(k, i)] = C64::new(0.0, 0.0);
        }
        if want_vectors {
            reflectors.push((k, v, tau));
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| s[(i, i)].re).collect();
    let mut off = vec![0.0; n];
    let mut phases = vec![C64::new(1.0, 0.0); n];
    for k in 0..n.saturating_sub(1) {
        let beta = s[(k + 1, k)];
        let r = beta.norm();
        off[k] = r;
        phases[k + 1] = if r == 0.0 { phases[k] } else { phases[k] * beta / r };
    }

    let basis = if want_vectors {
        let mut q = CMat::identity(n);
        let mut y = vec![C64::new(0.0, 0.0); n];
        for (k, v, tau) in reflectors.iter().rev() {
            let off = k + 1;
            for yj in y.iter_mut() {
                *yj = C64::new(0.0, 0.0);
            }
            for (i, vi) in v.iter().enumerate() {
                let vc = vi.conj();
                for (yj, qij) in y.iter_mut().zip(q.row(off + i)) {
                    *yj += vc * qij;
                }
            }
            for (i, vi) in v.iter().enumerate() {
                let f = vi * *tau;
                let row = &mut q.as_mut_slice()[(off + i) * n..(off + i + 1) * n];
                for (qij, yj) in row.iter_mut().zip(&y) {
                    *qij -= f * yj;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                q[(i, j)] *= phases[j];
            }
        }
        Some(q)
    } else {
        None
    };
    Tridiagonal { diag, off, basis }
}

/// Implicit QL on `(d, e)`. When `zt` is given, its rows are rotated along
/// (row `i` holds the `i`-th eigenvector in the tridiagonal basis).
fn tql2(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut [Vec<f64>]>) -> bool {
    let n = d.len();
    if n == 0 {
        return true;
    }
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return false;
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = zt.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut(i + 1);
                        let zi = &mut lo[i];
                        let zi1 = &mut hi[0];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hb = *b;
                            *b = s * *a + c * hb;
                            *a = c * *a - s * hb;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    true
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
/// Only the Hermitian part of `a` is used. Returns `None` if QL fails to
/// converge.
pub fn hermitian_eig(a: &CMat) -> Option<(Vec<f64>, CMat)> {
    assert!(a.is_square());
    let n = a.rows();
    let Tridiagonal { mut diag, mut off, basis } = tridiagonalize(a, true);
    let basis = basis.expect("basis requested");
    let mut zt: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect();
    if !tql2(&mut diag, &mut off, Some(&mut zt)) {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    // zt[j] is the j-th eigenvector in the tridiagonal basis.
    let mut v = CMat::zeros(n, n);
    for i in 0..n {
        let brow = basis.row(i);
        for (j, &oj) in order.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (b, z) in brow.iter().zip(&zt[oj]) {
                acc += b * z;
            }
            v[(i, j)] = acc;
        }
    }
    Some((values, v))
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigvals(a: &CMat) -> Option<Vec<f64>> {
    assert!(a.is_square());
    let Tridiagonal { mut diag, mut off, .. } = tridiagonalize(a, false);
    if !tql2(&mut diag, &mut off, None) {
        return None;
    }
    diag.sort_by(f64::total_cmp);
    Some(diag)
}

#[cfg(test)]
mod tests {
    use super::super::c;
    use super::*;

    fn sample(n: usize) -> CMat {
        let m = CMat::from_fn(n, n, |i, j| {
            let x = ((i * 31 + j * 17) % 13) as f64 - 6.0;
            let y = ((i * 7 + j * 11) % 5) as f64 - 2.0;
            c(x * 0.3, y * 0.2)
        });
        m.hermitian_part()
    }

    #[test]
    fn reconstructs_hermitian_matrix() {
        for n in [1, 2, 3, 7, 20] {
            let a = sample(n);
            let (w, v) = hermitian_eig(&a).unwrap();
            let lam = CMat::from_real_diag(&w);
            let r = v.matmul(&lam).matmul(&v.adjoint()).sub(&a);
            assert!(r.norm_fro() < 1e-12 * a.norm_fro().max(1.0), "n={n}: {}", r.norm_fro());
            let u = v.adjoint().matmul(&v).sub(&CMat::identity(n));
            assert!(u.norm_fro() < 1e-12);
            assert!(w.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn values_only_agree() {
        let a = sample(15);
        let (w, _) = hermitian_eig(&a).unwrap();
        let w2 = hermitian_eigvals(&a).unwrap();
        for (x, y) in w.iter().zip(&w2) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn already_tridiagonal_and_diagonal() {
        let a = CMat::from_real_diag(&[3.0, -1.0, 2.0]);
        let (w, _) = hermitian_eig(&a).unwrap();
        assert_eq!(w, alloc::vec![-1.0, 2.0, 3.0]);
    }
}
