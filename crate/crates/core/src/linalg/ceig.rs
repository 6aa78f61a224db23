//! Eigenvalues of a general complex matrix: Householder reduction to upper
//! Hessenberg form, then single-shift QR with Wilkinson shifts.

use alloc::vec::Vec;

use super::{CMat, C64};

fn hessenberg(a: &CMat) -> CMat {
    let n = a.rows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<C64> = (0..m).map(|i| h[(k + 1 + i, k)]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = libm::sqrt(tail + x[0].norm_sqr());
        let phase = if x[0].norm() == 0.0 { C64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let tau = 2.0 / v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        // H <- (I - tau v v*) H on rows k+1..
        for j in 0..n {
            let mut y = C64::new(0.0, 0.0);
            for (i, vi) in v.iter().enumerate() {
                y += vi.conj() * h[(k + 1 + i, j)];
            }
            y *= tau;
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, j)] -= vi * y;
            }
        }
        // H <- H (I - tau v v*) on columns k+1..
        for i in 0..n {
            let mut y = C64::new(0.0, 0.0);
            for (j, vj) in v.iter().enumerate() {
                y += h[(i, k + 1 + j)] * vj;
            }
            y *= tau;
            for (j, vj) in v.iter().enumerate() {
                h[(i, k + 1 + j)] -= y * vj.conj();
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    h
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let l1 = mean + disc;
    let l2 = mean - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// All eigenvalues of a square complex matrix, in no particular order.
/// Returns `None` if the QR iteration does not converge.
pub fn eigenvalues_general(a: &CMat) -> Option<Vec<C64>> {
    assert!(a.is_square());
    let n = a.rows();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut h = hessenberg(a);
    let mut out = Vec::with_capacity(n);
    let eps = f64::EPSILON;
    let scale = h.norm_fro().max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let mut rots: Vec<(C64, C64)> = Vec::with_capacity(n);
    loop {
        if hi == 0 {
            out.push(h[(0, 0)]);
            break;
        }
        // find the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if diag == 0.0 {
                diag = scale;
            }
            if sub <= eps * diag {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            out.push(h[(hi, hi)]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 100 * n.max(10) {
            return None;
        }
        let mu = if iter.is_multiple_of(11) {
            // exceptional shift
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm(), 0.0) * 0.75
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in lo..=hi {
            h[(k, k)] -= mu;
        }
        rots.clear();
        for k in lo..hi {
            let a0 = h[(k, k)];
            let b0 = h[(k + 1, k)];
            let r = libm::sqrt(a0.norm_sqr() + b0.norm_sqr());
            let (cs, sn) = if r == 0.0 { (C64::new(1.0, 0.0), C64::new(0.0, 0.0)) } else { (a0 / r, b0 / r) };
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = cs.conj() * x + sn.conj() * y;
                h[(k + 1, j)] = -sn * x + cs * y;
            }
            rots.push((cs, sn));
        }
        for (idx, &(cs, sn)) in rots.iter().enumerate() {
            let k = lo + idx;
            let top = (k + 2).min(hi);
            for i in lo..=top {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * cs + y * sn;
                h[(i, k + 1)] = -x * sn.conj() + y * cs.conj();
            }
        }
        for k in lo..=hi {
            h[(k, k)] += mu;
        }
    }
    Some(out)
}
