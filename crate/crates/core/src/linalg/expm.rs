use super::{CMat, C64};

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &CMat) -> CMat {
    assert!(a.is_square());
    let n = a.rows();
    let norm1 = (0..n).map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut s = 1.0;
    while norm1 * s > 0.5 {
        s *= 0.5;
        squarings += 1;
    }
    let x = a.scale_real(s);
    let mut term = CMat::identity(n);
    let mut sum = CMat::identity(n);
    for k in 1..=30 {
        term = term.matmul(&x).scale(C64::new(1.0 / k as f64, 0.0));
        sum.add_assign(&term);
        if term.norm_fro() <= f64::EPSILON * 1e-2 * sum.norm_fro() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::super::c;
    use super::*;

    #[test]
    fn diagonal_exponential() {
        let a = CMat::from_diag(&[c(1.0, 0.0), c(0.0, core::f64::consts::PI), c(-3.0, 0.5)]);
        let e = expm(&a);
        for i in 0..3 {
            assert!((e[(i, i)] - a[(i, i)].exp()).norm() < 1e-13);
        }
    }

    #[test]
    fn nilpotent_exponential() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = c(5.0, 0.0);
        let e = expm(&a);
        assert!((e[(0, 1)] - c(5.0, 0.0)).norm() < 1e-13);
        assert!((e[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    }
}
