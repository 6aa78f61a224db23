//! Deterministic models shipped with the crate and used by the tests, the
//! acceptance suite and the command line.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{CMat, C64};
use crate::model::{time_grid, OperatorPath, TimeScheme};
use crate::operator::HermitianOperator;
use crate::ssf::{Normalization, SsfCurve, StepFunction};

/// Asymptotes of the 16-dimensional test model.
#[derive(Clone, Debug)]
pub struct TestModel {
    pub a_minus: HermitianOperator,
    pub b_plus: HermitianOperator,
}

/// `A₋` with spectrum spread over `[−10, 10]` (avoiding 0) and a dense
/// Hermitian `B₊` with decaying off-diagonal coupling.
pub fn test_model_16() -> TestModel {
    let n = 16;
    let spec: Vec<f64> = (0..n).map(|k| -10.0 + 20.0 * k as f64 / (n - 1) as f64).collect();
    let a_minus = HermitianOperator::from_real_diag(&spec).expect("diagonal is Hermitian");
    let b = CMat::from_fn(n, n, |j, k| {
        let d = j as f64 - k as f64;
        C64::from_polar(0.6 / (1.0 + d.abs()), 0.7 * d)
    });
    let b_plus = HermitianOperator::new(b.hermitian_part()).expect("Hermitian by construction");
    TestModel { a_minus, b_plus }
}

/// Scalar path `A(t) = s·tanh t` with `A₋ = −s`, sampled for `scheme` with
/// `n` time unknowns on `[−T, T]`.
pub fn scalar_path(scheme: TimeScheme, half_width: f64, n: usize, s: f64) -> OperatorPath {
    let t = time_grid(scheme, half_width, n);
    OperatorPath::scalar(t, -s, |x| s * libm::tanh(x), |x| s * sech2(x)).expect("finite scalar path")
}

/// `A(t) = −1 + (1 + tanh t)/2`, running from `−1` to the non-invertible `0`.
pub fn half_path(scheme: TimeScheme, half_width: f64, n: usize) -> OperatorPath {
    let t = time_grid(scheme, half_width, n);
    OperatorPath::scalar(t, -1.0, |x| 0.5 * (libm::tanh(x) - 1.0), |x| 0.5 * sech2(x)).expect("finite scalar path")
}

/// `θ(t) = (1 + tanh t)/2`.
pub fn theta(t: f64) -> f64 {
    0.5 * (1.0 + libm::tanh(t))
}

pub fn theta_prime(t: f64) -> f64 {
    0.5 * sech2(t)
}

fn sech2(x: f64) -> f64 {
    let c = libm::cosh(x);
    1.0 / (c * c)
}

/// The 16-dimensional model switched on by `θ`: `B(t) = θ(t) B₊`.
pub fn switching_path_16(scheme: TimeScheme, half_width: f64, n: usize) -> OperatorPath {
    let m = test_model_16();
    OperatorPath::switching(time_grid(scheme, half_width, n), m.a_minus, &m.b_plus, theta, theta_prime).expect("finite path")
}

/// `ξ_A = 1` on `[−1, 0)` and 0 elsewhere, as a step function.
pub fn indicator_curve() -> SsfCurve {
    let step = StepFunction::new(vec![-1.0, 0.0], vec![0.0, 1.0, 0.0]).expect("increasing breaks");
    SsfCurve::from_step(step, vec![-2.0, -1.0, 0.0, 2.0], Normalization::Counting).expect("valid grid")
}

/// Its transform: `1/2` on `(0, 1]`, `π⁻¹ arcsin(λ^{−1/2})` beyond.
pub fn indicator_transform(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else if lambda <= 1.0 {
        0.5
    } else {
        libm::asin(1.0 / libm::sqrt(lambda)) / core::f64::consts::PI
    }
}
