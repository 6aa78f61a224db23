//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use witten_core::cutoff::{build_cutoff_family, ssf_convergence_report};
use witten_core::determinants::{det2_one_minus, det2_one_minus_expm, OperatorPair};
use witten_core::dirac::{dirac_ssf, dirac_witten, DiracProfile, QuadratureSpec};
use witten_core::fixtures::{indicator_curve, indicator_transform, scalar_path, switching_path_16, test_model_16};
use witten_core::linalg::c;
use witten_core::model::{
    assemble, decomposition_residual, delta_r_curve, log_lambda_grid, model_cutoff_convergence, near_kernel_index,
    resolvent_diff_trace, spectrum_duality_defect, TimeScheme,
};
use witten_core::operator::HermitianOperator;
use witten_core::pushnitski::{abel_value, cauchy_kernel_check, krein_moment_check, witten_from_ssf, HShift};
use witten_core::ssf::{
    away_from, cayley_normalize, krein_residual, spectrum_grid, ssf_counting, ssf_counting_from_spectra, ssf_symmetrized,
    ssf_via_det_phase, Normalization, SsfCurve, StepFunction,
};
use witten_core::{CMat, C64};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Debug>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| format!("{e:?}"))
}

fn rand_herm(rng: &mut ChaCha8Rng, n: usize, s: f64) -> HermitianOperator {
    let m = CMat::from_fn(n, n, |_, _| c(rng.gen_range(-s..s), rng.gen_range(-s..s)));
    HermitianOperator::new(m.hermitian_part()).expect("Hermitian part")
}

fn random_pairs(seed: u64, count: usize) -> Vec<OperatorPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(4..=16);
            let a0 = rand_herm(&mut rng, n, 1.0);
            let b = rand_herm(&mut rng, n, 0.5);
            OperatorPair::new(a0, b).expect("matching dimensions")
        })
        .collect()
}

fn rand_mat(rng: &mut ChaCha8Rng, n: usize, s: f64) -> CMat {
    CMat::from_fn(n, n, |_, _| c(rng.gen_range(-s..s), rng.gen_range(-s..s)))
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn ssf_routes() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_integral: f64 = 0.0;
    for pair in random_pairs(101, 50) {
        let s = ok(pair.spectra())?;
        let eps = 1e-5 * (s.spectral_ceiling() - s.spectral_floor());
        let grid = spectrum_grid(&s, 0.5, 1201);
        let count = ok(ssf_counting(&pair, &grid))?;
        let phase = ok(ssf_via_det_phase(&pair, &grid, eps))?;
        let z0 = c(0.5 * (s.spectral_floor() + s.spectral_ceiling()), 1.0);
        let sym = ok(cayley_normalize(&ok(ssf_symmetrized(&pair, &grid, eps, z0))?, &pair, z0))?.curve;
        for i in away_from(&grid, &s.joint_eigenvalues(), 10.0 * eps) {
            let v = count.values()[i];
            let (dp, ds) = ((phase.values()[i] - v).abs(), (sym.values()[i] - v).abs());
            worst = worst.max(dp).max(ds);
        }
        let tr = pair.perturbation().matrix().trace().re;
        worst_integral = worst_integral.max((count.integral() - tr).abs());
    }
    ensure!(worst < 1e-2, "route mismatch {worst:.3e}");
    ensure!(worst_integral < 1e-10, "∫ξ − tr B = {worst_integral:.3e}");
    Ok(format!("sup mismatch {worst:.2e}, |∫ξ − tr B| ≤ {worst_integral:.1e}"))
}

fn determinant_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut prod, mut mult, mut ratio, mut unit): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for pair in random_pairs(103, 20) {
        let n = pair.dim();
        let a = rand_mat(&mut rng, n, 0.3);
        let b = rand_mat(&mut rng, n, 0.3);
        prod = prod.max(rel(ok(det2_one_minus(&a))?, ok(det2_one_minus_expm(&a))?));
        let i = CMat::identity(n);
        let lhs = ok(det2_one_minus(&i.sub(&i.sub(&a).matmul(&i.sub(&b)))))?;
        let rhs = ok(det2_one_minus(&a))? * ok(det2_one_minus(&b))? * (-a.matmul(&b).trace()).exp();
        mult = mult.max(rel(lhs, rhs));

        let s = ok(pair.spectra())?;
        let z0 = c(0.2, 1.3);
        let z = c(-0.7, 0.4);
        let d = ok(s.cayley_modified_determinant(z, z0))?;
        let expect = ok(s.perturbation_determinant(z))? / ok(s.perturbation_determinant(z0.conj()))?;
        ratio = ratio.max(rel(d, expect));
        unit = unit.max((ok(s.cayley_modified_determinant(z0.conj(), z0))? - c(1.0, 0.0)).norm());
    }
    ensure!(prod < 1e-10, "product formula residual {prod:.3e}");
    ensure!(mult < 1e-10, "multiplicativity residual {mult:.3e}");
    ensure!(ratio < 1e-10, "Cayley ratio residual {ratio:.3e}");
    ensure!(unit < 1e-12, "|D̃(z̄₀; z₀) − 1| = {unit:.3e}");
    Ok(format!("residuals {prod:.1e} / {mult:.1e} / {ratio:.1e} / {unit:.1e}"))
}

fn krein() -> Outcome {
    let mut worst: f64 = 0.0;
    for pair in random_pairs(101, 50) {
        let curve = ok(ssf_counting(&pair, &[0.0]))?;
        for z in [c(0.0, 1.0), c(0.0, 2.0), c(-1.0, 1.0)] {
            worst = worst.max(ok(krein_residual(&pair, &curve, z))?.norm());
        }
    }
    ensure!(worst < 1e-8, "Krein residual {worst:.3e}");
    Ok(format!("max residual {worst:.2e}"))
}

fn constant_curve(v: f64) -> SsfCurve {
    SsfCurve::sampled(vec![-2.0, 2.0], vec![v, v], Normalization::Counting).expect("two points").with_tails(v, v)
}

fn abel_closed_forms() -> Outcome {
    let lambdas: Vec<f64> = (1..=100).map(|k| 0.1 * k as f64).collect();
    let mut worst_c: f64 = 0.0;
    for v in [0.3, -1.2, 2.0] {
        let curve = constant_curve(v);
        for &l in &lambdas {
            worst_c = worst_c.max((ok(abel_value(&curve, l))? - v).abs());
        }
    }
    let ind = indicator_curve();
    let mut worst_i: f64 = 0.0;
    for &l in &lambdas {
        worst_i = worst_i.max((ok(abel_value(&ind, l))? - indicator_transform(l)).abs());
    }
    ensure!(worst_c < 1e-10, "constant error {worst_c:.3e}");
    ensure!(worst_i < 1e-8, "indicator error {worst_i:.3e}");
    Ok(format!("constant {worst_c:.1e}, indicator {worst_i:.1e}"))
}

fn shipped_curves() -> Result<Vec<(&'static str, SsfCurve)>, String> {
    let m = test_model_16();
    let pair = ok(OperatorPair::new(m.a_minus.clone(), m.b_plus.clone()))?;
    let counting = ok(ssf_counting(&pair, &[-12.0, 12.0]))?;
    let step = ok(StepFunction::new(vec![-0.5, 0.25, 0.75], vec![0.0, 2.0, -1.0, 0.0]))?;
    let stairs = ok(SsfCurve::from_step(step, vec![-2.0, 2.0], Normalization::Counting))?;
    let ramp = ok(SsfCurve::from_fn(vec![-3.0, -1.0, 0.0, 0.5, 3.0], |x| 0.4 + 0.3 * x, Normalization::Counting))?;
    Ok(vec![
        ("indicator", indicator_curve()),
        ("constant", constant_curve(0.3)),
        ("16-dim counting", counting),
        ("staircase", stairs),
        ("ramp", ramp),
    ])
}

fn witten_synthesis() -> Outcome {
    let w = ok(witten_from_ssf(&indicator_curve()))?;
    ensure!((w.witten_index - 0.5).abs() < 1e-4, "indicator gives {}", w.witten_index);
    let mut worst: f64 = 0.0;
    for (name, curve) in ok(shipped_curves())? {
        let r = witten_from_ssf(&curve).map_err(|e| format!("{name}: {e:?}"))?;
        ensure!(r.diagnostics.consistency_residual < 1e-6, "{name}: residual {:.3e}", r.diagnostics.consistency_residual);
        worst = worst.max(r.diagnostics.consistency_residual);
    }
    Ok(format!("W_r(indicator) = {:.6}, worst consistency {worst:.1e}", w.witten_index))
}

fn index_desk_check() -> Outcome {
    let mut notes = Vec::new();
    for (sign, expect) in [(1.0, 1i64), (-1.0, -1)] {
        for scheme in [TimeScheme::Staggered, TimeScheme::SplitDirichlet] {
            let path = scalar_path(scheme, 12.0, 400, sign);
            let model = ok(assemble(&path, scheme))?;
            let idx = ok(near_kernel_index(&model, 1e-3))?;
            ensure!(idx == expect, "{} index {idx}, expected {expect}", scheme.as_str());
        }
        let path = scalar_path(TimeScheme::SplitDirichlet, 12.0, 400, sign);
        let a_minus = ok(path.a_minus().eigenvalues())?;
        let a_plus = ok(path.a_plus().eigenvalues())?;
        let xi = ok(ssf_counting_from_spectra(&a_minus, &a_plus, &[0.0]))?;
        ensure!(xi.values()[0] == expect as f64, "ξ(0) = {}", xi.values()[0]);
        let model = ok(assemble(&path, TimeScheme::SplitDirichlet))?;
        let curve = ok(delta_r_curve(&model, &log_lambda_grid(1e-4, 1.0, 8)))?;
        let p = curve.plateau.ok_or("no Δ_r plateau")?;
        ensure!((p.value - expect as f64).abs() < 5e-2, "plateau {} for index {expect}", p.value);
        notes.push(format!("{expect:+}: plateau {:.4}", p.value));
    }
    Ok(notes.join(", "))
}

fn dirac_reproduction() -> Outcome {
    let gaussian = DiracProfile::gaussian_with_integral(0.6 * PI, 1.0);
    let sech = DiracProfile::sech2_with_integral(0.6 * PI, 1.0);
    let nu: Vec<f64> = (0..=120).map(|k| -6.0 + 0.1 * k as f64).collect();
    let quad = QuadratureSpec::default();
    let g = ok(dirac_ssf(&gaussian, &nu, 64, 0.0, &quad))?;
    let s = ok(dirac_ssf(&sech, &nu, 64, 0.0, &quad))?;
    let (mut flat, mut gauge): (f64, f64) = (0.0, 0.0);
    for ((x, a), b) in nu.iter().zip(g.values()).zip(s.values()) {
        if x.abs() <= 5.0 + 1e-12 {
            flat = flat.max((a - 0.3).abs());
            gauge = gauge.max((a - b).abs());
        }
    }
    ensure!(flat < 1e-2, "n = 64 curve deviates from 0.3 by {flat:.3e}");
    ensure!(gauge < 2e-2, "profiles differ by {gauge:.3e}");
    let w = ok(dirac_witten(&gaussian, &[64], &nu, 0.0, &quad))?;
    ensure!(w.error < 1e-2, "W_r = {}", w.report.witten_index);
    Ok(format!("max |ξ − 0.3| {flat:.1e}, profile gap {gauge:.1e}, W_r = {:.4}", w.report.witten_index))
}

fn convergence() -> Outcome {
    let path = switching_path_16(TimeScheme::SplitDirichlet, 8.0, 16);
    let rows = ok(model_cutoff_convergence(&path, TimeScheme::SplitDirichlet, &[1, 64], c(-1.0, 1.0)))?;
    let (first, last) = (&rows[0], &rows[1]);
    ensure!(first.trace_distance >= 10.0 * last.trace_distance, "trace distances {rows:?}");
    ensure!(first.hs_distance >= 10.0 * last.hs_distance, "HS distances {rows:?}");

    let m = test_model_16();
    let family = ok(build_cutoff_family(&m.a_minus, &m.b_plus, &[1, 64]))?;
    let limit = ok(family.limit_pair())?;
    let reference = ok(ssf_counting(&limit, &[-14.0, 14.0]))?;
    let report = ok(ssf_convergence_report(&family, &reference, c(-1.0, 1.0), &[]))?;
    let (a, b) = (report.rows[0].distance_wl1, report.rows[1].distance_wl1);
    ensure!(a >= 10.0 * b, "weighted L¹ distances {a:.3e} → {b:.3e}");
    Ok(format!(
        "trace {:.1e} → {:.1e}, HS {:.1e} → {:.1e}, ξ {a:.1e} → {b:.1e}",
        first.trace_distance, last.trace_distance, first.hs_distance, last.hs_distance
    ))
}

fn kernel_identities() -> Outcome {
    let points = [(c(-1.0, 0.0), c(-2.0, 0.0)), (c(0.0, 1.0), c(0.0, 2.0))];
    let ind = indicator_curve();
    let closed = |l: f64| indicator_transform(l);
    let bp = [1.0];
    let mut worst: f64 = 0.0;
    for &(z, z0) in &points {
        let h = HShift::Function { f: &closed, breakpoints: &bp };
        worst = worst.max(ok(cauchy_kernel_check(&ind, h, z, z0))?.residual.norm());
        let h = HShift::Function { f: &closed, breakpoints: &bp };
        worst = worst.max(ok(krein_moment_check(h, &ind, z))?.residual.norm());
    }
    for pair in random_pairs(109, 10) {
        let curve = ok(ssf_counting(&pair, &[0.0]))?;
        for &(z, z0) in &points {
            worst = worst.max(ok(cauchy_kernel_check(&curve, HShift::AbelOf(&curve), z, z0))?.residual.norm());
            worst = worst.max(ok(krein_moment_check(HShift::AbelOf(&curve), &curve, z))?.residual.norm());
        }
    }
    ensure!(worst < 1e-6, "kernel residual {worst:.3e}");
    Ok(format!("max residual {worst:.2e}"))
}

fn structural_checks() -> Outcome {
    let r = |n| -> Result<f64, String> {
        let path = scalar_path(TimeScheme::FiniteDifferenceDirichlet, 12.0, n, 1.0);
        let model = ok(assemble(&path, TimeScheme::FiniteDifferenceDirichlet))?;
        ok(decomposition_residual(&model, &path))
    };
    let ratio = r(200)? / r(400)?;
    ensure!((3.0..=5.0).contains(&ratio), "refinement ratio {ratio}");

    let mut trace_gap: f64 = 0.0;
    let mut duality: f64 = 0.0;
    for scheme in TimeScheme::ALL {
        for path in [scalar_path(scheme, 12.0, 200, 1.0), switching_path_16(scheme, 8.0, 16)] {
            let model = ok(assemble(&path, scheme))?;
            if let Some(res) = ok(resolvent_diff_trace(&model, c(-1.0, 0.5)))?.relative_residual {
                trace_gap = trace_gap.max(res);
            }
            if scheme.is_factorized() {
                duality = duality.max(ok(spectrum_duality_defect(&model))?);
            }
        }
    }
    ensure!(trace_gap < 1e-8, "direct vs factorized trace {trace_gap:.3e}");
    ensure!(duality < 1e-8, "nonzero spectra differ by {duality:.3e}");
    Ok(format!("ratio {ratio:.3}, trace gap {trace_gap:.1e}, duality {duality:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("ssf route agreement", Duration::from_secs(30), ssf_routes),
        ("determinant identities", Duration::from_secs(10), determinant_identities),
        ("Krein residual", Duration::from_secs(5), krein),
        ("Abel closed forms", Duration::from_secs(5), abel_closed_forms),
        ("Witten synthesis", Duration::from_secs(5), witten_synthesis),
        ("index equals spectral flow", Duration::from_secs(60), index_desk_check),
        ("Dirac reproduction", Duration::from_secs(600), dirac_reproduction),
        ("convergence suites", Duration::from_secs(120), convergence),
        ("Cauchy and moment identities", Duration::from_secs(30), kernel_identities),
        ("structural checks", Duration::from_secs(60), structural_checks),
    ];
    let mut failed = 0;
    for (k, (name, budget, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if secs > budget => Err(format!("{msg}; over the {} s budget", budget.as_secs())),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} ({:.1} s)", k + 1, secs.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} ({:.1} s)", k + 1, secs.as_secs_f64());
            }
        }
    }
    println!("acceptance: {}/10 passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
