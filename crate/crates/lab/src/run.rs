//! One function per subcommand. Each reads its parameters, runs the core
//! numerics and writes CSV tables plus a JSON report.

use rayon::prelude::*;
use serde_json::{json, Value};
use witten_core::cutoff::{build_cutoff_family, ssf_convergence_report};
use witten_core::determinants::{OperatorPair, DEFAULT_MAX_STEP};
use witten_core::dirac::{dirac_direct_model, dirac_sample, dirac_ssf_from_samples, DiracProfile};
use witten_core::model::{
    assemble, decomposition_residual, delta_r_curve, model_cutoff_convergence, near_kernel_index, positivity_defect,
    resolvent_diff_trace, spectrum_duality_defect, verify_hypotheses, DeltaRCurve, HypothesisReport, HypothesisThresholds,
    TimeScheme, PLATEAU_SLOPE,
};
use witten_core::operator::{HERMITICITY_TOL, NEAR_SINGULAR_TOL};
use witten_core::pushnitski::{witten_from_ssf, LebesguePoint, WittenReport, LEBESGUE_TOL, WITTEN_CONSISTENCY_TOL};
use witten_core::ssf::{
    cayley_normalize_with, default_epsilon, krein_residual_with, spectrum_grid, ssf_counting, ssf_symmetrized, ssf_via_det_phase,
    SsfCurve,
};
use witten_core::C64;

use crate::config::{
    check_budget, complex, CheckConfig, ConvergeConfig, DiracConfig, Loaded, Params, Route, SsfConfig, WittenConfig,
};
use crate::error::{LabError, Result};
use crate::formats::{cutoff_table_csv, ssf_csv};
use crate::output::OutputDir;

/// Near-kernel threshold used when none is configured.
const NEAR_KERNEL_THRESHOLD: f64 = 1e-3;

pub fn run(cfg: &Loaded, out: &mut OutputDir) -> Result<()> {
    match &cfg.params {
        Params::Ssf(p) => run_ssf(cfg, p, out),
        Params::Dirac(p) => run_dirac(cfg, p, out),
        Params::Converge(p) => run_converge(cfg, p, out),
        Params::Check(p) => run_check(cfg, p, out),
        Params::Witten(p) => run_witten(cfg, p, out),
    }
}

fn envelope(cfg: &Loaded, tolerances: Value, result: Value) -> Value {
    json!({
        "schema": "witten-index-lab v1",
        "command": cfg.command.as_str(),
        "config_sha256": cfg.hash,
        "seed": cfg.seed,
        "tolerances": tolerances,
        "result": result,
    })
}

fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn run_ssf(cfg: &Loaded, p: &SsfConfig, out: &mut OutputDir) -> Result<()> {
    let pair = p.pair.build(&cfg.base_dir, cfg.seed)?;
    let spectra = pair.spectra()?;
    let grid = match &p.grid {
        Some(g) => g.build()?,
        None => spectrum_grid(&spectra, 1.0, 1201),
    };
    let eps = p.epsilon.unwrap_or_else(|| default_epsilon(&spectra));
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(LabError::Config(format!("epsilon must be positive, got {eps}")));
    }
    let center = 0.5 * (spectra.spectral_floor() + spectra.spectral_ceiling());
    let z0 = p.z0.map(complex).unwrap_or(C64::new(center, 1.0));
    if p.routes.is_empty() {
        return Err(LabError::Config("no routes selected".into()));
    }

    let curves = p
        .routes
        .par_iter()
        .map(|&route| {
            let curve = match route {
                Route::Counting => ssf_counting(&pair, &grid)?,
                Route::DetPhase => ssf_via_det_phase(&pair, &grid, eps)?,
                Route::Symmetrized => cayley_normalize_with(&ssf_symmetrized(&pair, &grid, eps, z0)?, &spectra, z0)?.curve,
            };
            Ok((route, curve))
        })
        .collect::<Result<Vec<(Route, SsfCurve)>>>()?;

    let trace_b = pair.perturbation().matrix().trace().re;
    let mut routes = Vec::new();
    for (route, curve) in &curves {
        let file = format!("ssf_{}.csv", route.as_str());
        out.write(&file, &ssf_csv(curve))?;
        let residuals = p
            .krein_points
            .iter()
            .map(|&z| {
                let z = complex(z);
                let r = krein_residual_with(&spectra, curve, z)?;
                Ok(json!({ "z": cjson(z), "residual": cjson(r), "abs": r.norm() }))
            })
            .collect::<Result<Vec<_>>>()?;
        let integral = curve.integral();
        routes.push(json!({
            "route": route.as_str(),
            "file": file,
            "normalization": curve.normalization().as_str(),
            "residuals": residuals,
            "integral": integral,
            "trace_perturbation": trace_b,
            "trace_defect": (integral - trace_b).abs(),
        }));
    }
    let tol = json!({
        "epsilon": eps,
        "richardson": true,
        "max_phase_step": DEFAULT_MAX_STEP,
        "hermiticity": HERMITICITY_TOL,
        "near_singular": NEAR_SINGULAR_TOL,
    });
    let result = json!({ "dim": pair.dim(), "grid_points": grid.len(), "z0": cjson(z0), "routes": routes });
    out.write_json("krein_residual.json", &envelope(cfg, tol, result))?;
    Ok(())
}

fn lebesgue_json(p: &LebesguePoint) -> Value {
    json!({ "value": p.value, "spread": p.spread })
}

fn witten_json(r: &WittenReport) -> Value {
    json!({
        "witten_index": r.witten_index,
        "lebesgue_right_a": r.lebesgue_right_a,
        "lebesgue_left_a": r.lebesgue_left_a,
        "lebesgue_right_h": r.lebesgue_right_h,
        "consistency_residual": r.diagnostics.consistency_residual,
        "consistent": r.diagnostics.consistent,
        "averaging": {
            "right_a": lebesgue_json(&r.diagnostics.right_a),
            "left_a": lebesgue_json(&r.diagnostics.left_a),
            "right_h": lebesgue_json(&r.diagnostics.right_h),
        },
        "delta_r_samples": r.delta_r_samples.iter().map(|&(l, d)| json!([l, d])).collect::<Vec<_>>(),
        "plateau_window": r.plateau_window.map(|(a, b)| json!([a, b])),
        "plateau_value": r.plateau_value,
    })
}

fn witten_tolerances() -> Value {
    json!({
        "lebesgue_spread": LEBESGUE_TOL,
        "consistency": WITTEN_CONSISTENCY_TOL,
        "plateau_slope": PLATEAU_SLOPE,
    })
}

fn plateau_json(curve: &DeltaRCurve) -> Value {
    json!({
        "infrared_floor": curve.infrared_floor,
        "plateau": curve.plateau.map(|p| json!({
            "lambda_far": p.lambda_far,
            "lambda_near": p.lambda_near,
            "value": p.value,
            "spread": p.spread,
            "points": p.points,
        })),
    })
}

fn profile_json(profile: &DiracProfile) -> Value {
    json!({
        "profile": profile.kind.as_str(),
        "amplitude": profile.amplitude,
        "width": profile.width,
        "center": profile.center,
        "integral": profile.integral(),
    })
}

pub fn run_dirac(cfg: &Loaded, p: &DiracConfig, out: &mut OutputDir) -> Result<()> {
    let profile = p.profile.build()?;
    let grid = p.nu_grid.build()?;
    if !(p.epsilon >= 0.0 && p.epsilon.is_finite()) {
        return Err(LabError::Config(format!("epsilon must be nonnegative, got {}", p.epsilon)));
    }
    let mut n_values = p.n_values.clone();
    n_values.sort_unstable();
    n_values.dedup();
    let n_max = *n_values.last().ok_or_else(|| LabError::Config("n_values is empty".into()))?;
    let quad = p.quadrature.spec();
    let direct = match &p.direct_model {
        Some(d) => {
            check_budget(d.n_t * d.n_x)?;
            Some((d, d.lambda.build()?))
        }
        None => None,
    };

    let mut curves = Vec::with_capacity(n_values.len());
    for &n in &n_values {
        let samples = grid
            .par_iter()
            .map(|&nu| dirac_sample(&profile, nu, n, p.epsilon, &quad))
            .collect::<witten_core::Result<Vec<_>>>()?;
        let curve = dirac_ssf_from_samples(&profile, &samples, n, p.epsilon, &quad)?;
        let file = format!("dirac_ssf_n{n}.csv");
        out.write(&file, &ssf_csv(&curve))?;
        curves.push((n, file, curve));
    }
    let (_, _, top) = curves.last().expect("at least one cutoff");
    let mut report = witten_from_ssf(top)?;
    let mut direct_json = Value::Null;
    if let Some((d, lambdas)) = direct {
        let dm = dirac_direct_model(&profile, d.half_width, d.n_t, d.box_half_width, d.n_x)?;
        let dr = delta_r_curve(&dm.model, &lambdas)?;
        report = report.with_delta_r(&dr);
        let mut j = plateau_json(&dr);
        j["momentum_spacing"] = json!(dm.momentum_spacing);
        j["dim"] = json!(d.n_t * d.n_x);
        direct_json = j;
    }
    let reference = profile.reference();
    let per_n: Vec<Value> =
        curves.iter().map(|(n, file, c)| json!({ "n": n, "file": file, "xi_at_zero": c.eval(0.0) })).collect();
    let mut tol = witten_tolerances();
    tol["epsilon"] = json!(p.epsilon);
    tol["quadrature_nodes"] = json!(quad.nodes);
    tol["max_phase_step"] = json!(DEFAULT_MAX_STEP);
    let result = json!({
        "profile": profile_json(&profile),
        "n": n_max,
        "reference": reference,
        "error": (report.witten_index - reference).abs(),
        "report": witten_json(&report),
        "curves": per_n,
        "direct_model": direct_json,
    });
    out.write_json("witten.json", &envelope(cfg, tol, result))?;
    Ok(())
}

fn decrease(first: f64, last: f64) -> Option<f64> {
    (last > 0.0).then(|| first / last)
}

pub fn run_converge(cfg: &Loaded, p: &ConvergeConfig, out: &mut OutputDir) -> Result<()> {
    let scheme: TimeScheme = p.scheme.into();
    let path = p.path.build(&cfg.base_dir, scheme)?;
    let z = complex(p.z);
    let rows = model_cutoff_convergence(&path, scheme, &p.n_values, z)?;
    let model_rows: Vec<_> = rows.iter().map(|r| (r.n, vec![r.trace_distance, r.hs_distance])).collect();
    out.write("model_convergence.csv", &cutoff_table_csv(&["n", "trace_distance", "hs_distance"], &model_rows))?;

    let family = build_cutoff_family(path.a_minus(), path.b_plus(), &p.n_values)?;
    let limit = family.limit_pair()?;
    let grid = match &p.grid {
        Some(g) => g.build()?,
        None => spectrum_grid(&limit.spectra()?, 1.0, 801),
    };
    let reference = ssf_counting(&limit, &grid)?;
    let report = ssf_convergence_report(&family, &reference, z, &[])?;
    let ssf_rows: Vec<_> = report.rows.iter().map(|r| (r.n, vec![r.distance_b1, r.distance_wl1])).collect();
    out.write("ssf_convergence.csv", &cutoff_table_csv(&["n", "distance_B1", "distance_wL1"], &ssf_rows))?;

    // a single row carries no trend
    let trend = |f: &dyn Fn(usize) -> f64| (rows.len() >= 2).then(|| decrease(f(0), f(rows.len() - 1)));
    let result = json!({
        "scheme": scheme.as_str(),
        "z": cjson(z),
        "n_values": p.n_values,
        "files": ["model_convergence.csv", "ssf_convergence.csv"],
        "decrease": {
            "trace_distance": trend(&|i| rows[i].trace_distance),
            "hs_distance": trend(&|i| rows[i].hs_distance),
            "distance_B1": trend(&|i| report.rows[i].distance_b1),
            "distance_wL1": trend(&|i| report.rows[i].distance_wl1),
        },
        "ssf_passes": (rows.len() >= 2).then(|| report.passes()),
    });
    let tol = json!({ "hermiticity": HERMITICITY_TOL, "near_singular": NEAR_SINGULAR_TOL, "required_decrease": 10.0 });
    out.write_json("convergence.json", &envelope(cfg, tol, result))?;
    Ok(())
}

fn hypotheses_json(r: &HypothesisReport) -> Value {
    json!({
        "left_decay": r.left_decay,
        "l1_b_prime": r.l1_b_prime,
        "sup_b_prime": r.sup_b_prime,
        "hs_b_plus": r.hs_b_plus,
        "hs_b_prime_h0": r.hs_b_prime_h0,
        "relative_bound": r.relative_bound,
        "cutoff_trace_norms": r.cutoff_trace_norms.iter().map(|&(n, x)| json!({ "n": n, "l1_trace_norm": x })).collect::<Vec<_>>(),
        "pass": {
            "left_decay": r.pass_left_decay,
            "l1_b_prime": r.pass_l1,
            "hs_b_plus": r.pass_hs_b_plus,
            "hs_b_prime_h0": r.pass_hs_b_prime,
            "relative_bound": r.pass_relative_bound,
            "trace_class": r.pass_trace_class,
            "all": r.passes(),
        },
    })
}

fn value_or_note(r: witten_core::Result<f64>) -> Value {
    match r {
        Ok(x) => json!({ "value": x }),
        Err(e) => json!({ "value": null, "note": e.to_string() }),
    }
}

pub fn run_check(cfg: &Loaded, p: &CheckConfig, out: &mut OutputDir) -> Result<()> {
    let scheme: TimeScheme = p.scheme.into();
    let path = p.path.build(&cfg.base_dir, scheme)?;
    let model = assemble(&path, scheme)?;
    let mut thr = HypothesisThresholds::default();
    if let Some(t) = &p.thresholds {
        thr.delta_left = t.delta_left.unwrap_or(thr.delta_left);
        thr.max_l1_b_prime = t.max_l1_b_prime.unwrap_or(thr.max_l1_b_prime);
        thr.max_hilbert_schmidt = t.max_hilbert_schmidt.unwrap_or(thr.max_hilbert_schmidt);
        thr.relative_bound = t.relative_bound.unwrap_or(thr.relative_bound);
        thr.n_values = t.n_values.clone().unwrap_or(thr.n_values);
    }
    let z0 = complex(p.z0);
    let hyp = verify_hypotheses(&path, &model, z0, &thr)?;
    let thr_json = json!({
        "delta_left": thr.delta_left,
        "max_l1_b_prime": thr.max_l1_b_prime,
        "max_hilbert_schmidt": thr.max_hilbert_schmidt,
        "relative_bound": thr.relative_bound,
        "n_values": thr.n_values,
    });
    let result = json!({ "scheme": scheme.as_str(), "z0": cjson(z0), "hypotheses": hypotheses_json(&hyp) });
    out.write_json("hypotheses.json", &envelope(cfg, thr_json, result))?;

    let residual = decomposition_residual(&model, &path);
    let hint = match residual {
        Ok(r) if r > p.residual_threshold => Some(format!(
            "decomposition residual {r:.3e} exceeds {:.1e}; refine the time grid (larger n_t or smaller half_width/n_t)",
            p.residual_threshold
        )),
        _ => None,
    };
    let traces = p
        .trace_points
        .par_iter()
        .map(|&z| {
            let z = complex(z);
            let t = resolvent_diff_trace(&model, z)?;
            Ok(json!({
                "z": cjson(z),
                "value": cjson(t.value),
                "factorized": t.factorized.map(cjson),
                "relative_residual": t.relative_residual,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let result = json!({
        "scheme": scheme.as_str(),
        "factorized": scheme.is_factorized(),
        "dim": model.h1().dim(),
        "decomposition_residual": value_or_note(residual),
        "refinement_hint": hint,
        "resolvent_difference": traces,
        "spectrum_duality_defect": value_or_note(spectrum_duality_defect(&model)),
        "positivity_defect": value_or_note(positivity_defect(&model)),
        "derivative_consistency": path.derivative_consistency(),
        "warnings": model.warnings(),
    });
    let tol = json!({ "residual_threshold": p.residual_threshold, "near_singular": NEAR_SINGULAR_TOL });
    out.write_json("structural.json", &envelope(cfg, tol, result))?;
    Ok(())
}

pub fn run_witten(cfg: &Loaded, p: &WittenConfig, out: &mut OutputDir) -> Result<()> {
    let model_cfg = match &p.model {
        Some(m) => {
            let scheme: TimeScheme = m.scheme.into();
            Some((m, scheme, m.path.build(&cfg.base_dir, scheme)?, m.lambda.build()?))
        }
        None => None,
    };
    let (curve, source) = match (&p.ssf, &model_cfg) {
        (Some(src), _) => (src.build(&cfg.base_dir)?, "config"),
        (None, Some((_, _, path, _))) => {
            let pair = OperatorPair::from_endpoints(path.a_minus().clone(), path.a_plus())?;
            (ssf_counting(&pair, &spectrum_grid(&pair.spectra()?, 1.0, 401))?, "counting of the path asymptotes")
        }
        (None, None) => return Err(LabError::Config("witten needs an \"ssf\" source, a \"model\", or both".into())),
    };
    let mut report = witten_from_ssf(&curve)?;
    let mut model_json = Value::Null;
    if let Some((m, scheme, path, lambdas)) = model_cfg {
        let model = assemble(&path, scheme)?;
        let dr = delta_r_curve(&model, &lambdas)?;
        report = report.with_delta_r(&dr);
        let threshold = m.near_kernel_threshold.unwrap_or(NEAR_KERNEL_THRESHOLD);
        let mut j = plateau_json(&dr);
        j["scheme"] = json!(scheme.as_str());
        j["dim"] = json!(model.h1().dim());
        j["near_kernel_threshold"] = json!(threshold);
        j["index"] = match near_kernel_index(&model, threshold) {
            Ok(i) => json!(i),
            Err(e) => json!({ "value": null, "note": e.to_string() }),
        };
        model_json = j;
    }
    let result = json!({
        "ssf_source": source,
        "ssf_normalization": curve.normalization().as_str(),
        "report": witten_json(&report),
        "model": model_json,
    });
    out.write_json("witten.json", &envelope(cfg, witten_tolerances(), result))?;
    Ok(())
}
