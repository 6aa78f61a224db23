//! Experiment configuration: one JSON file per run, tagged by `"command"`.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use witten_core::determinants::OperatorPair;
use witten_core::dirac::{DiracProfile, ProfileKind, QuadratureSpec};
use witten_core::fixtures;
use witten_core::model::{log_lambda_grid, time_grid, OperatorPath, TimeScheme, DENSE_BUDGET};
use witten_core::operator::HermitianOperator;
use witten_core::ssf::SsfCurve;
use witten_core::{CMat, C64};

use crate::error::{LabError, Result};
use crate::formats::{read_json, read_ssf_csv, PairFile, PathFile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Ssf,
    Dirac,
    Converge,
    Check,
    Witten,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Ssf => "ssf",
            Command::Dirac => "dirac",
            Command::Converge => "converge",
            Command::Check => "check",
            Command::Witten => "witten",
        }
    }
}

/// A parsed configuration together with its provenance.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub command: Command,
    pub seed: u64,
    /// SHA-256 of the effective configuration in canonical JSON form.
    pub hash: String,
    pub base_dir: PathBuf,
    pub params: Params,
}

#[derive(Clone, Debug)]
pub enum Params {
    Ssf(SsfConfig),
    Dirac(DiracConfig),
    Converge(ConvergeConfig),
    Check(CheckConfig),
    Witten(WittenConfig),
}

/// Reads `path`, applies the seed override and checks the command tag.
pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Loaded> {
    let mut value: Value = read_json(path)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    from_value(&mut value, seed_override, base_dir)
}

pub fn from_value(value: &mut Value, seed_override: Option<u64>, base_dir: PathBuf) -> Result<Loaded> {
    let obj = value.as_object_mut().ok_or_else(|| LabError::Config("top level must be a JSON object".into()))?;
    if let Some(seed) = seed_override {
        obj.insert("seed".into(), seed.into());
    }
    let command: Command = match obj.remove("command") {
        Some(v) => serde_json::from_value(v).map_err(|e| LabError::Config(format!("command: {e}")))?,
        None => return Err(LabError::Config("missing \"command\" field".into())),
    };
    let seed = match obj.remove("seed") {
        None => 0,
        Some(v) => v.as_u64().ok_or_else(|| LabError::Config("seed must be a nonnegative integer".into()))?,
    };
    let rest = Value::Object(obj.clone());
    let canonical = serde_json::json!({ "command": command.as_str(), "seed": seed, "params": rest });
    let hash = hex(&Sha256::digest(canonical.to_string().as_bytes()));
    let params = match command {
        Command::Ssf => Params::Ssf(parse(rest)?),
        Command::Dirac => Params::Dirac(parse(rest)?),
        Command::Converge => Params::Converge(parse(rest)?),
        Command::Check => Params::Check(parse(rest)?),
        Command::Witten => Params::Witten(parse(rest)?),
    };
    Ok(Loaded { command, seed, hash, base_dir, params })
}

fn parse<T: serde::de::DeserializeOwned>(v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| LabError::Config(e.to_string()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(LabError::Config(format!("{name} must be positive, got {x}")))
    }
}

/// Either an explicit list of points or `{lo, hi, points}` uniformly spaced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points(Vec<f64>),
    Uniform { lo: f64, hi: f64, points: usize },
}

impl GridSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        let g = match *self {
            GridSpec::Points(ref p) => p.clone(),
            GridSpec::Uniform { lo, hi, points } => {
                if points < 2 || !(hi > lo) {
                    return Err(LabError::Config(format!(
                        "grid needs hi > lo and at least 2 points, got [{lo}, {hi}] with {points}"
                    )));
                }
                (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect()
            }
        };
        if g.iter().any(|x| !x.is_finite()) || g.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::Config("grid must be finite and strictly increasing".into()));
        }
        Ok(g)
    }
}

/// `λ` samples `−hi .. −lo`, log-spaced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub per_decade: usize,
}

impl LogGrid {
    pub fn build(&self) -> Result<Vec<f64>> {
        positive("lambda.lo", self.lo)?;
        if !(self.hi > self.lo) || self.per_decade == 0 {
            return Err(LabError::Config("lambda grid needs hi > lo and per_decade ≥ 1".into()));
        }
        Ok(log_lambda_grid(self.lo, self.hi, self.per_decade))
    }
}

impl Default for LogGrid {
    fn default() -> Self {
        Self { lo: 1e-3, hi: 10.0, per_decade: 4 }
    }
}

/// A complex number as `[re, im]`.
pub type Complex = [f64; 2];

pub fn complex(z: Complex) -> C64 {
    C64::new(z[0], z[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PairSource {
    File(PathBuf),
    Inline(Box<PairFile>),
    Random { dim: usize, scale: Option<f64> },
}

impl PairSource {
    pub fn build(&self, base: &Path, seed: u64) -> Result<OperatorPair> {
        match self {
            PairSource::File(p) => read_json::<PairFile>(&resolve(base, p))?.to_pair(),
            PairSource::Inline(p) => p.to_pair(),
            &PairSource::Random { dim, scale } => {
                if dim == 0 || dim > DENSE_BUDGET {
                    return Err(LabError::Config(format!("random pair dimension {dim} out of range")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut herm = |s: f64| {
                    let m = CMat::from_fn(dim, dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                    HermitianOperator::new(m.hermitian_part().scale_real(s))
                };
                let base = herm(1.0)?;
                let pert = herm(scale.unwrap_or(0.5))?;
                Ok(OperatorPair::new(base, pert)?)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinPath {
    /// `A(t) = s·tanh t`.
    ScalarTanh,
    /// `A(t) = −1 + θ(t)`, ending at the non-invertible 0.
    Half,
    /// The 16-dimensional model switched on by `θ`.
    #[serde(rename = "switching-16")]
    Switching16,
    /// `A(t) ≡ −1`, so `B ≡ 0`.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PathSource {
    File(PathBuf),
    Builtin {
        name: BuiltinPath,
        half_width: f64,
        n_t: usize,
        #[serde(default)]
        scale: Option<f64>,
    },
}

impl PathSource {
    pub fn build(&self, base: &Path, scheme: TimeScheme) -> Result<OperatorPath> {
        let path = match *self {
            PathSource::File(ref p) => read_json::<PathFile>(&resolve(base, p))?.to_path()?,
            PathSource::Builtin { name, half_width, n_t, scale } => {
                positive("half_width", half_width)?;
                if n_t < 2 {
                    return Err(LabError::Config("n_t must be at least 2".into()));
                }
                let spatial = if name == BuiltinPath::Switching16 { 16 } else { 1 };
                check_budget(n_t * spatial)?;
                match name {
                    BuiltinPath::ScalarTanh => fixtures::scalar_path(scheme, half_width, n_t, scale.unwrap_or(1.0)),
                    BuiltinPath::Half => fixtures::half_path(scheme, half_width, n_t),
                    BuiltinPath::Switching16 => fixtures::switching_path_16(scheme, half_width, n_t),
                    BuiltinPath::Zero => {
                        let t = time_grid(scheme, half_width, n_t);
                        OperatorPath::scalar(t, -1.0, |_| -1.0, |_| 0.0)?
                    }
                }
            }
        };
        check_budget(path.len() * path.spatial_dim())?;
        Ok(path)
    }
}

/// The dense-solver cap on `N_t × n_spatial`.
pub fn check_budget(dim: usize) -> Result<()> {
    if dim > DENSE_BUDGET {
        return Err(witten_core::Error::Budget { dim, cap: DENSE_BUDGET }.into());
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    SpectralPeriodic,
    FiniteDifferenceDirichlet,
    Staggered,
    SplitDirichlet,
}

impl From<SchemeName> for TimeScheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::SpectralPeriodic => TimeScheme::SpectralPeriodic,
            SchemeName::FiniteDifferenceDirichlet => TimeScheme::FiniteDifferenceDirichlet,
            SchemeName::Staggered => TimeScheme::Staggered,
            SchemeName::SplitDirichlet => TimeScheme::SplitDirichlet,
        }
    }
}

fn default_scheme() -> SchemeName {
    SchemeName::SplitDirichlet
}

fn default_z() -> Complex {
    [0.0, 1.0]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Counting,
    DetPhase,
    Symmetrized,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Counting => "counting",
            Route::DetPhase => "det-phase",
            Route::Symmetrized => "symmetrized",
        }
    }
}

fn all_routes() -> Vec<Route> {
    vec![Route::Counting, Route::DetPhase, Route::Symmetrized]
}

fn default_krein_points() -> Vec<Complex> {
    vec![[0.0, 1.0], [0.0, 2.0], [-1.0, 1.0]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsfConfig {
    pub pair: PairSource,
    /// Defaults to 1201 points spanning the joint spectrum with margin 1.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "all_routes")]
    pub routes: Vec<Route>,
    /// Defaults to `1e-5 · max(1, spectral diameter)`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Cayley base point; defaults to the spectral center plus `i`.
    #[serde(default)]
    pub z0: Option<Complex>,
    #[serde(default = "default_krein_points")]
    pub krein_points: Vec<Complex>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub profile: String,
    pub amplitude: f64,
    pub width: f64,
    #[serde(default)]
    pub center: f64,
}

impl ProfileSpec {
    pub fn build(&self) -> Result<DiracProfile> {
        let kind = ProfileKind::parse(&self.profile)
            .ok_or_else(|| LabError::Config(format!("unknown profile '{}', expected gaussian or sech2", self.profile)))?;
        Ok(DiracProfile::new(kind, self.amplitude, self.width, self.center)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
}

fn default_nodes() -> usize {
    QuadratureSpec::default().nodes
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { nodes: default_nodes(), interval: None }
    }
}

impl QuadratureConfig {
    pub fn spec(&self) -> QuadratureSpec {
        QuadratureSpec { nodes: self.nodes, interval: self.interval.map(|[a, b]| (a, b)) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectModelConfig {
    pub half_width: f64,
    pub n_t: usize,
    pub box_half_width: f64,
    pub n_x: usize,
    #[serde(default)]
    pub lambda: LogGrid,
}

fn default_n_values() -> Vec<u32> {
    witten_core::cutoff::DEFAULT_N_VALUES.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracConfig {
    pub profile: ProfileSpec,
    pub nu_grid: GridSpec,
    #[serde(default = "default_dirac_n")]
    pub n_values: Vec<u32>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub direct_model: Option<DirectModelConfig>,
}

fn default_dirac_n() -> Vec<u32> {
    vec![64]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub path: PathSource,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<u32>,
    #[serde(default = "default_z")]
    pub z: Complex,
    /// Grid for the `ξ` distances; defaults to 801 points over the joint
    /// spectrum of the asymptotes with margin 1.
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    #[serde(default)]
    pub delta_left: Option<f64>,
    #[serde(default)]
    pub max_l1_b_prime: Option<f64>,
    #[serde(default)]
    pub max_hilbert_schmidt: Option<f64>,
    #[serde(default)]
    pub relative_bound: Option<f64>,
    #[serde(default)]
    pub n_values: Option<Vec<u32>>,
}

fn default_residual_threshold() -> f64 {
    1e-2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub path: PathSource,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
    #[serde(default = "default_z")]
    pub z0: Complex,
    #[serde(default)]
    pub thresholds: Option<ThresholdConfig>,
    /// Decomposition residual above which a refinement hint is emitted.
    #[serde(default = "default_residual_threshold")]
    pub residual_threshold: f64,
    #[serde(default = "default_krein_points")]
    pub trace_points: Vec<Complex>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinSsf {
    /// `1` on `[−1, 0)`.
    Indicator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SsfSource {
    File(PathBuf),
    Constant(f64),
    Builtin(BuiltinSsf),
}

impl SsfSource {
    pub fn build(&self, base: &Path) -> Result<SsfCurve> {
        match *self {
            SsfSource::File(ref p) => read_ssf_csv(&resolve(base, p)),
            SsfSource::Constant(c) => {
                if !c.is_finite() {
                    return Err(LabError::Config("constant must be finite".into()));
                }
                let grid = vec![-1.0, 1.0];
                Ok(SsfCurve::sampled(grid, vec![c, c], witten_core::ssf::Normalization::Counting)?.with_tails(c, c))
            }
            SsfSource::Builtin(BuiltinSsf::Indicator) => Ok(fixtures::indicator_curve()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WittenModelConfig {
    pub path: PathSource,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
    #[serde(default)]
    pub lambda: LogGrid,
    /// Threshold for the near-kernel eigenvalue count; defaults to the
    /// infrared floor of the model.
    #[serde(default)]
    pub near_kernel_threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WittenConfig {
    /// `ξ(·; A₊, A₋)`; the counting function of the model asymptotes when
    /// omitted.
    #[serde(default)]
    pub ssf: Option<SsfSource>,
    #[serde(default)]
    pub model: Option<WittenModelConfig>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn load_value(v: Value, seed: Option<u64>) -> Result<Loaded> {
        from_value(&mut v.clone(), seed, PathBuf::new())
    }

    #[test]
    fn command_and_seed_are_extracted() {
        let cfg = load_value(json!({"command": "witten", "seed": 7, "ssf": {"constant": 0.3}}), None).unwrap();
        assert_eq!(cfg.command, Command::Witten);
        assert_eq!(cfg.seed, 7);
        assert!(matches!(cfg.params, Params::Witten(WittenConfig { ssf: Some(SsfSource::Constant(_)), .. })));
        let over = load_value(json!({"command": "witten", "seed": 7, "ssf": {"constant": 0.3}}), Some(9)).unwrap();
        assert_eq!(over.seed, 9);
        assert_ne!(over.hash, cfg.hash);
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = load_value(json!({"command": "witten", "ssf": {"constant": 0.3}, "seed": 1}), None).unwrap();
        let b = load_value(json!({"seed": 1, "ssf": {"constant": 0.3}, "command": "witten"}), None).unwrap();
        assert_eq!(a.hash, b.hash);
        assert_eq!(a.hash.len(), 64);
    }

    #[test]
    fn rejects_bad_configs() {
        for v in [
            json!([1, 2]),
            json!({"ssf": {"constant": 0.3}}),
            json!({"command": "plot"}),
            json!({"command": "witten", "ssf": {"constant": 0.3}, "extra": 1}),
            json!({"command": "witten", "seed": -3}),
            json!({"command": "dirac", "profile": {"profile": "gaussian", "amplitude": 1.0, "width": 1.0}}),
        ] {
            let err = load_value(v, None).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{err}");
        }
    }

    #[test]
    fn grids() {
        let g = GridSpec::Uniform { lo: -1.0, hi: 1.0, points: 5 }.build().unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(GridSpec::Points(vec![0.0, 0.0]).build().is_err());
        assert!(GridSpec::Uniform { lo: 1.0, hi: 0.0, points: 3 }.build().is_err());
        let parsed: GridSpec = serde_json::from_value(json!([0.0, 1.0])).unwrap();
        assert_eq!(parsed, GridSpec::Points(vec![0.0, 1.0]));
        let l = LogGrid::default().build().unwrap();
        assert!(l.windows(2).all(|w| w[1] > w[0]) && l.iter().all(|&x| x < 0.0));
    }

    #[test]
    fn random_pairs_are_seeded() {
        let src = PairSource::Random { dim: 5, scale: None };
        let a = src.build(Path::new(""), 3).unwrap();
        let b = src.build(Path::new(""), 3).unwrap();
        let c = src.build(Path::new(""), 4).unwrap();
        assert_eq!(a.perturbation().matrix(), b.perturbation().matrix());
        assert_ne!(a.perturbation().matrix(), c.perturbation().matrix());
    }

    #[test]
    fn builtin_paths_respect_the_budget() {
        let big = PathSource::Builtin { name: BuiltinPath::Switching16, half_width: 8.0, n_t: 400, scale: None };
        assert_eq!(big.build(Path::new(""), TimeScheme::SplitDirichlet).unwrap_err().exit_code(), 4);
        let zero = PathSource::Builtin { name: BuiltinPath::Zero, half_width: 4.0, n_t: 20, scale: None };
        let p = zero.build(Path::new(""), TimeScheme::SplitDirichlet).unwrap();
        assert_eq!(p.len(), 20);
    }
}
