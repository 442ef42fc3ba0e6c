//! Scenario configuration: a TOML file with `model`, `timescale`,
//! `sampling`, `run` and `output` blocks.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use tskf::kalman::FilterOptions;
use tskf::linsys::{ModelMatrices, NoiseScaling, SimulationOptions, StateSpaceModel, TruthBoundary};
use tskf::owc::SpikeOptions;
use tskf::timescale::{
    extract_from_measurements, ExtractParams, GridPoint, SamplingPolicy, ScaleSpec, TimeScale,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown scenario `{0}` (not a file and not a built-in name)")]
    UnknownScenario(String),
    #[error("bad override `{0}`: expected key.path=value")]
    BadOverride(String),
}

impl ConfigError {
    fn invalid(field: &str, reason: impl ToString) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            reason: reason.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// A scalar (1×1) or a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixValue {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl MatrixValue {
    pub fn to_matrix(&self, field: &str) -> Result<DMatrix<f64>> {
        match self {
            MatrixValue::Scalar(v) => Ok(DMatrix::from_element(1, 1, *v)),
            MatrixValue::Rows(rows) => {
                let ncols = rows.first().map_or(0, Vec::len);
                if rows.is_empty() || ncols == 0 {
                    return Err(ConfigError::invalid(field, "matrix must be nonempty"));
                }
                if rows.iter().any(|r| r.len() != ncols) {
                    return Err(ConfigError::invalid(field, "rows have different lengths"));
                }
                Ok(DMatrix::from_row_iterator(
                    rows.len(),
                    ncols,
                    rows.iter().flatten().copied(),
                ))
            }
        }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        if m.nrows() == 1 && m.ncols() == 1 {
            MatrixValue::Scalar(m[(0, 0)])
        } else {
            MatrixValue::Rows(m.row_iter().map(|r| r.iter().copied().collect()).collect())
        }
    }
}

/// A scalar (length 1) or a flat list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorValue {
    Scalar(f64),
    Items(Vec<f64>),
}

impl VectorValue {
    pub fn to_vector(&self, field: &str) -> Result<DVector<f64>> {
        match self {
            VectorValue::Scalar(v) => Ok(DVector::from_element(1, *v)),
            VectorValue::Items(items) if items.is_empty() => {
                Err(ConfigError::invalid(field, "vector must be nonempty"))
            }
            VectorValue::Items(items) => Ok(DVector::from_vec(items.clone())),
        }
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        if v.len() == 1 {
            VectorValue::Scalar(v[0])
        } else {
            VectorValue::Items(v.iter().copied().collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub a: MatrixValue,
    /// Defaults to an n×1 zero matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MatrixValue>,
    pub c: MatrixValue,
    /// Defaults to zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<VectorValue>,
    pub g: MatrixValue,
    pub q: MatrixValue,
    pub r: MatrixValue,
    pub x0_mean: VectorValue,
    pub p0: MatrixValue,
}

impl ModelConfig {
    pub fn from_model(m: &StateSpaceModel) -> Self {
        ModelConfig {
            a: MatrixValue::from_matrix(m.a()),
            b: Some(MatrixValue::from_matrix(m.b())),
            c: MatrixValue::from_matrix(m.c()),
            d: Some(VectorValue::from_vector(m.d())),
            g: MatrixValue::from_matrix(m.g()),
            q: MatrixValue::from_matrix(m.q()),
            r: MatrixValue::from_matrix(m.r()),
            x0_mean: VectorValue::from_vector(m.x0_mean()),
            p0: MatrixValue::from_matrix(m.p0()),
        }
    }

    pub fn build(&self) -> Result<StateSpaceModel> {
        let a = self.a.to_matrix("model.a")?;
        let c = self.c.to_matrix("model.c")?;
        let b = match &self.b {
            Some(b) => b.to_matrix("model.b")?,
            None => DMatrix::zeros(a.nrows(), 1),
        };
        let d = match &self.d {
            Some(d) => d.to_vector("model.d")?,
            None => DVector::zeros(c.nrows()),
        };
        StateSpaceModel::new(ModelMatrices {
            a,
            b,
            c,
            d,
            g: self.g.to_matrix("model.g")?,
            q: self.q.to_matrix("model.q")?,
            r: self.r.to_matrix("model.r")?,
            x0_mean: self.x0_mean.to_vector("model.x0_mean")?,
            p0: self.p0.to_matrix("model.p0")?,
        })
        .map_err(|e| ConfigError::invalid("model", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimescaleConfig {
    /// Scale-spec string, e.g. `td` or `pab(a=1, b=2, k=10)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    /// Two-column `t,valid` CSV to extract the scale from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_continuous_run: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScalingConfig {
    #[default]
    PerPoint,
    SqrtMu,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    #[default]
    Free,
    Reflect {
        lo: f64,
        hi: f64,
    },
    Clamp {
        lo: f64,
        hi: f64,
    },
}

impl BoundaryConfig {
    fn build(&self) -> Result<TruthBoundary> {
        match *self {
            BoundaryConfig::Free => Ok(TruthBoundary::Free),
            BoundaryConfig::Reflect { lo, hi } | BoundaryConfig::Clamp { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(ConfigError::invalid(
                        "sampling.truth_boundary",
                        "need finite lo < hi",
                    ));
                }
                Ok(match self {
                    BoundaryConfig::Reflect { .. } => TruthBoundary::Reflect { lo, hi },
                    _ => TruthBoundary::Clamp { lo, hi },
                })
            }
        }
    }
}

fn default_h() -> f64 {
    SamplingPolicy::default().h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub noise_scaling: NoiseScalingConfig,
    #[serde(default)]
    pub truth_boundary: BoundaryConfig,
    #[serde(default)]
    pub random_init: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp_mu: Option<f64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            h: default_h(),
            noise_scaling: NoiseScalingConfig::default(),
            truth_boundary: BoundaryConfig::default(),
            random_init: false,
            clamp_mu: None,
        }
    }
}

fn default_seed() -> u64 {
    1
}

fn default_replicates() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: default_seed(),
            replicates: default_replicates(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotFormat {
    Svg,
    Data,
}

impl FromStr for PlotFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "svg" => Ok(PlotFormat::Svg),
            "data" => Ok(PlotFormat::Data),
            other => Err(format!("unsupported plot format `{other}` (svg | data)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotMode {
    Iteration,
    Timescale,
}

impl PlotMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PlotMode::Iteration => "iteration",
            PlotMode::Timescale => "timescale",
        }
    }
}

impl FromStr for PlotMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "iteration" => Ok(PlotMode::Iteration),
            "timescale" => Ok(PlotMode::Timescale),
            other => Err(format!("unknown plot mode `{other}` (iteration | timescale)")),
        }
    }
}

fn default_formats() -> Vec<PlotFormat> {
    vec![PlotFormat::Svg]
}

fn default_modes() -> Vec<PlotMode> {
    vec![PlotMode::Iteration, PlotMode::Timescale]
}

fn default_spike_factor() -> f64 {
    SpikeOptions::default().spike_factor
}

fn default_jump_threshold() -> f64 {
    SpikeOptions::default().jump_threshold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<PlotFormat>,
    #[serde(default = "default_modes")]
    pub plot_modes: Vec<PlotMode>,
    #[serde(default = "default_spike_factor")]
    pub spike_factor: f64,
    #[serde(default = "default_jump_threshold")]
    pub jump_threshold: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            formats: default_formats(),
            plot_modes: default_modes(),
            spike_factor: default_spike_factor(),
            jump_threshold: default_jump_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelConfig,
    pub timescale: TimescaleConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Everything derived from a validated config.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub model: StateSpaceModel,
    pub timescale: TimeScale,
    pub grid: Vec<GridPoint>,
    pub simulation: SimulationOptions,
    pub filter: FilterOptions,
    pub spikes: SpikeOptions,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn to_value(&self) -> toml::Value {
        toml::Value::try_from(self).expect("config serializes to a TOML value")
    }

    pub fn from_value(value: toml::Value) -> Result<Self> {
        value.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    /// Validates every block and builds the model, scale and grid.
    /// Relative `validity_csv` paths resolve against `base_dir`.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<ResolvedScenario> {
        let model = self.model.build()?;
        let timescale = self.build_timescale(base_dir)?;

        let s = &self.sampling;
        if !(s.h > 0.0) || !s.h.is_finite() {
            return Err(ConfigError::invalid("sampling.h", "must be positive"));
        }
        if let Some(cap) = s.clamp_mu {
            if !(cap > 0.0) {
                return Err(ConfigError::invalid("sampling.clamp_mu", "must be positive"));
            }
        }
        let grid = timescale
            .sample_grid(SamplingPolicy { h: s.h })
            .map_err(|e| ConfigError::invalid("sampling.h", e))?;
        let simulation = SimulationOptions {
            noise_scaling: match s.noise_scaling {
                NoiseScalingConfig::PerPoint => NoiseScaling::PerPoint,
                NoiseScalingConfig::SqrtMu => NoiseScaling::SqrtMu,
            },
            random_init: s.random_init,
            boundary: s.truth_boundary.build()?,
        };

        if self.run.replicates == 0 {
            return Err(ConfigError::invalid("run.replicates", "must be at least 1"));
        }
        let o = &self.output;
        if !(o.spike_factor > 1.0) {
            return Err(ConfigError::invalid("output.spike_factor", "must exceed 1"));
        }
        if !(o.jump_threshold >= 0.0) {
            return Err(ConfigError::invalid("output.jump_threshold", "must be nonnegative"));
        }

        Ok(ResolvedScenario {
            config: self.clone(),
            model,
            timescale,
            grid,
            simulation,
            filter: FilterOptions { clamp_mu: s.clamp_mu },
            spikes: SpikeOptions {
                spike_factor: o.spike_factor,
                jump_threshold: o.jump_threshold,
            },
        })
    }

    fn build_timescale(&self, base_dir: Option<&Path>) -> Result<TimeScale> {
        let t = &self.timescale;
        match (&t.spec, &t.validity_csv) {
            (Some(spec), None) => {
                if t.min_continuous_run.is_some() {
                    return Err(ConfigError::invalid(
                        "timescale.min_continuous_run",
                        "only applies with validity_csv",
                    ));
                }
                let spec = ScaleSpec::from_str(spec).map_err(|e| ConfigError::invalid("timescale.spec", e))?;
                spec.build().map_err(|e| ConfigError::invalid("timescale.spec", e))
            }
            (None, Some(path)) => {
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let samples = read_validity_csv(&path)?;
                let params = ExtractParams {
                    min_continuous_run: t
                        .min_continuous_run
                        .unwrap_or(ExtractParams::default().min_continuous_run),
                };
                extract_from_measurements(&samples, params)
                    .map_err(|e| ConfigError::invalid("timescale.validity_csv", e))
            }
            _ => Err(ConfigError::invalid(
                "timescale",
                "set exactly one of `spec` or `validity_csv`",
            )),
        }
    }
}

/// Reads a `t,valid` CSV with a header row. `valid` accepts
/// `1/0`, `true/false` or `yes/no`.
pub fn read_validity_csv(path: &Path) -> Result<Vec<(f64, bool)>> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_validity_csv(&text).map_err(|reason| ConfigError::Invalid {
        field: format!("timescale.validity_csv ({})", path.display()),
        reason,
    })
}

pub fn parse_validity_csv(text: &str) -> std::result::Result<Vec<(f64, bool)>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| format!("missing `{name}` column"))
    };
    let (ti, vi) = (col("t")?, col("valid")?);
    let mut out = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = k + 2;
        let t: f64 = rec
            .get(ti)
            .unwrap_or("")
            .parse()
            .map_err(|_| format!("line {line}: bad t"))?;
        let valid = match rec.get(vi).unwrap_or("").to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" => true,
            "0" | "false" | "no" => false,
            other => return Err(format!("line {line}: bad valid flag `{other}`")),
        };
        out.push((t, valid));
    }
    Ok(out)
}

/// Applies `a.b.c=value` edits to a TOML tree. The value is parsed as a
/// TOML literal and falls back to a plain string.
pub fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::BadOverride(spec.to_string()));
    }
    let value = parse_literal(raw.trim());
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
        node = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    node.as_table_mut()
        .ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?
        .insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Loads a scenario from a file path or a built-in name, then applies
/// overrides. Returns the config and the directory relative paths resolve
/// against.
pub fn load_scenario(name_or_path: &str, overrides: &[String]) -> Result<(ScenarioConfig, Option<PathBuf>)> {
    let path = Path::new(name_or_path);
    let (mut value, base_dir) = if path.is_file() {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg = ScenarioConfig::from_toml_str(&text)?;
        let mut cfg = cfg;
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        (cfg.to_value(), path.parent().map(Path::to_path_buf))
    } else if let Some(cfg) = crate::scenarios::builtin(name_or_path) {
        (cfg.to_value(), None)
    } else {
        return Err(ConfigError::UnknownScenario(name_or_path.to_string()));
    };
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    Ok((ScenarioConfig::from_value(value)?, base_dir))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{builtin, BUILTIN_NAMES};

    #[test]
    fn builtins_round_trip() {
        for name in BUILTIN_NAMES {
            let cfg = builtin(name).unwrap();
            let text = cfg.to_toml_string();
            let back = ScenarioConfig::from_toml_str(&text).unwrap();
            assert_eq!(back, cfg, "{name}");
            assert_eq!(back.hash(), cfg.hash());
            cfg.resolve(None).unwrap();
        }
    }

    #[test]
    fn scalar_and_matrix_forms() {
        let text = r#"
            [model]
            a = [[0, 1], [-1, -2]]
            c = [[1, 0]]
            g = [[0], [1]]
            q = 1
            r = 2
            x0_mean = [1, 1]
            p0 = [[2, 0], [0, 3]]
            [timescale]
            spec = "uniform(c=2, end=40)"
        "#;
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        let r = cfg.resolve(None).unwrap();
        assert_eq!(r.model, tskf::owc::reference_model());
        assert_eq!(r.grid.len(), 21);
        assert_eq!(cfg.run.replicates, 200);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let base = builtin("ref-t1").unwrap().to_toml_string();
        let bad = format!("{base}\n[extra]\nx = 1\n");
        assert!(matches!(ScenarioConfig::from_toml_str(&bad), Err(ConfigError::Parse(_))));
        let bad = base.replace("[sampling]", "[sampling]\nstep = 3");
        let err = ScenarioConfig::from_toml_str(&bad).unwrap_err().to_string();
        assert!(err.contains("step"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = builtin("ref-t4").unwrap();
        cfg.sampling.h = 5.0;
        match cfg.resolve(None).unwrap_err() {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "sampling.h"),
            e => panic!("{e}"),
        }
        let mut cfg = builtin("ref-t1").unwrap();
        cfg.model.r = MatrixValue::Scalar(0.0);
        assert!(matches!(cfg.resolve(None).unwrap_err(), ConfigError::Invalid { field, .. } if field == "model"));
        let mut cfg = builtin("ref-t1").unwrap();
        cfg.timescale.spec = Some("nonsense(".into());
        assert!(matches!(cfg.resolve(None).unwrap_err(), ConfigError::Invalid { field, .. } if field == "timescale.spec"));
    }

    #[test]
    fn overrides_edit_nested_keys() {
        let (cfg, _) = load_scenario(
            "ref-t1",
            &[
                "sampling.h=0.5".into(),
                "run.seed=9".into(),
                "timescale.spec=harmonic(n=5)".into(),
                "sampling.truth_boundary={mode=\"clamp\", lo=-1, hi=1}".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.sampling.h, 0.5);
        assert_eq!(cfg.run.seed, 9);
        assert_eq!(cfg.timescale.spec.as_deref(), Some("harmonic(n=5)"));
        assert_eq!(cfg.sampling.truth_boundary, BoundaryConfig::Clamp { lo: -1.0, hi: 1.0 });
        assert!(matches!(
            load_scenario("ref-t1", &["nokey".into()]),
            Err(ConfigError::BadOverride(_))
        ));
        assert!(matches!(
            load_scenario("ref-t1", &["sampling.bogus=1".into()]),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(load_scenario("no-such", &[]), Err(ConfigError::UnknownScenario(_))));
    }

    #[test]
    fn validity_csv_parsing() {
        let rows = parse_validity_csv("t,valid\n0,1\n1,true\n2,0\n").unwrap();
        assert_eq!(rows, vec![(0.0, true), (1.0, true), (2.0, false)]);
        assert!(parse_validity_csv("t,valid\n0,maybe\n").is_err());
        assert!(parse_validity_csv("time,ok\n0,1\n").is_err());
    }
}
