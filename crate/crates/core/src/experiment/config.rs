//! TOML experiment configuration.
//!
//! ```toml
//! [model]
//! kind = "drifted-bm"
//! beta = 8.0
//!
//! [algorithm]
//! kind = "ams"
//! n_rep = 100
//! k = 1
//!
//! [run]
//! n_runs = 1000
//! seed = 42
//! ```
//!
//! Unknown keys are rejected, and so are keys that the selected model kind
//! does not use.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, XiChoice};
use crate::error::{Error, Result};
use crate::gams::{GamsConfig, LevelStrategy};
use crate::markov_path::ChainModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    DriftedBm,
    Bichannel,
    AllenCahn,
    GaussianBridge,
    GamblersRuin,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            ModelKind::DriftedBm => "drifted-bm",
            ModelKind::Bichannel => "bichannel",
            ModelKind::AllenCahn => "allen-cahn",
            ModelKind::GaussianBridge => "gaussian-bridge",
            ModelKind::GamblersRuin => "gamblers-ruin",
        }
    }

    /// Optional model fields this kind reads.
    fn fields(self) -> &'static [&'static str] {
        match self {
            ModelKind::DriftedBm => &["beta", "mu", "dt", "a", "b", "path_cap"],
            ModelKind::Bichannel => &["beta", "dt", "rho", "xi", "path_cap"],
            ModelKind::AllenCahn => &["beta", "gamma", "dt", "rho", "xi", "path_cap"],
            ModelKind::GaussianBridge => &["kappa", "z_max"],
            ModelKind::GamblersRuin => &["p_up", "start", "top", "path_cap"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<XiChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
    /// Threshold of the bridge event `max x_i > z_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_up: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_cap: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmKind {
    Ams,
    AmsExactK,
    BiasedV1,
    BiasedV2,
    DirectMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelStrategyKind {
    #[default]
    FullSort,
    RandomSubset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rep: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Overrides the model's default `z_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(default)]
    pub level_strategy: LevelStrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    /// Trajectories per run for `direct-mc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    /// Rejection draws allowed per resampling for `ams-exact-k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses every available core. Not echoed into outputs,
    /// which must not depend on it.
    #[serde(default, skip_serializing)]
    pub jobs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default = "default_per_decade")]
    pub trace_per_decade: usize,
    /// Sizes `N0` for the partial averages over the largest values.
    #[serde(default = "default_partial")]
    pub partial_n0: Vec<usize>,
}

fn default_per_decade() -> usize {
    10
}

fn default_partial() -> Vec<usize> {
    vec![10, 100]
}

/// Total trajectories for the `mc-baseline` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Cartesian product of the listed values.
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<toml::Value>>,
    /// Explicit parameter assignments, run after the grid points.
    #[serde(default)]
    pub points: Vec<BTreeMap<String, toml::Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub algorithm: AlgorithmConfig,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

/// Sweepable parameters that live in the `[algorithm]` table.
const ALGORITHM_PARAMS: &[&str] = &["n_rep", "k", "z_max", "subset_size", "level_strategy", "samples", "attempt_cap"];

/// A model ready to run.
#[derive(Debug, Clone)]
pub enum BuiltModel {
    DriftedBm(dynamics::DriftedBmModel),
    Bichannel(dynamics::BiChannelModel),
    AllenCahn(dynamics::AllenCahnModel),
    GaussianBridge(crate::variants::BridgeModel),
    GamblersRuin(ChainModel<dynamics::GamblersRuin>),
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.check_model_fields()?;
        if self.run.n_runs == 0 {
            return Err(Error::config("run.n_runs must be positive"));
        }
        let model = self.build_model()?;
        match self.algorithm.kind {
            AlgorithmKind::DirectMc => {
                if self.algorithm.samples.unwrap_or(0) == 0 {
                    return Err(Error::config("algorithm.samples must be positive for direct-mc"));
                }
            }
            kind => {
                if self.algorithm.samples.is_some() {
                    return Err(Error::config("algorithm.samples is only used by direct-mc"));
                }
                match self.algorithm.attempt_cap {
                    Some(_) if kind != AlgorithmKind::AmsExactK => {
                        return Err(Error::config("algorithm.attempt_cap is only used by ams-exact-k"));
                    }
                    Some(0) => return Err(Error::config("algorithm.attempt_cap must be positive")),
                    _ => {}
                }
                if matches!(model, BuiltModel::GaussianBridge(_))
                    && kind != AlgorithmKind::Ams
                {
                    return Err(Error::config("the gaussian-bridge model only supports algorithm.kind = \"ams\""));
                }
                let gams = self.gams_config(&model)?;
                if self.algorithm.z_max.is_some_and(|z| z > self.default_z_max(&model)) {
                    return Err(Error::config(format!(
                        "algorithm.z_max must not exceed the model threshold {} so that B lies above it",
                        self.default_z_max(&model)
                    )));
                }
                gams.validate()?;
            }
        }
        if self.algorithm.kind == AlgorithmKind::DirectMc && matches!(model, BuiltModel::GaussianBridge(_)) {
            return Err(Error::config("direct-mc on the gaussian-bridge model is not supported; use mc-baseline"));
        }
        if let Some(b) = &self.baseline {
            if b.samples == 0 {
                return Err(Error::config("baseline.samples must be positive"));
            }
        }
        if let Some(sweep) = &self.sweep {
            for (name, values) in &sweep.grid {
                if values.is_empty() {
                    return Err(Error::config(format!("sweep.grid.{name} is empty")));
                }
            }
            if sweep.grid.is_empty() && sweep.points.is_empty() {
                return Err(Error::config("sweep needs a grid or a list of points"));
            }
        }
        Ok(())
    }

    fn check_model_fields(&self) -> Result<()> {
        let m = &self.model;
        let present: [(&str, bool); 14] = [
            ("beta", m.beta.is_some()),
            ("mu", m.mu.is_some()),
            ("dt", m.dt.is_some()),
            ("a", m.a.is_some()),
            ("b", m.b.is_some()),
            ("rho", m.rho.is_some()),
            ("gamma", m.gamma.is_some()),
            ("xi", m.xi.is_some()),
            ("kappa", m.kappa.is_some()),
            ("z_max", m.z_max.is_some()),
            ("p_up", m.p_up.is_some()),
            ("start", m.start.is_some()),
            ("top", m.top.is_some()),
            ("path_cap", m.path_cap.is_some()),
        ];
        let allowed = m.kind.fields();
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(Error::config(format!("model.{name} is not used by model kind {}", m.kind.name())));
            }
        }
        Ok(())
    }

    fn require<T: Copy>(value: Option<T>, name: &str) -> Result<T> {
        value.ok_or_else(|| Error::config(format!("model.{name} is required")))
    }

    pub fn build_model(&self) -> Result<BuiltModel> {
        let m = &self.model;
        let cap = m.path_cap.unwrap_or(ChainModel::<dynamics::GamblersRuin>::DEFAULT_PATH_CAP);
        if cap < 2 {
            return Err(Error::config("model.path_cap must be at least 2"));
        }
        Ok(match m.kind {
            ModelKind::DriftedBm => {
                let model = dynamics::drifted_bm_model(
                    m.mu.unwrap_or(1.0),
                    Self::require(m.beta, "beta")?,
                    m.dt.unwrap_or(dynamics::DT_1D),
                    m.a.unwrap_or(0.1),
                    m.b.unwrap_or(1.9),
                )?;
                BuiltModel::DriftedBm(model.with_path_cap(cap))
            }
            ModelKind::Bichannel => {
                let model = dynamics::bichannel_model(
                    Self::require(m.beta, "beta")?,
                    m.rho.unwrap_or(dynamics::RHO),
                    Self::require(m.xi, "xi")?,
                )?
                .with_time_step(m.dt.unwrap_or(dynamics::DT_2D))?;
                BuiltModel::Bichannel(model.with_path_cap(cap))
            }
            ModelKind::AllenCahn => {
                let model = dynamics::allen_cahn_model(
                    Self::require(m.gamma, "gamma")?,
                    Self::require(m.beta, "beta")?,
                    m.rho.unwrap_or(dynamics::RHO),
                    Self::require(m.xi, "xi")?,
                )?
                .with_time_step(m.dt.unwrap_or(dynamics::DT_2D))?;
                BuiltModel::AllenCahn(model.with_path_cap(cap))
            }
            ModelKind::GaussianBridge => BuiltModel::GaussianBridge(crate::variants::BridgeModel::new(
                Self::require(m.kappa, "kappa")?,
                Self::require(m.z_max, "z_max")?,
            )?),
            ModelKind::GamblersRuin => BuiltModel::GamblersRuin(
                dynamics::gamblers_ruin_model(
                    Self::require(m.p_up, "p_up")?,
                    Self::require(m.start, "start")?,
                    Self::require(m.top, "top")?,
                )?
                .with_path_cap(cap),
            ),
        })
    }

    fn default_z_max(&self, model: &BuiltModel) -> f64 {
        match model {
            BuiltModel::DriftedBm(m) => m.z_max,
            BuiltModel::Bichannel(m) => m.z_max,
            BuiltModel::AllenCahn(m) => m.z_max,
            BuiltModel::GaussianBridge(m) => m.z_max,
            BuiltModel::GamblersRuin(m) => m.z_max,
        }
    }

    /// Engine parameters for this config and model.
    pub fn gams_config(&self, model: &BuiltModel) -> Result<GamsConfig> {
        let a = &self.algorithm;
        let n_rep = a.n_rep.ok_or_else(|| Error::config("algorithm.n_rep is required"))?;
        let k = a.k.ok_or_else(|| Error::config("algorithm.k is required"))?;
        let mut cfg = GamsConfig::new(n_rep, k, a.z_max.unwrap_or_else(|| self.default_z_max(model)));
        cfg.level_strategy = match a.level_strategy {
            LevelStrategyKind::FullSort => {
                if a.subset_size.is_some() {
                    return Err(Error::config("algorithm.subset_size requires level_strategy = \"random-subset\""));
                }
                LevelStrategy::FullSort
            }
            LevelStrategyKind::RandomSubset => LevelStrategy::RandomSubset {
                subset_size: a
                    .subset_size
                    .ok_or_else(|| Error::config("algorithm.subset_size is required for random-subset"))?,
            },
        };
        if let Some(m) = a.max_iterations {
            cfg.max_iterations = m;
        }
        Ok(cfg)
    }

    /// Grid points in order: the cartesian product first, then explicit points.
    pub fn sweep_points(&self) -> Vec<BTreeMap<String, toml::Value>> {
        let Some(sweep) = &self.sweep else {
            return Vec::new();
        };
        let mut points: Vec<BTreeMap<String, toml::Value>> = Vec::new();
        if !sweep.grid.is_empty() {
            points.push(BTreeMap::new());
            for (name, values) in &sweep.grid {
                points = points
                    .into_iter()
                    .flat_map(|p| {
                        values.iter().map(move |v| {
                            let mut q = p.clone();
                            q.insert(name.clone(), v.clone());
                            q
                        })
                    })
                    .collect();
            }
        }
        points.extend(sweep.points.iter().cloned());
        points
    }

    /// This config with one grid point applied and the sweep removed.
    pub fn with_point(&self, point: &BTreeMap<String, toml::Value>) -> Result<Self> {
        let mut base = self.clone();
        base.sweep = None;
        let mut value = toml::Value::try_from(&base).map_err(|e| Error::config(e.to_string()))?;
        let table = value.as_table_mut().expect("config serializes to a table");
        for (name, v) in point {
            if name == "kind" {
                return Err(Error::config("sweep cannot vary the model or algorithm kind"));
            }
            let section = if ALGORITHM_PARAMS.contains(&name.as_str()) { "algorithm" } else { "model" };
            table
                .get_mut(section)
                .and_then(toml::Value::as_table_mut)
                .expect("section present")
                .insert(name.clone(), v.clone());
        }
        let cfg: Self = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(format!("invalid sweep point {}: {e}", point_label(point))))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Canonical `name=value` rendering of a grid point, sorted by name.
pub fn point_label(point: &BTreeMap<String, toml::Value>) -> String {
    point
        .iter()
        .map(|(k, v)| match v {
            toml::Value::String(s) => format!("{k}={s}"),
            other => format!("{k}={other}"),
        })
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
kind = "drifted-bm"
beta = 8.0

[algorithm]
kind = "ams"
n_rep = 100
k = 1

[run]
n_runs = 10
seed = 7
"#;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_toml_str(BASE).unwrap();
        assert_eq!(c.run.partial_n0, vec![10, 100]);
        let m = c.build_model().unwrap();
        assert_eq!(c.gams_config(&m).unwrap().z_max, 1.9);
    }

    #[test]
    fn unknown_and_unused_keys_are_rejected() {
        let typo = BASE.replace("beta = 8.0", "bta = 8.0");
        assert!(ExperimentConfig::from_toml_str(&typo).unwrap_err().is_config());
        let unused = BASE.replace("beta = 8.0", "beta = 8.0\ngamma = 1.0");
        let err = ExperimentConfig::from_toml_str(&unused).unwrap_err();
        assert!(err.to_string().contains("model.gamma"), "{err}");
    }

    #[test]
    fn invalid_k_is_a_config_error() {
        let bad = BASE.replace("k = 1", "k = 100");
        assert!(ExperimentConfig::from_toml_str(&bad).unwrap_err().is_config());
    }

    #[test]
    fn attempt_cap_belongs_to_exact_k() {
        let ams = BASE.replace("k = 1", "k = 1\nattempt_cap = 10");
        assert!(ExperimentConfig::from_toml_str(&ams).unwrap_err().is_config());
        let exact = ams.replace("kind = \"ams\"", "kind = \"ams-exact-k\"");
        let c = ExperimentConfig::from_toml_str(&exact).unwrap();
        assert_eq!(c.algorithm.attempt_cap, Some(10));
        let zero = exact.replace("attempt_cap = 10", "attempt_cap = 0");
        assert!(ExperimentConfig::from_toml_str(&zero).unwrap_err().is_config());
    }

    #[test]
    fn grid_expansion() {
        let s = format!("{BASE}\n[sweep]\ngrid = {{ k = [1, 10, 20] }}\n");
        let c = ExperimentConfig::from_toml_str(&s).unwrap();
        let pts = c.sweep_points();
        assert_eq!(pts.len(), 3);
        let c1 = c.with_point(&pts[1]).unwrap();
        assert_eq!(c1.algorithm.k, Some(10));
        assert!(c1.sweep.is_none());
    }

    #[test]
    fn two_dimensional_grid() {
        let s = BASE.replace("kind = \"drifted-bm\"\nbeta = 8.0", "kind = \"bichannel\"\nbeta = 8.67\nxi = \"xi1\"")
            + "\n[sweep]\ngrid = { xi = [\"xi1\", \"xi2\", \"xi3\"], beta = [8.67, 9.33, 10.0] }\n";
        let c = ExperimentConfig::from_toml_str(&s).unwrap();
        let pts = c.sweep_points();
        assert_eq!(pts.len(), 9);
        for p in &pts {
            c.with_point(p).unwrap();
        }
    }

    #[test]
    fn empty_grid_dimension_is_an_error() {
        let s = format!("{BASE}\n[sweep]\ngrid = {{ k = [] }}\n");
        assert!(ExperimentConfig::from_toml_str(&s).unwrap_err().is_config());
    }

    #[test]
    fn point_labels_are_canonical() {
        let mut p = BTreeMap::new();
        p.insert("n_rep".to_string(), toml::Value::Integer(10));
        p.insert("k".to_string(), toml::Value::Integer(1));
        p.insert("xi".to_string(), toml::Value::String("xi1".into()));
        assert_eq!(point_label(&p), "k=1,n_rep=10,xi=xi1");
    }
}
