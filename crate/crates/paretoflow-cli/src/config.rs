//! Experiment configuration: TOML or JSON, with documented keys and
//! defaults matching the standard training setup.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use paretoflow_core::envs::objectives::GridObjective;
use paretoflow_core::envs::{HyperGridEnv, NGramEnv};
use paretoflow_core::gflownet::{OrderRule, TrainConfig, TrainMethod};
use paretoflow_core::orders::{DistanceMetric, RewardTransform};
use paretoflow_core::replay::ReplayConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] paretoflow_core::Error),
}

/// Environment selection keys.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    /// "hypergrid" or "ngrams".
    pub kind: String,
    /// Grid dimension (hypergrid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Grid side length (hypergrid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<u16>,
    /// Objective names (hypergrid): branin, currin, shubert, beale,
    /// beale-squared, coord-<axis>.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objectives: Vec<String>,
    /// Maximum sequence length (ngrams).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// Unigram/bigram patterns (ngrams).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub patterns: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    /// gr | gr-k | cheap-gr | nn | nn-int | op-baseline
    pub name: String,
    /// Layer cutoff for gr-k.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rank: Option<usize>,
    /// Distance metric for the nearest-neighbor orders.
    #[serde(default)]
    pub metric: DistanceMetric,
    /// Min-max axis normalization for the nearest-neighbor orders.
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    /// raw | softmax | indicator
    pub kind: String,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_gamma() -> f64 {
    1.0
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            kind: "indicator".into(),
            gamma: default_gamma(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_z_ratio")]
    pub z_lr_ratio: f64,
    #[serde(default = "default_eps")]
    pub explore_eps: f64,
    #[serde(default)]
    pub snapshot_every: usize,
}

fn default_steps() -> usize {
    1000
}
fn default_batch() -> usize {
    128
}
fn default_lr() -> f64 {
    0.01
}
fn default_z_ratio() -> f64 {
    10.0
}
fn default_eps() -> f64 {
    0.05
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            batch_size: default_batch(),
            learning_rate: default_lr(),
            z_lr_ratio: default_z_ratio(),
            explore_eps: default_eps(),
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReplaySection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_capacity")]
    pub capacity: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default = "default_ratio")]
    pub pareto_ratio: f64,
    #[serde(default = "default_min_k")]
    pub min_pareto_k: usize,
}

fn default_capacity() -> usize {
    10_000
}
fn default_warmup() -> usize {
    1_000
}
fn default_ratio() -> f64 {
    0.1
}
fn default_min_k() -> usize {
    1
}

impl Default for ReplaySection {
    fn default() -> Self {
        Self {
            enabled: false,
            capacity: default_capacity(),
            warmup: default_warmup(),
            pareto_ratio: default_ratio(),
            min_pareto_k: default_min_k(),
        }
    }
}

/// One experiment: environment, method, schedule, seeds, output paths.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Table label; defaults to "<env>-<method>".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub out_dir: String,
    #[serde(default = "default_eval_samples")]
    pub eval_samples: usize,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Grid resolution of the hypercube-face reference set used when the
    /// true front is not enumerable.
    #[serde(default = "default_face_grid")]
    pub reference_face_grid: usize,
    pub env: EnvConfig,
    pub method: MethodConfig,
    #[serde(default)]
    pub transform: TransformConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub replay: ReplaySection,
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}
fn default_eval_samples() -> usize {
    1280
}
fn default_top_k() -> usize {
    10
}
fn default_face_grid() -> usize {
    64
}

/// A built environment, dispatched by config kind.
pub enum BuiltEnv {
    Grid(HyperGridEnv),
    NGrams(NGramEnv),
}

impl ExperimentConfig {
    /// Parses TOML or JSON by extension; falls back to trying both.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let parsed = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str::<Self>(&text).map_err(|e| e.to_string()),
            Some("toml") => toml::from_str::<Self>(&text).map_err(|e| e.to_string()),
            _ => toml::from_str::<Self>(&text)
                .map_err(|e| e.to_string())
                .or_else(|toml_err| {
                    serde_json::from_str::<Self>(&text)
                        .map_err(|json_err| format!("as TOML: {toml_err}; as JSON: {json_err}"))
                }),
        };
        let cfg = parsed.map_err(|message| ConfigError::Parse {
            path: path.display().to_string(),
            message,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}-{}", self.env_label(), self.method.name))
    }

    pub fn env_label(&self) -> String {
        match self.env.kind.as_str() {
            "hypergrid" => self.env.objectives.join("-"),
            "ngrams" => format!("ngrams-{}", self.env.patterns.join("")),
            other => other.to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.build_env()?;
        self.train_method()?;
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("need at least one seed".into()));
        }
        if self.eval_samples == 0 {
            return Err(ConfigError::Invalid("eval_samples must be >= 1".into()));
        }
        Ok(())
    }

    pub fn build_env(&self) -> Result<BuiltEnv, ConfigError> {
        match self.env.kind.as_str() {
            "hypergrid" => {
                let d = self
                    .env
                    .d
                    .ok_or_else(|| ConfigError::Invalid("hypergrid needs d".into()))?;
                let h = self
                    .env
                    .h
                    .ok_or_else(|| ConfigError::Invalid("hypergrid needs h".into()))?;
                if self.env.objectives.is_empty() {
                    return Err(ConfigError::Invalid("hypergrid needs objectives".into()));
                }
                let objectives = self
                    .env
                    .objectives
                    .iter()
                    .map(|n| GridObjective::parse(n))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(BuiltEnv::Grid(HyperGridEnv::new(d, h, objectives)?))
            }
            "ngrams" => {
                let l = self
                    .env
                    .l
                    .ok_or_else(|| ConfigError::Invalid("ngrams needs l".into()))?;
                if self.env.patterns.is_empty() {
                    return Err(ConfigError::Invalid("ngrams needs patterns".into()));
                }
                Ok(BuiltEnv::NGrams(NGramEnv::with_alphabet(
                    l,
                    self.env.patterns.clone(),
                )?))
            }
            other => Err(ConfigError::Invalid(format!("unknown env kind {other}"))),
        }
    }

    pub fn reward_transform(&self) -> Result<RewardTransform, ConfigError> {
        match self.transform.kind.as_str() {
            "raw" => Ok(RewardTransform::Raw),
            "softmax" => Ok(RewardTransform::Softmax {
                gamma: self.transform.gamma,
            }),
            "indicator" => Ok(RewardTransform::IndicatorOfMax),
            other => Err(ConfigError::Invalid(format!("unknown transform {other}"))),
        }
    }

    pub fn train_method(&self) -> Result<TrainMethod, ConfigError> {
        let transform = self.reward_transform()?;
        let rule = match self.method.name.as_str() {
            "gr" => OrderRule::GlobalRank { max_rank: None },
            "gr-k" => {
                let k = self.method.max_rank.ok_or_else(|| {
                    ConfigError::Invalid("gr-k needs method.max_rank".into())
                })?;
                OrderRule::GlobalRank { max_rank: Some(k) }
            }
            "cheap-gr" => OrderRule::CheapGlobalRank,
            "nn" => OrderRule::NearestNeighbor {
                interpolate: false,
                metric: self.method.metric,
                normalize: self.method.normalize,
            },
            "nn-int" => OrderRule::NearestNeighbor {
                interpolate: true,
                metric: self.method.metric,
                normalize: self.method.normalize,
            },
            // The baseline has no reward transform to configure.
            "op-baseline" => return Ok(TrainMethod::OrderPreservingBaseline),
            other => return Err(ConfigError::Invalid(format!("unknown method {other}"))),
        };
        Ok(TrainMethod::OrderReward { rule, transform })
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            steps: self.training.steps,
            batch_size: self.training.batch_size,
            learning_rate: self.training.learning_rate,
            z_lr_ratio: self.training.z_lr_ratio,
            explore_eps: self.training.explore_eps,
            seed,
            snapshot_every: self.training.snapshot_every,
        }
    }

    pub fn replay_config(&self) -> Option<ReplayConfig> {
        if !self.replay.enabled {
            return None;
        }
        Some(ReplayConfig {
            capacity: self.replay.capacity,
            warmup: self.replay.warmup,
            pareto_ratio: self.replay.pareto_ratio,
            min_pareto_k: self.replay.min_pareto_k,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_toml() -> &'static str {
        r#"
            seeds = [0, 1]
            out_dir = "runs/demo"
            eval_samples = 64

            [env]
            kind = "hypergrid"
            d = 2
            h = 8
            objectives = ["branin", "currin"]

            [method]
            name = "gr"

            [transform]
            kind = "indicator"

            [training]
            steps = 10
            batch_size = 16
        "#
    }

    #[test]
    fn parse_roundtrip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, sample_toml()).unwrap();
        let cfg = ExperimentConfig::from_path(&path).unwrap();

        let reserialized = cfg.to_toml();
        let path2 = dir.path().join("cfg2.toml");
        std::fs::write(&path2, &reserialized).unwrap();
        let cfg2 = ExperimentConfig::from_path(&path2).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn json_is_accepted_equivalently() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("cfg.toml");
        std::fs::write(&toml_path, sample_toml()).unwrap();
        let cfg = ExperimentConfig::from_path(&toml_path).unwrap();

        let json_path = dir.path().join("cfg.json");
        std::fs::write(&json_path, serde_json::to_string(&cfg).unwrap()).unwrap();
        let cfg2 = ExperimentConfig::from_path(&json_path).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, format!("{}\ntypo_key = 1\n", sample_toml())).unwrap();
        assert!(ExperimentConfig::from_path(&path).is_err());
    }

    #[test]
    fn method_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        let bad = sample_toml().replace("name = \"gr\"", "name = \"gr-k\"");
        std::fs::write(&path, bad).unwrap();
        // gr-k without max_rank is rejected.
        assert!(ExperimentConfig::from_path(&path).is_err());
    }

    #[test]
    fn labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, sample_toml()).unwrap();
        let cfg = ExperimentConfig::from_path(&path).unwrap();
        assert_eq!(cfg.label(), "branin-currin-gr");
    }
}
