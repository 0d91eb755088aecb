//! The JSON run configuration. Relative paths are resolved against the
//! directory of the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use kgforge_core::enrich::entity::FREEBASE_BUDGET;
use kgforge_core::enrich::structure::DEFAULT_SAME_AS;
use kgforge_core::eval::{ModelKind, Norm, TrainConfig};
use kgforge_core::kg::LoadMode;
use kgforge_core::llm::{
    GenerationParams, DEFAULT_CONCURRENCY, DEFAULT_MAX_NEW_TOKENS, DEFAULT_MODEL, DEFAULT_TEMPERATURE,
    ENV_MODEL,
};
use kgforge_core::prompt::RelationMode;
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub gateway: GatewayConfig,
    #[serde(default)]
    pub generation: GenerationConfig,
    /// Optional template override file.
    #[serde(default)]
    pub templates: Option<PathBuf>,
    #[serde(default)]
    pub strategies: StrategiesConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub root: PathBuf,
    #[serde(default)]
    pub mode: LoadMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Replay,
    Record,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(default)]
    pub backend: BackendKind,
    /// Replay source, or record destination.
    #[serde(default)]
    pub fixture: Option<PathBuf>,
    /// Falls back to `LLM_ENDPOINT`.
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Persistent response cache (JSON lines).
    #[serde(default)]
    pub cache: Option<PathBuf>,
}

fn default_concurrency() -> usize {
    DEFAULT_CONCURRENCY
}

fn default_retries() -> u32 {
    3
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Replay,
            fixture: None,
            endpoint: None,
            concurrency: default_concurrency(),
            max_retries: default_retries(),
            cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_new_tokens: u32,
    /// Falls back to `LLM_MODEL`, then the built-in default.
    #[serde(default)]
    pub model_id: Option<String>,
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

fn default_max_tokens() -> u32 {
    DEFAULT_MAX_NEW_TOKENS
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            temperature: default_temperature(),
            max_new_tokens: default_max_tokens(),
            model_id: None,
        }
    }
}

impl GenerationConfig {
    pub fn params(&self) -> GenerationParams {
        let model_id = self
            .model_id
            .clone()
            .or_else(|| std::env::var(ENV_MODEL).ok().filter(|m| !m.is_empty()))
            .unwrap_or_else(|| DEFAULT_MODEL.to_string());
        GenerationParams {
            temperature: self.temperature,
            max_new_tokens: self.max_new_tokens,
            model_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategiesConfig {
    #[serde(default)]
    pub entity: EntityStrategy,
    #[serde(default)]
    pub relation: RelationStrategy,
    #[serde(default)]
    pub structure: StructureStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityStrategy {
    #[serde(default = "default_budget")]
    pub budget_tokens: usize,
}

fn default_budget() -> usize {
    FREEBASE_BUDGET
}

impl Default for EntityStrategy {
    fn default() -> Self {
        Self {
            budget_tokens: default_budget(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationStrategy {
    #[serde(default = "all_modes")]
    pub modes: BTreeSet<RelationMode>,
}

fn all_modes() -> BTreeSet<RelationMode> {
    RelationMode::ALL.into()
}

impl Default for RelationStrategy {
    fn default() -> Self {
        Self { modes: all_modes() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureStrategy {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_self_loop")]
    pub self_loop: bool,
    #[serde(default = "default_same_as")]
    pub same_as_relation: String,
}

fn default_k() -> usize {
    1
}

fn default_self_loop() -> bool {
    true
}

fn default_same_as() -> String {
    DEFAULT_SAME_AS.to_string()
}

impl Default for StructureStrategy {
    fn default() -> Self {
        Self {
            k: default_k(),
            self_loop: default_self_loop(),
            same_as_relation: default_same_as(),
        }
    }
}

/// Training settings for `eval`; the seed comes from the top-level `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "d_kind")]
    pub kind: ModelKind,
    #[serde(default = "d_norm")]
    pub norm: Norm,
    #[serde(default = "d_dim")]
    pub dim: usize,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_lr")]
    pub learning_rate: f64,
    #[serde(default = "d_margin")]
    pub margin: f64,
    #[serde(default = "d_negatives")]
    pub negatives_per_positive: usize,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_l2")]
    pub l2_reg: f64,
    #[serde(default = "d_seeds")]
    pub n_seeds: usize,
}

fn d_kind() -> ModelKind {
    TrainConfig::default().kind
}
fn d_norm() -> Norm {
    TrainConfig::default().norm
}
fn d_dim() -> usize {
    TrainConfig::default().dim
}
fn d_epochs() -> usize {
    TrainConfig::default().epochs
}
fn d_lr() -> f64 {
    TrainConfig::default().learning_rate
}
fn d_margin() -> f64 {
    TrainConfig::default().margin
}
fn d_negatives() -> usize {
    TrainConfig::default().negatives_per_positive
}
fn d_batch() -> usize {
    TrainConfig::default().batch_size
}
fn d_l2() -> f64 {
    TrainConfig::default().l2_reg
}
fn d_seeds() -> usize {
    5
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            kind: d_kind(),
            norm: d_norm(),
            dim: d_dim(),
            epochs: d_epochs(),
            learning_rate: d_lr(),
            margin: d_margin(),
            negatives_per_positive: d_negatives(),
            batch_size: d_batch(),
            l2_reg: d_l2(),
            n_seeds: d_seeds(),
        }
    }
}

impl EvalConfig {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            kind: self.kind,
            norm: self.norm,
            dim: self.dim,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            margin: self.margin,
            negatives_per_positive: self.negatives_per_positive,
            batch_size: self.batch_size,
            l2_reg: self.l2_reg,
            seed,
        }
    }
}

impl RunConfig {
    /// A config with defaults everywhere except the dataset root.
    pub fn for_dataset(root: impl Into<PathBuf>) -> Self {
        Self {
            dataset: DatasetConfig {
                root: root.into(),
                mode: LoadMode::Strict,
            },
            gateway: GatewayConfig::default(),
            generation: GenerationConfig::default(),
            templates: None,
            strategies: StrategiesConfig::default(),
            eval: EvalConfig::default(),
            output: default_output(),
            seed: default_seed(),
        }
    }

    /// Reads, resolves relative paths and validates.
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset.root);
        fix(&mut self.output);
        if let Some(p) = self.templates.as_mut() {
            fix(p);
        }
        if let Some(p) = self.gateway.fixture.as_mut() {
            fix(p);
        }
        if let Some(p) = self.gateway.cache.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        let bad = |m: String| Err(UsageError(m));
        if !self.dataset.root.is_dir() {
            return bad(format!("dataset root {} is not a directory", self.dataset.root.display()));
        }
        if let Some(t) = &self.templates {
            if !t.is_file() {
                return bad(format!("template file {} does not exist", t.display()));
            }
        }
        match self.gateway.backend {
            BackendKind::Replay => match &self.gateway.fixture {
                None => return bad("replay backend needs gateway.fixture".into()),
                Some(f) if !f.is_file() => return bad(format!("fixture {} does not exist", f.display())),
                _ => {}
            },
            BackendKind::Record => {
                if self.gateway.fixture.is_none() {
                    return bad("record backend needs gateway.fixture as destination".into());
                }
            }
            BackendKind::Http => {}
        }
        if self.gateway.concurrency == 0 {
            return bad("gateway.concurrency must be >= 1".into());
        }
        self.generation
            .params()
            .validate()
            .map_err(|e| UsageError(e.to_string()))?;
        if self.strategies.entity.budget_tokens == 0 {
            return bad("strategies.entity.budget_tokens must be >= 1".into());
        }
        if self.strategies.relation.modes.is_empty() {
            return bad("strategies.relation.modes must not be empty".into());
        }
        if self.strategies.structure.k == 0 {
            return bad("strategies.structure.k must be >= 1".into());
        }
        if self.eval.n_seeds == 0 {
            return bad("eval.n_seeds must be >= 1".into());
        }
        self.eval
            .train_config(self.seed)
            .validate()
            .map_err(|e| UsageError(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, json: &str) -> PathBuf {
        let p = dir.join("run.json");
        std::fs::write(&p, json).unwrap();
        p
    }

    #[test]
    fn minimal_config_gets_defaults_and_resolved_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("data")).unwrap();
        std::fs::write(dir.path().join("fx.jsonl"), "").unwrap();
        let p = write(dir.path(), r#"{"dataset": {"root": "data"}, "gateway": {"fixture": "fx.jsonl"}}"#);
        let cfg = RunConfig::load(&p).unwrap();
        assert_eq!(cfg.dataset.root, dir.path().join("data"));
        assert_eq!(cfg.output, dir.path().join("out"));
        assert_eq!(cfg.strategies.structure.k, 1);
        assert_eq!(cfg.strategies.relation.modes.len(), 3);
        assert_eq!(cfg.generation.temperature, 0.2);
        assert_eq!(cfg.eval.train_config(cfg.seed).seed, 7);
    }

    #[test]
    fn validation_failures() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), r#"{"dataset": {"root": "missing"}}"#);
        assert!(RunConfig::load(&p).unwrap_err().0.contains("not a directory"));

        std::fs::create_dir(dir.path().join("d")).unwrap();
        let p = write(dir.path(), r#"{"dataset": {"root": "d"}}"#);
        assert!(RunConfig::load(&p).unwrap_err().0.contains("fixture"));

        let p = write(dir.path(), r#"{"dataset": {"root": "d"}, "bogus": 1}"#);
        assert!(RunConfig::load(&p).unwrap_err().0.contains("unknown field"));

        let p = write(
            dir.path(),
            r#"{"dataset": {"root": "d"}, "gateway": {"backend": "http"}, "eval": {"dim": 0}}"#,
        );
        assert!(RunConfig::load(&p).unwrap_err().0.contains("dim"));
    }
}
