//! Run configuration: a JSON file, with relative paths resolved against
//! the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::dataset::DatasetFormat;
use crate::eval::metrics::Thresholds;
use crate::llm::{
    BackendKind, CompletionBackend, Gateway, GatewayError, HttpBackend, HttpConfig, Recorder,
    ReplayBackend, Script, ScriptedBackend, Stage,
};
use crate::pipeline::{PipelineOptions, DEFAULT_SCHEMA_TOKEN_BUDGET};
use crate::profile::{ModelFamily, Profile, TaskKind};
use crate::prompt::Templates;
use crate::extract::ExtractionMode;
use crate::reason::{default_math_keywords, ReasoningMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: DatasetFormat,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Upstream {
    #[default]
    Live,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Read by replay, written by record.
    pub fixtures_dir: Option<PathBuf>,
    /// What a recording run forwards to.
    pub upstream: Upstream,
    /// Script for the scripted backend or a scripted upstream.
    pub script: Option<PathBuf>,
    pub http: HttpConfig,
    pub max_in_flight: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Replay,
            fixtures_dir: None,
            upstream: Upstream::Live,
            script: None,
            http: HttpConfig::default(),
            max_in_flight: 4,
        }
    }
}

/// Partial per-stage override applied on top of the default profile.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub examples: Option<usize>,
}

fn default_concurrency() -> usize {
    4
}

fn default_budget() -> usize {
    DEFAULT_SCHEMA_TOKEN_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetConfig>,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub model_family: ModelFamily,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub stage_overrides: BTreeMap<Stage, StageOverride>,
    #[serde(default)]
    pub extraction_mode: ExtractionMode,
    #[serde(default)]
    pub reasoning_mode: ReasoningMode,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_budget")]
    pub schema_token_budget: usize,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Shuffles dispatch order only; results do not depend on it.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates_dir: Option<PathBuf>,
    #[serde(default = "default_math_keywords")]
    pub math_keywords: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            backend: BackendConfig::default(),
            model_family: ModelFamily::default(),
            stage_overrides: BTreeMap::new(),
            extraction_mode: ExtractionMode::default(),
            reasoning_mode: ReasoningMode::default(),
            thresholds: Thresholds::default(),
            schema_token_budget: DEFAULT_SCHEMA_TOKEN_BUDGET,
            concurrency: default_concurrency(),
            output_dir: None,
            seed: None,
            templates_dir: None,
            math_keywords: default_math_keywords(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Makes every relative path relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(d) = &mut self.dataset {
            resolve(base, &mut d.path);
        }
        for p in [
            self.backend.fixtures_dir.as_mut(),
            self.backend.script.as_mut(),
            self.output_dir.as_mut(),
            self.templates_dir.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p);
        }
    }

    pub fn profile_for(&self, task: TaskKind) -> Profile {
        let mut p = Profile::default_for(self.model_family, task);
        for (&stage, o) in &self.stage_overrides {
            let sp = p.get_mut(stage);
            if let Some(v) = o.temperature {
                sp.params.temperature = v;
            }
            if let Some(v) = o.top_p {
                sp.params.top_p = v;
            }
            if let Some(v) = o.max_output_tokens {
                sp.params.max_output_tokens = v;
            }
            if let Some(v) = o.n_samples {
                sp.params.n_samples = v;
            }
            if let Some(v) = o.examples {
                sp.examples = v;
            }
        }
        p
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            extraction: self.extraction_mode,
            reasoning: self.reasoning_mode,
            schema_token_budget: self.schema_token_budget,
            math_keywords: self.math_keywords.clone(),
        }
    }

    /// `extraction=<mode> reasoning=<mode>`, used to tell runs apart.
    pub fn label(&self) -> String {
        format!(
            "extraction={} reasoning={}",
            self.extraction_mode, self.reasoning_mode
        )
    }

    /// Checks everything needed to answer questions; datasets and output
    /// paths are checked by the run loop.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for task in TaskKind::ALL {
            self.profile_for(task).validate()?;
        }
        if self.concurrency == 0 || self.backend.max_in_flight == 0 {
            return Err(ConfigError::Invalid(
                "concurrency and max_in_flight must be positive".into(),
            ));
        }
        if self.schema_token_budget == 0 {
            return Err(ConfigError::Invalid("schema_token_budget must be positive".into()));
        }
        if self.thresholds.small_below > self.thresholds.large_above + 1 {
            return Err(ConfigError::Invalid(
                "thresholds.small_below exceeds thresholds.large_above".into(),
            ));
        }
        let b = &self.backend;
        match b.kind {
            BackendKind::Replay => match &b.fixtures_dir {
                Some(d) if d.is_dir() => {}
                Some(d) => {
                    return Err(ConfigError::Invalid(format!(
                        "fixtures directory {} does not exist",
                        d.display()
                    )))
                }
                None => return Err(ConfigError::Invalid("replay needs backend.fixtures_dir".into())),
            },
            BackendKind::Record => {
                if b.fixtures_dir.is_none() {
                    return Err(ConfigError::Invalid("record needs backend.fixtures_dir".into()));
                }
                match b.upstream {
                    Upstream::Live => self.check_credentials()?,
                    Upstream::Scripted => self.check_script()?,
                }
            }
            BackendKind::Live => self.check_credentials()?,
            BackendKind::Scripted => self.check_script()?,
        }
        Ok(())
    }

    fn check_credentials(&self) -> Result<(), ConfigError> {
        let var = &self.backend.http.api_key_env;
        match std::env::var(var) {
            Ok(k) if !k.trim().is_empty() => Ok(()),
            _ => Err(ConfigError::Invalid(format!(
                "live calls need credentials in ${var}"
            ))),
        }
    }

    fn check_script(&self) -> Result<(), ConfigError> {
        match &self.backend.script {
            Some(p) if p.is_file() => Ok(()),
            Some(p) => Err(ConfigError::Invalid(format!("script {} not found", p.display()))),
            None => Err(ConfigError::Invalid("scripted backend needs backend.script".into())),
        }
    }

    pub fn build_gateway(&self) -> Result<Gateway, ConfigError> {
        let b = &self.backend;
        let scripted = || -> Result<ScriptedBackend, ConfigError> {
            let path = b
                .script
                .as_ref()
                .ok_or_else(|| ConfigError::Invalid("scripted backend needs backend.script".into()))?;
            Ok(ScriptedBackend::new(Script::load(path)?))
        };
        let fixtures = || {
            b.fixtures_dir
                .clone()
                .ok_or_else(|| ConfigError::Invalid("backend.fixtures_dir is required".into()))
        };
        let backend: Box<dyn CompletionBackend> = match b.kind {
            BackendKind::Replay => Box::new(ReplayBackend::new(fixtures()?)),
            BackendKind::Scripted => Box::new(scripted()?),
            BackendKind::Live => Box::new(HttpBackend::new(b.http.clone())?),
            BackendKind::Record => {
                let inner: Box<dyn CompletionBackend> = match b.upstream {
                    Upstream::Live => Box::new(HttpBackend::new(b.http.clone())?),
                    Upstream::Scripted => Box::new(scripted()?),
                };
                Box::new(Recorder::new(inner, fixtures()?))
            }
        };
        Ok(Gateway::new(backend, b.max_in_flight))
    }

    pub fn templates(&self) -> Result<Templates, ConfigError> {
        match &self.templates_dir {
            Some(dir) => Templates::with_overrides(dir).map_err(|source| ConfigError::Io {
                path: dir.clone(),
                source,
            }),
            None => Ok(Templates::builtin()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.schema_token_budget, 3000);
        assert_eq!(cfg.math_keywords.len(), 15);
        let partial: RunConfig =
            serde_json::from_str(r#"{"backend": {"http": {"model": "m", "retry": {"max_attempts": 2}}}}"#).unwrap();
        assert_eq!(partial.backend.http.model, "m");
        assert_eq!(partial.backend.http.api_key_env, "OPENAI_API_KEY");
        assert_eq!(partial.backend.http.retry.max_attempts, 2);
    }

    #[test]
    fn overrides_apply_to_every_task() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"stage_overrides": {"reason_text": {"n_samples": 2}}}"#).unwrap();
        for t in TaskKind::ALL {
            let p = cfg.profile_for(t);
            assert_eq!(p.reason_text.params.n_samples, 2);
            assert_eq!(p.reason_text.params.max_output_tokens, 256);
        }
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"dataset": {"path": "data.jsonl"}, "output_dir": "out", "backend": {"fixtures_dir": "/abs"}}"#,
        )
        .unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.dataset.unwrap().path, dir.path().join("data.jsonl"));
        assert_eq!(cfg.output_dir.unwrap(), dir.path().join("out"));
        assert_eq!(cfg.backend.fixtures_dir.unwrap(), PathBuf::from("/abs"));
    }

    #[test]
    fn replay_without_fixtures_is_invalid() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_err());
        cfg.backend.fixtures_dir = Some(PathBuf::from("/definitely/not/here"));
        assert!(cfg.validate().is_err());
        let dir = tempfile::tempdir().unwrap();
        cfg.backend.fixtures_dir = Some(dir.path().to_path_buf());
        cfg.validate().unwrap();
    }

    #[test]
    fn record_live_needs_key() {
        let mut cfg = RunConfig::default();
        cfg.backend.kind = BackendKind::Record;
        cfg.backend.fixtures_dir = Some(PathBuf::from("fx"));
        cfg.backend.http.api_key_env = "TABREASON_TEST_UNSET_KEY".into();
        assert!(cfg.validate().unwrap_err().to_string().contains("TABREASON_TEST_UNSET_KEY"));
    }
}
