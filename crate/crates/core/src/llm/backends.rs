use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackendKind, CompletionBackend, Fixture, FixtureStore, GatewayError, SamplingParams, Stage};

/// Serves completions from a fixture directory; a missing fixture is an error.
pub struct ReplayBackend {
    store: FixtureStore,
}

impl ReplayBackend {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        ReplayBackend {
            store: FixtureStore::new(dir.as_ref()),
        }
    }
}

impl CompletionBackend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn complete(
        &self,
        stage: Stage,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<Vec<String>, GatewayError> {
        let fx = self.store.load(stage, prompt)?;
        let n = params.n_samples as usize;
        if fx.completions.len() < n {
            return Err(GatewayError::SampleCount {
                expected: params.n_samples,
                got: fx.completions.len(),
            });
        }
        Ok(fx.completions.into_iter().take(n).collect())
    }
}

/// Forwards to an upstream backend and stores every response as a fixture.
pub struct Recorder<B> {
    inner: B,
    store: FixtureStore,
}

impl<B: CompletionBackend> Recorder<B> {
    pub fn new(inner: B, dir: impl AsRef<Path>) -> Self {
        Recorder {
            inner,
            store: FixtureStore::new(dir.as_ref()),
        }
    }
}

impl<B: CompletionBackend> CompletionBackend for Recorder<B> {
    fn kind(&self) -> BackendKind {
        BackendKind::Record
    }

    fn complete(
        &self,
        stage: Stage,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<Vec<String>, GatewayError> {
        let completions = self.inner.complete(stage, prompt, params)?;
        self.store.save(&Fixture {
            stage,
            prompt: prompt.to_string(),
            params: *params,
            completions: completions.clone(),
        })?;
        Ok(completions)
    }
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for Box<B> {
    fn kind(&self) -> BackendKind {
        (**self).kind()
    }

    fn complete(
        &self,
        stage: Stage,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<Vec<String>, GatewayError> {
        (**self).complete(stage, prompt, params)
    }
}

/// A canned response keyed on stage and a prompt substring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    pub completions: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Script {
    pub rules: Vec<ScriptRule>,
}

impl Script {
    pub fn load(path: impl AsRef<Path>) -> Result<Script, GatewayError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| GatewayError::Config(format!("script {}: {e}", path.display())))
    }

    pub fn rule(mut self, stage: Stage, contains: &str, completions: &[&str]) -> Self {
        self.rules.push(ScriptRule {
            stage: Some(stage),
            contains: (!contains.is_empty()).then(|| contains.to_string()),
            completions: completions.iter().map(|s| s.to_string()).collect(),
        });
        self
    }
}

/// Deterministic offline backend driven by a [`Script`]. The first matching
/// rule answers; its completions are cycled to fill `n_samples`.
pub struct ScriptedBackend {
    script: Script,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Self {
        ScriptedBackend { script }
    }
}

impl CompletionBackend for ScriptedBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }

    fn complete(
        &self,
        stage: Stage,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<Vec<String>, GatewayError> {
        let rule = self
            .script
            .rules
            .iter()
            .find(|r| {
                r.stage.is_none_or(|s| s == stage)
                    && r.contains.as_deref().is_none_or(|c| prompt.contains(c))
                    && !r.completions.is_empty()
            })
            .ok_or_else(|| {
                GatewayError::Config(format!(
                    "no script rule matches {stage} prompt {}",
                    super::fixture_digest(stage, prompt)
                ))
            })?;
        Ok(rule
            .completions
            .iter()
            .cycle()
            .take(params.n_samples as usize)
            .cloned()
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::Gateway;

    fn params(n: u32) -> SamplingParams {
        SamplingParams {
            temperature: 0.3,
            top_p: 1.0,
            max_output_tokens: 64,
            n_samples: n,
        }
    }

    #[test]
    fn scripted_first_match_and_cycling() {
        let script = Script::default()
            .rule(Stage::ColSql, "year", &["SELECT year FROM w"])
            .rule(Stage::ColSql, "", &["SELECT * FROM w"]);
        let b = ScriptedBackend::new(script);
        assert_eq!(
            b.complete(Stage::ColSql, "which year", &params(2)).unwrap(),
            ["SELECT year FROM w", "SELECT year FROM w"]
        );
        assert_eq!(
            b.complete(Stage::ColSql, "other", &params(1)).unwrap(),
            ["SELECT * FROM w"]
        );
        assert!(b.complete(Stage::RowSql, "x", &params(1)).is_err());
    }

    #[test]
    fn record_then_replay_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let script = Script::default().rule(Stage::RowText, "", &["rows: [1]", "rows: [2]"]);
        let rec = Gateway::new(
            Box::new(Recorder::new(ScriptedBackend::new(script), dir.path())),
            2,
        );
        let a = rec.complete(Stage::RowText, "prompt", &params(2)).unwrap();
        let rep = Gateway::new(Box::new(ReplayBackend::new(dir.path())), 2);
        let b = rep.complete(Stage::RowText, "prompt", &params(2)).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(rep.kind(), BackendKind::Replay);

        let miss = rep.complete(Stage::RowText, "prompt!", &params(1)).unwrap_err();
        assert!(matches!(miss, GatewayError::ReplayMiss { .. }));
    }

    #[test]
    fn replay_short_fixture_is_sample_count_error() {
        let dir = tempfile::tempdir().unwrap();
        let script = Script::default().rule(Stage::ColText, "", &["columns: ['a']"]);
        Recorder::new(ScriptedBackend::new(script), dir.path())
            .complete(Stage::ColText, "p", &params(1))
            .unwrap();
        let err = ReplayBackend::new(dir.path())
            .complete(Stage::ColText, "p", &params(3))
            .unwrap_err();
        assert!(matches!(err, GatewayError::SampleCount { expected: 3, got: 1 }));
    }
}
