use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{fixture_digest, GatewayError, SamplingParams, Stage};

/// On-disk form of one recorded exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub stage: Stage,
    pub prompt: String,
    pub params: SamplingParams,
    pub completions: Vec<String>,
}

/// A directory of `<digest>.json` fixtures.
pub struct FixtureStore {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureStore {
            dir: dir.into(),
            write_lock: Mutex::new(()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn load(&self, stage: Stage, prompt: &str) -> Result<Fixture, GatewayError> {
        let digest = fixture_digest(stage, prompt);
        let path = self.path_for(&digest);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(GatewayError::ReplayMiss { stage, digest })
            }
            Err(e) => return Err(e.into()),
        };
        let fx: Fixture = serde_json::from_str(&text)
            .map_err(|e| GatewayError::Malformed(format!("{}: {e}", path.display())))?;
        if fx.stage != stage || fx.prompt != prompt {
            return Err(GatewayError::FixtureMismatch { digest });
        }
        Ok(fx)
    }

    /// Writes atomically: a temp file in the same directory, then rename.
    pub fn save(&self, fx: &Fixture) -> Result<PathBuf, GatewayError> {
        let digest = fixture_digest(fx.stage, &fx.prompt);
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(&digest);
        let tmp = self.dir.join(format!(".{digest}.{}.tmp", std::process::id()));
        let mut body = serde_json::to_string_pretty(fx)
            .map_err(|e| GatewayError::Malformed(e.to_string()))?;
        body.push('\n');
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(body.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(prompt: &str) -> Fixture {
        Fixture {
            stage: Stage::RowText,
            prompt: prompt.into(),
            params: SamplingParams {
                temperature: 0.4,
                top_p: 1.0,
                max_output_tokens: 512,
                n_samples: 2,
            },
            completions: vec!["rows: [1]".into(), "rows: [2]".into()],
        }
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::new(dir.path());
        let fx = fixture("p\u{e9}");
        let path = store.save(&fx).unwrap();
        assert!(path.file_name().unwrap().to_str().unwrap().len() == 21);
        assert_eq!(store.load(Stage::RowText, "p\u{e9}").unwrap(), fx);
    }

    #[test]
    fn miss_names_digest() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::new(dir.path());
        let err = store.load(Stage::ColSql, "nothing").unwrap_err();
        let digest = fixture_digest(Stage::ColSql, "nothing");
        assert!(err.to_string().contains(&digest));
        assert!(err.is_catastrophic());
    }

    #[test]
    fn tampered_fixture_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::new(dir.path());
        let fx = fixture("a");
        let path = store.save(&fx).unwrap();
        let mut other = fx.clone();
        other.prompt = "b".into();
        fs::write(&path, serde_json::to_string(&other).unwrap()).unwrap();
        assert!(matches!(
            store.load(Stage::RowText, "a"),
            Err(GatewayError::FixtureMismatch { .. })
        ));
    }
}
