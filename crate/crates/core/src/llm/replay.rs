use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{cache_key, Backend, GenerationParams, LlmError};

/// One line of a fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub hash: String,
    pub prompt: String,
    pub params: GenerationParams,
    pub response: String,
}

impl FixtureRecord {
    pub fn new(prompt: impl Into<String>, params: &GenerationParams, response: impl Into<String>) -> Self {
        let prompt = prompt.into();
        Self {
            hash: cache_key(&prompt, params),
            prompt,
            params: params.clone(),
            response: response.into(),
        }
    }
}

fn fixture_err(path: &Path, message: impl Into<String>) -> LlmError {
    LlmError::Fixture {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a JSON-lines fixture, checking every stored hash.
pub fn read_fixture(path: &Path) -> Result<Vec<FixtureRecord>, LlmError> {
    let content = std::fs::read_to_string(path).map_err(|e| fixture_err(path, e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: FixtureRecord = serde_json::from_str(line)
            .map_err(|e| fixture_err(path, format!("line {}: {e}", i + 1)))?;
        if rec.hash != cache_key(&rec.prompt, &rec.params) {
            return Err(fixture_err(
                path,
                format!("line {}: hash does not match prompt and params", i + 1),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_fixture(path: &Path, records: &[FixtureRecord]) -> Result<(), LlmError> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("record serializes"));
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| fixture_err(path, e.to_string()))
}

/// Serves responses from a fixture; never touches the network.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    records: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::from_records(read_fixture(path)?))
    }

    /// The first record for a hash wins.
    pub fn from_records(records: impl IntoIterator<Item = FixtureRecord>) -> Self {
        let mut map = HashMap::new();
        for r in records {
            map.entry(r.hash).or_insert(r.response);
        }
        Self { records: map }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, LlmError> {
        let hash = cache_key(prompt, params);
        self.records
            .get(&hash)
            .cloned()
            .ok_or(LlmError::ReplayMiss { hash })
    }

    fn measures_latency(&self) -> bool {
        false
    }
}

/// Wraps a backend and appends every successful exchange to a fixture file.
pub struct RecordBackend<B> {
    inner: B,
    path: PathBuf,
    file: Mutex<File>,
}

impl<B: Backend> RecordBackend<B> {
    pub fn new(inner: B, path: &Path) -> Result<Self, LlmError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| fixture_err(path, e.to_string()))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| fixture_err(path, e.to_string()))?;
        Ok(Self {
            inner,
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }
}

impl<B: Backend> Backend for RecordBackend<B> {
    fn name(&self) -> &str {
        "record"
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, LlmError> {
        let response = self.inner.generate(prompt, params)?;
        let line = serde_json::to_string(&FixtureRecord::new(prompt, params, response.as_str()))
            .expect("record serializes");
        let mut f = self.file.lock().expect("fixture lock");
        writeln!(f, "{line}").map_err(|e| fixture_err(&self.path, e.to_string()))?;
        Ok(response)
    }

    fn concurrency_limit(&self) -> usize {
        self.inner.concurrency_limit()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::Gateway;
    use crate::prompt::{render_entity_prompt, RenderedPrompt};

    fn params() -> GenerationParams {
        GenerationParams::default()
    }

    #[test]
    fn replay_returns_fixture_verbatim() {
        let prompt = render_entity_prompt("Michael Bay").unwrap();
        let backend = ReplayBackend::from_records([FixtureRecord::new(
            prompt.text.clone(),
            &params(),
            "Michael Bay is a director...",
        )]);
        let gw = Gateway::new(backend);
        let ex = gw.query(&prompt, &params()).unwrap();
        assert_eq!(ex.response, "Michael Bay is a director...");
        assert_eq!(ex.backend, "replay");
        assert!(ex.latency.is_zero());
    }

    #[test]
    fn replay_miss_names_the_hash() {
        let gw = Gateway::new(ReplayBackend::from_records([]));
        let err = gw.query_text("absent", &params()).unwrap_err();
        let hash = cache_key("absent", &params());
        assert_eq!(err, LlmError::ReplayMiss { hash: hash.clone() });
        assert!(err.to_string().contains(&hash));
    }

    #[test]
    fn replay_key_includes_params() {
        let backend = ReplayBackend::from_records([FixtureRecord::new("p", &params(), "r")]);
        let hot = GenerationParams {
            temperature: 1.0,
            ..params()
        };
        assert!(backend.generate("p", &params()).is_ok());
        assert!(matches!(backend.generate("p", &hot), Err(LlmError::ReplayMiss { .. })));
    }

    #[test]
    fn batch_reports_middle_miss() {
        let recs = ["a", "c"].map(|p| FixtureRecord::new(p, &params(), format!("resp {p}")));
        let gw = Gateway::new(ReplayBackend::from_records(recs));
        let prompts: Vec<RenderedPrompt> = ["a", "b", "c"]
            .iter()
            .map(|t| RenderedPrompt {
                strategy: crate::prompt::Strategy::EntityExpand,
                subject_id: None,
                text: t.to_string(),
            })
            .collect();
        let out = gw.batch_query(&prompts, &params());
        assert_eq!(out[0].as_ref().unwrap().response, "resp a");
        assert!(matches!(out[1], Err(LlmError::ReplayMiss { .. })));
        assert_eq!(out[2].as_ref().unwrap().response, "resp c");
    }

    #[test]
    fn fixture_file_round_trip_and_hash_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.jsonl");
        let recs = vec![
            FixtureRecord::new("x", &params(), "one"),
            FixtureRecord::new("y\nz", &params(), "two"),
        ];
        write_fixture(&path, &recs).unwrap();
        assert_eq!(read_fixture(&path).unwrap(), recs);

        let mut bad = recs[0].clone();
        bad.prompt = "tampered".into();
        write_fixture(&path, &[bad]).unwrap();
        assert!(matches!(read_fixture(&path), Err(LlmError::Fixture { .. })));
    }

    #[test]
    fn record_then_replay_reproduces_responses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.jsonl");
        let live = ReplayBackend::from_records([
            FixtureRecord::new("q1", &params(), "r1"),
            FixtureRecord::new("q2", &params(), "r2"),
        ]);
        let gw = Gateway::new(RecordBackend::new(live, &path).unwrap());
        gw.query_text("q1", &params()).unwrap();
        gw.query_text("q2", &params()).unwrap();
        gw.query_text("q1", &params()).unwrap();
        drop(gw);

        let recorded = read_fixture(&path).unwrap();
        assert_eq!(recorded.len(), 2);
        let replay = Gateway::new(ReplayBackend::open(&path).unwrap());
        assert_eq!(replay.query_text("q2", &params()).unwrap().response, "r2");
    }
}
