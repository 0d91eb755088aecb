//! LLM access behind a content-addressed cache.
//!
//! A [`Gateway`] wraps one [`Backend`] (live HTTP, fixture replay, or a
//! recorder around another backend) and memoizes exchanges by a SHA-256 key
//! over the prompt and generation parameters.

mod http;
mod replay;

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prompt::RenderedPrompt;

pub use http::{HttpBackend, RetryPolicy};
pub use replay::{read_fixture, write_fixture, FixtureRecord, RecordBackend, ReplayBackend};

pub const DEFAULT_TEMPERATURE: f64 = 0.2;
pub const DEFAULT_MAX_NEW_TOKENS: u32 = 256;
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo-0613";
pub const DEFAULT_CONCURRENCY: usize = 4;

pub const ENV_ENDPOINT: &str = "LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "LLM_API_KEY";
pub const ENV_MODEL: &str = "LLM_MODEL";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("replay miss: no fixture entry for prompt hash {hash}")]
    ReplayMiss { hash: String },
    #[error("HTTP request failed after {attempts} attempt(s): {message}")]
    Http {
        status: Option<u16>,
        attempts: u32,
        message: String,
    },
    #[error("malformed response body: {0}")]
    MalformedResponse(String),
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("fixture {path}: {message}")]
    Fixture { path: PathBuf, message: String },
    #[error("backend configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub model_id: String,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: DEFAULT_TEMPERATURE,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            model_id: DEFAULT_MODEL.to_string(),
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(LlmError::InvalidParams(format!(
                "temperature must be finite and >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_new_tokens == 0 {
            return Err(LlmError::InvalidParams("max_new_tokens must be >= 1".into()));
        }
        if self.model_id.is_empty() {
            return Err(LlmError::InvalidParams("model_id must be non-empty".into()));
        }
        Ok(())
    }
}

/// Cache key: hex SHA-256 over the JSON encoding of the prompt and parameters.
pub fn cache_key(prompt: &str, params: &GenerationParams) -> String {
    #[derive(Serialize)]
    struct Key<'a> {
        prompt: &'a str,
        params: &'a GenerationParams,
    }
    let json = serde_json::to_vec(&Key { prompt, params }).expect("key serializes");
    hex::encode(Sha256::digest(&json))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub hash: String,
    pub prompt: String,
    pub params: GenerationParams,
    pub response: String,
    pub latency: Duration,
    pub backend: String,
    /// Unix seconds.
    pub timestamp: u64,
}

/// A source of completions.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, LlmError>;

    fn concurrency_limit(&self) -> usize {
        DEFAULT_CONCURRENCY
    }

    /// Replay reports zero latency so recorded cost reports stay reproducible.
    fn measures_latency(&self) -> bool {
        true
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, LlmError> {
        (**self).generate(prompt, params)
    }
    fn concurrency_limit(&self) -> usize {
        (**self).concurrency_limit()
    }
    fn measures_latency(&self) -> bool {
        (**self).measures_latency()
    }
}

/// Caching front end over a backend. Safe to share between threads.
pub struct Gateway {
    backend: Box<dyn Backend>,
    cache: Mutex<HashMap<String, LlmExchange>>,
    store: Option<Mutex<File>>,
    calls: AtomicUsize,
}

impl Gateway {
    pub fn new(backend: impl Backend + 'static) -> Self {
        Self {
            backend: Box::new(backend),
            cache: Mutex::new(HashMap::new()),
            store: None,
            calls: AtomicUsize::new(0),
        }
    }

    /// Persists the cache as JSON lines at `path`, loading existing entries.
    pub fn with_cache_file(mut self, path: &Path) -> Result<Self, LlmError> {
        let fixture_err = |message: String| LlmError::Fixture {
            path: path.to_path_buf(),
            message,
        };
        if path.exists() {
            let content = std::fs::read_to_string(path).map_err(|e| fixture_err(e.to_string()))?;
            let mut cache = self.cache.lock().expect("cache lock");
            for (i, line) in content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let ex: LlmExchange = serde_json::from_str(line)
                    .map_err(|e| fixture_err(format!("line {}: {e}", i + 1)))?;
                cache.entry(ex.hash.clone()).or_insert(ex);
            }
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| fixture_err(e.to_string()))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| fixture_err(e.to_string()))?;
        self.store = Some(Mutex::new(file));
        Ok(self)
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    /// Number of times the backend has been invoked.
    pub fn backend_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn query(
        &self,
        prompt: &RenderedPrompt,
        params: &GenerationParams,
    ) -> Result<LlmExchange, LlmError> {
        self.query_text(&prompt.text, params)
    }

    pub fn query_text(&self, prompt: &str, params: &GenerationParams) -> Result<LlmExchange, LlmError> {
        params.validate()?;
        let hash = cache_key(prompt, params);
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&hash) {
            return Ok(hit.clone());
        }

        self.calls.fetch_add(1, Ordering::SeqCst);
        let started = Instant::now();
        let response = self.backend.generate(prompt, params)?;
        let latency = if self.backend.measures_latency() {
            started.elapsed()
        } else {
            Duration::ZERO
        };
        let exchange = LlmExchange {
            hash: hash.clone(),
            prompt: prompt.to_string(),
            params: params.clone(),
            response,
            latency,
            backend: self.backend.name().to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        };

        let mut cache = self.cache.lock().expect("cache lock");
        if let Some(existing) = cache.get(&hash) {
            // another thread finished first
            return Ok(existing.clone());
        }
        if let Some(store) = &self.store {
            let line = serde_json::to_string(&exchange).expect("exchange serializes");
            let mut f = store.lock().expect("store lock");
            writeln!(f, "{line}").map_err(|e| LlmError::Config(format!("cache write: {e}")))?;
        }
        cache.insert(hash, exchange.clone());
        Ok(exchange)
    }

    /// Queries every prompt, at most `concurrency_limit` at a time. Output
    /// order matches input order; identical prompts hit the backend once.
    pub fn batch_query(
        &self,
        prompts: &[RenderedPrompt],
        params: &GenerationParams,
    ) -> Vec<Result<LlmExchange, LlmError>> {
        let texts: Vec<&str> = prompts.iter().map(|p| p.text.as_str()).collect();
        self.batch_query_text(&texts, params)
    }

    pub fn batch_query_text(
        &self,
        prompts: &[&str],
        params: &GenerationParams,
    ) -> Vec<Result<LlmExchange, LlmError>> {
        let mut slot_of: HashMap<&str, usize> = HashMap::new();
        let mut unique: Vec<&str> = Vec::new();
        let slots: Vec<usize> = prompts
            .iter()
            .map(|p| {
                *slot_of.entry(p).or_insert_with(|| {
                    unique.push(p);
                    unique.len() - 1
                })
            })
            .collect();

        let results: Vec<Mutex<Option<Result<LlmExchange, LlmError>>>> =
            unique.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.backend.concurrency_limit().max(1).min(unique.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= unique.len() {
                        break;
                    }
                    let r = self.query_text(unique[i], params);
                    *results[i].lock().expect("result lock") = Some(r);
                });
            }
        });
        let results: Vec<_> = results
            .into_iter()
            .map(|m| m.into_inner().expect("result lock").expect("every slot filled"))
            .collect();
        slots.into_iter().map(|s| results[s].clone()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BackendCost {
    pub count: usize,
    pub total_latency_secs: f64,
    pub mean_latency_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub count: usize,
    pub total_latency_secs: f64,
    pub mean_latency_secs: f64,
    pub per_backend: BTreeMap<String, BackendCost>,
}

pub fn cost_report<'a>(exchanges: impl IntoIterator<Item = &'a LlmExchange>) -> CostReport {
    let mut totals: BTreeMap<String, (usize, Duration)> = BTreeMap::new();
    let (mut count, mut total) = (0usize, Duration::ZERO);
    for ex in exchanges {
        count += 1;
        total += ex.latency;
        let e = totals.entry(ex.backend.clone()).or_default();
        e.0 += 1;
        e.1 += ex.latency;
    }
    let mean = |n: usize, d: Duration| if n == 0 { 0.0 } else { d.as_secs_f64() / n as f64 };
    CostReport {
        count,
        total_latency_secs: total.as_secs_f64(),
        mean_latency_secs: mean(count, total),
        per_backend: totals
            .into_iter()
            .map(|(name, (n, d))| {
                (
                    name,
                    BackendCost {
                        count: n,
                        total_latency_secs: d.as_secs_f64(),
                        mean_latency_secs: mean(n, d),
                    },
                )
            })
            .collect(),
    }
}
