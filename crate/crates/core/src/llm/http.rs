//! Chat-completion client with retry on transient failures.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Backend, GenerationParams, LlmError, DEFAULT_CONCURRENCY, ENV_API_KEY, ENV_ENDPOINT};

/// Exponential backoff: delay before retry `n` (0-based) is
/// `min(base_delay * 2^n, max_delay)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay_ms: 500,
            max_delay_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

#[derive(Debug, Clone)]
pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
    concurrency: usize,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

enum Attempt {
    Done(String),
    Transient { status: Option<u16>, message: String },
    Fatal(LlmError),
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            api_key,
            concurrency: DEFAULT_CONCURRENCY,
            retry: RetryPolicy::default(),
            agent,
        }
    }

    /// Reads `LLM_ENDPOINT` (required) and `LLM_API_KEY` (optional).
    pub fn from_env() -> Result<Self, LlmError> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .map_err(|_| LlmError::Config(format!("{ENV_ENDPOINT} is not set")))?;
        Ok(Self::new(endpoint, std::env::var(ENV_API_KEY).ok()))
    }

    pub fn with_concurrency(mut self, limit: usize) -> Self {
        self.concurrency = limit.max(1);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn attempt(&self, body: &serde_json::Value) -> Attempt {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Transient {
                    status: None,
                    message: e.to_string(),
                }
            }
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => {
                return Attempt::Transient {
                    status: Some(status),
                    message: e.to_string(),
                }
            }
        };
        if status == 429 || status >= 500 {
            return Attempt::Transient {
                status: Some(status),
                message: format!("status {status}: {}", truncate(&text, 200)),
            };
        }
        if !(200..300).contains(&status) {
            return Attempt::Fatal(LlmError::Http {
                status: Some(status),
                attempts: 1,
                message: format!("status {status}: {}", truncate(&text, 200)),
            });
        }
        match parse_completion(&text) {
            Ok(content) => Attempt::Done(content),
            Err(e) => Attempt::Fatal(e),
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

/// Extracts the first choice's message content.
pub(crate) fn parse_completion(body: &str) -> Result<String, LlmError> {
    let c: Completion =
        serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    c.choices
        .into_iter()
        .next()
        .and_then(|ch| ch.message.content)
        .ok_or_else(|| LlmError::MalformedResponse("no choices[0].message.content".into()))
}

pub(crate) fn request_body(prompt: &str, params: &GenerationParams) -> serde_json::Value {
    json!({
        "model": params.model_id,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": params.temperature,
        "max_tokens": params.max_new_tokens,
    })
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, LlmError> {
        let body = request_body(prompt, params);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(LlmError::Http {
                    status, message, ..
                }) => {
                    return Err(LlmError::Http {
                        status,
                        attempts,
                        message,
                    })
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Transient { status, message } => {
                    if attempts > self.retry.max_retries {
                        return Err(LlmError::Http {
                            status,
                            attempts,
                            message,
                        });
                    }
                    let delay = self.retry.delay(attempts - 1);
                    log::warn!("transient LLM failure ({message}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                }
            }
        }
    }

    fn concurrency_limit(&self) -> usize {
        self.concurrency
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Serves the given (status, body) responses in order, one per
    /// connection, and records each request body.
    fn serve(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                let mut auth = String::new();
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = line.trim().to_string();
                    }
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                log.lock()
                    .unwrap()
                    .push(format!("{auth}|{}", String::from_utf8(buf).unwrap()));
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (url, seen)
    }

    fn ok_body(content: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
    }

    fn fast_retry() -> RetryPolicy {
        RetryPolicy {
            max_retries: 2,
            base_delay_ms: 1,
            max_delay_ms: 2,
        }
    }

    #[test]
    fn sends_chat_completion_request() {
        let (url, seen) = serve(vec![(200, ok_body("hi there"))]);
        let backend = HttpBackend::new(url, Some("secret".into()));
        let params = GenerationParams::default();
        assert_eq!(backend.generate("Say hi", &params).unwrap(), "hi there");

        let req = seen.lock().unwrap()[0].clone();
        let (auth, body) = req.split_once('|').unwrap();
        assert_eq!(auth.to_ascii_lowercase(), "authorization: bearer secret");
        let v: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(v, request_body("Say hi", &params));
        assert_eq!(v["messages"][0]["role"], "user");
        assert_eq!(v["temperature"], 0.2);
        assert_eq!(v["max_tokens"], 256);
    }

    #[test]
    fn retries_transient_failures() {
        let (url, seen) = serve(vec![
            (500, "oops".into()),
            (429, "slow down".into()),
            (200, ok_body("finally")),
        ]);
        let backend = HttpBackend::new(url, None).with_retry(fast_retry());
        let out = backend.generate("p", &GenerationParams::default()).unwrap();
        assert_eq!(out, "finally");
        assert_eq!(seen.lock().unwrap().len(), 3);
    }

    #[test]
    fn gives_up_after_retry_budget() {
        let (url, _) = serve(vec![(503, "a".into()), (503, "b".into()), (503, "c".into())]);
        let backend = HttpBackend::new(url, None).with_retry(fast_retry());
        let err = backend.generate("p", &GenerationParams::default()).unwrap_err();
        assert!(matches!(err, LlmError::Http { status: Some(503), attempts: 3, .. }), "{err}");
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, seen) = serve(vec![(401, "no".into())]);
        let backend = HttpBackend::new(url, None).with_retry(fast_retry());
        let err = backend.generate("p", &GenerationParams::default()).unwrap_err();
        assert!(matches!(err, LlmError::Http { status: Some(401), attempts: 1, .. }));
        assert_eq!(seen.lock().unwrap().len(), 1);
    }

    #[test]
    fn malformed_bodies() {
        assert!(matches!(parse_completion("{}"), Err(LlmError::MalformedResponse(_))));
        assert!(matches!(
            parse_completion(r#"{"choices":[]}"#),
            Err(LlmError::MalformedResponse(_))
        ));
        assert!(matches!(parse_completion("not json"), Err(LlmError::MalformedResponse(_))));
        assert_eq!(parse_completion(&ok_body("x")).unwrap(), "x");
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(0), Duration::from_millis(500));
        assert_eq!(p.delay(1), Duration::from_millis(1000));
        assert_eq!(p.delay(10), Duration::from_millis(8000));
        assert_eq!(p.delay(200), Duration::from_millis(8000));
    }
}
