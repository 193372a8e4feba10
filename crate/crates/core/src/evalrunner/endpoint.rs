//! Model endpoints: an HTTP chat-completions client, a closure-backed mock,
//! and record/replay fixtures for offline runs.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::PredictionTask;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EndpointError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("no recorded response for {0}")]
    Missing(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: Box<EndpointError> },
    #[error("configuration: {0}")]
    Config(String),
}

impl EndpointError {
    fn retryable(&self) -> bool {
        match self {
            EndpointError::Transport(_) => true,
            EndpointError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Something that answers prompts. `sample` numbers the repeated draws for
/// one task, starting at 0.
pub trait Endpoint: Sync {
    fn complete(&self, task: &PredictionTask, sample: usize) -> Result<String, EndpointError>;
}

/// Wraps an answer in the fenced block the extractor expects.
pub fn fenced(answer: &str) -> String {
    format!("```{}\n{}\n```\n", super::answer::ANSWER_LABEL, answer)
}

pub struct MockEndpoint<F> {
    respond: F,
}

impl<F> MockEndpoint<F>
where
    F: Fn(&PredictionTask, usize) -> String + Sync,
{
    pub fn new(respond: F) -> Self {
        MockEndpoint { respond }
    }
}

impl<F> Endpoint for MockEndpoint<F>
where
    F: Fn(&PredictionTask, usize) -> String + Sync,
{
    fn complete(&self, task: &PredictionTask, sample: usize) -> Result<String, EndpointError> {
        Ok((self.respond)(task, sample))
    }
}

/// A mock that always answers the expected output.
pub fn oracle_endpoint() -> MockEndpoint<impl Fn(&PredictionTask, usize) -> String + Sync> {
    MockEndpoint::new(|t: &PredictionTask, _| fenced(&t.expected_output))
}

/// Recorded responses keyed by `condition/task_id`, one per sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub responses: BTreeMap<String, Vec<String>>,
}

impl Fixture {
    pub fn key(task: &PredictionTask) -> String {
        format!("{}/{}", task.condition, task.task_id)
    }

    pub fn insert(&mut self, task: &PredictionTask, sample: usize, response: String) {
        let slot = self.responses.entry(Self::key(task)).or_default();
        if slot.len() <= sample {
            slot.resize(sample + 1, String::new());
        }
        slot[sample] = response;
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("fixture serializes") + "\n")
    }
}

pub struct ReplayEndpoint {
    fixture: Fixture,
}

impl ReplayEndpoint {
    pub fn new(fixture: Fixture) -> Self {
        ReplayEndpoint { fixture }
    }
}

impl Endpoint for ReplayEndpoint {
    fn complete(&self, task: &PredictionTask, sample: usize) -> Result<String, EndpointError> {
        let key = Fixture::key(task);
        self.fixture
            .responses
            .get(&key)
            .and_then(|v| v.get(sample))
            .cloned()
            .ok_or_else(|| EndpointError::Missing(format!("{key}#{sample}")))
    }
}

/// Passes requests through and keeps every successful response.
pub struct Recorder<E> {
    inner: E,
    log: Mutex<Fixture>,
}

impl<E: Endpoint> Recorder<E> {
    pub fn new(inner: E) -> Self {
        Recorder {
            inner,
            log: Mutex::new(Fixture::default()),
        }
    }

    pub fn into_fixture(self) -> Fixture {
        self.log.into_inner().expect("recorder lock")
    }
}

impl<E: Endpoint> Endpoint for Recorder<E> {
    fn complete(&self, task: &PredictionTask, sample: usize) -> Result<String, EndpointError> {
        let r = self.inner.complete(task, sample)?;
        self.log.lock().expect("recorder lock").insert(task, sample, r.clone());
        Ok(r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HttpConfig {
    /// Base URL up to and including the version segment, e.g. `https://host/v1`.
    pub base_url: String,
    pub api_key: String,
    pub model: String,
    pub temperature: f64,
    pub request_timeout: Duration,
    pub max_attempts: u32,
    pub backoff: Duration,
}

impl HttpConfig {
    /// Reads `NAMEOBF_BASE_URL`, `NAMEOBF_API_KEY` and `NAMEOBF_MODEL`.
    pub fn from_env() -> Result<Self, EndpointError> {
        let var = |k: &str| std::env::var(k).map_err(|_| EndpointError::Config(format!("{k} is not set")));
        Ok(HttpConfig {
            base_url: var("NAMEOBF_BASE_URL")?,
            api_key: var("NAMEOBF_API_KEY")?,
            model: var("NAMEOBF_MODEL")?,
            temperature: 0.8,
            request_timeout: Duration::from_secs(120),
            max_attempts: 5,
            backoff: Duration::from_millis(500),
        })
    }
}

pub struct HttpEndpoint {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpEndpoint {
    pub fn new(config: HttpConfig) -> Result<Self, EndpointError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| EndpointError::Config(e.to_string()))?;
        Ok(HttpEndpoint { config, client })
    }

    fn once(&self, prompt: &str) -> Result<String, EndpointError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let resp = self
            .client
            .post(url)
            .bearer_auth(&self.config.api_key)
            .json(&body)
            .send()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| EndpointError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(EndpointError::Status {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            });
        }
        message_content(&text)
    }
}

/// `choices[0].message.content` of a chat-completions response body.
pub fn message_content(body: &str) -> Result<String, EndpointError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| EndpointError::Malformed(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| EndpointError::Malformed("no choices[0].message.content".into()))
}

/// Calls `f` until it succeeds, a non-retryable error comes back, or the
/// attempts run out, doubling the pause each time.
pub fn with_retry<T>(
    max_attempts: u32,
    backoff: Duration,
    mut f: impl FnMut() -> Result<T, EndpointError>,
) -> Result<T, EndpointError> {
    let mut pause = backoff;
    let mut attempt = 0;
    loop {
        attempt += 1;
        match f() {
            Ok(v) => return Ok(v),
            Err(e) if e.retryable() && attempt < max_attempts => {
                std::thread::sleep(pause);
                pause = pause.saturating_mul(2);
            }
            Err(e) if e.retryable() => {
                return Err(EndpointError::RetriesExhausted {
                    attempts: attempt,
                    last: Box::new(e),
                })
            }
            Err(e) => return Err(e),
        }
    }
}

impl Endpoint for HttpEndpoint {
    fn complete(&self, task: &PredictionTask, _sample: usize) -> Result<String, EndpointError> {
        with_retry(self.config.max_attempts, self.config.backoff, || self.once(&task.prompt))
    }
}
