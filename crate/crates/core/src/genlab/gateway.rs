//! Text-in, text-out access to a language model.
//!
//! Three implementations: [`HttpGateway`] talks to an OpenAI-compatible
//! chat-completions endpoint, [`ReplayGateway`] serves responses recorded
//! earlier, and [`RecordingGateway`] wraps a live gateway and writes every
//! exchange into a replay directory. Recordings are keyed by the SHA-256 of
//! the prompt, so a replay only answers prompts it has seen byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const ENV_ENDPOINT: &str = "CFELO_GATEWAY_URL";
pub const ENV_CREDENTIAL: &str = "CFELO_GATEWAY_KEY";
pub const ENV_MODEL: &str = "CFELO_GATEWAY_MODEL";

#[derive(Debug, Error)]
pub enum GatewayError {
    /// Network-level failure; worth retrying.
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("no recorded response for prompt {key} in {dir}")]
    NotRecorded { key: String, dir: PathBuf },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("gateway configuration: {0}")]
    Config(String),
    #[error("recording i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayReply {
    pub text: String,
    /// Model that produced the text. Replays return the recorded label.
    pub model: String,
    /// RFC 3339 time the response was produced. Replays return the time of
    /// the original recording.
    pub received_at: String,
}

pub trait TextGateway: Send + Sync {
    /// Model label recorded for provenance.
    fn identity(&self) -> &str;
    fn send(&self, prompt: &str) -> Result<GatewayReply, GatewayError>;
}

impl<G: TextGateway + ?Sized> TextGateway for Box<G> {
    fn identity(&self) -> &str {
        (**self).identity()
    }

    fn send(&self, prompt: &str) -> Result<GatewayReply, GatewayError> {
        (**self).send(prompt)
    }
}

pub fn prompt_key(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// One stored exchange.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recording {
    pub model: String,
    pub prompt: String,
    pub response: String,
    pub recorded_at: String,
}

pub fn write_recording(dir: &Path, rec: &Recording) -> Result<PathBuf, GatewayError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.json", prompt_key(&rec.prompt)));
    fs::write(&path, crate::dataset::canonical_json(rec))?;
    Ok(path)
}

pub struct ReplayGateway {
    dir: PathBuf,
    identity: String,
}

impl ReplayGateway {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        let dir = dir.into();
        let identity = format!("replay:{}", dir.display());
        Self { dir, identity }
    }
}

impl TextGateway for ReplayGateway {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn send(&self, prompt: &str) -> Result<GatewayReply, GatewayError> {
        let key = prompt_key(prompt);
        let path = self.dir.join(format!("{key}.json"));
        let text = fs::read_to_string(&path).map_err(|_| GatewayError::NotRecorded {
            key: key.clone(),
            dir: self.dir.clone(),
        })?;
        let rec: Recording =
            serde_json::from_str(&text).map_err(|e| GatewayError::Protocol(format!("{}: {e}", path.display())))?;
        if rec.prompt != prompt {
            return Err(GatewayError::Protocol(format!(
                "{} was recorded for a different prompt",
                path.display()
            )));
        }
        Ok(GatewayReply {
            text: rec.response,
            model: rec.model,
            received_at: rec.recorded_at,
        })
    }
}

/// Tees a live gateway into a replay directory.
pub struct RecordingGateway<G> {
    inner: G,
    dir: PathBuf,
}

impl<G: TextGateway> RecordingGateway<G> {
    pub fn new(inner: G, dir: impl Into<PathBuf>) -> Self {
        Self { inner, dir: dir.into() }
    }
}

impl<G: TextGateway> TextGateway for RecordingGateway<G> {
    fn identity(&self) -> &str {
        self.inner.identity()
    }

    fn send(&self, prompt: &str) -> Result<GatewayReply, GatewayError> {
        let reply = self.inner.send(prompt)?;
        write_recording(
            &self.dir,
            &Recording {
                model: reply.model.clone(),
                prompt: prompt.to_owned(),
                response: reply.text.clone(),
                recorded_at: reply.received_at.clone(),
            },
        )?;
        Ok(reply)
    }
}

/// Retries transport failures a bounded number of times.
pub struct Retrying<G> {
    inner: G,
    retries: u32,
    backoff: Duration,
}

impl<G: TextGateway> Retrying<G> {
    pub fn new(inner: G, retries: u32) -> Self {
        Self {
            inner,
            retries,
            backoff: Duration::from_millis(250),
        }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }
}

impl<G: TextGateway> TextGateway for Retrying<G> {
    fn identity(&self) -> &str {
        self.inner.identity()
    }

    fn send(&self, prompt: &str) -> Result<GatewayReply, GatewayError> {
        let mut attempt = 0;
        loop {
            match self.inner.send(prompt) {
                Err(GatewayError::Transport(_)) if attempt < self.retries => {
                    thread::sleep(self.backoff * 2u32.pow(attempt.min(6)));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// OpenAI-style `chat/completions` client.
pub struct HttpGateway {
    endpoint: String,
    credential: Option<String>,
    model: String,
    client: reqwest::blocking::Client,
}

impl HttpGateway {
    pub fn new(
        endpoint: impl Into<String>,
        credential: Option<String>,
        model: impl Into<String>,
    ) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(600))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            credential,
            model: model.into(),
            client,
        })
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl TextGateway for HttpGateway {
    fn identity(&self) -> &str {
        &self.model
    }

    fn send(&self, prompt: &str) -> Result<GatewayReply, GatewayError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.credential {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(GatewayError::Transport(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(GatewayError::Protocol(format!("HTTP {status}")));
        }
        let parsed: ChatResponse = resp.json().map_err(|e| GatewayError::Protocol(e.to_string()))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| GatewayError::Protocol("response has no choices".into()))?;
        Ok(GatewayReply {
            text,
            model: self.model.clone(),
            received_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }
}

/// Where gateway settings come from: endpoint URL (or `replay:<dir>`),
/// credential and model label.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewaySettings {
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Never written to reports.
    #[serde(default, skip_serializing)]
    pub credential: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// Cap on concurrent gateway calls.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Write every live exchange here for later replay.
    #[serde(default)]
    pub record_dir: Option<PathBuf>,
}

fn default_retries() -> u32 {
    3
}

fn default_concurrency() -> usize {
    4
}

impl GatewaySettings {
    pub fn new() -> Self {
        Self {
            retries: default_retries(),
            concurrency: default_concurrency(),
            ..Self::default()
        }
    }

    /// Fills unset fields from the environment.
    pub fn with_env(mut self) -> Self {
        if let Ok(v) = std::env::var(ENV_ENDPOINT) {
            self.endpoint = Some(v);
        }
        if let Ok(v) = std::env::var(ENV_CREDENTIAL) {
            self.credential = Some(v);
        }
        if let Ok(v) = std::env::var(ENV_MODEL) {
            self.model = Some(v);
        }
        self
    }

    pub fn build(&self) -> Result<Box<dyn TextGateway>, GatewayError> {
        let endpoint = self
            .endpoint
            .as_deref()
            .ok_or_else(|| GatewayError::Config(format!("no endpoint; set {ENV_ENDPOINT} or use replay:<dir>")))?;
        if let Some(dir) = endpoint.strip_prefix("replay:") {
            return Ok(Box::new(ReplayGateway::new(dir)));
        }
        let model = self
            .model
            .clone()
            .ok_or_else(|| GatewayError::Config(format!("no model label; set {ENV_MODEL}")))?;
        let live = Retrying::new(
            HttpGateway::new(endpoint, self.credential.clone(), model)?,
            self.retries,
        );
        Ok(match &self.record_dir {
            Some(dir) => Box::new(RecordingGateway::new(live, dir.clone())),
            None => Box::new(live),
        })
    }
}
