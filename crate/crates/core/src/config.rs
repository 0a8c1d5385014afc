//! Run configuration.
//!
//! Settings come from four layers, later ones winning: built-in defaults, a
//! TOML file, `CFELO_*` environment variables, and explicit overrides (the
//! command line). Unknown keys in the file are an error.
//!
//! ```toml
//! wrong_cost = 10
//! submission_minute = 0
//! tie_mode = "pessimistic"
//! default_time_limit_ms = 2000
//! verifier_time_limit_ms = 10000
//! workers = 4
//! test_count = 20
//!
//! [search]
//! lo = 0.0
//! hi = 5000.0
//! tolerance = 1e-6
//! max_iterations = 200
//!
//! [submission_offsets]
//! C = 45
//!
//! [gateway]
//! endpoint = "replay:recordings"
//! model = "some-model"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::canonical_json;
use crate::genlab::{GatewaySettings, DEFAULT_TEST_COUNT};
use crate::judge::{RunLimits, DEFAULT_TIME_LIMIT_MS};
use crate::rating::SearchParams;
use crate::standings::{ScoringRules, TieMode, DEFAULT_WRONG_COST};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("environment variable {var}: cannot parse `{value}`")]
    Env { var: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Penalty minutes per rejected submission before an accepted one.
    pub wrong_cost: u32,
    /// Solve minute given to every accepted model submission.
    pub submission_minute: u32,
    pub submission_offsets: BTreeMap<String, u32>,
    pub tie_mode: TieMode,
    pub search: SearchParams,
    /// Time limit for problems whose statement does not give one.
    pub default_time_limit_ms: u64,
    pub verifier_time_limit_ms: u64,
    pub workers: usize,
    /// Inputs requested per problem during generation.
    pub test_count: usize,
    pub gateway: GatewaySettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            wrong_cost: DEFAULT_WRONG_COST,
            submission_minute: 0,
            submission_offsets: BTreeMap::new(),
            tie_mode: TieMode::Pessimistic,
            search: SearchParams::default(),
            default_time_limit_ms: DEFAULT_TIME_LIMIT_MS,
            verifier_time_limit_ms: 10_000,
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
                .min(8),
            test_count: DEFAULT_TEST_COUNT,
            gateway: GatewaySettings::new(),
        }
    }
}

/// Values given explicitly, typically from command-line flags.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub wrong_cost: Option<u32>,
    pub submission_minute: Option<u32>,
    pub tie_mode: Option<TieMode>,
    pub default_time_limit_ms: Option<u64>,
    pub workers: Option<usize>,
    pub test_count: Option<usize>,
    pub gateway_endpoint: Option<String>,
}

fn env_parse<T: std::str::FromStr>(
    get: &dyn Fn(&str) -> Option<String>,
    var: &str,
    slot: &mut T,
) -> Result<(), ConfigError> {
    if let Some(value) = get(var) {
        *slot = value
            .trim()
            .parse()
            .map_err(|_| ConfigError::Env { var: var.into(), value })?;
    }
    Ok(())
}

impl Config {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.into(),
            message: e.to_string(),
        })
    }

    /// Defaults, then `file`, then the environment as seen by `env`, then
    /// `overrides`. The result is validated.
    pub fn resolve(
        file: Option<&Path>,
        env: &dyn Fn(&str) -> Option<String>,
        overrides: &Overrides,
    ) -> Result<Self, ConfigError> {
        let mut c = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.display().to_string(),
                    source,
                })?;
                Self::from_toml(&text, &path.display().to_string())?
            }
            None => Self::default(),
        };

        env_parse(env, "CFELO_WRONG_COST", &mut c.wrong_cost)?;
        env_parse(env, "CFELO_SUBMISSION_MINUTE", &mut c.submission_minute)?;
        env_parse(env, "CFELO_TIE_MODE", &mut c.tie_mode)?;
        env_parse(env, "CFELO_DEFAULT_TIME_LIMIT_MS", &mut c.default_time_limit_ms)?;
        env_parse(env, "CFELO_WORKERS", &mut c.workers)?;
        env_parse(env, "CFELO_TEST_COUNT", &mut c.test_count)?;
        if let Some(v) = env(crate::genlab::gateway::ENV_ENDPOINT) {
            c.gateway.endpoint = Some(v);
        }
        if let Some(v) = env(crate::genlab::gateway::ENV_CREDENTIAL) {
            c.gateway.credential = Some(v);
        }
        if let Some(v) = env(crate::genlab::gateway::ENV_MODEL) {
            c.gateway.model = Some(v);
        }

        let o = overrides;
        if let Some(v) = o.wrong_cost {
            c.wrong_cost = v;
        }
        if let Some(v) = o.submission_minute {
            c.submission_minute = v;
        }
        if let Some(v) = o.tie_mode {
            c.tie_mode = v;
        }
        if let Some(v) = o.default_time_limit_ms {
            c.default_time_limit_ms = v;
        }
        if let Some(v) = o.workers {
            c.workers = v;
        }
        if let Some(v) = o.test_count {
            c.test_count = v;
        }
        if let Some(v) = &o.gateway_endpoint {
            c.gateway.endpoint = Some(v.clone());
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.default_time_limit_ms == 0 {
            return bad("default_time_limit_ms must be positive");
        }
        if self.verifier_time_limit_ms == 0 {
            return bad("verifier_time_limit_ms must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be positive");
        }
        if self.test_count == 0 {
            return bad("test_count must be positive");
        }
        if self.gateway.concurrency == 0 {
            return bad("gateway.concurrency must be positive");
        }
        self.search
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("search: {e}")))
    }

    pub fn scoring_rules(&self) -> ScoringRules {
        ScoringRules {
            wrong_cost: self.wrong_cost,
            submission_minute: self.submission_minute,
            submission_offsets: self.submission_offsets.clone(),
            tie_mode: self.tie_mode,
            search: self.search,
        }
    }

    pub fn verifier_limits(&self) -> RunLimits {
        RunLimits {
            time_limit_ms: self.verifier_time_limit_ms,
            ..RunLimits::default()
        }
    }

    /// SHA-256 of the canonical JSON form. The gateway credential is never
    /// serialized, so it does not affect the fingerprint. `workers` is left
    /// out as well since it cannot change any output.
    pub fn fingerprint(&self) -> String {
        let mut v = serde_json::to_value(self).expect("serializable");
        if let Some(m) = v.as_object_mut() {
            m.remove("workers");
        }
        let digest = Sha256::digest(canonical_json(&v).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `key=value` pairs for report headers, in a fixed order.
    pub fn header_pairs(&self) -> Vec<(String, String)> {
        let mut pairs = vec![
            ("tool_version".to_owned(), TOOL_VERSION.to_owned()),
            ("config_fingerprint".to_owned(), self.fingerprint()),
            ("wrong_cost".to_owned(), self.wrong_cost.to_string()),
            ("submission_minute".to_owned(), self.submission_minute.to_string()),
            (
                "tie_mode".to_owned(),
                match self.tie_mode {
                    TieMode::Pessimistic => "pessimistic",
                    TieMode::Optimistic => "optimistic",
                }
                .to_owned(),
            ),
            (
                "search".to_owned(),
                format!(
                    "[{}, {}] tol {} max_iter {}",
                    self.search.lo, self.search.hi, self.search.tolerance, self.search.max_iterations
                ),
            ),
            (
                "default_time_limit_ms".to_owned(),
                self.default_time_limit_ms.to_string(),
            ),
        ];
        for (p, m) in &self.submission_offsets {
            pairs.push((format!("submission_offset.{p}"), m.to_string()));
        }
        pairs
    }
}
