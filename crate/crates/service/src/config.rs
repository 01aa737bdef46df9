//! Micro-service and federation configuration files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Characters left verbatim in URL parameter values and cache keys.
const VALUE_ENCODE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

pub const DISABLE_CACHE_ENV: &str = "FEDQL_DISABLE_CACHE";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("reading {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HttpMethod {
    #[default]
    Get,
    Post,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(default)]
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
}

fn default_timeout_ms() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub name: String,
    pub route: String,
    /// URL with `{param}` placeholders, each naming a declared parameter.
    pub api_url_template: String,
    #[serde(default)]
    pub method: HttpMethod,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
    /// Directory holding `mapping.rq` and `mapping.json`.
    pub mapping: PathBuf,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub cache_ttl_s: u64,
    /// Static headers sent with every upstream request.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub headers: BTreeMap<String, String>,
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() {
            return Err(invalid("service name is empty"));
        }
        if self.route.is_empty()
            || !self
                .route
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b"-_.".contains(&b))
        {
            return Err(invalid(format!(
                "route '{}' is not a single URL path segment",
                self.route
            )));
        }
        let declared: BTreeSet<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        if declared.len() != self.params.len() {
            return Err(invalid(format!("service '{}' declares a parameter twice", self.name)));
        }
        for p in placeholders(&self.api_url_template)? {
            if !declared.contains(p.as_str()) {
                return Err(invalid(format!(
                    "placeholder {{{p}}} of '{}' is not a declared parameter",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    /// The effective TTL; the environment override disables caching.
    pub fn cache_ttl(&self) -> Duration {
        if std::env::var(DISABLE_CACHE_ENV).is_ok_and(|v| v == "1") {
            Duration::ZERO
        } else {
            Duration::from_secs(self.cache_ttl_s)
        }
    }

    /// Substitutes every placeholder with its percent-encoded argument.
    /// Arguments must already be complete.
    pub fn render_url(&self, args: &BTreeMap<String, String>) -> String {
        let mut out = String::new();
        let mut rest = self.api_url_template.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let close = open + rest[open..].find('}').expect("validated template");
            let name = &rest[open + 1..close];
            let value = args.get(name).map(String::as_str).unwrap_or("");
            out.extend(utf8_percent_encode(value, VALUE_ENCODE));
            rest = &rest[close + 1..];
        }
        out.push_str(rest);
        out
    }

    /// `name?k1=v1&k2=v2` with keys sorted and values percent-encoded.
    pub fn cache_key(&self, args: &BTreeMap<String, String>) -> String {
        let pairs: Vec<String> = args
            .iter()
            .map(|(k, v)| {
                format!(
                    "{}={}",
                    utf8_percent_encode(k, VALUE_ENCODE),
                    utf8_percent_encode(v, VALUE_ENCODE)
                )
            })
            .collect();
        format!("{}?{}", self.name, pairs.join("&"))
    }
}

fn placeholders(template: &str) -> Result<Vec<String>, ConfigError> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let Some(len) = rest[open..].find('}') else {
            return Err(invalid(format!("unterminated placeholder in '{template}'")));
        };
        let name = &rest[open + 1..open + len];
        if name.is_empty() || name.contains('{') {
            return Err(invalid(format!("malformed placeholder in '{template}'")));
        }
        out.push(name.to_owned());
        rest = &rest[open + len + 1..];
    }
    if rest.contains('}') {
        return Err(invalid(format!("stray '}}' in '{template}'")));
    }
    Ok(out)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ConfigError> {
    let io = |reason: String| ConfigError::Io {
        path: path.display().to_string(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| io(e.to_string()))
}

#[derive(Deserialize)]
struct ServiceFile {
    services: Vec<ServiceConfig>,
}

/// Loads a deployment file `{"services": [...]}`. Mapping directories are
/// resolved relative to the file.
pub fn load_services(path: &Path) -> Result<Vec<ServiceConfig>, ConfigError> {
    let file: ServiceFile = read_json(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut routes = BTreeSet::new();
    let mut out = Vec::new();
    for mut cfg in file.services {
        cfg.validate()?;
        if !routes.insert(cfg.route.clone()) {
            return Err(invalid(format!("route '{}' is used twice", cfg.route)));
        }
        if cfg.mapping.is_relative() {
            cfg.mapping = dir.join(&cfg.mapping);
        }
        out.push(cfg);
    }
    Ok(out)
}

fn default_chunk_size() -> usize {
    50
}

fn default_max_calls() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FederationConfig {
    #[serde(default = "default_route")]
    pub route: String,
    /// Endpoints permitted in SERVICE; empty allows every endpoint.
    #[serde(default)]
    pub allowlist: BTreeSet<String>,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
    /// Per-endpoint chunk size overrides.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub chunk_sizes: BTreeMap<String, usize>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub timeouts_ms: BTreeMap<String, u64>,
    #[serde(default = "default_max_calls")]
    pub max_remote_calls: usize,
}

fn default_route() -> String {
    "federate".to_owned()
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            route: default_route(),
            allowlist: BTreeSet::new(),
            chunk_size: default_chunk_size(),
            chunk_sizes: BTreeMap::new(),
            timeout_ms: default_timeout_ms(),
            timeouts_ms: BTreeMap::new(),
            max_remote_calls: default_max_calls(),
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.chunk_size == 0 || self.chunk_sizes.values().any(|&c| c == 0) {
            return Err(invalid("chunk size must be at least 1"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let cfg: FederationConfig = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn allows(&self, endpoint: &str) -> bool {
        self.allowlist.is_empty() || self.allowlist.contains(endpoint)
    }

    pub fn chunk_size_for(&self, endpoint: &str) -> usize {
        self.chunk_sizes.get(endpoint).copied().unwrap_or(self.chunk_size)
    }

    pub fn timeout_for(&self, endpoint: &str) -> Duration {
        Duration::from_millis(self.timeouts_ms.get(endpoint).copied().unwrap_or(self.timeout_ms))
    }
}
