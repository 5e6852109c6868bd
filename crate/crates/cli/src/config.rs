//! Harness configuration: defaults, then a `key=value` file, then `ASA_*`
//! environment variables, then command-line flags.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use asa_core::evaluator::{default_criteria, load_criteria, Criterion};
use asa_core::provider::{LiveProvider, LiveSource, ProviderConfig, ProviderSource, ScriptedSource};
use asa_core::remote::{parse_target_file, TargetSpec, PASSWORD_ENV};
use asa_core::{Limits, Secret};

pub const DEFAULT_CONFIG_FILE: &str = "asa.conf";

const KEYS: &[&str] = &[
    "api_base",
    "model",
    "api_key",
    "temperature",
    "max_retries",
    "request_timeout",
    "corpus",
    "interpreter",
    "language",
    "max_debug_attempts",
    "max_turns",
    "exec_timeout",
    "memory_trim_threshold",
    "criteria_file",
    "remote_target",
];

const PATH_KEYS: &[&str] = &["corpus", "criteria_file", "remote_target"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("{key}: {message}")]
    Value { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub enum ProviderMode {
    Live(ProviderConfig),
    Scripted(PathBuf),
}

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub provider: ProviderMode,
    pub interpreter_command: String,
    pub payload_language_tag: String,
    pub limits: Limits,
    pub criteria_file: Option<PathBuf>,
    pub remote_target_file: Option<PathBuf>,
}

/// Values given on the command line; they win over every other layer.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub corpus: Option<PathBuf>,
    pub interpreter: Option<String>,
}

fn parse_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let err = |message: String| ConfigError::File {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("line {}: expected key=value", i + 1)))?;
        let k = k.trim().to_ascii_lowercase();
        if !KEYS.contains(&k.as_str()) {
            return Err(err(format!("line {}: unknown key {k:?}", i + 1)));
        }
        let mut v = v.trim().to_string();
        if PATH_KEYS.contains(&k.as_str()) && Path::new(&v).is_relative() {
            v = base.join(v).display().to_string();
        }
        out.insert(k, v);
    }
    if out.contains_key("corpus") && out.contains_key("api_key") {
        return Err(err("set either corpus or api_key, not both".into()));
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(values: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, ConfigError> {
    values
        .get(key)
        .map(|v| {
            v.parse::<T>().map_err(|_| ConfigError::Value {
                key: key.into(),
                message: format!("cannot parse {v:?}"),
            })
        })
        .transpose()
}

impl HarnessConfig {
    /// Merges the layers. `file` is read if given; otherwise `asa.conf` in
    /// `cwd` is used when present.
    pub fn resolve(
        file: Option<&Path>,
        cwd: &Path,
        env: &HashMap<String, String>,
        flags: &FlagOverrides,
    ) -> Result<Self, ConfigError> {
        let mut values = match file {
            Some(p) => parse_file(p)?,
            None => {
                let default = cwd.join(DEFAULT_CONFIG_FILE);
                if default.is_file() {
                    parse_file(&default)?
                } else {
                    BTreeMap::new()
                }
            }
        };
        for key in KEYS {
            if let Some(v) = env.get(&format!("ASA_{}", key.to_ascii_uppercase())) {
                let v = if PATH_KEYS.contains(key) && Path::new(v).is_relative() {
                    cwd.join(v).display().to_string()
                } else {
                    v.clone()
                };
                values.insert(key.to_string(), v);
            }
        }
        if let Some(c) = &flags.corpus {
            values.insert("corpus".into(), cwd.join(c).display().to_string());
        }
        if let Some(i) = &flags.interpreter {
            values.insert("interpreter".into(), i.clone());
        }

        let mut limits = Limits::default();
        if let Some(v) = parse_num(&values, "max_debug_attempts")? {
            limits.max_debug_attempts = v;
        }
        if let Some(v) = parse_num(&values, "max_turns")? {
            limits.max_turns = v;
        }
        if let Some(v) = parse_num(&values, "exec_timeout")? {
            limits.exec_timeout = v;
        }
        if let Some(v) = parse_num(&values, "memory_trim_threshold")? {
            limits.memory_trim_threshold = v;
        }
        limits.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let provider = match values.get("corpus") {
            Some(c) => ProviderMode::Scripted(PathBuf::from(c)),
            None => {
                let key = values.get("api_key").cloned().ok_or_else(|| {
                    ConfigError::Invalid("no provider configured: set corpus or api_key (ASA_API_KEY)".into())
                })?;
                let mut cfg = ProviderConfig::new(
                    values
                        .get("api_base")
                        .cloned()
                        .unwrap_or_else(|| "https://api.openai.com/v1".into()),
                    values.get("model").cloned().ok_or_else(|| {
                        ConfigError::Invalid("live mode needs a model name (model / ASA_MODEL)".into())
                    })?,
                    Secret::new(key),
                );
                if let Some(t) = parse_num(&values, "temperature")? {
                    cfg.temperature = t;
                }
                if let Some(r) = parse_num(&values, "max_retries")? {
                    cfg.max_retries = r;
                }
                if let Some(t) = parse_num::<f64>(&values, "request_timeout")? {
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(ConfigError::Value {
                            key: "request_timeout".into(),
                            message: "must be positive".into(),
                        });
                    }
                    cfg.request_timeout = Duration::from_secs_f64(t);
                }
                cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
                ProviderMode::Live(cfg)
            }
        };

        Ok(Self {
            provider,
            interpreter_command: values.get("interpreter").cloned().unwrap_or_else(|| "python3".into()),
            payload_language_tag: values.get("language").cloned().unwrap_or_else(|| "python".into()),
            limits,
            criteria_file: values.get("criteria_file").map(PathBuf::from),
            remote_target_file: values.get("remote_target").map(PathBuf::from),
        })
    }

    /// Opens the provider; a missing or malformed corpus is a config error.
    pub fn provider_source(&self) -> Result<Box<dyn ProviderSource>, ConfigError> {
        match &self.provider {
            ProviderMode::Scripted(path) => ScriptedSource::from_path(path)
                .map(|s| Box::new(s) as Box<dyn ProviderSource>)
                .map_err(|e| ConfigError::Invalid(format!("corpus {}: {e}", path.display()))),
            ProviderMode::Live(cfg) => LiveProvider::new(cfg.clone())
                .map(|p| Box::new(LiveSource(p)) as Box<dyn ProviderSource>)
                .map_err(|e| ConfigError::Invalid(e.to_string())),
        }
    }

    pub fn agent_name(&self) -> String {
        match &self.provider {
            ProviderMode::Scripted(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scripted".into()),
            ProviderMode::Live(c) => c.model_name.clone(),
        }
    }

    pub fn criteria(&self) -> Result<Vec<Criterion>, ConfigError> {
        match &self.criteria_file {
            Some(p) => load_criteria(p).map_err(|e| ConfigError::Invalid(e.to_string())),
            None => Ok(default_criteria()),
        }
    }

    pub fn remote_target(&self, env: &HashMap<String, String>) -> Result<Option<TargetSpec>, ConfigError> {
        let Some(path) = &self.remote_target_file else {
            return Ok(None);
        };
        let text = fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let password = env.get(PASSWORD_ENV).map(Secret::new);
        parse_target_file(&text, path.parent().unwrap_or(Path::new(".")), password)
            .map(Some)
            .map_err(|e| ConfigError::File {
                path: path.clone(),
                message: e.to_string(),
            })
    }
}
