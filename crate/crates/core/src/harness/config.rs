//! `key = value` configuration files and command-line overrides.

use super::HarnessError;
use std::collections::BTreeMap;
use std::path::PathBuf;

/// One experiment invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    /// Thread count for trial loops; output does not depend on it.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            params: BTreeMap::new(),
            seed: 0,
            out: None,
            svg: None,
            workers: None,
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Parses `key = value` lines; `#` starts a comment. Later lines win.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, HarnessError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| HarnessError::Config {
            key: format!("line {}", i + 1),
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(HarnessError::Config {
                key: format!("line {}", i + 1),
                msg: "empty key".into(),
            });
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub const USAGE: &str = "\
usage: wmstat <experiment> [--config FILE] [--KEY VALUE ...] [--seed S] [--out FILE.csv]
              [--workers N] [--svg FILE.svg]

experiments: ump, rates, agnostic, robust, schemes
Parameters come from the config file (key = value lines) and are overridden
by --KEY VALUE flags. Without --out the CSV is written to standard output.";

fn parse_u64(key: &str, v: &str) -> Result<u64, HarnessError> {
    v.parse().map_err(|e| HarnessError::Config {
        key: key.into(),
        msg: format!("`{v}` is not a non-negative integer: {e}"),
    })
}

/// Builds a configuration from `args` (without the program name). `seed`,
/// `out`, `svg` and `workers` may also be given in the file.
pub fn parse_args<I, S>(args: I) -> Result<ExperimentConfig, HarnessError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let args: Vec<String> = args.into_iter().map(|s| s.as_ref().to_string()).collect();
    let Some(experiment) = args.first().filter(|a| !a.starts_with("--")) else {
        return Err(HarnessError::Config {
            key: "experiment".into(),
            msg: "missing experiment name".into(),
        });
    };
    let mut cli = BTreeMap::new();
    let mut config_file = None;
    let mut rest = args[1..].iter();
    while let Some(flag) = rest.next() {
        let key = flag.strip_prefix("--").ok_or_else(|| HarnessError::Config {
            key: flag.clone(),
            msg: "expected a --flag".into(),
        })?;
        let value = rest.next().ok_or_else(|| HarnessError::Config {
            key: key.into(),
            msg: "missing value".into(),
        })?;
        if key == "config" {
            config_file = Some(value.clone());
        } else {
            cli.insert(key.to_string(), value.clone());
        }
    }
    let mut params = match config_file {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::Config {
                key: "config".into(),
                msg: format!("cannot read {path}: {e}"),
            })?;
            parse_kv(&text)?
        }
        None => BTreeMap::new(),
    };
    params.extend(cli);

    let mut cfg = ExperimentConfig::new(experiment.clone());
    if let Some(v) = params.remove("seed") {
        cfg.seed = parse_u64("seed", &v)?;
    }
    if let Some(v) = params.remove("workers") {
        let w = parse_u64("workers", &v)?;
        if w == 0 {
            return Err(HarnessError::Config {
                key: "workers".into(),
                msg: "must be at least 1".into(),
            });
        }
        cfg.workers = Some(w as usize);
    }
    cfg.out = params.remove("out").map(PathBuf::from);
    cfg.svg = params.remove("svg").map(PathBuf::from);
    cfg.params = params;
    Ok(cfg)
}
