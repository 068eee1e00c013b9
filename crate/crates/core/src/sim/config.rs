//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # 64-antenna sweep
//! m = 64
//! k = 4
//! n = 8
//! p_max = 1
//! sigma2_main = 0.1
//! sigma2_eve = 0.1
//! trials = 1000
//! seed = 7
//! lmax_sweep = 10,20,30,40,50,60,64
//! methods = stepwise_stc,stepwise_no_stc,random
//! weights = uniform
//! out = sweep64.csv
//! ```
//!
//! Every key is optional; omitted keys take the defaults of
//! [`ExperimentConfig::default`]. Unknown or repeated keys are rejected.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::model::{uniform_weights, SystemParams};
use crate::power::SelectorConfig;
use crate::selector::{subset_count, EXHAUSTIVE_LIMIT};

pub const KEYS: [&str; 12] = [
    "m",
    "k",
    "n",
    "p_max",
    "sigma2_main",
    "sigma2_eve",
    "trials",
    "seed",
    "lmax_sweep",
    "methods",
    "weights",
    "out",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given more than once")]
    Duplicate(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    StepwiseStc,
    StepwiseNoStc,
    Random,
    Exhaustive,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::StepwiseStc,
        Method::StepwiseNoStc,
        Method::Random,
        Method::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::StepwiseStc => "stepwise_stc",
            Method::StepwiseNoStc => "stepwise_no_stc",
            Method::Random => "random",
            Method::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `l_max` is overridden per sweep entry.
    pub params: SystemParams<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub lmax_sweep: Vec<usize>,
    pub methods: Vec<Method>,
    pub output_path: PathBuf,
    pub selector: SelectorConfig<f64>,
}

impl Default for ExperimentConfig {
    /// 64 antennas, 4 users, 8 eavesdropper antennas, unit power budget,
    /// noise variance 0.1, equal weights, 1000 trials.
    fn default() -> Self {
        Self {
            params: SystemParams {
                m_antennas: 64,
                k_users: 4,
                n_eve: 8,
                l_max: 64,
                p_max: 1.0,
                sigma2_main: 0.1,
                sigma2_eve: 0.1,
                weights: uniform_weights(4),
            },
            trials: 1000,
            master_seed: 0,
            lmax_sweep: vec![10, 20, 30, 40, 50, 60, 64],
            methods: vec![Method::StepwiseStc, Method::StepwiseNoStc, Method::Random],
            output_path: PathBuf::from("results.csv"),
            selector: SelectorConfig::default(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        let mut weights: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: idx + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate(key.to_string()));
            }
            let p = &mut cfg.params;
            match key {
                "m" => p.m_antennas = parse_num(key, value)?,
                "k" => p.k_users = parse_num(key, value)?,
                "n" => p.n_eve = parse_num(key, value)?,
                "p_max" => p.p_max = parse_num(key, value)?,
                "sigma2_main" => p.sigma2_main = parse_num(key, value)?,
                "sigma2_eve" => p.sigma2_eve = parse_num(key, value)?,
                "trials" => cfg.trials = parse_num(key, value)?,
                "seed" => cfg.master_seed = parse_num(key, value)?,
                "lmax_sweep" => cfg.lmax_sweep = parse_list(key, value)?,
                "methods" => {
                    cfg.methods = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().map_err(|e: String| invalid(key, e)))
                        .collect::<Result<_, _>>()?
                }
                "weights" => weights = Some(value.to_string()),
                "out" => cfg.output_path = PathBuf::from(value),
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.params.weights = match weights.as_deref() {
            None | Some("uniform") => uniform_weights(cfg.params.k_users),
            Some(list) => parse_list("weights", list)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field and names the offending key on failure.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        for (key, v) in [("m", p.m_antennas), ("k", p.k_users), ("n", p.n_eve)] {
            if v == 0 {
                return Err(invalid(key, "must be at least 1"));
            }
        }
        if !(p.p_max > 0.0 && p.p_max.is_finite()) {
            return Err(invalid("p_max", "must be positive"));
        }
        if !(p.sigma2_main > 0.0 && p.sigma2_main.is_finite()) {
            return Err(invalid("sigma2_main", "must be positive"));
        }
        if !(p.sigma2_eve > 0.0 && p.sigma2_eve.is_finite()) {
            return Err(invalid("sigma2_eve", "must be positive"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if p.weights.len() != p.k_users {
            return Err(invalid(
                "weights",
                format!("{} weights for {} users", p.weights.len(), p.k_users),
            ));
        }
        if p.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(invalid("weights", "must be finite and nonnegative"));
        }
        if let Some(&bad) = self
            .lmax_sweep
            .iter()
            .find(|&&l| l == 0 || l > p.m_antennas)
        {
            return Err(invalid(
                "lmax_sweep",
                format!("{bad} outside [1, {}]", p.m_antennas),
            ));
        }
        if self.methods.contains(&Method::Exhaustive) {
            let largest = self.lmax_sweep.iter().copied().max().unwrap_or(0);
            let count = subset_count(p.m_antennas, largest);
            if count > EXHAUSTIVE_LIMIT {
                return Err(invalid(
                    "methods",
                    format!(
                        "exhaustive search would visit {count} subsets (limit {EXHAUSTIVE_LIMIT})"
                    ),
                ));
            }
        }
        Ok(())
    }
}
