//! Seeded Monte Carlo experiment harness.
//!
//! Trial `t` draws its channels from a ChaCha20 stream seeded with the
//! master seed on stream `2t`; random antenna subsets come from stream
//! `2t + 1`. Every method and every `L_max` in a trial sees the same
//! channel realization, and trials are independent of thread scheduling.

mod config;
mod output;
mod selftest;

use std::path::PathBuf;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::error::TasError;
use crate::model::{ChannelPair, SystemParams};
use crate::power::SelectorConfig;
use crate::selector::{run_exhaustive, run_random, run_stepwise, RunTrace};

pub use config::{ConfigError, ExperimentConfig, Method, KEYS};
pub use output::{format_sig9, parse_csv, render_csv, write_csv, CSV_HEADER};
pub use selftest::{run_selftest, SelftestReport};

/// Caps worker threads for trial-level parallelism.
pub const THREADS_ENV: &str = "WIRETAP_TAS_THREADS";

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Tas(#[from] TasError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Channel stream for trial `trial`.
pub fn channel_rng(master_seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(2 * trial);
    rng
}

/// Stream for random antenna subsets in trial `trial`.
pub fn selection_rng(master_seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(2 * trial + 1);
    rng
}

pub fn trial_channels(
    params: &SystemParams<f64>,
    master_seed: u64,
    trial: u64,
) -> ChannelPair<f64> {
    ChannelPair::rayleigh(
        params.m_antennas,
        params.k_users,
        params.n_eve,
        &mut channel_rng(master_seed, trial),
    )
}

/// One (method, L_max) outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSample {
    pub rate: f64,
    pub selected: usize,
    pub power: f64,
}

impl From<&RunTrace<f64>> for TrialSample {
    fn from(trace: &RunTrace<f64>) -> Self {
        Self {
            rate: trace.rate(),
            selected: trace.selected(),
            power: trace.power(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub method: Method,
    pub l_max: usize,
    pub mean_rate: f64,
    /// Sample standard deviation over `sqrt(trials)`; zero for one trial.
    pub stderr: f64,
    pub mean_selected_l: f64,
    pub mean_power: f64,
    pub trials: usize,
}

impl CellSummary {
    pub fn from_samples(method: Method, l_max: usize, samples: &[TrialSample]) -> Self {
        let n = samples.len();
        let nf = n as f64;
        let mean = |f: &dyn Fn(&TrialSample) -> f64| samples.iter().map(f).sum::<f64>() / nf;
        let mean_rate = mean(&|s| s.rate);
        let stderr = if n > 1 {
            let var = samples
                .iter()
                .map(|s| (s.rate - mean_rate).powi(2))
                .sum::<f64>()
                / (nf - 1.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        Self {
            method,
            l_max,
            mean_rate,
            stderr,
            mean_selected_l: mean(&|s| s.selected as f64),
            mean_power: mean(&|s| s.power),
            trials: n,
        }
    }
}

/// Per-(method, L_max) summaries, sorted by method name then `L_max`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateResult {
    pub cells: Vec<CellSummary>,
}

impl AggregateResult {
    pub fn cell(&self, method: Method, l_max: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.l_max == l_max)
    }
}

/// Aggregate plus the retained per-trial samples, indexed
/// `[cell][trial]` with cells in the same order as the aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailedResult {
    pub aggregate: AggregateResult,
    pub samples: Vec<Vec<TrialSample>>,
}

fn cells_of(config: &ExperimentConfig) -> Vec<(Method, usize)> {
    let mut cells: Vec<(Method, usize)> = config
        .methods
        .iter()
        .flat_map(|&m| config.lmax_sweep.iter().map(move |&l| (m, l)))
        .collect();
    cells.sort_by(|a, b| a.0.name().cmp(b.0.name()).then(a.1.cmp(&b.1)));
    cells.dedup();
    cells
}

fn run_trial(
    config: &ExperimentConfig,
    cells: &[(Method, usize)],
    trial: u64,
) -> Result<Vec<TrialSample>, TasError> {
    let channels = trial_channels(&config.params, config.master_seed, trial);
    let mut sel_rng = selection_rng(config.master_seed, trial);
    let stc = SelectorConfig {
        enforce_stc: true,
        ..config.selector.clone()
    };
    let no_stc = SelectorConfig {
        enforce_stc: false,
        ..config.selector.clone()
    };
    cells
        .iter()
        .map(|&(method, l_max)| {
            let params = config.params.with_l_max(l_max)?;
            let trace = match method {
                Method::StepwiseStc => run_stepwise(&channels, &params, &stc)?,
                Method::StepwiseNoStc => run_stepwise(&channels, &params, &no_stc)?,
                Method::Random => {
                    run_random(&channels, &params, l_max, &config.selector, &mut sel_rng)?
                }
                Method::Exhaustive => run_exhaustive(&channels, &params, &config.selector, None)?,
            };
            Ok(TrialSample::from(&trace))
        })
        .collect()
}

fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Runs every trial and keeps the per-trial samples.
pub fn run_experiment_detailed(config: &ExperimentConfig) -> Result<DetailedResult, SimError> {
    config.validate()?;
    let cells = cells_of(config);
    let per_trial: Vec<Vec<TrialSample>> = thread_pool().install(|| {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(config, &cells, t))
            .collect::<Result<_, _>>()
    })?;
    let samples: Vec<Vec<TrialSample>> = (0..cells.len())
        .map(|c| per_trial.iter().map(|row| row[c]).collect())
        .collect();
    let aggregate = AggregateResult {
        cells: cells
            .iter()
            .zip(&samples)
            .map(|(&(m, l), s)| CellSummary::from_samples(m, l, s))
            .collect(),
    };
    Ok(DetailedResult { aggregate, samples })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateResult, SimError> {
    Ok(run_experiment_detailed(config)?.aggregate)
}
