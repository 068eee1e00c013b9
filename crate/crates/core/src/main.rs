use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wiretap_tas::selector::{run_stepwise, StopReason};
use wiretap_tas::sim::{self, run_experiment, write_csv, ExperimentConfig};
use wiretap_tas::{ChannelPair, SelectorConfig, SystemParams};

#[derive(Parser)]
#[command(
    name = "wiretap-tas",
    version,
    about = "Antenna selection for MIMO wiretap channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep described by a config file and write a CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the stepwise algorithm on one channel realization and print its steps.
    Single {
        #[arg(long, default_value_t = 64)]
        m: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        lmax: usize,
        #[arg(long, default_value_t = 1.0)]
        pmax: f64,
        #[arg(long, default_value_t = 0.1)]
        sigma2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep selecting until `lmax` antennas are active.
        #[arg(long)]
        no_stc: bool,
    },
    /// Check the stepwise update identities and oracle dominance on random instances.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 20)]
        dominance: usize,
    },
}

fn run(
    config: PathBuf,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), sim::SimError> {
    let mut cfg = ExperimentConfig::from_file(&config)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    if let Some(out) = out {
        cfg.output_path = out;
    }
    cfg.validate()?;
    let result = run_experiment(&cfg)?;
    write_csv(&result, &cfg.output_path)?;
    eprintln!(
        "wrote {} rows to {}",
        result.cells.len(),
        cfg.output_path.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn single(
    m: usize,
    k: usize,
    n: usize,
    lmax: usize,
    pmax: f64,
    sigma2: f64,
    seed: u64,
    no_stc: bool,
) -> wiretap_tas::Result<()> {
    let params = SystemParams::uniform(m, k, n, lmax, pmax, sigma2)?;
    let channels: ChannelPair = sim::trial_channels(&params, seed, 0);
    let config = if no_stc {
        SelectorConfig::without_stc()
    } else {
        SelectorConfig::default()
    };
    let trace = run_stepwise(&channels, &params, &config)?;
    println!(
        "{:>4} {:>7} {:>14} {:>14} {:>12} {:>12}",
        "l", "antenna", "growth", "score", "power", "rate"
    );
    let sci = |v: Option<f64>| v.map_or("-".to_string(), |g| format!("{g:.6e}"));
    for s in &trace.steps {
        println!(
            "{:>4} {:>7} {:>14} {:>14} {:>12.6} {:>12.6}",
            s.step,
            s.antenna,
            sci(s.growth),
            sci(s.score),
            s.power,
            s.rate
        );
    }
    let reason = match trace.stop {
        StopReason::Stc => "best score non-positive",
        _ => "l_max reached",
    };
    if let Some(g) = trace
        .last_best_score
        .filter(|_| trace.stop == StopReason::Stc)
    {
        println!("stopped: {reason} (best score {g:.6e})");
    } else {
        println!("stopped: {reason}");
    }
    println!(
        "L = {}, P = {:.6}, secrecy rate = {:.6} bits/channel use",
        trace.selected(),
        trace.power(),
        trace.rate()
    );
    Ok(())
}

fn selftest(seed: u64, instances: usize, dominance: usize) -> wiretap_tas::Result<bool> {
    let r = sim::run_selftest(seed, instances, dominance)?;
    let tol = sim::SelftestReport::TOLERANCE;
    let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!(
        "{} theta identities: max relative error {:.3e} over {} candidates ({} instances)",
        mark(r.theta_max_rel_err < tol),
        r.theta_max_rel_err,
        r.candidates_checked,
        r.identity_instances
    );
    println!(
        "{} rate update: max relative error {:.3e}",
        mark(r.rate_max_rel_err < tol),
        r.rate_max_rel_err
    );
    println!(
        "{} cache coherence: max deviation {:.3e}",
        mark(r.max_cache_deviation < tol),
        r.max_cache_deviation
    );
    println!(
        "{} oracle dominance: {} of {} instances violate exhaustive >= stepwise",
        mark(r.oracle_violations == 0),
        r.oracle_violations,
        r.dominance_instances
    );
    println!(
        "info stepwise below mean random TAS on {} of {} instances",
        r.random_violations, r.dominance_instances
    );
    Ok(r.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            out,
        } => run(config, seed, trials, out)
            .map(|_| true)
            .map_err(|e| e.to_string()),
        Command::Single {
            m,
            k,
            n,
            lmax,
            pmax,
            sigma2,
            seed,
            no_stc,
        } => single(m, k, n, lmax, pmax, sigma2, seed, no_stc)
            .map(|_| true)
            .map_err(|e| e.to_string()),
        Command::Selftest {
            seed,
            instances,
            dominance,
        } => selftest(seed, instances, dominance).map_err(|e| e.to_string()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
