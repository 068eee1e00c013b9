//! Randomized self-check of the stepwise recursion and oracle dominance,
//! exposed through the `selftest` subcommand.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::metrics::{evaluate_selection, sinr_eve, sinr_main};
use crate::model::{ChannelPair, SystemParams};
use crate::power::SelectorConfig;
use crate::selector::{run_exhaustive, run_random, run_stepwise};
use crate::stepwise::SelectionState;

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub identity_instances: usize,
    pub candidates_checked: usize,
    /// Max relative error of both multiplicative SINR updates.
    pub theta_max_rel_err: f64,
    /// Max error of the additive unclipped-rate update, relative to `max(1, |rate|)`.
    pub rate_max_rel_err: f64,
    pub max_cache_deviation: f64,
    pub dominance_instances: usize,
    /// Instances where the exhaustive rate fell below the stepwise rate.
    pub oracle_violations: usize,
    /// Instances where stepwise fell below the mean random rate (informational).
    pub random_violations: usize,
}

impl SelftestReport {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn passed(&self) -> bool {
        self.theta_max_rel_err < Self::TOLERANCE
            && self.rate_max_rel_err < Self::TOLERANCE
            && self.max_cache_deviation < Self::TOLERANCE
            && self.oracle_violations == 0
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn identity_instance(rng: &mut ChaCha20Rng, report: &mut SelftestReport) -> Result<()> {
    let m = rng.gen_range(4..=16);
    let k = rng.gen_range(1..=4);
    let n = rng.gen_range(1..=4);
    let p: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let channels = ChannelPair::<f64>::rayleigh(m, k, n, rng);
    let params = SystemParams::uniform(m, k, n, m, 1.0, 0.1)?;

    let mut order: Vec<usize> = (0..m).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
    let depth = rng.gen_range(1..m);
    let mut state = SelectionState::init(&channels, order[0], p)?;
    for &i in &order[1..depth] {
        state = state.extend(&channels, i)?;
    }
    report.max_cache_deviation = report.max_cache_deviation.max(state.cache_deviation());

    let before = evaluate_selection(&channels, state.selection(), p, &params)?;
    let terms0 = crate::metrics::selection_terms(&channels, state.selection())?;
    for &cand in &order[depth..] {
        let eval = state.eval_candidate(&channels, cand, p, &params)?;
        let mut ext = state.selection().to_vec();
        ext.push(cand);
        let terms1 = crate::metrics::selection_terms(&channels, &ext)?;
        for u in 0..k {
            let m0 = 1.0 + sinr_main(&terms0, p, params.sigma2_main, u);
            let m1 = 1.0 + sinr_main(&terms1, p, params.sigma2_main, u);
            let e0 = 1.0 + sinr_eve(&terms0, p, params.sigma2_eve, u);
            let e1 = 1.0 + sinr_eve(&terms1, p, params.sigma2_eve, u);
            report.theta_max_rel_err = report
                .theta_max_rel_err
                .max(rel(eval.theta_main[u] * m0, m1))
                .max(rel(eval.theta_eve[u] * e0, e1));
        }
        let after = evaluate_selection(&channels, &ext, p, &params)?;
        let err = (before.weighted_unclipped + eval.growth - after.weighted_unclipped).abs()
            / after.weighted_unclipped.abs().max(1.0);
        report.rate_max_rel_err = report.rate_max_rel_err.max(err);
        report.candidates_checked += 1;
    }
    Ok(())
}

fn dominance_instance(
    rng: &mut ChaCha20Rng,
    random_draws: usize,
    report: &mut SelftestReport,
) -> Result<()> {
    let channels = ChannelPair::<f64>::rayleigh(8, 2, 2, rng);
    let params = SystemParams::uniform(8, 2, 2, 3, 1.0, 0.1)?;
    let cfg = SelectorConfig::default();
    let exhaustive = run_exhaustive(&channels, &params, &cfg, None)?.rate();
    let stepwise = run_stepwise(&channels, &params, &cfg)?.rate();
    let mut random = 0.0;
    for _ in 0..random_draws {
        random += run_random(&channels, &params, params.l_max, &cfg, rng)?.rate();
    }
    random /= random_draws as f64;
    if exhaustive < stepwise - 1e-9 {
        report.oracle_violations += 1;
    }
    if stepwise < random - 1e-9 {
        report.random_violations += 1;
    }
    Ok(())
}

/// Runs `identity_instances` randomized recursion checks and
/// `dominance_instances` oracle comparisons.
pub fn run_selftest(
    seed: u64,
    identity_instances: usize,
    dominance_instances: usize,
) -> Result<SelftestReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut report = SelftestReport {
        identity_instances,
        candidates_checked: 0,
        theta_max_rel_err: 0.0,
        rate_max_rel_err: 0.0,
        max_cache_deviation: 0.0,
        dominance_instances,
        oracle_violations: 0,
        random_violations: 0,
    };
    for _ in 0..identity_instances {
        identity_instance(&mut rng, &mut report)?;
    }
    for _ in 0..dominance_instances {
        dominance_instance(&mut rng, 20, &mut report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_selftest_passes() {
        let r = run_selftest(1, 50, 5).unwrap();
        assert!(r.candidates_checked > 0);
        assert!(r.passed(), "{r:?}");
    }
}
