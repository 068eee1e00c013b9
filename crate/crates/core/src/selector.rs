//! Joint antenna selection and power control: the iterative stepwise
//! algorithm, the exhaustive-search oracle and the random baseline.

use itertools::Itertools;
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Result, TasError};
use crate::metrics::{evaluate_selection, selection_terms, weighted_rate, SecrecyReport};
use crate::model::{ChannelPair, SystemParams};
use crate::power::{optimize_power, tie_tol, SelectorConfig};
use crate::scalar::Real;
use crate::stepwise::{GrowthEval, SelectionState};

/// Upper bound on the number of subsets the exhaustive oracle will visit.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `L_max` antennas are active.
    LmaxReached,
    /// The best growth term was non-positive.
    Stc,
    /// Exhaustive enumeration finished.
    Enumerated,
    /// Random subset drawn.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    /// Number of active antennas after this step.
    pub step: usize,
    pub antenna: usize,
    /// Growth term at the power in force when the antenna was picked;
    /// `None` for the first one.
    pub growth: Option<T>,
    /// Value the candidate was ranked and admitted on. Equals `growth`
    /// unless that power was zero, where it is the low-power slope.
    pub score: Option<T>,
    /// Power chosen after the antenna was added.
    pub power: T,
    /// Clipped weighted secrecy rate at `power`.
    pub rate: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<T> {
    pub steps: Vec<StepRecord<T>>,
    /// Recomputed from scratch at the final `(P, selection)`.
    pub report: SecrecyReport<T>,
    pub stop: StopReason,
    /// Score of the best candidate in the last sweep, if one ran.
    pub last_best_score: Option<T>,
}

impl<T: Real> RunTrace<T> {
    pub fn selected(&self) -> usize {
        self.report.selection.len()
    }

    pub fn rate(&self) -> T {
        self.report.weighted_avg
    }

    pub fn power(&self) -> T {
        self.report.power
    }
}

/// First antenna: the row maximizing `||H_i|| / ||G_i||`.
///
/// Rows with a zero eavesdropper channel (and a nonzero main channel) rank
/// above every finite ratio and among themselves by `||H_i||`. Ties go to
/// the lowest index.
pub fn init_antenna<T: Real>(channels: &ChannelPair<T>) -> Result<usize> {
    #[derive(PartialEq, PartialOrd)]
    enum Key<T> {
        Finite(T),
        Unbounded(T),
    }
    let mut best: Option<(usize, Key<T>)> = None;
    for i in 0..channels.antennas() {
        let h = channels.h_main().row_norm_sqr(i);
        if h == T::zero() {
            continue;
        }
        let g = channels.g_eve().row_norm_sqr(i);
        let key = if g == T::zero() {
            Key::Unbounded(h)
        } else {
            Key::Finite(h / g)
        };
        if best.as_ref().is_none_or(|(_, b)| key > *b) {
            best = Some((i, key));
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| {
        TasError::DegenerateChannel("every antenna has an all-zero main channel row".into())
    })
}

/// Evaluates every unselected antenna at power `p` and returns the one
/// with the largest [`GrowthEval::score`], lowest index on ties.
pub fn best_candidate<T: Real>(
    state: &SelectionState<T>,
    channels: &ChannelPair<T>,
    p: T,
    params: &SystemParams<T>,
) -> Result<Option<GrowthEval<T>>> {
    let mut best: Option<GrowthEval<T>> = None;
    for i in 0..channels.antennas() {
        if state.contains(i) {
            continue;
        }
        let eval = state.eval_candidate(channels, i, p, params)?;
        if best
            .as_ref()
            .is_none_or(|b| eval.score(p) > b.score(p) + tie_tol())
        {
            best = Some(eval);
        }
    }
    Ok(best)
}

fn check_inputs<T: Real>(channels: &ChannelPair<T>, params: &SystemParams<T>) -> Result<()> {
    params.validate()?;
    params.check_channels(channels)
}

/// Iterative joint antenna selection and power control.
///
/// When the optimized power is zero the growth term vanishes for every
/// candidate, so ranking and the stopping test use its slope at `P = 0+`
/// instead.
pub fn run_stepwise<T: Real>(
    channels: &ChannelPair<T>,
    params: &SystemParams<T>,
    config: &SelectorConfig<T>,
) -> Result<RunTrace<T>> {
    check_inputs(channels, params)?;
    let first = init_antenna(channels)?;
    let state = SelectionState::init(channels, first, T::zero())?;
    let p = optimize_power(state.sinr_terms(), params, config);
    let mut state = state.with_power(p);
    let mut steps = vec![StepRecord {
        step: 1,
        antenna: first,
        growth: None,
        score: None,
        power: p,
        rate: weighted_rate(state.sinr_terms(), p, params, true),
    }];

    let mut stop = StopReason::LmaxReached;
    let mut last_best_score = None;
    while state.len() < params.l_max {
        let Some(best) = best_candidate(&state, channels, state.power(), params)? else {
            break;
        };
        let score = best.score(state.power());
        last_best_score = Some(score);
        if config.enforce_stc && score <= T::zero() {
            stop = StopReason::Stc;
            break;
        }
        let next = state.extend(channels, best.candidate)?;
        let p = optimize_power(next.sinr_terms(), params, config);
        state = next.with_power(p);
        steps.push(StepRecord {
            step: state.len(),
            antenna: best.candidate,
            growth: Some(best.growth),
            score: Some(score),
            power: p,
            rate: weighted_rate(state.sinr_terms(), p, params, true),
        });
    }

    let report = evaluate_selection(channels, state.selection(), state.power(), params)?;
    Ok(RunTrace {
        steps,
        report,
        stop,
        last_best_score,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Number of subsets of `[M]` with size in `1..=l_max`.
pub fn subset_count(m: usize, l_max: usize) -> u128 {
    (1..=l_max.min(m)).map(|l| binomial(m, l)).sum()
}

/// Exhaustive search over antenna subsets with per-subset power control.
///
/// With `exact_size = Some(l)` only subsets of size `l` are visited;
/// otherwise every size in `1..=L_max`. Ties prefer smaller subsets, then
/// lexicographic order.
pub fn run_exhaustive<T: Real>(
    channels: &ChannelPair<T>,
    params: &SystemParams<T>,
    config: &SelectorConfig<T>,
    exact_size: Option<usize>,
) -> Result<RunTrace<T>> {
    check_inputs(channels, params)?;
    let m = params.m_antennas;
    let sizes = match exact_size {
        Some(l) if l == 0 || l > m => {
            return Err(TasError::InvalidParams(format!(
                "subset size {l} outside [1, {m}]"
            )))
        }
        Some(l) => l..=l,
        None => 1..=params.l_max,
    };
    let subsets: u128 = sizes.clone().map(|l| binomial(m, l)).sum();
    if subsets > EXHAUSTIVE_LIMIT {
        return Err(TasError::SearchTooLarge {
            subsets,
            limit: EXHAUSTIVE_LIMIT,
        });
    }

    let mut best: Option<(Vec<usize>, T, T)> = None;
    for l in sizes {
        for subset in (0..m).combinations(l) {
            let terms = match selection_terms(channels, &subset) {
                Ok(t) => t,
                Err(TasError::DegenerateChannel(_)) => continue,
                Err(e) => return Err(e),
            };
            let p = optimize_power(&terms, params, config);
            let rate = weighted_rate(&terms, p, params, true);
            if best.as_ref().is_none_or(|(_, _, r)| rate > *r + tie_tol()) {
                best = Some((subset, p, rate));
            }
        }
    }
    let (selection, p, _) = best.ok_or_else(|| {
        TasError::DegenerateChannel("no subset has a nonzero main channel".into())
    })?;
    let report = evaluate_selection(channels, &selection, p, params)?;
    Ok(RunTrace {
        steps: Vec::new(),
        report,
        stop: StopReason::Enumerated,
        last_best_score: None,
    })
}

/// Uniformly random `size`-subset (reported in ascending order) with
/// per-subset power control.
pub fn run_random<T: Real, R: Rng + ?Sized>(
    channels: &ChannelPair<T>,
    params: &SystemParams<T>,
    size: usize,
    config: &SelectorConfig<T>,
    rng: &mut R,
) -> Result<RunTrace<T>> {
    check_inputs(channels, params)?;
    let m = params.m_antennas;
    if size == 0 || size > m {
        return Err(TasError::InvalidParams(format!(
            "subset size {size} outside [1, {m}]"
        )));
    }
    let mut selection = sample(rng, m, size).into_vec();
    selection.sort_unstable();
    let p = match selection_terms(channels, &selection) {
        Ok(terms) => optimize_power(&terms, params, config),
        // every drawn row is zero: nothing to transmit
        Err(TasError::DegenerateChannel(_)) => T::zero(),
        Err(e) => return Err(e),
    };
    let report = match evaluate_selection(channels, &selection, p, params) {
        Ok(r) => r,
        Err(TasError::DegenerateChannel(_)) => zero_report(params, selection),
        Err(e) => return Err(e),
    };
    Ok(RunTrace {
        steps: Vec::new(),
        report,
        stop: StopReason::Sampled,
        last_best_score: None,
    })
}

fn zero_report<T: Real>(params: &SystemParams<T>, selection: Vec<usize>) -> SecrecyReport<T> {
    let zeros = vec![T::zero(); params.k_users];
    SecrecyReport {
        per_user_rate_main: zeros.clone(),
        per_user_rate_eve: zeros.clone(),
        per_user_unclipped: zeros.clone(),
        per_user_secrecy: zeros,
        weighted_avg: T::zero(),
        weighted_unclipped: T::zero(),
        power: T::zero(),
        selection,
    }
}
