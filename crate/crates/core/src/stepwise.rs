//! Incremental forward-selection state for MRT precoding.
//!
//! Appending antenna `i` with channel rows `h` (K) and `g` (N) to a state
//! with normalizer `beta` gives
//!
//! ```text
//! alpha^2 = 1 / (1 + beta^2 ||h||^2)
//! W'      = alpha [W ; beta conj(h)^T]          beta' = alpha beta
//! ```
//!
//! The state caches the cross gains `A = H_sel^T W` (K x K) and
//! `B = G_sel^T W` (N x K). Both extend by a rank-one term,
//! `A'[k][j] = alpha (A[k][j] + beta h_k conj(h_j))` and
//! `B'[n][k] = alpha (B[n][k] + beta g_n conj(h_k))`, so scoring one
//! candidate costs O(K^2 + K N) regardless of how many antennas are active.
//!
//! From the extended gains the multiplicative SINR updates follow:
//!
//! ```text
//! 1 + gamma_k^m' = theta_k^m (1 + gamma_k^m),  theta_k^m = (alpha^2 + eps_k^m) / (alpha^2 + psi_k^m)
//! 1 + gamma_k^e' = theta_k^e (1 + gamma_k^e),  theta_k^e =  alpha^2 + eps_k^e
//! ```
//!
//! and the unclipped weighted secrecy rate grows by
//! `sum_k w_k log2(theta_k^m / theta_k^e)`.

use num_complex::Complex;

use crate::error::{Result, TasError};
use crate::metrics::{self, cross_gains, SecrecyReport, SinrTerms};
use crate::model::{mrt_precoder, ChannelPair, ComplexMatrix, Precoder, SystemParams};
use crate::scalar::Real;

/// Cached gains are rebuilt from the effective channels after this many
/// incremental extensions.
pub const REFRESH_INTERVAL: usize = 32;

/// `beta_{l+1} / beta_l` for appending a row with channel `h_row`.
pub fn alpha_factor<T: Real>(beta_prev: T, h_row: &[Complex<T>]) -> T {
    alpha_sqr(beta_prev, h_row).sqrt()
}

fn alpha_sqr<T: Real>(beta_prev: T, h_row: &[Complex<T>]) -> T {
    let norm_sqr: T = h_row.iter().map(|z| z.norm_sqr()).sum();
    (T::one() + beta_prev * beta_prev * norm_sqr).recip()
}

/// Effect of appending one candidate antenna at a fixed power.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEval<T> {
    pub candidate: usize,
    pub alpha2: T,
    pub eps_main: Vec<T>,
    pub psi_main: Vec<T>,
    pub eps_eve: Vec<T>,
    pub theta_main: Vec<T>,
    pub theta_eve: Vec<T>,
    /// Change of the unclipped weighted rate, in bits.
    pub growth: T,
    /// `d growth / dP` at `P = 0+`, in bits per unit power. Ranks
    /// candidates when the current power is zero and `growth` vanishes
    /// identically.
    pub low_power_slope: T,
}

impl<T: Real> GrowthEval<T> {
    /// Selection score at power `p`: the growth term, or its low-power
    /// slope when `p == 0`.
    pub fn score(&self, p: T) -> T {
        if p == T::zero() {
            self.low_power_slope
        } else {
            self.growth
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectionState<T> {
    selection: Vec<usize>,
    member: Vec<bool>,
    h_eff: ComplexMatrix<T>,
    g_eff: ComplexMatrix<T>,
    precoder: Precoder<T>,
    gains_main: ComplexMatrix<T>,
    gains_eve: ComplexMatrix<T>,
    terms: SinrTerms<T>,
    power: T,
    since_refresh: usize,
}

impl<T: Real> SelectionState<T> {
    /// Single-antenna state holding `first_index`.
    pub fn init(channels: &ChannelPair<T>, first_index: usize, p: T) -> Result<Self> {
        let m = channels.antennas();
        if first_index >= m {
            return Err(TasError::InvalidSelection(format!(
                "index {first_index} out of range for {m} antennas"
            )));
        }
        if channels.h_main().row_norm_sqr(first_index) == T::zero() {
            return Err(TasError::DegenerateChannel(format!(
                "antenna {first_index} has an all-zero main channel row"
            )));
        }
        let mut member = vec![false; m];
        member[first_index] = true;
        let selection = vec![first_index];
        let h_eff = channels.h_main().select_rows(&selection)?;
        let g_eff = channels.g_eve().select_rows(&selection)?;
        Ok(Self::from_scratch(selection, member, h_eff, g_eff, p))
    }

    fn from_scratch(
        selection: Vec<usize>,
        member: Vec<bool>,
        h_eff: ComplexMatrix<T>,
        g_eff: ComplexMatrix<T>,
        power: T,
    ) -> Self {
        let precoder = mrt_precoder(&h_eff).expect("selection contains a nonzero row");
        let gains_main = cross_gains(&h_eff, precoder.w());
        let gains_eve = cross_gains(&g_eff, precoder.w());
        let terms = SinrTerms::from_gains(&gains_main, &gains_eve);
        Self {
            selection,
            member,
            h_eff,
            g_eff,
            precoder,
            gains_main,
            gains_eve,
            terms,
            power,
            since_refresh: 0,
        }
    }

    /// Same selection and power with every cache recomputed directly.
    pub fn rebuild(&self) -> Self {
        Self::from_scratch(
            self.selection.clone(),
            self.member.clone(),
            self.h_eff.clone(),
            self.g_eff.clone(),
            self.power,
        )
    }

    pub fn selection(&self) -> &[usize] {
        &self.selection
    }

    pub fn len(&self) -> usize {
        self.selection.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selection.is_empty()
    }

    pub fn contains(&self, antenna: usize) -> bool {
        self.member.get(antenna).copied().unwrap_or(false)
    }

    pub fn h_eff(&self) -> &ComplexMatrix<T> {
        &self.h_eff
    }

    pub fn g_eff(&self) -> &ComplexMatrix<T> {
        &self.g_eff
    }

    pub fn precoder(&self) -> &Precoder<T> {
        &self.precoder
    }

    pub fn sinr_terms(&self) -> &SinrTerms<T> {
        &self.terms
    }

    pub fn power(&self) -> T {
        self.power
    }

    pub fn with_power(mut self, p: T) -> Self {
        self.power = p;
        self
    }

    pub fn unclipped_rate(&self, p: T, params: &SystemParams<T>) -> T {
        metrics::weighted_rate(&self.terms, p, params, false)
    }

    /// Report at the state's own power, from the cached terms.
    pub fn report(&self, params: &SystemParams<T>) -> SecrecyReport<T> {
        metrics::report_from_terms(&self.terms, self.power, params, &self.selection)
    }

    /// Largest relative deviation of the cached precoder, gains and SINR
    /// terms from a from-scratch rebuild.
    pub fn cache_deviation(&self) -> T {
        let fresh = self.rebuild();
        let mut worst = rel_dev(self.precoder.beta(), fresh.precoder.beta());
        let mats = [
            (self.precoder.w(), fresh.precoder.w()),
            (&self.gains_main, &fresh.gains_main),
            (&self.gains_eve, &fresh.gains_eve),
        ];
        for (a, b) in mats {
            let scale = b.frobenius_norm_sqr().sqrt().max(T::min_positive_value());
            for (x, y) in a.entries().iter().zip(b.entries()) {
                worst = worst.max((x - y).norm() / scale);
            }
        }
        let vecs = [
            (&self.terms.t_main, &fresh.terms.t_main),
            (&self.terms.u_main, &fresh.terms.u_main),
            (&self.terms.t_eve, &fresh.terms.t_eve),
        ];
        for (a, b) in vecs {
            // u and t_eve may vanish; compare on the scale of the user's total gain
            for (k, (x, y)) in a.iter().zip(b.iter()).enumerate() {
                let scale = fresh.terms.t_main[k] + fresh.terms.u_main[k] + fresh.terms.t_eve[k];
                worst = worst.max((*x - *y).abs() / scale.max(T::min_positive_value()));
            }
        }
        worst
    }

    fn check_candidate(&self, candidate: usize) -> Result<()> {
        if candidate >= self.member.len() || self.member[candidate] {
            return Err(TasError::InvalidCandidate(candidate));
        }
        Ok(())
    }

    /// Scores appending `candidate` at power `p` without building the
    /// extended state. `p = 0` is accepted and yields unit updates.
    pub fn eval_candidate(
        &self,
        channels: &ChannelPair<T>,
        candidate: usize,
        p: T,
        params: &SystemParams<T>,
    ) -> Result<GrowthEval<T>> {
        self.check_candidate(candidate)?;
        if !(p >= T::zero()) {
            return Err(TasError::InvalidParams(format!(
                "power {p} must be nonnegative"
            )));
        }
        let h = channels.h_main().row(candidate);
        let g = channels.g_eve().row(candidate);
        let beta = self.precoder.beta();
        let a2 = alpha_sqr(beta, h);
        let rho_m = p / params.sigma2_main;
        let rho_e = p / params.sigma2_eve;
        let k_users = h.len();
        let n_eve = g.len();

        let mut eval = GrowthEval {
            candidate,
            alpha2: a2,
            eps_main: Vec::with_capacity(k_users),
            psi_main: Vec::with_capacity(k_users),
            eps_eve: Vec::with_capacity(k_users),
            theta_main: Vec::with_capacity(k_users),
            theta_eve: Vec::with_capacity(k_users),
            growth: T::zero(),
            low_power_slope: T::zero(),
        };
        let one = T::one();
        for k in 0..k_users {
            let row = self.gains_main.row(k);
            let hk_beta = h[k] * beta;
            let mut own = T::zero();
            let mut other = T::zero();
            for j in 0..k_users {
                let v = (row[j] + hk_beta * h[j].conj()).norm_sqr();
                if j == k {
                    own = v;
                } else {
                    other = other + v;
                }
            }
            let hk_conj_beta = h[k].conj() * beta;
            let mut leak = T::zero();
            for (n, &gn) in g.iter().enumerate().take(n_eve) {
                leak = leak + (self.gains_eve.get(n, k) + gn * hk_conj_beta).norm_sqr();
            }

            let t = self.terms.t_main[k];
            let u = self.terms.u_main[k];
            let te = self.terms.t_eve[k];
            // alpha^2 + eps and alpha^2 + psi
            let num = (one + rho_m * a2 * (own + other)) / (one + rho_m * (t + u));
            let den = (one + rho_m * a2 * other) / (one + rho_m * u);
            let theta_e = (one + rho_e * a2 * leak) / (one + rho_e * te);
            let theta_m = num / den;

            eval.eps_main.push(num - a2);
            eval.psi_main.push(den - a2);
            eval.eps_eve.push(theta_e - a2);
            eval.theta_main.push(theta_m);
            eval.theta_eve.push(theta_e);
            let w = params.weights[k];
            eval.growth = eval.growth + w * (theta_m.ln() - theta_e.ln()) / T::LN_2();
            // first-order term of the growth in P: log2(1 + x) ~ x / ln 2
            let d_main = (a2 * own - t) / params.sigma2_main;
            let d_eve = (a2 * leak - te) / params.sigma2_eve;
            eval.low_power_slope = eval.low_power_slope + w * (d_main - d_eve) / T::LN_2();
        }
        Ok(eval)
    }

    /// State with `candidate` appended; the power is carried over.
    pub fn extend(&self, channels: &ChannelPair<T>, candidate: usize) -> Result<Self> {
        self.check_candidate(candidate)?;
        let h = channels.h_main().row(candidate);
        let g = channels.g_eve().row(candidate);
        let beta = self.precoder.beta();
        let alpha = alpha_factor(beta, h);

        let mut selection = self.selection.clone();
        selection.push(candidate);
        let mut member = self.member.clone();
        member[candidate] = true;
        let h_eff = self.h_eff.with_row(h)?;
        let g_eff = self.g_eff.with_row(g)?;

        if self.since_refresh + 1 >= REFRESH_INTERVAL {
            return Ok(Self::from_scratch(
                selection, member, h_eff, g_eff, self.power,
            ));
        }

        let new_row: Vec<Complex<T>> = h.iter().map(|z| z.conj() * beta).collect();
        let w = self.precoder.w().with_row(&new_row)?.scale(alpha);
        let precoder = Precoder::from_parts(w, alpha * beta);

        let k_users = h.len();
        let gains_main = ComplexMatrix::from_fn(k_users, k_users, |k, j| {
            (self.gains_main.get(k, j) + h[k] * h[j].conj() * beta) * alpha
        });
        let gains_eve = ComplexMatrix::from_fn(g.len(), k_users, |n, k| {
            (self.gains_eve.get(n, k) + g[n] * h[k].conj() * beta) * alpha
        });
        let terms = SinrTerms::from_gains(&gains_main, &gains_eve);
        let next = Self {
            selection,
            member,
            h_eff,
            g_eff,
            precoder,
            gains_main,
            gains_eve,
            terms,
            power: self.power,
            since_refresh: self.since_refresh + 1,
        };
        debug_assert!(
            next.cache_deviation() < drift_tolerance::<T>(),
            "incremental caches drifted from a rebuild"
        );
        Ok(next)
    }
}

/// 1e-9 in double precision, looser for types with a coarser epsilon.
fn drift_tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(1e4))
}

fn rel_dev<T: Real>(a: T, b: T) -> T {
    (a - b).abs() / b.abs().max(T::min_positive_value())
}

/// Free-function form of [`SelectionState::init`].
pub fn init_state<T: Real>(
    channels: &ChannelPair<T>,
    first_index: usize,
    p: T,
) -> Result<SelectionState<T>> {
    SelectionState::init(channels, first_index, p)
}

/// Free-function form of [`SelectionState::eval_candidate`].
pub fn eval_candidate<T: Real>(
    state: &SelectionState<T>,
    channels: &ChannelPair<T>,
    candidate: usize,
    p: T,
    params: &SystemParams<T>,
) -> Result<GrowthEval<T>> {
    state.eval_candidate(channels, candidate, p, params)
}

/// Free-function form of [`SelectionState::extend`].
pub fn extend_state<T: Real>(
    state: &SelectionState<T>,
    channels: &ChannelPair<T>,
    candidate: usize,
) -> Result<SelectionState<T>> {
    state.extend(channels, candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::evaluate_selection;
    use crate::model::SystemParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn real_pair(m: usize, k: usize, n: usize, h: &[f64], g: &[f64]) -> ChannelPair<f64> {
        ChannelPair::new(
            ComplexMatrix::from_real(m, k, h).unwrap(),
            ComplexMatrix::from_real(m, n, g).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn init_matches_direct_construction() {
        let ch = real_pair(2, 1, 1, &[1.0, 2.0], &[0.5, 0.3]);
        let s = init_state(&ch, 1, 1.0).unwrap();
        assert_eq!(s.selection(), &[1]);
        assert!((s.precoder().beta() - 0.5).abs() < 1e-15);
        assert!((s.precoder().w().get(0, 0).re - 1.0).abs() < 1e-15);
        assert!((s.sinr_terms().t_main[0] - 4.0).abs() < 1e-15);
        let params = SystemParams::uniform(2, 1, 1, 2, 1.0, 1.0).unwrap();
        let direct = evaluate_selection(&ch, &[1], 1.0, &params).unwrap();
        assert!((s.report(&params).weighted_avg - direct.weighted_avg).abs() < 1e-15);
    }

    #[test]
    fn init_errors() {
        let ch = real_pair(2, 1, 1, &[0.0, 2.0], &[0.5, 0.3]);
        assert!(matches!(
            init_state(&ch, 0, 1.0),
            Err(TasError::DegenerateChannel(_))
        ));
        assert!(matches!(
            init_state(&ch, 2, 1.0),
            Err(TasError::InvalidSelection(_))
        ));
        let s = init_state(&ch, 1, 1.0).unwrap();
        assert_eq!(s.extend(&ch, 1).unwrap_err(), TasError::InvalidCandidate(1));
        let params = SystemParams::uniform(2, 1, 1, 2, 1.0, 1.0).unwrap();
        assert_eq!(
            s.eval_candidate(&ch, 1, 1.0, &params).unwrap_err(),
            TasError::InvalidCandidate(1)
        );
    }

    #[test]
    fn no_leakage_without_eve_channel() {
        let ch = real_pair(1, 1, 1, &[1.0], &[0.0]);
        let s = init_state(&ch, 0, 1.0).unwrap();
        for p in [0.1, 1.0, 10.0] {
            assert_eq!(metrics::sinr_eve(s.sinr_terms(), p, 0.1, 0), 0.0);
        }
    }

    #[test]
    fn alpha_examples() {
        let zero = [Complex::new(0.0, 0.0); 2];
        assert_eq!(alpha_factor(0.7, &zero), 1.0);
        let h = [Complex::new(1.0, 1.0), Complex::new(1.0, 0.0)];
        assert!((alpha_factor(1.0f64, &h) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn null_extension_changes_nothing() {
        let ch = real_pair(2, 2, 1, &[1.0, 0.5, 0.0, 0.0], &[0.2, 0.0]);
        let params = SystemParams::uniform(2, 2, 1, 2, 1.0, 0.1).unwrap();
        let s = init_state(&ch, 0, 1.0).unwrap();
        let e = s.eval_candidate(&ch, 1, 1.0, &params).unwrap();
        assert_eq!(e.alpha2, 1.0);
        for k in 0..2 {
            assert!((e.theta_main[k] - 1.0).abs() < 1e-15);
            assert!((e.theta_eve[k] - 1.0).abs() < 1e-15);
        }
        assert!(e.growth.abs() < 1e-15);
        let next = s.extend(&ch, 1).unwrap();
        assert_eq!(next.precoder().w().row(0), s.precoder().w().row(0));
        assert!(next.precoder().w().row(1).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn order_invariant_beta() {
        let h = [1.0, -2.0, 0.5, 3.0, -1.0, 0.0, 2.0, 2.0];
        let ch = real_pair(4, 2, 1, &h, &[0.1, 0.2, 0.3, 0.4]);
        let expect = 1.0 / h.iter().map(|x| x * x).sum::<f64>().sqrt();
        for order in [[0, 1, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1]] {
            let mut s = init_state(&ch, order[0], 1.0).unwrap();
            for &i in &order[1..] {
                s = s.extend(&ch, i).unwrap();
            }
            assert!((s.precoder().beta() - expect).abs() < 1e-15);
            assert!((s.precoder().trace_wwh() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn long_runs_stay_coherent_through_refresh() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let ch = ChannelPair::<f64>::rayleigh(80, 3, 2, &mut rng);
        let mut s = init_state(&ch, 0, 0.5).unwrap();
        for i in 1..80 {
            s = s.extend(&ch, i).unwrap();
            assert!(s.cache_deviation() < 1e-9);
            assert!((s.precoder().trace_wwh() - 1.0).abs() < 1e-12);
        }
        assert_eq!(s.len(), 80);
    }

    #[test]
    fn low_power_slope_is_the_limit_of_growth_over_power() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let ch = ChannelPair::<f64>::rayleigh(9, 3, 2, &mut rng);
        let params = SystemParams::uniform(9, 3, 2, 9, 1.0, 0.1).unwrap();
        let mut s = init_state(&ch, 4, 0.0).unwrap();
        s = s.extend(&ch, 0).unwrap();
        for cand in [1, 2, 7] {
            let slope = s.eval_candidate(&ch, cand, 0.0, &params).unwrap();
            assert_eq!(slope.growth, 0.0);
            assert_eq!(slope.score(0.0), slope.low_power_slope);
            let h = 1e-7;
            let fd = s.eval_candidate(&ch, cand, h, &params).unwrap().growth / h;
            assert!(
                (fd - slope.low_power_slope).abs() < 1e-4 * slope.low_power_slope.abs().max(1.0)
            );
            let at_one = s.eval_candidate(&ch, cand, 1.0, &params).unwrap();
            assert_eq!(at_one.score(1.0), at_one.growth);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let ch = ChannelPair::<f32>::rayleigh(6, 2, 2, &mut rng);
        let params = SystemParams::<f32>::uniform(6, 2, 2, 3, 1.0, 0.1).unwrap();
        let s = init_state(&ch, 0, 1.0f32).unwrap();
        let e = s.eval_candidate(&ch, 3, 1.0, &params).unwrap();
        let next = s.extend(&ch, 3).unwrap();
        let direct = next.unclipped_rate(1.0, &params) - s.unclipped_rate(1.0, &params);
        assert!((direct - e.growth).abs() < 1e-4);
    }
}
