//! Exact, from-scratch secrecy metrics under MRT precoding.
//!
//! For a selected set of antennas with effective channels `H_sel` (L x K),
//! `G_sel` (L x N) and precoder `W` (L x K), user `k` sees
//!
//! ```text
//! t_k = |h_k^T w_k|^2          u_k = sum_{j != k} |h_k^T w_j|^2
//! gamma_k^m = rho_m t_k / (1 + rho_m u_k),    rho_m = P / sigma_m^2
//! ```
//!
//! and the eavesdropper, cancelling all interference, sees
//! `gamma_k^e = rho_e ||G_sel^T w_k||^2`. The per-user secrecy rate is
//! `[log2(1 + gamma^m) - log2(1 + gamma^e)]^+` and the reported metric is
//! its weighted sum. The unclipped difference is exposed as well because
//! the stepwise recursion is only additive before clipping.

use num_complex::Complex;

use crate::error::{Result, TasError};
use crate::model::{mrt_precoder, ChannelPair, ComplexMatrix, Precoder, SystemParams};
use crate::scalar::Real;

/// Power-independent SINR building blocks for every user.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTerms<T> {
    pub t_main: Vec<T>,
    pub u_main: Vec<T>,
    pub t_eve: Vec<T>,
}

impl<T: Real> SinrTerms<T> {
    pub fn users(&self) -> usize {
        self.t_main.len()
    }

    /// Builds the terms from the cross-gain matrices `A = H_sel^T W`
    /// (K x K) and `B = G_sel^T W` (N x K).
    pub(crate) fn from_gains(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Self {
        let k_users = a.rows();
        let mut t_main = Vec::with_capacity(k_users);
        let mut u_main = Vec::with_capacity(k_users);
        let mut t_eve = Vec::with_capacity(k_users);
        for k in 0..k_users {
            let row = a.row(k);
            let total: T = row.iter().map(|z| z.norm_sqr()).sum();
            let own = row[k].norm_sqr();
            t_main.push(own);
            u_main.push((total - own).max(T::zero()));
            t_eve.push((0..b.rows()).map(|n| b.get(n, k).norm_sqr()).sum());
        }
        Self {
            t_main,
            u_main,
            t_eve,
        }
    }
}

/// `X^T W` for `X` (L x C) and `W` (L x K), giving a C x K matrix.
pub(crate) fn cross_gains<T: Real>(x: &ComplexMatrix<T>, w: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![zero; x.cols() * w.cols()];
    for r in 0..x.rows() {
        let xr = x.row(r);
        let wr = w.row(r);
        for (c, xv) in xr.iter().enumerate() {
            let dst = &mut out[c * w.cols()..(c + 1) * w.cols()];
            for (d, wv) in dst.iter_mut().zip(wr) {
                *d = *d + xv * wv;
            }
        }
    }
    ComplexMatrix::new(x.cols(), w.cols(), out).expect("finite products of finite matrices")
}

pub fn sinr_terms<T: Real>(
    h_eff: &ComplexMatrix<T>,
    g_eff: &ComplexMatrix<T>,
    precoder: &Precoder<T>,
) -> Result<SinrTerms<T>> {
    let w = precoder.w();
    if h_eff.rows() != w.rows() || g_eff.rows() != w.rows() || h_eff.cols() != w.cols() {
        return Err(TasError::Shape(format!(
            "h_eff {}x{}, g_eff {}x{}, precoder {}x{}",
            h_eff.rows(),
            h_eff.cols(),
            g_eff.rows(),
            g_eff.cols(),
            w.rows(),
            w.cols()
        )));
    }
    Ok(SinrTerms::from_gains(
        &cross_gains(h_eff, w),
        &cross_gains(g_eff, w),
    ))
}

/// SINR of user `k` at its legitimate receiver.
pub fn sinr_main<T: Real>(terms: &SinrTerms<T>, p: T, sigma2_main: T, k: usize) -> T {
    if p == T::zero() {
        return T::zero();
    }
    let rho = p / sigma2_main;
    rho * terms.t_main[k] / (T::one() + rho * terms.u_main[k])
}

/// Worst-case SINR of user `k`'s stream at the eavesdropper.
pub fn sinr_eve<T: Real>(terms: &SinrTerms<T>, p: T, sigma2_eve: T, k: usize) -> T {
    if p == T::zero() {
        return T::zero();
    }
    p / sigma2_eve * terms.t_eve[k]
}

#[inline]
fn log2_1p<T: Real>(x: T) -> T {
    x.ln_1p() / T::LN_2()
}

/// Unclipped per-user rate difference `log2((1+gamma^m)/(1+gamma^e))`.
pub fn unclipped_user_rate<T: Real>(
    terms: &SinrTerms<T>,
    p: T,
    params: &SystemParams<T>,
    k: usize,
) -> T {
    log2_1p(sinr_main(terms, p, params.sigma2_main, k))
        - log2_1p(sinr_eve(terms, p, params.sigma2_eve, k))
}

/// Weighted sum of per-user rate differences, optionally clipped per user
/// at zero before weighting.
pub fn weighted_rate<T: Real>(
    terms: &SinrTerms<T>,
    p: T,
    params: &SystemParams<T>,
    clipped: bool,
) -> T {
    params
        .weights
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let r = unclipped_user_rate(terms, p, params, k);
            w * if clipped { r.max(T::zero()) } else { r }
        })
        .sum()
}

/// Rates for one operating point `(P, selection)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyReport<T> {
    pub per_user_rate_main: Vec<T>,
    pub per_user_rate_eve: Vec<T>,
    /// `log2((1+gamma^m)/(1+gamma^e))`, may be negative.
    pub per_user_unclipped: Vec<T>,
    pub per_user_secrecy: Vec<T>,
    pub weighted_avg: T,
    pub weighted_unclipped: T,
    pub power: T,
    pub selection: Vec<usize>,
}

/// Report from precomputed terms; `selection` is recorded as given.
pub fn report_from_terms<T: Real>(
    terms: &SinrTerms<T>,
    p: T,
    params: &SystemParams<T>,
    selection: &[usize],
) -> SecrecyReport<T> {
    let k_users = terms.users();
    let mut main = Vec::with_capacity(k_users);
    let mut eve = Vec::with_capacity(k_users);
    for k in 0..k_users {
        main.push(log2_1p(sinr_main(terms, p, params.sigma2_main, k)));
        eve.push(log2_1p(sinr_eve(terms, p, params.sigma2_eve, k)));
    }
    let unclipped: Vec<T> = main.iter().zip(&eve).map(|(&m, &e)| m - e).collect();
    let secrecy: Vec<T> = unclipped.iter().map(|r| r.max(T::zero())).collect();
    let dot = |v: &[T]| -> T { params.weights.iter().zip(v).map(|(&w, &r)| w * r).sum() };
    SecrecyReport {
        weighted_avg: dot(&secrecy),
        weighted_unclipped: dot(&unclipped),
        per_user_rate_main: main,
        per_user_rate_eve: eve,
        per_user_unclipped: unclipped,
        per_user_secrecy: secrecy,
        power: p,
        selection: selection.to_vec(),
    }
}

/// Secrecy report for given effective channels and precoder. The report's
/// `selection` is left empty; see [`evaluate_selection`].
pub fn secrecy_rate<T: Real>(
    h_eff: &ComplexMatrix<T>,
    g_eff: &ComplexMatrix<T>,
    precoder: &Precoder<T>,
    p: T,
    params: &SystemParams<T>,
) -> Result<SecrecyReport<T>> {
    if h_eff.cols() != params.weights.len() {
        return Err(TasError::Shape(format!(
            "{} users in channel, {} weights",
            h_eff.cols(),
            params.weights.len()
        )));
    }
    let terms = sinr_terms(h_eff, g_eff, precoder)?;
    Ok(report_from_terms(&terms, p, params, &[]))
}

/// Terms for an antenna subset of the full channels, built from scratch.
pub fn selection_terms<T: Real>(
    channels: &ChannelPair<T>,
    selection: &[usize],
) -> Result<SinrTerms<T>> {
    let h_eff = channels.h_main().select_rows(selection)?;
    let g_eff = channels.g_eve().select_rows(selection)?;
    let precoder = mrt_precoder(&h_eff)?;
    sinr_terms(&h_eff, &g_eff, &precoder)
}

/// From-scratch report for `(p, selection)` on the full channels.
pub fn evaluate_selection<T: Real>(
    channels: &ChannelPair<T>,
    selection: &[usize],
    p: T,
    params: &SystemParams<T>,
) -> Result<SecrecyReport<T>> {
    let terms = selection_terms(channels, selection)?;
    Ok(report_from_terms(&terms, p, params, selection))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: usize, sigma2: f64) -> SystemParams<f64> {
        SystemParams::uniform(4, k, 1, 1, 1.0, sigma2).unwrap()
    }

    fn terms(t: f64, u: f64, te: f64) -> SinrTerms<f64> {
        SinrTerms {
            t_main: vec![t],
            u_main: vec![u],
            t_eve: vec![te],
        }
    }

    #[test]
    fn scalar_channel_terms() {
        let h = ComplexMatrix::from_real(1, 1, &[1.0]).unwrap();
        let g = ComplexMatrix::from_real(1, 1, &[0.0]).unwrap();
        let p = mrt_precoder(&h).unwrap();
        assert_eq!(sinr_terms(&h, &g, &p).unwrap(), terms(1.0, 0.0, 0.0));
    }

    #[test]
    fn orthogonal_users() {
        let h = ComplexMatrix::<f64>::identity(2);
        let g = ComplexMatrix::zeros(2, 1);
        let p = mrt_precoder(&h).unwrap();
        let t = sinr_terms(&h, &g, &p).unwrap();
        for k in 0..2 {
            assert!((t.t_main[k] - 0.5).abs() < 1e-15);
            assert_eq!(t.u_main[k], 0.0);
            assert_eq!(t.t_eve[k], 0.0);
        }
        assert!((sinr_main(&t, 1.0, 0.1, 0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let h = ComplexMatrix::<f64>::identity(2);
        let g = ComplexMatrix::zeros(3, 1);
        let p = mrt_precoder(&h).unwrap();
        assert!(matches!(sinr_terms(&h, &g, &p), Err(TasError::Shape(_))));
    }

    #[test]
    fn sinr_examples() {
        assert_eq!(sinr_main(&terms(1.0, 0.0, 0.0), 1.0, 1.0, 0), 1.0);
        assert_eq!(sinr_main(&terms(1.0, 0.0, 0.0), 0.0, 1.0, 0), 0.0);
        assert_eq!(sinr_eve(&terms(1.0, 0.0, 0.0), 7.0, 1.0, 0), 0.0);
        assert_eq!(sinr_eve(&terms(1.0, 0.0, 1.0), 1.0, 1.0, 0), 1.0);
        assert!((sinr_eve(&terms(1.0, 0.0, 2.0), 1.0, 0.1, 0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn secrecy_examples() {
        // gamma^m = 3, gamma^e = 1 -> log2(4/2) = 1
        let r = report_from_terms(&terms(3.0, 0.0, 1.0), 1.0, &params(1, 1.0), &[0]);
        assert!((r.weighted_avg - 1.0).abs() < 1e-15);
        // gamma^m = gamma^e
        let r = report_from_terms(&terms(2.0, 0.0, 2.0), 1.0, &params(1, 1.0), &[0]);
        assert_eq!(r.weighted_avg, 0.0);
        // gamma^m = 0.5, gamma^e = 3 -> clipped to 0
        let r = report_from_terms(&terms(0.5, 0.0, 3.0), 1.0, &params(1, 1.0), &[0]);
        assert_eq!(r.per_user_secrecy, vec![0.0]);
        assert!(r.per_user_unclipped[0] < 0.0);
        assert_eq!(r.weighted_avg, 0.0);
    }

    #[test]
    fn zero_power_and_scale_invariance() {
        let t = SinrTerms {
            t_main: vec![0.7, 0.2],
            u_main: vec![0.1, 0.4],
            t_eve: vec![0.3, 0.01],
        };
        let p = params(2, 0.1);
        assert_eq!(report_from_terms(&t, 0.0, &p, &[]).weighted_avg, 0.0);
        for k in 0..2 {
            let a = sinr_main(&t, 0.8, 0.1, k);
            let b = sinr_main(&t, 8.0, 1.0, k);
            assert!((a - b).abs() <= 1e-12 * a);
            let a = sinr_eve(&t, 0.8, 0.1, k);
            let b = sinr_eve(&t, 8.0, 1.0, k);
            assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn report_invariants() {
        let t = SinrTerms {
            t_main: vec![0.7, 0.2],
            u_main: vec![0.1, 0.4],
            t_eve: vec![0.3, 0.01],
        };
        let mut p = params(2, 0.1);
        p.weights = vec![0.25, 0.75];
        let r = report_from_terms(&t, 0.6, &p, &[1, 3]);
        let mut expect = 0.0;
        for k in 0..2 {
            let d = r.per_user_rate_main[k] - r.per_user_rate_eve[k];
            assert!((r.per_user_secrecy[k] - d.max(0.0)).abs() < 1e-15);
            expect += p.weights[k] * r.per_user_secrecy[k];
        }
        assert!((r.weighted_avg - expect).abs() < 1e-15);
        assert_eq!(r.selection, vec![1, 3]);
        assert!((weighted_rate(&t, 0.6, &p, true) - r.weighted_avg).abs() < 1e-15);
        assert!((weighted_rate(&t, 0.6, &p, false) - r.weighted_unclipped).abs() < 1e-15);
    }
}
