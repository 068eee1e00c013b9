//! Naive reference implementations shared by the integration tests.
//!
//! Everything here is recomputed from the raw channel entries with plain
//! loops, so it shares no code path with the library's cached updates.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use wiretap_tas::{ChannelPair, SystemParams};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Per-user `(|h_k^T w_k|^2, sum_{j != k} |h_k^T w_j|^2, ||G^T w_k||^2)` for
/// unit-power MRT on `selection`.
pub fn naive_terms(ch: &ChannelPair, selection: &[usize]) -> Vec<(f64, f64, f64)> {
    let k = ch.users();
    let n = ch.eve_antennas();
    let h = ch.h_main();
    let g = ch.g_eve();
    let mut fro = 0.0;
    for &i in selection {
        for u in 0..k {
            fro += h.get(i, u).norm_sqr();
        }
    }
    let scale = 1.0 / fro.sqrt();
    // w[l][j] = conj(h[sel_l][j]) * scale
    let w: Vec<Vec<Complex64>> = selection
        .iter()
        .map(|&i| (0..k).map(|j| h.get(i, j).conj() * scale).collect())
        .collect();

    let mut out = Vec::with_capacity(k);
    for user in 0..k {
        let mut own = 0.0;
        let mut other = 0.0;
        for j in 0..k {
            let mut acc = Complex64::new(0.0, 0.0);
            for (wl, &i) in w.iter().zip(selection) {
                acc += h.get(i, user) * wl[j];
            }
            if j == user {
                own = acc.norm_sqr();
            } else {
                other += acc.norm_sqr();
            }
        }
        let mut leak = 0.0;
        for e in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, &i) in selection.iter().enumerate() {
                acc += g.get(i, e) * w[l][user];
            }
            leak += acc.norm_sqr();
        }
        out.push((own, other, leak));
    }
    out
}

/// Per-user `(1 + gamma_main, 1 + gamma_eve)` at power `p`.
pub fn naive_sinr(
    ch: &ChannelPair,
    selection: &[usize],
    p: f64,
    params: &SystemParams,
) -> Vec<(f64, f64)> {
    let rho_m = p / params.sigma2_main;
    let rho_e = p / params.sigma2_eve;
    naive_terms(ch, selection)
        .into_iter()
        .map(|(t, u, te)| (1.0 + rho_m * t / (1.0 + rho_m * u), 1.0 + rho_e * te))
        .collect()
}

pub fn naive_rate(
    ch: &ChannelPair,
    selection: &[usize],
    p: f64,
    params: &SystemParams,
    clipped: bool,
) -> f64 {
    naive_sinr(ch, selection, p, params)
        .into_iter()
        .zip(&params.weights)
        .map(|((m, e), w)| {
            let r = (m / e).log2();
            w * if clipped { r.max(0.0) } else { r }
        })
        .sum()
}

/// Best clipped rate over `points` evenly spaced powers in `[0, P_max]`.
pub fn dense_grid_best(
    ch: &ChannelPair,
    selection: &[usize],
    params: &SystemParams,
    points: usize,
) -> f64 {
    let terms = naive_terms(ch, selection);
    let rho = |p: f64| (p / params.sigma2_main, p / params.sigma2_eve);
    (0..points)
        .map(|i| {
            let p = params.p_max * i as f64 / (points - 1) as f64;
            let (rm, re) = rho(p);
            terms
                .iter()
                .zip(&params.weights)
                .map(|(&(t, u, te), w)| {
                    w * ((1.0 + rm * t / (1.0 + rm * u)) / (1.0 + re * te))
                        .log2()
                        .max(0.0)
                })
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// `tr(W W^H)` summed straight from the entries.
pub fn trace_wwh(w: &wiretap_tas::ComplexMatrix) -> f64 {
    w.entries().iter().map(|z| z.norm_sqr()).sum()
}
