//! Transmit power control for a fixed antenna selection.

use crate::metrics::{weighted_rate, SinrTerms};
use crate::model::SystemParams;
use crate::scalar::Real;

/// Knobs shared by the selection algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig<T> {
    /// Stop as soon as the best growth term is non-positive.
    pub enforce_stc: bool,
    /// Uniform grid points on `[0, P_max]`, endpoints included.
    pub power_grid_points: usize,
    /// Golden-section bracket width at which refinement stops, relative to `P_max`.
    pub power_refine_tol: T,
}

impl<T: Real> Default for SelectorConfig<T> {
    fn default() -> Self {
        Self {
            enforce_stc: true,
            power_grid_points: 256,
            power_refine_tol: T::lit(1e-6),
        }
    }
}

impl<T: Real> SelectorConfig<T> {
    pub fn without_stc() -> Self {
        Self {
            enforce_stc: false,
            ..Self::default()
        }
    }
}

/// Absolute rate tolerance under which two candidates count as tied.
pub(crate) fn tie_tol<T: Real>() -> T {
    T::lit(1e-12)
}

/// Maximizes a unimodal `f` on `[lo, hi]`; returns the final midpoint and
/// its value.
pub fn golden_section_max<T: Real>(mut f: impl FnMut(T) -> T, lo: T, hi: T, tol: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / T::lit(2.0);
    (x, f(x))
}

/// Power in `[0, P_max]` maximizing the clipped weighted secrecy rate for
/// fixed SINR terms.
///
/// A uniform grid locates the best bracket (smallest power wins ties),
/// then golden-section search refines inside the two neighbouring grid
/// cells. The refined point replaces the grid point only if it is strictly
/// better.
pub fn optimize_power<T: Real>(
    terms: &SinrTerms<T>,
    params: &SystemParams<T>,
    config: &SelectorConfig<T>,
) -> T {
    let points = config.power_grid_points.max(2);
    let step = params.p_max / T::from_count(points - 1);
    let objective = |p: T| weighted_rate(terms, p, params, true);

    let mut best_i = 0;
    let mut best_v = objective(T::zero());
    for i in 1..points {
        let p = if i == points - 1 {
            params.p_max
        } else {
            step * T::from_count(i)
        };
        let v = objective(p);
        if v > best_v + tie_tol() {
            best_i = i;
            best_v = v;
        }
    }
    let grid_p = if best_i == points - 1 {
        params.p_max
    } else {
        step * T::from_count(best_i)
    };

    let lo = if best_i == 0 {
        T::zero()
    } else {
        step * T::from_count(best_i - 1)
    };
    let hi = (step * T::from_count(best_i + 1)).min(params.p_max);
    let (p, v) = golden_section_max(objective, lo, hi, config.power_refine_tol * params.p_max);
    if v > best_v + tie_tol() {
        p
    } else {
        grid_p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(sigma2: f64) -> SystemParams<f64> {
        SystemParams::uniform(1, 1, 1, 1, 1.0, sigma2).unwrap()
    }

    fn terms(t: f64, u: f64, te: f64) -> SinrTerms<f64> {
        SinrTerms {
            t_main: vec![t],
            u_main: vec![u],
            t_eve: vec![te],
        }
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x: f64| -(x - 0.3).powi(2), 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx.abs() < 1e-15);
    }

    #[test]
    fn monotone_objective_uses_full_power() {
        let p = optimize_power(
            &terms(1.0, 0.0, 0.0),
            &params(1.0),
            &SelectorConfig::default(),
        );
        assert_eq!(p, 1.0);
    }

    #[test]
    fn flat_zero_objective_uses_zero_power() {
        let p = optimize_power(
            &terms(1.0, 0.0, 2.0),
            &params(1.0),
            &SelectorConfig::default(),
        );
        assert_eq!(p, 0.0);
    }

    #[test]
    fn interior_optimum_matches_dense_grid() {
        let t = terms(1.0, 1.0, 0.1);
        let pr = params(1.0);
        let p = optimize_power(&t, &pr, &SelectorConfig::default());
        // dense-grid oracle
        let n = 1_000_000;
        let (mut bp, mut bv) = (0.0, f64::NEG_INFINITY);
        for i in 0..=n {
            let q = i as f64 / n as f64;
            let v = weighted_rate(&t, q, &pr, true);
            if v > bv {
                bp = q;
                bv = v;
            }
        }
        assert!((p - bp).abs() < 1e-4, "p = {p}, dense = {bp}");
        assert!(weighted_rate(&t, p, &pr, true) >= bv - 1e-9);
    }
}
