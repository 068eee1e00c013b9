//! Channel representation, Rayleigh channel generation, antenna (row)
//! selection and MRT precoding.
//!
//! Antenna indices are zero-based throughout the crate. A selection is an
//! ordered list in insertion order; membership is the only set-like query.

use std::fmt;

use num_complex::Complex;
use rand::RngCore;

use crate::error::{Result, TasError};
use crate::scalar::Real;

/// Dense complex matrix stored row-major. Values are immutable once built;
/// "mutating" operations return new matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        if rows * cols != entries.len() {
            return Err(TasError::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(TasError::NonFinite);
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Real-valued matrix from row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[T]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries
                .iter()
                .map(|&x| Complex::new(x, T::zero()))
                .collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_norm_sqr(&self, r: usize) -> T {
        self.row(r).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm_sqr(&self) -> T {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries
            .iter()
            .all(|z| z.re == T::zero() && z.im == T::zero())
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    /// New matrix with `row` appended at the bottom.
    pub fn with_row(&self, row: &[Complex<T>]) -> Result<Self> {
        if row.len() != self.cols {
            return Err(TasError::Shape(format!(
                "appended row has {} entries, matrix has {} columns",
                row.len(),
                self.cols
            )));
        }
        let mut entries = Vec::with_capacity(self.entries.len() + self.cols);
        entries.extend_from_slice(&self.entries);
        entries.extend_from_slice(row);
        Ok(Self {
            rows: self.rows + 1,
            cols: self.cols,
            entries,
        })
    }

    /// Rows of `self` at `indices`, in the order given.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        validate_selection(indices, self.rows)?;
        let mut entries = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            entries.extend_from_slice(self.row(i));
        }
        Ok(Self {
            rows: indices.len(),
            cols: self.cols,
            entries,
        })
    }
}

/// Plain-text dump: one row per line, entries as `a+bi`.
impl<T: Real> fmt::Display for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let line: Vec<String> = self
                .row(r)
                .iter()
                .map(|z| {
                    if z.im < T::zero() {
                        format!("{}-{}i", z.re, -z.im)
                    } else {
                        format!("{}+{}i", z.re, z.im)
                    }
                })
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Checks that `indices` are distinct and each below `bound`.
pub fn validate_selection(indices: &[usize], bound: usize) -> Result<()> {
    let mut seen = vec![false; bound];
    for &i in indices {
        if i >= bound {
            return Err(TasError::InvalidSelection(format!(
                "index {i} out of range for {bound} antennas"
            )));
        }
        if seen[i] {
            return Err(TasError::InvalidSelection(format!("index {i} repeated")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Free-function form of [`ComplexMatrix::select_rows`].
pub fn select_rows<T: Real>(mat: &ComplexMatrix<T>, indices: &[usize]) -> Result<ComplexMatrix<T>> {
    mat.select_rows(indices)
}

/// One circularly-symmetric complex Gaussian draw with unit variance.
///
/// Box-Muller on two 53-bit uniforms taken from consecutive `next_u64`
/// calls: `u1` in (0, 1] sets the radius `sqrt(-ln u1)`, `u2` in [0, 1)
/// sets the phase. Real and imaginary parts are independent N(0, 1/2).
/// This mapping is part of the reproducibility contract and must not change.
pub fn complex_gaussian<T: Real, R: RngCore + ?Sized>(rng: &mut R) -> Complex<T> {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * SCALE;
    let u2 = (rng.next_u64() >> 11) as f64 * SCALE;
    let radius = (-u1.ln()).sqrt();
    let phase = std::f64::consts::TAU * u2;
    Complex::new(T::lit(radius * phase.cos()), T::lit(radius * phase.sin()))
}

/// `rows x cols` matrix of i.i.d. CN(0, 1) entries, filled row-major.
pub fn generate_rayleigh<T: Real, R: RngCore + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> ComplexMatrix<T> {
    assert!(
        rows >= 1 && cols >= 1,
        "Rayleigh matrix needs positive dimensions"
    );
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Main channel `H` (M x K) and eavesdropper channel `G` (M x N).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair<T> {
    h_main: ComplexMatrix<T>,
    g_eve: ComplexMatrix<T>,
}

impl<T: Real> ChannelPair<T> {
    pub fn new(h_main: ComplexMatrix<T>, g_eve: ComplexMatrix<T>) -> Result<Self> {
        if h_main.rows() != g_eve.rows() {
            return Err(TasError::Shape(format!(
                "H has {} antennas but G has {}",
                h_main.rows(),
                g_eve.rows()
            )));
        }
        if h_main.rows() == 0 || h_main.cols() == 0 || g_eve.cols() == 0 {
            return Err(TasError::Shape("channel matrices must be non-empty".into()));
        }
        Ok(Self { h_main, g_eve })
    }

    /// Draws `H` first, then `G`, from the same stream.
    pub fn rayleigh<R: RngCore + ?Sized>(m: usize, k: usize, n: usize, rng: &mut R) -> Self {
        let h_main = generate_rayleigh(m, k, rng);
        let g_eve = generate_rayleigh(m, n, rng);
        Self { h_main, g_eve }
    }

    pub fn h_main(&self) -> &ComplexMatrix<T> {
        &self.h_main
    }

    pub fn g_eve(&self) -> &ComplexMatrix<T> {
        &self.g_eve
    }

    pub fn antennas(&self) -> usize {
        self.h_main.rows()
    }

    pub fn users(&self) -> usize {
        self.h_main.cols()
    }

    pub fn eve_antennas(&self) -> usize {
        self.g_eve.cols()
    }
}

/// System dimensions, power budget, noise levels and user weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams<T> {
    pub m_antennas: usize,
    pub k_users: usize,
    pub n_eve: usize,
    pub l_max: usize,
    pub p_max: T,
    pub sigma2_main: T,
    pub sigma2_eve: T,
    pub weights: Vec<T>,
}

impl<T: Real> SystemParams<T> {
    /// Parameters with equal weights `1/K` and a common noise variance.
    pub fn uniform(
        m: usize,
        k: usize,
        n: usize,
        l_max: usize,
        p_max: T,
        sigma2: T,
    ) -> Result<Self> {
        let params = Self {
            m_antennas: m,
            k_users: k,
            n_eve: n,
            l_max,
            p_max,
            sigma2_main: sigma2,
            sigma2_eve: sigma2,
            weights: uniform_weights(k),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_l_max(&self, l_max: usize) -> Result<Self> {
        let params = Self {
            l_max,
            ..self.clone()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TasError::InvalidParams(msg));
        if self.m_antennas == 0 || self.k_users == 0 || self.n_eve == 0 {
            return bad("m, k and n must be at least 1".into());
        }
        if self.l_max == 0 || self.l_max > self.m_antennas {
            return bad(format!(
                "l_max = {} must lie in [1, {}]",
                self.l_max, self.m_antennas
            ));
        }
        if !(self.p_max > T::zero()) || !self.p_max.is_finite() {
            return bad(format!("p_max = {} must be positive", self.p_max));
        }
        if !(self.sigma2_main > T::zero()) || !(self.sigma2_eve > T::zero()) {
            return bad("noise variances must be positive".into());
        }
        if self.weights.len() != self.k_users {
            return bad(format!(
                "{} weights given for {} users",
                self.weights.len(),
                self.k_users
            ));
        }
        if self
            .weights
            .iter()
            .any(|w| !(*w >= T::zero()) || !w.is_finite())
        {
            return bad("weights must be finite and nonnegative".into());
        }
        Ok(())
    }

    /// Checks that `channels` has the dimensions these parameters describe.
    pub fn check_channels(&self, channels: &ChannelPair<T>) -> Result<()> {
        if channels.antennas() != self.m_antennas
            || channels.users() != self.k_users
            || channels.eve_antennas() != self.n_eve
        {
            return Err(TasError::Shape(format!(
                "channels are {}x{} / {}x{}, parameters expect M={}, K={}, N={}",
                channels.antennas(),
                channels.users(),
                channels.antennas(),
                channels.eve_antennas(),
                self.m_antennas,
                self.k_users,
                self.n_eve
            )));
        }
        Ok(())
    }
}

pub fn uniform_weights<T: Real>(k: usize) -> Vec<T> {
    vec![T::one() / T::from_count(k); k]
}

/// MRT signal-shaping matrix `W = beta * conj(H_sel)` with
/// `beta = 1 / ||H_sel||_F`, so that `tr(W W^H) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder<T> {
    w: ComplexMatrix<T>,
    beta: T,
}

impl<T: Real> Precoder<T> {
    /// Wraps an already-normalized precoder. Used by the incremental
    /// extension, which maintains the normalization analytically.
    pub(crate) fn from_parts(w: ComplexMatrix<T>, beta: T) -> Self {
        Self { w, beta }
    }

    pub fn w(&self) -> &ComplexMatrix<T> {
        &self.w
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// `tr(W W^H)`, i.e. the squared Frobenius norm of `W`.
    pub fn trace_wwh(&self) -> T {
        self.w.frobenius_norm_sqr()
    }
}

pub fn mrt_precoder<T: Real>(h_eff: &ComplexMatrix<T>) -> Result<Precoder<T>> {
    let norm_sqr = h_eff.frobenius_norm_sqr();
    if !(norm_sqr > T::zero()) {
        return Err(TasError::DegenerateChannel(
            "MRT normalization undefined for an all-zero effective channel".into(),
        ));
    }
    let beta = norm_sqr.sqrt().recip();
    Ok(Precoder {
        w: h_eff.conj().scale(beta),
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(
            ComplexMatrix::<f64>::new(2, 2, vec![c(1.0, 0.0); 3]),
            Err(TasError::Shape(_))
        ));
        assert_eq!(
            ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(TasError::NonFinite)
        );
        assert_eq!(
            ComplexMatrix::new(1, 1, vec![c(0.0, f64::INFINITY)]),
            Err(TasError::NonFinite)
        );
    }

    #[test]
    fn rayleigh_second_moment() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|_| {
                generate_rayleigh::<f64, _>(1, 1, &mut rng)
                    .get(0, 0)
                    .norm_sqr()
            })
            .sum::<f64>()
            / draws as f64;
        assert!((0.98..=1.02).contains(&mean), "mean |z|^2 = {mean}");
    }

    #[test]
    fn rayleigh_parts_are_balanced() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let m = generate_rayleigh::<f64, _>(200, 250, &mut rng);
        let n = m.entries().len() as f64;
        let re2: f64 = m.entries().iter().map(|z| z.re * z.re).sum::<f64>() / n;
        let im2: f64 = m.entries().iter().map(|z| z.im * z.im).sum::<f64>() / n;
        let cross: f64 = m.entries().iter().map(|z| z.re * z.im).sum::<f64>() / n;
        assert!((re2 - 0.5).abs() < 0.01 && (im2 - 0.5).abs() < 0.01);
        assert!(cross.abs() < 0.01);
    }

    #[test]
    fn rayleigh_is_seed_deterministic() {
        let a = generate_rayleigh::<f64, _>(2, 3, &mut ChaCha20Rng::seed_from_u64(3));
        let b = generate_rayleigh::<f64, _>(2, 3, &mut ChaCha20Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert_eq!((a.rows(), a.cols()), (2, 3));
        let x = generate_rayleigh::<f64, _>(4, 4, &mut ChaCha20Rng::seed_from_u64(3));
        let y = generate_rayleigh::<f64, _>(4, 4, &mut ChaCha20Rng::seed_from_u64(4));
        assert_ne!(x, y);
    }

    #[test]
    fn gaussian_stream_is_pinned() {
        // Guards the documented seed -> sample mapping.
        let z: Complex<f64> = complex_gaussian(&mut ChaCha20Rng::seed_from_u64(0));
        let again: Complex<f64> = complex_gaussian(&mut ChaCha20Rng::seed_from_u64(0));
        assert_eq!(z, again);
        let z32: Complex<f32> = complex_gaussian(&mut ChaCha20Rng::seed_from_u64(0));
        assert!((z32.re as f64 - z.re).abs() < 1e-6);
    }

    #[test]
    fn select_rows_cases() {
        let m = ComplexMatrix::from_real(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.select_rows(&[0, 1, 2]).unwrap(), m);
        let sub = m.select_rows(&[2, 0]).unwrap();
        assert_eq!(
            sub,
            ComplexMatrix::from_real(2, 2, &[5.0, 6.0, 1.0, 2.0]).unwrap()
        );
        assert!(matches!(
            m.select_rows(&[3]),
            Err(TasError::InvalidSelection(_))
        ));
        assert!(matches!(
            m.select_rows(&[1, 1]),
            Err(TasError::InvalidSelection(_))
        ));
        let all: Vec<usize> = (0..sub.rows()).collect();
        assert_eq!(select_rows(&sub, &all).unwrap(), sub);
    }

    #[test]
    fn mrt_examples() {
        let p = mrt_precoder(&ComplexMatrix::<f64>::identity(2)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.beta() - s).abs() < 1e-15);
        assert_eq!(p.w(), &ComplexMatrix::identity(2).scale(p.beta()));

        let p = mrt_precoder(&ComplexMatrix::<f64>::from_real(1, 2, &[3.0, 4.0]).unwrap()).unwrap();
        assert!((p.beta() - 0.2).abs() < 1e-15);
        assert!((p.w().get(0, 0).re - 0.6).abs() < 1e-15);
        assert!((p.w().get(0, 1).re - 0.8).abs() < 1e-15);

        assert!(matches!(
            mrt_precoder(&ComplexMatrix::<f64>::zeros(2, 2)),
            Err(TasError::DegenerateChannel(_))
        ));
    }

    #[test]
    fn mrt_conjugates_and_normalizes() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..50 {
            let h = generate_rayleigh::<f64, _>(5, 3, &mut rng);
            let p = mrt_precoder(&h).unwrap();
            assert!((p.trace_wwh() - 1.0).abs() < 1e-12);
            for (w, hz) in p.w().entries().iter().zip(h.entries()) {
                // W + beta*H is real when W = beta * conj(H)
                assert!((w + hz * p.beta()).im.abs() < 1e-14);
                assert!((w.re - p.beta() * hz.re).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::<f64>::uniform(4, 2, 1, 4, 1.0, 0.1).is_ok());
        assert!(SystemParams::<f64>::uniform(4, 2, 1, 5, 1.0, 0.1).is_err());
        assert!(SystemParams::<f64>::uniform(4, 2, 1, 0, 1.0, 0.1).is_err());
        assert!(SystemParams::<f64>::uniform(4, 2, 1, 2, 0.0, 0.1).is_err());
        assert!(SystemParams::<f64>::uniform(4, 2, 1, 2, 1.0, 0.0).is_err());
        let mut p = SystemParams::<f64>::uniform(4, 2, 1, 2, 1.0, 0.1).unwrap();
        p.weights = vec![-0.1, 1.1];
        assert!(p.validate().is_err());
    }

    #[test]
    fn display_dump() {
        let m = ComplexMatrix::new(1, 2, vec![c(1.0, 2.0), c(0.5, -1.0)]).unwrap();
        assert_eq!(m.to_string(), "1+2i 0.5-1i\n");
    }
}
