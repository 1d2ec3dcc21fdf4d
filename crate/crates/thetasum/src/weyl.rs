//! Quadratic Weyl sums `S_N(x, alpha) = Sum_{n=1}^N e(n^2 x / 2 + n alpha)`.
//!
//! Direct sums advance two unit rotations per term and re-anchor both from
//! exactly reduced phases every [`ANCHOR_EVERY`] terms, so the cost is two
//! complex multiplications per term and the drift stays at a few ulps.
//! The renormalized evaluator iterates the approximate functional equation.

use crate::error::{Result, ThetaError};
use crate::phase::{bilinear_phase, e, frac_prod, linear_phase, quad_phase, wrap, CompensatedSum};
use crate::shale_weil::CutoffSpec;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Largest admissible length of a direct sum.
pub const MAX_DIRECT_N: u64 = 1_000_000_000;

/// Terms between two exact re-anchorings of the rotation recurrence.
pub const ANCHOR_EVERY: u64 = 32;

/// Empirical constant `C` in the approximate functional equation error `C / sqrt(x)`.
pub const AFE_CONSTANT: f64 = 1.0;

/// Coefficients of the phase `(n^2/2 + c1 n + c0) x + alpha n`.
#[derive(Clone, Copy, Debug, PartialEq, Default, serde::Serialize)]
pub struct WeylParams {
    pub x: f64,
    pub alpha: f64,
    pub c1: f64,
    pub c0: f64,
}

impl WeylParams {
    /// Parameters of the plain sum `S_N(x, alpha)`.
    pub fn plain(x: f64, alpha: f64) -> Self {
        WeylParams { x, alpha, c1: 0.0, c0: 0.0 }
    }

    /// Phase of the term `n`, reduced modulo one.
    #[inline]
    pub fn phase(&self, n: i64) -> f64 {
        wrap(
            quad_phase(n, self.x)
                + linear_phase(n, self.alpha)
                + bilinear_phase(n, self.c1, self.x)
                + frac_prod(self.c0, self.x),
        )
    }

    /// Phase of the ratio between the terms `n + 1` and `n`.
    #[inline]
    fn step_phase(&self, n: i64) -> f64 {
        wrap(linear_phase(n, self.x) + 0.5 * self.x + frac_prod(self.c1, self.x) + self.alpha)
    }
}

/// Streams the terms `e(P(n) x + alpha n)` for consecutive `n`.
struct Terms {
    p: WeylParams,
    n: i64,
    term: Complex64,
    rot: Complex64,
    step: Complex64,
    since_anchor: u64,
}

impl Terms {
    fn starting_at(p: WeylParams, n: i64) -> Self {
        let mut t = Terms { p, n, term: Complex64::new(1.0, 0.0), rot: Complex64::new(1.0, 0.0), step: e(p.x), since_anchor: 0 };
        t.anchor();
        t
    }

    fn anchor(&mut self) {
        self.term = e(self.p.phase(self.n));
        self.rot = e(self.p.step_phase(self.n));
        self.since_anchor = 0;
    }

    /// The current term; then moves to `n + 1`.
    #[inline]
    fn next_term(&mut self) -> Complex64 {
        let out = self.term;
        self.n += 1;
        self.since_anchor += 1;
        if self.since_anchor == ANCHOR_EVERY {
            self.anchor();
        } else {
            self.term *= self.rot;
            self.rot *= self.step;
        }
        out
    }
}

fn check_n(n: u64) -> Result<()> {
    if n > MAX_DIRECT_N {
        return Err(ThetaError::OutOfRange(format!("N = {n} exceeds {MAX_DIRECT_N}")));
    }
    Ok(())
}

/// `S_N(x, alpha)` by direct summation.
pub fn weyl_sum_direct(n: u64, x: f64, alpha: f64) -> Result<Complex64> {
    weyl_sum_poly(n, WeylParams::plain(x, alpha))
}

/// `Sum_{n=1}^N e((n^2/2 + c1 n + c0) x + alpha n)` by direct summation.
pub fn weyl_sum_poly(n: u64, p: WeylParams) -> Result<Complex64> {
    check_n(n)?;
    let mut terms = Terms::starting_at(p, 1);
    let mut acc = CompensatedSum::new();
    for _ in 0..n {
        acc.add(terms.next_term());
    }
    Ok(acc.value())
}

/// The partial sums `S_k` of [`weyl_sum_poly`] at the nondecreasing indices `ks`, in one pass.
pub fn partial_sums_at(p: WeylParams, ks: &[u64]) -> Result<Vec<Complex64>> {
    if ks.windows(2).any(|w| w[0] > w[1]) {
        return Err(ThetaError::DomainError("indices must be nondecreasing".into()));
    }
    let Some(&last) = ks.last() else { return Ok(Vec::new()) };
    check_n(last)?;
    let mut out = Vec::with_capacity(ks.len());
    let mut terms = Terms::starting_at(p, 1);
    let mut acc = CompensatedSum::new();
    let mut k = 0;
    for &target in ks {
        while k < target {
            acc.add(terms.next_term());
            k += 1;
        }
        out.push(acc.value());
    }
    Ok(out)
}

/// `Sum_n f(n/N) e(n^2 x / 2 + n alpha)` for an integer length.
pub fn weyl_sum_general(n: u64, x: f64, alpha: f64, f: &CutoffSpec) -> Result<Complex64> {
    if n == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    check_n(n)?;
    weyl_sum_general_real(n as f64, x, alpha, f)
}

/// As [`weyl_sum_general`] with a real scale `N > 0` (used along the geodesic flow, `N = e^{s/2}`).
///
/// Compactly supported cutoffs are summed over their support; the Gaussian and
/// Hermite series are cut where the terms drop below `1e-16`.
pub fn weyl_sum_general_real(n: f64, x: f64, alpha: f64, f: &CutoffSpec) -> Result<Complex64> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(ThetaError::DomainError(format!("scale N = {n} must be positive")));
    }
    let (lo, hi) = match f.support() {
        Some((a, b)) => ((a * n).ceil() - 1.0, (b * n).floor() + 1.0),
        None => {
            let reach = match f {
                CutoffSpec::Gaussian => 3.5,
                CutoffSpec::HermiteSeries { coeffs } => ((2.0 * coeffs.len() as f64 + 1.0) / TAU).sqrt() + 5.0,
                _ => unreachable!("only the smooth tags lack a support"),
            };
            (-(reach * n).ceil(), (reach * n).ceil())
        }
    };
    if hi - lo > 2.0 * MAX_DIRECT_N as f64 {
        return Err(ThetaError::OutOfRange(format!("{} terms", hi - lo)));
    }
    let (lo, hi) = (lo as i64, hi as i64);
    let mut terms = Terms::starting_at(WeylParams::plain(x, alpha), lo);
    let mut acc = CompensatedSum::new();
    for k in lo..=hi {
        let t = terms.next_term();
        let v = f.eval(k as f64 / n);
        if v != 0.0 {
            acc.add(v * t);
        }
    }
    Ok(acc.value())
}

/// One application of the approximate functional equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AfeStep {
    /// `floor(x N)`.
    pub n_prime: u64,
    /// `-1/x`, not yet reduced.
    pub x_raw: f64,
    /// `alpha / x`.
    pub alpha_prime: f64,
    /// `sqrt(i/x) e(-alpha^2 / (2x))`.
    pub prefactor: Complex64,
}

/// `S_N(x, alpha) ~ prefactor S_{N'}(-1/x, alpha/x)` for `0 < x < 2`.
pub fn afe_step(n: u64, x: f64, alpha: f64) -> Result<AfeStep> {
    if !(x > 0.0 && x < 2.0) {
        return Err(ThetaError::DomainError(format!("x = {x} must lie in (0, 2)")));
    }
    let prefactor = (Complex64::i() / x).sqrt() * e(-alpha * alpha / (2.0 * x));
    Ok(AfeStep { n_prime: (x * n as f64).floor() as u64, x_raw: -1.0 / x, alpha_prime: alpha / x, prefactor })
}

/// `sqrt(x) |S_N(x, alpha) - prefactor S_{N'}(-1/x, alpha/x)|`, both sums taken directly.
pub fn afe_residual(n: u64, x: f64, alpha: f64) -> Result<f64> {
    let step = afe_step(n, x, alpha)?;
    let long = weyl_sum_direct(n, x, alpha)?;
    let short = weyl_sum_direct(step.n_prime, step.x_raw, step.alpha_prime)?;
    Ok(x.sqrt() * (long - step.prefactor * short).norm())
}

/// Result of [`weyl_sum_renormalized`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Renormalized {
    pub value: Complex64,
    /// Heuristic (not certified) error envelope `Sum_k |multiplier_k| C / sqrt(x_k)`.
    pub error_estimate: f64,
    /// Applications of the functional equation.
    pub iterations: usize,
    /// True when the loop stopped early and finished the remaining sum directly.
    pub fell_back_to_direct: bool,
}

/// `S_N(x, alpha)` by iterating the approximate functional equation.
///
/// Each round reduces `x` modulo 2 and `alpha` modulo 1, folds `x` in `(1, 2)`
/// onto `2 - x` by complex conjugation, and replaces the sum by a shorter one
/// of length `floor(x N)`. The loop stops at length `n_cut` and sums the rest
/// directly. When `x < 2/N` (a near-rational `x`), the remaining sum is
/// evaluated directly, since the equation no longer shortens it.
pub fn weyl_sum_renormalized(n: u64, x: f64, alpha: f64, n_cut: u64, max_iter: usize) -> Result<Renormalized> {
    check_n(n)?;
    let mut len = n;
    let mut x = x.rem_euclid(2.0);
    let mut a = alpha.rem_euclid(1.0);
    let mut mult = Complex64::new(1.0, 0.0);
    let mut conj = false;
    let mut err = 0.0;
    let mut iterations = 0;
    loop {
        if x > 1.0 {
            x = 2.0 - x;
            a = (1.0 - a).rem_euclid(1.0);
            conj = !conj;
        }
        if len <= n_cut || x * (len as f64) < 2.0 {
            let fell_back = len > n_cut;
            let s = weyl_sum_direct(len, x, a)?;
            let s = if conj { s.conj() } else { s };
            return Ok(Renormalized { value: mult * s, error_estimate: err, iterations, fell_back_to_direct: fell_back });
        }
        if iterations == max_iter {
            return Err(ThetaError::MaxIterExceeded(max_iter));
        }
        let step = afe_step(len, x, a)?;
        err += mult.norm() * AFE_CONSTANT / x.sqrt();
        mult *= if conj { step.prefactor.conj() } else { step.prefactor };
        len = step.n_prime;
        x = step.x_raw.rem_euclid(2.0);
        a = step.alpha_prime.rem_euclid(1.0);
        iterations += 1;
    }
}

/// The normalized curlicue `X_N(t)` and the prefix sums it interpolates.
#[derive(Clone, Debug, PartialEq)]
pub struct CurlicuePath {
    pub n: u64,
    pub params: WeylParams,
    /// `S_0, ..., S_N`.
    pub prefix: Vec<Complex64>,
    pub t_grid: Vec<f64>,
    /// `X_N(t)` on `t_grid`.
    pub values: Vec<Complex64>,
}

impl CurlicuePath {
    /// `X_N(t) = N^{-1/2} (S_k + {tN} (S_{k+1} - S_k))`, `k = floor(tN)`.
    pub fn sample(&self, t: f64) -> Complex64 {
        let nf = self.n as f64;
        let tn = (t.clamp(0.0, 1.0)) * nf;
        let k = (tn.floor() as usize).min(self.n as usize);
        let frac = tn - k as f64;
        let base = self.prefix[k];
        let v = if frac > 0.0 && k < self.n as usize { base + frac * (self.prefix[k + 1] - base) } else { base };
        v / nf.sqrt()
    }
}

/// Builds the curlicue of length `N` and samples it on a sorted grid in `[0, 1]`.
pub fn curlicue(n: u64, params: WeylParams, t_grid: &[f64]) -> Result<CurlicuePath> {
    check_n(n)?;
    if n == 0 {
        return Err(ThetaError::DomainError("a curlicue needs N >= 1".into()));
    }
    if t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) || t_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(ThetaError::DomainError("t_grid must be sorted in [0, 1]".into()));
    }
    let mut prefix = Vec::with_capacity(n as usize + 1);
    prefix.push(Complex64::new(0.0, 0.0));
    let mut terms = Terms::starting_at(params, 1);
    let mut acc = CompensatedSum::new();
    for _ in 0..n {
        acc.add(terms.next_term());
        prefix.push(acc.value());
    }
    let mut path = CurlicuePath { n, params, prefix, t_grid: t_grid.to_vec(), values: Vec::new() };
    path.values = t_grid.iter().map(|&t| path.sample(t)).collect();
    Ok(path)
}
