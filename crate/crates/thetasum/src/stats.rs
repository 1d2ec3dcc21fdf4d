//! Monte Carlo and exact-enumeration harness for the limit laws of theta sums.
//!
//! Every sampler splits its `M` draws into tasks of [`CHUNK`] draws. Task `i`
//! owns the generator `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`, the tasks run on the
//! current rayon pool, and their partial results are merged in a fixed binary
//! tree. Reports are therefore bit-identical for any number of workers.

use crate::error::{Result, ThetaError};
use crate::group::haar_sample_counted;
use crate::shale_weil::{fresnel_phase_integral, CutoffSpec, RotatedCutoff};
use crate::theta::{theta_chi, theta_f};
use crate::weyl::{partial_sums_at, CurlicuePath, WeylParams};
use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Draws per task.
pub const CHUNK: u64 = 1000;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// A tail fit needs at least this many exceedances at its largest threshold.
pub const MIN_TAIL_EXCEEDANCES: u64 = 200;

/// `P{|X(1)| >= R} ~ (6/pi^2) R^-6`.
pub const TAIL_CONSTANT: f64 = 6.0 / (PI * PI);

/// `P{Re X(1) >= R} ~ (15/(16 pi^2)) R^-6`.
pub const RE_TAIL_CONSTANT: f64 = 15.0 / (16.0 * PI * PI);

/// Haar measure of the fundamental domain, `pi^2/3`.
pub const FUNDAMENTAL_DOMAIN_VOLUME: f64 = PI * PI / 3.0;

/// Environment variable read when no worker count is given.
pub const WORKERS_ENV: &str = "THETA_WORKERS";

/// Worker count from [`WORKERS_ENV`], or 0 (rayon's default) when unset or invalid.
pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

/// Runs `f` on a dedicated pool of `workers` threads (0 for the rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ThetaError::DomainError(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Applies `f` to every task of an `m`-draw run and returns the task results in task order.
///
/// `stream` separates independent runs sharing one seed (task indices are offset by `stream << 40`).
fn run_tasks<A: Send>(m: u64, seed: u64, stream: u64, f: impl Fn(&mut ChaCha8Rng, u64) -> A + Sync) -> Vec<A> {
    let tasks = m.div_ceil(CHUNK);
    (0..tasks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i + (stream << 40));
            f(&mut rng, CHUNK.min(m - i * CHUNK))
        })
        .collect()
}

/// Merges in a balanced binary tree, so the rounding pattern depends only on the length.
fn tree_merge<A: Clone>(items: &[A], merge: &impl Fn(&A, &A) -> A) -> Option<A> {
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => {
            let (l, r) = items.split_at(n / 2);
            Some(merge(&tree_merge(l, merge)?, &tree_merge(r, merge)?))
        }
    }
}

/// Count, mean and centered second moment of complex samples.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: Complex64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: Complex64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d.re * (x.re - self.mean.re) + d.im * (x.im - self.mean.im);
    }

    fn merge(a: &Moments, b: &Moments) -> Moments {
        if a.n == 0 {
            return *b;
        }
        if b.n == 0 {
            return *a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Moments { n, mean: a.mean + d * (b.n as f64 / n as f64), m2: a.m2 + b.m2 + d.norm_sqr() * (a.n as f64 * b.n as f64 / n as f64) }
    }

    /// `total` with the group `g` removed.
    fn without(total: &Moments, g: &Moments) -> Moments {
        let n = total.n - g.n;
        let mean = (total.mean * total.n as f64 - g.mean * g.n as f64) / n as f64;
        let d = g.mean - mean;
        Moments { n, mean, m2: total.m2 - g.m2 - d.norm_sqr() * (g.n as f64 * n as f64 / total.n as f64) }
    }

    fn variance(&self) -> f64 {
        self.m2 / (self.n as f64 - 1.0)
    }
}

/// Grouped jackknife standard error of a statistic of [`Moments`].
fn jackknife(groups: &[Moments], total: &Moments, stat: impl Fn(&Moments) -> f64) -> f64 {
    let g = groups.len() as f64;
    if groups.len() < 2 {
        return f64::NAN;
    }
    let loo: Vec<f64> = groups.iter().map(|gr| stat(&Moments::without(total, gr))).collect();
    let mean = loo.iter().sum::<f64>() / g;
    ((g - 1.0) / g * loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt()
}

/// Distribution of the random quadratic coefficient `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Lambda {
    Uniform { a: f64, b: f64 },
    /// Piecewise constant density with the given bin edges and (unnormalized) bin weights.
    Table { edges: Vec<f64>, weights: Vec<f64> },
}

impl Lambda {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a < b && a.is_finite() && b.is_finite()) {
            return Err(ThetaError::DomainError(format!("empty interval [{a}, {b}]")));
        }
        Ok(Lambda::Uniform { a, b })
    }

    pub fn table(edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let ok = edges.len() == weights.len() + 1
            && !weights.is_empty()
            && edges.windows(2).all(|w| w[0] < w[1])
            && weights.iter().all(|&w| w >= 0.0 && w.is_finite())
            && weights.iter().sum::<f64>() > 0.0;
        if !ok {
            return Err(ThetaError::DomainError("a density table needs increasing edges and nonnegative weights".into()));
        }
        Ok(Lambda::Table { edges, weights })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Lambda::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Lambda::Table { edges, weights } => {
                let total: f64 = weights.iter().sum();
                let mut r = rng.random::<f64>() * total;
                for (i, &w) in weights.iter().enumerate() {
                    if r < w || i + 1 == weights.len() {
                        let frac = if w > 0.0 { (r / w).min(1.0) } else { 0.0 };
                        return edges[i] + frac * (edges[i + 1] - edges[i]);
                    }
                    r -= w;
                }
                unreachable!()
            }
        }
    }
}

/// Parameters of a Monte Carlo run over random curlicues `X_N(t)`, `x ~ lambda`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSpec {
    pub m: u64,
    pub n: u64,
    pub lambda: Lambda,
    /// Fixed coefficients; the `x` field is ignored and redrawn from `lambda`.
    pub params: WeylParams,
    pub seed: u64,
    /// Declares `(c1, alpha)` not in `Q^2`, the hypothesis of the limit theorems.
    pub irrational_pair: bool,
}

impl SampleSpec {
    /// `lambda = U[0, 2]`, `c1 = sqrt 2`, `alpha = c0 = 0`.
    pub fn standard(m: u64, n: u64, seed: u64) -> Self {
        SampleSpec {
            m,
            n,
            lambda: Lambda::Uniform { a: 0.0, b: 2.0 },
            params: WeylParams { x: 0.0, alpha: 0.0, c1: 2f64.sqrt(), c0: 0.0 },
            seed,
            irrational_pair: true,
        }
    }

    /// The excluded rational case `c1 = alpha = 0`, used as a diagnostic.
    pub fn rational(m: u64, n: u64, seed: u64) -> Self {
        SampleSpec { params: WeylParams::default(), irrational_pair: false, ..Self::standard(m, n, seed) }
    }

    fn validate(&self, require_irrational: bool) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(ThetaError::DomainError("M and N must be positive".into()));
        }
        if require_irrational && !self.irrational_pair {
            return Err(ThetaError::RationalPairWarning);
        }
        Ok(())
    }

    /// `X_N(t)` at each `t` (any order, `t >= 0`) for one draw of `x`.
    fn draw(&self, rng: &mut ChaCha8Rng, ts: &[f64]) -> Result<Vec<Complex64>> {
        let p = WeylParams { x: self.lambda.sample(rng), ..self.params };
        let nf = self.n as f64;
        let mut ks: Vec<u64> = ts.iter().flat_map(|&t| [(t * nf).floor() as u64, (t * nf).floor() as u64 + 1]).collect();
        ks.sort_unstable();
        ks.dedup();
        let sums = partial_sums_at(p, &ks)?;
        let at = |k: u64| sums[ks.binary_search(&k).expect("index requested above")];
        Ok(ts
            .iter()
            .map(|&t| {
                let k = (t * nf).floor() as u64;
                let frac = t * nf - k as f64;
                let v = if frac > 0.0 { at(k) + frac * (at(k + 1) - at(k)) } else { at(k) };
                v / nf.sqrt()
            })
            .collect())
    }

    /// All `M` draws of `g(X_N(ts))`, in draw order.
    fn collect<T: Send>(&self, stream: u64, ts: &[f64], g: impl Fn(&[Complex64]) -> T + Sync) -> Result<Vec<T>> {
        let per_task = run_tasks(self.m, self.seed, stream, |rng, count| -> Result<Vec<T>> {
            (0..count).map(|_| Ok(g(&self.draw(rng, ts)?))).collect()
        });
        let mut out = Vec::with_capacity(self.m as usize);
        for t in per_task {
            out.extend(t?);
        }
        Ok(out)
    }
}

/// A moment estimate with its target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub order: u32,
    pub estimate: f64,
    pub std_error: f64,
    pub target: f64,
}

/// Complex variance `E|X_N(t)|^2 - |E X_N(t)|^2` over `M` draws, jackknifed over tasks.
pub fn mc_variance(spec: &SampleSpec, t: f64) -> Result<MomentReport> {
    spec.validate(true)?;
    if !(t > 0.0) {
        return Err(ThetaError::DomainError(format!("t = {t} must be positive")));
    }
    let groups: Vec<Moments> = run_tasks(spec.m, spec.seed, 0, |rng, count| -> Result<Moments> {
        let mut acc = Moments::default();
        for _ in 0..count {
            acc.push(spec.draw(rng, &[t])?[0]);
        }
        Ok(acc)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let total = tree_merge(&groups, &Moments::merge).expect("M >= 1");
    let std_error = jackknife(&groups, &total, Moments::variance);
    Ok(MomentReport { order: 2, estimate: total.variance(), std_error, target: t })
}

/// Empirical survival function on a grid with a power-law fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub r_grid: Vec<f64>,
    pub counts: Vec<u64>,
    /// Number of samples behind `survival`.
    pub samples: u64,
    pub survival: Vec<f64>,
    /// Least-squares slope of `log survival` against `log R`.
    pub fit_slope: f64,
    /// `C` in `survival ~ C R^target_slope` with the slope held at its target.
    pub fit_constant: f64,
    /// Intercept `exp(b)` of the free fit `log survival = b + slope log R`.
    pub fit_constant_free: f64,
    pub target_slope: f64,
    pub target_constant: f64,
    pub slope_tolerance: f64,
    /// Allowed ratio between `fit_constant` and `target_constant`.
    pub constant_factor: f64,
    pub pass: bool,
}

impl TailReport {
    /// The model `target_constant R^target_slope` on the grid.
    pub fn model(&self) -> Vec<f64> {
        self.r_grid.iter().map(|r| self.target_constant * r.powf(self.target_slope)).collect()
    }

    fn build(r_grid: &[f64], counts: Vec<u64>, samples: u64, target: (f64, f64, f64), min_count: u64) -> Result<Self> {
        let (target_slope, target_constant, slope_tolerance) = target;
        let last = *counts.last().expect("grid checked nonempty");
        if last < min_count {
            return Err(ThetaError::InsufficientTailSamples { found: last as usize, required: min_count as usize, r: *r_grid.last().unwrap() });
        }
        let survival: Vec<f64> = counts.iter().map(|&c| c as f64 / samples as f64).collect();
        let w = vec![1.0; counts.len()];
        let lx: Vec<f64> = r_grid.iter().map(|r| r.ln()).collect();
        let ly: Vec<f64> = survival.iter().map(|s| s.ln()).collect();
        let sw: f64 = w.iter().sum();
        let mx = w.iter().zip(&lx).map(|(a, b)| a * b).sum::<f64>() / sw;
        let my = w.iter().zip(&ly).map(|(a, b)| a * b).sum::<f64>() / sw;
        let sxy: f64 = (0..w.len()).map(|i| w[i] * (lx[i] - mx) * (ly[i] - my)).sum();
        let sxx: f64 = (0..w.len()).map(|i| w[i] * (lx[i] - mx).powi(2)).sum();
        let fit_slope = sxy / sxx;
        let fit_constant_free = (my - fit_slope * mx).exp();
        let fit_constant = (my - target_slope * mx).exp();
        let constant_factor = 2.0;
        let ratio = fit_constant / target_constant;
        let pass = (fit_slope - target_slope).abs() <= slope_tolerance && ratio <= constant_factor && ratio >= 1.0 / constant_factor;
        Ok(TailReport {
            r_grid: r_grid.to_vec(),
            counts,
            samples,
            survival,
            fit_slope,
            fit_constant,
            fit_constant_free,
            target_slope,
            target_constant,
            slope_tolerance,
            constant_factor,
            pass,
        })
    }
}

fn check_grid(r_grid: &[f64]) -> Result<()> {
    if r_grid.len() < 2 || r_grid.windows(2).any(|w| !(w[0] < w[1])) || !(r_grid[0] > 0.0) {
        return Err(ThetaError::DomainError("R grid needs at least two increasing positive values".into()));
    }
    Ok(())
}

fn count_exceedances(values: &[f64], r_grid: &[f64]) -> Vec<u64> {
    r_grid.iter().map(|&r| values.iter().filter(|&&v| v >= r).count() as u64).collect()
}

/// `n` log-spaced points from `a` to `b`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1).max(1) as f64)).collect()
}

/// `P{|X_N(t)| / sqrt t >= R}` with a fit against `(6/pi^2) R^-6`.
pub fn mc_tail(spec: &SampleSpec, t: f64, r_grid: &[f64]) -> Result<TailReport> {
    spec.validate(true)?;
    tail_impl(spec, t, r_grid, -6.0, 0.5)
}

/// As [`mc_tail`] without the irrationality requirement, fitted against `R^-4`.
pub fn mc_tail_rational_diagnostic(spec: &SampleSpec, t: f64, r_grid: &[f64]) -> Result<TailReport> {
    spec.validate(false)?;
    tail_impl(spec, t, r_grid, -4.0, 0.5)
}

fn tail_impl(spec: &SampleSpec, t: f64, r_grid: &[f64], slope: f64, slope_tol: f64) -> Result<TailReport> {
    check_grid(r_grid)?;
    if !(t > 0.0) {
        return Err(ThetaError::DomainError(format!("t = {t} must be positive")));
    }
    let scale = t.sqrt();
    let values = spec.collect(0, &[t], |x| x[0].norm() / scale)?;
    TailReport::build(r_grid, count_exceedances(&values, r_grid), spec.m, (slope, TAIL_CONSTANT, slope_tol), MIN_TAIL_EXCEEDANCES)
}

/// Right and left tails of `Re X_N(1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReTailReport {
    /// `P{Re X_N(1) >= R}`.
    pub right: TailReport,
    /// `P{Re X_N(1) <= -R}` on the same grid.
    pub left_survival: Vec<f64>,
    /// `(right - left) / standard error` at each `R`.
    pub symmetry_z: Vec<f64>,
    /// All `|symmetry_z| <= 2`.
    pub symmetric: bool,
}

/// `P{Re X_N(1) >= R}` against `(15/(16 pi^2)) R^-6`, and the comparison with the left tail.
pub fn mc_re_tail(spec: &SampleSpec, r_grid: &[f64]) -> Result<ReTailReport> {
    spec.validate(true)?;
    check_grid(r_grid)?;
    let values = spec.collect(0, &[1.0], |x| x[0].re)?;
    let right = count_exceedances(&values, r_grid);
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    let left = count_exceedances(&neg, r_grid);
    let mf = spec.m as f64;
    let symmetry_z: Vec<f64> = right
        .iter()
        .zip(&left)
        .map(|(&r, &l)| {
            let (pr, pl) = (r as f64 / mf, l as f64 / mf);
            let se = ((pr + pl - (pr - pl).powi(2)) / mf).sqrt();
            if se > 0.0 { (pr - pl) / se } else { 0.0 }
        })
        .collect();
    let symmetric = symmetry_z.iter().all(|z| z.abs() <= 2.0);
    let report = TailReport::build(r_grid, right, spec.m, (-6.0, RE_TAIL_CONSTANT, 0.6), MIN_TAIL_EXCEEDANCES)?;
    Ok(ReTailReport { right: report, left_survival: left.iter().map(|&c| c as f64 / mf).collect(), symmetry_z, symmetric })
}

/// Haar Monte Carlo of `|Theta_chi|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MuTailReport {
    pub tail: TailReport,
    /// Samples skipped because the dyadic series looked divergent.
    pub divergent: u64,
    /// Samples evaluated with a Diophantine warning (kept).
    pub warned: u64,
    /// Rejection estimate of the Haar volume of the fundamental domain.
    pub volume: f64,
    pub volume_std_error: f64,
    pub volume_target: f64,
}

/// Tail of `|Theta_chi(g)|` for Haar-random `g` (normalized to a probability), against `(6/pi^2) R^-6`.
///
/// Each value is computed with truncation tolerance `tol`.
pub fn theta_measure_tail(m: u64, r_grid: &[f64], seed: u64, tol: f64) -> Result<MuTailReport> {
    check_grid(r_grid)?;
    if m == 0 {
        return Err(ThetaError::DomainError("M must be positive".into()));
    }
    struct Part {
        values: Vec<f64>,
        divergent: u64,
        warned: u64,
        trials: u64,
    }
    let parts = run_tasks(m, seed, 0, |rng, count| -> Result<Part> {
        let mut p = Part { values: Vec::with_capacity(count as usize), divergent: 0, warned: 0, trials: 0 };
        for _ in 0..count {
            let (g, trials) = haar_sample_counted(rng);
            p.trials += trials;
            match theta_chi(&g, tol, 64) {
                Ok(r) => {
                    p.warned += r.diophantine_warning as u64;
                    p.values.push(r.value.norm());
                }
                Err(ThetaError::DivergenceSuspected(_)) => p.divergent += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(p)
    });
    let (mut values, mut divergent, mut warned, mut trials) = (Vec::new(), 0, 0, 0);
    for p in parts {
        let p = p?;
        values.extend(p.values);
        divergent += p.divergent;
        warned += p.warned;
        trials += p.trials;
    }
    let kept = values.len() as u64;
    // the fit only needs every grid point to be populated
    let tail = TailReport::build(r_grid, count_exceedances(&values, r_grid), kept, (-6.0, TAIL_CONSTANT, 0.5), 1)?;
    // proposals fill x in [-1/2, 1/2], y >= sqrt3/2 (area 2/sqrt3), phi in [0, pi)
    let box_volume = PI * 2.0 / 3f64.sqrt();
    let p = m as f64 / trials as f64;
    Ok(MuTailReport {
        tail,
        divergent,
        warned,
        volume: box_volume * p,
        volume_std_error: box_volume * (p * (1.0 - p) / trials as f64).sqrt(),
        volume_target: FUNDAMENTAL_DOMAIN_VOLUME,
    })
}

/// Truncation tolerance of each theta value in [`haar_moment_check`].
pub const HAAR_MOMENT_TOL: f64 = 1e-6;

/// `(1/M) Sum |Theta_f(g_i)|^order` over Haar samples, against `|f|^2` (order 2) or `2 |f|^4` (order 4).
pub fn haar_moment_check(m: u64, f: &CutoffSpec, order: u32, seed: u64) -> Result<MomentReport> {
    if order != 2 && order != 4 {
        return Err(ThetaError::OutOfRange(format!("order {order} not in {{2, 4}}")));
    }
    if m == 0 {
        return Err(ThetaError::DomainError("M must be positive".into()));
    }
    if matches!(f, CutoffSpec::IndicatorUnit) {
        return Err(ThetaError::UnsupportedCutoff("the sharp cutoff has no pointwise theta function".into()));
    }
    let groups: Vec<Moments> = run_tasks(m, seed, 0, |rng, count| -> Result<Moments> {
        let mut acc = Moments::default();
        for _ in 0..count {
            let g = haar_sample_counted(rng).0;
            let v = theta_f(&g, f, HAAR_MOMENT_TOL)?.value.norm();
            acc.push(Complex64::new(v.powi(order as i32), 0.0));
        }
        Ok(acc)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let total = tree_merge(&groups, &Moments::merge).expect("M >= 1");
    let norm = f.l2_norm_sq();
    let target = if order == 2 { norm } else { 2.0 * norm * norm };
    Ok(MomentReport { order, estimate: total.mean.re, std_error: (total.variance() / total.n as f64).sqrt(), target })
}

/// Largest `N` accepted by [`q_count`].
pub const Q_COUNT_MAX: u64 = 500;

/// Number of `(x, y)` in `[1, N]^6` with equal sums and equal sums of squares.
///
/// For each sum `s` the triples are binned by their sum of squares `q`, and the
/// squared bin counts are added.
pub fn q_count(n: u64) -> Result<u64> {
    if n > Q_COUNT_MAX {
        return Err(ThetaError::CapacityExceeded(format!("N = {n} exceeds {Q_COUNT_MAX}")));
    }
    if n == 0 {
        return Ok(0);
    }
    let n = n as i64;
    let mut bins = vec![0u32; (3 * n * n + 1) as usize];
    let mut touched = Vec::new();
    let mut total = 0u64;
    for s in 3..=3 * n {
        for x1 in 1..=n.min(s - 2) {
            let lo = 1.max(s - x1 - n);
            let hi = n.min(s - x1 - 1);
            for x2 in lo..=hi {
                let x3 = s - x1 - x2;
                let q = (x1 * x1 + x2 * x2 + x3 * x3) as usize;
                if bins[q] == 0 {
                    touched.push(q);
                }
                bins[q] += 1;
            }
        }
        for &q in &touched {
            total += (bins[q] as u64).pow(2);
            bins[q] = 0;
        }
        touched.clear();
    }
    Ok(total)
}

/// `Q(N) / (N^3 ln N)`, which tends to `18/pi^2`.
pub fn q_count_ratio(n: u64) -> Result<f64> {
    let nf = n as f64;
    Ok(q_count(n)? as f64 / (nf.powi(3) * nf.ln()))
}

/// A quadrature value with its estimated error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DEstimate {
    pub estimate: f64,
    pub error_estimate: f64,
}

/// `D(f) = Int_0^pi Int |f_phi(w)|^6 dw dphi`.
///
/// The sharp cutoff is integrated in the form `2 Int Int |Int_0^1 e(u v^2 - z v) dv|^6 dz du`
/// (see [`d_integral_uz`]); the Gaussian and the triangle use [`d_integral_phi`].
pub fn d_integral(f: &CutoffSpec, tol: f64) -> Result<DEstimate> {
    let r = match f {
        CutoffSpec::IndicatorUnit => d_integral_uz()?,
        CutoffSpec::Gaussian | CutoffSpec::Triangle => d_integral_phi(f)?,
        _ => return Err(ThetaError::UnsupportedCutoff("D(f) is provided for the indicator, the Gaussian and the triangle".into())),
    };
    if r.error_estimate > tol {
        return Err(ThetaError::AccuracyNotMet { estimate: r.error_estimate, requested: tol });
    }
    Ok(r)
}

/// Cut-off of the outer integral of [`d_integral_uz`].
pub const D_UZ_CUTOFF: f64 = 64.0;

fn gl_panels(lo: f64, hi: f64, width: f64, rule: &GaussLegendre) -> Vec<(f64, f64)> {
    let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
    let h = (hi - lo) / panels as f64;
    (0..panels).flat_map(|i| rule.nodes().zip(rule.weights()).map(move |(x, w)| (lo + h * (i as f64 + 0.5 * (x + 1.0)), 0.5 * h * w))).collect()
}

fn uz_inner(u: f64, rule: &GaussLegendre) -> Result<f64> {
    // |F(u, z)| is symmetric about z = u and at most 1/(pi (z - 2u)) beyond 2u
    let mut acc = 0.0;
    for (z, w) in gl_panels(u, 2.0 * u + 8.0, 0.25, rule) {
        acc += w * fresnel_phase_integral([1.0, 0.0, 0.0], u, -z, 0.0, 1.0)?.norm().powi(6);
    }
    Ok(2.0 * acc)
}

fn uz_outer(n_nodes: usize) -> Result<(f64, f64)> {
    let rule = GaussLegendre::new(std::num::NonZeroUsize::new(n_nodes).expect("positive node count"));
    let nodes = gl_panels(0.0, D_UZ_CUTOFF, 0.5, &rule);
    let vals: Vec<f64> = nodes.par_iter().map(|&(u, _)| uz_inner(u, &rule)).collect::<Result<_>>()?;
    let integral: f64 = nodes.iter().zip(&vals).map(|((_, w), v)| w * v).sum();
    // I(u) u^2 -> 1/4; average it over the last unit of u to extrapolate the tail
    let last: Vec<(f64, f64)> = nodes.iter().zip(&vals).filter(|((u, _), _)| *u > D_UZ_CUTOFF - 1.0).map(|((u, w), v)| (*w, v * u * u)).collect();
    let c = last.iter().map(|(w, v)| w * v).sum::<f64>() / last.iter().map(|(w, _)| w).sum::<f64>();
    Ok((integral, c))
}

/// `D(chi) = 4 Int_0^inf I(u) du`, `I(u) = Int |Int_0^1 e(u v^2 - z v) dv|^6 dz`.
///
/// The inner integrand is evaluated through the Fresnel closed form. The outer
/// integral is cut at [`D_UZ_CUTOFF`] and completed with the tail `c/u^2` of
/// `I(u)`, `c` fitted on the last unit interval. The error estimate combines a
/// second run with fewer nodes and the spread between the fitted `c` and its limit `1/4`.
pub fn d_integral_uz() -> Result<DEstimate> {
    let (fine, c) = uz_outer(10)?;
    let (coarse, _) = uz_outer(7)?;
    let tail = 4.0 * c / D_UZ_CUTOFF;
    let estimate = 4.0 * fine + tail;
    let error_estimate = 4.0 * (fine - coarse).abs() + 4.0 * (c - 0.25).abs() / D_UZ_CUTOFF + 1e-3;
    Ok(DEstimate { estimate, error_estimate })
}

/// Angles closer than this to `0` or `pi` are covered by the limit `f_0 = f`.
pub const D_PHI_MIN: f64 = 4e-3;

fn phi_form(f: &CutoffSpec, n_nodes: usize) -> Result<f64> {
    let rule = GaussLegendre::new(std::num::NonZeroUsize::new(n_nodes).expect("positive node count"));
    let mut breaks = vec![D_PHI_MIN];
    while *breaks.last().unwrap() < 0.25 {
        let next = 2.0 * breaks.last().unwrap();
        breaks.push(next.min(0.25));
    }
    let mid_panels = ((PI - 0.5) / 0.25).ceil() as usize;
    for i in 1..=mid_panels {
        breaks.push(0.25 + i as f64 * (PI - 0.5) / mid_panels as f64);
    }
    let mirror: Vec<f64> = breaks.iter().rev().skip(1).map(|b| PI - b).collect();
    breaks.extend(mirror);
    let nodes: Vec<(f64, f64)> = breaks.windows(2).flat_map(|w| gl_panels(w[0], w[1], w[1] - w[0], &rule)).collect();
    let (reach, smooth) = match f.support() {
        Some((a, b)) => (a.abs().max(b.abs()) + 8.0, false),
        None => (5.0, true),
    };
    let vals: Vec<f64> = nodes
        .par_iter()
        .map(|&(phi, _)| -> Result<f64> {
            let rot = RotatedCutoff::new(f, phi)?;
            let width = if smooth { 0.25 } else { (0.25 * phi.sin()).min(0.25) };
            let mut acc = 0.0;
            for (w, wt) in gl_panels(-reach, reach, width, &rule) {
                acc += wt * rot.eval(w)?.norm().powi(6);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let body: f64 = nodes.iter().zip(&vals).map(|((_, w), v)| w * v).sum();
    let at_zero: f64 = {
        let (lo, hi) = f.support().unwrap_or((-reach, reach));
        gl_panels(lo, hi, 0.01, &rule).iter().map(|(w, wt)| wt * f.eval(*w).abs().powi(6)).sum()
    };
    Ok(body + 2.0 * D_PHI_MIN * at_zero)
}

/// `D(f)` by Gauss-Legendre panels directly in `(phi, w)`.
///
/// Panels in `w` shrink like `sin(phi)` for compactly supported `f`, which resolves
/// the interference ripples of `f_phi`. The strips within [`D_PHI_MIN`] of `0` and
/// `pi` use `f_phi ~ f`. The error estimate is the difference to a run with fewer nodes.
pub fn d_integral_phi(f: &CutoffSpec) -> Result<DEstimate> {
    let fine = phi_form(f, 8)?;
    let coarse = phi_form(f, 6)?;
    Ok(DEstimate { estimate: fine, error_estimate: (fine - coarse).abs() + D_PHI_MIN * D_PHI_MIN })
}

/// One distributional symmetry of the limit process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum InvarianceCheck {
    /// `X(a^2 t)/a` against `X(t)` at `t = 1/4`.
    Scaling { a: f64 },
    /// `t X(1/t)` against `X(t)`.
    Inversion { t: f64 },
    /// `X(t0 + t) - X(t0)` against `X(t)` at `t = 1/4`.
    Stationarity { t0: f64 },
    /// `Re(e(theta) X(1))` against `Re X(1)`.
    Rotation { theta: f64 },
}

impl InvarianceCheck {
    pub fn name(&self) -> &'static str {
        match self {
            InvarianceCheck::Scaling { .. } => "scaling",
            InvarianceCheck::Inversion { .. } => "inversion",
            InvarianceCheck::Stationarity { .. } => "stationarity",
            InvarianceCheck::Rotation { .. } => "rotation",
        }
    }

    /// KS threshold used for the pass flag.
    pub fn threshold(&self) -> f64 {
        match self {
            InvarianceCheck::Scaling { .. } | InvarianceCheck::Rotation { .. } => 0.02,
            InvarianceCheck::Inversion { .. } | InvarianceCheck::Stationarity { .. } => 0.03,
        }
    }

    /// The default set: `a = 2`, `t = 1/2`, `t0 = 1/2`, `theta = 0.3`.
    pub fn defaults() -> [InvarianceCheck; 4] {
        [
            InvarianceCheck::Scaling { a: 2.0 },
            InvarianceCheck::Inversion { t: 0.5 },
            InvarianceCheck::Stationarity { t0: 0.5 },
            InvarianceCheck::Rotation { theta: 0.3 },
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceResult {
    pub check: InvarianceCheck,
    /// Two-sample KS statistic of the moduli (`None` for rotations, where it is trivial).
    pub ks_abs: Option<f64>,
    pub ks_re: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Compares transformed and plain marginals of `X_N` on two independent sets of `M` draws each.
pub fn invariance_suite(spec: &SampleSpec, checks: &[InvarianceCheck]) -> Result<Vec<InvarianceResult>> {
    spec.validate(true)?;
    let mut out = Vec::new();
    for (i, &check) in checks.iter().enumerate() {
        let (ts_a, ts_b): (Vec<f64>, Vec<f64>) = match check {
            InvarianceCheck::Scaling { a } => (vec![a * a * 0.25], vec![0.25]),
            InvarianceCheck::Inversion { t } => (vec![1.0 / t], vec![t]),
            InvarianceCheck::Stationarity { t0 } => (vec![t0, t0 + 0.25], vec![0.25]),
            InvarianceCheck::Rotation { .. } => (vec![1.0], vec![1.0]),
        };
        let transformed = move |x: &[Complex64]| -> Complex64 {
            match check {
                InvarianceCheck::Scaling { a } => x[0] / a,
                InvarianceCheck::Inversion { t } => x[0] * t,
                InvarianceCheck::Stationarity { .. } => x[1] - x[0],
                InvarianceCheck::Rotation { theta } => x[0] * Complex64::from_polar(1.0, 2.0 * PI * theta),
            }
        };
        let stream = 2 * i as u64 + 1;
        let a = spec.collect(stream, &ts_a, transformed)?;
        let b = spec.collect(stream + 1, &ts_b, |x| x[0])?;
        let re = |v: &[Complex64]| v.iter().map(|z| z.re).collect::<Vec<_>>();
        let md = |v: &[Complex64]| v.iter().map(|z| z.norm()).collect::<Vec<_>>();
        let ks_re = ks_statistic(&re(&a), &re(&b));
        let ks_abs = match check {
            InvarianceCheck::Rotation { .. } => None,
            _ => Some(ks_statistic(&md(&a), &md(&b))),
        };
        let worst = ks_abs.unwrap_or(0.0).max(ks_re);
        out.push(InvarianceResult { check, ks_abs, ks_re, threshold: check.threshold(), pass: worst <= check.threshold() });
    }
    Ok(out)
}

/// `M` curlicue paths `X_N` with `x ~ lambda` (no values sampled).
pub fn sample_paths(spec: &SampleSpec) -> Result<Vec<CurlicuePath>> {
    spec.validate(false)?;
    let per_task = run_tasks(spec.m, spec.seed, 0, |rng, count| -> Result<Vec<CurlicuePath>> {
        (0..count).map(|_| crate::weyl::curlicue(spec.n, WeylParams { x: spec.lambda.sample(rng), ..spec.params }, &[])).collect()
    });
    let mut out = Vec::new();
    for t in per_task {
        out.extend(t?);
    }
    Ok(out)
}

/// `max |X(t+h) - X(t)| / (sqrt(h) log(1/h)^{1/4 + eps})` over paths, `h` in `h_grid` and
/// `t` on the lattice `k/N` with `t + h <= 1`. A finite-scale diagnostic.
pub fn modulus_statistic(paths: &[CurlicuePath], h_grid: &[f64], eps: f64) -> Result<f64> {
    if h_grid.iter().any(|&h| !(h > 0.0 && h <= 0.25)) {
        return Err(ThetaError::DomainError("h must lie in (0, 1/4]".into()));
    }
    let per_path = |p: &CurlicuePath| -> f64 {
        let nf = p.n as f64;
        let mut best = 0.0f64;
        for &h in h_grid {
            let norm = h.sqrt() * (1.0 / h).ln().powf(0.25 + eps);
            let mut k = 0usize;
            while (k as f64) / nf + h <= 1.0 {
                let t = k as f64 / nf;
                best = best.max((p.sample(t + h) - p.prefix[k] / nf.sqrt()).norm() / norm);
                k += 1;
            }
        }
        best
    };
    Ok(paths.par_iter().map(per_path).collect::<Vec<_>>().into_iter().fold(0.0, f64::max))
}

/// Pearson correlation of `|X_N(1/2)|` and `|X_N(1) - X_N(1/2)|`; a diagnostic of dependent increments.
pub fn increment_correlation(spec: &SampleSpec) -> Result<f64> {
    spec.validate(false)?;
    let v = spec.collect(0, &[0.5, 1.0], |x| (x[0].norm(), (x[1] - x[0]).norm()))?;
    let n = v.len() as f64;
    let (ma, mb) = (v.iter().map(|p| p.0).sum::<f64>() / n, v.iter().map(|p| p.1).sum::<f64>() / n);
    let cov = v.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>();
    let va = v.iter().map(|p| (p.0 - ma).powi(2)).sum::<f64>();
    let vb = v.iter().map(|p| (p.1 - mb).powi(2)).sum::<f64>();
    Ok(cov / (va * vb).sqrt())
}
