//! Theta functions on the Jacobi group.
//!
//! For `g = (x + iy, phi; xi1, xi2, zeta)` and a cutoff `f`,
//!
//! ```text
//! Theta_f(g) = y^{1/4} e(zeta - xi1 xi2 / 2) Sum_n f_phi((n - xi2) sqrt y) e((n - xi2)^2 x / 2 + n xi1).
//! ```
//!
//! Regular cutoffs are summed directly with a truncation chosen from a decay
//! envelope of `f_phi`. The sharp cutoff `chi = 1_(0,1)` is evaluated through
//! its dyadic decomposition into rescaled copies of `Delta` and `Delta_-`.

use crate::error::{Result, ThetaError};
use crate::group::{gamma_generator, geodesic_flow, jacobi_multiply, reduce_to_gamma_domain, GroupElement, UpperHalfPoint};
use crate::phase::{bilinear_phase, e, frac_prod, linear_phase, quad_phase, real_quad_phase, wrap, CompensatedSum};
use crate::weyl::weyl_sum_general_real;
use crate::shale_weil::{hermite_psi, kappa3_cached, CutoffSpec, RotatedCutoff};
use num_complex::Complex64;
use std::f64::consts::{LN_2, PI, TAU};

/// Value of a theta function together with its truncation certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaResult {
    pub value: Complex64,
    /// Lattice terms summed for `theta_f`; dyadic levels used for `theta_chi`.
    pub terms_used: usize,
    /// Absolute bound on the truncation error.
    pub certified_tail: f64,
    /// Set when the base point looks non-Diophantine; `certified_tail` is then heuristic.
    pub diophantine_warning: bool,
}

/// Largest number of lattice terms a single `theta_f` call will sum.
pub const MAX_LATTICE_TERMS: u64 = 200_000_000;

/// Multiplier applied to grid estimates of `kappa_3` before they enter a bound.
pub const KAPPA_SAFETY: f64 = 2.0;

/// Partial sums of `theta_chi` above this magnitude abort the evaluation.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// `theta_chi` flags the base point when a reduced height exceeds `HEIGHT_GROWTH 2^j max(1, y_0)`.
pub const HEIGHT_GROWTH: f64 = 1e4;

/// `xi2 = k + theta` with `k` an integer and `theta` in `[-1/2, 1/2)`.
fn split_center(xi2: f64) -> (i64, f64) {
    let k = (xi2 + 0.5).floor();
    (k as i64, xi2 - k)
}

/// Calls `visit` on every integer of `[lo, hi]`, starting at the point closest to
/// zero and alternating outward.
fn outward(lo: i64, hi: i64, mut visit: impl FnMut(i64) -> Result<()>) -> Result<()> {
    if lo > hi {
        return Ok(());
    }
    let c = 0i64.clamp(lo, hi);
    visit(c)?;
    let mut d = 1i64;
    loop {
        let (up, down) = (c + d, c - d);
        let (in_up, in_down) = (up <= hi, down >= lo);
        if !in_up && !in_down {
            return Ok(());
        }
        if in_up {
            visit(up)?;
        }
        if in_down {
            visit(down)?;
        }
        d += 1;
    }
}

/// Decay envelope of `|f_phi(w)|`, uniform in `phi`.
enum Envelope {
    Gaussian,
    /// `K (1 + |w|)^{-3}`.
    Cubic(f64),
    /// `Sum |c_k| |psi_k(w)|`.
    Hermite(Vec<f64>),
}

impl Envelope {
    fn for_cutoff(f: &CutoffSpec) -> Result<Self> {
        match f {
            CutoffSpec::Gaussian => Ok(Envelope::Gaussian),
            CutoffSpec::HermiteSeries { coeffs } => Ok(Envelope::Hermite(coeffs.iter().map(|c| c.abs()).collect())),
            CutoffSpec::IndicatorUnit => {
                Err(ThetaError::UnsupportedCutoff("the sharp indicator has no summable envelope".into()))
            }
            _ => Ok(Envelope::Cubic(KAPPA_SAFETY * kappa3_cached(f)?)),
        }
    }

    /// Smallest admissible truncation width.
    fn min_width(&self) -> f64 {
        match self {
            Envelope::Hermite(c) => {
                let k = c.len().saturating_sub(1) as f64;
                let tk = ((2.0 * k + 1.0) / TAU).sqrt();
                let mut w = tk + 1.0;
                while TAU * w - k / (w - tk) < PI {
                    w += 0.5;
                }
                w
            }
            _ => 0.5,
        }
    }

    /// Bound on `Sum_{|m - theta| sy > w} |f_phi((m - theta) sy)|`.
    fn tail(&self, w: f64, sy: f64) -> f64 {
        match self {
            Envelope::Gaussian => 2.0 * (-PI * w * w).exp() * (1.0 + 1.0 / (TAU * w * sy)),
            Envelope::Cubic(k) => 2.0 * k * ((1.0 + w).powi(-3) + (1.0 + w).powi(-2) / (2.0 * sy)),
            Envelope::Hermite(c) => {
                let kmax = c.len().saturating_sub(1) as f64;
                let tk = ((2.0 * kmax + 1.0) / TAU).sqrt();
                let lambda = TAU * w - kmax / (w - tk);
                let ew: f64 = c.iter().enumerate().map(|(k, ck)| ck * hermite_psi(k, w).abs()).sum();
                2.0 * ew * (1.0 + 1.0 / (lambda * sy))
            }
        }
    }

    /// Smallest width (up to bisection) whose tail bound is at most `tol`.
    fn width_for(&self, tol: f64, sy: f64) -> Result<(f64, f64)> {
        let w0 = self.min_width();
        let t0 = self.tail(w0, sy);
        if t0 <= tol {
            return Ok((w0, t0));
        }
        let (mut lo, mut hi) = (w0, 2.0 * w0);
        while self.tail(hi, sy) > tol {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(ThetaError::AccuracyNotMet { estimate: self.tail(hi, sy), requested: tol });
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.tail(mid, sy) > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((hi, self.tail(hi, sy)))
    }
}

/// Prefactor `y^{1/4} e(zeta - xi1 xi2/2 + k xi1 + theta^2 x / 2)` shared by all terms.
fn global_factor(g: &GroupElement, k: i64, theta: f64) -> Complex64 {
    let ph = wrap(g.zeta) - frac_prod(g.xi1, 0.5 * g.xi2) + linear_phase(k, g.xi1) + real_quad_phase(theta, g.z.x);
    g.z.y.powf(0.25) * e(ph)
}

/// Phase of the lattice term `n = k + m` without the shared part.
#[inline]
fn lattice_phase(m: i64, theta: f64, x: f64, xi1: f64) -> f64 {
    quad_phase(m, x) + linear_phase(m, xi1) - bilinear_phase(m, theta, x)
}

/// Moves `w` onto `0` or `+-1` when it lies within a few ulps of them, so that lattice
/// points meant to sit on an endpoint of `(0, 1)` or `(0, 1]` are not split by rounding
/// in `sqrt(y)`.
#[inline]
fn snap_endpoint(w: f64) -> f64 {
    const EPS: f64 = 8.0 * f64::EPSILON;
    if w.abs() <= EPS {
        0.0
    } else if (w.abs() - 1.0).abs() <= EPS {
        w.signum()
    } else {
        w
    }
}

fn check_count(lo: i64, hi: i64) -> Result<()> {
    if hi >= lo && (hi - lo) as u64 + 1 > MAX_LATTICE_TERMS {
        return Err(ThetaError::CapacityExceeded(format!("{} lattice terms", (hi - lo) as u64 + 1)));
    }
    Ok(())
}

/// Evaluates `Theta_f(g)` by direct summation, with the truncation certified to `tol`.
///
/// The sharp indicator is accepted only at `phi = 0 mod pi`, where the sum is finite.
pub fn theta_f(g: &GroupElement, f: &CutoffSpec, tol: f64) -> Result<ThetaResult> {
    if !(tol > 0.0) {
        return Err(ThetaError::DomainError(format!("tolerance {tol} must be positive")));
    }
    let rot = RotatedCutoff::new(f, g.phi)?;
    if matches!(f, CutoffSpec::IndicatorUnit) && rot.reflection().is_none() {
        return Err(ThetaError::UnsupportedCutoff(
            "the sharp indicator is only summable at phi = 0 mod pi; use theta_chi".into(),
        ));
    }
    let sy = g.z.y.sqrt();
    let (k, theta) = split_center(g.xi2);
    let y4 = g.z.y.powf(0.25);
    let (lo, hi, tail) = match (rot.reflection(), f.support()) {
        (Some(sign), Some((a, b))) => {
            let (wa, wb) = if sign < 0.0 { (-b, -a) } else { (a, b) };
            ((theta + wa / sy).ceil() as i64 - 1, (theta + wb / sy).floor() as i64 + 1, 0.0)
        }
        _ => {
            let env = Envelope::for_cutoff(f)?;
            let (w, t) = env.width_for(tol / y4, sy)?;
            let r = w / sy;
            if r > MAX_LATTICE_TERMS as f64 {
                return Err(ThetaError::CapacityExceeded(format!("truncation radius {r:e}")));
            }
            ((theta - r).ceil() as i64, (theta + r).floor() as i64, y4 * t)
        }
    };
    check_count(lo, hi)?;
    let mut acc = CompensatedSum::new();
    let mut used = 0usize;
    outward(lo, hi, |m| {
        let v = rot.eval(snap_endpoint((m as f64 - theta) * sy))?;
        used += 1;
        if v.re != 0.0 || v.im != 0.0 {
            acc.add(v * e(lattice_phase(m, theta, g.z.x, g.xi1)));
        }
        Ok(())
    })?;
    Ok(ThetaResult {
        value: global_factor(g, k, theta) * acc.value(),
        terms_used: used,
        certified_tail: tail,
        diophantine_warning: false,
    })
}

/// `Theta_f(g)` evaluated at the `Gamma`-reduced representative of `g`.
///
/// This is the efficient path for points high in the cusp or close to the real
/// axis. For the sharp indicator it falls back to [`theta_f`].
pub fn theta_f_reduced(g: &GroupElement, f: &CutoffSpec, tol: f64) -> Result<ThetaResult> {
    if matches!(f, CutoffSpec::IndicatorUnit) {
        return theta_f(g, f, tol);
    }
    theta_f(&reduce_to_gamma_domain(g)?, f, tol)
}

/// Jacobi's theta function `theta(z, alpha) = Sum_n e(n^2 z / 2 + n alpha)`.
///
/// `x` is reduced modulo 2; below height 1/2 the exact functional equation is
/// applied once when it raises the height.
pub fn jacobi_theta(z: UpperHalfPoint, alpha: Complex64) -> Complex64 {
    let x = z.x - 2.0 * (0.5 * z.x).round();
    let zz = Complex64::new(x, z.y);
    if z.y < 0.5 && zz.norm_sqr() < 1.0 {
        let zi = -zz.inv();
        let a2 = alpha / zz;
        let pref = (Complex64::i() / zz).sqrt() * e_complex(-alpha * alpha / (2.0 * zz));
        return pref * theta_series(zi, a2);
    }
    theta_series(zz, alpha)
}

fn e_complex(w: Complex64) -> Complex64 {
    e(w.re) * (-TAU * w.im).exp()
}

/// Direct series of `theta(z, alpha)`, summed outward from the largest term.
fn theta_series(z: Complex64, alpha: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let log_mag = |n: f64| -PI * n * n * y - TAU * n * alpha.im;
    let center = (-alpha.im / y).round() as i64;
    let top = log_mag(center as f64);
    let cutoff = top + (1e-18f64).ln();
    let term = |n: i64| log_mag(n as f64).exp() * e(quad_phase(n, x) + linear_phase(n, alpha.re));
    let mut acc = CompensatedSum::new();
    acc.add(term(center));
    for dir in [1i64, -1] {
        let mut n = center + dir;
        while log_mag(n as f64) > cutoff {
            acc.add(term(n));
            n += dir;
        }
    }
    acc.value()
}

/// `|Theta_f(gamma_i g) - Theta_f(g)|` for the generator `gamma_i`, both sides by direct summation.
pub fn check_gamma_invariance(g: &GroupElement, f: &CutoffSpec, i: usize, tol: f64) -> Result<f64> {
    let gi = gamma_generator(i)?;
    let h = jacobi_multiply(&gi, g)?;
    let a = theta_f(&h, f, tol)?.value;
    let b = theta_f(g, f, tol)?.value;
    Ok((a - b).norm())
}

/// `|S_N(x, alpha; f) - e^{s/4} Theta_f(n_+(x, alpha) n_-(u, beta) Phi^s)|` with `N = e^{s/2}`.
pub fn thm1_residual(x: f64, alpha: f64, u: f64, beta: f64, s: f64, f: &CutoffSpec) -> Result<f64> {
    if !f.is_smooth() {
        return Err(ThetaError::UnsupportedCutoff(format!("{f:?} is not smooth")));
    }
    if !(s >= 0.0) {
        return Err(ThetaError::DomainError(format!("s = {s} must be nonnegative")));
    }
    let n = (0.5 * s).exp();
    let direct = weyl_sum_general_real(n, x, alpha, f)?;
    let g = jacobi_multiply(&GroupElement::n_plus(x, alpha), &GroupElement::n_minus(u, beta))?;
    let g = geodesic_flow(&g, s);
    let th = theta_f(&g, f, 1e-13)?;
    Ok((direct - (0.25 * s).exp() * th.value).norm())
}

/// `Delta(w)`, the bump of the dyadic partition.
#[inline]
fn delta(w: f64) -> f64 {
    const SIXTH: f64 = 1.0 / 6.0;
    const THIRD: f64 = 1.0 / 3.0;
    if w <= SIXTH || w >= 2.0 * THIRD {
        0.0
    } else if w <= 0.25 {
        72.0 * (w - SIXTH) * (w - SIXTH)
    } else if w <= THIRD {
        1.0 - 72.0 * (w - THIRD) * (w - THIRD)
    } else if w <= 0.5 {
        1.0 - 18.0 * (w - THIRD) * (w - THIRD)
    } else {
        18.0 * (w - 2.0 * THIRD) * (w - 2.0 * THIRD)
    }
}

/// `Sum_{j < levels} Delta(2^j w)`.
fn dyadic_half(w: f64, levels: usize) -> f64 {
    let mut t = w;
    let mut acc = 0.0;
    for _ in 0..levels {
        if t >= 2.0 / 3.0 {
            break;
        }
        acc += delta(t);
        t *= 2.0;
    }
    acc
}

/// The dyadic partition of `1_(0,1)` truncated after `levels` scales.
pub fn dyadic_partition(w: f64, levels: usize) -> f64 {
    if !(w > 0.0 && w < 1.0) {
        return 0.0;
    }
    dyadic_half(w, levels) + dyadic_half(1.0 - w, levels)
}

/// `Theta_chi(g)` for the sharp cutoff `chi = 1_(0,1)` via the dyadic series
///
/// ```text
/// Sum_j 2^{-j/2} Theta_Delta(g Phi^{-2j ln 2}) + Sum_j 2^{-j/2} Theta_{Delta_-}(g (1; (0,1), 0) Phi^{-2j ln 2}).
/// ```
///
/// At `phi = 0 mod pi` all levels collapse into one finite sum whose weights are
/// the truncated partition, and `certified_tail` is exact. Elsewhere each level is
/// evaluated at a `Gamma`-reduced point, and the representative is carried from one
/// level to the next by re-reducing after each flow step. The tail beyond the last
/// level is bounded with the largest reduced height seen so far, so the certificate
/// is semi-rigorous. Each flow step expands rounding errors by a factor 4, so the
/// levels beyond about 25 follow a shadowing orbit rather than the exact one.
pub fn theta_chi(g: &GroupElement, tol: f64, j_max: usize) -> Result<ThetaResult> {
    if !(tol > 0.0) {
        return Err(ThetaError::DomainError(format!("tolerance {tol} must be positive")));
    }
    if j_max == 0 {
        return Err(ThetaError::OutOfRange("j_max must be at least 1".into()));
    }
    let nu = (g.phi / PI).round();
    if (g.phi - nu * PI).abs() <= 1e-13 {
        return theta_chi_flat(g, nu as i64, j_max);
    }
    let (k_plus, k_minus) = (KAPPA_SAFETY * kappa3_cached(&CutoffSpec::Triangle)?, KAPPA_SAFETY * kappa3_cached(&CutoffSpec::TriangleMinus)?);
    let level_bound = |kk: f64, y: f64| kk * y.powf(0.25) * (2.0 + 1.0 / y.sqrt());
    let mut h1 = reduce_to_gamma_domain(g)?;
    let mut h2 = reduce_to_gamma_domain(&jacobi_multiply(g, &GroupElement::heisenberg(0.0, 1.0, 0.0))?)?;
    let y0 = h1.z.y.max(h2.z.y).max(1.0);
    let mut ymax = y0;
    let mut acc = CompensatedSum::new();
    let mut trunc = 0.0;
    let mut warning = false;
    let ratio = std::f64::consts::FRAC_1_SQRT_2;
    // Per-level budgets tol_j = c 2^{j/4}, so that Sum_j 2^{-j/2} 2 tol_j <= tol/2.
    let c = tol * (1.0 - 2f64.powf(-0.25)) / 4.0;
    let step = -2.0 * LN_2;
    let mut tail = f64::INFINITY;
    let mut levels = 0;
    for j in 0..j_max {
        if j > 0 {
            h1 = reduce_to_gamma_domain(&geodesic_flow(&h1, step))?;
            h2 = reduce_to_gamma_domain(&geodesic_flow(&h2, step))?;
        }
        let w = ratio.powi(j as i32);
        let tj = c * 2f64.powf(0.25 * j as f64);
        let a = theta_f(&h1, &CutoffSpec::Triangle, tj)?;
        let b = theta_f(&h2, &CutoffSpec::TriangleMinus, tj)?;
        acc.add(w * (a.value + b.value));
        trunc += w * (a.certified_tail + b.certified_tail);
        levels = j + 1;
        let hy = h1.z.y.max(h2.z.y);
        if hy > HEIGHT_GROWTH * 2f64.powi(j as i32) * y0 {
            warning = true;
        }
        ymax = ymax.max(hy);
        let mag = acc.value().norm();
        if mag > DIVERGENCE_THRESHOLD {
            return Err(ThetaError::DivergenceSuspected(mag));
        }
        tail = ratio.powi(levels as i32) / (1.0 - ratio) * (level_bound(k_plus, ymax) + level_bound(k_minus, ymax));
        if tail + trunc < tol {
            break;
        }
    }
    if tail + trunc >= tol {
        warning = true;
    }
    Ok(ThetaResult { value: acc.value(), terms_used: levels, certified_tail: tail + trunc, diophantine_warning: warning })
}

/// `Theta_chi` at `phi = nu pi`, where every level is a finite sum over the same lattice points.
fn theta_chi_flat(g: &GroupElement, nu: i64, levels: usize) -> Result<ThetaResult> {
    let sy = g.z.y.sqrt();
    let (k, theta) = split_center(g.xi2);
    let sign = if nu.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let (wa, wb) = if sign > 0.0 { (0.0, 1.0) } else { (-1.0, 0.0) };
    let lo = (theta + wa / sy).floor() as i64;
    let hi = (theta + wb / sy).ceil() as i64;
    check_count(lo, hi)?;
    // Below this distance from an endpoint the truncated partition is incomplete.
    let edge = 2f64.powi(1 - levels.min(1100) as i32) / 3.0;
    let mut acc = CompensatedSum::new();
    let mut missing = 0.0;
    outward(lo, hi, |m| {
        let w = snap_endpoint(sign * (m as f64 - theta) * sy);
        if w > 0.0 && w < 1.0 {
            let wt = dyadic_partition(w, levels);
            if w < edge || 1.0 - w < edge {
                missing += (1.0 - wt).abs();
            }
            acc.add(wt * e(lattice_phase(m, theta, g.z.x, g.xi1)));
        }
        Ok(())
    })?;
    Ok(ThetaResult {
        value: e(-(nu as f64) / 4.0) * global_factor(g, k, theta) * acc.value(),
        terms_used: levels,
        certified_tail: g.z.y.powf(0.25) * missing,
        diophantine_warning: false,
    })
}
