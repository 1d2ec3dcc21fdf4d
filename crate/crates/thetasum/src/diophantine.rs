//! Continued fractions and finite-range Diophantine estimates.
//!
//! A double only determines finitely many partial quotients of the real number it
//! approximates, and a Diophantine type can never be decided from one. Every
//! estimate here is therefore a statement about `q <= Q_max` only.

use crate::error::{Result, ThetaError};
use crate::group::UpperHalfPoint;

/// Largest number of partial quotients requested from [`continued_fraction`].
pub const MAX_CF_TERMS: usize = 64;

/// Denominators beyond this bound are not resolved by a double.
pub const MAX_DENOMINATOR: i128 = 1 << 52;

/// Default exponent used when a Diophantine condition is needed for truncation control.
pub const DEFAULT_KAPPA: f64 = 1.01;

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuedFraction {
    pub a0: i64,
    pub partial_quotients: Vec<u64>,
    /// `(p_k, q_k)` for `k = 0, 1, ...`, starting with `(a0, 1)`. The denominators
    /// increase strictly except that `q_1 = q_0 = 1` when `a_1 = 1`.
    pub convergents: Vec<(i128, i128)>,
}

/// Expands the exact rational value of `x` by the Euclidean algorithm.
///
/// The expansion stops after `max_terms` partial quotients or when it terminates
/// (every double is rational). `PrecisionExhausted` is raised if a convergent
/// denominator would pass `2^52` before that.
pub fn continued_fraction(x: f64, max_terms: usize) -> Result<ContinuedFraction> {
    if !x.is_finite() {
        return Err(ThetaError::DomainError(format!("x = {x} is not finite")));
    }
    if max_terms > MAX_CF_TERMS {
        return Err(ThetaError::OutOfRange(format!("max_terms = {max_terms} exceeds {MAX_CF_TERMS}")));
    }
    if x.abs() >= 2f64.powi(62) {
        return Err(ThetaError::OutOfRange(format!("x = {x} has no 64-bit integer part")));
    }
    let (mut num, mut den) = exact_ratio(x);
    let a0 = num.div_euclid(den);
    num = num.rem_euclid(den);
    let mut out = ContinuedFraction { a0: a0 as i64, partial_quotients: Vec::new(), convergents: vec![(a0, 1)] };
    let (mut p_prev, mut q_prev, mut p, mut q) = (1i128, 0i128, a0, 1i128);
    while out.partial_quotients.len() < max_terms && num != 0 {
        (num, den) = (den, num);
        let a = num / den;
        num %= den;
        let (pn, qn) = (a * p + p_prev, a * q + q_prev);
        if qn > MAX_DENOMINATOR {
            return Err(ThetaError::PrecisionExhausted(format!(
                "denominator {qn} after {} partial quotients",
                out.partial_quotients.len()
            )));
        }
        (p_prev, q_prev, p, q) = (p, q, pn, qn);
        out.partial_quotients.push(a as u64);
        out.convergents.push((p, q));
    }
    Ok(out)
}

/// `x = num / den` exactly, with `den` a power of two.
fn exact_ratio(x: f64) -> (i128, i128) {
    if x == 0.0 || x.fract() == 0.0 {
        return (x as i128, 1);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mut mant = (bits & ((1 << 52) - 1)) as i128;
    let mut e = if exp == 0 { -1074 } else { mant |= 1 << 52; exp - 1075 };
    while mant & 1 == 0 {
        mant >>= 1;
        e += 1;
    }
    // past 2^-120 the first quotient alone is beyond 2^52; keep the value representable
    let shift = (-e).min(120);
    mant >>= (-e) - shift;
    let sign = if x < 0.0 { -1 } else { 1 };
    (sign * mant, 1i128 << shift)
}

/// Finite-range Diophantine data of `x` for the exponent `kappa`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiophantineEstimate {
    pub kappa: f64,
    /// `min_{1 <= q <= Q_max} q^kappa dist(q x, Z)`: no rational `p/q` with `q <= Q_max`
    /// lies closer to `x` than `A_lower / q^{1 + kappa}`.
    pub a_lower: f64,
    /// The same minimum over `sqrt(Q_max) <= q <= Q_max`, an estimate of the
    /// asymptotic constant `liminf q^kappa dist(q x, Z)`.
    pub a_tail: f64,
    pub q_max: u64,
    /// Denominator attaining `a_lower`.
    pub q_at_min: u64,
}

/// Scans every `q <= q_max`. Exact multiples (rational `x`) give `a_lower = 0`.
pub fn diophantine_type(x: f64, kappa: f64, q_max: u64) -> Result<DiophantineEstimate> {
    if !(kappa >= 1.0) {
        return Err(ThetaError::DomainError(format!("kappa = {kappa} must be at least 1")));
    }
    if q_max == 0 || !x.is_finite() {
        return Err(ThetaError::DomainError("need a finite x and Q_max >= 1".into()));
    }
    let frac = x.rem_euclid(1.0);
    let tail_from = (q_max as f64).sqrt().ceil() as u64;
    let (mut a_lower, mut a_tail, mut q_at_min) = (f64::INFINITY, f64::INFINITY, 1);
    for q in 1..=q_max {
        let t = q as f64 * frac;
        let d = (t - t.round()).abs();
        let v = (q as f64).powf(kappa) * d;
        if v < a_lower {
            a_lower = v;
            q_at_min = q;
        }
        if q >= tail_from {
            a_tail = a_tail.min(v);
        }
    }
    Ok(DiophantineEstimate { kappa, a_lower, a_tail, q_max, q_at_min })
}

/// `n_x n_-(u) a_{e^{-s}} i = x + u/(e^{2s}+u^2) + i e^s/(e^{2s}+u^2)`.
pub fn z_su(x: f64, u: f64, s: f64) -> Result<UpperHalfPoint> {
    // divide through by e^{2s} when s > 0 to keep the exponentials finite
    let (re, im) = if s > 0.0 {
        let d = 1.0 + u * u * (-2.0 * s).exp();
        (u * (-2.0 * s).exp() / d, (-s).exp() / d)
    } else {
        let d = (2.0 * s).exp() + u * u;
        (u / d, s.exp() / d)
    };
    UpperHalfPoint::new(x + re, im)
}

/// `W(t) = 1 + (t^2 + |t| sqrt(4 + t^2)) / 2`, the factor `e^{dist}` between the
/// heights along `z_s(x, u)` and `z_s(x, 0)`.
pub fn w_factor(t: f64) -> f64 {
    1.0 + 0.5 * (t * t + t.abs() * (4.0 + t * t).sqrt())
}

/// Upper bound for the cusp height of `z_{-s}(x, u)`, `s >= 0`, when `x + 1/u` is of type `(A, kappa)`.
///
/// For `s <= 2 log+(1/|u|)` the bound is `max(1/(2|u|), 2)`. Beyond that point,
/// `z_{-s}(x, u) = z_tau(x + 1/u, -u)` with `tau = s + 2 log|u| >= 0`, and the
/// forward estimate `A^{-2/kappa} e^{(1 - 1/kappa) tau} W(u)` gives
/// `A^{-2/kappa} |u|^{2(1-1/kappa)} e^{(1-1/kappa) s} W(u)`.
/// The base point `x` enters only through the hypothesis on `x + 1/u`.
pub fn excursion_bound(_x: f64, u: f64, a: f64, kappa: f64, s: f64) -> Result<f64> {
    if u == 0.0 {
        return Err(ThetaError::DomainError("u must be nonzero".into()));
    }
    if !(kappa >= 1.0 && a > 0.0 && a <= 1.0 && s >= 0.0) {
        return Err(ThetaError::DomainError(format!("need kappa >= 1, 0 < A <= 1, s >= 0 (got {kappa}, {a}, {s})")));
    }
    let ua = u.abs();
    if s <= 2.0 * (1.0 / ua).ln().max(0.0) {
        return Ok((0.5 / ua).max(2.0));
    }
    let expo = 1.0 - 1.0 / kappa;
    Ok(a.powf(-2.0 / kappa) * ua.powf(2.0 * expo) * (expo * s).exp() * w_factor(u))
}
