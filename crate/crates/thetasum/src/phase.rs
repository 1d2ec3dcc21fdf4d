//! Exact phase arithmetic modulo one and the exponential `e(x) = exp(2 pi i x)`.
//!
//! Quadratic phases such as `n^2 x / 2` grow far beyond the range where a
//! plain `f64` product keeps its fractional part. The routines here split
//! products with fused multiply-add so that the fractional part is recovered
//! to within a few units in the last place of the final result.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Numerical tolerances used as defaults across the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Group identities (associativity, flow semigroup).
    pub group: f64,
    /// Closed forms checked against matrix products.
    pub closed_form: f64,
    /// Determinant-one check for `SL(2,R)` matrices.
    pub determinant: f64,
    /// Absolute accuracy target for oscillatory piece integrals.
    pub fresnel: f64,
}

/// The default tolerance record.
pub const TOLERANCES: Tolerances = Tolerances {
    group: 1e-10,
    closed_form: 1e-12,
    determinant: 1e-12,
    fresnel: 1e-10,
};

/// Reduces `x` to the interval `[-1/2, 1/2]`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    x - x.round()
}

/// `e(x) = exp(2 pi i x)`, evaluated after reducing `x` modulo one.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let (s, c) = (TAU * wrap(x)).sin_cos();
    Complex64::new(c, s)
}

/// The fractional part of `a * b`, reduced to `[-1/2, 1/2]`, using the exact
/// two-product `a * b = p + err`.
#[inline]
pub fn frac_prod(a: f64, b: f64) -> f64 {
    let p = a * b;
    let err = a.mul_add(b, -p);
    wrap(wrap(p) + wrap(err))
}

/// `n * alpha` modulo one for an integer `n`.
#[inline]
pub fn linear_phase(n: i64, alpha: f64) -> f64 {
    if n.unsigned_abs() < (1u64 << 53) {
        frac_prod(n as f64, alpha)
    } else {
        let hi = (n >> 26) << 26;
        let lo = n - hi;
        wrap(frac_prod(hi as f64, alpha) + frac_prod(lo as f64, alpha))
    }
}

/// `m a b` modulo one for an integer `|m| < 2^53`, with `m a` split exactly.
#[inline]
pub fn bilinear_phase(m: i64, a: f64, b: f64) -> f64 {
    let mf = m as f64;
    let p = mf * a;
    let err = mf.mul_add(a, -p);
    wrap(frac_prod(p, b) + frac_prod(err, b))
}

/// `n^2 x / 2` modulo one for an integer `n`.
///
/// The square is formed exactly in `u128` and split into a double-rounded
/// head and an exact tail, each multiplied by `x/2` with [`frac_prod`].
#[inline]
pub fn quad_phase(n: i64, x: f64) -> f64 {
    let half = 0.5 * x;
    let m = n.unsigned_abs() as u128;
    let sq = m * m;
    if sq < (1u128 << 53) {
        return frac_prod(sq as f64, half);
    }
    let hi = sq as f64;
    let hi_int = hi as u128;
    let lo = (sq as i128 - hi_int as i128) as f64;
    wrap(frac_prod(hi, half) + frac_prod(lo, half))
}

/// `t^2 x / 2` modulo one for a real `t`, with `t^2` split by a two-product.
#[inline]
pub fn real_quad_phase(t: f64, x: f64) -> f64 {
    let sq = t * t;
    let sq_err = t.mul_add(t, -sq);
    let half = 0.5 * x;
    wrap(frac_prod(sq, half) + frac_prod(sq_err, half))
}

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    re: f64,
    im: f64,
    re_c: f64,
    im_c: f64,
}

impl CompensatedSum {
    /// An empty accumulator.
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one term.
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        let (s, c) = two_sum(self.re, z.re);
        self.re = s;
        self.re_c += c;
        let (s, c) = two_sum(self.im, z.im);
        self.im = s;
        self.im_c += c;
    }

    /// The compensated total.
    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}
