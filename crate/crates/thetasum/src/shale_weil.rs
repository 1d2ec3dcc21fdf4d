//! The metaplectic rotation `f -> f_phi = R(k_phi) f` on cutoff functions.
//!
//! For `phi` not a multiple of `pi`,
//!
//! ```text
//! f_phi(w) = e(-sigma/8) |sin phi|^{-1/2} Int e(((w^2 + w'^2) cos phi / 2 - w w') / sin phi) f(w') dw'
//! ```
//!
//! with `sigma = 2 nu + 1` on `(nu pi, (nu + 1) pi)`; at `phi = nu pi` the
//! operator is `f(w) -> e(-nu/4) f((-1)^nu w)`.
//!
//! Smooth cutoffs are handled through their Hermite expansion, where the
//! rotation is diagonal. Piecewise-quadratic cutoffs (the trapezoids, the
//! triangles `Delta`, `Delta_-` and the unit indicator) are integrated piece
//! by piece with [`fresnel_phase_integral`].

use crate::error::{Result, ThetaError};
use crate::phase::{e, TOLERANCES};
use errorfunctions::ComplexErrorFunctions;
use gauss_quad::{GaussHermite, GaussLegendre};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;
use std::sync::OnceLock;

/// A cutoff function `f` on the real line.
#[derive(Clone, Debug, PartialEq)]
pub enum CutoffSpec {
    /// `e^{-pi w^2}`.
    Gaussian,
    /// The indicator of `(0, 1]`.
    IndicatorUnit,
    /// The piecewise-quadratic bump `Delta` supported on `[1/6, 2/3]`.
    Triangle,
    /// `Delta_-(w) = Delta(-w)`.
    TriangleMinus,
    /// The `C^1` trapezoid rising on `[a - eps, a]`, flat on `[a, b]`, falling on `[b, b + del]`.
    Trapezoid { a: f64, b: f64, eps: f64, del: f64 },
    /// `Sum_k c_k psi_k` for a finite coefficient list.
    HermiteSeries { coeffs: Vec<f64> },
}

/// One quadratic piece `q0 + q1 t + q2 t^2`, `t = w - mid`, on `[mid - half, mid + half]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadPiece {
    pub mid: f64,
    pub half: f64,
    pub q: [f64; 3],
}

impl QuadPiece {
    /// Builds a piece on `[lo, hi]` from a polynomial expanded around `center`.
    fn around(lo: f64, hi: f64, center: f64, p: [f64; 3]) -> QuadPiece {
        let mid = 0.5 * (lo + hi);
        let d = mid - center;
        QuadPiece {
            mid,
            half: 0.5 * (hi - lo),
            q: [p[0] + p[1] * d + p[2] * d * d, p[1] + 2.0 * p[2] * d, p[2]],
        }
    }

    /// Value of the polynomial at `w` (no support check).
    pub fn poly(&self, w: f64) -> f64 {
        let t = w - self.mid;
        self.q[0] + t * (self.q[1] + t * self.q[2])
    }
}

impl CutoffSpec {
    /// A validated trapezoid (`0 <= a <= b`, `eps, del > 0`).
    pub fn trapezoid(a: f64, b: f64, eps: f64, del: f64) -> Result<Self> {
        if !(0.0 <= a && a <= b && eps > 0.0 && del > 0.0 && b.is_finite() && eps.is_finite() && del.is_finite()) {
            return Err(ThetaError::DomainError(format!("invalid trapezoid a={a} b={b} eps={eps} del={del}")));
        }
        Ok(CutoffSpec::Trapezoid { a, b, eps, del })
    }

    /// Trapezoid parameters `(a, b, eps, del)` of the piecewise-quadratic tags.
    pub fn trapezoid_params(&self) -> Option<(f64, f64, f64, f64)> {
        match *self {
            CutoffSpec::Triangle => Some((1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0)),
            CutoffSpec::TriangleMinus => Some((-1.0 / 3.0, -1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)),
            CutoffSpec::Trapezoid { a, b, eps, del } => Some((a, b, eps, del)),
            _ => None,
        }
    }

    /// True for the tags handled by the Hermite expansion.
    pub fn is_smooth(&self) -> bool {
        matches!(self, CutoffSpec::Gaussian | CutoffSpec::HermiteSeries { .. })
    }

    /// Point value `f(w)`.
    pub fn eval(&self, w: f64) -> f64 {
        match self {
            CutoffSpec::Gaussian => (-PI * w * w).exp(),
            CutoffSpec::IndicatorUnit => {
                if w > 0.0 && w <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffSpec::HermiteSeries { coeffs } => {
                coeffs.iter().enumerate().map(|(k, c)| c * hermite_psi(k, w)).sum()
            }
            _ => {
                let (a, b, eps, del) = self.trapezoid_params().unwrap();
                trapezoid_value(a, b, eps, del, w)
            }
        }
    }

    /// The quadratic pieces of a piecewise-quadratic cutoff.
    pub fn pieces(&self) -> Option<Vec<QuadPiece>> {
        if let CutoffSpec::IndicatorUnit = self {
            return Some(vec![QuadPiece { mid: 0.5, half: 0.5, q: [1.0, 0.0, 0.0] }]);
        }
        let (a, b, eps, del) = self.trapezoid_params()?;
        let (ie, id) = (2.0 / (eps * eps), 2.0 / (del * del));
        let mut v = vec![
            QuadPiece::around(a - eps, a - 0.5 * eps, a - eps, [0.0, 0.0, ie]),
            QuadPiece::around(a - 0.5 * eps, a, a, [1.0, 0.0, -ie]),
        ];
        if b > a {
            v.push(QuadPiece::around(a, b, a, [1.0, 0.0, 0.0]));
        }
        v.push(QuadPiece::around(b, b + 0.5 * del, b, [1.0, 0.0, -id]));
        v.push(QuadPiece::around(b + 0.5 * del, b + del, b + del, [0.0, 0.0, id]));
        Some(v)
    }

    /// Exact Hermite coefficients of the smooth tags.
    pub fn exact_hermite_coeffs(&self) -> Option<Vec<f64>> {
        match self {
            CutoffSpec::Gaussian => Some(vec![2f64.powf(-0.25)]),
            CutoffSpec::HermiteSeries { coeffs } => Some(coeffs.clone()),
            _ => None,
        }
    }

    /// `||f||^2` in `L^2(R)`, evaluated in closed form.
    pub fn l2_norm_sq(&self) -> f64 {
        match self {
            CutoffSpec::Gaussian => std::f64::consts::FRAC_1_SQRT_2,
            CutoffSpec::HermiteSeries { coeffs } => coeffs.iter().map(|c| c * c).sum(),
            _ => self
                .pieces()
                .unwrap()
                .iter()
                .map(|p| {
                    // Int_{-h}^{h} (q0 + q1 t + q2 t^2)^2 dt
                    let [a, b, c] = p.q;
                    let h = p.half;
                    2.0 * (a * a * h + (b * b + 2.0 * a * c) * h.powi(3) / 3.0 + c * c * h.powi(5) / 5.0)
                })
                .sum(),
        }
    }

    /// Smallest interval containing the support, for compactly supported tags.
    pub fn support(&self) -> Option<(f64, f64)> {
        let p = self.pieces()?;
        Some((p[0].mid - p[0].half, p[p.len() - 1].mid + p[p.len() - 1].half))
    }
}

fn trapezoid_value(a: f64, b: f64, eps: f64, del: f64, w: f64) -> f64 {
    if w <= a - eps || w >= b + del {
        0.0
    } else if w <= a - 0.5 * eps {
        2.0 / (eps * eps) * (w - (a - eps)).powi(2)
    } else if w <= a {
        1.0 - 2.0 / (eps * eps) * (w - a).powi(2)
    } else if w < b {
        1.0
    } else if w < b + 0.5 * del {
        1.0 - 2.0 / (del * del) * (w - b).powi(2)
    } else {
        2.0 / (del * del) * (w - (b + del)).powi(2)
    }
}

/// The normalized Hermite function `psi_k(t) = (2^{k-1/2} k!)^{-1/2} H_k(sqrt(2 pi) t) e^{-pi t^2}`.
///
/// Evaluated by the three-term recurrence of the orthonormal functions with a
/// running exponent, so neither `H_k` nor `k!` is formed.
pub fn hermite_psi(k: usize, t: f64) -> f64 {
    let x = (TAU).sqrt() * t;
    let (v, log_scale) = hermite_poly_scaled(k, x);
    if v == 0.0 {
        return 0.0;
    }
    // psi_k(t) = (2 pi)^{1/4} h_k(x), h_k(x) = pi^{-1/4} e^{-x^2/2} * (normalized polynomial)
    let log = log_scale - 0.5 * x * x + 0.25 * (TAU).ln() - 0.25 * PI.ln();
    v * log.exp()
}

/// Returns `(v, s)` with `v e^{s} = H_k(x) / sqrt(2^k k!)`.
fn hermite_poly_scaled(k: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut scale = 0.0;
    for j in 0..k {
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * x * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if m > 1e150 {
            cur /= m;
            prev /= m;
            scale += m.ln();
        }
    }
    (cur, scale)
}

/// `psi_k(t) e^{pi t^2}`, the polynomial part of the Hermite function.
fn hermite_psi_poly(k: usize, t: f64) -> f64 {
    let (v, s) = hermite_poly_scaled(k, TAU.sqrt() * t);
    v * (s + 0.25 * 2f64.ln()).exp()
}

/// Hermite coefficients `<f, psi_k>` for `k < K`, by Gauss-Hermite quadrature with `max(4K, 32)` nodes.
pub fn hermite_coeffs(f: &CutoffSpec, k_max: usize) -> Result<Vec<f64>> {
    let poly_part: Box<dyn Fn(f64) -> f64> = match f {
        CutoffSpec::Gaussian => Box::new(|_| 1.0),
        CutoffSpec::HermiteSeries { coeffs } => {
            let c = coeffs.clone();
            Box::new(move |t| c.iter().enumerate().map(|(j, cj)| cj * hermite_psi_poly(j, t)).sum())
        }
        other => return Err(ThetaError::UnsupportedCutoff(format!("{other:?} has no Hermite expansion"))),
    };
    let n = NonZeroUsize::new((4 * k_max).max(32)).unwrap();
    let rule = GaussHermite::new(n);
    let scale = 1.0 / TAU.sqrt();
    // <f, psi_k> = Int f(t) psi_k(t) dt, with f psi_k = e^{-2 pi t^2} * (polynomial parts), t = x / sqrt(2 pi)
    Ok((0..k_max)
        .map(|k| scale * rule.integrate(|x| poly_part(x * scale) * hermite_psi_poly(k, x * scale)))
        .collect())
}

fn legendre_rule(n: usize) -> &'static [(f64, f64)] {
    static RULES: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        (0..=MAX_GL)
            .map(|k| {
                if k < 2 {
                    Vec::new()
                } else {
                    GaussLegendre::new(NonZeroUsize::new(k).unwrap()).as_node_weight_pairs().to_vec()
                }
            })
            .collect()
    });
    &rules[n.clamp(2, MAX_GL)]
}

const MAX_GL: usize = 64;
const OMEGA_DIRECT: f64 = 18.0;
const BACKWARD_TERMS: usize = 16;

/// `Int_{-h}^{h} (q0 + q1 t + q2 t^2) e(c2 t^2 + d1 t) dt` with an error estimate.
fn piece_integral(q: [f64; 3], h: f64, c2: f64, d1: f64) -> (Complex64, f64) {
    if h == 0.0 {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    let len = 2.0 * h;
    let omega = d1.abs() * len + 2.0 * c2.abs() * h * h;
    let qscale = q[0].abs() + q[1].abs() * h + q[2].abs() * h * h;
    if omega <= OMEGA_DIRECT {
        let n = (2.5 * omega).ceil() as usize + 16;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(x, wgt) in legendre_rule(n) {
            let t = h * x;
            acc += wgt * (q[0] + t * (q[1] + t * q[2])) * e(c2 * t * t + d1 * t);
        }
        return (acc * h, 1e-15 * qscale * len);
    }
    let two_pi_i = Complex64::new(0.0, TAU);
    let ep = e(c2 * h * h + d1 * h);
    let em = e(c2 * h * h - d1 * h);
    if d1.abs() >= 8.0 * c2.abs() * h {
        // No stationary point near the piece: backward solve of
        // d1 I_k + 2 c2 I_{k+1} + k/(2 pi i) I_{k-1} = [t^k e(psi)]/(2 pi i),
        // in the scaled unknowns J_k = I_k / h^k with J_{K+1} = 0.
        let kk = BACKWARD_TERMS;
        let sup = Complex64::new(2.0 * c2 * h, 0.0);
        let diag = Complex64::new(d1, 0.0);
        let mut cp = vec![Complex64::new(0.0, 0.0); kk + 1];
        let mut dp = vec![Complex64::new(0.0, 0.0); kk + 1];
        for k in 0..=kk {
            let rhs = (ep - if k % 2 == 0 { em } else { -em }) / two_pi_i;
            let sub = Complex64::new(k as f64, 0.0) / (two_pi_i * h);
            let denom = if k == 0 { diag } else { diag - sub * cp[k - 1] };
            cp[k] = sup / denom;
            dp[k] = if k == 0 { rhs / denom } else { (rhs - sub * dp[k - 1]) / denom };
        }
        let mut j = vec![Complex64::new(0.0, 0.0); kk + 1];
        j[kk] = dp[kk];
        for k in (0..kk).rev() {
            j[k] = dp[k] - cp[k] * j[k + 1];
        }
        let val = q[0] * j[0] + q[1] * h * j[1] + q[2] * h * h * j[2];
        let ratio: f64 = (1..=kk).map(|k| k as f64 / (TAU * h * d1.abs())).product();
        let err = qscale * (2.0 * c2.abs() * h) * (len / (kk as f64 + 2.0)) / d1.abs() * ratio + 1e-15 * qscale / d1.abs();
        return (val, err);
    }
    // Stationary point t = hs near the piece: closed form through the Faddeeva function.
    let hs = -d1 / (2.0 * c2);
    let beta = Complex64::new(0.0, -TAU * c2).sqrt();
    let i = Complex64::new(0.0, 1.0);
    let term = |v: f64, ends: Complex64| -> Complex64 {
        let sg = if v >= 0.0 { 1.0 } else { -1.0 };
        sg * ends * (i * sg * beta * v).w()
    };
    let (v1, v2) = (-h - hs, h - hs);
    let s_diff = (if v2 >= 0.0 { 1.0 } else { -1.0 }) - (if v1 >= 0.0 { 1.0 } else { -1.0 });
    let erf_diff = e(-c2 * hs * hs) * s_diff - term(v2, ep) + term(v1, em);
    let i0 = PI.sqrt() / (2.0 * beta) * erf_diff;
    let e0 = (ep - em) / two_pi_i;
    let e1 = h * (ep + em) / two_pi_i;
    let i1 = (e0 - d1 * i0) / (2.0 * c2);
    let i2 = (e1 - i0 / two_pi_i - d1 * i1) / (2.0 * c2);
    let val = q[0] * i0 + q[1] * i1 + q[2] * i2;
    let r = hs.abs() + h;
    let err = 2e-15 * (q[0].abs() + q[1].abs() * r + q[2].abs() * r * r) * (PI.sqrt() / beta.norm() + (1.0 + r) / (PI * c2.abs()));
    (val, err)
}

/// `Int_a^b p(w) e(c2 w^2 + c1 w) dw` for a quadratic `p(w) = p[0] + p[1] w + p[2] w^2`.
///
/// Small phase variation uses Gauss-Legendre; a stationary point near the
/// interval uses the closed form through the Faddeeva function `w(z)`;
/// otherwise the moments are obtained from the integration-by-parts
/// recurrence solved backward.
pub fn fresnel_phase_integral(p: [f64; 3], c2: f64, c1: f64, a: f64, b: f64) -> Result<Complex64> {
    if !(a <= b) {
        return Err(ThetaError::DomainError(format!("interval [{a}, {b}] is empty")));
    }
    let piece = QuadPiece::around(a, b, 0.0, p);
    let d1 = c1 + 2.0 * c2 * piece.mid;
    let (v, err) = piece_integral(piece.q, piece.half, c2, d1);
    let out = v * e(c2 * piece.mid * piece.mid + c1 * piece.mid);
    check_accuracy(out, err, TOLERANCES.fresnel)
}

fn check_accuracy(v: Complex64, err: f64, tol: f64) -> Result<Complex64> {
    if !(v.re.is_finite() && v.im.is_finite()) || !(err <= tol) {
        return Err(ThetaError::AccuracyNotMet { estimate: err, requested: tol });
    }
    Ok(v)
}

/// Distance below which `phi` is treated as an exact multiple of `pi`.
const PHI_SNAP: f64 = 1e-13;

/// Splits `phi` into `(nu, r)` with `phi = nu pi + r`, `r` in `[0, pi)`; `None` for `r` when `phi`
/// is (within [`PHI_SNAP`]) a multiple of `pi`.
fn split_phi(phi: f64) -> (i64, Option<f64>) {
    let nu = (phi / PI).floor();
    let r = phi - nu * PI;
    if r <= PHI_SNAP {
        (nu as i64, None)
    } else if PI - r <= PHI_SNAP {
        (nu as i64 + 1, None)
    } else {
        (nu as i64, Some(r))
    }
}

/// `f_phi(w) = [R(k_phi) f](w)` including the phase `e(-sigma/8)`.
pub fn apply_kphi(f: &CutoffSpec, phi: f64, w: f64) -> Result<Complex64> {
    RotatedCutoff::new(f, phi)?.eval(w)
}

/// `f_phi` for one cutoff and one angle, with the angle-dependent setup done once.
#[derive(Clone, Debug)]
pub struct RotatedCutoff {
    kind: Rotated,
}

#[derive(Clone, Debug)]
enum Rotated {
    Snapped { phase: Complex64, sign: f64, f: CutoffSpec },
    Hermite { terms: Vec<(usize, Complex64)> },
    Pieces { pieces: Vec<QuadPiece>, sin: f64, cos: f64, pref: Complex64, scale: f64 },
}

impl RotatedCutoff {
    /// Prepares `f_phi`.
    pub fn new(f: &CutoffSpec, phi: f64) -> Result<Self> {
        if let Some(c) = f.exact_hermite_coeffs() {
            let terms = c
                .iter()
                .enumerate()
                .filter(|(_, ck)| **ck != 0.0)
                .map(|(k, ck)| (k, ck * Complex64::from_polar(1.0, -(2.0 * k as f64 + 1.0) * phi / 2.0)))
                .collect();
            return Ok(Self { kind: Rotated::Hermite { terms } });
        }
        let (nu, r) = split_phi(phi);
        if r.is_none() {
            let sign = if nu.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            return Ok(Self { kind: Rotated::Snapped { phase: e(-(nu as f64) / 4.0), sign, f: f.clone() } });
        }
        let pieces = f.pieces().ok_or_else(|| ThetaError::UnsupportedCutoff(format!("{f:?}")))?;
        let (sin, cos) = phi.sin_cos();
        let scale = sin.abs().powf(-0.5);
        Ok(Self { kind: Rotated::Pieces { pieces, sin, cos, pref: scale * e(-(2 * nu + 1) as f64 / 8.0), scale } })
    }

    /// `Some(+-1)` when `f_phi(w)` is a constant phase times `f(+-w)`.
    pub fn reflection(&self) -> Option<f64> {
        match self.kind {
            Rotated::Snapped { sign, .. } => Some(sign),
            _ => None,
        }
    }

    /// `f_phi(w)`.
    pub fn eval(&self, w: f64) -> Result<Complex64> {
        match &self.kind {
            Rotated::Snapped { phase, sign, f } => Ok(phase * f.eval(sign * w)),
            Rotated::Hermite { terms } => Ok(terms.iter().map(|(k, c)| c * hermite_psi(*k, w)).sum()),
            Rotated::Pieces { pieces, sin, cos, pref, scale } => {
                let c2 = cos / (2.0 * sin);
                let mut acc = Complex64::new(0.0, 0.0);
                let mut err = 0.0;
                for p in pieces {
                    let d1 = (p.mid * cos - w) / sin;
                    let psi_mid = ((w * w + p.mid * p.mid) * 0.5 * cos - w * p.mid) / sin;
                    let (v, er) = piece_integral(p.q, p.half, c2, d1);
                    acc += v * e(psi_mid);
                    err += er;
                }
                check_accuracy(pref * acc, scale * err, 1e-8)
            }
        }
    }
}

/// Reference path for `f_phi(w)`: composite Gauss-Legendre on panels holding at most one
/// oscillation of the kernel. Intended for cross-checks.
pub fn apply_kphi_quadrature(f: &CutoffSpec, phi: f64, w: f64) -> Result<Complex64> {
    let (nu, r) = split_phi(phi);
    if r.is_none() {
        let sgn = if nu.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        return Ok(e(-(nu as f64) / 4.0) * f.eval(sgn * w));
    }
    let (s, c) = phi.sin_cos();
    let c2 = c / (2.0 * s);
    let c1 = -w / s;
    let intervals: Vec<(f64, f64)> = match f.pieces() {
        Some(p) => p.iter().map(|p| (p.mid - p.half, p.mid + p.half)).collect(),
        None => vec![(-9.0, 9.0)],
    };
    let rule = legendre_rule(20);
    let mut acc = Complex64::new(0.0, 0.0);
    for (lo, hi) in intervals {
        let dmax = (2.0 * c2 * lo + c1).abs().max((2.0 * c2 * hi + c1).abs());
        let panels = ((dmax * (hi - lo)).ceil() as usize + 1).max(4);
        let step = (hi - lo) / panels as f64;
        for k in 0..panels {
            let (a, b) = (lo + k as f64 * step, lo + (k + 1) as f64 * step);
            let (m, hh) = (0.5 * (a + b), 0.5 * (b - a));
            for &(x, wg) in rule {
                let t = m + hh * x;
                acc += wg * hh * f.eval(t) * e(c2 * t * t + c1 * t);
            }
        }
    }
    let pref = s.abs().powf(-0.5) * e(-(2 * nu + 1) as f64 / 8.0) * e(0.5 * w * w * c / s);
    Ok(pref * acc)
}

/// Closed-form Fourier transform `Int T(w') e(-sign w w') dw'` of a trapezoid.
///
/// This is `f_phi(w)` at `phi = +-pi/2` without the phase `e(-sigma/8)`.
pub fn trapezoid_fourier(t: &CutoffSpec, w: f64, sign: i32) -> Result<Complex64> {
    let (a, b, eps, del) = t
        .trapezoid_params()
        .ok_or_else(|| ThetaError::UnsupportedCutoff(format!("{t:?} is not a trapezoid")))?;
    let w = if sign < 0 { -w } else { w };
    let span = (a - eps).abs().max((b + del).abs()).max(b + del - (a - eps));
    if w.abs() * span < 0.05 {
        // Small frequencies: the closed form cancels, integrate the pieces instead.
        let mut acc = Complex64::new(0.0, 0.0);
        for p in t.pieces().unwrap() {
            acc += e(-w * p.mid) * piece_integral(p.q, p.half, 0.0, -w).0;
        }
        return Ok(acc);
    }
    let one = Complex64::new(1.0, 0.0);
    let brk = |x: f64| {
        let d = one - e(x);
        d * d
    };
    let pre = Complex64::new(0.0, 1.0) / (2.0 * PI.powi(3) * w.powi(3) * eps * eps * del * del);
    Ok(pre * (del * del * e(-a * w) * brk(w * eps / 2.0) - eps * eps * e(-w * (b + del)) * brk(w * del / 2.0)))
}

/// A numerical lower bound for `kappa_eta(f) = sup_{w, phi} |f_phi(w)| (1 + |w|)^eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaEstimate {
    pub eta: f64,
    pub value: f64,
    pub grid_spec: String,
}

/// Constant `C` in `kappa_2(T) <= C (1/eps + 1/del)` for trapezoids with `eps, del <= 1`,
/// chosen from grid estimates over a range of trapezoids.
pub const TRAPEZOID_KAPPA2_CONSTANT: f64 = 1.0;

const KAPPA_W_NODES: usize = 240;
const KAPPA_PHI_NODES: usize = 256;

/// Grid supremum of `|f_phi(w)| (1 + |w|)^eta` over `|w| <= 50` (log-spaced, both signs, and 0)
/// and `phi = k pi / 256`, `k = 0..255`. This is a lower bound on the true supremum.
pub fn kappa_eta_bound(f: &CutoffSpec, eta: f64) -> Result<KappaEstimate> {
    if !(eta >= 0.0) {
        return Err(ThetaError::DomainError(format!("eta = {eta} must be nonnegative")));
    }
    if matches!(f, CutoffSpec::IndicatorUnit) && eta > 1.0 {
        return Err(ThetaError::UnsupportedCutoff("the unit indicator only decays like 1/|w|".into()));
    }
    let mut ws = vec![0.0];
    for k in 0..KAPPA_W_NODES {
        let w = 1e-3 * (50.0f64 / 1e-3).powf(k as f64 / (KAPPA_W_NODES - 1) as f64);
        ws.push(w);
        ws.push(-w);
    }
    let mut best = 0.0f64;
    for k in 0..KAPPA_PHI_NODES {
        let phi = PI * k as f64 / KAPPA_PHI_NODES as f64;
        for &w in &ws {
            let v = apply_kphi(f, phi, w)?.norm() * (1.0 + w.abs()).powf(eta);
            best = best.max(v);
        }
    }
    Ok(KappaEstimate {
        eta,
        value: best,
        grid_spec: format!(
            "|w| <= 50: 0 and +-{KAPPA_W_NODES} log-spaced nodes from 1e-3; phi = k pi/{KAPPA_PHI_NODES}, k < {KAPPA_PHI_NODES}; grid supremum (lower bound)"
        ),
    })
}

/// Cached `kappa_3` grid estimates of `Delta` and `Delta_-`, used by truncation bounds.
pub fn kappa3_triangles() -> (f64, f64) {
    static K: OnceLock<(f64, f64)> = OnceLock::new();
    *K.get_or_init(|| {
        let a = kappa_eta_bound(&CutoffSpec::Triangle, 3.0).map(|k| k.value).unwrap_or(f64::INFINITY);
        let b = kappa_eta_bound(&CutoffSpec::TriangleMinus, 3.0).map(|k| k.value).unwrap_or(f64::INFINITY);
        (a, b)
    })
}

/// `kappa_3` grid estimate of a piecewise-quadratic cutoff, cached per parameter set.
pub fn kappa3_cached(f: &CutoffSpec) -> Result<f64> {
    use std::collections::HashMap;
    use std::sync::Mutex;
    match f {
        CutoffSpec::Triangle => return Ok(kappa3_triangles().0),
        CutoffSpec::TriangleMinus => return Ok(kappa3_triangles().1),
        _ => {}
    }
    let (a, b, eps, del) = f
        .trapezoid_params()
        .ok_or_else(|| ThetaError::UnsupportedCutoff(format!("{f:?} has no polynomial decay constant")))?;
    static CACHE: OnceLock<Mutex<HashMap<[u64; 4], f64>>> = OnceLock::new();
    let key = [a.to_bits(), b.to_bits(), eps.to_bits(), del.to_bits()];
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return Ok(*v);
    }
    let v = kappa_eta_bound(f, 3.0)?.value;
    cache.lock().unwrap().insert(key, v);
    Ok(v)
}
