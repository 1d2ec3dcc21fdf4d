//! Coordinates and arithmetic on the universal Jacobi group.
//!
//! An element is written `(z, phi; xi, zeta)` with `z = x + iy` in the upper
//! half plane, an unbounded angle `phi` on the universal cover of `SL(2,R)`,
//! and Heisenberg coordinates `xi = (xi1, xi2)`, `zeta`. The `SL(2,R)` part
//! is `n_x a_y k_phi` with
//!
//! ```text
//! n_x = [[1, x], [0, 1]],  a_y = [[y^(1/2), 0], [0, y^(-1/2)]],
//! k_phi = [[cos phi, -sin phi], [sin phi, cos phi]].
//! ```
//!
//! The geodesic flow is right multiplication by `Phi^s = (i e^{-s}, 0; 0, 0)`.

use crate::error::{Result, ThetaError};
use crate::phase::TOLERANCES;
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// A point `x + iy` of the upper half plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperHalfPoint {
    pub x: f64,
    pub y: f64,
}

impl UpperHalfPoint {
    /// Builds a point, rejecting `y <= 0` and non-finite input.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || y <= 0.0 {
            return Err(ThetaError::RangeError(format!("({x}, {y}) is not in the upper half plane")));
        }
        Ok(Self { x, y })
    }

    /// The point `i`.
    pub const I: UpperHalfPoint = UpperHalfPoint { x: 0.0, y: 1.0 };

    /// `|z|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }
}

/// A real 2x2 matrix, expected to have determinant one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sl2Matrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Sl2Matrix {
    /// The identity.
    pub const IDENTITY: Sl2Matrix = Sl2Matrix { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    /// Builds a matrix after checking the determinant.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Self { a, b, c, d };
        m.check()?;
        Ok(m)
    }

    /// `ad - bc`.
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    fn check(&self) -> Result<()> {
        let det = self.det();
        if !det.is_finite() || (det - 1.0).abs() > TOLERANCES.determinant {
            return Err(ThetaError::DegenerateMatrix(det));
        }
        Ok(())
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, o: &Sl2Matrix) -> Sl2Matrix {
        Sl2Matrix {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Applies the matrix to a column vector.
    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (self.a * v.0 + self.b * v.1, self.c * v.0 + self.d * v.1)
    }

    /// The rotation `k_phi`.
    pub fn rotation(phi: f64) -> Sl2Matrix {
        let (s, c) = phi.sin_cos();
        Sl2Matrix { a: c, b: -s, c: s, d: c }
    }

    /// `n_x a_y k_phi`.
    pub fn from_iwasawa(z: UpperHalfPoint, phi: f64) -> Sl2Matrix {
        let (s, c) = phi.sin_cos();
        let r = z.y.sqrt();
        Sl2Matrix { a: r * c + z.x * s / r, b: -r * s + z.x * c / r, c: s / r, d: c / r }
    }
}

/// An element of `SL(2,Z)` kept in exact integer form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModularMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl ModularMatrix {
    /// The identity.
    pub const IDENTITY: ModularMatrix = ModularMatrix { a: 1, b: 0, c: 0, d: 1 };

    /// `ad - bc` evaluated exactly.
    pub fn det(&self) -> i128 {
        self.a as i128 * self.d as i128 - self.b as i128 * self.c as i128
    }

    /// Conversion to floating point.
    pub fn to_sl2(&self) -> Sl2Matrix {
        Sl2Matrix { a: self.a as f64, b: self.b as f64, c: self.c as f64, d: self.d as f64 }
    }

    /// Möbius action on a point of the upper half plane.
    pub fn act(&self, z: UpperHalfPoint) -> UpperHalfPoint {
        let (a, b, c, d) = (self.a as f64, self.b as f64, self.c as f64, self.d as f64);
        let den = (c * z.x + d).powi(2) + (c * z.y).powi(2);
        let x = ((a * z.x + b) * (c * z.x + d) + a * c * z.y * z.y) / den;
        UpperHalfPoint { x, y: z.y / den }
    }

    fn left_mul(&self, l: &ModularMatrix) -> Result<ModularMatrix> {
        let f = |p: i64, q: i64, r: i64, s: i64| -> Result<i64> {
            let v = p as i128 * q as i128 + r as i128 * s as i128;
            i64::try_from(v).map_err(|_| ThetaError::NonConvergence("modular matrix entries overflow i64".into()))
        };
        Ok(ModularMatrix {
            a: f(l.a, self.a, l.b, self.c)?,
            b: f(l.a, self.b, l.b, self.d)?,
            c: f(l.c, self.a, l.d, self.c)?,
            d: f(l.c, self.b, l.d, self.d)?,
        })
    }
}

/// An element `(z, phi; xi1, xi2, zeta)` of the universal Jacobi group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement {
    pub z: UpperHalfPoint,
    pub phi: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub zeta: f64,
}

impl GroupElement {
    /// Builds an element from raw coordinates.
    pub fn new(x: f64, y: f64, phi: f64, xi1: f64, xi2: f64, zeta: f64) -> Result<Self> {
        let z = UpperHalfPoint::new(x, y)?;
        if !(phi.is_finite() && xi1.is_finite() && xi2.is_finite() && zeta.is_finite()) {
            return Err(ThetaError::RangeError("non-finite group coordinate".into()));
        }
        Ok(Self { z, phi, xi1, xi2, zeta })
    }

    /// The identity `(i, 0; 0, 0)`.
    pub const IDENTITY: GroupElement =
        GroupElement { z: UpperHalfPoint::I, phi: 0.0, xi1: 0.0, xi2: 0.0, zeta: 0.0 };

    /// `Phi^s = (i e^{-s}, 0; 0, 0)`.
    pub fn flow(s: f64) -> GroupElement {
        GroupElement { z: UpperHalfPoint { x: 0.0, y: (-s).exp() }, ..Self::IDENTITY }
    }

    /// `n_+(x, alpha) = (x + i, 0; (alpha, 0), 0)`.
    pub fn n_plus(x: f64, alpha: f64) -> GroupElement {
        GroupElement { z: UpperHalfPoint { x, y: 1.0 }, phi: 0.0, xi1: alpha, xi2: 0.0, zeta: 0.0 }
    }

    /// `n_-(u, beta) = ((u + i)/(1 + u^2), arctan u; (0, beta), 0)`.
    pub fn n_minus(u: f64, beta: f64) -> GroupElement {
        let den = 1.0 + u * u;
        GroupElement { z: UpperHalfPoint { x: u / den, y: 1.0 / den }, phi: u.atan(), xi1: 0.0, xi2: beta, zeta: 0.0 }
    }

    /// The pure Heisenberg element `(1; xi, zeta)`.
    pub fn heisenberg(xi1: f64, xi2: f64, zeta: f64) -> GroupElement {
        GroupElement { xi1, xi2, zeta, ..Self::IDENTITY }
    }

    /// The `SL(2,R)` matrix `n_x a_y k_phi`.
    pub fn matrix(&self) -> Sl2Matrix {
        Sl2Matrix::from_iwasawa(self.z, self.phi)
    }

    /// The group inverse.
    pub fn inverse(&self) -> Result<GroupElement> {
        let m = self.matrix();
        let inv = Sl2Matrix { a: m.d, b: -m.b, c: -m.c, d: m.a };
        let (z, phi0) = iwasawa_unchecked(&inv);
        let (x1, x2) = inv.apply((self.xi1, self.xi2));
        let mut h = GroupElement { z, phi: phi0, xi1: -x1, xi2: -x2, zeta: -self.zeta };
        let p = jacobi_multiply(self, &h)?;
        h.phi -= TAU * (p.phi / TAU).round();
        Ok(h)
    }
}

/// The symplectic form `omega(a, b) = a1 b2 - a2 b1`.
#[inline]
pub fn omega(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

/// Product `g h` in the universal Jacobi group.
///
/// The angle of the product is `phi + phi' + Arg((z' sin phi + cos phi) e^{-i phi})`
/// with the principal argument, which is the continuous lift of the cocycle.
pub fn jacobi_multiply(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    let (s, c) = g.phi.sin_cos();
    let (u, v) = (h.z.x, h.z.y);
    // den = z' sin(phi) + cos(phi); k_phi(z') = (z' cos - sin) / den
    let (dr, di) = (u * s + c, v * s);
    let den2 = dr * dr + di * di;
    let (nr, ni) = (u * c - s, v * c);
    let kre = (nr * dr + ni * di) / den2;
    let kim = v / den2;
    let x = g.z.x + g.z.y * kre;
    let y = g.z.y * kim;
    // (den) * e^{-i phi}
    let (pr, pi) = (dr * c + di * s, di * c - dr * s);
    let phi = g.phi + h.phi + pi.atan2(pr);
    let m = g.matrix();
    let mxi = m.apply((h.xi1, h.xi2));
    let xi1 = g.xi1 + mxi.0;
    let xi2 = g.xi2 + mxi.1;
    let zeta = g.zeta + h.zeta + 0.5 * omega((g.xi1, g.xi2), mxi);
    if !(x.is_finite() && y.is_finite() && y > 0.0 && phi.is_finite() && xi1.is_finite() && xi2.is_finite() && zeta.is_finite()) {
        return Err(ThetaError::RangeError(format!("product left the representable range (y = {y})")));
    }
    Ok(GroupElement { z: UpperHalfPoint { x, y }, phi, xi1, xi2, zeta })
}

/// `g Phi^s` in closed form.
///
/// Uses `y_s = y / (cos^2(phi) e^s + sin^2(phi) e^{-s})`,
/// `x_s = x - y sin(2 phi) sinh(s) / (cos^2(phi) e^s + sin^2(phi) e^{-s})`, and an
/// angle `phi_s` with `tan(phi_s) = tan(phi) e^{-s}` in the same quarter turn as
/// `phi`. The Heisenberg coordinates are unchanged.
pub fn geodesic_flow(g: &GroupElement, s: f64) -> GroupElement {
    let GroupElement { z, phi, .. } = *g;
    let q = phi / FRAC_PI_2;
    let qr = q.round();
    if (q - qr).abs() <= 4.0 * f64::EPSILON * q.abs().max(1.0) {
        // Exact multiples of pi/2 are dispatched to the limit formulas.
        let y = if (qr as i64).rem_euclid(2) == 0 { z.y * (-s).exp() } else { z.y * s.exp() };
        return GroupElement { z: UpperHalfPoint { x: z.x, y }, ..*g };
    }
    let (sn, cs) = phi.sin_cos();
    let (ep, em) = (s.exp(), (-s).exp());
    let den = cs * cs * ep + sn * sn * em;
    let y = z.y / den;
    let x = z.x - z.y * 2.0 * sn * cs * s.sinh() / den;
    // Branch: phi in [(2k-1) pi, (2k+1) pi); eps1 = -1 on the lower half, +1 on the upper.
    let k = ((phi + PI) / TAU).floor();
    let base = 2.0 * k * PI;
    let eps1 = if phi - base < 0.0 { -1.0 } else { 1.0 };
    // arccos(cos(phi) e^s / sqrt(sin^2 + cos^2 e^{2s})) evaluated as an atan2 for stability
    let theta = sn.abs().atan2(cs * s.exp());
    let phi_s = base + eps1 * theta;
    GroupElement { z: UpperHalfPoint { x, y }, phi: phi_s, ..*g }
}

fn iwasawa_unchecked(m: &Sl2Matrix) -> (UpperHalfPoint, f64) {
    let n = m.c * m.c + m.d * m.d;
    let z = UpperHalfPoint { x: (m.a * m.c + m.b * m.d) / n, y: 1.0 / n };
    (z, m.c.atan2(m.d))
}

/// Iwasawa decomposition `M = n_x a_y k_phi0` with `phi0 = arg(ci + d)` in `(-pi, pi]`.
pub fn iwasawa(m: &Sl2Matrix) -> Result<(UpperHalfPoint, f64)> {
    m.check()?;
    let (z, phi0) = iwasawa_unchecked(m);
    let phi0 = if phi0 == -PI { PI } else { phi0 };
    Ok((z, phi0))
}

const MAX_REDUCTION_STEPS: usize = 10_000;

/// Gauss reduction of `z` into the standard fundamental domain of `SL(2,Z)`.
///
/// Returns `(z*, M)` with `M z = z*`, `|Re z*| <= 1/2` and `|z*| >= 1`.
pub fn reduce_to_fundamental(z: UpperHalfPoint) -> Result<(UpperHalfPoint, ModularMatrix)> {
    let mut w = z;
    let mut m = ModularMatrix::IDENTITY;
    for _ in 0..MAX_REDUCTION_STEPS {
        let k = w.x.round();
        if k != 0.0 {
            if k.abs() > 9.0e15 {
                return Err(ThetaError::NonConvergence("translation too large".into()));
            }
            w.x -= k;
            m = m.left_mul(&ModularMatrix { a: 1, b: -(k as i64), c: 0, d: 1 })?;
        }
        let r = w.norm_sqr();
        if r < 1.0 {
            w = UpperHalfPoint { x: -w.x / r, y: w.y / r };
            m = m.left_mul(&ModularMatrix { a: 0, b: -1, c: 1, d: 0 })?;
        } else {
            return Ok((w, m));
        }
    }
    Err(ThetaError::NonConvergence(format!("reduction of {z:?} did not finish in {MAX_REDUCTION_STEPS} steps")))
}

/// `Im` of the reduced representative, the largest height over the `SL(2,Z)` orbit.
pub fn cusp_height(z: UpperHalfPoint) -> Result<f64> {
    Ok(reduce_to_fundamental(z)?.0.y)
}

/// Left multiplication by `gamma_2^k = (k + i, 0; (k/2, 0), 0)`.
fn left_translate(g: &mut GroupElement, k: f64) {
    g.zeta += 0.25 * k * g.xi2;
    g.xi1 += 0.5 * k + k * g.xi2;
    g.z.x += k;
}

/// Left multiplication by `gamma_1 = (i, pi/2; 0, 1/8)`.
fn left_invert(g: &mut GroupElement) {
    let r = g.z.norm_sqr();
    g.phi += g.z.y.atan2(g.z.x);
    g.z = UpperHalfPoint { x: -g.z.x / r, y: g.z.y / r };
    let (a, b) = (g.xi1, g.xi2);
    g.xi1 = -b;
    g.xi2 = a;
    g.zeta += 0.125;
}

/// Moves `g` into the fundamental domain of `Gamma` by left multiplication
/// with generators: `z` into the modular domain, `phi` into `[0, pi)`,
/// `xi` into `[-1/2, 1/2)^2` and `zeta` into `[-1/2, 1/2)`.
pub fn reduce_to_gamma_domain(g: &GroupElement) -> Result<GroupElement> {
    let mut h = *g;
    let mut done = false;
    for _ in 0..MAX_REDUCTION_STEPS {
        let k = -h.z.x.round();
        if k != 0.0 {
            left_translate(&mut h, k);
        }
        if h.z.norm_sqr() < 1.0 {
            left_invert(&mut h);
        } else {
            done = true;
            break;
        }
    }
    if !done {
        return Err(ThetaError::NonConvergence("group reduction did not finish".into()));
    }
    // gamma_1^{2k} = (i, k pi; 0, k/4)
    let rotate = |h: &mut GroupElement, k: f64| {
        h.phi += k * PI;
        if (k as i64).rem_euclid(2) == 1 {
            h.xi1 = -h.xi1;
            h.xi2 = -h.xi2;
        }
        h.zeta += 0.25 * k;
    };
    let k = -(h.phi / PI).floor();
    if k != 0.0 {
        rotate(&mut h, k);
    }
    if h.phi >= PI {
        rotate(&mut h, -1.0);
    } else if h.phi < 0.0 {
        rotate(&mut h, 1.0);
    }
    // gamma_3^a gamma_4^b = (i, 0; (a, b), ab/2)
    let a = -(h.xi1 + 0.5).floor();
    let b = -(h.xi2 + 0.5).floor();
    h.zeta += 0.5 * a * b + 0.5 * (a * h.xi2 - b * h.xi1);
    h.xi1 += a;
    h.xi2 += b;
    h.zeta -= (h.zeta + 0.5).floor();
    Ok(h)
}

/// The generators `gamma_1, ..., gamma_5` of the invariance group.
pub fn gamma_generator(i: usize) -> Result<GroupElement> {
    let id = GroupElement::IDENTITY;
    match i {
        1 => Ok(GroupElement { phi: FRAC_PI_2, zeta: 0.125, ..id }),
        2 => Ok(GroupElement { z: UpperHalfPoint { x: 1.0, y: 1.0 }, xi1: 0.5, ..id }),
        3 => Ok(GroupElement { xi1: 1.0, ..id }),
        4 => Ok(GroupElement { xi2: 1.0, ..id }),
        5 => Ok(GroupElement { zeta: 1.0, ..id }),
        _ => Err(ThetaError::OutOfRange(format!("generator index {i} not in 1..=5"))),
    }
}

/// Draws one element of the fundamental domain of `Gamma` from normalized Haar measure.
pub fn haar_sample<R: Rng + ?Sized>(rng: &mut R) -> GroupElement {
    haar_sample_counted(rng).0
}

/// As [`haar_sample`], also returning the number of proposals used by the rejection step.
pub fn haar_sample_counted<R: Rng + ?Sized>(rng: &mut R) -> (GroupElement, u64) {
    let y0 = 3f64.sqrt() / 2.0;
    let mut trials = 0;
    let (x, y) = loop {
        trials += 1;
        let x = rng.random::<f64>() - 0.5;
        let u = 1.0 - rng.random::<f64>();
        let y = y0 / u;
        if x * x + y * y >= 1.0 {
            break (x, y);
        }
    };
    let phi = PI * rng.random::<f64>();
    let xi1 = rng.random::<f64>() - 0.5;
    let xi2 = rng.random::<f64>() - 0.5;
    let zeta = rng.random::<f64>() - 0.5;
    (GroupElement { z: UpperHalfPoint { x, y }, phi, xi1, xi2, zeta }, trials)
}

/// Parameters produced by the renormalization identity for `gamma_1 n_+ n_- Phi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AfeCoordinates {
    pub x: f64,
    pub alpha: f64,
    pub u: f64,
    pub beta: f64,
    pub n: f64,
    /// The extra Heisenberg centre coordinate `1/8 - alpha^2/(2x)`.
    pub zeta: f64,
    /// `e(zeta)`.
    pub phase: num_complex::Complex64,
}

/// Maps `(x, alpha, u, beta, N)` to `(-1/x, alpha/x, x(1+ux), alpha+beta x, Nx)` together with
/// the phase `e(1/8 - alpha^2/(2x))`.
pub fn afe_coordinates(x: f64, alpha: f64, u: f64, beta: f64, n: f64) -> Result<AfeCoordinates> {
    if !(x > 0.0) {
        return Err(ThetaError::DomainError(format!("x = {x} must be positive")));
    }
    if !(n > 0.0) {
        return Err(ThetaError::DomainError(format!("N = {n} must be positive")));
    }
    let zeta = 0.125 - alpha * alpha / (2.0 * x);
    Ok(AfeCoordinates {
        x: -1.0 / x,
        alpha: alpha / x,
        u: x * (1.0 + u * x),
        beta: alpha + beta * x,
        n: n * x,
        zeta,
        phase: crate::phase::e(zeta),
    })
}
