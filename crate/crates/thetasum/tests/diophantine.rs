use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thetasum::diophantine::*;
use thetasum::group::{cusp_height, Sl2Matrix, UpperHalfPoint};
use thetasum::ThetaError;

/// Euclid on an exact fraction.
fn euclid(mut num: i128, mut den: i128) -> Vec<i128> {
    let mut out = Vec::new();
    while den != 0 {
        out.push(num.div_euclid(den));
        (num, den) = (den, num.rem_euclid(den));
    }
    out
}

/// Minimum of q^kappa |q x - p| over the convergents p/q of x with q <= q_max.
fn convergent_minimum(x: f64, kappa: f64, q_max: i128) -> f64 {
    let scale = 1i128 << 60;
    let xi = (x * scale as f64) as i128;
    let quotients = euclid(xi, scale);
    let (mut p0, mut q0, mut p1, mut q1) = (1i128, 0i128, quotients[0], 1i128);
    let mut best = f64::INFINITY;
    for &a in &quotients[1..] {
        (p0, q0, p1, q1) = (p1, q1, a * p1 + p0, a * q1 + q0);
        if q1 > q_max {
            break;
        }
        let _ = (p0, q0);
        best = best.min((q1 as f64).powf(kappa) * (q1 as f64 * x - p1 as f64).abs());
    }
    best.min(x.rem_euclid(1.0).min(1.0 - x.rem_euclid(1.0)))
}

#[test]
fn classical_expansions() {
    let cf = continued_fraction(2f64.sqrt(), 20).unwrap();
    assert_eq!(cf.a0, 1);
    assert!(cf.partial_quotients.iter().all(|&a| a == 2));
    let cf = continued_fraction((1.0 + 5f64.sqrt()) / 2.0, 30).unwrap();
    assert_eq!(cf.a0, 1);
    assert!(cf.partial_quotients.iter().all(|&a| a == 1));
    let cf = continued_fraction(std::f64::consts::PI, 5).unwrap();
    assert_eq!(&cf.partial_quotients[..4], &[7, 15, 1, 292]);
    assert!(cf.convergents.contains(&(355, 113)));
    let cf = continued_fraction(-0.75, 10).unwrap();
    assert_eq!((cf.a0, cf.partial_quotients.clone()), (-1, vec![4]));
    assert!(matches!(continued_fraction(0.1 * 2f64.sqrt(), 64), Err(ThetaError::PrecisionExhausted(_))));
    assert!(continued_fraction(1.0, 65).is_err());
}

#[test]
fn convergent_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let x: f64 = rng.random_range(-10.0..10.0);
        let cf = match continued_fraction(x, 64) {
            Ok(cf) => cf,
            Err(ThetaError::PrecisionExhausted(_)) => continue_with_fewer(x),
            Err(e) => panic!("{e}"),
        };
        let q = &cf.convergents;
        for k in 0..q.len() {
            let (p, qq) = q[k];
            if k > 0 {
                assert!(qq > q[k - 1].1 || (k == 1 && qq == 1));
                let (pp, qp) = q[k - 1];
                assert_eq!((p * qp - pp * qq).abs(), 1);
            }
            let err = (x - p as f64 / qq as f64).abs();
            if k + 1 < q.len() {
                assert!(err <= 1.0 / (qq as f64 * q[k + 1].1 as f64) * (1.0 + 1e-9) + 1e-16 * x.abs());
            }
        }
        // the quotients agree with an independent Euclid on the same double
        let ex = euclid((x * 2f64.powi(60)) as i128, 1 << 60);
        let m = cf.partial_quotients.len().min(8);
        assert_eq!(ex[0] as i64, cf.a0);
        for i in 0..m.saturating_sub(1) {
            assert_eq!(ex[i + 1] as u64, cf.partial_quotients[i]);
        }
    }
}

fn continue_with_fewer(x: f64) -> ContinuedFraction {
    (1..64).rev().find_map(|t| continued_fraction(x, t).ok()).unwrap()
}

#[test]
fn diophantine_constants() {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let d = diophantine_type(phi, 1.0, 10_000).unwrap();
    assert!((d.a_tail - 1.0 / 5f64.sqrt()).abs() < 0.01 / 5f64.sqrt(), "{d:?}");
    assert!((d.a_lower - convergent_minimum(phi, 1.0, 10_000)).abs() < 1e-12);
    let r2 = 2f64.sqrt();
    let d = diophantine_type(r2, 1.0, 10_000).unwrap();
    assert!((d.a_tail - 1.0 / (2.0 * r2)).abs() < 0.01 / (2.0 * r2), "{d:?}");
    assert!((d.a_lower - convergent_minimum(r2, 1.0, 10_000)).abs() < 1e-12);
    for kappa in [1.0, 1.3, 2.0] {
        let d = diophantine_type(1.0 / 3.0, kappa, 100).unwrap();
        assert_eq!((d.a_lower, d.q_at_min), (0.0, 3));
    }
    assert!(diophantine_type(r2, 0.5, 10).is_err());
}

#[test]
fn diophantine_monotone_and_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..20 {
        let x: f64 = rng.random_range(0.0..1.0);
        let kappa = rng.random_range(1.0..2.0);
        let mut last = f64::INFINITY;
        for q in [10, 100, 1000, 10_000] {
            let d = diophantine_type(x, kappa, q).unwrap();
            assert!(d.a_lower <= last);
            assert!((d.a_lower - convergent_minimum(x, kappa, q as i128)).abs() < 1e-9 * d.a_lower.max(1e-3));
            last = d.a_lower;
        }
    }
    // badly approximable numbers stay badly approximable under x -> -1/x
    for d in [2u32, 3, 5, 6, 7, 10, 11] {
        let x = (d as f64).sqrt().fract();
        let a = diophantine_type(x, 1.0, 10_000).unwrap().a_lower;
        let b = diophantine_type(-1.0 / x, 1.0, 10_000).unwrap().a_lower;
        assert!(a > 0.05 && b > 0.05);
        assert!(a / b < 4.0 * x.recip().ceil() && b / a < 4.0 * x.recip().ceil(), "d={d} {a} {b}");
    }
}

#[test]
fn z_su_formula() {
    assert_eq!(z_su(0.3, 0.0, 2.0).unwrap(), UpperHalfPoint::new(0.3, (-2f64).exp()).unwrap());
    let z = z_su(0.2, 1.0, 0.0).unwrap();
    assert!((z.x - 0.7).abs() < 1e-15 && (z.y - 0.5).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..200 {
        let (x, u, s): (f64, f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-5.0..5.0));
        let m = Sl2Matrix::new(1.0, x, 0.0, 1.0)
            .unwrap()
            .mul(&Sl2Matrix::new(1.0, 0.0, u, 1.0).unwrap())
            .mul(&Sl2Matrix::new((-s / 2.0).exp(), 0.0, 0.0, (s / 2.0).exp()).unwrap());
        let (num, den) = (num_complex::Complex64::new(m.b, m.a), num_complex::Complex64::new(m.d, m.c));
        let w = num / den;
        let z = z_su(x, u, s).unwrap();
        assert!((z.x - w.re).abs() < 1e-12 && (z.y - w.im).abs() < 1e-12 * w.im.max(1.0));
    }
}

#[test]
fn excursion_bounds_hold() {
    assert_eq!(w_factor(0.0), 1.0);
    assert!((w_factor(2.0) - (1.0 + 0.5 * (4.0 + 2.0 * 8f64.sqrt()))).abs() < 1e-15);
    assert!(excursion_bound(0.0, 0.0, 0.5, 1.0, 1.0).is_err());
    // kappa = 1: the bound is A^-2 W(u), constant in s
    let b = excursion_bound(0.0, 0.7, 0.5, 1.0, 10.0).unwrap();
    assert!((b - 4.0 * w_factor(0.7)).abs() < 1e-14);
    assert_eq!(b, excursion_bound(0.0, 0.7, 0.5, 1.0, 3.0).unwrap());
    // x + 1/u = sqrt 5 with x = 0
    let u = 1.0 / 5f64.sqrt();
    for kappa in [1.0, 1.5, 2.0] {
        let a = diophantine_type(5f64.sqrt(), kappa, 1_000_000).unwrap().a_lower.min(1.0);
        for i in 0..=400 {
            let s = 20.0 * i as f64 / 400.0;
            let h = cusp_height(z_su(0.0, u, -s).unwrap()).unwrap();
            let bound = excursion_bound(0.0, u, a, kappa, s).unwrap();
            assert!(h <= bound, "kappa={kappa} s={s}: {h} > {bound}");
        }
    }
    // a shifted base point with |u| > 1
    let (x, u) = (2f64.sqrt() - 0.5, 2.0);
    let a = diophantine_type(x + 0.5, 1.0, 1_000_000).unwrap().a_lower;
    for i in 0..=200 {
        let s = 0.1 * i as f64;
        let h = cusp_height(z_su(x, u, -s).unwrap()).unwrap();
        assert!(h <= excursion_bound(x, u, a, 1.0, s).unwrap());
    }
}
