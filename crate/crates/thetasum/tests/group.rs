use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use thetasum::group::*;

fn rand_elem(rng: &mut ChaCha8Rng) -> GroupElement {
    GroupElement::new(
        rng.random_range(-2.0..2.0),
        rng.random_range(0.1..3.0),
        rng.random_range(-7.0..7.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )
    .unwrap()
}

fn mat(g: &GroupElement) -> [f64; 4] {
    let (s, c) = g.phi.sin_cos();
    let r = g.z.y.sqrt();
    [r * c + g.z.x * s / r, -r * s + g.z.x * c / r, s / r, c / r]
}

fn mmul(p: [f64; 4], q: [f64; 4]) -> [f64; 4] {
    [p[0] * q[0] + p[1] * q[2], p[0] * q[1] + p[1] * q[3], p[2] * q[0] + p[3] * q[2], p[2] * q[1] + p[3] * q[3]]
}

/// Angle of the Iwasawa rotation factor, modulo 2 pi.
fn angle(m: [f64; 4]) -> f64 {
    m[2].atan2(m[3])
}

/// Lifted product angle obtained by unwrapping along the path t -> h_t from the identity to h.
fn lifted_angle(g: &GroupElement, h: &GroupElement) -> f64 {
    let steps = 4000;
    let mg = mat(g);
    let mut prev = g.phi;
    for k in 1..=steps {
        let t = k as f64 / steps as f64;
        let ht = GroupElement::new(h.z.x * t, 1.0 + (h.z.y - 1.0) * t, h.phi * t, 0.0, 0.0, 0.0).unwrap();
        let a = angle(mmul(mg, mat(&ht)));
        prev = a + TAU * ((prev - a) / TAU).round();
    }
    prev
}

fn close(a: &GroupElement, b: &GroupElement, tol: f64) -> bool {
    let d = [a.z.x - b.z.x, (a.z.y - b.z.y) / b.z.y, a.phi - b.phi, a.xi1 - b.xi1, a.xi2 - b.xi2, a.zeta - b.zeta];
    d.iter().all(|v| v.abs() <= tol)
}

#[test]
fn multiply_matches_matrix_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let g = rand_elem(&mut rng);
        let h = rand_elem(&mut rng);
        let p = jacobi_multiply(&g, &h).unwrap();
        let m = mmul(mat(&g), mat(&h));
        let n = m[2] * m[2] + m[3] * m[3];
        assert!((p.z.x - (m[0] * m[2] + m[1] * m[3]) / n).abs() < 1e-12);
        assert!((p.z.y - 1.0 / n).abs() < 1e-12 * p.z.y.max(1.0));
        assert!((p.phi - lifted_angle(&g, &h)).abs() < 1e-9);
        let mh = mat(&g);
        let v = (mh[0] * h.xi1 + mh[1] * h.xi2, mh[2] * h.xi1 + mh[3] * h.xi2);
        assert!((p.xi1 - g.xi1 - v.0).abs() < 1e-12 && (p.xi2 - g.xi2 - v.1).abs() < 1e-12);
        let zeta = g.zeta + h.zeta + 0.5 * (g.xi1 * v.1 - g.xi2 * v.0);
        assert!((p.zeta - zeta).abs() < 1e-12);
    }
}

#[test]
fn identity_inverse_and_associativity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let (a, b, c) = (rand_elem(&mut rng), rand_elem(&mut rng), rand_elem(&mut rng));
        let l = jacobi_multiply(&jacobi_multiply(&a, &b).unwrap(), &c).unwrap();
        let r = jacobi_multiply(&a, &jacobi_multiply(&b, &c).unwrap()).unwrap();
        assert!(close(&l, &r, 1e-10), "{l:?} {r:?}");
        assert!(close(&jacobi_multiply(&a, &GroupElement::IDENTITY).unwrap(), &a, 1e-14));
        let ai = a.inverse().unwrap();
        assert!(close(&jacobi_multiply(&a, &ai).unwrap(), &GroupElement::IDENTITY, 1e-11));
        assert!(close(&jacobi_multiply(&ai, &a).unwrap(), &GroupElement::IDENTITY, 1e-11));
    }
}

#[test]
fn flow_is_a_one_parameter_group() {
    let p = jacobi_multiply(&GroupElement::flow(0.7), &GroupElement::flow(-1.3)).unwrap();
    assert!(close(&p, &GroupElement::flow(0.7 - 1.3), 1e-14));
}

/// Independent oracle: matrix product with diag(e^{-s/2}, e^{s/2}) and the Iwasawa angle,
/// lifted to the branch nearest to phi (the flow moves the angle by less than pi/2).
fn flow_oracle(g: &GroupElement, s: f64) -> (f64, f64, f64) {
    let m = mmul(mat(g), [(-s / 2.0).exp(), 0.0, 0.0, (s / 2.0).exp()]);
    let n = m[2] * m[2] + m[3] * m[3];
    let a = angle(m);
    (
        (m[0] * m[2] + m[1] * m[3]) / n,
        1.0 / n,
        a + TAU * ((g.phi - a) / TAU).round(),
    )
}

#[test]
fn geodesic_flow_closed_form_matches_matrix_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let g = rand_elem(&mut rng);
        let s = rng.random_range(-5.0..5.0);
        let f = geodesic_flow(&g, s);
        let (x, y, phi) = flow_oracle(&g, s);
        assert!((f.z.x - x).abs() < 1e-12 * (1.0 + x.abs()), "{} {}", f.z.x, x);
        assert!((f.z.y - y).abs() < 1e-12 * y);
        assert!((f.phi - phi).abs() < 1e-12 * (1.0 + phi.abs()));
        assert_eq!((f.xi1, f.xi2, f.zeta), (g.xi1, g.xi2, g.zeta));
        let m = jacobi_multiply(&g, &GroupElement::flow(s)).unwrap();
        assert!(close(&f, &m, 1e-10));
    }
}

#[test]
fn geodesic_flow_limits() {
    let g = GroupElement::new(0.3, 2.0, 0.0, 0.1, 0.2, 0.3).unwrap();
    let f = geodesic_flow(&g, 1.5);
    assert_eq!((f.z.x, f.phi), (0.3, 0.0));
    assert!((f.z.y - 2.0 * (-1.5f64).exp()).abs() < 1e-15);
    let g = GroupElement { phi: FRAC_PI_2, ..g };
    let f = geodesic_flow(&g, 1.5);
    assert_eq!((f.z.x, f.phi), (0.3, FRAC_PI_2));
    assert!((f.z.y - 2.0 * 1.5f64.exp()).abs() < 1e-14);
}

#[test]
fn flow_semigroup_and_continuity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let g = rand_elem(&mut rng);
        let (s, t) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let a = geodesic_flow(&geodesic_flow(&g, s), t);
        let b = geodesic_flow(&g, s + t);
        assert!(close(&a, &b, 1e-10));
    }
    let g = GroupElement::new(0.1, 1.0, 2.0, 0.0, 0.0, 0.0).unwrap();
    let mut prev = g.phi;
    for k in 0..10_000 {
        let p = geodesic_flow(&g, -5.0 + k as f64 * 1e-3).phi;
        assert!(k == 0 || (p - prev).abs() < FRAC_PI_2);
        prev = p;
    }
}

#[test]
fn iwasawa_examples_and_round_trip() {
    let (z, p) = iwasawa(&Sl2Matrix::IDENTITY).unwrap();
    assert_eq!((z, p), (UpperHalfPoint::I, 0.0));
    let (z, p) = iwasawa(&Sl2Matrix::new(2.0, 0.0, 0.0, 0.5).unwrap()).unwrap();
    assert!((z.y - 4.0).abs() < 1e-15 && z.x == 0.0 && p == 0.0);
    let (z, p) = iwasawa(&Sl2Matrix::rotation(PI / 3.0)).unwrap();
    assert!((z.x).abs() < 1e-15 && (z.y - 1.0).abs() < 1e-15 && (p - PI / 3.0).abs() < 1e-15);
    assert!(matches!(iwasawa(&Sl2Matrix { a: 1.0, b: 1.0, c: 1.0, d: 1.0 }), Err(thetasum::ThetaError::DegenerateMatrix(_))));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let g = rand_elem(&mut rng);
        let m = g.matrix();
        let (z, p) = iwasawa(&m).unwrap();
        let r = Sl2Matrix::from_iwasawa(z, p);
        for (u, v) in [(m.a, r.a), (m.b, r.b), (m.c, r.c), (m.d, r.d)] {
            assert!((u - v).abs() < 1e-12 * (1.0 + u.abs()));
        }
        assert!(p > -PI && p <= PI);
    }
}

#[test]
fn modular_reduction() {
    let (z, m) = reduce_to_fundamental(UpperHalfPoint::I).unwrap();
    assert_eq!((z, m), (UpperHalfPoint::I, ModularMatrix::IDENTITY));
    let p = UpperHalfPoint::new(0.1, 5.0).unwrap();
    assert_eq!(reduce_to_fundamental(p).unwrap(), (p, ModularMatrix::IDENTITY));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pts = vec![UpperHalfPoint::new(2.3, 0.5).unwrap(), UpperHalfPoint::new(0.4999, 1e-4).unwrap()];
    for _ in 0..500 {
        pts.push(UpperHalfPoint::new(rng.random_range(-10.0..10.0), 10f64.powf(rng.random_range(-6.0..1.0))).unwrap());
    }
    for z in pts {
        let (w, m) = reduce_to_fundamental(z).unwrap();
        assert!(w.x.abs() <= 0.5 && w.norm_sqr() >= 1.0 - 1e-12 && w.y >= 3f64.sqrt() / 2.0 - 1e-12);
        assert_eq!(m.det(), 1);
        let mz = m.act(z);
        assert!((mz.x - w.x).abs() < 1e-8 && (mz.y - w.y).abs() < 1e-8 * w.y);
        // idempotent
        let (w2, m2) = reduce_to_fundamental(w).unwrap();
        assert!(m2 == ModularMatrix::IDENTITY || (w2.x.abs() == 0.5 || (w2.norm_sqr() - 1.0).abs() < 1e-12));
        // sup of Im over the orbit: brute force over small matrices
        let h = cusp_height(z).unwrap();
        for c in -30i64..=30 {
            for d in -30i64..=30 {
                if gcd(c, d) == 1 {
                    let y = z.y / ((c as f64 * z.x + d as f64).powi(2) + (c as f64 * z.y).powi(2));
                    assert!(y <= h * (1.0 + 1e-9));
                }
            }
        }
    }
    assert_eq!(cusp_height(UpperHalfPoint::new(0.3, 7.0).unwrap()).unwrap(), 7.0);
    let c = cusp_height(UpperHalfPoint::new(0.5, 3f64.sqrt() / 2.0).unwrap()).unwrap();
    assert!((c - 3f64.sqrt() / 2.0).abs() < 1e-15);
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

#[test]
fn generators() {
    let g1 = gamma_generator(1).unwrap();
    assert_eq!((g1.z, g1.phi, g1.xi1, g1.xi2, g1.zeta), (UpperHalfPoint::I, FRAC_PI_2, 0.0, 0.0, 0.125));
    let g5 = gamma_generator(5).unwrap();
    assert_eq!((g5.z, g5.phi, g5.zeta), (UpperHalfPoint::I, 0.0, 1.0));
    let g3 = gamma_generator(3).unwrap();
    assert_eq!((g3.xi1, g3.xi2, g3.zeta), (1.0, 0.0, 0.0));
    assert!(gamma_generator(0).is_err() && gamma_generator(6).is_err());
}

#[test]
fn gamma_reduction_lands_in_domain_and_is_a_left_multiplication() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let mut g = rand_elem(&mut rng);
        g.z.y = 10f64.powf(rng.random_range(-4.0..1.0));
        let h = reduce_to_gamma_domain(&g).unwrap();
        assert!(h.z.x.abs() <= 0.5 && h.z.norm_sqr() >= 1.0 - 1e-12);
        assert!((0.0..PI).contains(&h.phi));
        for v in [h.xi1, h.xi2, h.zeta] {
            assert!((-0.5..0.5).contains(&v));
        }
        // h g^{-1} must project to SL(2,Z) with integer xi
        let q = jacobi_multiply(&h, &g.inverse().unwrap()).unwrap();
        let m = q.matrix();
        for v in [m.a, m.b, m.c, m.d] {
            assert!((v - v.round()).abs() < 1e-6, "{m:?}");
        }
    }
}

#[test]
fn haar_sampler_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut trials, mut bins) = (0u64, [0u64; 10]);
    let m = 1_000_000;
    for _ in 0..m {
        let (g, t) = haar_sample_counted(&mut rng);
        trials += t;
        bins[(g.phi / PI * 10.0) as usize] += 1;
        assert!(g.z.x.abs() <= 0.5 && g.z.norm_sqr() >= 1.0);
    }
    let rate = m as f64 / trials as f64;
    assert!((rate - PI * 3f64.sqrt() / 6.0).abs() < 0.003);
    // hyperbolic area of the modular domain: proposal strip area 2/sqrt(3) times acceptance
    let area = rate * 2.0 / 3f64.sqrt();
    assert!((area - PI / 3.0).abs() < 0.01 * PI / 3.0);
    let e = m as f64 / 10.0;
    let chi2: f64 = bins.iter().map(|&b| (b as f64 - e).powi(2) / e).sum();
    assert!(chi2 < 27.88); // 99.9% quantile, 9 degrees of freedom
}

#[test]
fn afe_coordinates_examples() {
    let a = afe_coordinates(1.0, 0.0, 0.0, 0.0, 10.0).unwrap();
    assert_eq!((a.x, a.alpha, a.u, a.beta, a.n), (-1.0, 0.0, 1.0, 0.0, 10.0));
    assert!((a.phase - thetasum::phase::e(0.125)).norm() < 1e-15);
    let u = 1.0 / (5f64.sqrt() - 0.5);
    let b = afe_coordinates(0.5, 0.3, u, 0.0, 100.0).unwrap();
    assert_eq!((b.x, b.beta, b.n), (-2.0, 0.3, 50.0));
    assert!((b.alpha - 0.6).abs() < 1e-15 && (b.u - 0.5 * (1.0 + 0.5 * u)).abs() < 1e-15);
    assert!((b.x + 1.0 / b.u + 1.0 / (0.5 + 1.0 / u)).abs() < 1e-12);
    assert!(afe_coordinates(0.0, 0.0, 0.0, 0.0, 1.0).is_err());
}

#[test]
fn renormalization_identity_as_group_equality() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g1 = gamma_generator(1).unwrap();
    for _ in 0..100 {
        let (x, alpha, u, beta) = (rng.random_range(0.05..1.95), rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
        let n = rng.random_range(2.0..200.0f64);
        let lhs = [g1, GroupElement::n_plus(x, alpha), GroupElement::n_minus(u, beta), GroupElement::flow(2.0 * n.ln())]
            .iter()
            .skip(1)
            .fold(g1, |acc, h| jacobi_multiply(&acc, h).unwrap());
        let a = afe_coordinates(x, alpha, u, beta, n).unwrap();
        let rhs = [GroupElement::n_minus(a.u, a.beta), GroupElement::flow(2.0 * a.n.ln()), GroupElement::heisenberg(0.0, 0.0, a.zeta)]
            .iter()
            .fold(GroupElement::n_plus(a.x, a.alpha), |acc, h| jacobi_multiply(&acc, h).unwrap());
        let rel = |p: f64, q: f64| (p - q).abs() / (1.0 + q.abs());
        assert!(rel(lhs.z.x, rhs.z.x) < 1e-10 && rel(lhs.z.y, rhs.z.y) < 1e-10 && rel(lhs.phi, rhs.phi) < 1e-10);
        assert!(rel(lhs.xi1, rhs.xi1) < 1e-10 && rel(lhs.xi2, rhs.xi2) < 1e-10 && rel(lhs.zeta, rhs.zeta) < 1e-10, "{lhs:?} {rhs:?}");
    }
}
