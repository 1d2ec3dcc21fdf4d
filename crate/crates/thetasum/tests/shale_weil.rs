use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};
use thetasum::phase::e;
use thetasum::shale_weil::*;

/// Composite Simpson rule, used as an independent quadrature oracle.
fn simpson(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> Complex64) -> Complex64 {
    let n = n + n % 2;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for k in 1..n {
        acc += (if k % 2 == 1 { 4.0 } else { 2.0 }) * f(lo + k as f64 * h);
    }
    acc * h / 3.0
}

/// Hermite function from the explicit formula with H_k and k!, valid for small k.
fn psi_explicit(k: usize, t: f64) -> f64 {
    let x = (2.0 * PI).sqrt() * t;
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    let hk = if k == 0 {
        h0
    } else {
        for j in 1..k {
            let h2 = 2.0 * x * h1 - 2.0 * j as f64 * h0;
            h0 = h1;
            h1 = h2;
        }
        h1
    };
    let fact: f64 = (1..=k).map(|j| j as f64).product();
    (2f64.powf(k as f64 - 0.5) * fact).powf(-0.5) * hk * (-PI * t * t).exp()
}

#[test]
fn hermite_functions() {
    assert!((hermite_psi(0, 0.0) - 2f64.powf(0.25)).abs() < 1e-15);
    for k in 0..12 {
        for &t in &[-1.3, -0.2, 0.0, 0.4, 1.1, 2.5] {
            assert!((hermite_psi(k, t) - psi_explicit(k, t)).abs() < 1e-12, "k={k} t={t}");
        }
    }
    for k in [0usize, 5, 50] {
        let lim = ((2 * k + 1) as f64 / (2.0 * PI)).sqrt() + 3.0;
        for j in [0usize, 5, 50] {
            let v = simpson(-lim, lim, 200_000, |t| Complex64::new(hermite_psi(k, t) * hermite_psi(j, t), 0.0)).re;
            let want = if j == k { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-10, "k={k} j={j} ip={v}");
        }
    }
    let bound = 2f64.powf(0.25) * (1.0 + 1e-9);
    for k in (0..=500).step_by(7) {
        let tmax = ((2 * k + 1) as f64 / (2.0 * PI)).sqrt() + 1.0;
        for i in 0..2000 {
            let t = -tmax + 2.0 * tmax * i as f64 / 1999.0;
            assert!(hermite_psi(k, t).abs() <= bound);
        }
    }
    assert_eq!(hermite_psi(40, 60.0), 0.0);
}

#[test]
fn hermite_coefficients() {
    let c = hermite_coeffs(&CutoffSpec::Gaussian, 8).unwrap();
    assert!((c[0] - 2f64.powf(-0.25)).abs() < 1e-13);
    assert!(c[1..].iter().all(|v| v.abs() < 1e-13));
    let c = hermite_coeffs(&CutoffSpec::HermiteSeries { coeffs: vec![0.0, 1.0] }, 6).unwrap();
    assert!((c[1] - 1.0).abs() < 1e-12 && c[0].abs() < 1e-12 && c[2..].iter().all(|v| v.abs() < 1e-12));
    let c = hermite_coeffs(&CutoffSpec::HermiteSeries { coeffs: vec![0.3, 0.0, -0.2, 0.0, 0.05] }, 12).unwrap();
    for (k, want) in [0.3, 0.0, -0.2, 0.0, 0.05].iter().enumerate() {
        assert!((c[k] - want).abs() < 1e-12);
    }
    assert!(c[5..].iter().all(|v| v.abs() < 1e-12));
    assert!(matches!(hermite_coeffs(&CutoffSpec::Triangle, 4), Err(thetasum::ThetaError::UnsupportedCutoff(_))));
}

#[test]
fn gaussian_rotation_and_half_integral_weight() {
    let g = apply_kphi(&CutoffSpec::Gaussian, 0.7, 0.3).unwrap();
    let want = Complex64::from_polar(1.0, -0.35) * (-PI * 0.09f64).exp();
    assert!((g - want).norm() < 1e-14);
    let q = apply_kphi_quadrature(&CutoffSpec::Gaussian, 0.7, 0.3).unwrap();
    assert!((q - want).norm() < 1e-10);
    for &phi in &[0.2, 1.0, 2.5, 4.0] {
        for &w in &[-0.7, 0.0, 0.5] {
            for f in [CutoffSpec::Gaussian, CutoffSpec::Triangle] {
                let a = apply_kphi(&f, phi, w).unwrap();
                let b = apply_kphi(&f, phi + 2.0 * PI, w).unwrap();
                assert!((a + b).norm() < 1e-9, "{f:?} {phi} {w}");
            }
        }
    }
    let hs = CutoffSpec::HermiteSeries { coeffs: vec![0.5, 0.0, 0.25, 0.1] };
    for &phi in &[0.3, 1.2, 2.9] {
        for &w in &[-1.0, 0.2, 0.9] {
            let a = apply_kphi(&hs, phi, w).unwrap();
            let b = apply_kphi_quadrature(&hs, phi, w).unwrap();
            assert!((a - b).norm() < 1e-6);
        }
    }
}

#[test]
fn indicator_at_quarter_turn_and_identity_at_zero() {
    for &w in &[-2.3, -0.4, 0.37, 1.0, 5.5] {
        let v = apply_kphi(&CutoffSpec::IndicatorUnit, FRAC_PI_2, w).unwrap();
        let want = Complex64::from_polar(1.0, PI / 4.0) * (e(-w) - 1.0) / (2.0 * PI * w);
        assert!((v - want).norm() < 1e-12, "{w}: {v} {want}");
    }
    for f in [CutoffSpec::Gaussian, CutoffSpec::Triangle, CutoffSpec::TriangleMinus, CutoffSpec::IndicatorUnit] {
        for &w in &[-0.5, 0.2, 0.3, 0.6] {
            assert!((apply_kphi(&f, 0.0, w).unwrap() - f.eval(w)).norm() < 1e-15);
        }
    }
}

#[test]
fn triangle_pieces_match_definition() {
    let d = |x: f64| -> f64 {
        if !(1.0 / 6.0..=2.0 / 3.0).contains(&x) {
            0.0
        } else if x <= 0.25 {
            72.0 * (x - 1.0 / 6.0).powi(2)
        } else if x <= 1.0 / 3.0 {
            1.0 - 72.0 * (x - 1.0 / 3.0).powi(2)
        } else if x <= 0.5 {
            1.0 - 18.0 * (x - 1.0 / 3.0).powi(2)
        } else {
            18.0 * (x - 2.0 / 3.0).powi(2)
        }
    };
    for i in 0..=1000 {
        let x = -0.1 + i as f64 * 0.001;
        assert!((CutoffSpec::Triangle.eval(x) - d(x)).abs() < 1e-13);
        assert!((CutoffSpec::TriangleMinus.eval(-x) - d(x)).abs() < 1e-13);
        let via_pieces: f64 = CutoffSpec::Triangle
            .pieces()
            .unwrap()
            .iter()
            .filter(|p| (x - p.mid).abs() <= p.half)
            .map(|p| p.poly(x))
            .next()
            .unwrap_or(0.0);
        assert!((via_pieces - d(x)).abs() < 1e-12);
    }
    // partition of unity
    for &w in &[0.37, 0.01, 0.5, 0.9, 0.999] {
        let s: f64 = (0..60).map(|j| d(2f64.powi(j) * w) + d(2f64.powi(j) * (1.0 - w))).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }
}

#[test]
fn fresnel_examples_and_random_sweep() {
    assert!((fresnel_phase_integral([1.0, 0.0, 0.0], 0.0, 0.0, 0.0, 1.0).unwrap() - 1.0).norm() < 1e-14);
    assert!(fresnel_phase_integral([1.0, 0.0, 0.0], 0.0, 1.0, 0.0, 1.0).unwrap().norm() < 1e-14);
    let v = fresnel_phase_integral([1.0, 0.0, 0.0], 1.0, 0.0, 0.0, 1.0).unwrap();
    let o = simpson(0.0, 1.0, 200_000, |t| e(t * t));
    assert!((v - o).norm() < 1e-12);
    // exercise all three evaluation regimes
    let mut state = 12345u64;
    let mut uni = |lo: f64, hi: f64| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        lo + (hi - lo) * ((state >> 11) as f64 / (1u64 << 53) as f64)
    };
    for case in 0..48 {
        let p = [uni(-1.0, 1.0), uni(-3.0, 3.0), uni(-20.0, 20.0)];
        let (c2, c1) = match case % 4 {
            0 => (uni(-3.0, 3.0), uni(-5.0, 5.0)),
            1 => (uni(-200.0, 200.0), uni(-50.0, 50.0)),
            2 => (uni(-2.0, 2.0), uni(-300.0, 300.0)),
            _ => (uni(-60.0, 60.0), uni(-400.0, 400.0)),
        };
        let a = uni(-1.0, 0.5);
        let b = a + uni(0.02, 1.0);
        let v = fresnel_phase_integral(p, c2, c1, a, b).unwrap();
        let o = simpson(a, b, 400_000, |t| (p[0] + p[1] * t + p[2] * t * t) * e(c2 * t * t + c1 * t));
        assert!((v - o).norm() < 1e-10, "case {case}: {v} vs {o}");
    }
}

#[test]
fn trapezoid_fourier_transform() {
    let t = CutoffSpec::trapezoid(0.2, 0.5, 0.1, 0.3).unwrap();
    let (a, b, eps, del) = (0.2, 0.5, 0.1, 0.3);
    assert!((trapezoid_fourier(&t, 0.0, 1).unwrap() - (2.0 * b - 2.0 * a + eps + del) / 2.0).norm() < 1e-14);
    for &w in &[3.7, -1.2, 0.01, 25.0] {
        for sign in [1, -1] {
            let o = simpson(0.1, 0.8, 400_000, |x| t.eval(x) * e(-(sign as f64) * w * x));
            assert!((trapezoid_fourier(&t, w, sign).unwrap() - o).norm() < 1e-10, "w={w}");
        }
    }
    // quarter-turn values of f_phi are the transform times e(-1/8), resp. e(1/8) at -pi/2
    for &w in &[-3.0, 0.7, 4.4] {
        let v = apply_kphi(&t, FRAC_PI_2, w).unwrap();
        assert!((v - e(-0.125) * trapezoid_fourier(&t, w, 1).unwrap()).norm() < 1e-12);
        let v = apply_kphi(&t, -FRAC_PI_2, w).unwrap();
        assert!((v - e(0.125) * trapezoid_fourier(&t, w, -1).unwrap()).norm() < 1e-12);
    }
    // |T_hat(w)| <= C w^-2 (1/eps + 1/del) for |w| >= 1, across a family of trapezoids
    let mut worst = 0.0f64;
    for &(eps, del) in &[(0.1, 0.3), (1.0, 1.0), (0.02, 0.5), (0.5, 0.01)] {
        let t = CutoffSpec::trapezoid(0.3, 0.6, eps, del).unwrap();
        for i in 0..400 {
            let w = 1.0 + i as f64 * 0.25;
            worst = worst.max(trapezoid_fourier(&t, w, 1).unwrap().norm() * w * w / (1.0 / eps + 1.0 / del));
        }
    }
    assert!(worst < 1.0, "{worst}");
}

#[test]
fn unitarity() {
    for f in [CutoffSpec::Gaussian, CutoffSpec::Triangle] {
        let norm = f.l2_norm_sq();
        for &phi in &[0.3, FRAC_PI_2, 2.9] {
            let v = simpson(-120.0, 120.0, 48_000, |w| Complex64::new(apply_kphi(&f, phi, w).unwrap().norm_sqr(), 0.0));
            assert!((v.re - norm).abs() < 1e-6, "{f:?} phi={phi}: {} vs {norm}", v.re);
        }
    }
    // closed-form norm of Delta against the piecewise definition
    let o = simpson(1.0 / 6.0, 2.0 / 3.0, 60_000, |x| Complex64::new(CutoffSpec::Triangle.eval(x).powi(2), 0.0));
    assert!((o.re - CutoffSpec::Triangle.l2_norm_sq()).abs() < 1e-12);
}

#[test]
fn fresnel_path_matches_quadrature_path() {
    let fs = [CutoffSpec::Triangle, CutoffSpec::TriangleMinus, CutoffSpec::trapezoid(0.1, 0.4, 0.05, 0.2).unwrap()];
    for f in &fs {
        for i in 0..10 {
            let phi = 0.05 + i as f64 * 0.31;
            for j in 0..10 {
                let w = -6.0 + j as f64 * 1.37;
                let a = apply_kphi(f, phi, w).unwrap();
                let b = apply_kphi_quadrature(f, phi, w).unwrap();
                assert!((a - b).norm() < 1e-8, "{f:?} phi={phi} w={w}: {a} {b}");
            }
        }
    }
    // near-degenerate angles (stationary point regime) and large |w|
    for &phi in &[1e-4, 3e-3, PI - 2e-3, 1.0] {
        for &w in &[0.2, 0.4, 3.0, 40.0] {
            let a = apply_kphi(&CutoffSpec::Triangle, phi, w).unwrap();
            let b = apply_kphi_quadrature(&CutoffSpec::Triangle, phi, w).unwrap();
            assert!((a - b).norm() < 1e-8, "phi={phi} w={w}: {a} {b}");
        }
    }
}

#[test]
fn small_angle_deviation_of_triangle() {
    // E(phi) = max_{|t| <= 2} |Delta_phi(t) - Delta(t)| should scale no worse than |phi|^{3/4}
    let ratio = |phi: f64| -> f64 {
        (0..=400)
            .map(|i| {
                let t = -2.0 + i as f64 * 0.01;
                (apply_kphi(&CutoffSpec::Triangle, phi, t).unwrap() - CutoffSpec::Triangle.eval(t)).norm()
            })
            .fold(0.0, f64::max)
            / phi.powf(0.75)
    };
    let r: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5].iter().map(|&p| ratio(p)).collect();
    let c = r.iter().cloned().fold(0.0, f64::max);
    assert!(c.is_finite() && c < 10.0, "{r:?}");
    assert!(r[4] <= 2.0 * r[0].max(r[1]), "{r:?}");
}

#[test]
fn kappa_estimates() {
    let k = kappa_eta_bound(&CutoffSpec::Gaussian, 2.0).unwrap();
    let w0 = (-1.0 + (1.0 + 4.0 / PI).sqrt()) / 2.0;
    let exact = (-PI * w0 * w0).exp() * (1.0 + w0).powi(2);
    assert!(k.value <= exact * (1.0 + 1e-12) && k.value >= exact * (1.0 - 1e-3));
    let k = kappa_eta_bound(&CutoffSpec::Triangle, 2.0).unwrap();
    assert!(k.value.is_finite() && k.value > 1.0);
    let k = kappa_eta_bound(&CutoffSpec::trapezoid(0.2, 0.5, 1.0 / 6.0, 1.0 / 6.0).unwrap(), 2.0).unwrap();
    assert!(k.value <= TRAPEZOID_KAPPA2_CONSTANT * 12.0);
    assert!(kappa_eta_bound(&CutoffSpec::IndicatorUnit, 2.0).is_err());
    assert!(kappa_eta_bound(&CutoffSpec::IndicatorUnit, 1.0).is_ok());
}
