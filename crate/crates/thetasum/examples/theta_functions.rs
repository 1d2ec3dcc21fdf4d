//! Jacobi's theta function, Theta_f for a smooth cutoff, and the sharp-cutoff Theta_chi.

use num_complex::Complex64;
use thetasum::group::{GroupElement, UpperHalfPoint};
use thetasum::shale_weil::CutoffSpec;
use thetasum::theta::{jacobi_theta, theta_chi, theta_f};

fn main() -> thetasum::Result<()> {
    let z = Complex64::new(0.3, 0.7);
    let a = Complex64::new(0.2, 0.0);
    let lhs = jacobi_theta(UpperHalfPoint::new(z.re, z.im)?, a);
    let zi = -z.inv();
    let rhs = (Complex64::i() / z).sqrt()
        * (Complex64::new(0.0, -std::f64::consts::TAU) * (a * a / (2.0 * z))).exp()
        * jacobi_theta(UpperHalfPoint::new(zi.re, zi.im)?, a / z);
    println!("theta(z, a) = {lhs:.12}, transformed side = {rhs:.12}");

    let g = GroupElement::new(0.17, 0.9, 0.6, 0.3, -0.2, 0.0)?;
    let r = theta_f(&g, &CutoffSpec::Gaussian, 1e-12)?;
    println!("Theta_gauss(g) = {:.12} ({} terms, tail <= {:.1e})", r.value, r.terms_used, r.certified_tail);
    let r = theta_f(&g, &CutoffSpec::Triangle, 1e-8)?;
    println!("Theta_tri(g)   = {:.10} ({} terms, tail <= {:.1e})", r.value, r.terms_used, r.certified_tail);
    let r = theta_chi(&g, 1e-3, 64)?;
    println!("Theta_chi(g)   = {:.6} ({} levels, tail <= {:.1e}, warning {})", r.value, r.terms_used, r.certified_tail, r.diophantine_warning);
    Ok(())
}
