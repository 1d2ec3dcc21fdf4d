//! Cutoff functions under the rotation k_phi: closed forms against quadrature,
//! the trapezoid Fourier transform and the decay constant kappa_3.

use thetasum::shale_weil::{apply_kphi, apply_kphi_quadrature, kappa3_cached, trapezoid_fourier, CutoffSpec};

fn main() -> thetasum::Result<()> {
    let phi = 0.7;
    for f in [CutoffSpec::Gaussian, CutoffSpec::Triangle, CutoffSpec::IndicatorUnit] {
        for w in [-1.0, 0.25, 3.0] {
            let fast = apply_kphi(&f, phi, w)?;
            let slow = apply_kphi_quadrature(&f, phi, w)?;
            println!("{f:?} phi={phi} w={w:>5}: {fast:.10}  (quadrature differs by {:.1e})", (fast - slow).norm());
        }
    }
    let t = CutoffSpec::trapezoid(0.2, 0.5, 1.0 / 6.0, 1.0 / 6.0)?;
    println!("trapezoid transform at 3.7: {:.14}", trapezoid_fourier(&t, 3.7, -1)?);
    println!("kappa_3(triangle) ~ {:.3}", kappa3_cached(&CutoffSpec::Triangle)?);
    Ok(())
}
