//! Direct, polynomial and smoothed quadratic Weyl sums, and one step of the
//! approximate functional equation.

use thetasum::shale_weil::CutoffSpec;
use thetasum::weyl::{afe_residual, afe_step, weyl_sum_direct, weyl_sum_general, weyl_sum_poly, WeylParams};

fn main() -> thetasum::Result<()> {
    let x = 2f64.sqrt() - 1.0;
    println!("S_1000(sqrt2 - 1, 0)        = {}", weyl_sum_direct(1000, x, 0.0)?);
    let p = WeylParams { x, alpha: 0.1, c1: 2f64.sqrt(), c0: 0.0 };
    println!("with c1 = sqrt 2, alpha 0.1 = {}", weyl_sum_poly(1000, p)?);
    println!("Gaussian-weighted           = {}", weyl_sum_general(1000, x, 0.0, &CutoffSpec::Gaussian)?);
    let step = afe_step(1000, x, 0.0)?;
    println!("one AFE step: N' = {}, x' = {:.6}, prefactor = {:.6}", step.n_prime, step.x_raw, step.prefactor);
    println!("sqrt(x) |residual| = {:.4}", afe_residual(1000, x, 0.0)?);
    Ok(())
}
