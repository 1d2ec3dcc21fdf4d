//! Haar averages of |Theta_f|^2 and |Theta_f|^4, and a small sample of |Theta_chi|.

use thetasum::shale_weil::CutoffSpec;
use thetasum::stats::{haar_moment_check, log_grid, theta_measure_tail, DEFAULT_SEED};

fn main() -> thetasum::Result<()> {
    for order in [2, 4] {
        let m = haar_moment_check(200_000, &CutoffSpec::Gaussian, order, DEFAULT_SEED)?;
        println!("E|Theta_gauss|^{order} = {:.4} +- {:.4} (target {:.4})", m.estimate, m.std_error, m.target);
    }
    let mu = theta_measure_tail(500, &log_grid(1.0, 2.0, 4), DEFAULT_SEED, 0.1)?;
    println!("|Theta_chi| survival {:?}", mu.tail.survival);
    println!("fundamental domain volume {:.4} +- {:.4} (pi^2/3 = {:.4})", mu.volume, mu.volume_std_error, mu.volume_target);
    Ok(())
}
