//! Exact counts Q(N) of the sixth-moment system and the integral D(f).

use thetasum::shale_weil::CutoffSpec;
use thetasum::stats::{d_integral, q_count, q_count_ratio};

fn main() -> thetasum::Result<()> {
    for n in [1, 2, 3, 10, 100] {
        println!("Q({n}) = {}", q_count(n)?);
    }
    println!("Q(300)/(300^3 ln 300) = {:.4}, limit 18/pi^2 = {:.4}", q_count_ratio(300)?, 18.0 / std::f64::consts::PI.powi(2));
    for f in [CutoffSpec::IndicatorUnit, CutoffSpec::Gaussian] {
        let d = d_integral(&f, 0.01)?;
        println!("D({f:?}) = {:.5} +- {:.1e}", d.estimate, d.error_estimate);
    }
    Ok(())
}
