//! Monte Carlo of the random curlicue X_N(t): variance, modulus and real-part tails.

use thetasum::stats::{log_grid, mc_re_tail, mc_tail, mc_variance, SampleSpec, DEFAULT_SEED};

fn main() -> thetasum::Result<()> {
    let spec = SampleSpec::standard(50_000, 1024, DEFAULT_SEED);
    for t in [0.25, 1.0] {
        let v = mc_variance(&spec, t)?;
        println!("Var X({t}) = {:.4} +- {:.4} (limit {t})", v.estimate, v.std_error);
    }
    let tail = mc_tail(&spec, 1.0, &log_grid(1.0, 2.0, 5))?;
    for (r, s) in tail.r_grid.iter().zip(&tail.survival) {
        println!("P(|X(1)| >= {r:.3}) = {s:.5}");
    }
    println!("slope {:.3}, constant at slope -6: {:.4} (6/pi^2 = {:.4})", tail.fit_slope, tail.fit_constant, tail.target_constant);
    let re = mc_re_tail(&spec, &log_grid(1.0, 1.5, 3))?;
    println!("Re tail constant {:.4}, symmetry z-scores {:?}", re.right.fit_constant, re.symmetry_z);
    Ok(())
}
