//! Kolmogorov-Smirnov comparisons for the scaling, inversion, stationarity and
//! rotation symmetries of the limit process, plus the path diagnostics.

use thetasum::stats::{increment_correlation, invariance_suite, modulus_statistic, sample_paths, InvarianceCheck, SampleSpec, DEFAULT_SEED};

fn main() -> thetasum::Result<()> {
    let spec = SampleSpec::standard(5_000, 2048, DEFAULT_SEED);
    for r in invariance_suite(&spec, &InvarianceCheck::defaults())? {
        println!("{:<13} KS |.| {:?}, KS Re {:.4}, threshold {} -> {}", r.check.name(), r.ks_abs, r.ks_re, r.threshold, r.pass);
    }
    let paths = sample_paths(&SampleSpec { m: 200, ..spec.clone() })?;
    let h: Vec<f64> = (2..=8).map(|k| 0.5f64.powi(k)).collect();
    println!("modulus statistic {:.4}", modulus_statistic(&paths, &h, 0.1)?);
    println!("corr(|X(1/2)|, |X(1) - X(1/2)|) = {:.4}", increment_correlation(&spec)?);
    Ok(())
}
