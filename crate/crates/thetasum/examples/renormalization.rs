//! Long Weyl sums by iterating the approximate functional equation, against direct summation.

use std::time::Instant;
use thetasum::weyl::{weyl_sum_direct, weyl_sum_renormalized};

fn main() -> thetasum::Result<()> {
    let x = (5f64.sqrt() - 1.0) / 2.0;
    for n in [10_000u64, 1_000_000, 10_000_000] {
        let t = Instant::now();
        let r = weyl_sum_renormalized(n, x, 0.25, 64, 200)?;
        let t_ren = t.elapsed();
        let t = Instant::now();
        let d = weyl_sum_direct(n, x, 0.25)?;
        let t_dir = t.elapsed();
        println!(
            "N = {n:>8}: renorm {:.4} ({} steps, estimate {:.2}) in {t_ren:?}; direct {:.4} in {t_dir:?}; |diff| = {:.3}",
            r.value,
            r.iterations,
            r.error_estimate,
            d,
            (r.value - d).norm()
        );
    }
    Ok(())
}
