//! Continued fractions, Diophantine constants and cusp-excursion bounds.

use thetasum::diophantine::{continued_fraction, diophantine_type, excursion_bound, z_su};
use thetasum::group::cusp_height;

fn main() -> thetasum::Result<()> {
    let cf = continued_fraction(std::f64::consts::PI, 6)?;
    println!("pi = [{}; {:?}], convergents {:?}", cf.a0, cf.partial_quotients, &cf.convergents[..4]);
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let d = diophantine_type(golden, 1.0, 10_000)?;
    println!("golden ratio: A_lower = {:.4}, tail estimate {:.4} (1/sqrt5 = {:.4})", d.a_lower, d.a_tail, 1.0 / 5f64.sqrt());
    let u = 0.5;
    let x = 5f64.sqrt() - 1.0 / u;
    for s in [0.0, 4.0, 8.0, 16.0] {
        let h = cusp_height(z_su(x, u, s)?)?;
        println!("s = {s:>4}: cusp height {h:.4} <= bound {:.4}", excursion_bound(x, u, d.a_lower.min(1.0), 1.0, s)?);
    }
    Ok(())
}
