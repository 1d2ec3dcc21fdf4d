//! Prints the normalized curlicue X_N(t) as CSV (t,re,im); pipe it into a plotting tool.

use thetasum::cli::fmt_g17;
use thetasum::weyl::{curlicue, WeylParams};

fn main() -> thetasum::Result<()> {
    let n = 2000;
    let grid: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
    let path = curlicue(n, WeylParams { x: 2f64.sqrt() - 1.0, alpha: 0.0, c1: 0.0, c0: 0.0 }, &grid)?;
    println!("t,re,im");
    for (t, v) in grid.iter().zip(&path.values) {
        println!("{},{},{}", fmt_g17(*t), fmt_g17(v.re), fmt_g17(v.im));
    }
    Ok(())
}
