//! Haar sampling on the fundamental domain, reduction of points of the upper
//! half-plane, and the geodesic flow.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thetasum::group::{cusp_height, geodesic_flow, haar_sample, reduce_to_fundamental, GroupElement, UpperHalfPoint};

fn main() -> thetasum::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..3 {
        let g = haar_sample(&mut rng);
        println!("Haar sample: z = {:.4} + {:.4}i, phi = {:.4}", g.z.x, g.z.y, g.phi);
    }
    let z = UpperHalfPoint::new(0.4142, 0.001)?;
    let (w, m) = reduce_to_fundamental(z)?;
    println!("{z:?} reduces to {w:?} by {m:?}; cusp height {:.4}", cusp_height(z)?);
    let g = GroupElement::n_plus(2f64.sqrt() - 1.0, 0.0);
    for s in [0.0, 5.0, 10.0, 20.0] {
        let h = geodesic_flow(&g, s);
        println!("s = {s:>4}: y_s = {:.3e}, height after reduction {:.4}", h.z.y, cusp_height(h.z)?);
    }
    Ok(())
}
