//! Trapezoidal step on a standard Gaussian with `h = 4`: each iterate is
//! exactly the injected noise, so the chain draws i.i.d. exact samples.

use implicit_langevin::{run_chain, GaussianTarget, NoiseStream, SamplerConfig};
use nalgebra::DVector;

fn main() -> implicit_langevin::Result<()> {
    let d = 3;
    let target = GaussianTarget::standard(d)?;
    let config = SamplerConfig::new(0.5, 4.0, 5, 42)?;
    let chain = run_chain(&target, &DVector::from_element(d, 10.0), &config)?;
    let noise = NoiseStream::new(42, d);
    for k in 1..chain.len() {
        let x = chain.sample(k);
        let z = noise.noise(k as u64 - 1);
        println!("step {k}: x = {:?}, |x - z| = {:.1e}", x.as_slice(), (&x - &z).norm());
    }
    Ok(())
}
