//! Empirical chain covariance against the closed-form stationary covariance
//! `Σ(I + (h/2)(θ - ½)Σ⁻¹)⁻¹` on a random correlation Gaussian.

use implicit_langevin::experiment::correlation_target;
use implicit_langevin::theory::gaussian_stationary_covariance;
use implicit_langevin::{run_chain, SamplerConfig};

fn main() -> implicit_langevin::Result<()> {
    let target = correlation_target(4, 20.0, 7)?;
    let (steps, burn_in) = (100_000, 1_000);
    for theta in [0.5, 0.75, 1.0] {
        let h = 2.0;
        let chain = run_chain(&target, target.mean(), &SamplerConfig::new(theta, h, steps, 3)?)?;
        let samples = chain.after_burn_in(burn_in);
        let n = samples.nrows() as f64;
        let mean = samples.row_mean();
        let mut centred = samples.clone();
        for mut row in centred.row_iter_mut() {
            row -= &mean;
        }
        let empirical = centred.transpose() * &centred / (n - 1.0);
        let exact = gaussian_stationary_covariance(target.covariance(), theta, h)?;
        let rel = (&empirical - &exact).norm() / exact.norm();
        println!("theta = {theta}: relative Frobenius error {rel:.4}");
    }
    Ok(())
}
