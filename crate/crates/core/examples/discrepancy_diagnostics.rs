//! MMD and mean marginal total variation between Gaussian sample sets.

use implicit_langevin::diagnostics::{BandwidthRule, Reference, SampleSet, MEDIAN_SEED};
use implicit_langevin::GaussianTarget;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> implicit_langevin::Result<()> {
    let d = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let base = GaussianTarget::standard(d)?;
    let reference = Reference::new(SampleSet::new(base.sample_exact(2000, &mut rng), "exact")?, BandwidthRule::MedianDistance, MEDIAN_SEED)?;
    println!("kernel bandwidth {:.4}", reference.kernel_bandwidth());
    for shift in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let moved = GaussianTarget::from_covariance(DVector::from_element(d, shift), base.covariance().clone())?;
        let set = SampleSet::new(moved.sample_exact(2000, &mut rng), format!("shift {shift}"))?;
        let report = reference.report(&set)?;
        println!("shift {shift}: mmtv = {:.4}, mmd2 = {:.4e}", report.mmtv, report.mmd2);
    }
    Ok(())
}
