//! Inexact implicit sampling of a Bayesian logistic regression posterior.

use implicit_langevin::targets::find_mode;
use implicit_langevin::{run_chain, Dataset, LogisticRegressionTarget, SamplerConfig, TargetDensity};
use nalgebra::DVector;

fn main() -> implicit_langevin::Result<()> {
    let data = Dataset::synthetic(300, 4, 5, false).standardized(true);
    let target = LogisticRegressionTarget::from_dataset(&data, 1.0)?;
    let bounds = target.convexity_bounds();
    println!("m = {}, M = {:.3}", bounds.lower, bounds.upper);

    let config = SamplerConfig::new(0.5, 0.5, 5_000, 11)?.with_tolerance(1e-8)?;
    let chain = run_chain(&target, &DVector::zeros(target.dim()), &config)?;
    let samples = chain.after_burn_in(500);
    let mean = samples.row_mean();
    let iterations: usize = chain.solver_iterations.iter().sum();
    println!("posterior mean {:.3?}", mean.as_slice());
    println!("mode           {:.3?}", find_mode(&target)?.as_slice());
    println!("Newton iterations per step {:.2}", iterations as f64 / (chain.len() - 1) as f64);
    Ok(())
}
