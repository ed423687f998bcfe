//! Newton and gradient descent on one implicit-step subproblem.

use implicit_langevin::optim::{SolveProblem, Solver};
use implicit_langevin::samplers::{explicit_predictor, Subproblem};
use implicit_langevin::{Dataset, LogisticRegressionTarget, NoiseStream, TargetDensity};
use nalgebra::DVector;

fn main() -> implicit_langevin::Result<()> {
    let data = Dataset::synthetic(200, 5, 2, false).standardized(true);
    let target = LogisticRegressionTarget::from_dataset(&data, 1.0)?;
    let bounds = target.convexity_bounds();
    let x = DVector::from_element(target.dim(), 0.5);
    let z = NoiseStream::new(1, target.dim()).noise(0);
    for h in [0.01, 1.0, 100.0] {
        let theta = 0.5;
        let v = explicit_predictor(&target, &x, &z, theta, h)?;
        let objective = Subproblem { target: &target, center: v.clone(), theta, step_size: h };
        let mu = theta * bounds.lower + 2.0 / h;
        let lip = theta * bounds.upper + 2.0 / h;
        let problem = SolveProblem::new(&objective, mu, lip, v, 1e-10)?;
        for solver in [Solver::Newton, Solver::GradientDescent] {
            let r = solver.solve(&problem)?;
            println!("h = {h:>6}: {solver:?} took {} iterations, |g| = {:.1e}", r.iterations, r.gradient_norm);
        }
    }
    Ok(())
}
