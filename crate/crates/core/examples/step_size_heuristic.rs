//! Step size matching the large-step proposal covariance to the Laplace
//! covariance, for the exponentially decaying spectrum.

use implicit_langevin::matrixgen::SpectralModel;
use implicit_langevin::theory::{heuristic_objective, step_size_heuristic_model};

fn main() -> implicit_langevin::Result<()> {
    for kappa in [1.0, 10.0, 100.0, 1e4] {
        let model = SpectralModel::new(100, 1.0, kappa)?;
        for theta in [0.5, 1.0] {
            let h = step_size_heuristic_model(&model, theta)?;
            let j = heuristic_objective(&model.spectrum(), theta, h);
            println!("kappa = {kappa:>7}, theta = {theta}: h = {h:.6e}, J = {j:.3e}");
        }
    }
    Ok(())
}
