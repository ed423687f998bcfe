//! One-step transition log-density on a grid, written as CSV.

use implicit_langevin::experiment::{correlation_target, kernel_contour, write_contours};
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let target = correlation_target(2, 10.0, 1)?;
    let source = DVector::from_vec(vec![1.5, -1.0]);
    let grids = [0.0, 0.5, 1.0]
        .into_iter()
        .map(|theta| kernel_contour(&target, &source, theta, 1.0, 41))
        .collect::<Result<Vec<_>, _>>()?;
    for g in &grids {
        let (dx, dy) = g.spacing();
        let mass: f64 = g.log_density.iter().map(|v| v.exp()).sum::<f64>() * dx * dy;
        eprintln!("theta = {}: centre {:.3?}, grid mass {mass:.4}", g.theta, g.centre.as_slice());
    }
    write_contours(std::io::stdout().lock(), &grids)?;
    Ok(())
}
