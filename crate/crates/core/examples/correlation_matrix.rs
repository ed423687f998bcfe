//! Random correlation matrix with a prescribed spectrum, rescaled to trace `d`.

use implicit_langevin::matrixgen::{random_correlation, rescale_to_trace, write_matrix_csv, SpectralModel};
use nalgebra::SymmetricEigen;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = SpectralModel::new(6, 1.0, 50.0)?;
    let spectrum = model.spectrum();
    let sigma = random_correlation(&spectrum, 9)?;
    let mut eig = SymmetricEigen::new(sigma.clone()).eigenvalues.as_slice().to_vec();
    eig.sort_by(|a, b| b.total_cmp(a));
    eprintln!("target spectrum   {:.4?}", rescale_to_trace(&spectrum)?);
    eprintln!("achieved spectrum {eig:.4?}");
    let drift = sigma.diagonal().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    eprintln!("max |diag - 1|    {drift:.1e}");
    write_matrix_csv(std::io::stdout().lock(), &sigma)?;
    Ok(())
}
