//! Random correlation matrices with a prescribed spectrum.
//!
//! The spectrum is conjugated by a Haar-distributed orthogonal matrix and
//! then driven to unit diagonal by the Bendel–Mickey sequence of Givens
//! rotations, each of which fixes one diagonal entry while leaving the
//! spectrum untouched.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::targets::symmetrized;

/// Diagonal entries within this distance of one are left alone.
pub const UNIT_DIAGONAL_TOLERANCE: f64 = 1e-12;

/// Exponentially decaying spectrum between `upper` (first) and `lower` (last).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralModel {
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
}

impl SpectralModel {
    pub fn new(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("spectral model needs d >= 2, got {dim}")));
        }
        if !(lower > 0.0 && upper >= lower && upper.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "spectral model needs 0 < m <= M < inf, got ({lower}, {upper})"
            )));
        }
        Ok(Self { dim, lower, upper })
    }

    pub fn spectrum(&self) -> Vec<f64> {
        exp_decay_spectrum(self)
    }
}

/// `log λ_k` interpolates linearly from `log M` at `k = 1` to `log m` at `k = d`.
pub fn exp_decay_spectrum(model: &SpectralModel) -> Vec<f64> {
    let d = model.dim;
    let ratio = model.lower / model.upper;
    (0..d)
        .map(|k| match k {
            0 => model.upper,
            k if k == d - 1 => model.lower,
            k => model.upper * ratio.powf(k as f64 / (d - 1) as f64),
        })
        .collect()
}

/// Scales a spectrum so that it sums to its length (the trace of a
/// correlation matrix). Ratios between eigenvalues are unchanged.
pub fn rescale_to_trace(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if eigenvalues.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("eigenvalues must be positive and finite".into()));
    }
    let total: f64 = eigenvalues.iter().sum();
    let scale = eigenvalues.len() as f64 / total;
    Ok(eigenvalues.iter().map(|v| v * scale).collect())
}

/// Haar-distributed orthogonal matrix via QR of a Gaussian matrix, with the
/// column signs fixed by the diagonal of `R`.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let gaussian = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = gaussian.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random correlation matrix whose eigenvalues are `eigenvalues` rescaled
/// to sum to `d`. Deterministic in `seed`.
pub fn random_correlation(eigenvalues: &[f64], seed: u64) -> Result<DMatrix<f64>> {
    let spectrum = rescale_to_trace(eigenvalues)?;
    let d = spectrum.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_orthogonal(d, &mut rng);
    let diag = DMatrix::from_diagonal(&DVector::from_vec(spectrum));
    let mut a = symmetrized(&q * diag * q.transpose());

    for _ in 0..(4 * d) {
        let (i, worst) = (0..d)
            .map(|k| (k, a[(k, k)] - 1.0))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .expect("non-empty");
        if worst.abs() <= UNIT_DIAGONAL_TOLERANCE {
            a.fill_diagonal(1.0);
            return Ok(symmetrized(a));
        }
        // Partner on the other side of one; trace d guarantees it exists.
        let partner = (0..d).filter(|&k| k != i).max_by(|&x, &y| {
            let (dx, dy) = (a[(x, x)] - 1.0, a[(y, y)] - 1.0);
            if worst < 0.0 {
                dx.total_cmp(&dy)
            } else {
                dy.total_cmp(&dx)
            }
        });
        let j = match partner {
            Some(j) if (a[(j, j)] - 1.0) * worst <= 0.0 => j,
            _ => {
                return Err(Error::NumericalFailure(
                    "no diagonal entry on the opposite side of one".into(),
                ))
            }
        };
        givens_unit_diagonal(&mut a, i, j)?;
    }
    Err(Error::NumericalFailure("Givens sweep did not reach a unit diagonal".into()))
}

/// Rotates in the `(i, j)` plane so that the new `a_ii` equals one.
/// Requires `(a_ii - 1)(a_jj - 1) ≤ 0`.
fn givens_unit_diagonal(a: &mut DMatrix<f64>, i: usize, j: usize) -> Result<()> {
    let (aii, ajj, aij) = (a[(i, i)], a[(j, j)], a[(i, j)]);
    // Smaller-magnitude root of (a_jj - 1)t² - 2 a_ij t + (a_ii - 1) = 0.
    let disc = aij * aij - (aii - 1.0) * (ajj - 1.0);
    let root = disc.max(0.0).sqrt();
    let q = aij + if aij >= 0.0 { root } else { -root };
    if q == 0.0 {
        return Err(Error::NumericalFailure(format!("degenerate Givens rotation in plane ({i}, {j})")));
    }
    let t = (aii - 1.0) / q;
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = a.nrows();
    for k in 0..n {
        let (aki, akj) = (a[(k, i)], a[(k, j)]);
        a[(k, i)] = c * aki - s * akj;
        a[(k, j)] = s * aki + c * akj;
    }
    for k in 0..n {
        let (aik, ajk) = (a[(i, k)], a[(j, k)]);
        a[(i, k)] = c * aik - s * ajk;
        a[(j, k)] = s * aik + c * ajk;
    }
    a[(i, i)] = 1.0;
    Ok(())
}

/// Dumps a matrix as comma-separated rows.
pub fn write_matrix_csv<W: std::io::Write>(mut out: W, m: &DMatrix<f64>) -> std::io::Result<()> {
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::SymmetricEigen;

    fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    #[test]
    fn spectrum_examples() {
        assert_eq!(exp_decay_spectrum(&SpectralModel::new(2, 1.0, 100.0).unwrap()), vec![100.0, 1.0]);
        let s = exp_decay_spectrum(&SpectralModel::new(3, 1.0, 100.0).unwrap());
        assert_relative_eq!(s[1], 10.0, max_relative = 1e-14);
        assert_eq!((s[0], s[2]), (100.0, 1.0));
        assert!(exp_decay_spectrum(&SpectralModel::new(7, 5.0, 5.0).unwrap()).iter().all(|&v| v == 5.0));
        assert!(SpectralModel::new(1, 1.0, 2.0).is_err());
        assert!(SpectralModel::new(3, 2.0, 1.0).is_err());
    }

    #[test]
    fn spectrum_is_log_linear_and_non_increasing() {
        let s = exp_decay_spectrum(&SpectralModel::new(20, 0.5, 4000.0).unwrap());
        assert!(s.windows(2).all(|w| w[0] >= w[1] && w[1] > 0.0));
        let logs: Vec<f64> = s.iter().map(|v| v.ln()).collect();
        let step = logs[1] - logs[0];
        for w in logs.windows(2) {
            assert_relative_eq!(w[1] - w[0], step, max_relative = 1e-10);
        }
        assert_relative_eq!(s[0] / s[19], 8000.0, max_relative = 1e-14);
    }

    #[test]
    fn flat_unit_spectrum_gives_identity() {
        let c = random_correlation(&[1.0; 6], 3).unwrap();
        assert!((c - DMatrix::identity(6, 6)).amax() < 1e-12);
    }

    #[test]
    fn two_by_two_off_diagonal() {
        let c = random_correlation(&[1.5, 0.5], 11).unwrap();
        assert!((c[(0, 1)].abs() - 0.5).abs() < 1e-12);
        assert_eq!(c[(0, 0)], 1.0);
    }

    #[test]
    fn spectrum_and_unit_diagonal_preserved() {
        let model = SpectralModel::new(50, 1.0, 100.0).unwrap();
        let target = rescale_to_trace(&model.spectrum()).unwrap();
        let c = random_correlation(&model.spectrum(), 42).unwrap();
        assert_eq!(c, c.transpose());
        assert!(c.clone().cholesky().is_some());
        for k in 0..50 {
            assert!((c[(k, k)] - 1.0).abs() < 1e-10);
        }
        assert!((c.trace() - 50.0).abs() < 1e-10);
        for (got, want) in sorted_eigenvalues(&c).iter().zip(&target) {
            assert_relative_eq!(*got, *want, max_relative = 1e-8);
        }
    }

    #[test]
    fn seeded_determinism() {
        let eig = exp_decay_spectrum(&SpectralModel::new(10, 1.0, 1e4).unwrap());
        let a = random_correlation(&eig, 7).unwrap();
        let b = random_correlation(&eig, 7).unwrap();
        let c = random_correlation(&eig, 8).unwrap();
        assert_eq!(a, b);
        assert!((a - c).norm() > 0.0);
    }

    #[test]
    fn rejects_non_positive_eigenvalues() {
        assert!(random_correlation(&[1.0, 0.0], 1).is_err());
        assert!(random_correlation(&[], 1).is_err());
    }
}
