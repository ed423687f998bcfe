//! Strongly log-concave targets `π ∝ exp(-f)`.
//!
//! Every target exposes `f` up to an additive constant together with its
//! exact gradient and Hessian, plus curvature bounds `(m, M)` such that all
//! Hessian eigenvalues lie in `[m, M]`.

use std::io::BufRead;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::optim::{newton_solve, SmoothObjective, SolveProblem};

/// Curvature bounds: every Hessian eigenvalue lies in `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityBounds {
    pub lower: f64,
    pub upper: f64,
}

impl ConvexityBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && upper >= lower && upper.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "convexity bounds must satisfy 0 < m <= M < inf, got ({lower}, {upper})"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn condition_number(&self) -> f64 {
        self.upper / self.lower
    }
}

/// Negative log-density of a strongly log-concave distribution.
pub trait TargetDensity: Sync {
    fn dim(&self) -> usize;

    /// `f(x)` up to an additive constant.
    fn value(&self, x: &DVector<f64>) -> Result<f64>;

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;

    fn convexity_bounds(&self) -> ConvexityBounds;

    /// Gaussian targets admit closed-form implicit steps.
    fn as_gaussian(&self) -> Option<&GaussianTarget> {
        None
    }
}

fn check_point(dim: usize, x: &DVector<f64>) -> Result<()> {
    ensure_dim(dim, x.len())?;
    ensure_finite(x.as_slice(), "evaluation point")
}

/// Presents `f` itself as a smooth objective, for mode finding.
pub struct TargetObjective<'a, T: ?Sized>(pub &'a T);

impl<T: TargetDensity + ?Sized> SmoothObjective for TargetObjective<'_, T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.0.gradient(x)
    }

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.0.hessian(x)
    }
}

pub const MODE_TOLERANCE: f64 = 1e-10;

/// Unique minimiser of `f`, found by Newton's method from the origin.
pub fn find_mode<T: TargetDensity + ?Sized>(target: &T) -> Result<DVector<f64>> {
    if let Some(gaussian) = target.as_gaussian() {
        return Ok(gaussian.mean().clone());
    }
    let bounds = target.convexity_bounds();
    let objective = TargetObjective(target);
    let problem = SolveProblem::new(
        &objective,
        bounds.lower,
        bounds.upper,
        DVector::zeros(target.dim()),
        MODE_TOLERANCE,
    )?;
    let result = newton_solve(&problem)?;
    if !result.converged {
        return Err(Error::NumericalFailure(format!(
            "mode search stalled at gradient norm {:e}",
            result.gradient_norm
        )));
    }
    Ok(result.solution)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&mut m);
    m
}

fn check_square_symmetric(m: &DMatrix<f64>, dim: usize, what: &str) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: m.nrows().max(m.ncols()),
        });
    }
    ensure_finite(m.as_slice(), what)?;
    let scale = m.amax().max(1.0);
    for i in 0..dim {
        for j in (i + 1)..dim {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::InvalidArgument(format!("{what} is not symmetric")));
            }
        }
    }
    Ok(())
}

/// `f(x) = ½ (x - μ)ᵀ Q (x - μ)` with precision `Q = Σ⁻¹`.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    mean: DVector<f64>,
    precision: DMatrix<f64>,
    covariance: DMatrix<f64>,
    /// Lower Cholesky factor of the covariance, for exact sampling.
    covariance_factor: DMatrix<f64>,
    bounds: ConvexityBounds,
}

impl GaussianTarget {
    pub fn from_precision(mean: DVector<f64>, precision: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        ensure_finite(mean.as_slice(), "mean")?;
        check_square_symmetric(&precision, dim, "precision")?;
        let precision = symmetrized(precision);
        let covariance = precision
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("precision matrix is not positive definite".into()))?
            .inverse();
        Self::assemble(mean, precision, symmetrized(covariance))
    }

    pub fn from_covariance(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        ensure_finite(mean.as_slice(), "mean")?;
        check_square_symmetric(&covariance, dim, "covariance")?;
        let covariance = symmetrized(covariance);
        let precision = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("covariance matrix is not positive definite".into()))?
            .inverse();
        Self::assemble(mean, symmetrized(precision), covariance)
    }

    /// Standard normal in `dim` dimensions.
    pub fn standard(dim: usize) -> Result<Self> {
        Self::from_precision(DVector::zeros(dim), DMatrix::identity(dim, dim))
    }

    fn assemble(mean: DVector<f64>, precision: DMatrix<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let covariance_factor = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NumericalFailure("covariance factorization failed".into()))?
            .l();
        let eig = SymmetricEigen::new(precision.clone());
        let bounds = ConvexityBounds::new(eig.eigenvalues.min(), eig.eigenvalues.max())?;
        Ok(Self {
            mean,
            precision,
            covariance,
            covariance_factor,
            bounds,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Eigenvalues of the precision (the Hessian of `f`), ascending.
    pub fn precision_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.precision.clone()).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `n` exact draws `μ + L z`, one per row.
    pub fn sample_exact<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(n, d);
        let mut z = DVector::zeros(d);
        for i in 0..n {
            z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            let x = &self.mean + &self.covariance_factor * &z;
            out.row_mut(i).copy_from(&x.transpose());
        }
        out
    }
}

impl TargetDensity for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_point(self.dim(), x)?;
        let r = x - &self.mean;
        Ok(0.5 * r.dot(&(&self.precision * &r)))
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_point(self.dim(), x)?;
        Ok(&self.precision * (x - &self.mean))
    }

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_point(self.dim(), x)?;
        Ok(self.precision.clone())
    }

    fn convexity_bounds(&self) -> ConvexityBounds {
        self.bounds
    }

    fn as_gaussian(&self) -> Option<&GaussianTarget> {
        Some(self)
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

pub const POWER_ITERATION_TOLERANCE: f64 = 1e-12;
pub const POWER_ITERATION_MAX: usize = 100_000;

/// Largest eigenvalue of `AᵀA` (that is, `‖A‖₂²`) by power iteration.
pub fn spectral_norm_squared(a: &DMatrix<f64>, tol: f64, max_iterations: usize) -> Result<f64> {
    let d = a.ncols();
    if d == 0 || a.nrows() == 0 || a.amax() == 0.0 {
        return Ok(0.0);
    }
    let gram = a.transpose() * a;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal).abs() + 0.1);
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..max_iterations {
        let w = &gram * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w / norm;
        if (next - estimate).abs() <= tol * next.abs() {
            return Ok(next.max(norm));
        }
        estimate = next;
    }
    Err(Error::NumericalFailure(format!(
        "power iteration did not reach relative tolerance {tol:e} in {max_iterations} iterations"
    )))
}

/// Bayesian logistic regression posterior with an isotropic Gaussian prior:
/// `f(x) = Σᵢ [log(1 + exp(aᵢᵀx)) - bᵢ aᵢᵀx] + (λ/2)‖x‖²`.
#[derive(Debug, Clone)]
pub struct LogisticRegressionTarget {
    design: DMatrix<f64>,
    labels: DVector<f64>,
    prior_precision: f64,
    design_norm_squared: f64,
    bounds: ConvexityBounds,
}

impl LogisticRegressionTarget {
    pub fn new(design: DMatrix<f64>, labels: DVector<f64>, prior_precision: f64) -> Result<Self> {
        ensure_dim(design.nrows(), labels.len())?;
        ensure_finite(design.as_slice(), "design matrix")?;
        if design.ncols() == 0 {
            return Err(Error::InvalidArgument("design matrix has no columns".into()));
        }
        if labels.iter().any(|&b| b != 0.0 && b != 1.0) {
            return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
        }
        if !(prior_precision > 0.0 && prior_precision.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "prior precision must be positive, got {prior_precision}"
            )));
        }
        let design_norm_squared = spectral_norm_squared(&design, POWER_ITERATION_TOLERANCE, POWER_ITERATION_MAX)?;
        // sup Φ'' = 1/4 for the logistic cumulant.
        let bounds = ConvexityBounds::new(prior_precision, 0.25 * design_norm_squared + prior_precision)?;
        Ok(Self {
            design,
            labels,
            prior_precision,
            design_norm_squared,
            bounds,
        })
    }

    pub fn from_dataset(data: &Dataset, prior_precision: f64) -> Result<Self> {
        Self::new(data.features.clone(), data.labels.clone(), prior_precision)
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    pub fn prior_precision(&self) -> f64 {
        self.prior_precision
    }

    /// `‖A‖₂²` as estimated at construction.
    pub fn design_norm_squared(&self) -> f64 {
        self.design_norm_squared
    }

    /// Diagonal weights `Φ''(aᵢᵀx) = σ(t)(1 - σ(t))` of the Hessian.
    pub fn hessian_weights(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_point(self.dim(), x)?;
        Ok((&self.design * x).map(|t| {
            let s = sigmoid(t);
            s * (1.0 - s)
        }))
    }
}

impl TargetDensity for LogisticRegressionTarget {
    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_point(self.dim(), x)?;
        let t = &self.design * x;
        let likelihood: f64 = t.iter().zip(self.labels.iter()).map(|(&t, &b)| softplus(t) - b * t).sum();
        Ok(likelihood + 0.5 * self.prior_precision * x.norm_squared())
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_point(self.dim(), x)?;
        let t = &self.design * x;
        let residual = DVector::from_fn(t.len(), |i, _| sigmoid(t[i]) - self.labels[i]);
        Ok(self.design.tr_mul(&residual) + self.prior_precision * x)
    }

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let weights = self.hessian_weights(x)?;
        let mut weighted = self.design.clone();
        for (mut row, w) in weighted.row_iter_mut().zip(weights.iter()) {
            row *= *w;
        }
        let mut h = self.design.tr_mul(&weighted);
        for i in 0..h.nrows() {
            h[(i, i)] += self.prior_precision;
        }
        Ok(symmetrized(h))
    }

    fn convexity_bounds(&self) -> ConvexityBounds {
        self.bounds
    }
}

/// Which field of a data row holds the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    Index(usize),
    #[default]
    Last,
}

/// A binary-classification dataset: one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        ensure_dim(features.nrows(), labels.len())?;
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn from_path(path: &std::path::Path, label_column: LabelColumn) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file), label_column)
    }

    /// Parses comma-separated rows. A first line that does not parse as
    /// numbers is treated as a header. Labels are coerced to `{0, 1}`:
    /// values already in `{0, 1}` are kept, any other pair of distinct
    /// values is mapped smaller → 0 and larger → 1.
    pub fn from_reader<R: BufRead>(reader: R, label_column: LabelColumn) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut labels = Vec::new();
        let mut width = None;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            let values = match parsed {
                Ok(v) => v,
                Err(_) if rows.is_empty() && width.is_none() => {
                    width = Some(fields.len());
                    continue;
                }
                Err(e) => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("non-numeric field: {e}"),
                    })
                }
            };
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    line: line_no,
                    message: "non-finite value".into(),
                });
            }
            match width {
                Some(w) if w != values.len() => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {w} fields, found {}", values.len()),
                    })
                }
                _ => width = Some(values.len()),
            }
            let label_column = match label_column {
                LabelColumn::Index(i) if i < values.len() => i,
                LabelColumn::Index(i) => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("label column {i} out of range for {} fields", values.len()),
                    })
                }
                LabelColumn::Last => values.len() - 1,
            };
            if values.len() < 2 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "row has no feature columns".into(),
                });
            }
            let mut features = values;
            labels.push((features.remove(label_column), line_no));
            rows.push(features);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "dataset contains no observations".into(),
            });
        }

        let mut distinct: Vec<f64> = labels.iter().map(|(v, _)| *v).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let already_binary = distinct.iter().all(|&v| v == 0.0 || v == 1.0);
        if !already_binary && distinct.len() != 2 {
            let offending = labels
                .iter()
                .find(|(v, _)| *v != 0.0 && *v != 1.0)
                .map(|(_, l)| *l)
                .unwrap_or(0);
            return Err(Error::Parse {
                line: offending,
                message: format!("labels are not binary ({} distinct values)", distinct.len()),
            });
        }
        let coerce = |v: f64| {
            if already_binary {
                v
            } else if v == distinct[0] {
                0.0
            } else {
                1.0
            }
        };

        let n = rows.len();
        let d = rows[0].len();
        let features = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
        let labels = DVector::from_iterator(n, labels.iter().map(|(v, _)| coerce(*v)));
        Ok(Self { features, labels })
    }

    /// Centers each feature column and scales it to unit sample variance
    /// (constant columns are only centered), then optionally appends an
    /// intercept column of ones.
    pub fn standardized(&self, intercept: bool) -> Dataset {
        let n = self.features.nrows();
        let d = self.features.ncols();
        let mut out = DMatrix::zeros(n, d + usize::from(intercept));
        for j in 0..d {
            let col = self.features.column(j);
            let mean = col.mean();
            let var = if n > 1 {
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
            for i in 0..n {
                out[(i, j)] = (col[i] - mean) / scale;
            }
        }
        if intercept {
            out.column_mut(d).fill(1.0);
        }
        Dataset {
            features: out,
            labels: self.labels.clone(),
        }
    }

    /// Synthetic logistic data with correlated Gaussian features and labels
    /// drawn from a logistic model with a random coefficient vector. With
    /// `separable`, labels are the sign of the linear predictor instead.
    pub fn synthetic(n: usize, d: usize, seed: u64, separable: bool) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coef = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut features = DMatrix::zeros(n, d);
        let mut labels = DVector::zeros(n);
        for i in 0..n {
            let common: f64 = rng.sample(StandardNormal);
            for j in 0..d {
                let own: f64 = rng.sample(StandardNormal);
                features[(i, j)] = 0.6 * common + own * (1.0 + j as f64 / d as f64);
            }
            let t = features.row(i).transpose().dot(&coef);
            labels[i] = if separable {
                f64::from(u8::from(t > 0.0))
            } else {
                f64::from(u8::from(rng.random::<f64>() < sigmoid(t)))
            };
        }
        Dataset { features, labels }
    }
}
