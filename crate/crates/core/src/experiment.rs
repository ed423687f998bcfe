//! Benchmark harness: discrepancy-versus-step-size studies on Gaussian and
//! logistic-regression targets, the step-size heuristic, and transition
//! kernel contours. Everything here returns data; the `ila` binary only
//! parses flags and writes the results.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::diagnostics::{BandwidthRule, Reference, SampleSet, MEDIAN_SEED};
use crate::error::{Error, Result};
use crate::matrixgen::{random_correlation, write_matrix_csv, SpectralModel};
use crate::samplers::{iila_step, run_chain, ula_step, SamplerConfig, DEFAULT_TOLERANCE};
use crate::targets::{find_mode, Dataset, GaussianTarget, LabelColumn, LogisticRegressionTarget, TargetDensity};
use crate::theory::{heuristic_objective, step_size_heuristic};

pub const DEFAULT_DIM: usize = 100;
pub const DEFAULT_KAPPA: f64 = 100.0;
pub const DEFAULT_SAMPLES: usize = 5000;
pub const DEFAULT_STEP_COUNT: usize = 20;
pub const DEFAULT_THETAS: [f64; 3] = [0.0, 0.5, 1.0];
pub const DEFAULT_SEED: u64 = 1;
/// Environment variable consulted by the binary for the default seed.
pub const SEED_ENV: &str = "ILA_SEED";
pub const DEFAULT_PRIOR_PRECISION: f64 = 1.0;
/// Thinning of the explicit (`θ = 0`) comparator in the logistic study.
pub const ULA_THIN: usize = 50;
pub const REFERENCE_THIN: usize = 10;
/// The logistic reference chain runs at `ĥ_{1/2}` divided by this.
pub const REFERENCE_STEP_DIVISOR: f64 = 10.0;
pub const DEFAULT_CONTOUR_POINTS: usize = 101;
/// Contour grids extend this many proposal standard deviations from the centre.
pub const CONTOUR_HALF_WIDTH: f64 = 6.0;
pub const CSV_HEADER: &str = "theta,h,mmtv,mmd2,diverged";
pub const CONTOUR_HEADER: &str = "theta,h,x,y,log_density";

/// Exact reference draws use this noise stream so they never coincide with
/// the chain noise, which occupies streams `0, 1, 2, ...`.
const REFERENCE_STREAM: u64 = u64::MAX;
/// Mixed into the seed for the random correlation matrix.
const MATRIX_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

/// Step sizes for a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum StepGrid {
    Explicit(Vec<f64>),
    /// Log-spaced between `min` and `max`; missing ends take the study's defaults.
    LogSpaced {
        min: Option<f64>,
        max: Option<f64>,
        count: usize,
    },
}

impl Default for StepGrid {
    fn default() -> Self {
        StepGrid::LogSpaced {
            min: None,
            max: None,
            count: DEFAULT_STEP_COUNT,
        }
    }
}

impl StepGrid {
    /// Sorted, deduplicated, strictly positive step sizes.
    pub fn resolve(&self, default_min: f64, default_max: f64) -> Result<Vec<f64>> {
        let mut hs = match self {
            StepGrid::Explicit(hs) => hs.clone(),
            StepGrid::LogSpaced { min, max, count } => {
                log_spaced(min.unwrap_or(default_min), max.unwrap_or(default_max), *count)?
            }
        };
        if hs.is_empty() {
            return Err(Error::InvalidArgument("step-size grid is empty".into()));
        }
        if hs.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidArgument("step sizes must be positive and finite".into()));
        }
        hs.sort_by(f64::total_cmp);
        hs.dedup();
        Ok(hs)
    }
}

/// `count` points evenly spaced in `log h` from `min` to `max` inclusive.
pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 < h_min <= h_max, got ({min}, {max})")));
    }
    match count {
        0 => Err(Error::InvalidArgument("step count must be at least 1".into())),
        1 => Ok(vec![min]),
        _ => {
            let (a, b) = (min.ln(), max.ln());
            Ok((0..count)
                .map(|k| match k {
                    0 => min,
                    k if k == count - 1 => max,
                    k => (a + (b - a) * k as f64 / (count - 1) as f64).exp(),
                })
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dim: usize,
    /// Condition number of the Gaussian correlation matrix.
    pub kappa: f64,
    /// Smallest eigenvalue for the heuristic's spectral model.
    pub lower: f64,
    pub thetas: Vec<f64>,
    pub steps: StepGrid,
    /// Samples per chain after burn-in.
    pub samples: usize,
    pub burn_in: usize,
    /// Inner-solver gradient tolerance `ε`.
    pub tolerance: f64,
    pub seed: u64,
    /// Thinning: all chains in the Gaussian study, the `θ = 0` comparator in
    /// the logistic study.
    pub thin: Option<usize>,
    pub dataset: Option<PathBuf>,
    pub label_column: LabelColumn,
    /// Prior precision `λ` of the logistic model.
    pub lambda: f64,
    pub reference_steps: Option<usize>,
    pub reference_thin: usize,
    pub reference_step_size: Option<f64>,
    pub bandwidth_rule: BandwidthRule,
    /// Explicit Hessian spectrum for the heuristic.
    pub eigenvalues: Option<Vec<f64>>,
    /// Source point of the contour plot.
    pub source: Option<Vec<f64>>,
    pub contour_points: usize,
    pub matrix_out: Option<PathBuf>,
    pub trajectory_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            kappa: DEFAULT_KAPPA,
            lower: 1.0,
            thetas: DEFAULT_THETAS.to_vec(),
            steps: StepGrid::default(),
            samples: DEFAULT_SAMPLES,
            burn_in: 0,
            tolerance: DEFAULT_TOLERANCE,
            seed: DEFAULT_SEED,
            thin: None,
            dataset: None,
            label_column: LabelColumn::Last,
            lambda: DEFAULT_PRIOR_PRECISION,
            reference_steps: None,
            reference_thin: REFERENCE_THIN,
            reference_step_size: None,
            bandwidth_rule: BandwidthRule::MedianDistance,
            eigenvalues: None,
            source: None,
            contour_points: DEFAULT_CONTOUR_POINTS,
            matrix_out: None,
            trajectory_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.thetas.is_empty() {
            return bad("no theta values given".into());
        }
        if let Some(t) = self.thetas.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return bad(format!("theta must lie in [0, 1], got {t}"));
        }
        if self.samples < 2 {
            return bad(format!("need at least 2 samples, got {}", self.samples));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be at least 1, got {}", self.kappa));
        }
        if !(self.lower > 0.0 && self.lower.is_finite()) {
            return bad(format!("smallest eigenvalue must be positive, got {}", self.lower));
        }
        if !(self.tolerance >= 0.0) {
            return bad(format!("tolerance must be non-negative, got {}", self.tolerance));
        }
        if self.thin == Some(0) || self.reference_thin == 0 {
            return bad("thinning factors must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("prior precision must be positive, got {}", self.lambda));
        }
        if self.contour_points < 2 {
            return bad("contour grid needs at least 2 points per axis".into());
        }
        Ok(())
    }

    fn sorted_thetas(&self) -> Vec<f64> {
        let mut t = self.thetas.clone();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("expected 'key = value', found '{line}'"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(Error::Parse {
                line: idx + 1,
                message: "empty key".into(),
            });
        }
        entries.push((key.to_string(), value.to_string()));
    }
    Ok(entries)
}

/// One `(θ, h)` grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub theta: f64,
    pub h: f64,
    /// `NaN` when the chain diverged.
    pub mmtv: f64,
    pub mmd2: f64,
    pub diverged: bool,
    /// Leading noise vectors the chain consumed.
    pub first_noise: Vec<DVector<f64>>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFailure {
    pub theta: f64,
    pub h: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    /// Sorted by `(θ, h)`.
    pub rows: Vec<GridRow>,
    pub failures: Vec<GridFailure>,
    pub lower: f64,
    pub upper: f64,
    /// `ĥ_{1/2}` for the target.
    pub heuristic_step: f64,
}

impl ExperimentOutput {
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_rows(out, &self.rows)
    }
}

pub fn write_rows<W: Write>(mut out: W, rows: &[GridRow]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.theta,
            r.h,
            r.mmtv,
            r.mmd2,
            u8::from(r.diverged)
        )?;
    }
    Ok(())
}

/// Opens `path` for writing. Existing files are replaced only with `overwrite`.
pub fn create_output(path: &Path, overwrite: bool) -> Result<File> {
    let mut options = OpenOptions::new();
    options.write(true);
    if overwrite {
        options.create(true).truncate(true);
    } else {
        options.create_new(true);
    }
    options.open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            Error::InvalidArgument(format!("{} exists; pass --overwrite to replace it", path.display()))
        } else {
            Error::Io(e)
        }
    })
}

/// Runs every `(θ, h)` chain from `x0` and scores it against `reference`.
/// Divergence gives a row of `NaN` discrepancies; other failures are
/// collected separately.
fn sweep<T, F>(
    target: &T,
    x0: &DVector<f64>,
    config: &ExperimentConfig,
    reference: &Reference,
    hs: &[f64],
    thin_for: F,
) -> (Vec<GridRow>, Vec<GridFailure>)
where
    T: TargetDensity + ?Sized,
    F: Fn(f64) -> usize + Sync,
{
    let points: Vec<(f64, f64)> = config
        .sorted_thetas()
        .into_iter()
        .flat_map(|t| hs.iter().map(move |&h| (t, h)))
        .collect();
    let results: Vec<Result<GridRow>> = points
        .par_iter()
        .map(|&(theta, h)| grid_point(target, x0, config, reference, theta, h, thin_for(theta)))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for ((theta, h), result) in points.into_iter().zip(results) {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => {
                log::error!("theta = {theta}, h = {h:e}: {e}");
                failures.push(GridFailure {
                    theta,
                    h,
                    message: e.to_string(),
                });
            }
        }
    }
    rows.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.h.total_cmp(&b.h)));
    if rows.windows(2).any(|w| w[0].first_noise != w[1].first_noise) {
        log::error!("chains consumed different noise; common random numbers violated");
    }
    (rows, failures)
}

fn grid_point<T: TargetDensity + ?Sized>(
    target: &T,
    x0: &DVector<f64>,
    config: &ExperimentConfig,
    reference: &Reference,
    theta: f64,
    h: f64,
    thin: usize,
) -> Result<GridRow> {
    let sampler = SamplerConfig::new(theta, h, config.samples + config.burn_in, config.seed)?
        .with_tolerance(config.tolerance)?
        .with_thin(thin)?;
    let trajectory = run_chain(target, x0, &sampler)?;
    if let Some(dir) = &config.trajectory_dir {
        let path = dir.join(format!("theta_{theta}_h_{h:.6e}.csv"));
        trajectory.write_csv(std::io::BufWriter::new(File::create(path)?))?;
    }
    let (mmtv, mmd2) = if trajectory.diverged {
        (f64::NAN, f64::NAN)
    } else {
        let set = SampleSet::new(trajectory.after_burn_in(config.burn_in), format!("theta={theta},h={h:e}"))?;
        let report = reference.report(&set)?;
        (report.mmtv, report.mmd2)
    };
    log::info!("theta = {theta}, h = {h:e}: mmtv = {mmtv:.4e}, mmd2 = {mmd2:.4e}, diverged = {}", trajectory.diverged);
    Ok(GridRow {
        theta,
        h,
        mmtv,
        mmd2,
        diverged: trajectory.diverged,
        first_noise: trajectory.first_noise,
        warning: trajectory.warning,
    })
}

/// Zero-mean Gaussian whose covariance is a random correlation matrix with
/// the exponentially decaying spectrum between 1 and `κ`.
pub fn correlation_target(dim: usize, kappa: f64, seed: u64) -> Result<GaussianTarget> {
    let model = SpectralModel::new(dim, 1.0, kappa)?;
    let sigma = random_correlation(&model.spectrum(), seed ^ MATRIX_SEED_MIX)?;
    GaussianTarget::from_covariance(DVector::zeros(dim), sigma)
}

/// Exact draws from a Gaussian target on a stream disjoint from the chain noise.
pub fn exact_reference_draws(target: &GaussianTarget, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(REFERENCE_STREAM);
    target.sample_exact(n, &mut rng)
}

/// Gaussian study: random correlation target, exact reference sample, and
/// a sweep over `h ∈ [4/(100M), 100ĥ_{1/2}]` by default.
pub fn run_gaussian_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let target = correlation_target(config.dim, config.kappa, config.seed)?;
    if let Some(path) = &config.matrix_out {
        write_matrix_csv(std::io::BufWriter::new(File::create(path)?), target.covariance())?;
    }
    run_gaussian_on_target(&target, config)
}

/// [`run_gaussian_experiment`] for a given target; chains start at the mean.
pub fn run_gaussian_on_target(target: &GaussianTarget, config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let bounds = target.convexity_bounds();
    let heuristic_step = step_size_heuristic(&target.precision_eigenvalues(), 0.5)?;
    let hs = config
        .steps
        .resolve(4.0 / (100.0 * bounds.upper), 100.0 * heuristic_step)?;

    let draws = exact_reference_draws(target, config.samples, config.seed);
    let reference = Reference::new(SampleSet::new(draws, "exact")?, config.bandwidth_rule, MEDIAN_SEED)?;
    let thin = config.thin.unwrap_or(1);
    let (rows, failures) = sweep(target, target.mean(), config, &reference, &hs, |_| thin);
    Ok(ExperimentOutput {
        rows,
        failures,
        lower: bounds.lower,
        upper: bounds.upper,
        heuristic_step,
    })
}

/// Reads, standardises (with an intercept column) and wraps a dataset.
pub fn load_logistic_target(path: &Path, label_column: LabelColumn, lambda: f64) -> Result<LogisticRegressionTarget> {
    let data = Dataset::from_path(path, label_column)?.standardized(true);
    LogisticRegressionTarget::from_dataset(&data, lambda)
}

/// `ĥ_{1/2}` under the exponentially decaying spectrum between `m` and `M`.
fn model_heuristic(dim: usize, lower: f64, upper: f64, theta: f64) -> Result<f64> {
    let spectrum = if dim >= 2 {
        SpectralModel::new(dim, lower, upper)?.spectrum()
    } else {
        vec![upper]
    };
    step_size_heuristic(&spectrum, theta)
}

/// Logistic study on the dataset named in the configuration.
pub fn run_logistic_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let path = config
        .dataset
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("the logistic study needs a dataset".into()))?;
    let target = load_logistic_target(path, config.label_column, config.lambda)?;
    run_logistic_on_target(&target, config)
}

/// Logistic study for a given target. The reference sample is a thinned
/// inexact chain at `θ = 1/2` and `h = ĥ_{1/2}/10` started at the mode;
/// grid chains start at the origin and the `θ = 0` comparator is thinned.
pub fn run_logistic_on_target<T: TargetDensity + ?Sized>(target: &T, config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let d = target.dim();
    let bounds = target.convexity_bounds();
    let heuristic_step = model_heuristic(d, bounds.lower, bounds.upper, 0.5)?;
    let hs = config
        .steps
        .resolve(4.0 / (10.0 * bounds.upper), 100.0 * heuristic_step)?;

    let reference_config = SamplerConfig::new(
        0.5,
        config
            .reference_step_size
            .unwrap_or(heuristic_step / REFERENCE_STEP_DIVISOR),
        config.reference_steps.unwrap_or(config.samples),
        config.seed ^ MATRIX_SEED_MIX,
    )?
    .with_tolerance(config.tolerance)?
    .with_thin(config.reference_thin)?;
    let mode = find_mode(target)?;
    let reference_chain = run_chain(target, &mode, &reference_config)?;
    if reference_chain.diverged {
        return Err(Error::NumericalFailure("reference chain diverged".into()));
    }
    let reference = Reference::new(
        SampleSet::new(reference_chain.after_burn_in(0), "reference")?,
        config.bandwidth_rule,
        MEDIAN_SEED,
    )?;

    let ula_thin = config.thin.unwrap_or(ULA_THIN);
    let (rows, failures) = sweep(target, &DVector::zeros(d), config, &reference, &hs, |theta| {
        if theta == 0.0 {
            ula_thin
        } else {
            1
        }
    });
    Ok(ExperimentOutput {
        rows,
        failures,
        lower: bounds.lower,
        upper: bounds.upper,
        heuristic_step,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicResult {
    pub theta: f64,
    pub step_size: f64,
    /// Objective value at the returned step size.
    pub objective: f64,
}

/// Step-size heuristic for each configured `θ` on the explicit spectrum, or
/// on the exponentially decaying model between `m` and `κm`.
pub fn run_heuristic(config: &ExperimentConfig) -> Result<Vec<HeuristicResult>> {
    config.validate()?;
    let spectrum = match &config.eigenvalues {
        Some(eigs) => eigs.clone(),
        None => SpectralModel::new(config.dim, config.lower, config.lower * config.kappa)?.spectrum(),
    };
    config
        .sorted_thetas()
        .into_iter()
        .map(|theta| {
            let step_size = step_size_heuristic(&spectrum, theta)?;
            let objective = heuristic_objective(&spectrum, theta, step_size);
            log::info!("theta = {theta}: h = {step_size:.16e}, objective = {objective:.6e}");
            Ok(HeuristicResult {
                theta,
                step_size,
                objective,
            })
        })
        .collect()
}

/// Transition log-density on a square grid for one `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourGrid {
    pub theta: f64,
    pub h: f64,
    pub source: DVector<f64>,
    /// Noise-free image of the source, at the centre of the grid.
    pub centre: DVector<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `log_density[(i, j)]` is `log p((xs[i], ys[j]) | source)`.
    pub log_density: DMatrix<f64>,
}

impl ContourGrid {
    pub fn spacing(&self) -> (f64, f64) {
        (self.xs[1] - self.xs[0], self.ys[1] - self.ys[0])
    }
}

pub fn write_contours<W: Write>(mut out: W, grids: &[ContourGrid]) -> std::io::Result<()> {
    writeln!(out, "{CONTOUR_HEADER}")?;
    for g in grids {
        for (i, x) in g.xs.iter().enumerate() {
            for (j, y) in g.ys.iter().enumerate() {
                writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    g.theta,
                    g.h,
                    x,
                    y,
                    g.log_density[(i, j)]
                )?;
            }
        }
    }
    Ok(())
}

/// Evaluates the one-step transition density from `source` on a
/// `points × points` grid centred at the noise-free step, wide enough to
/// hold the proposal along its flattest direction.
pub fn kernel_contour<T: TargetDensity + ?Sized>(
    target: &T,
    source: &DVector<f64>,
    theta: f64,
    h: f64,
    points: usize,
) -> Result<ContourGrid> {
    if target.dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "contours need a 2-dimensional target, got {}",
            target.dim()
        )));
    }
    if points < 2 {
        return Err(Error::InvalidArgument("contour grid needs at least 2 points per axis".into()));
    }
    let zero = DVector::zeros(2);
    let centre = if theta == 0.0 {
        ula_step(target, source, &zero, h)?
    } else {
        let config = SamplerConfig::new(theta, h, 1, 0)?.with_tolerance(1e-12)?;
        iila_step(target, source, &zero, &config)?.0
    };
    let lower = target.convexity_bounds().lower;
    let half = CONTOUR_HALF_WIDTH * h.sqrt() / (1.0 + 0.5 * h * theta * lower);
    let axis = |c: f64| -> Vec<f64> {
        (0..points)
            .map(|k| c - half + 2.0 * half * k as f64 / (points - 1) as f64)
            .collect()
    };
    let (xs, ys) = (axis(centre[0]), axis(centre[1]));
    let mut log_density = DMatrix::zeros(points, points);
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let point = DVector::from_vec(vec![x, y]);
            log_density[(i, j)] = crate::samplers::transition_log_density(target, &point, source, theta, h)?;
        }
    }
    Ok(ContourGrid {
        theta,
        h,
        source: source.clone(),
        centre,
        xs,
        ys,
        log_density,
    })
}

/// Contours for each configured `θ` at the first configured step size
/// (default 1). The target is the logistic posterior when a dataset is
/// given, otherwise a 2-dimensional correlation Gaussian with condition
/// number `κ`.
pub fn run_kernel_contour(config: &ExperimentConfig) -> Result<Vec<ContourGrid>> {
    config.validate()?;
    let h = match &config.steps {
        StepGrid::Explicit(hs) => *hs
            .first()
            .ok_or_else(|| Error::InvalidArgument("step-size list is empty".into()))?,
        StepGrid::LogSpaced { min, .. } => min.unwrap_or(1.0),
    };
    let source = DVector::from_vec(config.source.clone().unwrap_or_else(|| vec![1.0, 1.0]));
    let target: Box<dyn TargetDensity> = match &config.dataset {
        Some(path) => Box::new(load_logistic_target(path, config.label_column, config.lambda)?),
        None => Box::new(correlation_target(2, config.kappa, config.seed)?),
    };
    config
        .sorted_thetas()
        .into_iter()
        .map(|theta| kernel_contour(target.as_ref(), &source, theta, h, config.contour_points))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_spaced_grid() {
        let g = log_spaced(1e-3, 10.0, 5).unwrap();
        assert_eq!((g[0], g[4]), (1e-3, 10.0));
        assert!((g[2] - 0.1).abs() < 1e-15);
        assert_eq!(log_spaced(2.0, 3.0, 1).unwrap(), vec![2.0]);
        assert!(log_spaced(0.0, 1.0, 3).is_err());
        assert!(log_spaced(1.0, 0.5, 3).is_err());
        assert!(log_spaced(1.0, 2.0, 0).is_err());
    }

    #[test]
    fn explicit_grid_sorted_and_checked() {
        let g = StepGrid::Explicit(vec![3.0, 1.0, 3.0]).resolve(0.0, 0.0).unwrap();
        assert_eq!(g, vec![1.0, 3.0]);
        assert!(StepGrid::Explicit(vec![1.0, -1.0]).resolve(0.0, 0.0).is_err());
        assert!(StepGrid::Explicit(vec![]).resolve(0.0, 0.0).is_err());
        let d = StepGrid::LogSpaced {
            min: Some(0.5),
            max: None,
            count: 2,
        };
        assert_eq!(d.resolve(0.1, 8.0).unwrap(), vec![0.5, 8.0]);
    }

    #[test]
    fn config_file_parsing() {
        let text = "# study\ndim = 10\n\ntheta = 0.5 # trapezoidal\nout=x.csv\n";
        let kv = parse_config(text).unwrap();
        assert_eq!(
            kv,
            vec![
                ("dim".to_string(), "10".to_string()),
                ("theta".to_string(), "0.5".to_string()),
                ("out".to_string(), "x.csv".to_string()),
            ]
        );
        match parse_config("dim = 3\nbogus\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_config(" = 4").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = [
            ExperimentConfig {
                thetas: vec![1.5],
                ..Default::default()
            },
            ExperimentConfig {
                samples: 1,
                ..Default::default()
            },
            ExperimentConfig {
                kappa: 0.5,
                ..Default::default()
            },
            ExperimentConfig {
                thin: Some(0),
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn csv_rows_use_full_precision() {
        let rows = vec![GridRow {
            theta: 0.5,
            h: 0.1,
            mmtv: f64::NAN,
            mmd2: 1.0 / 3.0,
            diverged: true,
            first_noise: vec![],
            warning: None,
        }];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields[0].parse::<f64>().unwrap(), 0.5);
        assert_eq!(fields[1].parse::<f64>().unwrap(), 0.1);
        assert_eq!(fields[2], "NaN");
        assert_eq!(fields[3].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(fields[4], "1");
    }

    #[test]
    fn output_refuses_to_clobber() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        create_output(&path, false).unwrap();
        assert!(matches!(create_output(&path, false), Err(Error::InvalidArgument(_))));
        assert!(create_output(&path, true).is_ok());
    }

    #[test]
    fn heuristic_examples() {
        let unit = ExperimentConfig {
            dim: 5,
            kappa: 1.0,
            thetas: vec![0.5],
            ..Default::default()
        };
        let r = run_heuristic(&unit).unwrap();
        assert!((r[0].step_size - 4.0).abs() < 1e-6);
        let spectrum = SpectralModel::new(20, 1.0, 50.0).unwrap().spectrum();
        let model = ExperimentConfig {
            dim: 20,
            kappa: 50.0,
            thetas: vec![0.5, 1.0],
            ..Default::default()
        };
        let explicit = ExperimentConfig {
            eigenvalues: Some(spectrum),
            ..model.clone()
        };
        assert_eq!(run_heuristic(&model).unwrap(), run_heuristic(&explicit).unwrap());
        let zero = ExperimentConfig {
            thetas: vec![0.0],
            ..unit
        };
        assert!(run_heuristic(&zero).is_err());
    }
}
