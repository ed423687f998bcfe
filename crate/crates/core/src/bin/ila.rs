//! Command-line front end for the experiment harness.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use implicit_langevin::diagnostics::BandwidthRule;
use implicit_langevin::experiment::{self, ExperimentConfig, StepGrid, SEED_ENV};
use implicit_langevin::{Error, LabelColumn, Result};

#[derive(Parser, Debug)]
#[command(name = "ila", version, about = "Implicit Langevin sampler experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discrepancy sweep on a random correlation Gaussian.
    Gaussian(Options),
    /// Discrepancy sweep on a Bayesian logistic regression posterior.
    Logistic(Options),
    /// Step-size heuristic for a spectrum.
    Heuristic(Options),
    /// Transition-kernel log-density on a 2-D grid.
    Contour(Options),
}

#[derive(Args, Debug, Clone, Default)]
struct Options {
    /// Theta value; repeat for several.
    #[arg(long = "theta")]
    theta: Vec<f64>,
    /// Explicit step size; repeat for several. Overrides the range flags.
    #[arg(long = "h")]
    h: Vec<f64>,
    #[arg(long)]
    h_min: Option<f64>,
    #[arg(long)]
    h_max: Option<f64>,
    #[arg(long)]
    h_count: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Smallest Hessian eigenvalue for the heuristic's spectral model.
    #[arg(long)]
    lower: Option<f64>,
    /// Samples per chain after burn-in.
    #[arg(long)]
    samples: Option<usize>,
    /// Inner-solver gradient tolerance.
    #[arg(long)]
    eps: Option<f64>,
    /// Random seed; falls back to the config file, then the environment.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Thinning (all chains for gaussian, the theta = 0 chains for logistic).
    #[arg(long)]
    thin: Option<usize>,
    /// Comma-separated data file.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Zero-based label column; defaults to the last column.
    #[arg(long)]
    label_col: Option<usize>,
    /// Prior precision of the logistic model.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    reference_steps: Option<usize>,
    #[arg(long)]
    reference_thin: Option<usize>,
    #[arg(long)]
    reference_h: Option<f64>,
    /// Use squared distances in the median bandwidth heuristic.
    #[arg(long)]
    squared_median: bool,
    /// Eigenvalue file (whitespace or comma separated) for the heuristic.
    #[arg(long)]
    spectrum: Option<PathBuf>,
    /// Contour source point, e.g. `--source 1,-0.5`.
    #[arg(long, value_delimiter = ',')]
    source: Vec<f64>,
    /// Grid points per axis for contours.
    #[arg(long)]
    grid: Option<usize>,
    /// Write the Gaussian covariance matrix here.
    #[arg(long)]
    matrix_out: Option<PathBuf>,
    /// Write every chain to a CSV file in this directory.
    #[arg(long)]
    trajectory_dir: Option<PathBuf>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    overwrite: bool,
    /// File of `key = value` lines using the long flag names; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Options {
    /// Fills every unset field from `file`.
    fn or(self, file: Options) -> Options {
        fn pick<T>(a: Vec<T>, b: Vec<T>) -> Vec<T> {
            if a.is_empty() {
                b
            } else {
                a
            }
        }
        Options {
            theta: pick(self.theta, file.theta),
            h: pick(self.h, file.h),
            h_min: self.h_min.or(file.h_min),
            h_max: self.h_max.or(file.h_max),
            h_count: self.h_count.or(file.h_count),
            dim: self.dim.or(file.dim),
            kappa: self.kappa.or(file.kappa),
            lower: self.lower.or(file.lower),
            samples: self.samples.or(file.samples),
            eps: self.eps.or(file.eps),
            seed: self.seed.or(file.seed),
            burn_in: self.burn_in.or(file.burn_in),
            thin: self.thin.or(file.thin),
            dataset: self.dataset.or(file.dataset),
            label_col: self.label_col.or(file.label_col),
            lambda: self.lambda.or(file.lambda),
            reference_steps: self.reference_steps.or(file.reference_steps),
            reference_thin: self.reference_thin.or(file.reference_thin),
            reference_h: self.reference_h.or(file.reference_h),
            squared_median: self.squared_median || file.squared_median,
            spectrum: self.spectrum.or(file.spectrum),
            source: pick(self.source, file.source),
            grid: self.grid.or(file.grid),
            matrix_out: self.matrix_out.or(file.matrix_out),
            trajectory_dir: self.trajectory_dir.or(file.trajectory_dir),
            out: self.out.or(file.out),
            overwrite: self.overwrite || file.overwrite,
            config: self.config,
        }
    }

    /// Reads the config file, if any, through the same flag parser.
    fn with_config_file(self, subcommand: &str) -> Result<Options> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)?;
        let mut argv = vec!["ila".to_string(), subcommand.to_string()];
        for (key, value) in experiment::parse_config(&text)? {
            let flag = format!("--{}", key.replace('_', "-"));
            match value.as_str() {
                "true" => argv.push(flag),
                "false" => {}
                _ => {
                    // Lists such as `theta = 0, 0.5, 1` become repeated flags.
                    let repeatable = matches!(key.as_str(), "theta" | "h");
                    let parts: Vec<&str> = if repeatable {
                        value.split(',').map(str::trim).collect()
                    } else {
                        vec![value.as_str()]
                    };
                    for part in parts {
                        argv.push(flag.clone());
                        argv.push(part.to_string());
                    }
                }
            }
        }
        let file = Cli::try_parse_from(&argv)
            .map_err(|e| Error::InvalidArgument(format!("{}: {}", path.display(), e.render().to_string().trim())))?;
        let file = match file.command {
            Command::Gaussian(o) | Command::Logistic(o) | Command::Heuristic(o) | Command::Contour(o) => o,
        };
        Ok(self.or(file))
    }

    fn to_config(&self, default_thetas: &[f64]) -> Result<ExperimentConfig> {
        let defaults = ExperimentConfig::default();
        let steps = if !self.h.is_empty() {
            StepGrid::Explicit(self.h.clone())
        } else {
            StepGrid::LogSpaced {
                min: self.h_min,
                max: self.h_max,
                count: self.h_count.unwrap_or(experiment::DEFAULT_STEP_COUNT),
            }
        };
        let eigenvalues = match &self.spectrum {
            Some(path) => Some(read_spectrum(path)?),
            None => None,
        };
        Ok(ExperimentConfig {
            dim: self.dim.unwrap_or(defaults.dim),
            kappa: self.kappa.unwrap_or(defaults.kappa),
            lower: self.lower.unwrap_or(defaults.lower),
            thetas: if self.theta.is_empty() {
                default_thetas.to_vec()
            } else {
                self.theta.clone()
            },
            steps,
            samples: self.samples.unwrap_or(defaults.samples),
            burn_in: self.burn_in.unwrap_or(defaults.burn_in),
            tolerance: self.eps.unwrap_or(defaults.tolerance),
            seed: match self.seed {
                Some(seed) => seed,
                None => seed_from_env()?.unwrap_or(defaults.seed),
            },
            thin: self.thin,
            dataset: self.dataset.clone(),
            label_column: self.label_col.map_or(LabelColumn::Last, LabelColumn::Index),
            lambda: self.lambda.unwrap_or(defaults.lambda),
            reference_steps: self.reference_steps,
            reference_thin: self.reference_thin.unwrap_or(defaults.reference_thin),
            reference_step_size: self.reference_h,
            bandwidth_rule: if self.squared_median {
                BandwidthRule::MedianSquaredDistance
            } else {
                BandwidthRule::MedianDistance
            },
            eigenvalues,
            source: (!self.source.is_empty()).then(|| self.source.clone()),
            contour_points: self.grid.unwrap_or(defaults.contour_points),
            matrix_out: self.matrix_out.clone(),
            trajectory_dir: self.trajectory_dir.clone(),
        })
    }
}

fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| Error::InvalidArgument(format!("{SEED_ENV}={v}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn read_spectrum(path: &PathBuf) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        for token in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            values.push(token.parse::<f64>().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("bad eigenvalue '{token}': {e}"),
            })?);
        }
    }
    Ok(values)
}

/// Writes to the requested file only once the data is complete.
fn emit(options: &Options, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match &options.out {
        Some(path) => {
            let file = experiment::create_output(path, options.overwrite)?;
            let mut out = std::io::BufWriter::new(file);
            write(&mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            write(&mut out)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gaussian(o) => {
            let o = o.with_config_file("gaussian")?;
            let output = experiment::run_gaussian_experiment(&o.to_config(&experiment::DEFAULT_THETAS)?)?;
            log::info!("m = {}, M = {}, h_1/2 = {:.6e}", output.lower, output.upper, output.heuristic_step);
            emit(&o, |w| output.write_csv(w))?;
            Ok(output.failures.is_empty())
        }
        Command::Logistic(o) => {
            let o = o.with_config_file("logistic")?;
            let output = experiment::run_logistic_experiment(&o.to_config(&experiment::DEFAULT_THETAS)?)?;
            log::info!("m = {}, M = {}, h_1/2 = {:.6e}", output.lower, output.upper, output.heuristic_step);
            emit(&o, |w| output.write_csv(w))?;
            Ok(output.failures.is_empty())
        }
        Command::Heuristic(o) => {
            let o = o.with_config_file("heuristic")?;
            let results = experiment::run_heuristic(&o.to_config(&[0.5])?)?;
            emit(&o, |w| {
                writeln!(w, "theta,h,objective")?;
                for r in &results {
                    writeln!(w, "{:.16e},{:.16e},{:.16e}", r.theta, r.step_size, r.objective)?;
                }
                Ok(())
            })?;
            Ok(true)
        }
        Command::Contour(o) => {
            let o = o.with_config_file("contour")?;
            let grids = experiment::run_kernel_contour(&o.to_config(&experiment::DEFAULT_THETAS)?)?;
            emit(&o, |w| experiment::write_contours(w, &grids))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some grid points failed; see the log");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
