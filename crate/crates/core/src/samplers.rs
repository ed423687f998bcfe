//! θ-method Langevin samplers.
//!
//! One step of the θ-method for `dX = -½∇f(X)dt + dW` reads
//!
//! ```text
//! X' = X - (h/2)[θ∇f(X') + (1-θ)∇f(X)] + √h Z
//! ```
//!
//! For `θ = 0` this is the explicit unadjusted Langevin algorithm. For
//! `θ > 0` the new point is the minimiser of the strongly convex function
//! `θf(u) + (1/h)‖u - v‖²` with `v = X - (h(1-θ)/2)∇f(X) + √h Z`, which
//! Gaussian targets solve in closed form and other targets solve
//! approximately to the gradient tolerance `ε`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::optim::{SmoothObjective, SolveProblem, Solver};
use crate::targets::{GaussianTarget, TargetDensity};

/// Iterates with a norm beyond this are treated as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Number of leading noise vectors a trajectory keeps for auditing.
pub const RECORDED_NOISE_VECTORS: usize = 3;

/// How `run_chain` advances the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepMethod {
    /// Explicit for `θ = 0`, closed form for Gaussian targets, inexact solve otherwise.
    #[default]
    Auto,
    /// Closed-form implicit step; Gaussian targets only.
    ClosedForm,
    /// Inexact implicit step even when a closed form exists.
    Inexact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub theta: f64,
    pub step_size: f64,
    /// Subproblem gradient tolerance.
    pub tolerance: f64,
    /// Number of recorded steps.
    pub steps: usize,
    pub seed: u64,
    /// Transitions per recorded step.
    pub thin: usize,
    pub solver: Solver,
    pub method: StepMethod,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

impl SamplerConfig {
    pub fn new(theta: f64, step_size: f64, steps: usize, seed: u64) -> Result<Self> {
        let config = Self {
            theta,
            step_size,
            tolerance: DEFAULT_TOLERANCE,
            steps,
            seed,
            thin: 1,
            solver: Solver::Newton,
            method: StepMethod::Auto,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        self.tolerance = tolerance;
        self.validate()?;
        Ok(self)
    }

    pub fn with_thin(mut self, thin: usize) -> Result<Self> {
        self.thin = thin;
        self.validate()?;
        Ok(self)
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_method(mut self, method: StepMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidArgument(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {}", self.step_size)));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be non-negative, got {}", self.tolerance)));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument("thinning factor must be at least 1".into()));
        }
        Ok(())
    }

    /// Warns when `θ < 1/2` and `h ≥ 4m / (M²(1 - 2θ))`, beyond which
    /// geometric ergodicity is no longer guaranteed.
    pub fn stability_warning(&self, lower: f64, upper: f64) -> Option<String> {
        if self.theta >= 0.5 {
            return None;
        }
        let limit = 4.0 * lower / (upper * upper * (1.0 - 2.0 * self.theta));
        (self.step_size >= limit).then(|| {
            format!(
                "step size {} is at or above the stability limit {limit} for theta = {}",
                self.step_size, self.theta
            )
        })
    }
}

/// Standard Gaussian noise indexed by step: `Z_k` depends only on
/// `(seed, k)`, so chains sharing a seed consume identical noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    seed: u64,
    dim: usize,
}

impl NoiseStream {
    pub fn new(seed: u64, dim: usize) -> Self {
        Self { seed, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fill(&self, step: u64, out: &mut DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(step);
        out.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
    }

    pub fn noise(&self, step: u64) -> DVector<f64> {
        let mut z = DVector::zeros(self.dim);
        self.fill(step, &mut z);
        z
    }
}

/// Chain output: row `k` holds the `k`-th recorded iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: DMatrix<f64>,
    /// Inner-solver iterations per recorded step (summed over thinning).
    pub solver_iterations: Vec<usize>,
    /// Largest achieved subproblem gradient norm per recorded step.
    pub gradient_norms: Vec<f64>,
    pub diverged: bool,
    pub warning: Option<String>,
    /// The first few noise vectors the chain consumed.
    pub first_noise: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn sample(&self, k: usize) -> DVector<f64> {
        self.samples.row(k).transpose()
    }

    /// Rows after the initial point and the first `burn_in` iterates.
    pub fn after_burn_in(&self, burn_in: usize) -> DMatrix<f64> {
        let start = (1 + burn_in).min(self.len());
        self.samples.rows(start, self.len() - start).into_owned()
    }

    pub fn max_norm(&self) -> f64 {
        self.samples.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        crate::matrixgen::write_matrix_csv(out, &self.samples)
    }
}

/// Explicit Euler step `x - (h/2)∇f(x) + √h z`.
pub fn ula_step<T: TargetDensity + ?Sized>(target: &T, x: &DVector<f64>, z: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    ensure_dim(x.len(), z.len())?;
    let grad = target.gradient(x)?;
    Ok(x - (0.5 * h) * grad + h.sqrt() * z)
}

/// `v = x - (h(1-θ)/2)∇f(x) + √h z`, the centre of the proximity term.
pub fn explicit_predictor<T: TargetDensity + ?Sized>(
    target: &T,
    x: &DVector<f64>,
    z: &DVector<f64>,
    theta: f64,
    h: f64,
) -> Result<DVector<f64>> {
    ensure_dim(x.len(), z.len())?;
    let mut v = x + h.sqrt() * z;
    if theta < 1.0 {
        v.axpy(-0.5 * h * (1.0 - theta), &target.gradient(x)?, 1.0);
    }
    Ok(v)
}

/// Gradient of `θf(u) + (1/h)‖u - v‖²`, i.e. `θ∇f(u) + (2/h)(u - v)`.
pub fn subproblem_gradient<T: TargetDensity + ?Sized>(
    target: &T,
    u: &DVector<f64>,
    v: &DVector<f64>,
    theta: f64,
    h: f64,
) -> Result<DVector<f64>> {
    ensure_dim(u.len(), v.len())?;
    let mut g = (2.0 / h) * (u - v);
    if theta > 0.0 {
        g.axpy(theta, &target.gradient(u)?, 1.0);
    }
    Ok(g)
}

/// The implicit-step subproblem as a smooth objective in `u`.
pub struct Subproblem<'a, T: ?Sized> {
    pub target: &'a T,
    pub center: DVector<f64>,
    pub theta: f64,
    pub step_size: f64,
}

impl<T: TargetDensity + ?Sized> SmoothObjective for Subproblem<'_, T> {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn gradient(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        subproblem_gradient(self.target, u, &self.center, self.theta, self.step_size)
    }

    fn hessian(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mut hess = self.theta * self.target.hessian(u)?;
        for i in 0..hess.nrows() {
            hess[(i, i)] += 2.0 / self.step_size;
        }
        Ok(hess)
    }
}

/// Precomputed closed-form θ-step for a Gaussian target:
/// `X' = μ + (I + (hθ/2)Q)⁻¹[(I - (h(1-θ)/2)Q)(X - μ) + √h Z]`.
#[derive(Debug, Clone)]
pub struct GaussianStepper {
    mean: DVector<f64>,
    drift: DMatrix<f64>,
    noise_gain: DMatrix<f64>,
}

impl GaussianStepper {
    pub fn new(target: &GaussianTarget, theta: f64, h: f64) -> Result<Self> {
        let d = target.dim();
        let q = target.precision();
        let identity = DMatrix::<f64>::identity(d, d);
        let implicit = &identity + (0.5 * h * theta) * q;
        let explicit = &identity - (0.5 * h * (1.0 - theta)) * q;
        // LU keeps diagonal systems exact, which the trapezoidal identity
        // X' = Z (Q = I, h = 4) relies on.
        let lu = implicit.lu();
        let drift = lu
            .solve(&explicit)
            .ok_or_else(|| Error::NumericalFailure("implicit step matrix is singular".into()))?;
        let noise_gain = lu
            .solve(&(h.sqrt() * DMatrix::identity(d, d)))
            .ok_or_else(|| Error::NumericalFailure("implicit step matrix is singular".into()))?;
        Ok(Self {
            mean: target.mean().clone(),
            drift,
            noise_gain,
        })
    }

    pub fn step(&self, x: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        &self.mean + &self.drift * (x - &self.mean) + &self.noise_gain * z
    }
}

/// Closed-form θ-step for a Gaussian target. `θ = 0` is routed through
/// [`ula_step`] so both paths agree exactly.
pub fn ila_step_gaussian(
    target: &GaussianTarget,
    x: &DVector<f64>,
    z: &DVector<f64>,
    theta: f64,
    h: f64,
) -> Result<DVector<f64>> {
    ensure_dim(target.dim(), x.len())?;
    ensure_dim(target.dim(), z.len())?;
    if theta == 0.0 {
        return ula_step(target, x, z, h);
    }
    Ok(GaussianStepper::new(target, theta, h)?.step(x, z))
}

/// Per-step inner solver statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// Inexact implicit step: returns `x̂` with `‖θ∇f(x̂) + (2/h)(x̂ - v)‖ ≤ ε`,
/// warm-started at `v`. `θ = 0` uses the explicit step directly.
pub fn iila_step<T: TargetDensity + ?Sized>(
    target: &T,
    x: &DVector<f64>,
    z: &DVector<f64>,
    config: &SamplerConfig,
) -> Result<(DVector<f64>, StepStats)> {
    let (theta, h) = (config.theta, config.step_size);
    if theta == 0.0 {
        let next = ula_step(target, x, z, h)?;
        return Ok((
            next,
            StepStats {
                iterations: 0,
                gradient_norm: 0.0,
            },
        ));
    }
    if !(config.tolerance > 0.0) {
        return Err(Error::InvalidArgument("inexact steps need a positive tolerance".into()));
    }
    let center = explicit_predictor(target, x, z, theta, h)?;
    let bounds = target.convexity_bounds();
    let subproblem = Subproblem {
        target,
        center: center.clone(),
        theta,
        step_size: h,
    };
    let problem = SolveProblem::new(
        &subproblem,
        theta * bounds.lower + 2.0 / h,
        theta * bounds.upper + 2.0 / h,
        center,
        config.tolerance,
    )?;
    let result = config.solver.solve(&problem)?;
    if !result.converged {
        return Err(Error::SolverNonConvergence {
            step: 0,
            gradient_norm: result.gradient_norm,
            iterations: result.iterations,
        });
    }
    Ok((
        result.solution,
        StepStats {
            iterations: result.iterations,
            gradient_norm: result.gradient_norm,
        },
    ))
}

/// `log p(y | x)` for one θ-step:
/// `log det(I + (hθ/2)∇²f(y)) + log φ(y + (hθ/2)∇f(y); x - (h(1-θ)/2)∇f(x), hI)`.
pub fn transition_log_density<T: TargetDensity + ?Sized>(
    target: &T,
    y: &DVector<f64>,
    x: &DVector<f64>,
    theta: f64,
    h: f64,
) -> Result<f64> {
    ensure_dim(target.dim(), y.len())?;
    ensure_dim(target.dim(), x.len())?;
    let d = y.len();
    let mut log_det = 0.0;
    let mut image = y.clone();
    if theta > 0.0 {
        let mut jac = (0.5 * h * theta) * target.hessian(y)?;
        for i in 0..d {
            jac[(i, i)] += 1.0;
        }
        let chol = jac
            .cholesky()
            .ok_or_else(|| Error::NumericalFailure("step Jacobian is not positive definite".into()))?;
        log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        image.axpy(0.5 * h * theta, &target.gradient(y)?, 1.0);
    }
    let mut mean = x.clone();
    if theta < 1.0 {
        mean.axpy(-0.5 * h * (1.0 - theta), &target.gradient(x)?, 1.0);
    }
    let r2 = (image - mean).norm_squared();
    let log_phi = -0.5 * d as f64 * (2.0 * std::f64::consts::PI * h).ln() - r2 / (2.0 * h);
    Ok(log_det + log_phi)
}

enum Stepper<'a, T: ?Sized> {
    Explicit(&'a T),
    Closed(GaussianStepper),
    Inexact(&'a T),
}

/// Runs `config.steps` recorded steps from `x0`.
///
/// The chain is truncated and flagged as diverged as soon as an iterate
/// leaves the ball of radius [`DIVERGENCE_THRESHOLD`]. Inner-solver
/// failure aborts the chain with [`Error::SolverNonConvergence`].
pub fn run_chain<T: TargetDensity + ?Sized>(target: &T, x0: &DVector<f64>, config: &SamplerConfig) -> Result<Trajectory> {
    config.validate()?;
    let d = target.dim();
    ensure_dim(d, x0.len())?;
    ensure_finite(x0.as_slice(), "initial point")?;

    let stepper = match (config.method, target.as_gaussian()) {
        (_, _) if config.theta == 0.0 => Stepper::Explicit(target),
        (StepMethod::Auto | StepMethod::ClosedForm, Some(g)) => {
            Stepper::Closed(GaussianStepper::new(g, config.theta, config.step_size)?)
        }
        (StepMethod::ClosedForm, None) => {
            return Err(Error::InvalidArgument("closed-form steps need a Gaussian target".into()))
        }
        _ => Stepper::Inexact(target),
    };
    let bounds = target.convexity_bounds();
    let warning = config.stability_warning(bounds.lower, bounds.upper);
    if let Some(w) = &warning {
        log::warn!("{w}");
    }

    let noise = NoiseStream::new(config.seed, d);
    let mut z = DVector::zeros(d);
    let mut x = x0.clone();
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(config.steps + 1);
    rows.push(x.clone());
    let mut solver_iterations = Vec::with_capacity(config.steps);
    let mut gradient_norms = Vec::with_capacity(config.steps);
    let mut first_noise = Vec::new();
    let mut diverged = false;
    let mut transition: u64 = 0;

    'outer: for step in 0..config.steps {
        let mut iterations = 0;
        let mut worst_norm: f64 = 0.0;
        for _ in 0..config.thin {
            noise.fill(transition, &mut z);
            if first_noise.len() < RECORDED_NOISE_VECTORS {
                first_noise.push(z.clone());
            }
            transition += 1;
            x = match &stepper {
                Stepper::Explicit(t) => ula_step(*t, &x, &z, config.step_size)?,
                Stepper::Closed(s) => s.step(&x, &z),
                Stepper::Inexact(t) => {
                    let (next, stats) = iila_step(*t, &x, &z, config).map_err(|e| match e {
                        Error::SolverNonConvergence {
                            gradient_norm,
                            iterations,
                            ..
                        } => Error::SolverNonConvergence {
                            step,
                            gradient_norm,
                            iterations,
                        },
                        other => other,
                    })?;
                    iterations += stats.iterations;
                    worst_norm = worst_norm.max(stats.gradient_norm);
                    next
                }
            };
            let norm = x.norm();
            if !(norm <= DIVERGENCE_THRESHOLD) {
                diverged = true;
                rows.push(x.clone());
                solver_iterations.push(iterations);
                gradient_norms.push(worst_norm);
                break 'outer;
            }
        }
        rows.push(x.clone());
        solver_iterations.push(iterations);
        gradient_norms.push(worst_norm);
    }
    if diverged {
        log::info!("chain diverged after {} recorded steps", rows.len() - 1);
    }

    let mut samples = DMatrix::zeros(rows.len(), d);
    for (i, r) in rows.iter().enumerate() {
        samples.row_mut(i).tr_copy_from(r);
    }
    Ok(Trajectory {
        samples,
        solver_iterations,
        gradient_norms,
        diverged,
        warning,
        first_noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::LogisticRegressionTarget;
    use approx::assert_abs_diff_eq;

    fn gaussian_1d(lambda: f64) -> GaussianTarget {
        GaussianTarget::from_precision(DVector::zeros(1), DMatrix::from_element(1, 1, lambda)).unwrap()
    }

    fn v1(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn ula_hand_checked() {
        let g = gaussian_1d(1.0);
        assert_eq!(ula_step(&g, &v1(0.0), &v1(0.0), 0.3).unwrap()[0], 0.0);
        assert_eq!(ula_step(&g, &v1(2.0), &v1(0.0), 1.0).unwrap()[0], 1.0);
        assert_eq!(ula_step(&g, &v1(1.7), &v1(0.0), 4.0).unwrap()[0], -1.7);
    }

    #[test]
    fn trapezoidal_step_returns_noise_for_standard_normal() {
        let g = GaussianTarget::standard(3).unwrap();
        let x = DVector::from_vec(vec![5.0, -2.0, 0.1]);
        let z = DVector::from_vec(vec![0.3, -1.1, 2.0]);
        let next = ila_step_gaussian(&g, &x, &z, 0.5, 4.0).unwrap();
        assert_eq!(next, z);
    }

    #[test]
    fn closed_form_theta_zero_is_ula() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let g = GaussianTarget::from_precision(DVector::from_vec(vec![1.0, -1.0]), q).unwrap();
        let x = DVector::from_vec(vec![0.4, 0.9]);
        let z = DVector::from_vec(vec![-0.2, 0.7]);
        assert_eq!(ila_step_gaussian(&g, &x, &z, 0.0, 0.7).unwrap(), ula_step(&g, &x, &z, 0.7).unwrap());
    }

    #[test]
    fn implicit_euler_collapses_to_mean_for_huge_steps() {
        let g = GaussianTarget::from_precision(DVector::from_vec(vec![2.0, -3.0]), DMatrix::identity(2, 2) * 2.0).unwrap();
        let next = ila_step_gaussian(&g, &DVector::from_vec(vec![10.0, 10.0]), &DVector::zeros(2), 1.0, 1e14).unwrap();
        assert!((next - g.mean()).norm() < 1e-10);
    }

    #[test]
    fn inexact_step_matches_closed_form() {
        let q = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let g = GaussianTarget::from_precision(DVector::from_vec(vec![0.5, 0.0]), q).unwrap();
        let x = DVector::from_vec(vec![1.0, -1.0]);
        let z = DVector::from_vec(vec![0.2, 0.4]);
        let config = SamplerConfig::new(0.7, 1.3, 1, 0).unwrap().with_tolerance(1e-10).unwrap();
        let (a, stats) = iila_step(&g, &x, &z, &config).unwrap();
        let b = ila_step_gaussian(&g, &x, &z, 0.7, 1.3).unwrap();
        assert!((a - b).norm() < 1e-8);
        assert!(stats.gradient_norm <= 1e-10);
    }

    #[test]
    fn mode_is_noiseless_fixed_point() {
        let g = gaussian_1d(3.0);
        for theta in [0.25, 0.5, 1.0] {
            let config = SamplerConfig::new(theta, 2.0, 1, 0).unwrap().with_tolerance(1e-9).unwrap();
            let (next, _) = iila_step(&g, &v1(0.0), &v1(0.0), &config).unwrap();
            assert!(next[0].abs() <= 2e-9 / (theta * 3.0 + 1.0));
        }
    }

    #[test]
    fn inexact_logistic_step_matches_bisection() {
        let t = LogisticRegressionTarget::new(
            DMatrix::from_row_slice(3, 1, &[1.0, -0.5, 2.0]),
            DVector::from_vec(vec![1.0, 0.0, 1.0]),
            1.0,
        )
        .unwrap();
        let x = v1(0.8);
        let z = v1(-0.3);
        let config = SamplerConfig::new(1.0, 2.0, 1, 0).unwrap().with_tolerance(1e-12).unwrap();
        let (next, _) = iila_step(&t, &x, &z, &config).unwrap();
        let v = explicit_predictor(&t, &x, &z, 1.0, 2.0).unwrap();
        let g = |u: f64| subproblem_gradient(&t, &v1(u), &v, 1.0, 2.0).unwrap()[0];
        let (mut lo, mut hi) = (-50.0, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        assert!((next[0] - 0.5 * (lo + hi)).abs() < 1e-8);
    }

    #[test]
    fn subproblem_gradient_cases() {
        let g = gaussian_1d(2.0);
        assert_eq!(subproblem_gradient(&g, &v1(0.0), &v1(0.0), 0.5, 1.0).unwrap()[0], 0.0);
        assert_eq!(subproblem_gradient(&g, &v1(3.0), &v1(1.0), 0.0, 0.5).unwrap()[0], 8.0);
    }

    #[test]
    fn transition_density_hand_checked() {
        let g = gaussian_1d(1.0);
        let got = transition_log_density(&g, &v1(0.0), &v1(0.0), 1.0, 2.0).unwrap();
        let want = 2f64.ln() - 0.5 * (2.0 * std::f64::consts::PI * 2.0).ln();
        assert_abs_diff_eq!(got, want, epsilon = 1e-14);

        // θ = 0: Gaussian N(x - (h/2)∇f(x), h) evaluated at y.
        let (x, y, h) = (1.5, -0.3, 0.8);
        let mean = x - 0.5 * h * x;
        let want = -0.5 * (2.0 * std::f64::consts::PI * h).ln() - (y - mean) * (y - mean) / (2.0 * h);
        let got = transition_log_density(&g, &v1(y), &v1(x), 0.0, h).unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-14);
    }

    #[test]
    fn empty_chain_is_initial_point() {
        let g = GaussianTarget::standard(2).unwrap();
        let x0 = DVector::from_vec(vec![1.0, 2.0]);
        let tr = run_chain(&g, &x0, &SamplerConfig::new(0.5, 1.0, 0, 1).unwrap()).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.sample(0), x0);
    }

    #[test]
    fn chain_is_deterministic() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let g = GaussianTarget::from_precision(DVector::zeros(2), q).unwrap();
        let config = SamplerConfig::new(0.5, 0.9, 200, 17).unwrap();
        let a = run_chain(&g, &DVector::zeros(2), &config).unwrap();
        let b = run_chain(&g, &DVector::zeros(2), &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ula_diverges_beyond_stability_limit() {
        let g = gaussian_1d(1.0);
        let config = SamplerConfig::new(0.0, 8.0, 200, 3).unwrap();
        let tr = run_chain(&g, &v1(1.0), &config).unwrap();
        assert!(tr.diverged);
        assert!(tr.len() <= 201);
        assert!(tr.sample(tr.len() - 1).norm() > DIVERGENCE_THRESHOLD);
        assert!(tr.warning.is_some());
    }

    #[test]
    fn theta_zero_dispatch_matches_ula_for_any_method() {
        let t = LogisticRegressionTarget::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -1.0, 2.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            1.0,
        )
        .unwrap();
        let config = SamplerConfig::new(0.0, 0.1, 50, 9).unwrap();
        let a = run_chain(&t, &DVector::zeros(2), &config.clone().with_method(StepMethod::Inexact)).unwrap();
        let noise = NoiseStream::new(9, 2);
        let mut x = DVector::zeros(2);
        for k in 0..50 {
            x = ula_step(&t, &x, &noise.noise(k), 0.1).unwrap();
            assert_eq!(a.sample(k as usize + 1), x);
        }
    }

    #[test]
    fn thinning_consumes_consecutive_noise() {
        let g = GaussianTarget::standard(1).unwrap();
        let thin = SamplerConfig::new(0.0, 0.1, 5, 4).unwrap().with_thin(3).unwrap();
        let full = SamplerConfig::new(0.0, 0.1, 15, 4).unwrap();
        let a = run_chain(&g, &v1(0.0), &thin).unwrap();
        let b = run_chain(&g, &v1(0.0), &full).unwrap();
        for k in 0..=5 {
            assert_eq!(a.sample(k), b.sample(3 * k));
        }
    }

    #[test]
    fn closed_form_requires_gaussian() {
        let t = LogisticRegressionTarget::new(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 1.0), 1.0).unwrap();
        let config = SamplerConfig::new(0.5, 1.0, 3, 0).unwrap().with_method(StepMethod::ClosedForm);
        assert!(run_chain(&t, &v1(0.0), &config).is_err());
    }

    #[test]
    fn noise_stream_is_indexed_by_step() {
        let s = NoiseStream::new(5, 4);
        assert_eq!(s.noise(10), s.noise(10));
        assert_ne!(s.noise(10), s.noise(11));
        assert_ne!(s.noise(10), NoiseStream::new(6, 4).noise(10));
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::new(1.2, 1.0, 1, 0).is_err());
        assert!(SamplerConfig::new(0.5, 0.0, 1, 0).is_err());
        assert!(SamplerConfig::new(0.5, 1.0, 1, 0).unwrap().with_tolerance(-1.0).is_err());
        assert!(SamplerConfig::new(0.5, 1.0, 1, 0).unwrap().with_thin(0).is_err());
        let c = SamplerConfig::new(0.25, 1.0, 1, 0).unwrap();
        // 4m / (M²(1 - 2θ)) = 4 / (4 · 0.5) = 2
        assert!(c.stability_warning(1.0, 2.0).is_none());
        let c = SamplerConfig::new(0.25, 2.0, 1, 0).unwrap();
        assert!(c.stability_warning(1.0, 2.0).is_some());
        assert!(SamplerConfig::new(0.5, 1e9, 1, 0).unwrap().stability_warning(1.0, 2.0).is_none());
    }
}
