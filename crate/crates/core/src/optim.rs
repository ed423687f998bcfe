//! Strongly convex inner solvers.
//!
//! Both solvers stop on the gradient-norm criterion `‖g(x)‖ ≤ ε`, which is
//! the only accuracy contract the inexact sampler relies on. Running out of
//! iterations is reported through [`SolveResult::converged`], never by
//! silently returning a poor iterate as if it were good.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dim, Error, Result};

pub const NEWTON_MAX_ITERATIONS: usize = 100;
pub const GRADIENT_DESCENT_MAX_ITERATIONS: usize = 10_000;

const ARMIJO_FACTOR: f64 = 1e-4;
const BACKTRACK_RATIO: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

/// Gradient and Hessian oracles of a smooth, strongly convex objective.
pub trait SmoothObjective: Sync {
    fn dim(&self) -> usize;
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
}

/// Adapter turning a pair of closures into a [`SmoothObjective`].
pub struct FnObjective<G, H> {
    dim: usize,
    gradient: G,
    hessian: H,
}

impl<G, H> FnObjective<G, H>
where
    G: Fn(&DVector<f64>) -> DVector<f64> + Sync,
    H: Fn(&DVector<f64>) -> DMatrix<f64> + Sync,
{
    pub fn new(dim: usize, gradient: G, hessian: H) -> Self {
        Self { dim, gradient, hessian }
    }
}

impl<G, H> SmoothObjective for FnObjective<G, H>
where
    G: Fn(&DVector<f64>) -> DVector<f64> + Sync,
    H: Fn(&DVector<f64>) -> DMatrix<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok((self.gradient)(x))
    }

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok((self.hessian)(x))
    }
}

/// A single strongly convex root-finding problem `g(x) = 0`.
pub struct SolveProblem<'a> {
    pub objective: &'a dyn SmoothObjective,
    /// Strong-convexity modulus of the objective.
    pub strong_convexity: f64,
    /// Lipschitz modulus of the gradient.
    pub lipschitz: f64,
    pub start: DVector<f64>,
    pub tolerance: f64,
    /// `None` selects the solver's default cap.
    pub max_iterations: Option<usize>,
}

impl<'a> SolveProblem<'a> {
    pub fn new(
        objective: &'a dyn SmoothObjective,
        strong_convexity: f64,
        lipschitz: f64,
        start: DVector<f64>,
        tolerance: f64,
    ) -> Result<Self> {
        if !(strong_convexity > 0.0 && strong_convexity.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "strong convexity modulus must be positive, got {strong_convexity}"
            )));
        }
        if !(lipschitz >= strong_convexity && lipschitz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lipschitz modulus {lipschitz} must be finite and at least {strong_convexity}"
            )));
        }
        if !(tolerance >= 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be non-negative, got {tolerance}")));
        }
        ensure_dim(objective.dim(), start.len())?;
        Ok(Self {
            objective,
            strong_convexity,
            lipschitz,
            start,
            tolerance,
            max_iterations: None,
        })
    }

    pub fn with_max_iterations(mut self, cap: usize) -> Self {
        self.max_iterations = Some(cap);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solution: DVector<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Inner solver selection for the inexact sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    #[default]
    Newton,
    GradientDescent,
}

impl Solver {
    pub fn solve(self, problem: &SolveProblem<'_>) -> Result<SolveResult> {
        match self {
            Solver::Newton => newton_solve(problem),
            Solver::GradientDescent => gradient_descent_solve(problem),
        }
    }
}

/// Damped Newton iteration with backtracking on `‖g‖²`.
///
/// The Newton direction `p = -H⁻¹g` satisfies `d/dα ‖g(x + αp)‖² = -2‖g‖²`
/// at `α = 0`, so the sufficient-decrease test is
/// `‖g(x + αp)‖² ≤ (1 - 2cα)‖g(x)‖²`.
pub fn newton_solve(problem: &SolveProblem<'_>) -> Result<SolveResult> {
    let cap = problem.max_iterations.unwrap_or(NEWTON_MAX_ITERATIONS);
    let objective = problem.objective;
    let mut x = problem.start.clone();
    let mut g = objective.gradient(&x)?;
    let mut g_norm2 = g.norm_squared();
    let mut iterations = 0;

    loop {
        if g_norm2.sqrt() <= problem.tolerance {
            return Ok(SolveResult {
                solution: x,
                gradient_norm: g_norm2.sqrt(),
                iterations,
                converged: true,
            });
        }
        if iterations >= cap || !g_norm2.is_finite() {
            break;
        }

        let hessian = objective.hessian(&x)?;
        let chol = hessian
            .cholesky()
            .ok_or_else(|| Error::NumericalFailure("Newton system is not positive definite".into()))?;
        let step = -chol.solve(&g);

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate = &x + alpha * &step;
            let g_new = objective.gradient(&candidate)?;
            let norm2 = g_new.norm_squared();
            if norm2 <= (1.0 - 2.0 * ARMIJO_FACTOR * alpha) * g_norm2 {
                accepted = Some((candidate, g_new, norm2));
                break;
            }
            alpha *= BACKTRACK_RATIO;
        }
        iterations += 1;
        match accepted {
            Some((candidate, g_new, norm2)) => {
                x = candidate;
                g = g_new;
                g_norm2 = norm2;
            }
            // No decrease is attainable at working precision.
            None => break,
        }
    }

    log::debug!(
        "newton stopped after {iterations} iterations with gradient norm {:e}",
        g_norm2.sqrt()
    );
    Ok(SolveResult {
        solution: x,
        gradient_norm: g_norm2.sqrt(),
        iterations,
        converged: false,
    })
}

/// Fixed-step gradient descent with step `2/(μ + L)`.
pub fn gradient_descent_solve(problem: &SolveProblem<'_>) -> Result<SolveResult> {
    let cap = problem.max_iterations.unwrap_or(GRADIENT_DESCENT_MAX_ITERATIONS);
    let step = 2.0 / (problem.strong_convexity + problem.lipschitz);
    let mut x = problem.start.clone();
    let mut g = problem.objective.gradient(&x)?;
    let mut iterations = 0;

    while g.norm() > problem.tolerance {
        if iterations >= cap || !g.norm().is_finite() {
            return Ok(SolveResult {
                gradient_norm: g.norm(),
                solution: x,
                iterations,
                converged: false,
            });
        }
        x.axpy(-step, &g, 1.0);
        g = problem.objective.gradient(&x)?;
        iterations += 1;
    }

    Ok(SolveResult {
        gradient_norm: g.norm(),
        solution: x,
        iterations,
        converged: true,
    })
}
