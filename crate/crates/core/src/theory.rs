//! Closed-form quantities describing the θ-method chains.
//!
//! Contraction constants and the 2-Wasserstein bound for strongly convex
//! targets with curvature in `[m, M]`, the large-step deterministic map
//! `x ↦ xᶿ` and its Gaussian fluctuation covariance, the stationary
//! covariance of the chain on Gaussian targets, and the spectral step-size
//! heuristic.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dim, Error, Result};
use crate::matrixgen::{exp_decay_spectrum, SpectralModel};
use crate::optim::{newton_solve, SmoothObjective, SolveProblem};
use crate::targets::{find_mode, symmetrized, TargetDensity};

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("theta must lie in [0, 1], got {theta}")))
    }
}

fn check_curvature(lower: f64, upper: f64) -> Result<()> {
    if lower > 0.0 && upper >= lower && upper.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("need 0 < m <= M < inf, got ({lower}, {upper})")))
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step size must be positive and finite, got {h}")))
    }
}

/// Condition number of the step subproblem, `(1 + θhM/2) / (1 + θhm/2)`.
pub fn condition_number_kappa(theta: f64, h: f64, lower: f64, upper: f64) -> f64 {
    (1.0 + 0.5 * theta * h * upper) / (1.0 + 0.5 * theta * h * lower)
}

/// Step size at which the contraction rate switches branch: the positive
/// root of `½θ(1-θ)mM h² + ½(1-2θ)(m+M) h - 2 = 0`, defined for `θ ∈ (0, 1)`.
pub fn h_star(theta: f64, lower: f64, upper: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("h* is defined for theta in (0, 1), got {theta}")));
    }
    check_curvature(lower, upper)?;
    let b = (theta - 0.5) * (upper + lower);
    let root = (b * b + 4.0 * theta * (1.0 - theta) * lower * upper).sqrt();
    // Pick the cancellation-free form for each sign of b.
    Ok(if b >= 0.0 {
        (b + root) / (theta * (1.0 - theta) * lower * upper)
    } else {
        4.0 / (root - b)
    })
}

/// Which branch of the contraction analysis applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `h ≤ h*` or `θ = 1`.
    Small,
    /// `h > h*` (and `h < 4/(M(1-2θ))` when `θ < 1/2`).
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionParams {
    pub rho: f64,
    pub constant: f64,
    pub regime: Regime,
    pub kappa: f64,
}

/// Contraction factor `ρ`, bias constant `C`, regime and `κ_h`.
///
/// At `θ = 0` the switch point is the limit `4/(M+m)` and the small-step
/// constant `κ_h/(θm)` is infinite.
pub fn contraction(theta: f64, h: f64, lower: f64, upper: f64) -> Result<ContractionParams> {
    check_theta(theta)?;
    check_step(h)?;
    check_curvature(lower, upper)?;
    let kappa = condition_number_kappa(theta, h, lower, upper);
    let switch = if theta == 0.0 {
        4.0 / (upper + lower)
    } else if theta < 1.0 {
        h_star(theta, lower, upper)?
    } else {
        f64::INFINITY
    };

    if h <= switch {
        let rho = (1.0 - 0.5 * h * (1.0 - theta) * lower) / (1.0 + 0.5 * h * theta * lower);
        let constant = if theta == 0.0 { f64::INFINITY } else { kappa / (theta * lower) };
        return Ok(ContractionParams {
            rho,
            constant,
            regime: Regime::Small,
            kappa,
        });
    }
    if theta < 0.5 {
        let limit = 4.0 / (upper * (1.0 - 2.0 * theta));
        if h >= limit {
            return Err(Error::OutOfRegime(format!(
                "theta = {theta} < 1/2 requires h < 4/(M(1-2θ)) = {limit}, got h = {h}"
            )));
        }
    }
    let rho = (0.5 * h * (1.0 - theta) * upper - 1.0) / (0.5 * h * theta * upper + 1.0);
    let constant = 0.5 * kappa * kappa * h / (2.0 + 0.5 * h * (2.0 * theta - 1.0) * upper);
    Ok(ContractionParams {
        rho,
        constant,
        regime: Regime::Large,
        kappa,
    })
}

/// Inputs to the non-asymptotic Wasserstein bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSetting {
    pub theta: f64,
    pub step_size: f64,
    /// Subproblem gradient tolerance `ε`.
    pub tolerance: f64,
    pub lower: f64,
    pub upper: f64,
    pub dim: usize,
}

impl BoundSetting {
    /// `min{2M√(hd)(2 + √(hM)), 4√(Md)}`.
    pub fn discretization_term(&self) -> f64 {
        let (h, big_m, d) = (self.step_size, self.upper, self.dim as f64);
        let first = 2.0 * big_m * (h * d).sqrt() * (2.0 + (h * big_m).sqrt());
        let second = 4.0 * (big_m * d).sqrt();
        first.min(second)
    }

    /// The `t → ∞` limit of the bound: `C(ε + discretization term)`.
    pub fn asymptotic_bias(&self) -> Result<f64> {
        let c = contraction(self.theta, self.step_size, self.lower, self.upper)?;
        Ok(c.constant * (self.tolerance + self.discretization_term()))
    }
}

/// `W₂(ν_t, π) ≤ κ_h ρᵗ W₂(ν₀, π) + C(ε + min{2M√(hd)(2+√(hM)), 4√(Md)})`.
pub fn w2_bound(setting: &BoundSetting, t: u32, w2_initial: f64) -> Result<f64> {
    let c = contraction(setting.theta, setting.step_size, setting.lower, setting.upper)?;
    let transient = if w2_initial == 0.0 {
        0.0
    } else {
        c.kappa * c.rho.powi(t as i32) * w2_initial
    };
    Ok(transient + c.constant * (setting.tolerance + setting.discretization_term()))
}

struct ShiftedGradient<'a, T: ?Sized> {
    target: &'a T,
    shift: DVector<f64>,
}

impl<T: TargetDensity + ?Sized> SmoothObjective for ShiftedGradient<'_, T> {
    fn dim(&self) -> usize {
        self.shift.len()
    }

    fn gradient(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.target.gradient(u)? - &self.shift)
    }

    fn hessian(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.target.hessian(u)
    }
}

pub const THETA_MAP_TOLERANCE: f64 = 1e-10;

/// Large-step limit map: the unique `xᶿ` with `∇f(xᶿ) = (1 - 1/θ)∇f(x)`.
pub fn theta_map<T: TargetDensity + ?Sized>(target: &T, x: &DVector<f64>, theta: f64) -> Result<DVector<f64>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("theta map needs theta in (0, 1], got {theta}")));
    }
    ensure_dim(target.dim(), x.len())?;
    let bounds = target.convexity_bounds();
    let objective = ShiftedGradient {
        target,
        shift: (1.0 - 1.0 / theta) * target.gradient(x)?,
    };
    let solve_from = |start: DVector<f64>| -> Result<_> {
        let problem = SolveProblem::new(&objective, bounds.lower, bounds.upper, start, THETA_MAP_TOLERANCE)?;
        newton_solve(&problem)
    };
    let first = solve_from(x.clone())?;
    if first.converged {
        return Ok(first.solution);
    }
    let second = solve_from(find_mode(target)?)?;
    if second.converged {
        Ok(second.solution)
    } else {
        Err(Error::NumericalFailure(format!(
            "theta map did not converge (gradient norm {:e})",
            second.gradient_norm
        )))
    }
}

/// Covariance of the `h → ∞` fluctuations `√h(X₁ - xᶿ)`: `(4/θ²) H⁻²` with
/// `H = ∇²f(xᶿ)`.
pub fn asymptotic_covariance<T: TargetDensity + ?Sized>(target: &T, x: &DVector<f64>, theta: f64) -> Result<DMatrix<f64>> {
    let image = theta_map(target, x, theta)?;
    let hess = target.hessian(&image)?;
    let inv = hess
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("Hessian at the theta map is not positive definite".into()))?
        .inverse();
    Ok(symmetrized((4.0 / (theta * theta)) * &inv * &inv))
}

/// Stationary covariance `Σ(I + (h/2)(θ - ½)Σ⁻¹)⁻¹` of the θ-method on
/// `N(μ, Σ)`.
pub fn gaussian_stationary_covariance(covariance: &DMatrix<f64>, theta: f64, h: f64) -> Result<DMatrix<f64>> {
    check_theta(theta)?;
    check_step(h)?;
    let d = covariance.nrows();
    ensure_dim(d, covariance.ncols())?;
    let precision = covariance
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into()))?
        .inverse();
    let adjustment = symmetrized(DMatrix::identity(d, d) + (0.5 * h * (theta - 0.5)) * precision);
    let chol = adjustment.cholesky().ok_or_else(|| {
        Error::OutOfRegime(format!(
            "I + (h/2)(θ - 1/2)Q is not positive definite for theta = {theta}, h = {h}"
        ))
    })?;
    Ok(symmetrized(chol.solve(covariance).transpose()))
}

/// `Σ_k [h(1 + hθλ_k/2)⁻² - 1/λ_k]²`.
pub fn heuristic_objective(eigenvalues: &[f64], theta: f64, h: f64) -> f64 {
    eigenvalues
        .iter()
        .map(|&lambda| {
            let damp = 1.0 + 0.5 * h * theta * lambda;
            let r = h / (damp * damp) - 1.0 / lambda;
            r * r
        })
        .sum()
}

const LOG_BRACKET: (f64, f64) = (-8.0, 8.0);
const SCAN_POINTS: usize = 161;
const MAX_BRACKET_EXPANSIONS: usize = 5;
/// Relative tolerance in `h`, converted to an absolute width in log10 space.
const HEURISTIC_RELATIVE_TOLERANCE: f64 = 1e-8;

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Step size minimising the Frobenius mismatch between the large-step
/// proposal covariance `h(I + (hθ/2)H)⁻²` and the Laplace covariance `H⁻¹`,
/// given the spectrum of `H`.
///
/// A coarse scan over `log10 h ∈ [-8, 8]` locates the basins, golden-section
/// search refines each local minimum of the scan, and the bracket grows when
/// the best scan point sits on an endpoint.
pub fn step_size_heuristic(eigenvalues: &[f64], theta: f64) -> Result<f64> {
    if eigenvalues.is_empty() || eigenvalues.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("eigenvalues must be positive and finite".into()));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "step-size heuristic needs theta in (0, 1], got {theta}"
        )));
    }
    let objective = |log_h: f64| heuristic_objective(eigenvalues, theta, 10f64.powf(log_h));
    let tol = HEURISTIC_RELATIVE_TOLERANCE / std::f64::consts::LN_10;
    let (mut lo, mut hi) = LOG_BRACKET;

    for _ in 0..=MAX_BRACKET_EXPANSIONS {
        let spacing = (hi - lo) / (SCAN_POINTS - 1) as f64;
        let grid = |k: usize| lo + spacing * k as f64;
        let best = (0..SCAN_POINTS)
            .map(|k| (k, objective(grid(k))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
            .expect("non-empty scan");
        if best == 0 {
            lo -= hi - lo;
        } else if best == SCAN_POINTS - 1 {
            hi += hi - lo;
        } else {
            // Basins can be narrower than the scan spacing, so refine every
            // interior local minimum and keep the best.
            let values: Vec<f64> = (0..SCAN_POINTS).map(|k| objective(grid(k))).collect();
            let log_h = (1..SCAN_POINTS - 1)
                .filter(|&k| values[k] <= values[k - 1] && values[k] <= values[k + 1])
                .map(|k| golden_section(objective, grid(k - 1), grid(k + 1), tol))
                .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
                .expect("interior scan minimum");
            return Ok(10f64.powf(log_h));
        }
    }
    Err(Error::NumericalFailure(format!(
        "heuristic minimiser still on the bracket edge after {MAX_BRACKET_EXPANSIONS} expansions"
    )))
}

/// [`step_size_heuristic`] applied to the exponentially decaying spectrum.
pub fn step_size_heuristic_model(model: &SpectralModel, theta: f64) -> Result<f64> {
    step_size_heuristic(&exp_decay_spectrum(model), theta)
}
