//! Implicit Langevin samplers for strongly log-concave densities.
//!
//! The θ-method discretisation of the overdamped Langevin diffusion
//! interpolates between the explicit unadjusted Langevin algorithm
//! (`θ = 0`) and fully implicit Euler (`θ = 1`). For `θ ≥ 1/2` the
//! resulting chains are stable for every step size, and each step reduces
//! to a strongly convex proximal subproblem.
//!
//! Modules:
//!
//! - [`targets`]: log-density contract, Gaussian and logistic-regression targets
//! - [`matrixgen`]: random correlation matrices with a prescribed spectrum
//! - [`optim`]: Newton and gradient-descent inner solvers
//! - [`samplers`]: ULA, closed-form and inexact implicit steps, chains, transition density
//! - [`theory`]: contraction constants, Wasserstein bound, large-step asymptotics, step-size heuristic
//! - [`diagnostics`]: MMTV (KDE + Gauss–Kronrod) and MMD discrepancies
//! - [`experiment`]: benchmark harness behind the `ila` binary

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod matrixgen;
pub mod optim;
pub mod samplers;
pub mod targets;
pub mod theory;

pub use error::{Error, Result};
pub use samplers::{run_chain, NoiseStream, SamplerConfig, StepMethod, Trajectory};
pub use targets::{ConvexityBounds, Dataset, LabelColumn, GaussianTarget, LogisticRegressionTarget, TargetDensity};
