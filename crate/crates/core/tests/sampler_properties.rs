use implicit_langevin::experiment::correlation_target;
use implicit_langevin::optim::{gradient_descent_solve, newton_solve, SolveProblem, Solver};
use implicit_langevin::samplers::{explicit_predictor, iila_step, subproblem_gradient, Subproblem};
use implicit_langevin::{run_chain, Dataset, LogisticRegressionTarget, NoiseStream, SamplerConfig, TargetDensity};
use nalgebra::DVector;
use proptest::prelude::*;

fn logistic() -> LogisticRegressionTarget {
    let data = Dataset::synthetic(150, 5, 8, false).standardized(true);
    LogisticRegressionTarget::from_dataset(&data, 1.0).unwrap()
}

#[test]
fn implicit_chains_stay_bounded_for_every_step_size() {
    let d = 10;
    let target = correlation_target(d, 100.0, 4).unwrap();
    let x0 = DVector::from_element(d, 2.0);
    for theta in [0.5, 0.75, 1.0] {
        for h in [1.0, 10.0, 100.0, 1000.0] {
            let chain = run_chain(&target, &x0, &SamplerConfig::new(theta, h, 10_000, 1).unwrap()).unwrap();
            assert!(!chain.diverged);
            assert!(chain.max_norm() < 100.0 * (d as f64).sqrt(), "theta {theta}, h {h}");
        }
    }
}

#[test]
fn inexact_chain_on_logistic_meets_tolerance_every_step() {
    let target = logistic();
    let config = SamplerConfig::new(0.5, 0.3, 300, 6).unwrap().with_tolerance(1e-9).unwrap();
    let chain = run_chain(&target, &DVector::zeros(target.dim()), &config).unwrap();
    assert_eq!(chain.len(), 301);
    assert!(chain.gradient_norms.iter().all(|&g| g <= 1e-9));
    assert!(chain.solver_iterations.iter().all(|&n| n >= 1));
}

#[test]
fn common_random_numbers_across_configurations() {
    let target = logistic();
    let x0 = DVector::zeros(target.dim());
    let a = run_chain(&target, &x0, &SamplerConfig::new(0.0, 0.01, 5, 99).unwrap()).unwrap();
    let b = run_chain(&target, &x0, &SamplerConfig::new(1.0, 2.0, 5, 99).unwrap()).unwrap();
    assert_eq!(a.first_noise, b.first_noise);
    let stream = NoiseStream::new(99, target.dim());
    for (k, z) in a.first_noise.iter().enumerate() {
        assert_eq!(z, &stream.noise(k as u64));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every converged solve re-checks its own gradient, and the two inner
    /// solvers land in the same `2ε/μ_F` ball.
    #[test]
    fn solvers_meet_tolerance_and_agree(
        seed in 0u64..10_000,
        theta in 0.1f64..1.0,
        log_h in -2.0f64..2.0,
        x_scale in 0.0f64..3.0,
    ) {
        let target = logistic();
        let h = 10f64.powf(log_h);
        let d = target.dim();
        let x = DVector::from_fn(d, |i, _| x_scale * ((i as f64 + seed as f64).sin()));
        let z = NoiseStream::new(seed, d).noise(0);
        let v = explicit_predictor(&target, &x, &z, theta, h).unwrap();
        let bounds = target.convexity_bounds();
        let (mu, lip) = (theta * bounds.lower + 2.0 / h, theta * bounds.upper + 2.0 / h);
        let objective = Subproblem { target: &target, center: v.clone(), theta, step_size: h };
        let eps = 1e-9;
        let problem = SolveProblem::new(&objective, mu, lip, v.clone(), eps).unwrap();
        let newton = newton_solve(&problem).unwrap();
        prop_assert!(newton.converged);
        let g = subproblem_gradient(&target, &newton.solution, &v, theta, h).unwrap();
        prop_assert!(g.norm() <= eps);

        let gd = gradient_descent_solve(&problem).unwrap();
        prop_assert!(gd.converged);
        prop_assert!((&gd.solution - &newton.solution).norm() <= 2.0 * eps / mu);

        let config = SamplerConfig::new(theta, h, 1, seed).unwrap()
            .with_tolerance(eps).unwrap()
            .with_solver(Solver::GradientDescent);
        let (step, stats) = iila_step(&target, &x, &z, &config).unwrap();
        prop_assert!(stats.gradient_norm <= eps);
        prop_assert!((&step - &newton.solution).norm() <= 2.0 * eps / mu);
    }
}
