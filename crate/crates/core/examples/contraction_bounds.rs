//! Contraction factor, bias constant and Wasserstein bound over step sizes.

use implicit_langevin::theory::{contraction, w2_bound, BoundSetting};

fn main() -> implicit_langevin::Result<()> {
    let (lower, upper) = (1.0, 100.0);
    println!("theta,h,regime,rho,C,bound_t100");
    for theta in [0.0, 0.5, 1.0] {
        for k in -3..=3 {
            let h = 10f64.powi(k) * 4.0 / (upper + lower);
            let Ok(c) = contraction(theta, h, lower, upper) else {
                println!("{theta},{h:.3e},out of regime,,,");
                continue;
            };
            let setting = BoundSetting { theta, step_size: h, tolerance: 1e-6, lower, upper, dim: 10 };
            let bound = w2_bound(&setting, 100, 1.0)?;
            println!("{theta},{h:.3e},{:?},{:.6},{:.3e},{bound:.3e}", c.regime, c.rho, c.constant);
        }
    }
    Ok(())
}
