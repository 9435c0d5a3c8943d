//! Minimal cost `H(m)` of `|∇u|² + u^{1/2}` in one dimension, with a
//! power-law fit against the predicted exponent.

use masscon::exponents::alpha_exponent;
use masscon::radial_solver::{cost_curve, SolverConfig};
use masscon::LagrangianSpec;

fn main() -> masscon::Result<()> {
    let f = LagrangianSpec::power_sum(2.0, 0.5, 1)?;
    let masses = [0.25, 0.5, 1.0, 2.0, 4.0];
    let curve = cost_curve(&f, &masses, &SolverConfig { n: 500, restarts: 2, ..Default::default() })?;
    for s in &curve.samples {
        println!("m = {:<5} H = {:.8} ({:?})", s.m, s.h, s.status);
    }
    let alpha = alpha_exponent(0.5, 2.0, 1)?.alpha;
    if let Some(fit) = curve.fit {
        println!("fitted alpha {:.5}, predicted {alpha:.5}, R² {:.6}", fit.alpha_hat, fit.r_squared);
    }
    println!("midpoint concavity defect {:.2e}", curve.midpoint_concavity_defect());
    Ok(())
}
