//! Radially symmetric minimizer of `|∇u|² + u^{1/2}` at mass 1 in the
//! plane, written to `profile.csv` in the current directory.

use masscon::io::write_profile_csv;
use masscon::radial_solver::{minimize_profile, SolverConfig};
use masscon::LagrangianSpec;

fn main() -> masscon::Result<()> {
    let f = LagrangianSpec::power_sum(2.0, 0.5, 2)?;
    let sol = minimize_profile(&f, 1.0, &SolverConfig { n: 400, restarts: 2, ..Default::default() })?;
    let p = &sol.profile;
    let support = p.values.iter().rposition(|&v| v > 0.0).map_or(0.0, |i| i as f64 * p.dr());
    println!("H(1) = {:.8}  status {:?}", sol.energy, sol.status);
    println!("u(0) = {:.6}  support radius {support:.4}  box {:.2}", p.values[0], p.radius);
    write_profile_csv("profile.csv".as_ref(), p)?;
    Ok(())
}
