//! The exponential profile `ε e^{−|x|}` whose mass tends to zero while its
//! energy per mass stays bounded, here for `|∇u|² + u` in dimension 2.

use masscon::radial_solver::slope_construction_profile;
use masscon::LagrangianSpec;

fn main() -> masscon::Result<()> {
    let f = LagrangianSpec::power_sum(2.0, 1.0, 2)?;
    for eps in [1.0, 0.1, 0.01, 0.001] {
        let c = slope_construction_profile(eps, 2, 4000, Some(&f))?;
        println!(
            "eps = {eps:<6} mass {:.6e} (closed form {:.6e})  E/m {:.6}",
            c.mass,
            c.closed_form_mass,
            c.energy_per_mass.unwrap()
        );
    }
    Ok(())
}
