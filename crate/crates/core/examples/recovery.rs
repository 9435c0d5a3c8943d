//! Upper and lower bounds around the concentration limit: the rescaled
//! optimal profile keeps its energy, spreading mass pays `f′(0⁺)`, and a
//! scale-invariant Lagrangian does not see `ε` at all.

use masscon::discretization::rescaled_energy;
use masscon::gamma_lab::{recovery_family_check, vanishing_lower_bound_check};
use masscon::radial_solver::{minimize_profile, SolverConfig};
use masscon::{GridDensity, LagrangianSpec};

fn main() -> masscon::Result<()> {
    let f = LagrangianSpec::power_sum(2.0, 0.5, 1)?;
    let sol = minimize_profile(&f, 1.0, &SolverConfig { n: 400, restarts: 2, ..Default::default() })?;
    let rec = recovery_family_check(&f, &sol.profile, &[1.0, 0.1, 0.01], 1e-6)?;
    println!("recovery: reference {:.8}, energies {:?}", rec.reference, rec.energies);

    for (label, f) in [("u^(1/2)", f.clone()), ("u", LagrangianSpec::power_sum(2.0, 1.0, 1)?)] {
        let v = vanishing_lower_bound_check(&f, 1.0, &[10.0, 100.0, 1000.0])?;
        println!("spreading, {label:<7}: E/m {:?} (slope at zero {})", v.ratios, v.slope_at_zero);
    }

    let g = LagrangianSpec::scale_invariant(1.5, 2)?;
    let u = GridDensity::from_fn(vec![-1.0, -1.0], 0.05, vec![41, 41], |x| (-4.0 * (x[0] * x[0] + x[1] * x[1])).exp());
    for eps in [1.0, 0.1, 0.01] {
        println!("scale invariant, eps = {eps:<5}: E_eps = {:.10}", rescaled_energy(&g, eps, &u)?);
    }
    Ok(())
}
