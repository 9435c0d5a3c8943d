//! Minimize the rescaled energies along a decreasing `ε` schedule and
//! watch the minimizers concentrate into one droplet of cost `H(m)`.

use masscon::gamma_lab::{gamma_sweep, GammaConfig, InitPolicy};
use masscon::LagrangianSpec;

fn main() -> masscon::Result<()> {
    let f = LagrangianSpec::power_sum(2.0, 0.5, 1)?;
    let cfg = GammaConfig { n: 801, ..GammaConfig::default() };
    let run = gamma_sweep(&f, 1.0, &[1.0, 0.5, 0.25, 0.125], &InitPolicy::single(1, 0.25), &cfg)?;
    println!("{:>7} {:>12} {:>13} {:>8}", "eps", "energy", "concentration", "droplets");
    for e in &run.entries {
        println!("{:>7} {:>12.6} {:>13.4} {:>8}", e.eps, e.energy, e.concentration, e.droplets);
    }
    if let (Some(h), Some(gap)) = (run.prediction, run.relative_gap) {
        println!("H(1) = {h:.6}, relative gap {gap:+.3e}");
    }
    Ok(())
}
