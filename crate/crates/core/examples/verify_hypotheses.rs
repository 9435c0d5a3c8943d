//! Load a Lagrangian from TOML and check its structural hypotheses on a
//! quasi-random sample of `(u, |ξ|)`.

use masscon::lagrangian::LagrangianConfig;
use masscon::lagrangian::{verify_hypotheses, SampleConfig};

const CONFIG: &str = r#"
kind = "power_sum"
dim = 2
p = 2.0
s = 0.5
"#;

fn main() -> masscon::Result<()> {
    let f = LagrangianConfig::from_toml_str(CONFIG)?.build(None)?;
    let report = verify_hypotheses(&f, &SampleConfig { samples: 5000, ..Default::default() });
    for c in &report.checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        println!("{mark} {:<8} {}", c.name, c.detail);
        if let Some((u, xi)) = c.witness {
            println!("       witness u = {u:.4e}, |xi| = {xi:.4e}");
        }
    }
    let (quad, exact) = report.rho_integral;
    println!("rho integral {quad:.8} vs N! = {exact}");
    Ok(())
}
