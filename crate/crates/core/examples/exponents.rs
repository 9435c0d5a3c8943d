//! Closed-form scaling exponents for a few power-sum Lagrangians.
//!
//! ```text
//! cargo run --example exponents
//! ```

use masscon::exponents::exponent_report;

fn main() -> masscon::Result<()> {
    println!("{:>5} {:>5} {:>3} {:>10} {:>10} {:>10}", "s", "p", "N", "alpha", "lambda", "nontriv");
    for (s, p, n) in [(0.5, 2.0, 1), (0.5, 2.0, 2), (0.0, 2.0, 2), (0.5, 1.5, 3), (1.0, 2.0, 1)] {
        let r = exponent_report(s, p, n)?;
        let lambda = r.lambda_exponent.map_or("-".into(), |l| format!("{l:.6}"));
        println!("{s:>5} {p:>5} {n:>3} {:>10.6} {lambda:>10} {:>10}", r.alpha.unwrap(), r.nontrivial);
    }
    let r = exponent_report(0.5, 2.0, 2)?;
    if let Some(b) = r.branched {
        println!("\nbranched transport at alpha = {:.4}, d = 2: {b:?}", r.alpha.unwrap());
    }
    Ok(())
}
