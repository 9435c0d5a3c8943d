//! The droplet rescaling identity and the lower bound on `W` for the
//! built-in potentials `W`.

use masscon::gamma_lab::{droplet_equivalence_check, lemma_w_bound_check, LemmaWOptions};
use masscon::{GridDensity, WFunction};

fn main() -> masscon::Result<()> {
    let s = 0.5;
    let u = GridDensity::from_fn(vec![0.0], 0.01, vec![400], |x| 1.0 + 0.5 * (2.0 * x[0]).cos());
    for name in ["power", "power_plus_linear", "power_exp"] {
        let w = WFunction::builtin(name, s)?;
        let d = droplet_equivalence_check(&w, s, 0.1, &u)?;
        let lemma = lemma_w_bound_check(&w, s, 0.9, &[0.1, 0.01], &LemmaWOptions::default())?;
        println!(
            "{name:<18} epsbar {:.4e}  discrepancy {:.1e}  c_delta {:?}  violations {}",
            d.epsbar, d.discrepancy, lemma.c_delta, lemma.violations
        );
        for h in lemma.hypotheses.iter().filter(|h| !h.passed) {
            println!("{:<18} {} fails: {}", "", h.name, h.detail);
        }
    }
    Ok(())
}
