//! `H`-mass of atomic measures under a concave power cost, and a
//! subadditivity and plateau check of the cost itself.

use masscon::hmass::{detect_linear_plateau, h_mass, subadditivity_check, Atom, AtomicMeasure, CostFunction};

fn main() -> masscon::Result<()> {
    let h = CostFunction::power(1.0, 5.0 / 7.0)?;
    let split = AtomicMeasure::new(vec![Atom { x: vec![0.0, 0.0], m: 0.5 }, Atom { x: vec![3.0, 0.0], m: 0.5 }], 0.0)?;
    let merged = split.merged(0, 1);
    println!("two atoms of 1/2: {:.6}", h_mass(&h, &split));
    println!("one atom of 1:    {:.6}", h_mass(&h, &merged));
    let diffuse = AtomicMeasure { diffuse: 0.1, ..merged };
    println!("with diffuse part: {}", h_mass(&h, &diffuse));

    let grid: Vec<f64> = (1..=10).map(|k| 0.2 * k as f64).collect();
    let sub = subadditivity_check(&h, &grid, &Default::default());
    println!("subadditivity violations: {}", sub.violations.len());
    let plateau = detect_linear_plateau(&CostFunction::power(2.0, 1.0)?, &grid, &Default::default());
    println!("linear cost: m* = {}, slope {}", plateau.m_star, plateau.slope);
    Ok(())
}
