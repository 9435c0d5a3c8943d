//! Bubble decomposition of two Gaussians drifting apart.

use masscon::bubbles::{decomposition_report, extract_bubbles, BubbleParams};
use masscon::GridDensity;

fn bumps(sep: f64) -> GridDensity {
    let g = |x: f64, c: f64, m: f64| m * (-(x - c).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    GridDensity::from_fn(vec![-60.0], 0.1, vec![1201], |x| g(x[0], -sep / 2.0, 1.0) + g(x[0], sep / 2.0, 0.6))
}

fn main() -> masscon::Result<()> {
    let params = BubbleParams::new(3.0, 0.05);
    let set = extract_bubbles(&bumps(20.0), &params)?;
    for b in &set.bubbles {
        println!("centre {:>7.2}  radius {:.2}  mass {:.5}", b.center[0], b.radius, b.mass);
    }
    println!("remainder {:.2e}, vanishing sup {:.2e}", set.remainder_mass, set.vanishing_sup);

    let seq: Vec<GridDensity> = [10.0, 20.0, 40.0, 80.0].iter().map(|&s| bumps(s)).collect();
    let report = decomposition_report(&seq, &params)?;
    println!("\ncounts {:?}", report.bubble_counts());
    println!("separations {:?}", report.separations);
    for (k, t) in report.tracks.iter().enumerate() {
        println!("track {k}: {:?}", t.masses);
    }
    Ok(())
}
