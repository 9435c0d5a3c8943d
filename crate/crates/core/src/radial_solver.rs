//! Minimal cost `H(m) = inf { ∫ f(u, ∇u) : ∫ u = m, u ≥ 0 }` over radial
//! profiles, cost curves with power-law fits, and the explicit profile
//! `u_ε(r) = ε e^{−r}` solving `v′ = −v`, `v(0) = ε`.
//!
//! Each solve runs the projected-gradient method of [`crate::optim`] on a
//! ladder of nested grids (coarsest size ≥ 64, halving up to `n`) from
//! several initial profiles and keeps the best. With an adaptive radius the
//! box doubles while the profile still reaches the boundary and shrinks to
//! twice the support when the support is much smaller than the box.
//!
//! For `∫ |∇u|^p + u^s` with `s < 1` the slope of `u^s` at zero is
//! infinite, so on a lattice the edge of the support gets pinned and
//! descent cannot move it. The support radius is optimized directly
//! instead: a halving scan, two uniform rescans around the best radius and
//! the fill transition, with a Dirichlet solve on `[0, ρ]` for each
//! candidate `ρ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{radial_geometry, RadialProfile};
use crate::error::{invalid, Error, Result};
use crate::lagrangian::{LagrangianKind, LagrangianSpec};
use crate::optim::{self, MassConstraint, SolveStatus, SpgOptions};
use crate::sphere_area;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum RadiusPolicy {
    Fixed {
        radius: f64,
    },
    /// Start at `start`; double while the boundary value exceeds `10⁻⁸ · max`.
    Adaptive {
        start: f64,
        max_doublings: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n: usize,
    pub radius: RadiusPolicy,
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            radius: RadiusPolicy::Adaptive { start: 10.0, max_doublings: 6 },
            max_iter: 50_000,
            tol: 1e-8,
            restarts: 5,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(invalid(format!("grid size must be at least 16, got {}", self.n)));
        }
        let r = match self.radius {
            RadiusPolicy::Fixed { radius } => radius,
            RadiusPolicy::Adaptive { start, .. } => start,
        };
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid(format!("radius must be positive, got {r}")));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        if self.restarts == 0 {
            return Err(invalid("at least one initialization is required"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn spg(&self) -> SpgOptions {
        SpgOptions { max_iter: self.max_iter, tol: self.tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSolution {
    pub profile: RadialProfile,
    #[serde(with = "crate::serde_ext")]
    pub energy: f64,
    pub status: SolveStatus,
    /// Energies of the individual initializations on the final box.
    #[serde(with = "crate::serde_ext::vec")]
    pub restart_energies: Vec<f64>,
    /// The profile still reaches the boundary of the largest allowed box.
    pub truncated: bool,
}

const BOUNDARY_TOL: f64 = 1e-8;
const MAX_ZOOMS: usize = 4;
const COARSEST: usize = 64;
const SCAN: usize = 16;
/// A profile fills its box when its support reaches `(1 − FILL) ρ`.
const FILL: f64 = 0.02;

/// Initial profile number `k` on `[0, R]`.
fn initial_profile(f: &LagrangianSpec, k: usize, radius: f64, seed: u64) -> Box<dyn Fn(f64) -> f64 + Send + Sync> {
    match k {
        0 => {
            let sigma = radius / 4.0;
            Box::new(move |r| (-r * r / (2.0 * sigma * sigma)).exp())
        }
        1 => {
            let gamma = compacton_exponent(f);
            let r0 = 0.8 * radius;
            Box::new(move |r| (1.0 - r / r0).max(0.0).powf(gamma))
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let bumps: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| {
                    (
                        rng.gen_range(0.0..0.5 * radius),
                        rng.gen_range(radius / 20.0..radius / 4.0),
                        rng.gen_range(0.5..1.5),
                    )
                })
                .collect();
            // A broad floor keeps the full box in the initial support.
            let sigma = radius / 3.0;
            Box::new(move |r| {
                let floor = 0.05 * (-r * r / (2.0 * sigma * sigma)).exp();
                floor + bumps.iter().map(|&(c, w, a)| a * (-(r - c).powi(2) / (2.0 * w * w)).exp()).sum::<f64>()
            })
        }
    }
}

/// `γ` in `(1 − r/R₀)₊^γ`: the midpoint of `((1 − 1/p), −1/s)` when `s < 0`.
fn compacton_exponent(f: &LagrangianSpec) -> f64 {
    match (f.gradient_exponent(), f.zeroth_order_exponent()) {
        (Some(p), Some(s)) if s < 0.0 => 0.5 * ((1.0 - 1.0 / p) + (-1.0 / s)),
        _ => 2.0,
    }
}

fn levels(n: usize) -> Vec<usize> {
    let mut ns = vec![n];
    while ns.last().unwrap() / 2 >= COARSEST {
        let next = ns.last().unwrap() / 2;
        ns.push(next);
    }
    ns.reverse();
    ns
}

struct Candidate {
    values: Vec<f64>,
    energy: f64,
    status: SolveStatus,
}

/// Nested-grid solve on `[0, R]` with `u(R) = 0`.
fn nested_solve(f: &LagrangianSpec, m: f64, radius: f64, cfg: &SolverConfig, init: &dyn Fn(f64) -> f64) -> Candidate {
    let mut prev: Option<RadialProfile> = None;
    let mut out = Candidate { values: vec![], energy: f64::INFINITY, status: SolveStatus::Diverged };
    for n in levels(cfg.n) {
        let start = match &prev {
            None => RadialProfile::from_fn(f.dim, radius, n, init),
            Some(p) => RadialProfile::from_fn(f.dim, radius, n, |r| p.eval_at(r)),
        };
        let geom = radial_geometry(f.dim, radius, n);
        let mut c = MassConstraint::new(geom.weights.clone(), m);
        c.fix(n);
        let r = optim::minimize_energy(&geom, f, &c, &start.values, &cfg.spg(), prev.is_none().then_some(0));
        let mut values = r.u;
        if f.dim >= 2 {
            // u(0) carries no weight; tie it to its neighbour for display.
            values[0] = values[1];
        }
        prev = Some(RadialProfile { dim: f.dim, radius, values: values.clone() });
        out = Candidate { values, energy: r.energy, status: r.status };
    }
    out
}

fn support_of(values: &[f64], radius: f64) -> f64 {
    RadialProfile { dim: 1, radius, values: values.to_vec() }.support_radius()
}

/// Best over restarts: lowest energy, near-ties to the smallest support.
fn pick_best(cands: Vec<Candidate>, radius: f64) -> (Candidate, Vec<f64>) {
    let energies: Vec<f64> = cands.iter().map(|c| c.energy).collect();
    let mut best: Option<Candidate> = None;
    for c in cands {
        best = Some(match best {
            None => c,
            Some(b) => {
                let tie = (c.energy - b.energy).abs() <= 1e-10 * b.energy.abs().max(1e-300);
                let better = if tie {
                    support_of(&c.values, radius) < support_of(&b.values, radius)
                } else {
                    c.energy < b.energy || (b.energy.is_nan() && !c.energy.is_nan())
                };
                if better {
                    c
                } else {
                    b
                }
            }
        });
    }
    (best.expect("at least one restart"), energies)
}

fn solve_box(f: &LagrangianSpec, m: f64, radius: f64, cfg: &SolverConfig) -> (Candidate, Vec<f64>) {
    let inits: Vec<_> = (0..cfg.restarts).map(|k| initial_profile(f, k, radius, cfg.seed)).collect();
    let cands: Vec<Candidate> = inits.par_iter().map(|g| nested_solve(f, m, radius, cfg, g.as_ref())).collect();
    pick_best(cands, radius)
}

fn reaches_boundary(values: &[f64]) -> bool {
    let n = values.len() - 1;
    let max = values.iter().cloned().fold(0.0, f64::max);
    values[n - 1] >= BOUNDARY_TOL * max
}

fn needs_support_search(f: &LagrangianSpec) -> bool {
    matches!(f.kind, LagrangianKind::PowerSum { s, .. } if s < 1.0)
}

/// Minimize over radial profiles of mass `m`. The returned energy is an
/// upper bound for `H(m)`.
pub fn minimize_profile(f: &LagrangianSpec, m: f64, cfg: &SolverConfig) -> Result<ProfileSolution> {
    cfg.validate()?;
    if !(m.is_finite() && m >= 0.0) {
        return Err(invalid(format!("mass must be non-negative, got {m}")));
    }
    let (start, max_doublings, adaptive) = match cfg.radius {
        RadiusPolicy::Fixed { radius } => (radius, 0, false),
        RadiusPolicy::Adaptive { start, max_doublings } => (start, max_doublings, true),
    };
    if m == 0.0 {
        return Ok(ProfileSolution {
            profile: RadialProfile::zeros(f.dim, start, cfg.n),
            energy: 0.0,
            status: SolveStatus::Converged,
            restart_energies: vec![0.0; cfg.restarts],
            truncated: false,
        });
    }
    if needs_support_search(f) {
        return support_search(f, m, start, max_doublings, adaptive, cfg);
    }

    let mut radius = start;
    let mut doublings = 0;
    let mut zooms = 0;
    loop {
        let (best, energies) = solve_box(f, m, radius, cfg);
        let boundary = reaches_boundary(&best.values);
        if adaptive && boundary && doublings < max_doublings {
            radius *= 2.0;
            doublings += 1;
            continue;
        }
        let support = support_of(&best.values, radius);
        if adaptive && !boundary && support > 0.0 && support < radius / 4.0 && zooms < MAX_ZOOMS {
            radius = 2.0 * support;
            zooms += 1;
            continue;
        }
        return Ok(ProfileSolution {
            profile: RadialProfile { dim: f.dim, radius, values: best.values },
            energy: best.energy,
            status: best.status,
            restart_energies: energies,
            truncated: boundary,
        });
    }
}

/// Search over box radii `ρ` with the profile vanishing at `ρ`. While the
/// box binds, the computed `E(ρ)` decreases smoothly; past the optimal
/// support it becomes a noisy plateau of pinned states. Each refinement
/// rescans around both the lowest energy and the last radius whose profile
/// still fills its box, and the best profile seen is kept.
fn support_search(
    f: &LagrangianSpec,
    m: f64,
    start: f64,
    max_doublings: usize,
    adaptive: bool,
    cfg: &SolverConfig,
) -> Result<ProfileSolution> {
    let single = SolverConfig { restarts: 1, ..*cfg };
    let gauss = initial_profile(f, 0, 1.0, cfg.seed);
    let solve_at = |rho: f64| -> (f64, Candidate) {
        let g = |r: f64| gauss(r / rho);
        (rho, nested_solve(f, m, rho, &single, &g))
    };
    let scan = |rhos: &[f64]| -> Vec<(f64, Candidate)> { rhos.par_iter().map(|&r| solve_at(r)).collect() };
    let fills = |(rho, c): &(f64, Candidate)| support_of(&c.values, *rho) >= (1.0 - FILL) * rho;
    let argmin =
        |xs: &[(f64, Candidate)]| (0..xs.len()).min_by(|&a, &b| xs[a].1.energy.total_cmp(&xs[b].1.energy)).unwrap();

    let mut top = start;
    let mut doublings = 0;
    let mut seen = loop {
        let rhos: Vec<f64> = (0..12).map(|k| top * 0.5f64.powi(k)).collect();
        let found = scan(&rhos);
        let k = argmin(&found);
        if (k == 0 || fills(&found[0])) && adaptive && doublings < max_doublings {
            top *= 2.0;
            doublings += 1;
            continue;
        }
        break found;
    };
    seen.sort_by(|a, b| a.0.total_cmp(&b.0));
    for _ in 0..2 {
        let k = argmin(&seen);
        let mut brackets = vec![(seen[k.saturating_sub(1)].0, seen[(k + 1).min(seen.len() - 1)].0)];
        if let Some(j) = seen.iter().rposition(&fills) {
            if j + 1 < seen.len() {
                brackets.push((seen[j].0, seen[j + 1].0));
            }
        }
        let rhos: Vec<f64> = brackets
            .iter()
            .flat_map(|&(lo, hi)| (1..SCAN).map(move |j| lo + (hi - lo) * j as f64 / SCAN as f64))
            .collect();
        seen.extend(scan(&rhos));
        seen.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let k = argmin(&seen);
    let rho = seen[k].0;
    let (best, energies) = solve_box(f, m, rho, cfg);
    let best = if best.energy <= seen[k].1.energy { best } else { seen.swap_remove(k).1 };
    Ok(ProfileSolution {
        profile: RadialProfile { dim: f.dim, radius: rho, values: best.values },
        energy: best.energy,
        status: best.status,
        restart_energies: energies,
        truncated: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSample {
    pub m: f64,
    #[serde(with = "crate::serde_ext")]
    pub h: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub alpha_hat: f64,
    pub c_hat: f64,
    pub r_squared: f64,
    pub used: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCurve {
    pub lagrangian: LagrangianSpec,
    pub samples: Vec<CostSample>,
    /// `None` when fewer than three converged samples were available.
    pub fit: Option<PowerFit>,
}

impl CostCurve {
    pub fn masses(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.m).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.h).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.samples.iter().all(|s| s.status == SolveStatus::Converged)
    }

    /// Largest decrease `H_j − H_{j+1}` (0 for a non-decreasing curve).
    pub fn max_decrease(&self) -> f64 {
        self.samples.windows(2).map(|w| w[0].h - w[1].h).fold(0.0, f64::max)
    }

    /// Worst relative midpoint-concavity defect
    /// `((H_j + H_k)/2 − H_mid)/(H_j + H_k)` over all sample pairs, with
    /// `H_mid` linearly interpolated between the neighbouring samples
    /// (a lower bound for a concave `H`). Samples must be sorted by mass.
    pub fn midpoint_concavity_defect(&self) -> f64 {
        let s = &self.samples;
        let mut worst: f64 = 0.0;
        for j in 0..s.len() {
            for k in j + 1..s.len() {
                let mid = 0.5 * (s[j].m + s[k].m);
                let i = s.partition_point(|x| x.m < mid).clamp(1, s.len() - 1);
                let (a, b) = (s[i - 1], s[i]);
                let h_mid = a.h + (b.h - a.h) * (mid - a.m) / (b.m - a.m);
                worst = worst.max((0.5 * (s[j].h + s[k].h) - h_mid) / (s[j].h + s[k].h));
            }
        }
        worst
    }
}

/// Sample `H` at increasing positive masses (in parallel, one seed per
/// mass) and fit `H ≈ ĉ m^α̂` over the converged samples.
pub fn cost_curve(f: &LagrangianSpec, masses: &[f64], cfg: &SolverConfig) -> Result<CostCurve> {
    cfg.validate()?;
    if masses.is_empty() || masses.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
        return Err(invalid("masses must be positive"));
    }
    if masses.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("masses must be strictly increasing"));
    }
    let solved: Vec<Result<ProfileSolution>> = masses
        .par_iter()
        .enumerate()
        .map(|(j, &m)| minimize_profile(f, m, &cfg.with_seed(derive_seed(cfg.seed, j))))
        .collect();
    let mut samples = Vec::with_capacity(masses.len());
    for (&m, s) in masses.iter().zip(solved) {
        let s = s?;
        samples.push(CostSample { m, h: s.energy, status: s.status });
    }
    let converged: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.status == SolveStatus::Converged).map(|s| (s.m, s.h)).collect();
    let fit = fit_power_law(&converged).ok();
    Ok(CostCurve { lagrangian: f.clone(), samples, fit })
}

/// Independent per-task seed from a global seed.
pub fn derive_seed(seed: u64, j: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + j as u64);
    rng.gen()
}

/// Least squares on `(log m, log H)`; non-positive samples are excluded.
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(m, h)| *m > 0.0 && *h > 0.0 && m.is_finite() && h.is_finite())
        .map(|(m, h)| (m.ln(), h.ln()))
        .collect();
    let excluded = samples.len() - pts.len();
    if pts.len() < 3 {
        return Err(invalid(format!("power-law fit needs 3 positive samples, got {}", pts.len())));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateDenominator("variance of log m"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(PowerFit { alpha_hat: slope, c_hat: intercept.exp(), r_squared, used: pts.len(), excluded })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeConstruction {
    pub profile: RadialProfile,
    pub eps: f64,
    /// Quadrature mass of the profile.
    pub mass: f64,
    /// `|S^{N−1}| ε (N − 1)!`.
    pub closed_form_mass: f64,
    /// `E(u_ε)/m_ε` under the given Lagrangian.
    pub energy_per_mass: Option<f64>,
}

/// The profile `u_ε(x) = ε e^{−|x|}` (the solution of `v′ = −ρ(v)`,
/// `v(0) = ε`, with `ρ(t) = t`) on `[0, 50]` with `n` nodes.
pub fn slope_construction_profile(
    eps: f64,
    dim: usize,
    n: usize,
    f: Option<&LagrangianSpec>,
) -> Result<SlopeConstruction> {
    if dim < 2 {
        return Err(invalid("the slope construction needs N >= 2"));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    if n < 16 {
        return Err(invalid("grid size must be at least 16"));
    }
    let profile = RadialProfile::from_fn(dim, 50.0, n, |r| eps * (-r).exp());
    let mass = profile.mass();
    let fact: f64 = (1..dim).map(|k| k as f64).product();
    let closed_form_mass = sphere_area(dim) * eps * fact;
    let energy_per_mass = match f {
        Some(f) => Some(crate::discretization::eval_energy(f, &profile)? / mass),
        None => None,
    };
    Ok(SlopeConstruction { profile, eps, mass, closed_form_mass, energy_per_mass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_ladder() {
        assert_eq!(levels(2000), vec![125, 250, 500, 1000, 2000]);
        assert_eq!(levels(100), vec![100]);
    }

    #[test]
    fn midpoint_defect_uses_interpolation() {
        let curve = |g: fn(f64) -> f64| CostCurve {
            lagrangian: LagrangianSpec::power_sum(2.0, 0.5, 1).unwrap(),
            samples: [0.25, 0.5, 1.0, 2.0, 4.0]
                .iter()
                .map(|&m| CostSample { m, h: g(m), status: SolveStatus::Converged })
                .collect(),
            fit: None,
        };
        assert_eq!(curve(f64::sqrt).midpoint_concavity_defect(), 0.0);
        assert!(curve(|m| m * m).midpoint_concavity_defect() > 0.1);
    }

    #[test]
    fn fit_recovers_exact_power() {
        let s: Vec<(f64, f64)> = (0..10)
            .map(|k| {
                let m = 0.5 * 1.7f64.powi(k);
                (m, 2.0 * m.powf(0.7))
            })
            .collect();
        let fit = fit_power_law(&s).unwrap();
        assert!((fit.alpha_hat - 0.7).abs() < 1e-10);
        assert!((fit.c_hat - 2.0).abs() < 1e-10);
        let lin: Vec<(f64, f64)> = (1..5).map(|k| (k as f64, k as f64)).collect();
        let fit = fit_power_law(&lin).unwrap();
        assert!((fit.alpha_hat - 1.0).abs() < 1e-12 && (fit.c_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_excludes_nonpositive() {
        let s = [(1.0, 1.0), (2.0, 0.0), (3.0, 3.0), (4.0, 4.0), (5.0, -1.0)];
        let fit = fit_power_law(&s).unwrap();
        assert_eq!((fit.used, fit.excluded), (3, 2));
        assert!(fit_power_law(&s[..2]).is_err());
    }

    #[test]
    fn zero_mass_profile() {
        let f = LagrangianSpec::power_sum(2.0, 0.5, 1).unwrap();
        let s = minimize_profile(&f, 0.0, &SolverConfig::default()).unwrap();
        assert_eq!(s.energy, 0.0);
        assert!(minimize_profile(&f, -1.0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn slope_masses() {
        let s = slope_construction_profile(1e-2, 2, 20_000, None).unwrap();
        assert!((s.mass - 2.0 * std::f64::consts::PI * 1e-2).abs() < 1e-4);
        let s = slope_construction_profile(1e-2, 3, 20_000, None).unwrap();
        assert!((s.mass - 8.0 * std::f64::consts::PI * 1e-2).abs() < 1e-3);
        assert!(slope_construction_profile(1e-2, 1, 100, None).is_err());
    }

    #[test]
    fn compacton_window() {
        let f = LagrangianSpec::power_sum(2.0, -0.5, 1).unwrap();
        // window (1/2, 2)
        assert_eq!(compacton_exponent(&f), 1.25);
    }
}
