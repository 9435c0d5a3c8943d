//! The droplet energy `W_ε(u) = ∫ ε^{−ρ}(W(u) + ε|∇u|²)` as a rescaled
//! energy, and the lower bound `δ(u^s ∧ c_δ ε^{−N(1−s)} u) ≤ W_ε(u)` with
//! `W_ε(u) = ε^{Ns} W(ε^{−N} u)`.
//!
//! With `ε̄ = ε^{(N+2)+N(1−s)}` the droplet energy at `ε̄` equals
//! `∫ f^W_ε(ε^N u, ε^{N+1}∇u) ε^{−N}` where `f^W_ε(u, ξ) = W_ε(u) + |ξ|²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::{rescaled_energy, GridDensity, Integrand};
use crate::error::{invalid, Result};
use crate::exponents::droplet_exponents;
use crate::lagrangian::{HypothesisCheck, LagrangianSpec, WFunction};

/// `a W(u) + b |ξ|²`.
struct DirectDroplet<'a> {
    w: &'a WFunction,
    a: f64,
    b: f64,
}

impl Integrand for DirectDroplet<'_> {
    fn value(&self, u: f64, xi: f64) -> f64 {
        self.a * self.w.eval(u) + self.b * xi * xi
    }

    fn partials(&self, u: f64, xi: f64) -> (f64, f64) {
        (self.a * self.w.derivative(u), 2.0 * self.b * xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropletEquivalence {
    pub eps: f64,
    pub epsbar: f64,
    /// `∫ ε̄^{−ρ}(W(u) + ε̄|∇u|²)`.
    pub lhs: f64,
    /// `∫ f^W_ε(ε^N u, ε^{N+1}∇u) ε^{−N}`.
    pub rhs: f64,
    pub discrepancy: f64,
}

/// Both sides of the droplet identity under the same quadrature.
pub fn droplet_equivalence_check(w: &WFunction, s: f64, eps: f64, u: &GridDensity) -> Result<DropletEquivalence> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let n = u.dim;
    let ex = droplet_exponents(s, n)?;
    let epsbar = eps.powf(ex.epsbar_exponent);
    let direct = DirectDroplet { w, a: epsbar.powf(-ex.rho), b: epsbar.powf(1.0 - ex.rho) };
    let lhs = u.geometry().energy(&direct, &u.values, None);
    let f = LagrangianSpec::droplet(s, w.clone(), eps, n)?;
    let rhs = rescaled_energy(&f, eps, u)?;
    let scale = lhs.abs().max(rhs.abs());
    let discrepancy = if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 };
    Ok(DropletEquivalence { eps, epsbar, lhs, rhs, discrepancy })
}

/// `log₁₀ u` range of the tabulation.
const LOG_MIN: f64 = -10.0;
const LOG_MAX: f64 = 10.0;
const PER_DECADE: usize = 20;
/// Safety factor on the tabulated infimum, for dips between table nodes.
const C_SAFETY: f64 = 0.99;

fn tabulation(w: &WFunction) -> Vec<f64> {
    let k = ((LOG_MAX - LOG_MIN) as usize) * PER_DECADE;
    let mut u: Vec<f64> = (0..=k).map(|i| 10f64.powf(LOG_MIN + i as f64 / PER_DECADE as f64)).collect();
    if let WFunction::Tabulated(t) = w {
        u.extend(t.u.iter().cloned().filter(|&x| x > 0.0));
    }
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

fn check(name: &str, passed: bool, witness: Option<f64>, detail: String) -> HypothesisCheck {
    HypothesisCheck { name: name.into(), passed, witness: witness.map(|u| (u, 0.0)), detail }
}

/// Sampled checks of HW1–HW5 for `W` with far-field exponent `s`.
pub fn w_hypotheses(w: &WFunction, s: f64) -> Vec<HypothesisCheck> {
    let u = tabulation(w);
    let vals: Vec<f64> = u.iter().map(|&x| w.eval(x)).collect();
    let finite = vals.iter().all(|v| v.is_finite() && *v >= 0.0);
    let hw1 = check("HW1", finite && w.eval(0.0) == 0.0, None, "continuous on (0, inf) with W(0) = 0 <= liminf".into());
    let zero = u.iter().zip(&vals).find(|(_, v)| **v <= 0.0).map(|(x, _)| *x);
    let hw2 = check("HW2", zero.is_none(), zero, "W > 0 on the sampled u > 0".into());
    let ratio = |x: f64| w.eval(x) / x.powf(s);
    let far = [10f64.powf(LOG_MAX - 1.0), 10f64.powf(LOG_MAX)];
    let dev = far.iter().map(|&x| (ratio(x) - 1.0).abs()).fold(0.0, f64::max);
    let hw3 = check("HW3", dev <= 1e-3, Some(far[1]), format!("|W/u^s - 1| = {dev:e} at large u"));
    let (sup, at) = u.iter().map(|&x| (ratio(x), x)).fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    let hw4 = check("HW4", sup.is_finite() && sup <= 1e4, Some(at), format!("sup W/u^s = {sup:e}"));
    let q = |x: f64| w.eval(x) / x;
    let small: Vec<f64> = u.iter().cloned().filter(|&x| x <= 1e-6).collect();
    let qmin = small.iter().map(|&x| q(x)).fold(f64::INFINITY, f64::min);
    let (q10, q8) = (q(1e-10), q(1e-8));
    let hw5 =
        check("HW5", qmin > 0.0 && q10 >= 0.5 * q8, Some(1e-10), format!("W/u = {q10:e} at 1e-10, {q8:e} at 1e-8"));
    vec![hw1, hw2, hw3, hw4, hw5]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaWOptions {
    pub samples: usize,
    pub seed: u64,
    /// Spatial dimension `N` in `ε^{−N(1−s)}`.
    pub dim: usize,
}

impl Default for LemmaWOptions {
    fn default() -> Self {
        Self { samples: 10_000, seed: 0, dim: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaWReport {
    pub hypotheses: Vec<HypothesisCheck>,
    /// Threshold `M` with `δu^s ≤ W(u)` for tabulated `u ≥ M` (0 when it
    /// holds everywhere).
    pub threshold: Option<f64>,
    pub c_delta: Option<f64>,
    pub samples: usize,
    pub violations: usize,
    /// `(ε, u)` of the worst violation.
    pub worst: Option<(f64, f64)>,
}

impl LemmaWReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| h.passed)
    }

    pub fn passed(&self) -> bool {
        self.hypotheses_hold() && self.c_delta.is_some() && self.violations == 0
    }
}

/// `c_δ` from a tabulation of `W` (threshold `M`, then `inf W/u` on
/// `(0, M]`), verified on random `(ε, u)` with `ε^{−N}u` in `[10⁻⁸, 10⁸]`.
pub fn lemma_w_bound_check(
    w: &WFunction,
    s: f64,
    delta: f64,
    eps: &[f64],
    opts: &LemmaWOptions,
) -> Result<LemmaWReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(s.is_finite() && s < 1.0) {
        return Err(invalid(format!("s must be below 1, got {s}")));
    }
    if eps.is_empty() || eps.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
        return Err(invalid("eps values must be positive"));
    }
    if opts.dim == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let hypotheses = w_hypotheses(w, s);
    if !hypotheses.iter().all(|h| h.passed) {
        return Ok(LemmaWReport { hypotheses, threshold: None, c_delta: None, samples: 0, violations: 0, worst: None });
    }
    let u = tabulation(w);
    let holds = |x: f64| delta * x.powf(s) <= w.eval(x);
    let last_fail = u.iter().rposition(|&x| !holds(x));
    let (threshold, upto) = match last_fail {
        None => (0.0, u[0]),
        Some(k) if k + 1 < u.len() => (u[k + 1], u[k + 1]),
        Some(_) => {
            return Err(invalid("delta u^s <= W fails at the end of the tabulation"));
        }
    };
    let c = C_SAFETY * u.iter().filter(|&&x| x <= upto).map(|&x| w.eval(x) / x).fold(f64::INFINITY, f64::min);

    let nf = opts.dim as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut violations = 0;
    let mut worst: Option<(f64, f64, f64)> = None;
    for _ in 0..opts.samples {
        let e = eps[rng.gen_range(0..eps.len())];
        let y = 10f64.powf(rng.gen_range(-8.0..8.0));
        let x = e.powf(nf) * y;
        let w_eps = e.powf(nf * s) * w.eval(y);
        let lower = delta * x.powf(s).min(c * e.powf(-nf * (1.0 - s)) * x);
        let excess = lower - w_eps;
        if excess > 1e-12 * w_eps.abs() {
            violations += 1;
            let rel = excess / w_eps.abs().max(f64::MIN_POSITIVE);
            if worst.is_none_or(|w| rel > w.2) {
                worst = Some((e, x, rel));
            }
        }
    }
    Ok(LemmaWReport {
        hypotheses,
        threshold: Some(threshold),
        c_delta: Some(c),
        samples: opts.samples,
        violations,
        worst: worst.map(|(e, x, _)| (e, x)),
    })
}
