//! Spectral projected gradient on `{Σ a_i u_i = m, u ≥ 0}`.
//!
//! Steps are taken in the metric `diag(a)`, so the search direction is the
//! discrete `L²` gradient `g_i / a_i` and the projection reduces to
//! water-filling `u_i = max(0, v_i − λ)`. Step lengths are Barzilai–Borwein
//! with a monotone Armijo backtrack. Coordinates whose gradient is `+∞`
//! (zero cells where `f` has infinite slope) are frozen at their bound.

use serde::{Deserialize, Serialize};

use crate::discretization::{Geometry, Integrand, SmoothedPowerSum};
use crate::lagrangian::{LagrangianKind, LagrangianSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Diverged,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::Diverged => "diverged",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "converged" => Some(SolveStatus::Converged),
            "max-iter" => Some(SolveStatus::MaxIter),
            "diverged" => Some(SolveStatus::Diverged),
            _ => None,
        }
    }

    /// The worse of two statuses.
    pub fn worst(self, other: Self) -> Self {
        use SolveStatus::*;
        match (self, other) {
            (Diverged, _) | (_, Diverged) => Diverged,
            (MaxIter, _) | (_, MaxIter) => MaxIter,
            _ => Converged,
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Objective `E(u)` with Euclidean gradient.
pub trait Objective: Sync {
    fn value(&self, u: &[f64]) -> f64;
    fn value_and_gradient(&self, u: &[f64], grad: &mut [f64]) -> f64;
}

/// Discretized energy `Σ w_i φ(u_i, |∇u|_i)` on a geometry.
pub struct EnergyObjective<'a> {
    pub geometry: &'a Geometry,
    pub integrand: &'a dyn Integrand,
}

impl Objective for EnergyObjective<'_> {
    fn value(&self, u: &[f64]) -> f64 {
        self.geometry.energy(self.integrand, u, None)
    }

    fn value_and_gradient(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        self.geometry.energy(self.integrand, u, Some(grad))
    }
}

/// Feasible set `{Σ a_i u_i = mass, u ≥ 0, u_i = 0 off free}`. Nodes with
/// `a_i = 0` are never free.
#[derive(Debug, Clone)]
pub struct MassConstraint {
    pub weights: Vec<f64>,
    pub free: Vec<bool>,
    pub mass: f64,
}

impl MassConstraint {
    pub fn new(weights: Vec<f64>, mass: f64) -> Self {
        let free = weights.iter().map(|&a| a > 0.0).collect();
        Self { weights, free, mass }
    }

    pub fn fix(&mut self, i: usize) {
        self.free[i] = false;
    }

    pub fn mass_of(&self, u: &[f64]) -> f64 {
        self.weights.iter().zip(u).map(|(a, x)| a * x).sum()
    }

    /// Weighted-`L²` projection of `v` onto the feasible set:
    /// `u_i = max(0, v_i − λ)` with `λ` chosen by sorting breakpoints.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; v.len()];
        if self.mass <= 0.0 {
            return u;
        }
        let mut idx: Vec<usize> = (0..v.len()).filter(|&i| self.free[i] && v[i] > f64::NEG_INFINITY).collect();
        if idx.is_empty() {
            return u;
        }
        idx.sort_by(|&i, &j| v[j].total_cmp(&v[i]));
        let (mut a_sum, mut av_sum) = (0.0, 0.0);
        let mut lambda = f64::NAN;
        for (k, &i) in idx.iter().enumerate() {
            a_sum += self.weights[i];
            av_sum += self.weights[i] * v[i];
            let cand = (av_sum - self.mass) / a_sum;
            let next = idx.get(k + 1).map_or(f64::NEG_INFINITY, |&j| v[j]);
            if cand >= next {
                lambda = cand;
                break;
            }
        }
        for &i in &idx {
            u[i] = (v[i] - lambda).max(0.0);
        }
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpgOptions {
    pub max_iter: usize,
    /// Relative stationarity tolerance.
    pub tol: f64,
    pub armijo: f64,
    pub record_trace: bool,
}

impl Default for SpgOptions {
    fn default() -> Self {
        Self { max_iter: 50_000, tol: 1e-8, armijo: 1e-4, record_trace: false }
    }
}

#[derive(Debug, Clone)]
pub struct SpgResult {
    pub u: Vec<f64>,
    pub energy: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Accepted energies, starting with the projected initial point.
    pub trace: Vec<f64>,
}

const STALL_WINDOW: usize = 10;

/// Minimize `obj` over the constraint set from `u0`.
pub fn minimize(obj: &dyn Objective, c: &MassConstraint, u0: &[f64], opts: &SpgOptions) -> SpgResult {
    let n = u0.len();
    let a = &c.weights;
    let mut u = c.project(u0);
    let mut g = vec![0.0; n];
    let mut e = obj.value_and_gradient(&u, &mut g);
    let mut trace = if opts.record_trace { vec![e] } else { Vec::new() };
    let mut history = vec![e];
    if !e.is_finite() {
        return SpgResult { u, energy: e, status: SolveStatus::Diverged, iterations: 0, trace };
    }
    let scaled = |g: &[f64], i: usize| g[i] / a[i];
    let gmax = (0..n).filter(|&i| c.free[i] && g[i].is_finite()).map(|i| scaled(&g, i).abs()).fold(0.0, f64::max);
    let umax = u.iter().cloned().fold(0.0, f64::max);
    let mut t = if gmax > 0.0 && umax > 0.0 { 0.1 * umax / gmax } else { 1.0 };

    let mut v = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        for i in 0..n {
            v[i] = if !c.free[i] {
                0.0
            } else if g[i] == f64::INFINITY {
                f64::NEG_INFINITY
            } else {
                u[i] - t * scaled(&g, i)
            };
        }
        let p = c.project(&v);
        let d: Vec<f64> = p.iter().zip(&u).map(|(x, y)| x - y).collect();
        let gd: f64 = (0..n).filter(|&i| g[i].is_finite() && d[i] != 0.0).map(|i| g[i] * d[i]).sum();
        let scale = e.abs().max(f64::MIN_POSITIVE);
        if -gd <= opts.tol * scale && stalled(&history, opts.tol * scale) {
            status = SolveStatus::Converged;
            break;
        }
        if gd >= 0.0 {
            // Direction is no longer a descent direction at rounding level.
            status = if -gd <= opts.tol.sqrt() * scale { SolveStatus::Converged } else { SolveStatus::Diverged };
            break;
        }

        let mut lam = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = (u[i] + lam * d[i]).max(0.0);
            }
            let et = obj.value(&trial);
            if et <= e + opts.armijo * lam * gd {
                accepted = Some(et);
                break;
            }
            lam *= 0.5;
        }
        let Some(_) = accepted else {
            status = if -gd <= opts.tol.sqrt() * scale { SolveStatus::Converged } else { SolveStatus::Diverged };
            break;
        };
        let e_new = obj.value_and_gradient(&trial, &mut g_new);
        if !e_new.is_finite() {
            status = SolveStatus::Diverged;
            break;
        }
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..n {
            if c.free[i] && g[i].is_finite() && g_new[i].is_finite() {
                let s = trial[i] - u[i];
                ss += a[i] * s * s;
                sy += s * (g_new[i] - g[i]);
            }
        }
        t = if sy > 0.0 { (ss / sy).clamp(1e-30, 1e30) } else { (t * 4.0).min(1e30) };
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut g, &mut g_new);
        e = e_new;
        history.push(e);
        if opts.record_trace {
            trace.push(e);
        }
    }
    SpgResult { u, energy: e, status, iterations, trace }
}

/// Minimize `∫ f(u, ∇u)` on a geometry.
///
/// For `|ξ|^p + u^s` with `0 < s < 1` the infinite slope at `u = 0` freezes
/// every emptied cell, and each support becomes a one-sided local minimum.
/// There the solve first follows the smoothed integrands
/// [`SmoothedPowerSum`] with `δ = 10^{-k} max u₀`, `k = k₀..=6`, and then
/// finishes on the exact energy. `continuation = Some(k₀)`; warm starts
/// begin at a larger `k₀` (wide smoothing spreads mass over the whole box)
/// or skip the stages with `None`.
pub fn minimize_energy(
    geometry: &Geometry,
    f: &LagrangianSpec,
    c: &MassConstraint,
    u0: &[f64],
    opts: &SpgOptions,
    continuation: Option<u32>,
) -> SpgResult {
    let mut start = u0.to_vec();
    let mut spent = 0;
    if let (Some(k0), LagrangianKind::PowerSum { p, s }) = (continuation, &f.kind) {
        let (p, s) = (*p, *s);
        if s > 0.0 && s < 1.0 {
            let top = u0.iter().cloned().fold(0.0, f64::max).max(c.mass / c.weights.iter().sum::<f64>());
            let stage = SpgOptions { tol: opts.tol.max(1e-6), record_trace: false, ..*opts };
            for k in k0.min(6)..=6 {
                let smooth = SmoothedPowerSum { p, s, delta: top * 10f64.powi(-(k as i32)) };
                let obj = EnergyObjective { geometry, integrand: &smooth };
                let r = minimize(&obj, c, &start, &stage);
                spent += r.iterations;
                start = r.u;
            }
        }
    }
    let obj = EnergyObjective { geometry, integrand: f };
    let mut r = minimize(&obj, c, &start, opts);
    r.iterations += spent;
    r
}

fn stalled(history: &[f64], eps: f64) -> bool {
    if history.len() <= STALL_WINDOW {
        return history.len() > 1 && history[0] - history[history.len() - 1] <= 10.0 * eps;
    }
    let k = history.len() - 1;
    history[k - STALL_WINDOW] - history[k] <= 10.0 * eps
}
