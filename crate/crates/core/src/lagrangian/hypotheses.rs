//! Sampled checks of the structural hypotheses on `f`: lower
//! semicontinuity, convexity in `ξ`, `f(0,0) = 0`, coercivity
//! `f ≥ α|ξ|^p − βu`, and the slope condition at the origin with `ρ(t) = t`.

use serde::{Deserialize, Serialize};

use super::{LagrangianKind, LagrangianSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeAtZero {
    /// `liminf f(u, ξ)/u` as `(u, ξ) → (0⁺, 0)`; may be `+∞`.
    #[serde(with = "crate::serde_ext")]
    pub value: f64,
    /// Grid point realizing the minimum (numeric evaluations only).
    pub argmin: Option<(f64, f64)>,
    pub analytic: bool,
}

fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    let n = ((b - a) * per_decade as f64).round() as usize;
    (0..=n).map(|i| 10f64.powf(a + (b - a) * i as f64 / n as f64)).collect()
}

/// Slope of `f` at the origin along the zero-gradient direction,
/// `f'₋(0⁺, 0) = liminf f(u, ξ)/u`.
pub fn slope_at_zero(f: &LagrangianSpec) -> SlopeAtZero {
    if let LagrangianKind::PowerSum { s, .. } = f.kind {
        let value = if s < 1.0 { f64::INFINITY } else { 1.0 };
        return SlopeAtZero { value, argmin: None, analytic: true };
    }
    let us = log_grid(1e-8, 1e-1, 10);
    let mut xis = vec![0.0];
    xis.extend(log_grid(1e-8, 1e-1, 10));
    let mut best = (f64::INFINITY, None);
    for &u in &us {
        for &xi in &xis {
            let r = f.eval(u, xi) / u;
            if r < best.0 {
                best = (r, Some((u, xi)));
            }
        }
    }
    SlopeAtZero { value: best.0, argmin: best.1, analytic: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub samples: usize,
    pub u_max: f64,
    pub xi_max: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { samples: 10_000, u_max: 1e3, xi_max: 1e3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    /// `(u, |ξ|)` where the check failed.
    pub witness: Option<(f64, f64)>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
    /// `∫₀¹ (∫_y¹ dt/ρ(t))^N dy` for `ρ(t) = t`, by quadrature, next to `N!`.
    pub rho_integral: (f64, f64),
}

impl HypothesisReport {
    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passed(&self, name: &str) -> bool {
        self.get(name).is_some_and(|c| c.passed)
    }
}

/// Radical inverse in base `b` (Halton sequence coordinate).
fn halton(mut i: usize, b: usize) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

struct Sample {
    u: f64,
    xi: f64,
    xi_a: [f64; 2],
    xi_b: [f64; 2],
}

fn samples(cfg: &SampleConfig, dim: usize) -> Vec<Sample> {
    // Cubic warp concentrates points near the origin while covering the box.
    (1..=cfg.samples)
        .map(|i| {
            let u = cfg.u_max * halton(i, 2).powi(3);
            let xi = cfg.xi_max * halton(i, 3).powi(3);
            let r1 = cfg.xi_max * halton(i, 5).powi(3);
            let r2 = cfg.xi_max * halton(i, 7).powi(3);
            let (t1, t2) = if dim == 1 {
                let sign = |x: f64| if x < 0.5 { 0.0 } else { std::f64::consts::PI };
                (sign(halton(i, 11)), sign(halton(i, 13)))
            } else {
                let tau = 2.0 * std::f64::consts::PI;
                (tau * halton(i, 11), tau * halton(i, 13))
            };
            Sample { u, xi, xi_a: [r1 * t1.cos(), r1 * t1.sin()], xi_b: [r2 * t2.cos(), r2 * t2.sin()] }
        })
        .collect()
}

fn check(name: &str, failure: Option<(f64, f64)>, ok_detail: &str, fail_detail: String) -> HypothesisCheck {
    HypothesisCheck {
        name: name.into(),
        passed: failure.is_none(),
        witness: failure,
        detail: if failure.is_none() { ok_detail.into() } else { fail_detail },
    }
}

fn rho_integral(n: usize) -> (f64, f64) {
    // y = e^{-t}: ∫₀^∞ t^N e^{-t} dt
    let steps = 60_000;
    let h = 60.0 / steps as f64;
    let g = |t: f64| t.powi(n as i32) * (-t).exp();
    let interior: f64 = (1..steps).map(|k| g(k as f64 * h)).sum();
    let numeric = h * (interior + 0.5 * (g(0.0) + g(60.0)));
    let exact = (1..=n).map(|k| k as f64).product();
    (numeric, exact)
}

pub fn verify_hypotheses(f: &LagrangianSpec, cfg: &SampleConfig) -> HypothesisReport {
    let pts = samples(cfg, f.dim);
    let norm = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
    let mut checks = Vec::new();

    // (H1): an upward jump keeps its size as the neighbour distance
    // shrinks, while a steep continuous slope does not.
    let excess = |u: f64, xi: f64, v: f64, rel: f64| {
        let du = rel * (1.0 + u);
        let dx = rel * (1.0 + xi);
        let near = [(u + du, xi), ((u - du).max(0.0), xi), (u, xi + dx), (u, (xi - dx).max(0.0))]
            .iter()
            .map(|&(a, b)| f.eval(a, b))
            .fold(f64::INFINITY, f64::min);
        if v == near {
            0.0
        } else {
            (v - near) / (1.0 + near.abs())
        }
    };
    let h1 = pts.iter().find_map(|q| {
        let v = f.eval(q.u, q.xi);
        let fine = excess(q.u, q.xi, v, 1e-10);
        let jump = fine > 1e-6 && fine > 0.5 * excess(q.u, q.xi, v, 1e-8);
        jump.then_some((q.u, q.xi))
    });
    checks.push(check("H1", h1, "no upward jumps at sampled points", "value exceeds nearby values".into()));

    // (H2)
    let h2 = pts.iter().find_map(|q| {
        let (a, b) = (norm(q.xi_a), norm(q.xi_b));
        let mid = norm([(q.xi_a[0] + q.xi_b[0]) / 2.0, (q.xi_a[1] + q.xi_b[1]) / 2.0]);
        let (fa, fb, fm) = (f.eval(q.u, a), f.eval(q.u, b), f.eval(q.u, mid));
        let avg = 0.5 * (fa + fb);
        (fm > avg + 1e-9 * (1.0 + avg.abs())).then_some((q.u, mid))
    });
    checks.push(check("H2", h2, "midpoint convexity in ξ holds on all samples", "midpoint convexity fails".into()));

    // (H3)
    let zero = f.eval(0.0, 0.0);
    checks.push(check("H3", (zero != 0.0).then_some((0.0, 0.0)), "f(0,0) = 0", format!("f(0,0) = {zero}")));

    // (H5)
    let h5 = match f.coercivity_witness() {
        None => HypothesisCheck {
            name: "H5".into(),
            passed: false,
            witness: None,
            detail: "no coercivity witnesses supplied".into(),
        },
        Some(c) => {
            let worst = pts
                .iter()
                .map(|q| {
                    let lower = c.alpha * q.xi.powf(c.p) - c.beta * q.u;
                    let v = f.eval(q.u, q.xi);
                    (lower - v - 1e-9 * (1.0 + lower.abs()), q)
                })
                .filter(|(gap, _)| *gap > 0.0)
                .max_by(|a, b| a.0.total_cmp(&b.0));
            check(
                "H5",
                worst.map(|(_, q)| (q.u, q.xi)),
                &format!("f >= {}|xi|^{} - {}u on all samples", c.alpha, c.p, c.beta),
                format!("lower bound {}|xi|^{} - {}u violated", c.alpha, c.p, c.beta),
            )
        }
    };
    checks.push(h5);

    // (H6) with ρ(t) = t for N ≥ 2 and ρ ≡ 0 for N = 1.
    let lhs = slope_at_zero(f);
    let tail = log_grid(1e-8, 1e-6, 10);
    let (rhs, at) = tail
        .iter()
        .map(|&u| {
            let rho = if f.dim == 1 { 0.0 } else { u };
            (f.eval(u, rho) / u, u)
        })
        .fold((f64::NEG_INFINITY, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });
    let ok = lhs.value == f64::INFINITY || lhs.value >= rhs * (1.0 - 1e-3) - 1e-9;
    checks.push(HypothesisCheck {
        name: "H6".into(),
        passed: ok,
        witness: (!ok).then_some((at, if f.dim == 1 { 0.0 } else { at })),
        detail: format!("liminf slope {} vs limsup f(u, rho(u))/u {}", lhs.value, rhs),
    });

    HypothesisReport { checks, rho_integral: rho_integral(f.dim) }
}
