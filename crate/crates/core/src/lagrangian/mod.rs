//! Isotropic Lagrangians `f(u, ξ)` depending on `ξ` through `|ξ|` only.
//!
//! Every built-in kind satisfies `f(0, 0) = 0` exactly. `+∞` is a legal
//! value (for instance `(1 + u^e)|ξ|^p` at `u = 0`, `ξ ≠ 0`) and propagates
//! through energy sums.

mod config;
mod hypotheses;
mod wfunc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use config::LagrangianConfig;
pub use hypotheses::{slope_at_zero, verify_hypotheses, HypothesisCheck, HypothesisReport, SampleConfig, SlopeAtZero};
pub use wfunc::{WFunction, WTable};

/// Witnesses `(α, β, p)` for the lower bound `f(u, ξ) ≥ α|ξ|^p − βu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coercivity {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
}

/// Bilinear table of `f` over `(u, |ξ|)`; `+∞` outside the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FTable {
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    /// `values[i][j] = f(u[i], xi[j])`.
    pub values: Vec<Vec<f64>>,
}

impl FTable {
    pub fn new(u: Vec<f64>, xi: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let axis_ok = |a: &[f64]| a.len() >= 2 && a[0] == 0.0 && a.windows(2).all(|p| p[1] > p[0]);
        if !axis_ok(&u) || !axis_ok(&xi) {
            return Err(invalid("tabulated axes must start at 0 and increase strictly"));
        }
        if values.len() != u.len() || values.iter().any(|row| row.len() != xi.len()) {
            return Err(invalid("tabulated values must have shape len(u) x len(xi)"));
        }
        if values.iter().flatten().any(|v| v.is_nan() || *v < 0.0) {
            return Err(invalid("tabulated values must be non-negative"));
        }
        if values[0][0] != 0.0 {
            return Err(invalid("tabulated f must vanish at (0, 0)"));
        }
        Ok(Self { u, xi, values })
    }

    fn locate(axis: &[f64], x: f64) -> Option<(usize, f64)> {
        let last = *axis.last()?;
        if !(0.0..=last).contains(&x) {
            return None;
        }
        let i = match axis.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(axis.len() - 2),
            Err(i) => (i - 1).min(axis.len() - 2),
        };
        Some((i, (x - axis[i]) / (axis[i + 1] - axis[i])))
    }

    fn eval(&self, u: f64, xi: f64) -> f64 {
        self.eval_with_partials(u, xi).0
    }

    fn eval_with_partials(&self, u: f64, xi: f64) -> (f64, f64, f64) {
        let (Some((i, s)), Some((j, t))) = (Self::locate(&self.u, u), Self::locate(&self.xi, xi)) else {
            return (f64::INFINITY, 0.0, 0.0);
        };
        let v = &self.values;
        let (a, b, c, d) = (v[i][j], v[i + 1][j], v[i][j + 1], v[i + 1][j + 1]);
        let val = (1.0 - s) * (1.0 - t) * a + s * (1.0 - t) * b + (1.0 - s) * t * c + s * t * d;
        let du = ((1.0 - t) * (b - a) + t * (d - c)) / (self.u[i + 1] - self.u[i]);
        let dxi = ((1.0 - s) * (c - a) + s * (d - b)) / (self.xi[j + 1] - self.xi[j]);
        (val, du, dxi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LagrangianKind {
    /// `|ξ|^p + u^s` (with `u^s := 0` at `u = 0`).
    PowerSum {
        p: f64,
        s: f64,
    },
    /// `u^{p(1/p* − 1)} |ξ|^p`, `p* = pN/(N − p)`; zero where `u = 0`.
    ScaleInvariant {
        p: f64,
    },
    /// `(1 + u^{p(1/p* − 1)}) |ξ|^p`.
    ScaleInvariantPerturbed {
        p: f64,
    },
    /// `ε^{Ns} W(ε^{-N} u) + |ξ|²`.
    DropletW {
        s: f64,
        w: WFunction,
        eps: f64,
    },
    Tabulated(FTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianSpec {
    pub kind: LagrangianKind,
    /// Spatial dimension `N`.
    pub dim: usize,
    pub coercivity: Option<Coercivity>,
}

impl LagrangianSpec {
    pub fn new(kind: LagrangianKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension N must be positive"));
        }
        match &kind {
            LagrangianKind::PowerSum { p, s } => {
                if !(p.is_finite() && *p > 1.0) {
                    return Err(invalid(format!("PowerSum needs p > 1, got {p}")));
                }
                if !(s.is_finite() && *s <= 1.0) {
                    return Err(invalid(format!("PowerSum needs s <= 1, got {s}")));
                }
            }
            LagrangianKind::ScaleInvariant { p } | LagrangianKind::ScaleInvariantPerturbed { p } => {
                if !(*p > 1.0 && *p < dim as f64) {
                    return Err(invalid(format!("scale-invariant kinds need 1 < p < N, got p={p}, N={dim}")));
                }
            }
            LagrangianKind::DropletW { s, w, eps } => {
                if !(s.is_finite() && *s < 1.0) {
                    return Err(invalid(format!("droplet model needs s < 1, got {s}")));
                }
                if !(eps.is_finite() && *eps > 0.0) {
                    return Err(invalid(format!("droplet model needs eps > 0, got {eps}")));
                }
                if (w.tail_exponent() - s).abs() > 1e-12 {
                    return Err(invalid("W tail exponent must equal s"));
                }
            }
            LagrangianKind::Tabulated(_) => {}
        }
        Ok(Self { kind, dim, coercivity: None })
    }

    pub fn power_sum(p: f64, s: f64, dim: usize) -> Result<Self> {
        Self::new(LagrangianKind::PowerSum { p, s }, dim)
    }

    pub fn scale_invariant(p: f64, dim: usize) -> Result<Self> {
        Self::new(LagrangianKind::ScaleInvariant { p }, dim)
    }

    pub fn scale_invariant_perturbed(p: f64, dim: usize) -> Result<Self> {
        Self::new(LagrangianKind::ScaleInvariantPerturbed { p }, dim)
    }

    pub fn droplet(s: f64, w: WFunction, eps: f64, dim: usize) -> Result<Self> {
        Self::new(LagrangianKind::DropletW { s, w, eps }, dim)
    }

    pub fn with_coercivity(mut self, c: Coercivity) -> Self {
        self.coercivity = Some(c);
        self
    }

    /// Coercivity witnesses: the configured ones, or the natural choice for
    /// the kind (`f ≥ |ξ|^p` for the power-type kinds).
    pub fn coercivity_witness(&self) -> Option<Coercivity> {
        if self.coercivity.is_some() {
            return self.coercivity;
        }
        match &self.kind {
            LagrangianKind::PowerSum { p, .. } | LagrangianKind::ScaleInvariantPerturbed { p } => {
                Some(Coercivity { alpha: 1.0, beta: 0.0, p: *p })
            }
            LagrangianKind::ScaleInvariant { p } => Some(Coercivity { alpha: 1.0, beta: 1.0, p: *p }),
            LagrangianKind::DropletW { .. } => Some(Coercivity { alpha: 1.0, beta: 0.0, p: 2.0 }),
            LagrangianKind::Tabulated(_) => None,
        }
    }

    /// Exponent `p(1/p* − 1) = (N − p)/N − p` of the scale-invariant kinds.
    fn singular_exponent(&self, p: f64) -> f64 {
        let n = self.dim as f64;
        (n - p) / n - p
    }

    /// `f(u, ξ)` with `|ξ| = xi_norm`.
    pub fn eval(&self, u: f64, xi_norm: f64) -> f64 {
        if u == 0.0 && xi_norm == 0.0 {
            return 0.0;
        }
        match &self.kind {
            LagrangianKind::PowerSum { p, s } => {
                let zeroth = if u > 0.0 { u.powf(*s) } else { 0.0 };
                xi_norm.powf(*p) + zeroth
            }
            LagrangianKind::ScaleInvariant { p } => {
                if u > 0.0 && xi_norm > 0.0 {
                    u.powf(self.singular_exponent(*p)) * xi_norm.powf(*p)
                } else {
                    0.0
                }
            }
            LagrangianKind::ScaleInvariantPerturbed { p } => {
                if xi_norm == 0.0 {
                    0.0
                } else if u > 0.0 {
                    (1.0 + u.powf(self.singular_exponent(*p))) * xi_norm.powf(*p)
                } else {
                    f64::INFINITY
                }
            }
            LagrangianKind::DropletW { s, w, eps } => {
                let n = self.dim as f64;
                eps.powf(n * s) * w.eval(u * eps.powf(-n)) + xi_norm * xi_norm
            }
            LagrangianKind::Tabulated(t) => t.eval(u, xi_norm),
        }
    }

    /// `(∂f/∂u, ∂f/∂|ξ|)`. The `u`-derivative at `u = 0` is the right
    /// derivative and may be `+∞`.
    pub fn partials(&self, u: f64, xi_norm: f64) -> (f64, f64) {
        match &self.kind {
            LagrangianKind::PowerSum { p, s } => {
                let du = if u > 0.0 {
                    s * u.powf(s - 1.0)
                } else if *s < 1.0 {
                    f64::INFINITY
                } else {
                    1.0
                };
                (du, p * xi_norm.powf(p - 1.0))
            }
            LagrangianKind::ScaleInvariant { p } => {
                if u > 0.0 {
                    let e = self.singular_exponent(*p);
                    let xp = xi_norm.powf(*p);
                    (e * u.powf(e - 1.0) * xp, u.powf(e) * p * xi_norm.powf(p - 1.0))
                } else {
                    (0.0, 0.0)
                }
            }
            LagrangianKind::ScaleInvariantPerturbed { p } => {
                if u > 0.0 {
                    let e = self.singular_exponent(*p);
                    let xp = xi_norm.powf(*p);
                    let dxi = (1.0 + u.powf(e)) * p * xi_norm.powf(p - 1.0);
                    (e * u.powf(e - 1.0) * xp, dxi)
                } else {
                    (0.0, 0.0)
                }
            }
            LagrangianKind::DropletW { s, w, eps } => {
                let n = self.dim as f64;
                let inv = eps.powf(-n);
                (eps.powf(n * s) * inv * w.derivative(u * inv), 2.0 * xi_norm)
            }
            LagrangianKind::Tabulated(t) => {
                let (_, du, dxi) = t.eval_with_partials(u, xi_norm);
                (du, dxi)
            }
        }
    }

    /// Whether `f` is claimed convex in `ξ` (all built-in kinds).
    pub fn claims_xi_convexity(&self) -> bool {
        !matches!(self.kind, LagrangianKind::Tabulated(_))
    }

    /// Gradient exponent `p` used for coercivity and for the rescaling
    /// `ε^{N+1}`-weight, where the kind has one.
    pub fn gradient_exponent(&self) -> Option<f64> {
        match &self.kind {
            LagrangianKind::PowerSum { p, .. }
            | LagrangianKind::ScaleInvariant { p }
            | LagrangianKind::ScaleInvariantPerturbed { p } => Some(*p),
            LagrangianKind::DropletW { .. } => Some(2.0),
            LagrangianKind::Tabulated(_) => None,
        }
    }

    /// Zeroth-order exponent `s` for the power-type kinds.
    pub fn zeroth_order_exponent(&self) -> Option<f64> {
        match &self.kind {
            LagrangianKind::PowerSum { s, .. } | LagrangianKind::DropletW { s, .. } => Some(*s),
            _ => None,
        }
    }
}
