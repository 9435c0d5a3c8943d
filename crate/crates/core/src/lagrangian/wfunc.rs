use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A double-well type potential `W: ℝ₊ → ℝ₊` with `W(u) ~ u^s` at infinity.
///
/// All variants follow the convention `W(0) = 0`, also when `u^s` blows up
/// at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WFunction {
    /// `u^s`.
    Power { s: f64 },
    /// `u^s + u`.
    PowerPlusLinear { s: f64 },
    /// `u^s (1 + e^{-u})`.
    PowerExp { s: f64 },
    /// `u` on `[0, 1]`, `u^s` beyond.
    LinearThenPower { s: f64 },
    /// Piecewise linear interpolation of `(u, W(u))` nodes, continued by
    /// `W(u_last)·(u/u_last)^s` past the last node.
    Tabulated(WTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WTable {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub tail_exponent: f64,
}

impl WTable {
    pub fn new(u: Vec<f64>, w: Vec<f64>, tail_exponent: f64) -> Result<Self> {
        if u.len() != w.len() || u.len() < 2 {
            return Err(invalid("W table needs at least two (u, W) rows"));
        }
        if u[0] != 0.0 {
            return Err(invalid("W table must start at u = 0"));
        }
        if u.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid("W table abscissae must be strictly increasing"));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(invalid("W table values must be finite and non-negative"));
        }
        Ok(Self { u, w, tail_exponent })
    }

    fn segment(&self, x: f64) -> usize {
        match self.u.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(self.u.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.u.len() - 2),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let last = self.u.len() - 1;
        if x >= self.u[last] {
            return self.w[last] * (x / self.u[last]).powf(self.tail_exponent);
        }
        let i = self.segment(x);
        let t = (x - self.u[i]) / (self.u[i + 1] - self.u[i]);
        self.w[i] + t * (self.w[i + 1] - self.w[i])
    }

    fn derivative(&self, x: f64) -> f64 {
        let last = self.u.len() - 1;
        if x >= self.u[last] {
            let s = self.tail_exponent;
            return self.w[last] * s * x.powf(s - 1.0) / self.u[last].powf(s);
        }
        let i = self.segment(x);
        (self.w[i + 1] - self.w[i]) / (self.u[i + 1] - self.u[i])
    }
}

impl WFunction {
    /// Parse `builtin:<name>` with the far-field exponent `s`.
    pub fn builtin(name: &str, s: f64) -> Result<Self> {
        let name = name.strip_prefix("builtin:").unwrap_or(name);
        Ok(match name {
            "power" => WFunction::Power { s },
            "power_plus_linear" | "power+linear" => WFunction::PowerPlusLinear { s },
            "power_exp" => WFunction::PowerExp { s },
            "linear_then_power" => WFunction::LinearThenPower { s },
            other => return Err(invalid(format!("unknown builtin W `{other}`"))),
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match self {
            WFunction::Power { s } => u.powf(*s),
            WFunction::PowerPlusLinear { s } => u.powf(*s) + u,
            WFunction::PowerExp { s } => u.powf(*s) * (1.0 + (-u).exp()),
            WFunction::LinearThenPower { s } => {
                if u <= 1.0 {
                    u
                } else {
                    u.powf(*s)
                }
            }
            WFunction::Tabulated(t) => t.eval(u),
        }
    }

    /// Right derivative; `+∞` at the origin when `W(u)/u` is unbounded there.
    pub fn derivative(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return match self {
                WFunction::Power { s } => power_slope_at_zero(*s, 1.0, 0.0),
                WFunction::PowerPlusLinear { s } => power_slope_at_zero(*s, 1.0, 1.0),
                WFunction::PowerExp { s } => power_slope_at_zero(*s, 2.0, 0.0),
                WFunction::LinearThenPower { .. } => 1.0,
                WFunction::Tabulated(t) => t.derivative(0.0),
            };
        }
        match self {
            WFunction::Power { s } => s * u.powf(s - 1.0),
            WFunction::PowerPlusLinear { s } => s * u.powf(s - 1.0) + 1.0,
            WFunction::PowerExp { s } => {
                let e = (-u).exp();
                s * u.powf(s - 1.0) * (1.0 + e) - u.powf(*s) * e
            }
            WFunction::LinearThenPower { s } => {
                if u < 1.0 {
                    1.0
                } else {
                    s * u.powf(s - 1.0)
                }
            }
            WFunction::Tabulated(t) => t.derivative(u),
        }
    }

    /// Far-field exponent `s` in `W(u) ~ u^s`.
    pub fn tail_exponent(&self) -> f64 {
        match self {
            WFunction::Power { s }
            | WFunction::PowerPlusLinear { s }
            | WFunction::PowerExp { s }
            | WFunction::LinearThenPower { s } => *s,
            WFunction::Tabulated(t) => t.tail_exponent,
        }
    }
}

/// Right derivative at 0 of `c·u^s + l·u`.
fn power_slope_at_zero(s: f64, c: f64, l: f64) -> f64 {
    if s < 1.0 {
        f64::INFINITY
    } else if s == 1.0 {
        c + l
    } else {
        l
    }
}
