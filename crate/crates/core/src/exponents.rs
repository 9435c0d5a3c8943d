//! Closed-form scaling exponents.
//!
//! * homogeneous cost `H(m) = H(1) m^α` for `∫ |∇u|^p + u^s` with
//!   `α = (1 − s/p + s/N)/(1 − s/p + 1/N)`, non-trivial iff `s ∈ (−p′, 1]`;
//! * mass scaling `λ = m^{(s/p − 1)/(1 + N − sN/p)}`;
//! * scale-invariant Lagrangians, `α = 1 − p/N`;
//! * droplet rescaling `ρ = N(1−s)/((N+2) + N(1−s))`, `ε̄ = ε^{(N+2)+N(1−s)}`;
//! * branched-transport approximations `β, γ₁, γ₂`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const DEGENERATE: f64 = 1e-300;

fn check_common(s: f64, p: f64, n: usize) -> Result<()> {
    if !s.is_finite() {
        return Err(invalid(format!("s must be finite, got {s}")));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(invalid(format!("p must exceed 1, got {p}")));
    }
    if n == 0 {
        return Err(invalid("N must be positive"));
    }
    Ok(())
}

/// Conjugate exponent `p′ = p/(p − 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Whether `H` is non-trivial, i.e. `s ∈ (−p′, 1]`.
pub fn is_nontrivial(s: f64, p: f64) -> bool {
    s > -conjugate(p) && s <= 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub alpha: f64,
    pub nontrivial: bool,
}

pub fn alpha_exponent(s: f64, p: f64, n: usize) -> Result<Alpha> {
    check_common(s, p, n)?;
    let nf = n as f64;
    let den = 1.0 - s / p + 1.0 / nf;
    if den.abs() < DEGENERATE {
        return Err(Error::DegenerateDenominator("1 - s/p + 1/N"));
    }
    let alpha = (1.0 - s / p + s / nf) / den;
    Ok(Alpha { alpha, nontrivial: is_nontrivial(s, p) })
}

/// Exponent `(s/p − 1)/(1 + N − sN/p)` of the mass scaling `λ`.
pub fn lambda_exponent(s: f64, p: f64, n: usize) -> Result<f64> {
    check_common(s, p, n)?;
    let nf = n as f64;
    let den = 1.0 + nf - s * nf / p;
    if den.abs() < DEGENERATE {
        return Err(Error::DegenerateDenominator("1 + N - sN/p"));
    }
    Ok((s / p - 1.0) / den)
}

/// `λ(m)` such that `u = m λ^N v(λ·)` maps unit-mass `v` to mass `m`
/// and multiplies the energy by `m^α`.
pub fn mass_scaling_lambda(m: f64, s: f64, p: f64, n: usize) -> Result<f64> {
    if !(m.is_finite() && m > 0.0) {
        return Err(invalid(format!("mass must be positive, got {m}")));
    }
    Ok(m.powf(lambda_exponent(s, p, n)?))
}

pub fn scale_invariant_alpha(p: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    if !(p > 1.0 && p < nf) {
        return Err(invalid(format!("scale-invariant exponent needs 1 < p < N, got p={p}, N={n}")));
    }
    Ok(1.0 - p / nf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropletExponents {
    pub rho: f64,
    pub epsbar_exponent: f64,
}

pub fn droplet_exponents(s: f64, n: usize) -> Result<DropletExponents> {
    if !(s.is_finite() && s < 1.0) {
        return Err(invalid(format!("droplet exponents need s < 1, got {s}")));
    }
    if n == 0 {
        return Err(invalid("N must be positive"));
    }
    let nf = n as f64;
    let e = (nf + 2.0) + nf * (1.0 - s);
    Ok(DropletExponents { rho: nf * (1.0 - s) / e, epsbar_exponent: e })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchedExponents {
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// `α ∈ (1 − 1/d, 1]`.
    pub supercritical: bool,
    /// `α ∈ ((2d − 4)/(2d + 1), 1]`.
    pub attainable: bool,
}

pub fn bt_exponents(alpha: f64, d: usize) -> Result<BranchedExponents> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if d < 2 {
        return Err(invalid(format!("d must be at least 2, got {d}")));
    }
    let df = d as f64;
    let gamma2 = 3.0 - df + alpha * (df - 1.0);
    if gamma2.abs() < DEGENERATE {
        return Err(Error::DegenerateDenominator("3 - d + alpha(d - 1)"));
    }
    Ok(BranchedExponents {
        beta: (2.0 - 2.0 * df + 2.0 * alpha * df) / gamma2,
        gamma1: (df - 1.0) * (1.0 - alpha),
        gamma2,
        supercritical: alpha > 1.0 - 1.0 / df,
        attainable: alpha > (2.0 * df - 4.0) / (2.0 * df + 1.0),
    })
}

/// Everything computable from `(s, p, N)`; entries whose preconditions
/// fail are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub s: f64,
    pub p: f64,
    pub n: usize,
    pub alpha: Option<f64>,
    pub nontrivial: bool,
    pub lambda_exponent: Option<f64>,
    pub scale_invariant_alpha: Option<f64>,
    pub rho: Option<f64>,
    pub epsbar_exponent: Option<f64>,
    /// Branched-transport exponents evaluated at `α` and `d = N` (`N ≥ 2`).
    pub branched: Option<BranchedExponents>,
}

pub fn exponent_report(s: f64, p: f64, n: usize) -> Result<ExponentReport> {
    let a = alpha_exponent(s, p, n)?;
    let drop = droplet_exponents(s, n).ok();
    Ok(ExponentReport {
        s,
        p,
        n,
        alpha: Some(a.alpha),
        nontrivial: a.nontrivial,
        lambda_exponent: lambda_exponent(s, p, n).ok(),
        scale_invariant_alpha: scale_invariant_alpha(p, n).ok(),
        rho: drop.map(|d| d.rho),
        epsbar_exponent: drop.map(|d| d.epsbar_exponent),
        branched: bt_exponents(a.alpha, n).ok(),
    })
}

impl ExponentReport {
    /// Aligned `name = value` lines.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x}"));
        let mut rows = vec![
            ("s", format!("{}", self.s)),
            ("p", format!("{}", self.p)),
            ("N", format!("{}", self.n)),
            ("alpha", opt(self.alpha)),
            ("nontrivial", format!("{}", self.nontrivial)),
            ("lambda_exponent", opt(self.lambda_exponent)),
            ("scale_invariant_alpha", opt(self.scale_invariant_alpha)),
            ("rho", opt(self.rho)),
            ("epsbar_exponent", opt(self.epsbar_exponent)),
        ];
        if let Some(b) = self.branched {
            rows.push(("beta", format!("{}", b.beta)));
            rows.push(("gamma1", format!("{}", b.gamma1)));
            rows.push(("gamma2", format!("{}", b.gamma2)));
            rows.push(("supercritical", format!("{}", b.supercritical)));
            rows.push(("attainable", format!("{}", b.attainable)));
        }
        let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<w$} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_exponent(1.0, 2.0, 3).unwrap().alpha, 1.0);
        assert!((alpha_exponent(0.0, 2.0, 1).unwrap().alpha - 0.5).abs() < 1e-15);
        let a = alpha_exponent(-2.0, 2.0, 1).unwrap();
        assert!(a.alpha.abs() < 1e-15);
        assert!(!a.nontrivial);
        assert!((alpha_exponent(0.5, 2.0, 1).unwrap().alpha - 5.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_alpha_denominator() {
        // 1 - s/2 + 1 = 0 at s = 4, outside s <= 1 but still a guard
        assert!(matches!(alpha_exponent(4.0, 2.0, 1), Err(Error::DegenerateDenominator(_))));
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(mass_scaling_lambda(1.0, 0.3, 2.5, 2).unwrap(), 1.0);
        assert!((mass_scaling_lambda(2.0, 0.0, 2.0, 1).unwrap() - 2f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn scale_invariant_examples() {
        assert!((scale_invariant_alpha(2.0, 3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(scale_invariant_alpha(2.0, 4).unwrap(), 0.5);
        assert!(scale_invariant_alpha(3.0, 3).is_err());
        assert!(scale_invariant_alpha(3.0 - 1e-9, 3).unwrap() < 1e-9);
    }

    #[test]
    fn droplet_examples() {
        assert_eq!(droplet_exponents(-2.0, 1).unwrap().rho, 0.5);
        let d = droplet_exponents(0.0, 2).unwrap();
        assert!((d.rho - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.epsbar_exponent, 6.0);
        assert!(droplet_exponents(1.0 - 1e-12, 3).unwrap().rho < 1e-11);
    }

    #[test]
    fn branched_examples() {
        let b = bt_exponents(1.0, 2).unwrap();
        assert_eq!((b.beta, b.gamma1, b.gamma2), (1.0, 0.0, 2.0));
        let b = bt_exponents(0.75, 2).unwrap();
        assert!((b.beta - 4.0 / 7.0).abs() < 1e-15);
        assert!((b.gamma1 - 0.25).abs() < 1e-15);
        assert!((b.gamma2 - 1.75).abs() < 1e-15);
        assert!(b.supercritical && b.attainable);
        for d in 2..8 {
            assert_eq!(bt_exponents(1.0, d).unwrap().gamma1, 0.0);
        }
    }

    #[test]
    fn report_text_mentions_alpha() {
        let r = exponent_report(0.5, 2.0, 1).unwrap();
        assert!(r.to_text().contains("alpha"));
        assert!(r.branched.is_none());
    }
}
