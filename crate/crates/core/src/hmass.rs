//! `H`-mass of discrete measures and structural checks on cost functions.
//!
//! For `u = Σ m_i δ_{x_i} + u^d` with diffuse part of total mass `|u^d|`,
//! `M^H(u) = Σ H(m_i) + H′(0⁺)|u^d|` with `0·∞ = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::optim::SolveStatus;
use crate::radial_solver::CostCurve;

/// Slopes above this bound count as `+∞` for sampled curves.
pub const INFINITE_SLOPE: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CostFunction {
    /// `c m^α`.
    Power {
        c: f64,
        alpha: f64,
    },
    Sampled(SampledCost),
}

/// Piecewise linear through `(0, 0)` and the samples, continued along the
/// last segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCost {
    pub m: Vec<f64>,
    pub h: Vec<f64>,
    /// `H′(0⁺) = sup H_j/m_j`, or `+∞` past [`INFINITE_SLOPE`].
    #[serde(with = "crate::serde_ext")]
    pub slope_at_zero: f64,
}

impl SampledCost {
    pub fn new(m: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if m.is_empty() || m.len() != h.len() {
            return Err(invalid("sampled cost needs matching, non-empty m and H"));
        }
        if m.iter().any(|&x| !(x.is_finite() && x > 0.0)) || m.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("sampled masses must be positive and strictly increasing"));
        }
        if h.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(invalid("sampled costs must be finite and non-negative"));
        }
        let sup = m.iter().zip(&h).map(|(m, h)| h / m).fold(0.0, f64::max);
        let slope_at_zero = if sup > INFINITE_SLOPE { f64::INFINITY } else { sup };
        Ok(Self { m, h, slope_at_zero })
    }

    /// Converged samples of a cost curve.
    pub fn from_curve(curve: &CostCurve) -> Result<Self> {
        let (m, h) = curve.samples.iter().filter(|s| s.status == SolveStatus::Converged).map(|s| (s.m, s.h)).unzip();
        Self::new(m, h)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let k = self.m.partition_point(|&mj| mj < x);
        let (x0, y0, x1, y1) = if k == 0 {
            (0.0, 0.0, self.m[0], self.h[0])
        } else if k < self.m.len() {
            (self.m[k - 1], self.h[k - 1], self.m[k], self.h[k])
        } else if self.m.len() >= 2 {
            let n = self.m.len();
            (self.m[n - 2], self.h[n - 2], self.m[n - 1], self.h[n - 1])
        } else {
            (0.0, 0.0, self.m[0], self.h[0])
        };
        y0 + (x - x0) * (y1 - y0) / (x1 - x0)
    }
}

impl CostFunction {
    pub fn power(c: f64, alpha: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!("power cost needs c > 0, got {c}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid(format!("power cost needs alpha in (0, 1], got {alpha}")));
        }
        Ok(CostFunction::Power { c, alpha })
    }

    pub fn eval(&self, m: f64) -> f64 {
        match self {
            CostFunction::Power { c, alpha } => {
                if m <= 0.0 {
                    0.0
                } else {
                    c * m.powf(*alpha)
                }
            }
            CostFunction::Sampled(s) => s.eval(m),
        }
    }

    /// `H′(0⁺)`.
    pub fn slope_at_zero(&self) -> f64 {
        match self {
            CostFunction::Power { c, alpha } => {
                if *alpha < 1.0 {
                    f64::INFINITY
                } else {
                    *c
                }
            }
            CostFunction::Sampled(s) => s.slope_at_zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: Vec<f64>,
    pub m: f64,
}

/// Atoms plus the total mass of a diffuse part. Serialized as
/// `{"atoms": [[x₁, …, x_N, m], …], "diffuse": d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
    pub diffuse: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    atoms: Vec<Vec<f64>>,
    #[serde(default)]
    diffuse: f64,
}

impl TryFrom<RawMeasure> for AtomicMeasure {
    type Error = crate::Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        let atoms = raw
            .atoms
            .into_iter()
            .map(|mut row| {
                let m = row.pop().ok_or_else(|| invalid("atom rows need coordinates and a mass"))?;
                Ok(Atom { x: row, m })
            })
            .collect::<Result<Vec<_>>>()?;
        AtomicMeasure::new(atoms, raw.diffuse)
    }
}

impl From<AtomicMeasure> for RawMeasure {
    fn from(u: AtomicMeasure) -> Self {
        let atoms = u
            .atoms
            .into_iter()
            .map(|a| {
                let mut row = a.x;
                row.push(a.m);
                row
            })
            .collect();
        RawMeasure { atoms, diffuse: u.diffuse }
    }
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>, diffuse: f64) -> Result<Self> {
        if !(diffuse.is_finite() && diffuse >= 0.0) {
            return Err(invalid(format!("diffuse mass must be non-negative, got {diffuse}")));
        }
        if let Some(first) = atoms.first() {
            if atoms.iter().any(|a| a.x.len() != first.x.len() || a.x.is_empty()) {
                return Err(invalid("atoms must share a positive dimension"));
            }
        }
        if atoms.iter().any(|a| !(a.m.is_finite() && a.m > 0.0)) {
            return Err(invalid("atom masses must be positive"));
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].iter().any(|b| b.x == a.x) {
                return Err(invalid(format!("duplicate atom position {:?}", a.x)));
            }
        }
        Ok(Self { atoms, diffuse })
    }

    pub fn empty() -> Self {
        Self { atoms: Vec::new(), diffuse: 0.0 }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.m).sum::<f64>() + self.diffuse
    }

    /// All masses multiplied by `t > 0`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| Atom { x: a.x.clone(), m: t * a.m }).collect(),
            diffuse: t * self.diffuse,
        }
    }

    /// Atoms `i` and `j` replaced by one atom of the summed mass at `x_i`.
    pub fn merged(&self, i: usize, j: usize) -> Self {
        let mut atoms = self.atoms.clone();
        let mj = atoms[j].m;
        atoms[i].m += mj;
        atoms.remove(j);
        Self { atoms, diffuse: self.diffuse }
    }
}

/// `M^H(u) = Σ H(m_i) + H′(0⁺)|u^d|`.
pub fn h_mass(h: &CostFunction, u: &AtomicMeasure) -> f64 {
    let atomic: f64 = u.atoms.iter().map(|a| h.eval(a.m)).sum();
    let diffuse = if u.diffuse > 0.0 { h.slope_at_zero() * u.diffuse } else { 0.0 };
    atomic + diffuse
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityOptions {
    /// Relative slack before `H(a+b) > H(a) + H(b)` counts as a violation.
    pub violation_tol: f64,
    /// Relative gap below which `H(a+b) = H(a) + H(b)`.
    pub equality_tol: f64,
    /// Relative deviation allowed when confirming linearity on `[0, a+b]`.
    pub linearity_tol: f64,
}

impl Default for SubadditivityOptions {
    fn default() -> Self {
        Self { violation_tol: 1e-9, equality_tol: 1e-9, linearity_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDefect {
    pub a: f64,
    pub b: f64,
    /// `H(a+b) − H(a) − H(b)`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub violations: Vec<PairDefect>,
    pub equalities: Vec<PairDefect>,
    /// Largest `m = a + b` with an equality for which linearity on
    /// `[0, m]` was confirmed.
    pub linear_up_to: Option<f64>,
    /// Equalities whose linearity could not be confirmed.
    pub unconfirmed_equalities: usize,
}

/// Check `H(a + b) ≤ H(a) + H(b)` on all pairs of the grid. An equality
/// at `0 < θ < m` forces `H` to be linear on `[0, m]`; that is verified on
/// the grid points below `m`.
pub fn subadditivity_check(h: &CostFunction, grid: &[f64], opts: &SubadditivityOptions) -> SubadditivityReport {
    let grid: Vec<f64> = grid.iter().cloned().filter(|&x| x > 0.0).collect();
    let mut violations = Vec::new();
    let mut equalities = Vec::new();
    let mut linear_up_to: Option<f64> = None;
    let mut unconfirmed = 0;
    for (j, &a) in grid.iter().enumerate() {
        for &b in &grid[j..] {
            let (ha, hb, hab) = (h.eval(a), h.eval(b), h.eval(a + b));
            let scale = (ha + hb).max(f64::MIN_POSITIVE);
            let excess = hab - ha - hb;
            let d = PairDefect { a, b, excess };
            if excess > opts.violation_tol * scale {
                violations.push(d);
            } else if excess.abs() <= opts.equality_tol * scale {
                equalities.push(d);
                let m = a + b;
                let slope = hab / m;
                let linear = grid
                    .iter()
                    .chain([a, b, m].iter())
                    .filter(|&&x| x <= m)
                    .all(|&x| (h.eval(x) - slope * x).abs() <= opts.linearity_tol * hab.max(f64::MIN_POSITIVE));
                if linear {
                    linear_up_to = Some(linear_up_to.map_or(m, |l: f64| l.max(m)));
                } else {
                    unconfirmed += 1;
                }
            }
        }
    }
    SubadditivityReport { violations, equalities, linear_up_to, unconfirmed_equalities: unconfirmed }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauOptions {
    /// Relative misfit allowed for the line through the origin.
    pub fit_tol: f64,
    /// Concavity defects within this relative band count as noise.
    pub noise_tol: f64,
}

impl Default for PlateauOptions {
    fn default() -> Self {
        Self { fit_tol: 1e-3, noise_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauReport {
    /// Estimate of `m_* = sup { m : H linear on [0, m] }` (a grid point).
    pub m_star: f64,
    /// Slope of the fitted line (the last fitted ratio when `m_* = 0`).
    pub slope: f64,
    /// Every consecutive triple beyond `m_*` is strictly concave.
    pub strictly_concave_beyond: bool,
    /// Some triple beyond `m_*` is convex beyond the noise band.
    pub inconclusive: bool,
}

/// Largest prefix of the positive grid on which one line through the
/// origin fits `H` within `fit_tol` (at least two points are needed), and a
/// strict-concavity check on consecutive triples beyond it.
pub fn detect_linear_plateau(h: &CostFunction, grid: &[f64], opts: &PlateauOptions) -> PlateauReport {
    let pts: Vec<(f64, f64)> = grid.iter().filter(|&&x| x > 0.0).map(|&x| (x, h.eval(x))).collect();
    let mut k_best = 0;
    let mut slope_best = pts.first().map_or(0.0, |p| p.1 / p.0);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, &(x, y)) in pts.iter().enumerate() {
        sxy += x * y;
        sxx += x * x;
        let c = sxy / sxx;
        let fits = pts[..=k].iter().all(|&(x, y)| (y - c * x).abs() <= opts.fit_tol * y.abs().max(f64::MIN_POSITIVE));
        if !fits {
            break;
        }
        if k >= 1 {
            k_best = k + 1;
            slope_best = c;
        }
    }
    let m_star = if k_best >= 2 { pts[k_best - 1].0 } else { 0.0 };
    // Triples start at the last linear point (or at the origin).
    let mut tail: Vec<(f64, f64)> = if k_best >= 2 { vec![pts[k_best - 1]] } else { vec![(0.0, 0.0)] };
    tail.extend_from_slice(&pts[k_best..]);
    let mut strict = true;
    let mut inconclusive = false;
    for w in tail.windows(3) {
        let ((x0, y0), (x1, y1), (x2, y2)) = (w[0], w[1], w[2]);
        let chord = y0 + (x1 - x0) * (y2 - y0) / (x2 - x0);
        let defect = (y1 - chord) / y1.abs().max(f64::MIN_POSITIVE);
        if defect <= opts.noise_tol {
            strict = false;
        }
        if defect < -opts.noise_tol {
            inconclusive = true;
        }
    }
    PlateauReport { m_star, slope: slope_best, strictly_concave_beyond: strict, inconclusive }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_cost() -> CostFunction {
        CostFunction::power(1.0, 0.5).unwrap()
    }

    #[test]
    fn h_mass_examples() {
        let u = AtomicMeasure::new(vec![Atom { x: vec![0.0], m: 1.0 }, Atom { x: vec![5.0], m: 4.0 }], 0.0).unwrap();
        assert_eq!(h_mass(&sqrt_cost(), &u), 3.0);
        assert_eq!(h_mass(&sqrt_cost(), &AtomicMeasure::empty()), 0.0);
        let d = AtomicMeasure::new(vec![], 0.1).unwrap();
        assert_eq!(h_mass(&sqrt_cost(), &d), f64::INFINITY);
        let lin = CostFunction::power(2.0, 1.0).unwrap();
        assert!((h_mass(&lin, &d) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn measure_validation_and_json() {
        assert!(AtomicMeasure::new(vec![Atom { x: vec![1.0], m: 1.0 }, Atom { x: vec![1.0], m: 2.0 }], 0.0).is_err());
        assert!(AtomicMeasure::new(vec![Atom { x: vec![1.0], m: 0.0 }], 0.0).is_err());
        let u = AtomicMeasure::new(vec![Atom { x: vec![0.5, -1.0], m: 2.0 }], 0.25).unwrap();
        let text = serde_json::to_string(&u).unwrap();
        assert_eq!(text, r#"{"atoms":[[0.5,-1.0,2.0]],"diffuse":0.25}"#);
        assert_eq!(serde_json::from_str::<AtomicMeasure>(&text).unwrap(), u);
    }

    #[test]
    fn sampled_interpolation() {
        let s = SampledCost::new(vec![1.0, 2.0], vec![1.0, 1.5]).unwrap();
        assert_eq!(s.eval(0.5), 0.5);
        assert_eq!(s.eval(1.5), 1.25);
        assert_eq!(s.eval(3.0), 2.0);
        assert_eq!(s.slope_at_zero, 1.0);
        let steep = SampledCost::new(vec![1e-10, 1.0], vec![1e-1, 1.0]).unwrap();
        assert_eq!(steep.slope_at_zero, f64::INFINITY);
    }

    #[test]
    fn subadditivity_of_sqrt_and_linear() {
        let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 0.25).collect();
        let r = subadditivity_check(&sqrt_cost(), &grid, &Default::default());
        assert!(r.violations.is_empty() && r.equalities.is_empty());
        let r = subadditivity_check(&CostFunction::power(1.0, 1.0).unwrap(), &grid, &Default::default());
        assert!(r.violations.is_empty());
        assert_eq!(r.equalities.len(), 20 * 21 / 2);
        assert_eq!(r.linear_up_to, Some(10.0));
    }

    #[test]
    fn plateau_of_constructed_curve() {
        let grid: Vec<f64> = (1..=30).map(|k| k as f64 * 0.1).collect();
        let h: Vec<f64> = grid.iter().map(|&m| if m <= 1.0 { m } else { 2.0 * m.sqrt() - 1.0 }).collect();
        let cf = CostFunction::Sampled(SampledCost::new(grid.clone(), h).unwrap());
        let r = detect_linear_plateau(&cf, &grid, &Default::default());
        assert!((r.m_star - 1.0).abs() <= 0.1 + 1e-12, "{r:?}");
        assert!(r.strictly_concave_beyond && !r.inconclusive);
        let r = detect_linear_plateau(&CostFunction::power(1.0, 5.0 / 7.0).unwrap(), &grid, &Default::default());
        assert_eq!(r.m_star, 0.0);
        assert!(r.strictly_concave_beyond);
    }
}
