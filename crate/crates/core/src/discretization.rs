//! Discretized non-negative densities and the quadrature of `∫ f(u, ∇u)`.
//!
//! Both [`RadialProfile`] and [`GridDensity`] reduce to a tensor grid with
//! per-node quadrature weights. Gradients use forward differences, with a
//! backward difference at the last node of each axis. Radial weights are
//! `|S^{N−1}| τ_i Δr r_i^{N−1}` (trapezoid, `τ = 1/2` at the ends), grid
//! weights are `h^dim`, and mass uses the same weights as the energy.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lagrangian::LagrangianSpec;
use crate::sphere_area;

/// Values below `ZERO_THRESHOLD · max u` count as exact zeros.
pub const ZERO_THRESHOLD: f64 = 1e-14;

/// Integrand `φ(u, |ξ|)` with partial derivatives.
pub trait Integrand: Sync {
    fn value(&self, u: f64, xi: f64) -> f64;
    fn partials(&self, u: f64, xi: f64) -> (f64, f64);
}

impl Integrand for LagrangianSpec {
    fn value(&self, u: f64, xi: f64) -> f64 {
        self.eval(u, xi)
    }

    fn partials(&self, u: f64, xi: f64) -> (f64, f64) {
        LagrangianSpec::partials(self, u, xi)
    }
}

/// `f(ε^N u, ε^{N+1} ξ) ε^{−N}`.
pub struct Rescaled<'a> {
    f: &'a LagrangianSpec,
    a: f64,
    b: f64,
    c: f64,
}

impl<'a> Rescaled<'a> {
    pub fn new(f: &'a LagrangianSpec, eps: f64) -> Self {
        let n = f.dim as i32;
        Self { f, a: eps.powi(n), b: eps.powi(n + 1), c: eps.powi(-n) }
    }
}

impl Integrand for Rescaled<'_> {
    fn value(&self, u: f64, xi: f64) -> f64 {
        self.c * self.f.eval(self.a * u, self.b * xi)
    }

    fn partials(&self, u: f64, xi: f64) -> (f64, f64) {
        let (du, dxi) = self.f.partials(self.a * u, self.b * xi);
        (self.c * self.a * du, self.c * self.b * dxi)
    }
}

/// `|ξ|^p + (u² + δ²)^{s/2} − δ^s`: a smoothing of `|ξ|^p + u^s` with zero
/// slope at `u = 0`, so that empty cells can refill during descent.
pub struct SmoothedPowerSum {
    pub p: f64,
    pub s: f64,
    pub delta: f64,
}

impl Integrand for SmoothedPowerSum {
    fn value(&self, u: f64, xi: f64) -> f64 {
        let d2 = self.delta * self.delta;
        xi.powf(self.p) + (u * u + d2).powf(0.5 * self.s) - self.delta.powf(self.s)
    }

    fn partials(&self, u: f64, xi: f64) -> (f64, f64) {
        let d2 = self.delta * self.delta;
        let du = self.s * u * (u * u + d2).powf(0.5 * self.s - 1.0);
        (du, self.p * xi.powf(self.p - 1.0))
    }
}

/// Tensor grid (row-major, first axis slowest) with quadrature weights.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub shape: Vec<usize>,
    pub h: f64,
    pub weights: Vec<f64>,
}

impl Geometry {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.shape.len()];
        for a in (0..self.shape.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    /// Difference pairs `(lo, hi)` per axis at node `i`: `∂_a u ≈ (u_hi − u_lo)/h`.
    fn pairs(&self, i: usize, strides: &[usize], out: &mut [(usize, usize)]) -> usize {
        let mut k = 0;
        for (&n, &st) in self.shape.iter().zip(strides) {
            if n < 2 {
                continue;
            }
            let ia = (i / st) % n;
            out[k] = if ia + 1 < n { (i, i + st) } else { (i - st, i) };
            k += 1;
        }
        k
    }

    pub fn mass(&self, u: &[f64]) -> f64 {
        self.weights.iter().zip(u).map(|(w, x)| w * x).sum()
    }

    /// `Σ w_i φ(u_i, |∇u|_i)`; when `grad` is given it receives `∂E/∂u`.
    pub fn energy(&self, phi: &dyn Integrand, u: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        assert_eq!(u.len(), self.len(), "density length does not match geometry");
        let max = u.iter().cloned().fold(0.0, f64::max);
        let thr = ZERO_THRESHOLD * max;
        let strides = self.strides();
        let inv_h = 1.0 / self.h;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut pairs = [(0usize, 0usize); 2];
        let mut total = 0.0;
        for i in 0..u.len() {
            let w = self.weights[i];
            if w == 0.0 {
                continue;
            }
            let k = self.pairs(i, &strides, &mut pairs);
            let mut diffs = [0.0; 2];
            let mut sq = 0.0;
            let mut small = true;
            for a in 0..k {
                let (lo, hi) = pairs[a];
                let d = u[hi] - u[lo];
                small &= d.abs() < thr;
                diffs[a] = d * inv_h;
                sq += diffs[a] * diffs[a];
            }
            let ui = if u[i] < thr { 0.0 } else { u[i] };
            if ui == 0.0 && small {
                // f(0, 0) = 0; the one-sided slope still matters for descent.
                if let Some(g) = grad.as_deref_mut() {
                    g[i] += w * phi.partials(0.0, 0.0).0;
                }
                continue;
            }
            let xi = sq.sqrt();
            total += w * phi.value(ui, xi);
            if let Some(g) = grad.as_deref_mut() {
                let (du, dxi) = phi.partials(ui, xi);
                g[i] += w * du;
                if xi > 0.0 && dxi != 0.0 {
                    let c = w * dxi / xi * inv_h;
                    for a in 0..k {
                        let (lo, hi) = pairs[a];
                        g[hi] += c * diffs[a];
                        g[lo] -= c * diffs[a];
                    }
                }
            }
        }
        total
    }
}

/// Radial profile `u(r_i)`, `r_i = iR/n`, with `u(R) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub dim: usize,
    pub radius: f64,
    pub values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(dim: usize, radius: f64, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid(format!("radius must be positive, got {radius}")));
        }
        if values.len() < 2 {
            return Err(invalid("radial profile needs at least two nodes"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("radial profile values must be finite and non-negative"));
        }
        if *values.last().unwrap() != 0.0 {
            return Err(invalid("radial profile must vanish at r = R"));
        }
        Ok(Self { dim, radius, values })
    }

    pub fn zeros(dim: usize, radius: f64, n: usize) -> Self {
        Self { dim, radius, values: vec![0.0; n + 1] }
    }

    /// Sample `g(r)` at the nodes; the last node is set to 0.
    pub fn from_fn(dim: usize, radius: f64, n: usize, g: impl Fn(f64) -> f64) -> Self {
        let dr = radius / n as f64;
        let mut values: Vec<f64> = (0..=n).map(|i| g(i as f64 * dr).max(0.0)).collect();
        values[n] = 0.0;
        Self { dim, radius, values }
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dr(&self) -> f64 {
        self.radius / self.n() as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr()
    }

    pub fn geometry(&self) -> Geometry {
        radial_geometry(self.dim, self.radius, self.n())
    }

    pub fn mass(&self) -> f64 {
        self.geometry().mass(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest node radius carrying a value above the zero threshold.
    pub fn support_radius(&self) -> f64 {
        let thr = ZERO_THRESHOLD * self.max();
        self.values.iter().rposition(|&v| v > thr).map_or(0.0, |i| self.r(i))
    }

    /// Linear interpolation, 0 beyond `R`.
    pub fn eval_at(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.radius {
            return 0.0;
        }
        let x = r / self.dr();
        let i = x.floor() as usize;
        let t = x - i as f64;
        (1.0 - t) * self.values[i] + t * self.values[(i + 1).min(self.n())]
    }
}

pub fn radial_geometry(dim: usize, radius: f64, n: usize) -> Geometry {
    let dr = radius / n as f64;
    let area = sphere_area(dim);
    let weights = (0..=n)
        .map(|i| {
            let tau = if i == 0 || i == n { 0.5 } else { 1.0 };
            area * tau * dr * (i as f64 * dr).powi(dim as i32 - 1)
        })
        .collect();
    Geometry { shape: vec![n + 1], h: dr, weights }
}

/// Density on a uniform grid in dimension 1 or 2; node `i` sits at
/// `origin + h·index`, and each node carries the cell volume `h^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub dim: usize,
    pub origin: Vec<f64>,
    pub h: f64,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn new(origin: Vec<f64>, h: f64, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let dim = shape.len();
        if !(1..=2).contains(&dim) || origin.len() != dim {
            return Err(invalid("grid densities must be 1- or 2-dimensional"));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("grid spacing must be positive, got {h}")));
        }
        if shape.contains(&0) || shape.iter().product::<usize>() != values.len() {
            return Err(Error::DimensionMismatch(format!("shape {shape:?} does not match {} values", values.len())));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("grid values must be finite and non-negative"));
        }
        Ok(Self { dim, origin, h, shape, values })
    }

    pub fn zeros(origin: Vec<f64>, h: f64, shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self { dim: shape.len(), origin, h, shape, values: vec![0.0; len] }
    }

    /// Sample `g` at the node positions (negative values clipped).
    pub fn from_fn(origin: Vec<f64>, h: f64, shape: Vec<usize>, g: impl Fn(&[f64]) -> f64) -> Self {
        let mut d = Self::zeros(origin, h, shape);
        for i in 0..d.values.len() {
            let x = d.coords(i);
            d.values[i] = g(&x).max(0.0);
        }
        d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Multi-index of node `i`.
    pub fn index(&self, i: usize) -> Vec<usize> {
        match self.dim {
            1 => vec![i],
            _ => vec![i / self.shape[1], i % self.shape[1]],
        }
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        self.index(i).iter().zip(&self.origin).map(|(&k, &o)| o + k as f64 * self.h).collect()
    }

    pub fn geometry(&self) -> Geometry {
        Geometry { shape: self.shape.clone(), h: self.h, weights: vec![self.cell_volume(); self.len()] }
    }

    pub fn mass(&self) -> f64 {
        self.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Node of the largest value (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Multilinear interpolation at `x`, 0 outside the grid.
    pub fn eval_at(&self, x: &[f64]) -> f64 {
        let mut base = [0usize; 2];
        let mut frac = [0.0; 2];
        for a in 0..self.dim {
            let t = (x[a] - self.origin[a]) / self.h;
            let n = self.shape[a];
            if !(t >= 0.0 && t <= (n - 1) as f64) {
                return 0.0;
            }
            let k = (t.floor() as usize).min(n.saturating_sub(2));
            base[a] = k;
            frac[a] = t - k as f64;
        }
        let at = |ix: usize, iy: usize| -> f64 {
            match self.dim {
                1 => self.values.get(ix).copied().unwrap_or(0.0),
                _ => {
                    if ix < self.shape[0] && iy < self.shape[1] {
                        self.values[ix * self.shape[1] + iy]
                    } else {
                        0.0
                    }
                }
            }
        };
        match self.dim {
            1 => (1.0 - frac[0]) * at(base[0], 0) + frac[0] * at(base[0] + 1, 0),
            _ => {
                let (i, j, s, t) = (base[0], base[1], frac[0], frac[1]);
                (1.0 - s) * (1.0 - t) * at(i, j)
                    + s * (1.0 - t) * at(i + 1, j)
                    + (1.0 - s) * t * at(i, j + 1)
                    + s * t * at(i + 1, j + 1)
            }
        }
    }
}

/// Anything with a discretized energy.
pub trait Discretized {
    fn dim(&self) -> usize;
    fn values(&self) -> &[f64];
    fn geometry(&self) -> Geometry;
}

impl Discretized for RadialProfile {
    fn dim(&self) -> usize {
        self.dim
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn geometry(&self) -> Geometry {
        RadialProfile::geometry(self)
    }
}

impl Discretized for GridDensity {
    fn dim(&self) -> usize {
        self.dim
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn geometry(&self) -> Geometry {
        GridDensity::geometry(self)
    }
}

fn check_dim(f: &LagrangianSpec, u: &impl Discretized) -> Result<()> {
    if f.dim != u.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Lagrangian is {}-dimensional but the density is {}-dimensional",
            f.dim,
            u.dim()
        )));
    }
    Ok(())
}

/// `∫ f(u, |∇u|)`; `+∞` when any cell is infinite.
pub fn eval_energy(f: &LagrangianSpec, u: &impl Discretized) -> Result<f64> {
    check_dim(f, u)?;
    Ok(u.geometry().energy(f, u.values(), None))
}

/// `∫ f(ε^N u, ε^{N+1} ∇u) ε^{−N}`.
pub fn rescaled_energy(f: &LagrangianSpec, eps: f64, u: &impl Discretized) -> Result<f64> {
    check_dim(f, u)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    if eps == 1.0 {
        return eval_energy(f, u);
    }
    Ok(u.geometry().energy(&Rescaled::new(f, eps), u.values(), None))
}
