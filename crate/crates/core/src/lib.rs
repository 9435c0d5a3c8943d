//! Minimal cost functions of mass-constrained first-order integral
//! functionals and the concentration of mass in their rescalings.
//!
//! For a Lagrangian `f(u, ξ) ≥ 0` with `f(0,0) = 0` the crate computes
//!
//! * the energy `E(u) = ∫ f(u, ∇u)` of discretized non-negative densities,
//! * the minimal cost `H(m) = inf { E(u) : ∫u = m }` by projected gradient
//!   descent on radial profiles ([`radial_solver`]),
//! * the `H`-mass `Σ H(m_i) + H'(0⁺)·|u^d|` of discrete measures ([`hmass`]),
//! * a greedy bubble decomposition of densities ([`bubbles`]),
//! * experiments on the rescaled energies
//!   `E_ε(u) = ∫ f(ε^N u, ε^{N+1}∇u) ε^{-N}` ([`gamma_lab`]),
//! * closed-form scaling exponents ([`exponents`]).
//!
//! The `masscon` binary wraps these in a small command-line front end
//! ([`cli`]); the `examples/` directory has one runnable program per
//! capability.

pub mod bubbles;
pub mod cli;
pub mod discretization;
pub mod error;
pub mod exponents;
pub mod gamma_lab;
pub mod hmass;
pub mod io;
pub mod lagrangian;
pub mod optim;
pub mod radial_solver;
mod serde_ext;

pub use discretization::{GridDensity, RadialProfile};
pub use error::{Error, Result};
pub use lagrangian::{LagrangianKind, LagrangianSpec, WFunction};

/// Surface area `|S^{N-1}|` of the unit sphere in `ℝ^N` (2 for `N = 1`).
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}
