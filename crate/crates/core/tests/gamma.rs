use masscon::discretization::{GridDensity, Rescaled};
use masscon::gamma_lab::{
    droplet_equivalence_check, gamma_sweep, lemma_w_bound_check, liminf_surrogate_check, minimize_rescaled,
    vanishing_lower_bound_check, GammaConfig, InitPolicy, LemmaWOptions, RescaledOptions,
};
use masscon::hmass::{CostFunction, SampledCost};
use masscon::lagrangian::{LagrangianSpec, WFunction};
use masscon::optim::{minimize, EnergyObjective, MassConstraint, SpgOptions};
use masscon::radial_solver::{cost_curve, minimize_profile, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tight() -> SpgOptions {
    SpgOptions { max_iter: 200_000, tol: 1e-13, ..Default::default() }
}

/// Minimize `rescaled_energy` directly in `u` on the original grid.
fn direct(f: &LagrangianSpec, eps: f64, m: f64, init: &GridDensity) -> (Vec<f64>, f64) {
    let geom = init.geometry();
    let phi = Rescaled::new(f, eps);
    let mut c = MassConstraint::new(geom.weights.clone(), m);
    for i in 0..init.len() {
        if init.index(i).iter().zip(&init.shape).any(|(&k, &n)| k == 0 || k + 1 == n) {
            c.fix(i);
        }
    }
    let r = minimize(&EnergyObjective { geometry: &geom, integrand: &phi }, &c, &init.values, &tight());
    (r.u, r.energy)
}

#[test]
fn substitution_matches_direct_minimization() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f1 = LagrangianSpec::power_sum(2.0, 1.0, 1).unwrap();
    let f2 = LagrangianSpec::power_sum(2.0, 1.0, 2).unwrap();
    for &eps in &[1.0, 0.5, 0.1] {
        for (f, origin, h, shape) in
            [(&f1, vec![-1.0], 2.0 / 63.0, vec![64]), (&f2, vec![-1.0; 2], 2.0 / 15.0, vec![16, 16])]
        {
            let n: usize = shape.iter().product();
            let values = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let init = GridDensity::new(origin, h, shape, values).unwrap();
            let m = 0.7;
            let opts = RescaledOptions { spg: tight(), continuation: None, zero_boundary: true };
            let sol = minimize_rescaled(f, eps, m, &init, &opts).unwrap();
            let (u, e) = direct(f, eps, m, &init);
            assert!((sol.energy - e).abs() <= 1e-10 * e, "eps={eps} N={}: {} vs {e}", f.dim, sol.energy);
            let du = sol.density.values.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(du <= 1e-4 * sol.density.max(), "eps={eps} N={}: {du}", f.dim);
        }
    }
}

#[test]
fn scale_invariant_minimization_ignores_eps() {
    let f = LagrangianSpec::scale_invariant(1.5, 2).unwrap();
    let init = GridDensity::from_fn(vec![-1.0, -1.0], 0.05, vec![41, 41], |x| {
        (-(x[0] * x[0] + 2.0 * x[1] * x[1]) * 4.0).exp()
    });
    let opts = RescaledOptions {
        spg: SpgOptions { max_iter: 50, ..Default::default() },
        continuation: None,
        zero_boundary: true,
    };
    let base = minimize_rescaled(&f, 1.0, 1.0, &init, &opts).unwrap();
    for &eps in &[0.5, 0.1] {
        let sol = minimize_rescaled(&f, eps, 1.0, &init, &opts).unwrap();
        assert!(
            (sol.energy - base.energy).abs() <= 1e-10 * base.energy,
            "eps={eps}: {} vs {}",
            sol.energy,
            base.energy
        );
    }
}

fn short_sweep(init: InitPolicy, schedule: &[f64]) -> masscon::gamma_lab::GammaRunResult {
    let f = LagrangianSpec::power_sum(2.0, 0.5, 1).unwrap();
    let cfg = GammaConfig { n: 1001, ..GammaConfig::default() };
    gamma_sweep(&f, 1.0, schedule, &init, &cfg).unwrap()
}

#[test]
fn sweep_concentrates_into_one_droplet() {
    let run = short_sweep(InitPolicy::single(1, 0.25), &[1.0, 0.5, 0.25, 0.125]);
    assert!(run.all_converged());
    assert!(run.entries.iter().all(|e| e.monotone && e.energy >= 0.0));
    assert!(run.entries.iter().all(|e| (0.0..=1.0).contains(&e.concentration)));
    // The blown-up grid coarsens as eps shrinks, so later energies may creep up by discretization error.
    let energies: Vec<f64> = run.entries.iter().map(|e| e.energy).collect();
    assert!(energies[1] < energies[0], "{energies:?}");
    assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-3)), "{energies:?}");
    let last = run.last().unwrap();
    assert_eq!(last.droplets, 1);
    assert!(last.concentration >= 0.99);
    let gap = run.relative_gap.unwrap();
    assert!(gap.abs() <= 0.05, "{gap}");

    let f = LagrangianSpec::power_sum(2.0, 0.5, 1).unwrap();
    let masses = [0.25, 0.5, 0.75, 1.0, 1.25];
    let curve = cost_curve(&f, &masses, &SolverConfig { n: 1000, ..SolverConfig::default() }).unwrap();
    let h = CostFunction::Sampled(SampledCost::from_curve(&curve).unwrap());
    for row in liminf_surrogate_check(&run, &h, 0.05) {
        assert!(row.passed, "{row:?}");
    }
}

#[test]
fn two_droplets_cost_more_than_one() {
    let schedule = [0.125, 0.0625];
    let two = short_sweep(InitPolicy::two_bumps(1, 1.0, 0.05), &schedule);
    let one = short_sweep(InitPolicy::single(1, 0.05), &schedule);
    let f = LagrangianSpec::power_sum(2.0, 0.5, 1).unwrap();
    let half = minimize_profile(&f, 0.5, &SolverConfig::default()).unwrap().energy;
    let (e2, e1) = (two.last().unwrap().energy, one.last().unwrap().energy);
    assert!(e2 <= 2.0 * half * 1.01, "{e2} vs 2 H(1/2) = {}", 2.0 * half);
    // Splitting the mass costs 2 H(1/2) / H(1) = 2^{1-alpha}.
    let expected = 2f64.powf(1.0 - 5.0 / 7.0);
    assert!(((2.0 * half / e1) / expected - 1.0).abs() <= 0.05, "ratio {} vs {expected}", 2.0 * half / e1);
}

#[test]
fn small_mass_costs_little() {
    let f = LagrangianSpec::power_sum(2.0, 0.5, 1).unwrap();
    let init = GridDensity::zeros(vec![-1.0], 0.01, vec![201]);
    let energies: Vec<f64> = [1.0, 0.1, 0.01, 0.001]
        .iter()
        .map(|&m| minimize_rescaled(&f, 0.25, m, &init, &RescaledOptions::default()).unwrap().energy)
        .collect();
    assert!(energies.windows(2).all(|w| w[1] < w[0]), "{energies:?}");
    assert!(energies[3] < 0.02 * energies[0]);
}

#[test]
fn spreading_cost_diverges_for_sublinear_potential() {
    let f = LagrangianSpec::power_sum(2.0, 0.5, 1).unwrap();
    let r = vanishing_lower_bound_check(&f, 1.0, &[10.0, 100.0, 1000.0]).unwrap();
    assert!(r.increasing && r.consistent, "{r:?}");
    assert!(r.ratios[2] > 10.0);
    // Trapezoid of height `a = 1/(2R+1)` with unit edges: `∫ u^s = a^s (2R + 2/(1+s))`, `∫ |u′|² = 2a²`.
    for (&radius, &ratio) in r.radii.iter().zip(&r.ratios) {
        let a = 1.0 / (2.0 * radius + 1.0);
        let exact = a.sqrt() * (2.0 * radius + 2.0 / 1.5) + 2.0 * a * a;
        assert!((ratio / exact - 1.0).abs() <= 1e-2, "R={radius}: {ratio} vs {exact}");
    }
    let lin = LagrangianSpec::power_sum(2.0, 1.0, 1).unwrap();
    let r = vanishing_lower_bound_check(&lin, 1.0, &[10.0, 100.0, 1000.0]).unwrap();
    assert!((r.ratios[2] - 1.0).abs() <= 1e-2, "{r:?}");
}

#[test]
fn droplet_identity_holds_for_any_w() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in ["power", "power_plus_linear", "power_exp"] {
        let w = WFunction::builtin(name, 0.5).unwrap();
        for &eps in &[1.0, 0.3, 0.01] {
            let (a, k) = (rng.gen_range(0.1..0.9), rng.gen_range(0.5..3.0));
            let u = GridDensity::from_fn(vec![0.0], 0.01, vec![400], |x| 1.0 + a * (k * x[0]).cos());
            let d = droplet_equivalence_check(&w, 0.5, eps, &u).unwrap();
            assert!(d.discrepancy <= 1e-12, "{name} eps={eps}: {d:?}");
            if eps == 1.0 {
                assert_eq!(d.epsbar, 1.0);
            }
        }
    }
}

#[test]
fn lemma_bound_and_its_hypotheses() {
    let opts = LemmaWOptions { samples: 10_000, ..Default::default() };
    let power = lemma_w_bound_check(&WFunction::builtin("power", 0.5).unwrap(), 0.5, 0.9, &[0.1, 0.01], &opts).unwrap();
    assert!(power.passed() && power.threshold == Some(0.0), "{power:?}");
    let exp = lemma_w_bound_check(&WFunction::PowerExp { s: 0.5 }, 0.5, 0.9, &[0.1, 0.01, 0.001], &opts).unwrap();
    assert!(exp.passed() && exp.violations == 0, "{exp:?}");
    let table =
        masscon::lagrangian::WTable::new(vec![0.0, 1.0, 2.0, 10.0], vec![0.0, 1.0, 0.0, 10f64.sqrt()], 0.5).unwrap();
    let broken = lemma_w_bound_check(&WFunction::Tabulated(table), 0.5, 0.9, &[0.1], &opts).unwrap();
    assert!(!broken.hypotheses_hold());
    assert!(broken.hypotheses.iter().any(|h| h.name == "HW2" && !h.passed));
    assert_eq!(broken.c_delta, None);
}
