//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::time::Instant;

use masscon::bubbles::{extract_bubbles, extract_bubbles_with_remainder, BubbleParams};
use masscon::discretization::{eval_energy, rescaled_energy, GridDensity, RadialProfile};
use masscon::exponents::{alpha_exponent, bt_exponents, droplet_exponents};
use masscon::gamma_lab::{
    droplet_equivalence_check, gamma_sweep, lemma_w_bound_check, recovery_family_check, GammaConfig, InitPolicy,
    LemmaWOptions,
};
use masscon::hmass::{subadditivity_check, CostFunction, SampledCost, SubadditivityOptions};
use masscon::lagrangian::{LagrangianSpec, WFunction};
use masscon::radial_solver::{cost_curve, minimize_profile, slope_construction_profile, CostCurve, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXPONENT_TOL: f64 = 1e-12;
const SCALE_INVARIANCE_TOL: f64 = 1e-12;
const ALPHA_REL_TOL: f64 = 0.03;
const R_SQUARED_MIN: f64 = 0.999;
const CONCAVITY_SLACK: f64 = 1e-3;
const SLOPE_MASS_TOL: f64 = 0.01;
const BUBBLE_MASS_TOL: f64 = 0.01;
const REMAINDER_MAX: f64 = 1e-3;
const ACCOUNTING_TOL: f64 = 1e-12;
const CONCENTRATION_MIN: f64 = 0.99;
const GAMMA_ENERGY_TOL: f64 = 0.05;
const RECOVERY_TOL: f64 = 1e-9;
const DROPLET_TOL: f64 = 1e-12;
const GRADIENT_TOL: f64 = 1e-5;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for &p in &[1.5, 2.0, 3.0] {
        for n in 1..=4 {
            worst = worst.max((alpha_exponent(1.0, p, n).unwrap().alpha - 1.0).abs());
        }
    }
    worst = worst.max((alpha_exponent(0.0, 2.0, 1).unwrap().alpha - 0.5).abs());
    worst = worst.max((droplet_exponents(-2.0, 1).unwrap().rho - 0.5).abs());
    let bt = bt_exponents(1.0, 2).unwrap();
    worst = worst.max((bt.beta - 1.0).abs()).max(bt.gamma1.abs()).max((bt.gamma2 - 2.0).abs());
    outcome(worst <= EXPONENT_TOL, format!("max error {worst:e}"))
}

fn criterion_2() -> Outcome {
    let f = LagrangianSpec::scale_invariant(2.0, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (a, w, b) = (rng.gen_range(0.5..3.0), rng.gen_range(0.5..2.0), rng.gen_range(0.0..0.5));
        let u = RadialProfile::from_fn(3, 8.0, 400, |r| a * (-(r / w).powi(2)).exp() + b * (-r).exp());
        let reference = eval_energy(&f, &u).unwrap();
        for &eps in &[1.0, 0.1, 0.01] {
            worst = worst.max(rel(rescaled_energy(&f, eps, &u).unwrap(), reference));
        }
    }
    outcome(worst <= SCALE_INVARIANCE_TOL, format!("max relative deviation {worst:e}"))
}

fn power_curve() -> CostCurve {
    let f = LagrangianSpec::power_sum(2.0, 0.5, 1).unwrap();
    let masses: Vec<f64> = (-3..=3).map(|k| 2f64.powi(k)).collect();
    cost_curve(&f, &masses, &SolverConfig::default()).unwrap()
}

fn criterion_3(curve: &CostCurve) -> Outcome {
    let Some(fit) = curve.fit else {
        return outcome(false, "no fit");
    };
    let err = rel(fit.alpha_hat, 5.0 / 7.0);
    outcome(
        err <= ALPHA_REL_TOL && fit.r_squared > R_SQUARED_MIN && curve.all_converged(),
        format!(
            "alpha {:.6} (error {:.3}%), r2 {:.8}, converged {}",
            fit.alpha_hat,
            100.0 * err,
            fit.r_squared,
            curve.all_converged()
        ),
    )
}

fn criterion_4(curve: &CostCurve) -> Outcome {
    let top = curve.values().iter().cloned().fold(0.0, f64::max);
    let decrease = curve.max_decrease() / top;
    let concavity = curve.midpoint_concavity_defect();
    let h = CostFunction::Sampled(SampledCost::from_curve(curve).unwrap());
    let report = subadditivity_check(&h, &curve.masses(), &SubadditivityOptions::default());
    outcome(
        decrease <= CONCAVITY_SLACK && concavity <= CONCAVITY_SLACK && report.violations.is_empty(),
        format!(
            "decrease {decrease:e}, midpoint defect {concavity:e}, subadditivity violations {}",
            report.violations.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let eps = 1e-2;
    let sc = slope_construction_profile(eps, 2, 5000, None).unwrap();
    let closed = 2.0 * std::f64::consts::PI * eps;
    let err = rel(sc.mass, closed);
    outcome(
        err <= SLOPE_MASS_TOL && rel(sc.closed_form_mass, closed) <= 1e-14,
        format!("mass {:.8} vs 2 pi eps {:.8} (error {:.4}%)", sc.mass, closed, 100.0 * err),
    )
}

fn gaussians(centers: &[(f64, f64, f64)], h: f64, n: usize) -> GridDensity {
    let x0 = -0.5 * (n - 1) as f64 * h;
    GridDensity::from_fn(vec![x0], h, vec![n], |x| {
        centers
            .iter()
            .map(|&(c, m, s)| {
                m * (-(x[0] - c).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
            })
            .sum()
    })
}

fn criterion_6() -> Outcome {
    let u = gaussians(&[(-20.0, 1.0, 1.0), (20.0, 1.0, 1.0)], 0.05, 1601);
    let set = extract_bubbles(&u, &BubbleParams::new(5.0, 0.05)).unwrap();
    let mass_err = set.bubbles.iter().map(|b| rel(b.mass, 1.0)).fold(0.0, f64::max);
    let two = set.bubbles.len() == 2 && mass_err <= BUBBLE_MASS_TOL && set.remainder_mass < REMAINDER_MAX;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut accounting, mut idempotent, mut monotone) = (set.accounting_error(), 0, 0);
    for _ in 0..100 {
        let k = rng.gen_range(1..5);
        let bumps: Vec<(f64, f64, f64)> =
            (0..k).map(|_| (rng.gen_range(-40.0..40.0), rng.gen_range(0.1..2.0), rng.gen_range(0.3..3.0))).collect();
        let u = gaussians(&bumps, 0.1, 1001);
        let params = BubbleParams { growth_tol: Some(1e-3), ..BubbleParams::new(2.0, rng.gen_range(0.02..0.5)) };
        let (set, rest) = extract_bubbles_with_remainder(&u, &params).unwrap();
        accounting = accounting.max(set.accounting_error());
        if extract_bubbles(&rest, &params).unwrap().bubbles.is_empty() {
            idempotent += 1;
        }
        let coarse = extract_bubbles(&u, &BubbleParams { floor: 2.0 * params.floor, ..params }).unwrap();
        if coarse.centers().iter().all(|c| set.centers().contains(c)) {
            monotone += 1;
        }
    }
    outcome(
        two && accounting <= ACCOUNTING_TOL && idempotent == 100 && monotone == 100,
        format!(
            "{} bubbles (mass error {:.4}%, remainder {:e}), accounting {accounting:e}, idempotent {idempotent}/100, monotone in floor {monotone}/100",
            set.bubbles.len(),
            100.0 * mass_err,
            set.remainder_mass
        ),
    )
}

fn criterion_7() -> Outcome {
    let f = LagrangianSpec::power_sum(2.0, 0.5, 1).unwrap();
    let schedule: Vec<f64> = (0..6).map(|k| 0.5f64.powi(k)).collect();
    let warm = GammaConfig::default();
    let cold = GammaConfig { warm_start: false, ..warm };
    let init = InitPolicy::single(1, 0.25);
    let runs = std::thread::scope(|sc| {
        let handles = [warm, cold].map(|cfg| {
            let (f, schedule, init) = (&f, &schedule, &init);
            sc.spawn(move || gamma_sweep(f, 1.0, schedule, init, &cfg).unwrap())
        });
        handles.into_iter().map(|h| h.join().unwrap()).collect::<Vec<_>>()
    });
    let profile = minimize_profile(&f, 1.0, &SolverConfig::default()).unwrap();
    let recovery = recovery_family_check(&f, &profile.profile, &schedule, RECOVERY_TOL).unwrap();

    let mut passed = recovery.passed;
    let mut detail = Vec::new();
    for (label, run) in ["warm", "cold"].iter().zip(&runs) {
        let n = run.entries.len();
        let droplets = run.entries[n - 2..].iter().all(|e| e.droplets == 1);
        let conc = run.entries.iter().map(|e| e.concentration).fold(1.0, f64::min);
        let gap = rel(run.entries[n - 1].energy, profile.energy);
        passed &= droplets && conc >= CONCENTRATION_MIN && gap <= GAMMA_ENERGY_TOL && run.all_converged();
        detail.push(format!(
            "{label}: droplets {:?}, min concentration {conc:.5}, final energy {:.6} vs H(1) {:.6} ({:.3}%), converged {}",
            run.entries.iter().map(|e| e.droplets).collect::<Vec<_>>(),
            run.entries[n - 1].energy,
            profile.energy,
            100.0 * gap,
            run.all_converged()
        ));
    }
    detail.push(format!("recovery deviation {:e}", recovery.max_relative_deviation));
    outcome(passed, detail.join("; "))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut lemma_ok = true;
    let mut notes = Vec::new();
    for k in 0..10 {
        let s = rng.gen_range(0.1..0.9);
        let eps = 10f64.powf(rng.gen_range(-3.0..0.0));
        let w = WFunction::PowerExp { s };
        let (a, freq, ph) = (rng.gen_range(0.1..0.9), rng.gen_range(0.2..3.0), rng.gen_range(0.0..6.3));
        let u = GridDensity::from_fn(vec![0.0], 0.02, vec![500], |x| 1.0 + a * (freq * x[0] + ph).sin());
        worst = worst.max(droplet_equivalence_check(&w, s, eps, &u).unwrap().discrepancy);
        let eps_list = [eps, 0.1 * eps, 0.01 * eps];
        let report = lemma_w_bound_check(
            &w,
            s,
            0.9,
            &eps_list,
            &LemmaWOptions { samples: 10_000, seed: k, ..Default::default() },
        )
        .unwrap();
        if !report.passed() {
            lemma_ok = false;
            notes.push(format!("s={s:.3}: c_delta {:?}, violations {}", report.c_delta, report.violations));
        }
    }
    outcome(
        worst <= DROPLET_TOL && lemma_ok,
        format!("max discrepancy {worst:e}, lemma {}{}", if lemma_ok { "ok" } else { "failed " }, notes.join(", ")),
    )
}

/// Analytic gradient against central differences at random coordinates.
fn gradient_error(f: &LagrangianSpec, u: &GridDensity, rng: &mut ChaCha8Rng) -> f64 {
    let g = u.geometry();
    let mut grad = vec![0.0; u.len()];
    g.energy(f, &u.values, Some(&mut grad));
    let scale = grad.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let i = rng.gen_range(0..u.len());
        let step = 1e-6 * u.values[i];
        let mut v = u.values.clone();
        v[i] += step;
        let up = g.energy(f, &v, None);
        v[i] -= 2.0 * step;
        let down = g.energy(f, &v, None);
        let fd = (up - down) / (2.0 * step);
        worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(1e-3 * scale));
    }
    worst
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for &(p, s) in &[(2.0, 0.5), (3.0, 0.9)] {
        for dim in 1..=2 {
            let f = LagrangianSpec::power_sum(p, s, dim).unwrap();
            let n: usize = if dim == 1 { 200 } else { 40 };
            let values: Vec<f64> = (0..n.pow(dim as u32)).map(|_| rng.gen_range(0.2..2.0)).collect();
            let u = GridDensity::new(vec![0.0; dim], 0.1, vec![n; dim], values).unwrap();
            worst = worst.max(gradient_error(&f, &u, &mut rng));
        }
    }
    outcome(worst <= GRADIENT_TOL, format!("max relative error {worst:e}"))
}

fn main() {
    let mut failures = 0;
    let mut report = |k: usize, name: &str, run: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = run();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {k} {verdict} [{:.1} s] {name}: {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.passed {
            failures += 1;
        }
    };
    report(1, "exponent formulas", &criterion_1);
    report(2, "scale invariance", &criterion_2);
    let start = Instant::now();
    let curve = power_curve();
    println!("cost curve solved in {:.1} s", start.elapsed().as_secs_f64());
    report(3, "power-law cost curve", &|| criterion_3(&curve));
    report(4, "concavity suite", &|| criterion_4(&curve));
    report(5, "slope construction", &criterion_5);
    report(6, "bubble decomposition", &criterion_6);
    report(7, "concentration", &criterion_7);
    report(8, "droplet model", &criterion_8);
    report(9, "gradient oracle", &criterion_9);
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
