//! Command-line front end.
//!
//! Every subcommand validates its inputs before touching the output
//! directory, writes its results there and prints one summary line per
//! result. Exit codes: 0 success, 1 usage or validation error, 2 a solver
//! did not converge (results are still written and flagged).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bubbles::{extract_bubbles, BubbleParams};
use crate::discretization::GridDensity;
use crate::error::{invalid, Result};
use crate::exponents::exponent_report;
use crate::gamma_lab::{
    droplet_equivalence_check, gamma_sweep, lemma_w_bound_check, DropletEquivalence, GammaConfig, InitPolicy,
    LemmaWOptions, LemmaWReport,
};
use crate::io;
use crate::lagrangian::{verify_hypotheses, LagrangianSpec, SampleConfig, WFunction};
use crate::optim::SolveStatus;
use crate::radial_solver::{cost_curve, minimize_profile, slope_construction_profile, RadiusPolicy, SolverConfig};

/// Environment variable that overrides the default output directory.
pub const OUT_DIR_ENV: &str = "MASSCON_OUT_DIR";
const DEFAULT_OUT: &str = "masscon-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "masscon", version, about = "Minimal cost functions and mass concentration experiments")]
pub struct Cli {
    /// Output directory (default: $MASSCON_OUT_DIR, else ./masscon-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Which files to emit where both a CSV and a JSON form exist.
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        self != Format::Json
    }

    fn json(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form scaling exponents.
    Exponents {
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long)]
        p: f64,
        #[arg(long = "N")]
        n: usize,
    },
    /// Sampled checks of the structural hypotheses on a Lagrangian.
    Verify {
        #[arg(long)]
        lagrangian: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Minimal cost H(m) over a mass grid, with a power-law fit.
    CostCurve {
        #[arg(long)]
        lagrangian: PathBuf,
        /// Comma list, or `geom:<first>:<last>:<count>`.
        #[arg(long)]
        masses: String,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Minimizing radial profile for one mass.
    Profile {
        #[arg(long)]
        lagrangian: PathBuf,
        #[arg(long)]
        mass: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// The explicit profile eps * exp(-|x|) and its mass.
    SlopeProfile {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 5000)]
        nodes: usize,
        /// Optional Lagrangian for the energy per mass.
        #[arg(long)]
        lagrangian: Option<PathBuf>,
    },
    /// Bubble decomposition of a density CSV.
    Bubbles {
        #[arg(long)]
        density: PathBuf,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        floor: f64,
        #[arg(long, default_value_t = 16)]
        max_bubbles: usize,
        #[arg(long)]
        growth_tol: Option<f64>,
    },
    /// Minimizers of the rescaled energies along an eps schedule.
    GammaRun {
        #[arg(long)]
        lagrangian: PathBuf,
        #[arg(long)]
        mass: f64,
        /// Strictly decreasing; comma list or `geom:<first>:<last>:<count>`.
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 2001)]
        nodes: usize,
        #[arg(long, default_value_t = 1.0)]
        half_width: f64,
        #[arg(long, value_enum, default_value_t = Init::Single)]
        init: Init,
        /// Restart every eps from the initial density.
        #[arg(long)]
        cold: bool,
        /// Skip the radial H(m) prediction.
        #[arg(long)]
        no_predict: bool,
        #[arg(long, default_value_t = 50_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Droplet identity and the lower bound on W_eps.
    DropletCheck {
        /// `builtin:<name>` or a CSV table of (u, W).
        #[arg(long = "W")]
        w: String,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long = "N", default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0.9)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Init {
    Single,
    TwoBumps,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 2000)]
    pub nodes: usize,
    /// Fixed box radius; adaptive when omitted.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

impl SolverArgs {
    fn config(&self, seed: u64) -> Result<SolverConfig> {
        let radius = match self.radius {
            Some(r) => RadiusPolicy::Fixed { radius: r },
            None => SolverConfig::default().radius,
        };
        let cfg = SolverConfig {
            n: self.nodes,
            radius,
            max_iter: self.max_iter,
            tol: self.tol,
            restarts: self.restarts,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse `a,b,c` or `geom:<first>:<last>:<count>`.
pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    if let Some(rest) = spec.strip_prefix("geom:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [a, b, k] = parts[..] else {
            return Err(invalid(format!("`{spec}`: expected geom:<first>:<last>:<count>")));
        };
        let (a, b): (f64, f64) = (
            a.trim().parse().map_err(|_| invalid(format!("`{a}` is not a number")))?,
            b.trim().parse().map_err(|_| invalid(format!("`{b}` is not a number")))?,
        );
        let k: usize = k.trim().parse().map_err(|_| invalid(format!("`{k}` is not a count")))?;
        if !(a > 0.0 && b > 0.0) || k < 2 {
            return Err(invalid("geometric lists need positive ends and at least two points"));
        }
        let r = (b / a).powf(1.0 / (k - 1) as f64);
        return Ok((0..k).map(|i| if i + 1 == k { b } else { a * r.powi(i as i32) }).collect());
    }
    spec.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| invalid(format!("`{t}` is not a number")))).collect()
}

fn load_lagrangian(path: &Path) -> Result<LagrangianSpec> {
    LagrangianSpec::from_config_file(path)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn prepare(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    io::write_json(&dir.join(name), value)
}

fn status_code(status: SolveStatus) -> i32 {
    if status == SolveStatus::Converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

/// Contents of `droplet_check.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropletCheckResult {
    pub w: WFunction,
    pub s: f64,
    pub delta: f64,
    pub equivalence: DropletEquivalence,
    pub lemma: LemmaWReport,
}

/// Random smooth positive density for the droplet identity.
fn smooth_density(dim: usize, seed: u64) -> GridDensity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64)> =
        (0..4).map(|_| (rng.gen_range(0.1..0.5), rng.gen_range(0.2..2.0), rng.gen_range(0.0..6.3))).collect();
    let n = if dim == 1 { 400 } else { 64 };
    GridDensity::from_fn(vec![0.0; dim], 0.05, vec![n; dim], |x| {
        let t: f64 = x.iter().sum();
        1.0 + modes.iter().map(|(a, k, ph)| a * (k * t + ph).sin()).sum::<f64>() * 0.5
    })
}

fn execute(cli: &Cli) -> Result<i32> {
    let dir = out_dir(cli);
    let fmt = cli.format;
    match &cli.command {
        Command::Exponents { s, p, n } => {
            let r = exponent_report(*s, *p, *n)?;
            prepare(&dir)?;
            json(&dir, "exponents.json", &r)?;
            print!("{}", r.to_text());
            Ok(EXIT_OK)
        }
        Command::Verify { lagrangian, samples } => {
            let f = load_lagrangian(lagrangian)?;
            if *samples == 0 {
                return Err(invalid("samples must be positive"));
            }
            let report = verify_hypotheses(&f, &SampleConfig { samples: *samples, ..Default::default() });
            prepare(&dir)?;
            json(&dir, "hypotheses.json", &report)?;
            for c in &report.checks {
                println!("{} {} {}", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
            }
            Ok(EXIT_OK)
        }
        Command::CostCurve { lagrangian, masses, solver } => {
            let f = load_lagrangian(lagrangian)?;
            let masses = parse_list(masses)?;
            let cfg = solver.config(cli.seed)?;
            let curve = cost_curve(&f, &masses, &cfg)?;
            prepare(&dir)?;
            if fmt.csv() {
                io::write_cost_curve_csv(&dir.join("cost_curve.csv"), &curve.samples)?;
            }
            if fmt.json() {
                json(&dir, "cost_curve.json", &curve)?;
            }
            for s in &curve.samples {
                println!("m = {} H = {} {}", s.m, s.h, s.status);
            }
            if let Some(fit) = curve.fit {
                println!("fit alpha = {} c = {} r2 = {}", fit.alpha_hat, fit.c_hat, fit.r_squared);
            }
            Ok(if curve.all_converged() { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::Profile { lagrangian, mass, solver } => {
            let f = load_lagrangian(lagrangian)?;
            let cfg = solver.config(cli.seed)?;
            let sol = minimize_profile(&f, *mass, &cfg)?;
            prepare(&dir)?;
            if fmt.csv() {
                io::write_profile_csv(&dir.join("profile.csv"), &sol.profile)?;
            }
            if fmt.json() {
                json(&dir, "profile.json", &sol)?;
            }
            println!("m = {} H = {} support = {} {}", mass, sol.energy, sol.profile.support_radius(), sol.status);
            Ok(status_code(sol.status))
        }
        Command::SlopeProfile { n, eps, nodes, lagrangian } => {
            let f = lagrangian.as_deref().map(load_lagrangian).transpose()?;
            let sc = slope_construction_profile(*eps, *n, *nodes, f.as_ref())?;
            prepare(&dir)?;
            if fmt.csv() {
                io::write_profile_csv(&dir.join("slope_profile.csv"), &sc.profile)?;
            }
            if fmt.json() {
                json(&dir, "slope_profile.json", &sc)?;
            }
            let epm = sc.energy_per_mass.map_or_else(|| "n/a".into(), |e| e.to_string());
            println!("mass = {} closed form = {} energy/mass = {}", sc.mass, sc.closed_form_mass, epm);
            Ok(EXIT_OK)
        }
        Command::Bubbles { density, radius, floor, max_bubbles, growth_tol } => {
            let u = io::read_density_csv(density)?;
            let params =
                BubbleParams { radius: *radius, floor: *floor, max_bubbles: *max_bubbles, growth_tol: *growth_tol };
            let set = extract_bubbles(&u, &params)?;
            prepare(&dir)?;
            json(&dir, "bubbles.json", &set)?;
            for b in &set.bubbles {
                println!("bubble center = {:?} radius = {} mass = {}", b.center, b.radius, b.mass);
            }
            println!(
                "bubbles = {} remainder = {} vanishing sup = {}{}",
                set.bubbles.len(),
                set.remainder_mass,
                set.vanishing_sup,
                if set.incomplete { " (incomplete)" } else { "" }
            );
            Ok(EXIT_OK)
        }
        Command::GammaRun { lagrangian, mass, eps, nodes, half_width, init, cold, no_predict, max_iter, tol } => {
            let f = load_lagrangian(lagrangian)?;
            let schedule = parse_list(eps)?;
            let cfg = GammaConfig {
                half_width: *half_width,
                n: *nodes,
                max_iter: *max_iter,
                tol: *tol,
                warm_start: !cold,
                predict: !no_predict,
                seed: cli.seed,
                ..Default::default()
            };
            cfg.validate(f.dim)?;
            let init = match init {
                Init::Single => InitPolicy::single(f.dim, 0.25 * half_width),
                Init::TwoBumps => InitPolicy::two_bumps(f.dim, *half_width, 0.1 * half_width),
            };
            let mut run = gamma_sweep(&f, *mass, &schedule, &init, &cfg)?;
            prepare(&dir)?;
            for (j, (entry, u)) in run.entries.iter_mut().zip(&run.minimizers).enumerate() {
                let name = format!("minimizer_{j}.csv");
                io::write_density_csv(&dir.join(&name), u)?;
                entry.snapshot = Some(name);
            }
            if fmt.csv() {
                io::write_gamma_trace_csv(&dir.join("gamma_trace.csv"), &run)?;
            }
            if fmt.json() {
                json(&dir, "gamma.json", &run)?;
            }
            for e in &run.entries {
                println!(
                    "eps = {} energy = {} concentration = {} droplets = {} {}",
                    e.eps, e.energy, e.concentration, e.droplets, e.status
                );
            }
            if let (Some(p), Some(g)) = (run.prediction, run.relative_gap) {
                println!("H(m) = {p} relative gap = {g}");
            }
            Ok(status_code(run.worst_status()))
        }
        Command::DropletCheck { w, s, eps, n, delta, samples } => {
            let wf = if w.starts_with("builtin:") {
                WFunction::builtin(w, *s)?
            } else {
                WFunction::Tabulated(io::read_w_table(Path::new(w), *s)?)
            };
            if !(1..=2).contains(n) {
                return Err(invalid("droplet-check runs in dimension 1 or 2"));
            }
            let u = smooth_density(*n, cli.seed);
            let equivalence = droplet_equivalence_check(&wf, *s, *eps, &u)?;
            let eps_list = [*eps, eps * 0.1, eps * 0.01];
            let lemma = lemma_w_bound_check(
                &wf,
                *s,
                *delta,
                &eps_list,
                &LemmaWOptions { samples: *samples, seed: cli.seed, dim: *n },
            )?;
            prepare(&dir)?;
            println!("droplet identity discrepancy = {:e}", equivalence.discrepancy);
            match lemma.c_delta {
                Some(c) => println!("c_delta = {c} violations = {} of {}", lemma.violations, lemma.samples),
                None => {
                    let failed: Vec<&str> =
                        lemma.hypotheses.iter().filter(|h| !h.passed).map(|h| h.name.as_str()).collect();
                    println!("c_delta not claimed: {} failed", failed.join(", "));
                }
            }
            json(&dir, "droplet_check.json", &DropletCheckResult { w: wf, s: *s, delta: *delta, equivalence, lemma })?;
            Ok(EXIT_OK)
        }
    }
}

/// Parse `argv` (including the program name) and run.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list("1, 2,3.5").unwrap(), vec![1.0, 2.0, 3.5]);
        let g = parse_list("geom:0.125:8:7").unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g[6], 8.0);
        assert!((g[3] - 1.0).abs() < 1e-15);
        assert!(parse_list("geom:1:2").is_err());
        assert!(parse_list("1,x").is_err());
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(run(["masscon", "exponents", "--bogus"]), EXIT_INVALID);
        assert_eq!(run(["masscon", "frobnicate"]), EXIT_INVALID);
    }
}
