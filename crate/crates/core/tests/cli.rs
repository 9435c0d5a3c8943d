use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use masscon::bubbles::BubbleSet;
use masscon::cli::DropletCheckResult;
use masscon::discretization::GridDensity;
use masscon::exponents::ExponentReport;
use masscon::gamma_lab::GammaRunResult;
use masscon::io;
use masscon::lagrangian::HypothesisReport;
use masscon::radial_solver::{CostCurve, ProfileSolution, SlopeConstruction};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn masscon(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_masscon"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("MASSCON_OUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("f.toml");
    std::fs::write(&path, "kind = \"power_sum\"\ndim = 1\np = 2.0\ns = 0.5\n").unwrap();
    path.to_str().unwrap().to_string()
}

fn write_density(dir: &Path) -> String {
    let path = dir.join("u.csv");
    let u = GridDensity::from_fn(vec![-40.0], 0.05, vec![1601], |x| {
        let g = |c: f64| (-(x[0] - c).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        g(-20.0) + g(20.0)
    });
    io::write_density_csv(&path, &u).unwrap();
    path.to_str().unwrap().to_string()
}

/// All files of a directory by name.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Every subcommand once, each into its own subdirectory of `root`.
fn run_all(inputs: &Path, root: &Path) -> BTreeMap<String, i32> {
    let cfg = write_config(inputs);
    let density = write_density(inputs);
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("exponents", vec!["exponents", "--s", "0.5", "--p", "2", "--N", "1"]),
        ("verify", vec!["verify", "--lagrangian", &cfg, "--samples", "2000"]),
        (
            "cost-curve",
            vec!["cost-curve", "--lagrangian", &cfg, "--masses", "0.5,1", "--nodes", "300", "--restarts", "2"],
        ),
        ("profile", vec!["profile", "--lagrangian", &cfg, "--mass", "1", "--nodes", "300", "--restarts", "2"]),
        ("slope-profile", vec!["slope-profile", "--N", "2", "--eps", "0.01", "--nodes", "2000"]),
        ("bubbles", vec!["bubbles", "--density", &density, "--radius", "5", "--floor", "0.05"]),
        (
            "gamma-run",
            vec!["gamma-run", "--lagrangian", &cfg, "--mass", "1", "--eps", "1,0.5", "--nodes", "201", "--no-predict"],
        ),
        ("droplet-check", vec!["droplet-check", "--W", "builtin:power", "--s", "0.5", "--eps", "0.1"]),
    ];
    runs.into_iter()
        .map(|(name, args)| {
            let o = masscon(&root.join(name), &args);
            (name.to_string(), o.status.code().unwrap())
        })
        .collect()
}

#[test]
fn exponents_prints_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let o = masscon(dir.path(), &["exponents", "--s", "0.5", "--p", "2", "--N", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0.714285"), "{}", stdout(&o));
    let r: ExponentReport = io::read_json(&dir.path().join("exponents.json")).unwrap();
    assert!((r.alpha.unwrap() - 5.0 / 7.0).abs() <= 1e-12);
}

#[test]
fn missing_lagrangian_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = masscon(&out, &["cost-curve", "--lagrangian", "/nonexistent/f.toml", "--masses", "1,2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = masscon(&out, &["exponents", "--s", "0.5", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = masscon(&out, &["gamma-run", "--lagrangian", "x.toml", "--mass", "1", "--eps", "0.5,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn droplet_check_identity_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = masscon(dir.path(), &["droplet-check", "--W", "builtin:power", "--s", "0.5", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let r: DropletCheckResult = io::read_json(&dir.path().join("droplet_check.json")).unwrap();
    let d = r.equivalence.discrepancy;
    assert!(d <= 1e-12, "{d}");
}

#[test]
fn non_convergence_exits_two_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    let args = ["profile", "--lagrangian", &cfg, "--mass", "1", "--nodes", "200", "--restarts", "1", "--max-iter", "2"];
    let o = masscon(&out, &args);
    assert_eq!(o.status.code(), Some(2));
    let sol: ProfileSolution = io::read_json(&out.join("profile.json")).unwrap();
    assert_ne!(sol.status, masscon::optim::SolveStatus::Converged);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_masscon"))
        .args(["exponents", "--s", "0.5", "--p", "2", "--N", "1"])
        .env("MASSCON_OUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("exponents.json").exists());
}

#[test]
fn runs_are_bit_identical() {
    let inputs = tempfile::tempdir().unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let codes_a = run_all(inputs.path(), a.path());
    let codes_b = run_all(inputs.path(), b.path());
    assert_eq!(codes_a, codes_b);
    assert!(codes_a.values().all(|&c| c == 0), "{codes_a:?}");
    for name in codes_a.keys() {
        let (sa, sb) = (snapshot(&a.path().join(name)), snapshot(&b.path().join(name)));
        assert!(!sa.is_empty(), "{name} wrote nothing");
        assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>(), "{name}");
        for (file, bytes) in &sa {
            assert!(bytes == &sb[file], "{name}/{file} differs between runs");
        }
    }
}

/// Read a JSON file into `T` and write it back byte for byte.
fn json_round_trip<T: Serialize + DeserializeOwned>(path: &Path) {
    let value: T = io::read_json(path).unwrap();
    let copy = path.with_extension("copy.json");
    io::write_json(&copy, &value).unwrap();
    assert!(std::fs::read(path).unwrap() == std::fs::read(&copy).unwrap(), "{} changed on rewrite", path.display());
}

fn csv_round_trip(path: &Path, rewrite: impl Fn(&Path, &Path)) {
    let copy = path.with_extension("copy.csv");
    rewrite(path, &copy);
    assert!(std::fs::read(path).unwrap() == std::fs::read(&copy).unwrap(), "{} changed on rewrite", path.display());
}

#[test]
fn emitted_files_round_trip() {
    let inputs = tempfile::tempdir().unwrap();
    let root = tempfile::tempdir().unwrap();
    run_all(inputs.path(), root.path());
    let r = root.path();
    json_round_trip::<ExponentReport>(&r.join("exponents/exponents.json"));
    json_round_trip::<HypothesisReport>(&r.join("verify/hypotheses.json"));
    json_round_trip::<CostCurve>(&r.join("cost-curve/cost_curve.json"));
    json_round_trip::<ProfileSolution>(&r.join("profile/profile.json"));
    json_round_trip::<SlopeConstruction>(&r.join("slope-profile/slope_profile.json"));
    json_round_trip::<BubbleSet>(&r.join("bubbles/bubbles.json"));
    json_round_trip::<GammaRunResult>(&r.join("gamma-run/gamma.json"));
    json_round_trip::<DropletCheckResult>(&r.join("droplet-check/droplet_check.json"));

    csv_round_trip(&r.join("cost-curve/cost_curve.csv"), |a, b| {
        io::write_cost_curve_csv(b, &io::read_cost_curve_csv(a).unwrap()).unwrap()
    });
    csv_round_trip(&r.join("profile/profile.csv"), |a, b| {
        io::write_profile_csv(b, &io::read_profile_csv(a, 1).unwrap()).unwrap()
    });
    csv_round_trip(&r.join("slope-profile/slope_profile.csv"), |a, b| {
        io::write_profile_csv(b, &io::read_profile_csv(a, 2).unwrap()).unwrap()
    });
    for j in 0..2 {
        csv_round_trip(&r.join(format!("gamma-run/minimizer_{j}.csv")), |a, b| {
            io::write_density_csv(b, &io::read_density_csv(a).unwrap()).unwrap()
        });
    }
    let trace = io::read_gamma_trace_csv(&r.join("gamma-run/gamma_trace.csv")).unwrap();
    let run: GammaRunResult = io::read_json(&r.join("gamma-run/gamma.json")).unwrap();
    assert_eq!(trace.len(), run.entries.len());
    for (row, e) in trace.iter().zip(&run.entries) {
        assert_eq!(
            (row.eps, row.energy, row.concentration, row.droplets, row.status),
            (e.eps, e.energy, e.concentration, e.droplets, e.status)
        );
    }
}
