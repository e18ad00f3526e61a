use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn thermx(args: &[&str], env_jobs: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_thermx"));
    cmd.args(args).env_remove("THERMX_JOBS");
    if let Some(j) = env_jobs {
        cmd.env("THERMX_JOBS", j);
    }
    cmd.output().expect("spawn thermx")
}

fn summary(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    let line = lines.next().unwrap_or_else(|| panic!("no summary; stderr: {}", String::from_utf8_lossy(&out.stderr)));
    assert!(lines.next().is_none(), "summary must be one line: {text}");
    serde_json::from_str(line).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn laminar_lambda_cr() {
    let out = thermx(&["lambda-cr", "--regime", "laminar"], None);
    assert_eq!(out.status.code(), Some(0));
    let lcr = summary(&out)["lambda_cr"].as_f64().unwrap();
    assert!((lcr - 2f64.sqrt()).abs() < 1e-3, "{lcr}");
}

#[test]
fn steady_above_critical_has_no_solution() {
    let out = thermx(&["steady", "--regime", "laminar", "--lambda", "1.5"], None);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("no steady solution"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn steady_profile_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.csv");
    let out = thermx(&["steady", "--regime", "laminar", "--lambda", "1", "--out", p(&path)], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let u_axis = summary(&out)["u_axis"].as_f64().unwrap();
    assert!((u_axis - 0.316694).abs() < 1e-6);
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("rho,u"));
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!(last[1].abs() < 1e-9);
}

#[test]
fn invalid_input_exits_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# run\nregime = laminar\nlambda = -1\n").unwrap();
    let out = thermx(&["steady", "--config", p(&cfg)], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(":3: key `lambda`"), "{}", stderr(&out));

    fs::write(&cfg, "regime = laminar\nlamda = 1\n").unwrap();
    let out = thermx(&["steady", "--config", p(&cfg)], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(":2: key `lamda`: unknown key"), "{}", stderr(&out));

    for args in [
        &["steady", "--regime", "laminar", "--lambda", "-1"][..],
        &["steady", "--regime", "laminar"][..],
        &["nonsense"][..],
        &[][..],
        &["--no-such-flag"][..],
        &["steady", "--regime", "turbulent", "--lambda", "0.2"][..],
    ] {
        assert_eq!(thermx(args, None).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "command = steady\nregime = laminar\nlambda = 1.5\n").unwrap();
    let out = thermx(&["--config", p(&cfg), "--lambda", "0.5"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(summary(&out)["lambda"].as_f64(), Some(0.5));
}

#[test]
fn turbulent_regime_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "regime = turbulent\nre = 1e6\nlambda = 0.2\n").unwrap();
    let out = thermx(&["steady", "--config", p(&cfg)], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(summary(&out)["regime"], "turbulent(Re=1e6)");
}

#[test]
fn jobs_from_environment_is_validated() {
    let out = thermx(&["lambda-cr", "--regime", "laminar"], Some("0"));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("THERMX_JOBS"), "{}", stderr(&out));
    let out = thermx(&["lambda-cr", "--regime", "laminar", "--jobs", "2"], Some("0"));
    assert_eq!(out.status.code(), Some(0));
}

fn sweep(out_path: &Path, jobs: &str) -> Output {
    thermx(
        &[
            "sweep", "--regime", "laminar", "--lambda-start", "5", "--lambda-stop", "40", "--lambda-count", "8",
            "--n-rho", "64", "--n-xi", "64", "--out", p(out_path),
        ],
        Some(jobs),
    )
}

#[test]
fn sweep_is_deterministic_and_feeds_fit() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = sweep(&a, "1");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = summary(&out);
    assert_eq!(s["n_points"], 8);
    assert_eq!(sweep(&b, "3").status.code(), Some(0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next(), Some("lambda,zeta0,zeta0_lo,zeta0_hi,n_rho,n_xi"));
    let lambdas: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!((lambdas[0], lambdas[7]), (5.0, 40.0));
    assert!(lambdas.windows(2).all(|w| w[1] > w[0]));

    let fit_json = dir.path().join("fit.json");
    let out = thermx(&["fit", "--in", p(&a), "--lambda-min", "5", "--out", p(&fit_json)], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = summary(&out);
    for key in ["prefactor", "exponent", "lambda_min", "rms_log_residual", "n_points"] {
        assert!(s.get(key).is_some(), "{key} missing from {s}");
    }
    assert_eq!(s["n_points"], 8);
    let exponent = s["exponent"].as_f64().unwrap();
    assert!((-3.2..-2.6).contains(&exponent), "{exponent}");
    let file: Value = serde_json::from_str(&fs::read_to_string(&fit_json).unwrap()).unwrap();
    assert_eq!(file["exponent"], s["exponent"]);

    let out = thermx(&["fit", "--in", p(&a), "--lambda-min", "30"], None);
    assert_eq!(out.status.code(), Some(1));

    let out = thermx(
        &["collapse", "--in", &format!("{},{}", p(&a), p(&b)), "--lambda-start", "5", "--lambda-stop", "40", "--lambda-count", "5"],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(summary(&out)["spread"].as_f64(), Some(0.0));
}

#[test]
fn zeta0_subcritical_and_supercritical() {
    let out = thermx(&["zeta0", "--regime", "laminar", "--lambda", "1", "--n-rho", "64", "--n-xi", "64"], None);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert!(s["zeta0"].is_null() && s["unbounded"] == true, "{s}");

    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("field.csv");
    let out = thermx(
        &["zeta0", "--regime", "laminar", "--lambda", "3", "--n-rho", "64", "--n-xi", "64", "--field-out", p(&field)],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = summary(&out);
    let (lo, z, hi) = (s["zeta0_lo"].as_f64().unwrap(), s["zeta0"].as_f64().unwrap(), s["zeta0_hi"].as_f64().unwrap());
    assert!(lo < z && z <= hi && (0.08..0.1).contains(&z), "{s}");
    let rows = fs::read_to_string(&field).unwrap().lines().count() - 1;
    assert!(rows == 65 * 64 || rows == 129 * 64, "{rows} rows");

    let out = thermx(
        &["zeta0", "--regime", "laminar", "--lambda", "1000", "--n-rho", "64", "--n-xi", "64", "--zeta-floor", "1e-6"],
        None,
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn dimensional_lengths() {
    // Re = 1000 and Pr = 0.7 in a 1 cm pipe: z0 = r0 Re Pr zeta0.
    let nu = 1.5e-5;
    let r0 = 0.01;
    let discharge = 1000.0 * nu / (2.0 * r0) * std::f64::consts::PI * r0 * r0;
    let dir = tempfile::tempdir().unwrap();
    let gas = dir.path().join("gas.cfg");
    fs::write(
        &gas,
        format!(
            "heat_capacity = 1200\nmolecular_diffusivity = {}\nkinematic_viscosity = {nu}\nheat_of_reaction = 3e6\n\
             preexponential = 1e8\nactivation_energy = 1.5e5\ngas_constant = 8.314\nwall_temperature = 600\n\
             pipe_radius = {r0}\ndischarge = {discharge}\n",
            nu / 0.7
        ),
    )
    .unwrap();
    let out = thermx(&["dimensional", "--gas", p(&gas), "--regime", "laminar", "--zeta0", "0.005"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = summary(&out);
    assert!((s["re"].as_f64().unwrap() / 1000.0 - 1.0).abs() < 1e-12);
    assert!((s["z0"].as_f64().unwrap() - 0.035).abs() < 1e-12, "{s}");

    let out = thermx(&["dimensional", "--gas", p(&gas), "--regime", "turbulent", "--re", "1e5", "--zeta0", "0.005"], None);
    assert_eq!(out.status.code(), Some(1));
}
