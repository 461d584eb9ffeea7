use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn evaflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evaflow")).args(args).output().expect("run evaflow")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn case<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["cases"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no case {name} in {r}"))
}

fn stderr_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "{text}");
    serde_json::from_str(lines[0]).unwrap()
}

const SHELL_NO_PI0: &str = r#"{"model":"inviscid","geometry":{"kind":"spherical","radius":1,"outer":2},"cells":50,"steps":10,
"params":{"mu_A":0,"mu_B":0,"lambda_B":0,"rho_0":0.5},"initial":{"preset":"equilibrium"}}"#;

#[test]
fn verify_surface_builtin_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = evaflow(&["verify-surface", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["suite"], "verify-surface");
    let c = case(&r, "divthm_sphere_position");
    assert!(c["value"].as_f64().unwrap() <= 1e-8);
    assert_eq!(c["tolerance"].as_f64(), Some(1e-8));
    assert!(r["wall_time"].as_f64().unwrap() >= 0.0);
}

#[test]
fn missing_pi_0_exits_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, SHELL_NO_PI0).unwrap();
    let out = evaflow(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let rec = stderr_record(&out);
    assert_eq!(rec["status"], 2);
    assert_eq!(rec["kind"], "config");
    assert!(rec["message"].as_str().unwrap().contains("pi_0"), "{rec}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mms.json");
    fs::write(&cfg, r#"{"probes": 10, "tolerance": 1e-3}"#).unwrap();
    let out = evaflow(&["mms", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_record(&out)["message"].as_str().unwrap().contains("tolerance"));

    let scenario = SHELL_NO_PI0.replace(r#""rho_0":0.5"#, r#""rho_0":0.5,"pi_0":1,"viscosity":2"#);
    fs::write(&cfg, scenario).unwrap();
    let out = evaflow(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_record(&out)["message"].as_str().unwrap().contains("viscosity"));
}

#[test]
fn classical_comparison_with_zero_surface_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = evaflow(&["simulate", "--preset", "planar_piston", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c = case(&report(dir.path()), "classical_max_diff").clone();
    assert!(c["value"].as_f64().unwrap() < 1e-10);
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["steps"], 100);
    let ledger = fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert!(ledger.starts_with("t,M_A,M_B,surf_mass,KE_A,KE_B,dissipation,work_B,work_surf,src_A,src_B\n"));
    assert_eq!(ledger.lines().count(), 102);
    let snaps = fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    assert!(snaps.starts_with("t,cell,x_or_r,rho,vel,pressure,phase\n"));
}

#[test]
fn cfl_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fast.json");
    let scenario = SHELL_NO_PI0.replace(r#""rho_0":0.5"#, r#""rho_0":0.5,"pi_0":1"#).replace(r#""steps":10"#, r#""steps":10,"dt":0.5"#);
    fs::write(&cfg, scenario).unwrap();
    let out = evaflow(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let rec = stderr_record(&out);
    assert_eq!(rec["kind"], "runtime");
    assert!(rec["message"].as_str().unwrap().contains("CFL"));
}

#[test]
fn failed_check_exits_1_and_names_cases() {
    let dir = tempfile::tempdir().unwrap();
    // a tiny tolerance scale turns round-off into failures
    let out = evaflow(&["simulate", "--preset", "shell_acoustic", "--tol-scale", "1e-12", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let rec = stderr_record(&out);
    assert_eq!(rec["kind"], "check");
    assert_eq!(rec["failed"][0], "simulate/mass_law");
    assert_eq!(case(&report(dir.path()), "mass_law")["pass"], false);
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = evaflow(&["mms", "--seed", "42", "--deterministic", "--out", dir.path().join(sub).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let out = evaflow(&[
            "simulate",
            "--preset",
            "shell_acoustic",
            "--deterministic",
            "--out",
            dir.path().join(sub).join("sim").to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["report.json", "sim/report.json", "sim/summary.json", "sim/ledger.csv", "sim/snapshots.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    assert_eq!(report(&dir.path().join("a"))["wall_time"], 0.0);
}

#[test]
fn seed_changes_the_manufactured_states() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<String> = ["1", "2"]
        .iter()
        .map(|s| {
            let d = dir.path().join(s);
            assert_eq!(evaflow(&["mms", "--seed", s, "--deterministic", "--out", d.to_str().unwrap()]).status.code(), Some(0));
            fs::read_to_string(d.join("report.json")).unwrap()
        })
        .collect();
    assert_ne!(values[0], values[1]);
}

#[test]
fn usage_errors_are_config_errors() {
    let out = evaflow(&["simulate", "--tol-scale", "abc"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_record(&out)["status"], 2);
    let dir = tempfile::tempdir().unwrap();
    let out = evaflow(&["verify-transport", "--preset", "shrinking", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_record(&out)["message"].as_str().unwrap().contains("growing"));
    assert!(evaflow(&["--help"]).status.success());
}

#[test]
fn report_aggregates_selected_suites() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("report.json");
    fs::write(
        &cfg,
        r#"{"variational": {"perturbations": 1, "helmholtz_h": 0.125},
            "surface": {"sphere_resolution": [32, 64], "ellipsoid_levels": [2, 3, 4]},
            "mms": {"probes": 50, "states": 5},
            "presets": ["equilibrium_planar"]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = evaflow(&["report", "--config", cfg.to_str().unwrap(), "--deterministic", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out_dir);
    assert_eq!(r["suite"], "report");
    case(&r, "verify-surface/divthm_sphere_position");
    case(&r, "mms/system_vs_conservative_momB");
    case(&r, "simulate/equilibrium_planar/mass_law");
    for f in ["verify-surface.json", "verify-transport.json", "verify-variational.json", "mms.json", "equilibrium_planar/ledger.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}
