use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use evaflow_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(evaflow_last_error()) }.to_string_lossy().into_owned()
}

fn preset(name: &str) -> *mut EvaflowSimulation {
    let name = CString::new(name).unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { evaflow_simulation_from_preset(name.as_ptr(), &mut sim) }, EvaflowStatus::Ok);
    sim
}

#[test]
fn equilibrium_preset_stays_at_rest() {
    let sim = preset("equilibrium_planar");
    let mut n = 0usize;
    unsafe {
        assert_eq!(evaflow_simulation_cells(sim, &mut n), EvaflowStatus::Ok);
        let before: Vec<f64> = vec![0.0; n];
        let mut rho0 = before.clone();
        assert_eq!(evaflow_simulation_phase_b(sim, n, ptr::null_mut(), rho0.as_mut_ptr(), ptr::null_mut(), ptr::null_mut()), EvaflowStatus::Ok);
        assert_eq!(evaflow_simulation_run(sim), EvaflowStatus::Ok);
        let (mut rho, mut vel) = (before.clone(), before.clone());
        assert_eq!(evaflow_simulation_phase_b(sim, n, ptr::null_mut(), rho.as_mut_ptr(), vel.as_mut_ptr(), ptr::null_mut()), EvaflowStatus::Ok);
        assert!(rho.iter().zip(&rho0).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(vel.iter().all(|v| v.abs() < 1e-12));
        let mut t = 0.0;
        evaflow_simulation_time(sim, &mut t);
        assert!((t - 1e-2).abs() < 1e-15);
        let (mut mass, mut energy) = (1.0, 1.0);
        assert_eq!(evaflow_simulation_residuals(sim, &mut mass, &mut energy), EvaflowStatus::Ok);
        assert!(mass < 1e-12 && energy < 1e-12);
        assert_eq!(evaflow_simulation_check(sim, 1.0), EvaflowStatus::Ok);
        assert_eq!(
            evaflow_simulation_phase_b(sim, n + 1, ptr::null_mut(), rho.as_mut_ptr(), ptr::null_mut(), ptr::null_mut()),
            EvaflowStatus::OutOfRange
        );
        evaflow_simulation_free(sim);
    }
}

#[test]
fn piston_preset_matches_classical_path() {
    let sim = preset("planar_piston");
    unsafe {
        assert_eq!(evaflow_simulation_step(sim, 1000), EvaflowStatus::Ok);
        assert_eq!(evaflow_simulation_check(sim, 1.0), EvaflowStatus::Ok);
        evaflow_simulation_free(sim);
    }
}

#[test]
fn missing_key_is_a_config_error() {
    let json = CString::new(
        r#"{"model":"inviscid","geometry":{"kind":"spherical","radius":1,"outer":2},"cells":50,"steps":10,
            "params":{"mu_A":0,"mu_B":0,"lambda_B":0,"rho_0":0.5},"initial":{"preset":"equilibrium"}}"#,
    )
    .unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { evaflow_simulation_new(json.as_ptr(), &mut sim) }, EvaflowStatus::Config);
    assert!(sim.is_null());
    assert!(last_error().contains("pi_0"), "{}", last_error());
}

#[test]
fn oversized_step_aborts_at_runtime() {
    let json = CString::new(
        r#"{"model":"inviscid","geometry":{"kind":"spherical","radius":1,"outer":2},"cells":50,"steps":10,"dt":0.5,
            "params":{"mu_A":0,"mu_B":0,"lambda_B":0,"rho_0":0.5,"pi_0":1},"initial":{"preset":"equilibrium"}}"#,
    )
    .unwrap();
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(evaflow_simulation_new(json.as_ptr(), &mut sim), EvaflowStatus::Ok);
        assert_eq!(evaflow_simulation_step(sim, 1), EvaflowStatus::Runtime);
        assert!(last_error().contains("CFL"), "{}", last_error());
        evaflow_simulation_free(sim);
    }
}

#[test]
fn mms_suite_report_round_trip() {
    let cfg = CString::new(r#"{"probes": 40, "states": 2}"#).unwrap();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(evaflow_suite_run(EvaflowSuite::Mms as u32, cfg.as_ptr(), 1, 1.0, &mut report), EvaflowStatus::Ok);
        let mut n = 0;
        evaflow_report_len(report, &mut n);
        assert_eq!(n, 4);
        let (mut name, mut value, mut tol, mut pass) = (ptr::null(), 0.0, 0.0, false);
        assert_eq!(evaflow_report_case(report, 2, &mut name, &mut value, &mut tol, &mut pass), EvaflowStatus::Ok);
        assert_eq!(CStr::from_ptr(name).to_str().unwrap(), "system_vs_conservative_momA");
        assert!(pass && value < tol && tol == 1e-8);
        assert_eq!(evaflow_report_case(report, 4, &mut name, ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), EvaflowStatus::OutOfRange);
        let json = evaflow_report_json(report);
        let parsed: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(parsed["suite"], "mms");
        evaflow_string_free(json);
        evaflow_report_free(report);
    }
}

#[test]
fn failing_suite_returns_check_failed_with_report() {
    let cfg = CString::new(r#"{"sphere_resolution": [16, 32], "ellipsoid_levels": [1, 2], "min_order": 10.0}"#).unwrap();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(evaflow_suite_run(EvaflowSuite::Surface as u32, cfg.as_ptr(), 0, 1.0, &mut report), EvaflowStatus::CheckFailed);
        assert!(!report.is_null());
        evaflow_report_free(report);
        assert_eq!(evaflow_suite_run(9, ptr::null(), 0, 1.0, &mut report), EvaflowStatus::OutOfRange);
        let bad = CString::new(r#"{"probes": 10, "typo": 1}"#).unwrap();
        assert_eq!(evaflow_suite_run(EvaflowSuite::Mms as u32, bad.as_ptr(), 0, 1.0, &mut report), EvaflowStatus::Config);
        assert!(last_error().contains("typo"));
    }
}

#[test]
fn header_is_generated_and_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/evaflow.h");
    let text = std::fs::read_to_string(header).unwrap();
    for symbol in ["evaflow_simulation_new", "evaflow_suite_run", "evaflow_report_free", "EVAFLOW_STATUS_CHECK_FAILED", "typedef struct EvaflowSimulation"] {
        assert!(text.contains(symbol), "{symbol}");
    }
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{ EvaflowSimulation *s = 0; EvaflowStatus st = evaflow_simulation_from_preset(\"x\", &s); evaflow_simulation_free(s); return st == EVAFLOW_STATUS_OK ? 0 : 1; }}\n"
        ),
    )
    .unwrap();
    match Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler found; skipped syntax check"),
    }
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("header_check");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
