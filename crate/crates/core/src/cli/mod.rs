//! Command-line driver: runs a suite or a simulation and writes machine-readable reports.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration or output error,
//! 3 runtime abort (CFL violation, negative density, failed evaluation). Failures also print
//! one JSON line on stderr.

pub mod suites;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::report::Report;
use crate::simulator::{self, ScenarioConfig, SimError, Simulation};
pub use suites::{MmsSuite, SurfaceSuite, TransportSuite, VariationalSuite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Simulate,
    VerifySurface,
    VerifyTransport,
    VerifyVariational,
    Mms,
    Report,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::VerifySurface => "verify-surface",
            Subcommand::VerifyTransport => "verify-transport",
            Subcommand::VerifyVariational => "verify-variational",
            Subcommand::Mms => "mms",
            Subcommand::Report => "report",
        }
    }

    /// Preset used when neither a config file nor a preset is given.
    pub fn default_preset(self) -> &'static str {
        match self {
            Subcommand::Simulate => "equilibrium_planar",
            Subcommand::VerifySurface => suites::SURFACE_PRESETS[0],
            Subcommand::VerifyTransport => suites::TRANSPORT_PRESETS[0],
            Subcommand::VerifyVariational => suites::VARIATIONAL_PRESETS[0],
            Subcommand::Mms => suites::MMS_PRESETS[0],
            Subcommand::Report => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub config_path: Option<PathBuf>,
    pub preset: Option<String>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Reports `wall_time = 0` so outputs are byte-identical across runs.
    pub deterministic: bool,
    /// Multiplies every tolerance.
    pub tol_scale: f64,
}

impl RunConfig {
    pub fn new(subcommand: Subcommand, output_dir: impl Into<PathBuf>) -> Self {
        Self { subcommand, config_path: None, preset: None, output_dir: output_dir.into(), seed: 0, deterministic: false, tol_scale: 1.0 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn status(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        json!({"status": self.status(), "kind": self.kind(), "message": self.to_string()}).to_string()
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => CliError::Config(e.to_string()),
            SimError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

/// Configuration of the `report` subcommand: every suite plus a list of scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSuite {
    pub surface: SurfaceSuite,
    pub transport: TransportSuite,
    pub variational: VariationalSuite,
    pub mms: MmsSuite,
    /// Built-in scenarios to run.
    pub presets: Vec<String>,
    /// Additional inline scenarios.
    pub scenarios: Vec<ScenarioConfig>,
}

impl Default for ReportSuite {
    fn default() -> Self {
        Self {
            surface: SurfaceSuite::default(),
            transport: TransportSuite::default(),
            variational: VariationalSuite::default(),
            mms: MmsSuite::default(),
            presets: simulator::PRESETS.iter().map(|s| s.to_string()).collect(),
            scenarios: Vec::new(),
        }
    }
}

/// Result of a successful run: the reports written, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub reports: Vec<Report>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(Report::passed)
    }

    pub fn status(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    /// One-line JSON record naming the failed cases.
    pub fn failure_record(&self) -> String {
        let failed: Vec<String> =
            self.reports.iter().flat_map(|r| r.failures().map(move |c| format!("{}/{}", r.suite, c.name))).collect();
        json!({"status": 1, "kind": "check", "failed": failed}).to_string()
    }
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Config file if given, otherwise the named (or default) preset built by `preset`.
fn load<T: for<'de> Deserialize<'de>>(
    config: &RunConfig,
    known: &[&str],
    preset: impl Fn(&str) -> Option<T>,
) -> Result<T, CliError> {
    match (&config.config_path, &config.preset) {
        (Some(_), Some(_)) => Err(CliError::Config("give --config or --preset, not both".into())),
        (Some(path), None) => read_config(path),
        (None, name) => {
            let name = name.as_deref().unwrap_or(config.subcommand.default_preset());
            preset(name).ok_or_else(|| CliError::Config(format!("unknown preset '{name}' (known: {})", known.join(", "))))
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Run one scenario, writing snapshots, ledger and summary under `dir`.
fn simulate(scenario: ScenarioConfig, dir: &Path, tol_scale: f64) -> Result<Report, CliError> {
    scenario.validate()?;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut sim = Simulation::new(scenario)?;
    sim.run_with_snapshots(create(&dir.join("snapshots.csv"))?)?;
    sim.ledger.write_csv(create(&dir.join("ledger.csv"))?)?;
    let summary = sim.summary(tol_scale)?;
    write_json(&dir.join("summary.json"), &summary)?;
    let mut report = Report::new("simulate");
    report.cases = summary.cases;
    Ok(report)
}

fn suite_presets(sub: Subcommand) -> &'static [&'static str] {
    match sub {
        Subcommand::VerifySurface => &suites::SURFACE_PRESETS,
        Subcommand::VerifyTransport => &suites::TRANSPORT_PRESETS,
        Subcommand::VerifyVariational => &suites::VARIATIONAL_PRESETS,
        Subcommand::Mms => &suites::MMS_PRESETS,
        Subcommand::Simulate | Subcommand::Report => &[],
    }
}

fn parse<T: for<'de> Deserialize<'de> + Default>(json: Option<&str>) -> Result<T, CliError> {
    json.map_or_else(|| Ok(T::default()), |text| serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string())))
}

/// Run one verification suite from its JSON config (`None` for the defaults), without
/// writing files.
pub fn run_suite(sub: Subcommand, config_json: Option<&str>, seed: u64, tol_scale: f64) -> Result<Report, CliError> {
    if !(tol_scale > 0.0 && tol_scale.is_finite()) {
        return Err(CliError::Config(format!("tol-scale must be positive, got {tol_scale}")));
    }
    match sub {
        Subcommand::VerifySurface => parse::<SurfaceSuite>(config_json)?.run(seed, tol_scale),
        Subcommand::VerifyTransport => parse::<TransportSuite>(config_json)?.run(seed, tol_scale),
        Subcommand::VerifyVariational => parse::<VariationalSuite>(config_json)?.run(seed, tol_scale),
        Subcommand::Mms => parse::<MmsSuite>(config_json)?.run(seed, tol_scale),
        Subcommand::Simulate | Subcommand::Report => Err(CliError::Config(format!("'{}' is not a verification suite", sub.name()))),
    }
}

fn timed(deterministic: bool, f: impl FnOnce() -> Result<Report, CliError>) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut r = f()?;
    r.wall_time = if deterministic { 0.0 } else { start.elapsed().as_secs_f64() };
    Ok(r)
}

/// Execute the subcommand and write `report.json` (plus subcommand outputs) to the output
/// directory. Check failures are reported through [`Outcome::status`], not as errors.
pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    if !(config.tol_scale > 0.0 && config.tol_scale.is_finite()) {
        return Err(CliError::Config(format!("tol-scale must be positive, got {}", config.tol_scale)));
    }
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    let (seed, scale, det) = (config.seed, config.tol_scale, config.deterministic);

    let report = match config.subcommand {
        Subcommand::Simulate => {
            let scenario = match (&config.config_path, &config.preset) {
                (Some(_), Some(_)) => return Err(CliError::Config("give --config or --preset, not both".into())),
                (Some(path), None) => {
                    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                    ScenarioConfig::from_json(&text)?
                }
                (None, name) => {
                    let name = name.as_deref().unwrap_or(config.subcommand.default_preset());
                    simulator::preset(name).ok_or_else(|| {
                        CliError::Config(format!("unknown preset '{name}' (known: {})", simulator::PRESETS.join(", ")))
                    })?
                }
            };
            timed(det, || simulate(scenario, out, scale))?
        }
        Subcommand::Report => return run_all(config),
        sub => {
            let text = match (&config.config_path, &config.preset) {
                (Some(_), Some(_)) => return Err(CliError::Config("give --config or --preset, not both".into())),
                (Some(path), None) => {
                    Some(fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?)
                }
                (None, Some(name)) if !suite_presets(sub).contains(&name.as_str()) => {
                    return Err(CliError::Config(format!("unknown preset '{name}' (known: {})", suite_presets(sub).join(", "))))
                }
                (None, _) => None,
            };
            timed(det, || run_suite(sub, text.as_deref(), seed, scale))?
        }
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(Outcome { reports: vec![report] })
}

/// The `report` subcommand: every suite and scenario, each in its own file, plus an
/// aggregate `report.json` whose case names are prefixed by their suite.
fn run_all(config: &RunConfig) -> Result<Outcome, CliError> {
    let all: ReportSuite = load(config, &["all"], |name| (name == "all").then(ReportSuite::default))?;
    for s in &all.scenarios {
        s.validate()?;
    }
    for name in &all.presets {
        if simulator::preset(name).is_none() {
            return Err(CliError::Config(format!("unknown preset '{name}' (known: {})", simulator::PRESETS.join(", "))));
        }
    }
    let (out, seed, scale, det) = (&config.output_dir, config.seed, config.tol_scale, config.deterministic);
    let start = Instant::now();
    let mut reports = vec![
        timed(det, || all.surface.run(seed, scale))?,
        timed(det, || all.transport.run(seed, scale))?,
        timed(det, || all.variational.run(seed, scale))?,
        timed(det, || all.mms.run(seed, scale))?,
    ];
    let scenarios = all.presets.iter().filter_map(|n| simulator::preset(n)).chain(all.scenarios.iter().cloned());
    for (k, scenario) in scenarios.enumerate() {
        let name = if scenario.name.is_empty() { format!("scenario_{k}") } else { scenario.name.clone() };
        let dir = out.join(&name);
        let mut r = timed(det, || simulate(scenario, &dir, scale))?;
        write_json(&dir.join("report.json"), &r)?;
        r.suite = format!("simulate/{name}");
        reports.push(r);
    }
    for r in reports.iter().filter(|r| !r.suite.starts_with("simulate/")) {
        write_json(&out.join(format!("{}.json", r.suite)), r)?;
    }

    let mut aggregate = Report::new("report");
    for r in &reports {
        for c in &r.cases {
            let mut c = c.clone();
            c.name = format!("{}/{}", r.suite, c.name);
            aggregate.push(c);
        }
    }
    aggregate.wall_time = if det { 0.0 } else { start.elapsed().as_secs_f64() };
    write_json(&out.join("report.json"), &aggregate)?;
    reports.push(aggregate);
    Ok(Outcome { reports })
}

/// Run and return the process exit code, printing a JSON record on stderr for anything
/// other than success.
pub fn execute(config: &RunConfig) -> i32 {
    match run(config) {
        Ok(outcome) => {
            if !outcome.passed() {
                eprintln!("{}", outcome.failure_record());
            }
            outcome.status()
        }
        Err(e) => {
            eprintln!("{}", e.record());
            e.status()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn error_records_are_single_line_json() {
        let e = CliError::Config("missing field `pi_0`".into());
        let v: serde_json::Value = serde_json::from_str(&e.record()).unwrap();
        assert_eq!(v["status"], 2);
        assert_eq!(v["kind"], "config");
        assert!(!e.record().contains('\n'));
        assert_eq!(CliError::Runtime("x".into()).status(), 3);
        assert_eq!(CliError::from(SimError::NegativeDensity { phase: crate::tensors::Phase::B, cell: 3, time: 0.1 }).status(), 3);
        assert_eq!(CliError::from(SimError::Config("bad".into())).status(), 2);
    }

    #[test]
    fn unknown_preset_and_double_source_are_config_errors() {
        let dir = temp();
        let mut c = RunConfig::new(Subcommand::Mms, dir.path());
        c.preset = Some("nope".into());
        assert_eq!(run(&c).unwrap_err().status(), 2);
        c.preset = Some("sphere_mms".into());
        c.config_path = Some(dir.path().join("x.json"));
        assert!(run(&c).unwrap_err().to_string().contains("not both"));
        c.config_path = None;
        c.tol_scale = 0.0;
        assert!(run(&c).unwrap_err().to_string().contains("tol-scale"));
    }

    #[test]
    fn equilibrium_simulation_writes_all_outputs() {
        let dir = temp();
        let mut c = RunConfig::new(Subcommand::Simulate, dir.path());
        c.deterministic = true;
        let o = run(&c).unwrap();
        assert_eq!(o.status(), 0);
        for f in ["snapshots.csv", "ledger.csv", "summary.json", "report.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let r: Report = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(r.wall_time, 0.0);
        assert_eq!(r.suite, "simulate");
        assert!(r.cases.iter().any(|c| c.name == "mass_law"));
    }

    #[test]
    fn failing_check_gives_status_one() {
        let dir = temp();
        let path = dir.path().join("surface.json");
        fs::write(&path, r#"{"sphere_resolution": [16, 32], "ellipsoid_levels": [1, 2], "min_order": 10.0}"#).unwrap();
        let mut c = RunConfig::new(Subcommand::VerifySurface, dir.path().join("out"));
        c.config_path = Some(path);
        let o = run(&c).unwrap();
        assert_eq!(o.status(), 1);
        assert!(o.failure_record().contains("verify-surface/divthm_ellipsoid_position_order"), "{}", o.failure_record());
        assert!(dir.path().join("out/report.json").exists());
    }
}
