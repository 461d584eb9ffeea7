//! Acceptance run: one line per criterion, non-zero exit when any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use evaflow::cli::{MmsSuite, SurfaceSuite, TransportSuite, VariationalSuite};
use evaflow::report::{Case, Report};
use evaflow::simulator::{preset, Limiter, Mode, RunSummary, ScenarioConfig, Simulation};
use evaflow::tensors::{MaterialParams, Model};

type Criterion = (&'static str, fn() -> Outcome, u64);

struct Outcome {
    pass: bool,
    detail: String,
}

fn case<'a>(r: &'a Report, name: &str) -> &'a Case {
    r.cases.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no case {name} in {}", r.suite))
}

fn cases_with<'a>(r: &'a Report, prefix: &'a str) -> impl Iterator<Item = &'a Case> + 'a {
    r.cases.iter().filter(move |c| c.name.starts_with(prefix))
}

fn run(c: ScenarioConfig) -> RunSummary {
    let mut sim = Simulation::new(c).expect("valid scenario");
    sim.run().expect("run completes");
    sim.summary(1.0).expect("summary")
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn min_order(v: &[f64]) -> f64 {
    v.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
}

fn surface_divergence_theorem() -> Outcome {
    let r = SurfaceSuite { sphere_resolution: [128, 256], ellipsoid_levels: vec![2, 3, 4, 5], min_order: 1.0, ..Default::default() }
        .run(0, 1.0)
        .unwrap();
    let sphere = case(&r, "divthm_sphere_position");
    let order = case(&r, "divthm_ellipsoid_position_order");
    let random = case(&r, "divthm_ellipsoid_random_order");
    Outcome {
        pass: sphere.value < 1e-8 && order.value >= 1.0 && random.value >= 1.0,
        detail: format!("sphere rel err {:.2e} (< 1e-8), ellipsoid order {:.3} / {:.3} (>= 1)", sphere.value, order.value, random.value),
    }
}

fn transport_theorems() -> Outcome {
    let r = TransportSuite { dts: vec![1e-2, 5e-3, 2.5e-3], order_target: 2.0, order_tol: 0.3, ..Default::default() }.run(0, 1.0).unwrap();
    let ball = case(&r, "growing_ball_order_deviation");
    let sphere = case(&r, "growing_sphere_order_deviation");
    Outcome {
        pass: ball.value <= 0.3 && sphere.value <= 0.3,
        detail: format!("|order - 2| ball {:.2e}, sphere {:.2e} (<= 0.3)", ball.value, sphere.value),
    }
}

fn variational_identity() -> Outcome {
    let r = VariationalSuite { perturbations: 5, inviscid_tol: 1e-5, viscous_tol: 1e-4, ..Default::default() }.run(0, 1.0).unwrap();
    let worst = |prefix| cases_with(&r, prefix).map(|c| c.value).fold(0.0, f64::max);
    let counts = (cases_with(&r, "variational_inviscid_").count(), cases_with(&r, "variational_viscous_").count());
    let (inv, vis) = (worst("variational_inviscid_"), worst("variational_viscous_"));
    Outcome {
        pass: counts == (5, 5) && inv < 1e-5 && vis < 1e-4,
        detail: format!("5+5 perturbations, max rel err inviscid {inv:.2e} (< 1e-5), viscous {vis:.2e} (< 1e-4)"),
    }
}

fn helmholtz_recovery() -> Outcome {
    let r = VariationalSuite { perturbations: 0, helmholtz_h: 1.0 / 32.0, helmholtz_tol: 1e-3, ..Default::default() }.run(0, 1.0).unwrap();
    let grad = case(&r, "helmholtz_gradient");
    let curl = case(&r, "helmholtz_curl_ill_posed");
    Outcome {
        pass: grad.value < 1e-3 && curl.pass,
        detail: format!("gradient rel L2 err {:.2e} (< 1e-3), curl input flagged: {}", grad.value, curl.pass),
    }
}

fn manufactured_solutions() -> Outcome {
    let r = MmsSuite { probes: 1000, tol: 1e-8, ..Default::default() }.run(0, 1.0).unwrap();
    let lines = cases_with(&r, "system_vs_conservative_").count();
    let worst = cases_with(&r, "system_vs_conservative_").map(|c| c.value).fold(0.0, f64::max);
    Outcome { pass: lines == 4 && worst < 1e-8, detail: format!("1000 probes, max |system - conservative| {worst:.2e} (< 1e-8)") }
}

fn mass_law() -> Outcome {
    let conservative = run(preset("shell_acoustic").unwrap());
    // primitive form: drift must shrink at least linearly as dt halves (cells refined with it)
    let drifts: Vec<f64> = [100, 200, 400, 800]
        .iter()
        .map(|&cells| {
            let mut c = preset("shell_acoustic").unwrap();
            c.mode = Mode::Primitive;
            c.limiter = Limiter::None;
            c.cells = cells;
            c.dt = Some(0.2 / cells as f64);
            c.steps = None;
            c.t_end = Some(0.2);
            run(c).mass_residual
        })
        .collect();
    let order = min_order(&drifts);
    Outcome {
        pass: conservative.steps == 1000 && conservative.mass_residual < 1e-8 && order >= 1.0,
        detail: format!(
            "conservative drift {:.2e} over {} steps (< 1e-8), primitive drifts [{}] order {order:.2} (>= 1)",
            conservative.mass_residual, conservative.steps, sci(&drifts)
        ),
    }
}

fn energy_law() -> Outcome {
    let viscous = run(preset("shell_viscous").unwrap());
    let dt_refined: Vec<f64> = [1e-4, 5e-5, 2.5e-5]
        .iter()
        .map(|&dt| {
            let mut c = preset("shell_viscous").unwrap();
            c.dt = Some(dt);
            c.steps = None;
            c.t_end = Some(0.1);
            run(c).energy_relative
        })
        .collect();
    let mut c = preset("shell_viscous").unwrap();
    c.model = Model::Inviscid;
    c.params = MaterialParams { mu_a: 0.0, mu_b: 0.0, lambda_b: 0.0, ..c.params };
    let inviscid = run(c);
    Outcome {
        pass: viscous.energy_relative < 1e-5 && strictly_decreasing(&dt_refined) && inviscid.energy_relative < 1e-5,
        detail: format!(
            "viscous {:.3e} (< 1e-5), under dt halving [{}] (decreasing), inviscid mu=0 form {:.3e} (< 1e-5)",
            viscous.energy_relative, sci(&dt_refined), inviscid.energy_relative
        ),
    }
}

fn classical_reduction() -> Outcome {
    let c = preset("planar_piston").unwrap();
    assert_eq!(c.params.rho_0, 0.0);
    let s = run(c);
    let diff = s.classical_max_diff.expect("classical comparison enabled");
    Outcome { pass: s.steps == 100 && diff < 1e-10, detail: format!("max diff {diff:.2e} over {} steps (< 1e-10)", s.steps) }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("surface divergence theorem", surface_divergence_theorem, 10),
        ("transport theorems", transport_theorems, 10),
        ("variational identity", variational_identity, 60),
        ("helmholtz pressure recovery", helmholtz_recovery, 30),
        ("manufactured solutions", manufactured_solutions, 5),
        ("mass law", mass_law, 60),
        ("energy law", energy_law, 60),
        ("classical reduction", classical_reduction, 30),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed < Duration::from_secs(*budget);
        if !pass {
            failed += 1;
        }
        println!(
            "{} {}. {name}: {} [{:.2}s, limit {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
