//! Manufactured states: named presets, polynomial states loaded from JSON, and residual
//! sweeps written as CSV.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::symbolic::{make_mass_consistent, PolyPhase, PolyState};
use super::{residual_system, Equation, FlowFields, MaterialParams, Model, Phase, PhaseFields, Residual};
use crate::field::{Constant, ConstantVector, Mat3, ScalarField, Vec3, VectorField};
use crate::poly::{curl, divergence, dot, position, radius_squared, scale_vec, Poly};

/// Decaying Taylor-Green vortex in the `x1, x2` plane.
///
/// `v = F(t) (sin x cos y, -cos x sin y, 0)` with `F = exp(-kappa t)`. With the stress
/// `mu D - pi I`, the viscous force is `-mu v`, so `kappa = mu / rho` solves the momentum
/// equation when `rho_0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorGreenVelocity {
    pub kappa: f64,
}

impl TaylorGreenVelocity {
    fn amp(&self, t: f64) -> f64 {
        (-self.kappa * t).exp()
    }
}

impl VectorField for TaylorGreenVelocity {
    fn value(&self, x: &Vec3, t: f64) -> Vec3 {
        let (sx, cx) = x[0].sin_cos();
        let (sy, cy) = x[1].sin_cos();
        Vec3::new(sx * cy, -cx * sy, 0.0) * self.amp(t)
    }
    fn jacobian(&self, x: &Vec3, t: f64) -> Mat3 {
        let (sx, cx) = x[0].sin_cos();
        let (sy, cy) = x[1].sin_cos();
        Mat3::new(cx * cy, -sx * sy, 0.0, sx * sy, -cx * cy, 0.0, 0.0, 0.0, 0.0) * self.amp(t)
    }
    fn component_hessians(&self, x: &Vec3, t: f64) -> [Mat3; 3] {
        let (sx, cx) = x[0].sin_cos();
        let (sy, cy) = x[1].sin_cos();
        let a = self.amp(t);
        let h1 = Mat3::new(-sx * cy, -cx * sy, 0.0, -cx * sy, -sx * cy, 0.0, 0.0, 0.0, 0.0) * a;
        let h2 = Mat3::new(cx * sy, sx * cy, 0.0, sx * cy, cx * sy, 0.0, 0.0, 0.0, 0.0) * a;
        [h1, h2, Mat3::zeros()]
    }
    fn time_derivative(&self, x: &Vec3, t: f64) -> Vec3 {
        self.value(x, t) * -self.kappa
    }
}

/// Pressure of the Taylor-Green vortex: `p0 + rho/4 (cos 2x + cos 2y) F(t)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorGreenPressure {
    pub kappa: f64,
    pub rho: f64,
    pub p0: f64,
}

impl ScalarField for TaylorGreenPressure {
    fn value(&self, x: &Vec3, t: f64) -> f64 {
        self.p0 + 0.25 * self.rho * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * (-2.0 * self.kappa * t).exp()
    }
    fn gradient(&self, x: &Vec3, t: f64) -> Vec3 {
        let a = -0.5 * self.rho * (-2.0 * self.kappa * t).exp();
        Vec3::new(a * (2.0 * x[0]).sin(), a * (2.0 * x[1]).sin(), 0.0)
    }
    fn hessian(&self, x: &Vec3, t: f64) -> Mat3 {
        let a = -self.rho * (-2.0 * self.kappa * t).exp();
        Mat3::from_diagonal(&Vec3::new(a * (2.0 * x[0]).cos(), a * (2.0 * x[1]).cos(), 0.0))
    }
    fn time_derivative(&self, x: &Vec3, t: f64) -> f64 {
        -2.0 * self.kappa * (self.value(x, t) - self.p0)
    }
}

/// Taylor-Green vortex in both phases with uniform densities.
pub fn taylor_green(params: &MaterialParams, rho_a: f64, rho_b: f64, p0: f64) -> FlowFields {
    let phase = |rho: f64, mu: f64| {
        let kappa = mu / rho;
        PhaseFields::new(Constant(rho), TaylorGreenVelocity { kappa }, TaylorGreenPressure { kappa, rho, p0 })
    };
    FlowFields { a: phase(rho_a, params.mu_a), b: phase(rho_b, params.mu_b) }
}

/// Uniform state at rest.
pub fn constant_state(rho_a: f64, rho_b: f64, pi_a: f64, pi_b: f64) -> FlowFields {
    FlowFields {
        a: PhaseFields::new(Constant(rho_a), ConstantVector::zero(), Constant(pi_a)),
        b: PhaseFields::new(Constant(rho_b), ConstantVector::zero(), Constant(pi_b)),
    }
}

/// Random polynomial state with `v_A = curl psi` and both densities corrected so the mass
/// equations of `model` hold exactly at `t0`.
pub fn random_solenoidal(seed: u64, model: Model, params: &MaterialParams, t0: f64) -> PolyState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = [0, 1, 2].map(|_| Poly::random(&mut rng, 3, true, 0.5));
    let density = |rng: &mut ChaCha8Rng| &Poly::constant(1.0 + rng.gen::<f64>()) + &Poly::random(rng, 2, true, 0.2);
    let mut state = PolyState {
        a: PolyPhase { rho: density(&mut rng), vel: curl(&psi), pressure: Poly::random(&mut rng, 2, true, 1.0) },
        b: PolyPhase {
            rho: density(&mut rng),
            vel: [0, 1, 2].map(|_| Poly::random(&mut rng, 2, true, 0.5)),
            pressure: Poly::random(&mut rng, 2, true, 1.0),
        },
    };
    make_mass_consistent(model, Phase::A, &mut state, params, t0);
    make_mass_consistent(model, Phase::B, &mut state, params, t0);
    state
}

/// Polynomial state around a sphere of radius `radius` centered at the origin, inside the
/// outer wall `|x| = outer`, that satisfies the kinematic restrictions of both models and the
/// normal interface balance of `model` exactly, with densities mass-consistent at `t0`.
///
/// `v_A = (1 - r^2/R^2) U + (U.x) x / (2 R^2)` is solenoidal and normal on the sphere;
/// `v_B = (U.x) x / (2 R^2) (outer^2 - r^2) / (outer^2 - R^2)` matches it there and vanishes on
/// the wall. `pi_A` is then chosen so the interface balance holds identically.
pub fn sphere_state(seed: u64, model: Model, params: &MaterialParams, radius: f64, outer: f64, t0: f64) -> PolyState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let r2 = radius * radius;
    let xs = position();
    let ux = (0..3).fold(Poly::zero(), |acc, i| &acc + &xs[i].scale(u[i]));
    let normal_part = scale_vec(&ux.scale(0.5 / r2), &xs);
    let bulk = &Poly::constant(1.0) - &radius_squared().scale(1.0 / r2);
    let v_a: [Poly; 3] = [0, 1, 2].map(|i| &(&bulk * &Poly::constant(u[i])) + &normal_part[i]);
    let decay = (&Poly::constant(outer * outer) - &radius_squared()).scale(1.0 / (outer * outer - r2));
    let v_b = scale_vec(&decay, &normal_part);

    let pi_b = &Poly::constant(2.0 + rng.gen::<f64>()) + &Poly::random(&mut rng, 2, true, 0.3);
    let curvature = -2.0 / radius;
    let jump = match model {
        Model::Inviscid => Poly::constant(params.pi_0 * curvature),
        Model::Viscous => {
            let normal_strain = |v: &[Poly; 3]| {
                let jx = super::symbolic::mat_vec(&super::symbolic::jacobian(v), &xs);
                dot(&xs, &jx).scale(1.0 / r2)
            };
            let ta = normal_strain(&v_a).scale(params.mu_a);
            let tb = &normal_strain(&v_b).scale(params.mu_b) + &divergence(&v_b).scale(params.lambda_b);
            &(&ta - &tb) + &Poly::constant(params.pi_0 * curvature)
        }
    };
    let pi_a = &pi_b + &jump;
    let density = |rng: &mut ChaCha8Rng| &Poly::constant(1.0 + rng.gen::<f64>()) + &Poly::random(rng, 2, true, 0.1);
    let mut state = PolyState {
        a: PolyPhase { rho: density(&mut rng), vel: v_a, pressure: pi_a },
        b: PolyPhase { rho: density(&mut rng), vel: v_b, pressure: pi_b },
    };
    make_mass_consistent(model, Phase::A, &mut state, params, t0);
    make_mass_consistent(model, Phase::B, &mut state, params, t0);
    state
}

/// One catalog entry: either a named preset or explicit polynomial fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub name: String,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub polynomial: Option<PolyState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub fields: Vec<CatalogEntry>,
}

pub const PRESETS: [&str; 4] = ["constant", "taylor_green", "random_solenoidal", "sphere"];

impl CatalogEntry {
    /// Build the fields; `random_solenoidal` is made mass-consistent at `t0` for `model`.
    pub fn build(&self, model: Model, params: &MaterialParams, t0: f64) -> Result<FlowFields, String> {
        match (&self.preset, &self.polynomial) {
            (Some(_), Some(_)) => Err(format!("entry '{}' sets both preset and polynomial", self.name)),
            (None, None) => Err(format!("entry '{}' needs a preset or polynomial fields", self.name)),
            (None, Some(p)) => Ok(p.to_fields()),
            (Some(name), None) => match name.as_str() {
                "constant" => Ok(constant_state(1.0, 1.0, 1.0, 1.0)),
                "taylor_green" => Ok(taylor_green(params, 1.0, 1.0, 2.0)),
                "random_solenoidal" => Ok(random_solenoidal(self.seed.unwrap_or(0), model, params, t0).to_fields()),
                "sphere" => Ok(sphere_state(self.seed.unwrap_or(0), model, params, 1.0, 2.0, t0).to_fields()),
                other => Err(format!("unknown preset '{other}' (known: {})", PRESETS.join(", "))),
            },
        }
    }
}

/// One row of a residual sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub t: f64,
    pub equation: &'static str,
    pub residual: f64,
}

/// Norms of all four bulk residuals at every probe.
pub fn residual_sweep(model: Model, fields: &FlowFields, params: &MaterialParams, probes: &[(Vec3, f64)]) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(probes.len() * 4);
    for (x, t) in probes {
        for eq in Equation::ALL {
            let r: Residual = residual_system(model, eq, fields, params, x, *t);
            rows.push(SweepRow { x: x[0], y: x[1], z: x[2], t: *t, equation: eq.name(), residual: r.norm() });
        }
    }
    rows
}

pub fn write_sweep_csv(rows: &[SweepRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnVector;

    fn params() -> MaterialParams {
        MaterialParams { mu_a: 0.3, mu_b: 0.8, lambda_b: 0.5, rho_0: 0.0, pi_0: 1.0, ..Default::default() }
    }

    #[test]
    fn taylor_green_solves_classical_system() {
        let f = taylor_green(&params(), 1.3, 0.7, 2.0);
        for k in 0..20 {
            let s = k as f64;
            let x = Vec3::new((1.7 * s).sin() * 3.0, (0.3 * s).cos() * 3.0, s * 0.1);
            let t = 0.05 * s;
            for model in [Model::Viscous] {
                for eq in Equation::ALL {
                    let r = residual_system(model, eq, &f, &params(), &x, t).norm();
                    assert!(r < 1e-12, "{eq:?} {r}");
                }
            }
        }
    }

    #[test]
    fn taylor_green_derivatives_match_differences() {
        let v = TaylorGreenVelocity { kappa: 0.4 };
        let fd = FnVector(move |x: &Vec3, t: f64| v.value(x, t));
        let x = Vec3::new(0.3, 1.1, -0.2);
        assert!((v.jacobian(&x, 0.5) - fd.jacobian(&x, 0.5)).norm() < 1e-9);
        for (a, b) in v.component_hessians(&x, 0.5).iter().zip(fd.component_hessians(&x, 0.5).iter()) {
            assert!((a - b).norm() < 1e-6);
        }
        assert!((v.time_derivative(&x, 0.5) - fd.time_derivative(&x, 0.5)).norm() < 1e-9);
        let p = TaylorGreenPressure { kappa: 0.4, rho: 1.2, p0: 1.0 };
        let pf = crate::field::FnScalar(move |x: &Vec3, t: f64| p.value(x, t));
        assert!((p.gradient(&x, 0.5) - pf.gradient(&x, 0.5)).norm() < 1e-9);
        assert!((p.hessian(&x, 0.5) - pf.hessian(&x, 0.5)).norm() < 1e-6);
        assert!((p.time_derivative(&x, 0.5) - pf.time_derivative(&x, 0.5)).abs() < 1e-9);
    }

    #[test]
    fn catalog_parses_and_rejects_unknowns() {
        let text = r#"{"fields":[{"name":"tg","preset":"taylor_green"},{"name":"r","preset":"random_solenoidal","seed":4}]}"#;
        let cat: Catalog = serde_json::from_str(text).unwrap();
        for e in &cat.fields {
            e.build(Model::Viscous, &params(), 0.0).unwrap();
        }
        let bad = CatalogEntry { name: "x".into(), preset: Some("nope".into()), seed: None, polynomial: None };
        assert!(bad.build(Model::Viscous, &params(), 0.0).unwrap_err().contains("unknown preset"));
        assert!(serde_json::from_str::<Catalog>(r#"{"fields":[],"extra":1}"#).is_err());
    }

    #[test]
    fn polynomial_entry_round_trips() {
        let state = random_solenoidal(2, Model::Inviscid, &params(), 0.0);
        let entry = CatalogEntry { name: "p".into(), preset: None, seed: None, polynomial: Some(state.clone()) };
        let json = serde_json::to_string(&Catalog { fields: vec![entry] }).unwrap();
        let back: Catalog = serde_json::from_str(&json).unwrap();
        assert_eq!(back.fields[0].polynomial.as_ref().unwrap(), &state);
    }

    #[test]
    fn sphere_state_satisfies_restrictions_and_balance() {
        use crate::surface::ClosedSurface;
        use crate::tensors::residual_interface;
        let p = MaterialParams { rho_0: 0.4, pi_0: 1.5, ..params() };
        let surface = ClosedSurface::sphere(1.0, 8, 16).unwrap();
        for model in [Model::Inviscid, Model::Viscous] {
            let state = sphere_state(3, model, &p, 1.0, 2.0, 0.2);
            let f = state.to_fields();
            for node in 0..surface.len() {
                let (x, n) = (surface.node(node).unwrap(), surface.normal(node).unwrap());
                let (va, vb) = (f.a.vel.value(&x, 0.2), f.b.vel.value(&x, 0.2));
                assert!((va - vb).norm() < 1e-12);
                assert!((va - n * n.dot(&va)).norm() < 1e-12);
                assert!(residual_interface(model, &f, &p, &surface, node, 0.2).unwrap().abs() < 1e-10);
                assert!(f.a.vel.divergence(&x, 0.2).abs() < 1e-12);
                let wall = x * 2.0;
                assert!(f.b.vel.value(&wall, 0.2).norm() < 1e-12);
            }
            for eq in [Equation::MassA, Equation::MassB] {
                assert!(residual_system(model, eq, &f, &p, &Vec3::new(0.3, -0.2, 0.5), 0.2).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn sweep_csv_has_expected_columns() {
        let f = constant_state(1.0, 1.0, 1.0, 1.0);
        let rows = residual_sweep(Model::Inviscid, &f, &params(), &[(Vec3::zeros(), 0.0)]);
        assert_eq!(rows.len(), 4);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,z,t,equation,residual\n"));
    }
}
