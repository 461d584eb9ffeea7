//! Built-in verification suites. Every tolerance is a config field with a documented default.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::field::{Constant, ConstantVector, FnScalar, FnVector, Vec3, VectorField};
use crate::report::{Case, Report};
use crate::surface::{divergence_theorem_terms, mean_curvature, ClosedSurface, SurfaceError, TriMesh, VectorInput};
use crate::tensors::catalog::{random_solenoidal, sphere_state};
use crate::tensors::{residual_conservative_form, residual_system, Equation, MaterialParams, Model};
use crate::transport::{
    bulk_transport_residual, mass_identity_check, observed_order, surface_transport_residual, sweep, MovingDomain, MovingSurface,
    RadiusLaw, SurfaceShape, TransportError,
};
use crate::variational::{
    helmholtz_pressure, make_admissible, variational_identity_residual, ConstraintSet, PerturbationSeed, SphereGeometry,
    VariationalError, VariationalState,
};

/// Preset names accepted by each suite.
pub const SURFACE_PRESETS: [&str; 1] = ["sphere"];
pub const TRANSPORT_PRESETS: [&str; 1] = ["growing"];
pub const VARIATIONAL_PRESETS: [&str; 1] = ["sphere_variational"];
pub const MMS_PRESETS: [&str; 1] = ["sphere_mms"];

impl From<SurfaceError> for CliError {
    fn from(e: SurfaceError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<VariationalError> for CliError {
    fn from(e: VariationalError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Surface calculus: divergence theorem, curvature and area on a parametric sphere, and the
/// convergence of the divergence theorem on triangulated ellipsoids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceSuite {
    /// `[n_theta, n_phi]` of the parametric unit sphere.
    pub sphere_resolution: [usize; 2],
    /// Bound on `|int div_G x - 8 pi| / 8 pi`.
    pub divthm_tol: f64,
    /// Bound on the residual for a constant field.
    pub constant_tol: f64,
    /// Bound on `max |H + 2|`.
    pub curvature_tol: f64,
    /// Bound on `|area - 4 pi| / 4 pi`.
    pub area_tol: f64,
    pub ellipsoid_axes: [f64; 3],
    /// Subdivision levels; each level halves the edge length.
    pub ellipsoid_levels: Vec<usize>,
    /// Minimum observed order between consecutive levels.
    pub min_order: f64,
}

impl Default for SurfaceSuite {
    fn default() -> Self {
        Self {
            sphere_resolution: [128, 256],
            divthm_tol: 1e-8,
            constant_tol: 1e-10,
            curvature_tol: 1e-12,
            area_tol: 1e-12,
            ellipsoid_axes: [2.0, 1.0, 1.0],
            ellipsoid_levels: vec![2, 3, 4, 5],
            min_order: 1.0,
        }
    }
}

/// Smooth field `A x + |x|^2 c + b` with seeded coefficients.
fn random_smooth_field(seed: u64) -> impl Fn(&Vec3) -> Vec3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || rng.gen_range(-1.0..1.0);
    let a = crate::Mat3::from_fn(|_, _| draw());
    let c = Vec3::from_fn(|_, _| draw());
    let b = Vec3::from_fn(|_, _| draw());
    move |x: &Vec3| a * x + c * x.norm_squared() + b
}

/// Smallest order `log(r_k / r_{k+1}) / log(h_k / h_{k+1})` over consecutive pairs.
fn min_pairwise_order(samples: &[(f64, f64)]) -> f64 {
    samples
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .fold(f64::INFINITY, f64::min)
}

impl SurfaceSuite {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.ellipsoid_levels.len() < 2 {
            return Err(CliError::Config("ellipsoid_levels needs at least two levels".into()));
        }
        if self.ellipsoid_axes.iter().any(|a| !(*a > 0.0)) {
            return Err(CliError::Config("ellipsoid_axes must be positive".into()));
        }
        Ok(())
    }

    pub fn run(&self, seed: u64, tol_scale: f64) -> Result<Report, CliError> {
        self.validate()?;
        let mut r = Report::new("verify-surface");
        let [nt, np] = self.sphere_resolution;
        let sphere = ClosedSurface::sphere(1.0, nt, np)?;

        let id = |x: &Vec3| *x;
        let terms = divergence_theorem_terms(&sphere, VectorInput::Ambient(&id))?;
        let exact = 8.0 * PI;
        let worst = f64::max((terms.divergence - exact).abs(), (terms.curvature - exact).abs()) / exact;
        r.push(Case::at_most("divthm_sphere_position", worst, self.divthm_tol * tol_scale));

        let e = Vec3::new(0.3, -1.2, 0.7);
        let constant = |_: &Vec3| e;
        let terms = divergence_theorem_terms(&sphere, VectorInput::Ambient(&constant))?;
        let worst = terms.divergence.abs().max(terms.curvature.abs()).max(terms.residual());
        r.push(Case::at_most("divthm_sphere_constant", worst, self.constant_tol * tol_scale));

        let h = mean_curvature(&sphere);
        let dev = h.as_scalar().unwrap_or(&[]).iter().map(|h| (h + 2.0).abs()).fold(0.0, f64::max);
        r.push(Case::at_most("curvature_sphere", dev, self.curvature_tol * tol_scale));
        r.push(Case::at_most("area_sphere", (sphere.area() - 4.0 * PI).abs() / (4.0 * PI), self.area_tol * tol_scale));

        let [a, b, c] = self.ellipsoid_axes;
        let fields: [(&str, Box<dyn Fn(&Vec3) -> Vec3>); 2] =
            [("position", Box::new(id)), ("random", Box::new(random_smooth_field(seed)))];
        let meshes: Vec<(f64, ClosedSurface)> = self
            .ellipsoid_levels
            .iter()
            .map(|&l| {
                let m = TriMesh::ellipsoid(l, Vec3::new(a, b, c));
                Ok((m.max_edge(), ClosedSurface::from_mesh(m, 1)?))
            })
            .collect::<Result<_, SurfaceError>>()?;
        for (name, f) in &fields {
            let samples = meshes
                .iter()
                .map(|(h, s)| Ok((*h, divergence_theorem_terms(s, VectorInput::Ambient(f.as_ref()))?.residual())))
                .collect::<Result<Vec<_>, SurfaceError>>()?;
            r.push(Case::at_least(format!("divthm_ellipsoid_{name}_order"), min_pairwise_order(&samples), self.min_order));
        }
        Ok(r)
    }
}

/// Transport theorems on a growing ball and a growing sphere, and the mass identity on a
/// ball-in-shell geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportSuite {
    /// Evaluation time.
    pub t: f64,
    /// Initial radius and growth rate of the linear radius law.
    pub radius: f64,
    pub rate: f64,
    pub dts: Vec<f64>,
    pub order_target: f64,
    pub order_tol: f64,
    /// Step and tolerance of the closed-form volume and area rate checks.
    pub closed_form_dt: f64,
    pub closed_form_tol: f64,
    /// Tolerances of the mass identity for `rho_0 > 0` and `rho_0 = 0`.
    pub mass_tol: f64,
    pub classical_mass_tol: f64,
}

impl Default for TransportSuite {
    fn default() -> Self {
        Self {
            t: 0.3,
            radius: 1.0,
            rate: 0.5,
            dts: vec![1e-2, 5e-3, 2.5e-3],
            order_target: 2.0,
            order_tol: 0.3,
            closed_form_dt: 1e-4,
            closed_form_tol: 1e-8,
            mass_tol: 1e-6,
            classical_mass_tol: 1e-8,
        }
    }
}

impl TransportSuite {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.dts.len() < 2 || self.dts.iter().any(|d| !(*d > 0.0)) {
            return Err(CliError::Config("dts needs at least two positive steps".into()));
        }
        if !(self.radius > 0.0) || self.radius + self.rate * (self.t - self.dts[0]) <= 0.0 {
            return Err(CliError::Config("radius must stay positive over the sweep".into()));
        }
        Ok(())
    }

    pub fn run(&self, seed: u64, tol_scale: f64) -> Result<Report, CliError> {
        self.validate()?;
        let mut r = Report::new("verify-transport");
        let law = RadiusLaw::linear(self.radius, self.rate);
        let t = self.t;

        let ball = MovingDomain::growing_ball(law.clone(), Vec3::zeros())?;
        let f = FnScalar(|x: &Vec3, t: f64| x[2] * x[2] * (1.0 + t) + x[0] * x[1]);
        let rows = sweep(t, &self.dts, |dt| bulk_transport_residual(&ball, &f, ball.velocity.as_ref(), t, dt))?;
        r.push(Case::near("growing_ball_order_deviation", observed_order(&rows), self.order_target, self.order_tol * tol_scale));
        let vol = bulk_transport_residual(&ball, &Constant(1.0), ball.velocity.as_ref(), t, self.closed_form_dt)?;
        r.push(Case::at_most("growing_ball_volume_rate", vol, self.closed_form_tol * tol_scale));

        let sphere = MovingSurface::growing_sphere(law.clone(), Vec3::zeros())?;
        let g = FnScalar(|x: &Vec3, _t: f64| x[2] * x[2]);
        let rows = sweep(t, &self.dts, |dt| surface_transport_residual(&sphere, &g, t, dt))?;
        r.push(Case::near("growing_sphere_order_deviation", observed_order(&rows), self.order_target, self.order_tol * tol_scale));
        let area = surface_transport_residual(&sphere, &Constant(1.0), t, self.closed_form_dt)?;
        r.push(Case::at_most("growing_sphere_area_rate", area, self.closed_form_tol * tol_scale));

        let fixed = RadiusLaw::constant(1.0);
        let domain_a = MovingDomain::growing_ball(fixed.clone(), Vec3::zeros())?;
        let domain_b = MovingDomain::shrinking_shell(fixed.clone(), 2.0, Vec3::zeros())?;
        for (name, rho_0, tol) in [("mass_identity", 0.5, self.mass_tol), ("mass_identity_classical", 0.0, self.classical_mass_tol)] {
            let mut worst: f64 = 0.0;
            for model in [Model::Inviscid, Model::Viscous] {
                let p = MaterialParams { mu_a: 0.3, mu_b: 0.5, lambda_b: 0.2, rho_0, pi_0: 1.5, ..Default::default() };
                let fields = sphere_state(seed, model, &p, 1.0, 2.0, t).to_fields();
                let va = fields.a.vel.clone();
                let normal_part = FnVector(move |x: &Vec3, s: f64| {
                    let n = x.normalize();
                    n * n.dot(&va.value(x, s))
                });
                // the identity is instantaneous, so v_S carries the normal part of v_A although the
                // sphere itself is held fixed
                let mut surface = MovingSurface::new(SurfaceShape::Sphere, fixed.clone(), Vec3::zeros(), Arc::new(ConstantVector::zero()))?;
                surface.velocity = Arc::new(normal_part);
                let m = mass_identity_check(model, &fields, &p, &domain_a, &domain_b, &surface, t)?;
                worst = worst.max(m.residual);
            }
            r.push(Case::at_most(name, worst, tol * tol_scale));
        }
        let still = MovingSurface::new(SurfaceShape::Sphere, fixed, Vec3::zeros(), Arc::new(ConstantVector::zero()))?;
        let rest = surface_transport_residual(&still, &Constant(1.0), t, self.closed_form_dt)?
            + bulk_transport_residual(&domain_a, &Constant(1.0), &ConstantVector::zero(), t, self.closed_form_dt)?;
        r.push(Case::at_most("static_domains", rest, self.closed_form_tol * tol_scale));
        Ok(r)
    }
}

/// Variational identity for random admissible perturbations and the Helmholtz pressure
/// recovery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariationalSuite {
    pub perturbations: usize,
    pub radius: f64,
    pub outer: f64,
    pub params: MaterialParams,
    pub inviscid_tol: f64,
    pub viscous_tol: f64,
    /// Grid spacing and tolerance of the Helmholtz recovery.
    pub helmholtz_h: f64,
    pub helmholtz_tol: f64,
}

impl Default for VariationalSuite {
    fn default() -> Self {
        Self {
            perturbations: 5,
            radius: 1.0,
            outer: 2.0,
            params: MaterialParams { mu_a: 0.7, mu_b: 0.4, lambda_b: 0.3, rho_0: 0.5, pi_0: 1.3, ..Default::default() },
            inviscid_tol: 1e-5,
            viscous_tol: 1e-4,
            helmholtz_h: 1.0 / 32.0,
            helmholtz_tol: 1e-3,
        }
    }
}

impl VariationalSuite {
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.radius > 0.0 && self.outer > self.radius) {
            return Err(CliError::Config("need 0 < radius < outer".into()));
        }
        if !(self.helmholtz_h > 0.0 && self.helmholtz_h < 1.0) {
            return Err(CliError::Config("helmholtz_h must be in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn run(&self, seed: u64, tol_scale: f64) -> Result<Report, CliError> {
        self.validate()?;
        let mut r = Report::new("verify-variational");
        let geometry = SphereGeometry::new(self.radius, self.outer)?;
        for (model, tol) in [(Model::Inviscid, self.inviscid_tol), (Model::Viscous, self.viscous_tol)] {
            for k in 0..self.perturbations as u64 {
                let state = VariationalState::random(seed.wrapping_mul(1000).wrapping_add(100 + k), self.radius);
                let p = make_admissible(PerturbationSeed::Random(seed.wrapping_add(k)), ConstraintSet::for_model(model), &geometry)?;
                let rep = variational_identity_residual(model, &state, &self.params, &geometry, &p, 0.0)?;
                r.push(Case::at_most(format!("variational_{model}_{k}"), rep.relative(), tol * tol_scale));
            }
        }

        let potential = |x: &Vec3| (0.5 * x[0]).exp() * x[1].cos() + x[2].powi(3);
        let gradient = |x: &Vec3| {
            let e = (0.5 * x[0]).exp();
            Vec3::new(0.5 * e * x[1].cos(), -e * x[1].sin(), 3.0 * x[2] * x[2])
        };
        let sol = helmholtz_pressure(&gradient, Vec3::zeros(), 1.0, self.helmholtz_h)?;
        r.push(Case::at_most("helmholtz_gradient", sol.relative_error(potential), self.helmholtz_tol * tol_scale));
        let rotation = |x: &Vec3| Vec3::new(-x[1], x[0], 0.0);
        let flagged = matches!(helmholtz_pressure(&rotation, Vec3::zeros(), 1.0, self.helmholtz_h), Err(VariationalError::IllPosed { .. }));
        r.push(Case::flag("helmholtz_curl_ill_posed", flagged));
        Ok(r)
    }
}

/// Pointwise agreement of the viscous system and its conservative form on manufactured
/// states with solenoidal `v_A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmsSuite {
    pub probes: usize,
    /// Number of manufactured states; probes are spread evenly over them.
    pub states: usize,
    /// Half-width of the probe box around the origin.
    pub extent: f64,
    pub params: MaterialParams,
    pub tol: f64,
}

impl Default for MmsSuite {
    fn default() -> Self {
        Self {
            probes: 1000,
            states: 10,
            extent: 1.0,
            params: MaterialParams { mu_a: 0.3, mu_b: 0.5, lambda_b: 0.2, rho_0: 0.5, pi_0: 1.0, ..Default::default() },
            tol: 1e-8,
        }
    }
}

impl MmsSuite {
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.states == 0 || self.probes < self.states {
            return Err(CliError::Config("need 1 <= states <= probes".into()));
        }
        if !(self.extent > 0.0) {
            return Err(CliError::Config("extent must be positive".into()));
        }
        Ok(())
    }

    pub fn run(&self, seed: u64, tol_scale: f64) -> Result<Report, CliError> {
        self.validate()?;
        let mut r = Report::new("mms");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = [0.0f64; 4];
        let mut done = 0;
        for s in 0..self.states {
            let count = (self.probes - done) / (self.states - s);
            let t0 = rng.gen_range(0.0..1.0);
            let fields = random_solenoidal(rng.gen(), Model::Viscous, &self.params, t0).to_fields();
            for _ in 0..count {
                let x = Vec3::from_fn(|_, _| rng.gen_range(-self.extent..self.extent));
                for (k, eq) in Equation::ALL.into_iter().enumerate() {
                    let sys = residual_system(Model::Viscous, eq, &fields, &self.params, &x, t0);
                    let cons = residual_conservative_form(eq, &fields, &self.params, &x, t0).map_err(|e| CliError::Runtime(e.to_string()))?;
                    worst[k] = worst[k].max(sys.sub(&cons).norm());
                }
            }
            done += count;
        }
        for (eq, w) in Equation::ALL.iter().zip(worst) {
            r.push(Case::at_most(format!("system_vs_conservative_{}", eq.name()), w, self.tol * tol_scale));
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_order_of_exact_power_law() {
        let s: Vec<(f64, f64)> = [1.0, 0.5, 0.25].iter().map(|h: &f64| (*h, 3.0 * h * h)).collect();
        assert!((min_pairwise_order(&s) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn suites_reject_unknown_keys() {
        assert!(serde_json::from_str::<SurfaceSuite>(r#"{"divthm_tol":1e-6}"#).is_ok());
        let err = serde_json::from_str::<SurfaceSuite>(r#"{"divthm_tole":1e-6}"#).unwrap_err();
        assert!(err.to_string().contains("divthm_tole"));
        assert!(serde_json::from_str::<MmsSuite>(r#"{"probes":10,"bogus":true}"#).is_err());
    }

    #[test]
    fn mms_spreads_probes_over_states() {
        let suite = MmsSuite { probes: 25, states: 4, ..Default::default() };
        let r = suite.run(3, 1.0).unwrap();
        assert_eq!(r.cases.len(), 4);
        assert!(r.passed(), "{r:?}");
        assert!(MmsSuite { states: 0, ..Default::default() }.run(0, 1.0).is_err());
    }

    #[test]
    fn transport_suite_rejects_collapsing_radius() {
        let s = TransportSuite { rate: -10.0, ..Default::default() };
        assert!(matches!(s.validate(), Err(CliError::Config(_))));
    }
}
