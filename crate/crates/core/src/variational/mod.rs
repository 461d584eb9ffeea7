//! Work and dissipation energies on the sphere-in-shell geometry, admissible perturbations,
//! Gateaux derivatives, the closed-form forces they must reproduce, and a discrete
//! Helmholtz projection that recovers a pressure from a gradient field.

mod helmholtz;

pub use helmholtz::{helmholtz_pressure, HelmholtzSolution, HELMHOLTZ_CURL_TOL, HELMHOLTZ_SOLVER_TOL};

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Axpy, ScalarField, Vec3, VectorField};
use crate::poly::{curl, dot, gradient, position, radius_squared, scale_vec, Poly, PolyField, PolyVec, PolyVectorField};
use crate::surface::{surface_divergence, ClosedSurface, SurfaceError, VectorInput};
use crate::tensors::{self, MaterialParams, Model, Phase, SharedScalar, SharedVector, TensorError};
use crate::transport::spherical_quadrature;

/// Probe tolerance for admissibility constraints.
pub const CONSTRAINT_TOL: f64 = 1e-8;
/// Number of probe points per constraint.
pub const CONSTRAINT_PROBES: usize = 200;
/// Default finite-difference steps before scaling by the state magnitude.
pub const DEFAULT_EPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Observed orders below this flag a non-quadratic dependence on epsilon.
pub const MIN_EPS_ORDER: f64 = 1.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationalError {
    #[error("perturbation violates '{line}' (max deviation {value:e})")]
    Constraint { line: String, value: f64 },
    #[error("need at least 3 epsilon values, got {0}")]
    TooFewEps(usize),
    #[error("input has a non-gradient part: normalized circulation {residual:e}")]
    IllPosed { residual: f64 },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Ball `Omega_A = {|x| < R}`, shell `Omega_B = {R < |x| < outer}`, interface `|x| = R`,
/// with the quadrature used by every integral in this module.
#[derive(Debug, Clone)]
pub struct SphereGeometry {
    pub radius: f64,
    pub outer: f64,
    ball: Vec<(Vec3, f64)>,
    shell: Vec<(Vec3, f64)>,
    surface: ClosedSurface,
}

impl SphereGeometry {
    pub fn new(radius: f64, outer: f64) -> Result<Self, VariationalError> {
        Self::with_resolution(radius, outer, 16, 32)
    }

    /// `bulk` points per dimension in the balls, `n_theta x 2 n_theta` on the interface.
    pub fn with_resolution(radius: f64, outer: f64, bulk: usize, n_theta: usize) -> Result<Self, VariationalError> {
        if !(radius > 0.0 && outer > radius) {
            return Err(VariationalError::InvalidGeometry(format!("need 0 < radius < outer, got {radius}, {outer}")));
        }
        Ok(Self {
            radius,
            outer,
            ball: spherical_quadrature(Vec3::zeros(), 0.0, radius, bulk, None),
            shell: spherical_quadrature(Vec3::zeros(), radius, outer, bulk, None),
            surface: ClosedSurface::sphere(radius, n_theta, 2 * n_theta)?,
        })
    }

    pub fn ball(&self) -> &[(Vec3, f64)] {
        &self.ball
    }

    pub fn shell(&self) -> &[(Vec3, f64)] {
        &self.shell
    }

    pub fn surface(&self) -> &ClosedSurface {
        &self.surface
    }

    fn integrate(points: &[(Vec3, f64)], f: impl Fn(&Vec3) -> f64) -> f64 {
        points.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Velocities of both phases and of the interface, plus the pressures.
#[derive(Clone)]
pub struct VariationalState {
    pub v_a: SharedVector,
    pub v_b: SharedVector,
    pub v_s: SharedVector,
    pub pi_a: SharedScalar,
    pub pi_b: SharedScalar,
}

impl std::fmt::Debug for VariationalState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("VariationalState { .. }")
    }
}

impl VariationalState {
    /// Random polynomial state; `v_S` is the normal part of `v_A` on the interface.
    pub fn random(seed: u64, radius: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v_a: PolyVec = [0, 1, 2].map(|_| Poly::random(&mut rng, 2, false, 0.5));
        let v_b: PolyVec = [0, 1, 2].map(|_| Poly::random(&mut rng, 2, false, 0.5));
        let v_s = normal_part(&v_a, radius);
        let pi_a = &Poly::constant(2.0) + &Poly::random(&mut rng, 2, false, 0.5);
        let pi_b = &Poly::constant(1.0) + &Poly::random(&mut rng, 2, false, 0.5);
        Self {
            v_a: Arc::new(PolyVectorField::new(v_a)),
            v_b: Arc::new(PolyVectorField::new(v_b)),
            v_s: Arc::new(PolyVectorField::new(v_s)),
            pi_a: Arc::new(PolyField::new(pi_a)),
            pi_b: Arc::new(PolyField::new(pi_b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyKind {
    Work,
    Dissipation,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyFunctional {
    pub kind: EnergyKind,
    pub model: Model,
}

impl EnergyFunctional {
    pub fn total(model: Model) -> Self {
        Self { kind: EnergyKind::Total, model }
    }
}

struct Velocities<'a> {
    a: &'a dyn VectorField,
    b: &'a dyn VectorField,
    s: &'a dyn VectorField,
}

fn energy_of(functional: EnergyFunctional, vel: &Velocities, pi_b: &dyn ScalarField, params: &MaterialParams, geometry: &SphereGeometry, t: f64) -> Result<f64, VariationalError> {
    let work = || -> Result<f64, VariationalError> {
        let bulk = SphereGeometry::integrate(geometry.shell(), |x| vel.b.divergence(x, t) * pi_b.value(x, t));
        let g = geometry.surface();
        let vs = |x: &Vec3| vel.s.value(x, t);
        let div = surface_divergence(g, VectorInput::Ambient(&vs))?;
        let surf: f64 = div.as_scalar().expect("scalar").iter().zip(g.weights()).map(|(d, w)| w * d * params.pi_0).sum();
        Ok(bulk + surf)
    };
    let dissipation = || {
        if functional.model == Model::Inviscid {
            return 0.0;
        }
        let a = SphereGeometry::integrate(geometry.ball(), |x| {
            let d = tensors::rate_of_strain(vel.a, x, t);
            -0.5 * params.mu_a * d.norm_squared()
        });
        let b = SphereGeometry::integrate(geometry.shell(), |x| {
            let d = tensors::rate_of_strain(vel.b, x, t);
            let div = vel.b.divergence(x, t);
            -(0.5 * params.mu_b * d.norm_squared() + 0.5 * params.lambda_b * div * div)
        });
        a + b
    };
    Ok(match functional.kind {
        EnergyKind::Work => work()?,
        EnergyKind::Dissipation => dissipation(),
        EnergyKind::Total => work()? + dissipation(),
    })
}

/// Quadrature value of the functional at the state.
pub fn energy_eval(functional: EnergyFunctional, state: &VariationalState, params: &MaterialParams, geometry: &SphereGeometry, t: f64) -> Result<f64, VariationalError> {
    let vel = Velocities { a: state.v_a.as_ref(), b: state.v_b.as_ref(), s: state.v_s.as_ref() };
    energy_of(functional, &vel, state.pi_b.as_ref(), params, geometry, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintSet {
    /// Solenoidal `phi_A`, matching normal parts on the interface, no slip on the interface
    /// and the outer wall.
    Viscous42,
    /// Solenoidal `phi_A`, matching normal parts on the interface, impermeable outer wall.
    Inviscid410,
}

impl ConstraintSet {
    pub fn for_model(model: Model) -> Self {
        match model {
            Model::Inviscid => ConstraintSet::Inviscid410,
            Model::Viscous => ConstraintSet::Viscous42,
        }
    }
}

/// Polynomial perturbation of `(v_A, v_B, v_S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissiblePerturbation {
    pub id: String,
    pub phi_a: PolyVec,
    pub phi_b: PolyVec,
    pub phi_s: PolyVec,
    pub constraint_set: ConstraintSet,
}

/// How to generate a perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationSeed {
    Zero,
    /// Degree-one normal amplitude `g = (U.n) * const`.
    Harmonic(Vec3),
    Random(u64),
}

fn cross(a: &PolyVec, b: &PolyVec) -> PolyVec {
    [0, 1, 2].map(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        &(&a[j] * &b[k]) - &(&a[k] * &b[j])
    })
}

/// `(w.x) x / R^2`, the normal part of `w` on the sphere of radius `R`.
fn normal_part(w: &PolyVec, radius: f64) -> PolyVec {
    let xs = position();
    scale_vec(&dot(w, &xs).scale(1.0 / (radius * radius)), &xs)
}

/// Solenoidal field that is normal on `|x| = R`, from a solid harmonic `q` of degree `l`:
/// `curl(f(r^2) x cross grad q)` with `f(s) = s - R^2 (l + 3) / (l + 1)` cancelling the
/// tangential part on the sphere.
fn poloidal(q: &Poly, l: u32, radius: f64) -> PolyVec {
    let f = &radius_squared() - &Poly::constant(radius * radius * (l as f64 + 3.0) / (l as f64 + 1.0));
    let psi = scale_vec(&f, &cross(&position(), &gradient(q)));
    curl(&psi)
}

fn random_symmetric_traceless(rng: &mut ChaCha8Rng) -> Poly {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v: f64 = rng.gen_range(-1.0..1.0);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    let tr = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let xs = position();
    let mut q = Poly::zero();
    for i in 0..3 {
        for j in 0..3 {
            let c = m[i][j] - if i == j { tr } else { 0.0 };
            q = &q + &(&xs[i] * &xs[j]).scale(c);
        }
    }
    q
}

fn linear_form(u: &Vec3) -> Poly {
    let xs = position();
    (0..3).fold(Poly::zero(), |acc, i| &acc + &xs[i].scale(u[i]))
}

/// Build a perturbation satisfying the constraint set and verify it at probes.
pub fn make_admissible(seed: PerturbationSeed, constraint_set: ConstraintSet, geometry: &SphereGeometry) -> Result<AdmissiblePerturbation, VariationalError> {
    let (r, o) = (geometry.radius, geometry.outer);
    let zero: PolyVec = [Poly::zero(), Poly::zero(), Poly::zero()];
    let (id, phi_a, extra_b) = match seed {
        PerturbationSeed::Zero => ("zero".to_string(), zero.clone(), zero.clone()),
        PerturbationSeed::Harmonic(u) => (format!("harmonic[{},{},{}]", u[0], u[1], u[2]), poloidal(&linear_form(&u), 1, r), zero.clone()),
        PerturbationSeed::Random(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let u = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let mut phi = poloidal(&linear_form(&u), 1, r);
            let q2 = random_symmetric_traceless(&mut rng);
            let p2 = poloidal(&q2, 2, r);
            phi = [0, 1, 2].map(|i| &phi[i] + &p2[i].scale(0.5));
            if constraint_set == ConstraintSet::Inviscid410 {
                // tangential slip on the interface: x cross grad q is solenoidal for any q
                let q = Poly::random(&mut rng, 2, false, 0.5);
                let slip = cross(&position(), &gradient(&q));
                phi = [0, 1, 2].map(|i| &phi[i] + &slip[i]);
            }
            // vanishes on both spheres, so it never touches a constraint
            let bubble = &(&Poly::constant(r * r) - &radius_squared()) * &(&Poly::constant(o * o) - &radius_squared());
            let b: PolyVec = [0, 1, 2].map(|_| Poly::random(&mut rng, 1, false, 0.3));
            (format!("random[{s}]"), phi, scale_vec(&bubble, &b))
        }
    };
    let phi_s = normal_part(&phi_a, r);
    let decay = (&Poly::constant(o * o) - &radius_squared()).scale(1.0 / (o * o - r * r));
    let lifted = scale_vec(&decay, &phi_s);
    let phi_b = [0, 1, 2].map(|i| &lifted[i] + &extra_b[i]);
    let p = AdmissiblePerturbation { id, phi_a, phi_b, phi_s, constraint_set };
    p.verify(geometry)?;
    Ok(p)
}

fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|k| {
            let z = -1.0 + (2.0 * k as f64 + 1.0) / n as f64;
            let phi = k as f64 * PI * (3.0 - 5f64.sqrt());
            let s = (1.0 - z * z).sqrt();
            Vec3::new(s * phi.cos(), s * phi.sin(), z)
        })
        .collect()
}

impl AdmissiblePerturbation {
    pub fn fields(&self) -> (PolyVectorField, PolyVectorField, PolyVectorField) {
        (PolyVectorField::new(self.phi_a.clone()), PolyVectorField::new(self.phi_b.clone()), PolyVectorField::new(self.phi_s.clone()))
    }

    /// Check every constraint line at [`CONSTRAINT_PROBES`] points.
    pub fn verify(&self, geometry: &SphereGeometry) -> Result<(), VariationalError> {
        let (a, b, s) = self.fields();
        let dirs = fibonacci_sphere(CONSTRAINT_PROBES);
        let (r, o) = (geometry.radius, geometry.outer);
        let interior: Vec<Vec3> = dirs.iter().enumerate().map(|(k, n)| n * (r * ((k % 10) as f64 + 0.5) / 10.0)).collect();
        let check = |line: &str, pts: &[Vec3], f: &dyn Fn(&Vec3) -> f64| -> Result<(), VariationalError> {
            let worst = pts.iter().map(f).fold(0.0, f64::max);
            if worst > CONSTRAINT_TOL {
                return Err(VariationalError::Constraint { line: line.to_string(), value: worst });
            }
            Ok(())
        };
        check("div phi_A = 0 in Omega_A", &interior, &|x| a.divergence(x, 0.0).abs())?;
        let tangential = |v: Vec3, n: &Vec3| (v - n * n.dot(&v)).norm();
        check("phi_A.n = phi_S.n on Gamma", &dirs, &|n| (a.value(&(n * r), 0.0) - s.value(&(n * r), 0.0)).dot(n).abs())?;
        check("phi_B.n = phi_S.n on Gamma", &dirs, &|n| (b.value(&(n * r), 0.0) - s.value(&(n * r), 0.0)).dot(n).abs())?;
        match self.constraint_set {
            ConstraintSet::Viscous42 => {
                check("phi_B = 0 on the outer boundary", &dirs, &|n| b.value(&(n * o), 0.0).norm())?;
                check("P phi_A = 0 on Gamma", &dirs, &|n| tangential(a.value(&(n * r), 0.0), n))?;
                check("P phi_B = 0 on Gamma", &dirs, &|n| tangential(b.value(&(n * r), 0.0), n))?;
            }
            ConstraintSet::Inviscid410 => {
                check("phi_B.n_Omega = 0 on the outer boundary", &dirs, &|n| b.value(&(n * o), 0.0).dot(n).abs())?;
            }
        }
        check("P phi_S = 0 on Gamma", &dirs, &|n| tangential(s.value(&(n * r), 0.0), n))
    }

    /// Largest value of `|phi_A|, |phi_B|` over the quadrature points.
    pub fn magnitude(&self, geometry: &SphereGeometry) -> f64 {
        let (a, b, _) = self.fields();
        let ma = geometry.ball().iter().map(|(x, _)| a.value(x, 0.0).norm()).fold(0.0, f64::max);
        let mb = geometry.shell().iter().map(|(x, _)| b.value(x, 0.0).norm()).fold(0.0, f64::max);
        ma.max(mb)
    }
}

/// Richardson-extrapolated centered difference and its observed order in epsilon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateauxDerivative {
    pub value: f64,
    pub eps: Vec<f64>,
    pub raw: Vec<f64>,
    /// Pairwise observed orders; empty when all estimates agree to round-off.
    pub orders: Vec<f64>,
    pub non_quadratic: bool,
}

/// Centered difference quotients of the functional along `perturbation` at each epsilon.
pub fn gateaux_derivative(
    functional: EnergyFunctional,
    state: &VariationalState,
    perturbation: &AdmissiblePerturbation,
    params: &MaterialParams,
    geometry: &SphereGeometry,
    eps_list: &[f64],
    t: f64,
) -> Result<GateauxDerivative, VariationalError> {
    if eps_list.len() < 3 {
        return Err(VariationalError::TooFewEps(eps_list.len()));
    }
    let (pa, pb, ps) = perturbation.fields();
    let energy = |eps: f64| {
        let a = Axpy { base: state.v_a.as_ref(), direction: &pa, eps };
        let b = Axpy { base: state.v_b.as_ref(), direction: &pb, eps };
        let s = Axpy { base: state.v_s.as_ref(), direction: &ps, eps };
        energy_of(functional, &Velocities { a: &a, b: &b, s: &s }, state.pi_b.as_ref(), params, geometry, t)
    };
    let mut raw = Vec::with_capacity(eps_list.len());
    for &e in eps_list {
        raw.push((energy(e)? - energy(-e)?) / (2.0 * e));
    }
    let n = raw.len();
    let scale = raw.iter().fold(1.0f64, |m, d| m.max(d.abs()));
    let diffs: Vec<f64> = raw.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let exact = diffs.iter().all(|d| *d <= 1e-9 * scale);
    let orders: Vec<f64> = if exact {
        Vec::new()
    } else {
        diffs.windows(2).zip(eps_list.windows(3)).map(|(d, e)| (d[0] / d[1]).ln() / (e[0] / e[1]).ln()).collect()
    };
    let non_quadratic = orders.iter().any(|p| *p < MIN_EPS_ORDER);
    let ratio = (eps_list[n - 2] / eps_list[n - 1]).powi(2);
    let value = if exact { raw[n - 1] } else { raw[n - 1] + (raw[n - 1] - raw[n - 2]) / (ratio - 1.0) };
    Ok(GateauxDerivative { value, eps: eps_list.to_vec(), raw, orders, non_quadratic })
}

/// Bulk and interface forces of the model, evaluated on demand.
pub struct ForceTriple<'a> {
    pub model: Model,
    state: &'a VariationalState,
    params: &'a MaterialParams,
}

impl ForceTriple<'_> {
    /// `div T_A` (viscous) or `-grad pi_A` (inviscid).
    pub fn f_a(&self, x: &Vec3, t: f64) -> Vec3 {
        match self.model {
            Model::Viscous => tensors::stress_divergence(Phase::A, self.state.v_a.as_ref(), self.state.pi_a.as_ref(), self.params, x, t),
            Model::Inviscid => -self.state.pi_a.gradient(x, t),
        }
    }

    pub fn f_b(&self, x: &Vec3, t: f64) -> Vec3 {
        match self.model {
            Model::Viscous => tensors::stress_divergence(Phase::B, self.state.v_b.as_ref(), self.state.pi_b.as_ref(), self.params, x, t),
            Model::Inviscid => -self.state.pi_b.gradient(x, t),
        }
    }

    /// `(-pi_0 H - T~_A + T~_B) n` or `(-pi_0 H + pi_A - pi_B) n` at an interface point.
    pub fn f_s(&self, x: &Vec3, n: &Vec3, curvature: f64, t: f64) -> Result<Vec3, VariationalError> {
        let p = self.params;
        let s = self.state;
        let coef = match self.model {
            Model::Viscous => {
                let ta = tensors::stress_interface(Phase::A, s.v_a.as_ref(), s.pi_a.as_ref(), p, n, x, t)?;
                let tb = tensors::stress_interface(Phase::B, s.v_b.as_ref(), s.pi_b.as_ref(), p, n, x, t)?;
                -p.pi_0 * curvature - ta + tb
            }
            Model::Inviscid => -p.pi_0 * curvature + s.pi_a.value(x, t) - s.pi_b.value(x, t),
        };
        Ok(n * coef)
    }
}

pub fn closed_form_forces<'a>(model: Model, state: &'a VariationalState, params: &'a MaterialParams) -> ForceTriple<'a> {
    ForceTriple { model, state, params }
}

/// `int_A F_A.phi_A + int_B F_B.phi_B + int_G F_S.phi_S`.
pub fn force_inner_product(forces: &ForceTriple, perturbation: &AdmissiblePerturbation, geometry: &SphereGeometry, t: f64) -> Result<f64, VariationalError> {
    let (pa, pb, ps) = perturbation.fields();
    let a = SphereGeometry::integrate(geometry.ball(), |x| forces.f_a(x, t).dot(&pa.value(x, t)));
    let b = SphereGeometry::integrate(geometry.shell(), |x| forces.f_b(x, t).dot(&pb.value(x, t)));
    let g = geometry.surface();
    let mut s = 0.0;
    for i in 0..g.len() {
        let x = g.nodes()[i];
        s += g.weights()[i] * forces.f_s(&x, &g.normals()[i], g.curvature(i)?, t)?.dot(&ps.value(&x, t));
    }
    Ok(a + b + s)
}

/// Comparison of the Gateaux derivative with the force inner product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalReport {
    pub model: Model,
    pub functional: EnergyKind,
    pub perturbation_id: String,
    pub derivative: f64,
    pub force_inner_product: f64,
    pub residual: f64,
    pub orders: Vec<f64>,
}

impl VariationalReport {
    /// Residual relative to the force inner product (absolute when that vanishes).
    pub fn relative(&self) -> f64 {
        if self.force_inner_product.abs() > 0.0 {
            self.residual / self.force_inner_product.abs()
        } else {
            self.residual
        }
    }
}

pub fn variational_identity_residual(
    model: Model,
    state: &VariationalState,
    params: &MaterialParams,
    geometry: &SphereGeometry,
    perturbation: &AdmissiblePerturbation,
    t: f64,
) -> Result<VariationalReport, VariationalError> {
    perturbation.verify(geometry)?;
    let functional = EnergyFunctional::total(model);
    let scale = 1.0 / perturbation.magnitude(geometry).max(1e-12);
    let eps: Vec<f64> = DEFAULT_EPS.iter().map(|e| e * scale.min(1e6)).collect();
    let d = gateaux_derivative(functional, state, perturbation, params, geometry, &eps, t)?;
    let forces = closed_form_forces(model, state, params);
    let ip = force_inner_product(&forces, perturbation, geometry, t)?;
    Ok(VariationalReport {
        model,
        functional: functional.kind,
        perturbation_id: perturbation.id.clone(),
        derivative: d.value,
        force_inner_product: ip,
        residual: (d.value - ip).abs(),
        orders: d.orders,
    })
}
