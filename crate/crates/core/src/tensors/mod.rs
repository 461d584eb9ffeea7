//! Pointwise field algebra: strain, stresses, phase-transition sources and the residuals of
//! both models.
//!
//! All functions evaluate at a single space-time point through the [`ScalarField`] /
//! [`VectorField`] traits, so they work with closed-form fields, polynomials, or callbacks
//! differentiated by finite differences.

pub mod catalog;
pub mod symbolic;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Mat3, ScalarField, Vec3, VectorField};
use crate::surface::{ClosedSurface, SurfaceError};

/// Tolerance on `|n| = 1` for interface stresses.
pub const UNIT_NORMAL_TOL: f64 = 1e-8;
/// Interfaces with `|H| <= FLAT_CURVATURE` use the kinematic condition instead of the
/// normal-velocity formula.
pub const FLAT_CURVATURE: f64 = 1e-10;
/// Tolerance on `div v_A = 0` for the conservative form.
pub const SOLENOIDAL_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("normal vector has length {0}, expected 1")]
    NonUnitNormal(f64),
    #[error("div v_A = {0:e} at probe; the conservative form needs a solenoidal phase-A velocity")]
    NotSolenoidal(f64),
    #[error("flat interface (H = {0:e}); use the kinematic condition v_S.n = v_A.n")]
    FlatInterface(f64),
    #[error("invalid material parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Inviscid,
    Viscous,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Inviscid => "inviscid",
            Model::Viscous => "viscous",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Equation {
    #[serde(rename = "massA")]
    MassA,
    #[serde(rename = "massB")]
    MassB,
    #[serde(rename = "momA")]
    MomA,
    #[serde(rename = "momB")]
    MomB,
}

impl Equation {
    pub const ALL: [Equation; 4] = [Equation::MassA, Equation::MassB, Equation::MomA, Equation::MomB];

    pub fn phase(self) -> Phase {
        match self {
            Equation::MassA | Equation::MomA => Phase::A,
            Equation::MassB | Equation::MomB => Phase::B,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Equation::MassA => "massA",
            Equation::MassB => "massB",
            Equation::MomA => "momA",
            Equation::MomB => "momB",
        }
    }
}

fn default_k() -> f64 {
    1.0
}

fn default_gamma() -> f64 {
    1.4
}

/// Viscosities, interface constants and the barotropic closure `pi_B = K rho_B^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    #[serde(rename = "mu_A")]
    pub mu_a: f64,
    #[serde(rename = "mu_B")]
    pub mu_b: f64,
    #[serde(rename = "lambda_B")]
    pub lambda_b: f64,
    pub rho_0: f64,
    pub pi_0: f64,
    #[serde(rename = "K", default = "default_k")]
    pub k: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { mu_a: 0.0, mu_b: 0.0, lambda_b: 0.0, rho_0: 0.0, pi_0: 1.0, k: default_k(), gamma: default_gamma() }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), TensorError> {
        let bad = |m: String| Err(TensorError::InvalidParams(m));
        let all = [self.mu_a, self.mu_b, self.lambda_b, self.rho_0, self.pi_0, self.k, self.gamma];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if self.pi_0 == 0.0 {
            return bad("pi_0 must be nonzero".into());
        }
        if self.mu_a < 0.0 || self.mu_b < 0.0 || self.lambda_b < 0.0 {
            return bad(format!("viscosities must be >= 0 (mu_A={}, mu_B={}, lambda_B={})", self.mu_a, self.mu_b, self.lambda_b));
        }
        if self.rho_0 < 0.0 {
            return bad(format!("rho_0 must be >= 0, got {}", self.rho_0));
        }
        if self.k <= 0.0 {
            return bad(format!("K must be > 0, got {}", self.k));
        }
        if self.gamma < 1.0 {
            return bad(format!("gamma must be >= 1, got {}", self.gamma));
        }
        Ok(())
    }

    /// Mass-exchange coefficient `rho_0 / pi_0`.
    pub fn exchange(&self) -> f64 {
        self.rho_0 / self.pi_0
    }

    /// Barotropic pressure `K rho^gamma`.
    pub fn eos_pressure(&self, rho: f64) -> f64 {
        self.k * rho.powf(self.gamma)
    }

    /// `d pi / d rho` of the closure.
    pub fn eos_slope(&self, rho: f64) -> f64 {
        self.k * self.gamma * rho.powf(self.gamma - 1.0)
    }

    pub fn viscosities(&self, phase: Phase) -> (f64, f64) {
        match phase {
            Phase::A => (self.mu_a, 0.0),
            Phase::B => (self.mu_b, self.lambda_b),
        }
    }

    pub fn with_viscosity(mut self, mu_a: f64, mu_b: f64, lambda_b: f64) -> Self {
        self.mu_a = mu_a;
        self.mu_b = mu_b;
        self.lambda_b = lambda_b;
        self
    }
}

pub type SharedScalar = Arc<dyn ScalarField + Send + Sync>;
pub type SharedVector = Arc<dyn VectorField + Send + Sync>;

/// Density, velocity and pressure of one phase.
#[derive(Clone)]
pub struct PhaseFields {
    pub rho: SharedScalar,
    pub vel: SharedVector,
    pub pressure: SharedScalar,
}

impl PhaseFields {
    pub fn new(
        rho: impl ScalarField + Send + Sync + 'static,
        vel: impl VectorField + Send + Sync + 'static,
        pressure: impl ScalarField + Send + Sync + 'static,
    ) -> Self {
        Self { rho: Arc::new(rho), vel: Arc::new(vel), pressure: Arc::new(pressure) }
    }
}

/// Fields of both phases.
#[derive(Clone)]
pub struct FlowFields {
    pub a: PhaseFields,
    pub b: PhaseFields,
}

impl fmt::Debug for FlowFields {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FlowFields { .. }")
    }
}

impl FlowFields {
    pub fn phase(&self, phase: Phase) -> &PhaseFields {
        match phase {
            Phase::A => &self.a,
            Phase::B => &self.b,
        }
    }
}

/// Vector equations return a vector residual, scalar equations a scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Residual {
    Scalar(f64),
    Vector(Vec3),
}

impl Residual {
    pub fn norm(&self) -> f64 {
        match self {
            Residual::Scalar(s) => s.abs(),
            Residual::Vector(v) => v.norm(),
        }
    }

    pub fn sub(&self, other: &Residual) -> Residual {
        match (self, other) {
            (Residual::Scalar(a), Residual::Scalar(b)) => Residual::Scalar(a - b),
            (Residual::Vector(a), Residual::Vector(b)) => Residual::Vector(a - b),
            _ => panic!("cannot subtract scalar and vector residuals"),
        }
    }
}

/// `D(v) = (grad v + grad v^T) / 2`.
pub fn rate_of_strain(v: &dyn VectorField, x: &Vec3, t: f64) -> Mat3 {
    let j = v.jacobian(x, t);
    (j + j.transpose()) * 0.5
}

fn stress_from_parts(jac: &Mat3, pi: f64, mu: f64, lambda: f64) -> Mat3 {
    let d = (jac + jac.transpose()) * 0.5;
    d * mu + Mat3::identity() * (lambda * jac.trace() - pi)
}

/// `T_A = mu_A D - pi I` or `T_B = mu_B D + lambda_B (div v) I - pi I`.
pub fn stress_bulk(phase: Phase, v: &dyn VectorField, pi: &dyn ScalarField, params: &MaterialParams, x: &Vec3, t: f64) -> Mat3 {
    let (mu, lambda) = params.viscosities(phase);
    stress_from_parts(&v.jacobian(x, t), pi.value(x, t), mu, lambda)
}

/// Normal interface stress `mu n.(n.grad)v (+ lambda div v) - pi`.
pub fn stress_interface(
    phase: Phase,
    v: &dyn VectorField,
    pi: &dyn ScalarField,
    params: &MaterialParams,
    n: &Vec3,
    x: &Vec3,
    t: f64,
) -> Result<f64, TensorError> {
    let len = n.norm();
    if (len - 1.0).abs() > UNIT_NORMAL_TOL {
        return Err(TensorError::NonUnitNormal(len));
    }
    let (mu, lambda) = params.viscosities(phase);
    let j = v.jacobian(x, t);
    Ok(mu * n.dot(&(j * n)) + lambda * j.trace() - pi.value(x, t))
}

/// `div T` from second derivatives: `mu/2 (lap v + grad div v) + lambda grad div v - grad pi`.
pub fn stress_divergence(phase: Phase, v: &dyn VectorField, pi: &dyn ScalarField, params: &MaterialParams, x: &Vec3, t: f64) -> Vec3 {
    let (mu, lambda) = params.viscosities(phase);
    let h = v.component_hessians(x, t);
    let lap = Vec3::new(h[0].trace(), h[1].trace(), h[2].trace());
    let grad_div = Vec3::from_fn(|i, _| (0..3).map(|k| h[k][(i, k)]).sum());
    (lap + grad_div) * (0.5 * mu) + grad_div * lambda - pi.gradient(x, t)
}

/// `div(T v) = (div T).v + T : grad v`.
pub fn stress_power_divergence(phase: Phase, v: &dyn VectorField, pi: &dyn ScalarField, params: &MaterialParams, x: &Vec3, t: f64) -> f64 {
    let (mu, lambda) = params.viscosities(phase);
    let j = v.jacobian(x, t);
    let stress = stress_from_parts(&j, pi.value(x, t), mu, lambda);
    stress_divergence(phase, v, pi, params, x, t).dot(&v.value(x, t)) + stress.component_mul(&j).sum()
}

/// Viscous exchange source `Phi = -(rho_0/pi_0) div(T v)`.
pub fn source_viscous(phase: Phase, fields: &FlowFields, params: &MaterialParams, x: &Vec3, t: f64) -> f64 {
    if params.rho_0 == 0.0 {
        return 0.0;
    }
    let f = fields.phase(phase);
    -params.exchange() * stress_power_divergence(phase, f.vel.as_ref(), f.pressure.as_ref(), params, x, t)
}

/// Inviscid exchange source `Psi = (rho_0/pi_0) div(pi v)`.
pub fn source_inviscid(phase: Phase, fields: &FlowFields, params: &MaterialParams, x: &Vec3, t: f64) -> f64 {
    if params.rho_0 == 0.0 {
        return 0.0;
    }
    let f = fields.phase(phase);
    let v = f.vel.value(x, t);
    params.exchange() * (f.pressure.gradient(x, t).dot(&v) + f.pressure.value(x, t) * f.vel.divergence(x, t))
}

/// Exchange source of the given model.
pub fn source(model: Model, phase: Phase, fields: &FlowFields, params: &MaterialParams, x: &Vec3, t: f64) -> f64 {
    match model {
        Model::Inviscid => source_inviscid(phase, fields, params, x, t),
        Model::Viscous => source_viscous(phase, fields, params, x, t),
    }
}

/// Left-minus-right residual of one bulk equation of either model.
pub fn residual_system(model: Model, equation: Equation, fields: &FlowFields, params: &MaterialParams, x: &Vec3, t: f64) -> Residual {
    residual_system_signed(model, equation, fields, params, x, t, 1.0)
}

/// As [`residual_system`] with the exchange source multiplied by `source_sign`.
pub fn residual_system_signed(
    model: Model,
    equation: Equation,
    fields: &FlowFields,
    params: &MaterialParams,
    x: &Vec3,
    t: f64,
    source_sign: f64,
) -> Residual {
    let phase = equation.phase();
    let f = fields.phase(phase);
    let src = source_sign * source(model, phase, fields, params, x, t);
    let rho = f.rho.value(x, t);
    let v = f.vel.value(x, t);
    match equation {
        Equation::MassA | Equation::MassB => {
            let mut lhs = f.rho.time_derivative(x, t) + v.dot(&f.rho.gradient(x, t));
            if equation == Equation::MassB {
                lhs += f.vel.divergence(x, t) * rho;
            }
            Residual::Scalar(lhs - src)
        }
        Equation::MomA | Equation::MomB => {
            let accel = f.vel.time_derivative(x, t) + f.vel.jacobian(x, t) * v;
            let force = match model {
                Model::Inviscid => -f.pressure.gradient(x, t),
                Model::Viscous => stress_divergence(phase, f.vel.as_ref(), f.pressure.as_ref(), params, x, t),
            };
            Residual::Vector(accel * rho - force + v * src)
        }
    }
}

/// Normal component of the interface balance at a surface node.
///
/// Inviscid: `pi_0 H - pi_A + pi_B`; viscous: `pi_0 H + T~_A - T~_B`.
pub fn residual_interface(
    model: Model,
    fields: &FlowFields,
    params: &MaterialParams,
    surface: &ClosedSurface,
    node: usize,
    t: f64,
) -> Result<f64, TensorError> {
    let x = surface.node(node)?;
    let n = surface.normal(node)?;
    let h = surface.curvature(node)?;
    let tension = params.pi_0 * h;
    Ok(match model {
        Model::Inviscid => tension - fields.a.pressure.value(&x, t) + fields.b.pressure.value(&x, t),
        Model::Viscous => {
            let ta = stress_interface(Phase::A, fields.a.vel.as_ref(), fields.a.pressure.as_ref(), params, &n, &x, t)?;
            let tb = stress_interface(Phase::B, fields.b.vel.as_ref(), fields.b.pressure.as_ref(), params, &n, &x, t)?;
            tension + ta - tb
        }
    })
}

/// Residual of one line of the conservative form of the viscous system.
///
/// Lines 1-2: `d_t rho + div(rho v + (rho_0/pi_0) T v)`; lines 3-4:
/// `d_t(rho v) + div(rho v (x) v - T)`, each expanded by the product rule.
pub fn residual_conservative_form(line: Equation, fields: &FlowFields, params: &MaterialParams, x: &Vec3, t: f64) -> Result<Residual, TensorError> {
    let div_a = fields.a.vel.divergence(x, t);
    if div_a.abs() > SOLENOIDAL_TOL {
        return Err(TensorError::NotSolenoidal(div_a));
    }
    let phase = line.phase();
    let f = fields.phase(phase);
    let rho = f.rho.value(x, t);
    let grad_rho = f.rho.gradient(x, t);
    let v = f.vel.value(x, t);
    let j = f.vel.jacobian(x, t);
    let div_v = j.trace();
    Ok(match line {
        Equation::MassA | Equation::MassB => {
            let div_flux = grad_rho.dot(&v) + rho * div_v
                + params.exchange() * stress_power_divergence(phase, f.vel.as_ref(), f.pressure.as_ref(), params, x, t);
            Residual::Scalar(f.rho.time_derivative(x, t) + div_flux)
        }
        Equation::MomA | Equation::MomB => {
            let d_t = v * f.rho.time_derivative(x, t) + f.vel.time_derivative(x, t) * rho;
            // div_j(rho v_i v_j) = v_i (grad rho . v) + rho (J v)_i + rho v_i div v
            let convective = v * grad_rho.dot(&v) + j * v * rho + v * (rho * div_v);
            let div_t = stress_divergence(phase, f.vel.as_ref(), f.pressure.as_ref(), params, x, t);
            Residual::Vector(d_t + convective - div_t)
        }
    })
}

/// Normal interface velocity from the tension balance, valid where `H != 0` and the
/// interface velocity is purely normal.
pub fn interface_velocity(
    model: Model,
    fields: &FlowFields,
    params: &MaterialParams,
    surface: &ClosedSurface,
    node: usize,
    t: f64,
) -> Result<Vec3, TensorError> {
    let x = surface.node(node)?;
    let n = surface.normal(node)?;
    let h = surface.curvature(node)?;
    interface_velocity_at(model, fields, params, &x, &n, h, t)
}

/// [`interface_velocity`] at an explicit point, normal and curvature.
pub fn interface_velocity_at(
    model: Model,
    fields: &FlowFields,
    params: &MaterialParams,
    x: &Vec3,
    n: &Vec3,
    h: f64,
    t: f64,
) -> Result<Vec3, TensorError> {
    if h.abs() <= FLAT_CURVATURE {
        return Err(TensorError::FlatInterface(h));
    }
    let va_n = fields.a.vel.value(x, t).dot(n);
    let vb_n = fields.b.vel.value(x, t).dot(n);
    let numerator = match model {
        Model::Inviscid => fields.a.pressure.value(x, t) * va_n - fields.b.pressure.value(x, t) * vb_n,
        Model::Viscous => {
            let ta = stress_interface(Phase::A, fields.a.vel.as_ref(), fields.a.pressure.as_ref(), params, n, x, t)?;
            let tb = stress_interface(Phase::B, fields.b.vel.as_ref(), fields.b.pressure.as_ref(), params, n, x, t)?;
            -ta * va_n + tb * vb_n
        }
    };
    Ok(n * (numerator / (params.pi_0 * h)))
}

/// Pointwise surface mass balance behind the conservation law: the bulk exchange flux into
/// the interface must equal the tension work rate, i.e.
/// `pi_0 (div_G v_S) + (pi_A v_A - pi_B v_B).n = 0` (inviscid) or
/// `pi_0 (div_G v_S) - (T~_A v_A - T~_B v_B).n = 0` (viscous) for normal `v_S`.
///
/// With `v_S = s n`, `div_G v_S = -s H`, so the balance is satisfied by the velocity
/// returned from [`interface_velocity`].
pub fn interface_mass_balance(model: Model, fields: &FlowFields, params: &MaterialParams, x: &Vec3, n: &Vec3, h: f64, v_s: &Vec3, t: f64) -> Result<f64, TensorError> {
    let div_s = -v_s.dot(n) * h;
    let va_n = fields.a.vel.value(x, t).dot(n);
    let vb_n = fields.b.vel.value(x, t).dot(n);
    Ok(match model {
        Model::Inviscid => params.pi_0 * div_s + fields.a.pressure.value(x, t) * va_n - fields.b.pressure.value(x, t) * vb_n,
        Model::Viscous => {
            let ta = stress_interface(Phase::A, fields.a.vel.as_ref(), fields.a.pressure.as_ref(), params, n, x, t)?;
            let tb = stress_interface(Phase::B, fields.b.vel.as_ref(), fields.b.pressure.as_ref(), params, n, x, t)?;
            params.pi_0 * div_s - ta * va_n + tb * vb_n
        }
    })
}
