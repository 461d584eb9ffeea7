//! Moving-domain and moving-surface quadrature, and discrete checks of the bulk and surface
//! transport theorems and of the mass identity they imply.
//!
//! Time derivatives of integrals are taken by centered differences of the fully
//! re-quadratured integral at `t +- dt`, independently of the identity being tested.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FnVector, Mat3, ScalarField, Vec3, VectorField};
use crate::quadrature::Rule;
use crate::surface::{surface_divergence, ClosedSurface, SurfaceError, VectorInput};
use crate::tensors::{self, FlowFields, MaterialParams, Model, SharedVector, TensorError};

/// Default points per dimension for bulk quadrature.
pub const DEFAULT_BULK_POINTS: usize = 16;
/// Tolerance for boundary-motion consistency and restriction probes.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("velocity does not match boundary motion at t={time}: mismatch {mismatch:e}")]
    InconsistentVelocity { time: f64, mismatch: f64 },
    #[error("half-space cut along axis {axis} has nonzero normal flux {flux:e} on the cut plane")]
    CutFlux { axis: usize, flux: f64 },
    #[error("restriction violated: {condition} (max deviation {value:e})")]
    RestrictionViolated { condition: String, value: f64 },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Polynomial time law `r(t) = sum c_k t^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusLaw {
    pub coeffs: Vec<f64>,
}

impl RadiusLaw {
    pub fn constant(r: f64) -> Self {
        Self { coeffs: vec![r] }
    }

    pub fn linear(r0: f64, rate: f64) -> Self {
        Self { coeffs: vec![r0, rate] }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c)
    }
}

/// Half-space `{ x : sign * (x - center)_axis >= 0 }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub axis: usize,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainGeometry {
    /// One-dimensional slab `[a(t), b(t)]` along `x1`, per unit cross-section.
    Interval { a: RadiusLaw, b: RadiusLaw },
    Ball { radius: RadiusLaw, center: Vec3 },
    /// `R(t) <= |x - center| <= outer`.
    SphericalShell { radius: RadiusLaw, outer: f64, center: Vec3 },
}

/// A domain whose boundary is carried by `velocity`.
#[derive(Clone)]
pub struct MovingDomain {
    pub geometry: DomainGeometry,
    pub velocity: SharedVector,
    pub points: usize,
    pub cut: Option<HalfSpace>,
}

impl std::fmt::Debug for MovingDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MovingDomain").field("geometry", &self.geometry).field("points", &self.points).field("cut", &self.cut).finish()
    }
}

/// `(x - c) R'(t) / R(t)`: uniform radial stretching that carries a sphere of radius `R(t)`.
pub fn radial_stretch(law: RadiusLaw, center: Vec3) -> impl VectorField + Clone + Send + Sync {
    StretchField { law, center, outer: None }
}

/// Radial field equal to the stretch at `R(t)` and vanishing at `outer`:
/// `(x - c) (R'/R) (outer^2 - r^2) / (outer^2 - R^2)`.
pub fn shell_stretch(law: RadiusLaw, outer: f64, center: Vec3) -> impl VectorField + Clone + Send + Sync {
    StretchField { law, center, outer: Some(outer) }
}

#[derive(Debug, Clone)]
struct StretchField {
    law: RadiusLaw,
    center: Vec3,
    outer: Option<f64>,
}

impl StretchField {
    /// Scalar profile `g(r^2)` and its derivative in `s = r^2`.
    fn profile(&self, s: f64, t: f64) -> (f64, f64) {
        let r = self.law.value(t);
        let base = self.law.rate(t) / r;
        match self.outer {
            None => (base, 0.0),
            Some(o) => {
                let den = o * o - r * r;
                (base * (o * o - s) / den, -base / den)
            }
        }
    }
}

impl VectorField for StretchField {
    fn value(&self, x: &Vec3, t: f64) -> Vec3 {
        let y = x - self.center;
        y * self.profile(y.norm_squared(), t).0
    }
    fn jacobian(&self, x: &Vec3, t: f64) -> Mat3 {
        let y = x - self.center;
        let (g, dg) = self.profile(y.norm_squared(), t);
        Mat3::identity() * g + y * y.transpose() * (2.0 * dg)
    }
    fn component_hessians(&self, x: &Vec3, t: f64) -> [Mat3; 3] {
        let y = x - self.center;
        let (_, dg) = self.profile(y.norm_squared(), t);
        // d_j d_k (y_i g) = 2 dg (delta_ij y_k + delta_ik y_j + delta_jk y_i), g is linear in s
        [0, 1, 2].map(|i| {
            Mat3::from_fn(|j, k| {
                let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                2.0 * dg * (d(i, j) * y[k] + d(i, k) * y[j] + d(j, k) * y[i])
            })
        })
    }
}

impl MovingDomain {
    /// Build a domain and check that `velocity.n` matches the boundary speed at 20 sample
    /// times in `[0, 1]`.
    pub fn new(geometry: DomainGeometry, velocity: SharedVector) -> Result<Self, TransportError> {
        let d = Self { geometry, velocity, points: DEFAULT_BULK_POINTS, cut: None };
        d.validate_geometry()?;
        for k in 0..20 {
            let t = k as f64 / 19.0;
            d.check_velocity(d.velocity.as_ref(), t)?;
        }
        Ok(d)
    }

    pub fn growing_ball(radius: RadiusLaw, center: Vec3) -> Result<Self, TransportError> {
        let v = Arc::new(radial_stretch(radius.clone(), center));
        Self::new(DomainGeometry::Ball { radius, center }, v)
    }

    pub fn shrinking_shell(radius: RadiusLaw, outer: f64, center: Vec3) -> Result<Self, TransportError> {
        let v = Arc::new(shell_stretch(radius.clone(), outer, center));
        Self::new(DomainGeometry::SphericalShell { radius, outer, center }, v)
    }

    /// Interval carried by the linear interpolant of the endpoint speeds.
    pub fn moving_interval(a: RadiusLaw, b: RadiusLaw) -> Result<Self, TransportError> {
        let (la, lb) = (a.clone(), b.clone());
        let v = FnVector(move |x: &Vec3, t: f64| {
            let (xa, xb) = (la.value(t), lb.value(t));
            let (va, vb) = (la.rate(t), lb.rate(t));
            Vec3::new(va + (x[0] - xa) * (vb - va) / (xb - xa), 0.0, 0.0)
        });
        Self::new(DomainGeometry::Interval { a, b }, Arc::new(v))
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    /// Restrict to a half-space through the center.
    pub fn with_cut(mut self, cut: HalfSpace) -> Result<Self, TransportError> {
        if matches!(self.geometry, DomainGeometry::Interval { .. }) {
            return Err(TransportError::InvalidDomain("half-space cuts apply to balls and shells".into()));
        }
        if cut.axis > 2 {
            return Err(TransportError::InvalidDomain(format!("cut axis {} out of range", cut.axis)));
        }
        self.cut = Some(cut);
        Ok(self)
    }

    pub fn center(&self) -> Vec3 {
        match &self.geometry {
            DomainGeometry::Interval { .. } => Vec3::zeros(),
            DomainGeometry::Ball { center, .. } | DomainGeometry::SphericalShell { center, .. } => *center,
        }
    }

    /// Rigidly translate the domain and its velocity.
    pub fn translated(&self, shift: Vec3) -> Self {
        let mut d = self.clone();
        match &mut d.geometry {
            DomainGeometry::Interval { .. } => {}
            DomainGeometry::Ball { center, .. } | DomainGeometry::SphericalShell { center, .. } => *center += shift,
        }
        let v = self.velocity.clone();
        d.velocity = Arc::new(Translated { inner: v, shift });
        d
    }

    fn validate_geometry(&self) -> Result<(), TransportError> {
        let bad = |m: String| Err(TransportError::InvalidDomain(m));
        for k in 0..20 {
            let t = k as f64 / 19.0;
            match &self.geometry {
                DomainGeometry::Interval { a, b } => {
                    if a.value(t) >= b.value(t) {
                        return bad(format!("interval collapses at t={t}"));
                    }
                }
                DomainGeometry::Ball { radius, .. } => {
                    if radius.value(t) <= 0.0 {
                        return bad(format!("radius not positive at t={t}"));
                    }
                }
                DomainGeometry::SphericalShell { radius, outer, .. } => {
                    let r = radius.value(t);
                    if r <= 0.0 || r >= *outer {
                        return bad(format!("shell needs 0 < R(t) < outer; R({t}) = {r}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Sample boundary points and compare `v.n` with the boundary speed.
    pub fn check_velocity(&self, v: &dyn VectorField, t: f64) -> Result<(), TransportError> {
        let mut worst: f64 = 0.0;
        match &self.geometry {
            DomainGeometry::Interval { a, b } => {
                worst = worst.max((v.value(&Vec3::new(a.value(t), 0.0, 0.0), t)[0] - a.rate(t)).abs());
                worst = worst.max((v.value(&Vec3::new(b.value(t), 0.0, 0.0), t)[0] - b.rate(t)).abs());
            }
            DomainGeometry::Ball { radius, center } => {
                for n in sphere_directions() {
                    let x = center + n * radius.value(t);
                    worst = worst.max((v.value(&x, t).dot(&n) - radius.rate(t)).abs());
                }
            }
            DomainGeometry::SphericalShell { radius, outer, center } => {
                for n in sphere_directions() {
                    let x = center + n * radius.value(t);
                    worst = worst.max((v.value(&x, t).dot(&n) - radius.rate(t)).abs());
                    let y = center + n * *outer;
                    worst = worst.max(v.value(&y, t).dot(&n).abs());
                }
            }
        }
        if worst > CONSISTENCY_TOL {
            return Err(TransportError::InconsistentVelocity { time: t, mismatch: worst });
        }
        if let Some(cut) = self.cut {
            let c = self.center();
            let (r_in, r_out) = self.radii(t);
            let mut flux: f64 = 0.0;
            for k in 0..8 {
                for j in 0..8 {
                    let r = r_in + (r_out - r_in) * (k as f64 + 0.5) / 8.0;
                    let ang = 2.0 * PI * j as f64 / 8.0;
                    let (u, w) = perpendicular(cut.axis);
                    let x = c + (u * ang.cos() + w * ang.sin()) * r;
                    flux = flux.max(v.value(&x, t)[cut.axis].abs());
                }
            }
            if flux > CONSISTENCY_TOL {
                return Err(TransportError::CutFlux { axis: cut.axis, flux });
            }
        }
        Ok(())
    }

    fn radii(&self, t: f64) -> (f64, f64) {
        match &self.geometry {
            DomainGeometry::Interval { a, b } => (a.value(t), b.value(t)),
            DomainGeometry::Ball { radius, .. } => (0.0, radius.value(t)),
            DomainGeometry::SphericalShell { radius, outer, .. } => (radius.value(t), *outer),
        }
    }

    /// Quadrature points and weights of the domain at time `t`.
    pub fn quadrature(&self, t: f64) -> Vec<(Vec3, f64)> {
        match &self.geometry {
            DomainGeometry::Interval { a, b } => Rule::gauss_legendre_on(self.points, a.value(t), b.value(t))
                .iter()
                .map(|(s, w)| (Vec3::new(s, 0.0, 0.0), w))
                .collect(),
            _ => {
                let (r_in, r_out) = self.radii(t);
                spherical_quadrature(self.center(), r_in, r_out, self.points, self.cut)
            }
        }
    }

    pub fn is_interval(&self) -> bool {
        matches!(self.geometry, DomainGeometry::Interval { .. })
    }

    /// Quadrature of `f` over the domain at `t`.
    pub fn integrate(&self, f: impl Fn(&Vec3) -> f64, t: f64) -> f64 {
        self.quadrature(t).iter().map(|(x, w)| w * f(x)).sum()
    }
}

#[derive(Clone)]
struct Translated {
    inner: SharedVector,
    shift: Vec3,
}

impl VectorField for Translated {
    fn value(&self, x: &Vec3, t: f64) -> Vec3 {
        self.inner.value(&(x - self.shift), t)
    }
    fn jacobian(&self, x: &Vec3, t: f64) -> Mat3 {
        self.inner.jacobian(&(x - self.shift), t)
    }
    fn component_hessians(&self, x: &Vec3, t: f64) -> [Mat3; 3] {
        self.inner.component_hessians(&(x - self.shift), t)
    }
    fn time_derivative(&self, x: &Vec3, t: f64) -> Vec3 {
        self.inner.time_derivative(&(x - self.shift), t)
    }
}

fn perpendicular(axis: usize) -> (Vec3, Vec3) {
    let e = |i: usize| Vec3::from_fn(|k, _| if k == i { 1.0 } else { 0.0 });
    (e((axis + 1) % 3), e((axis + 2) % 3))
}

fn sphere_directions() -> Vec<Vec3> {
    (0..20)
        .map(|k| {
            let z = -1.0 + (2.0 * k as f64 + 1.0) / 20.0;
            let phi = k as f64 * PI * (3.0 - 5f64.sqrt());
            let s = (1.0 - z * z).sqrt();
            Vec3::new(s * phi.cos(), s * phi.sin(), z)
        })
        .collect()
}

/// Gauss-Legendre in `r` and polar angle, trapezoid in azimuth (`2 n` points), about the
/// cut axis when a half-space is given.
pub fn spherical_quadrature(center: Vec3, r_in: f64, r_out: f64, n: usize, cut: Option<HalfSpace>) -> Vec<(Vec3, f64)> {
    let (axis, theta_range) = match cut {
        None => (2, (0.0, PI)),
        Some(HalfSpace { axis, positive: true }) => (axis, (0.0, PI / 2.0)),
        Some(HalfSpace { axis, positive: false }) => (axis, (PI / 2.0, PI)),
    };
    let (u, w) = perpendicular(axis);
    let e = Vec3::from_fn(|k, _| if k == axis { 1.0 } else { 0.0 });
    let radial = Rule::gauss_legendre_on(n, r_in, r_out);
    let polar = Rule::gauss_legendre_on(n, theta_range.0, theta_range.1);
    let azim = Rule::periodic_trapezoid(2 * n, 0.0, 2.0 * PI);
    let mut out = Vec::with_capacity(n * n * 2 * n);
    for (r, wr) in radial.iter() {
        for (th, wt) in polar.iter() {
            let (st, ct) = th.sin_cos();
            for (ph, wp) in azim.iter() {
                let dir = (u * ph.cos() + w * ph.sin()) * st + e * ct;
                out.push((center + dir * r, wr * wt * wp * r * r * st));
            }
        }
    }
    out
}

/// A closed surface moved by a radius (sphere) or scale (ellipsoid) law.
#[derive(Clone)]
pub struct MovingSurface {
    pub shape: SurfaceShape,
    pub law: RadiusLaw,
    pub center: Vec3,
    pub velocity: SharedVector,
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceShape {
    Sphere,
    /// Semi-axes multiplied by the law's value.
    Ellipsoid { a: f64, b: f64, c: f64 },
}

impl MovingSurface {
    /// Sphere of radius `law(t)` carried by the radial stretch.
    pub fn growing_sphere(law: RadiusLaw, center: Vec3) -> Result<Self, TransportError> {
        let v = Arc::new(radial_stretch(law.clone(), center));
        Self::new(SurfaceShape::Sphere, law, center, v)
    }

    pub fn new(shape: SurfaceShape, law: RadiusLaw, center: Vec3, velocity: SharedVector) -> Result<Self, TransportError> {
        let s = Self { shape, law, center, velocity, n_theta: 32, n_phi: 64 };
        for k in 0..20 {
            let t = k as f64 / 19.0;
            let surf = s.surface_at(t)?;
            let speed = s.law.rate(t) / s.law.value(t);
            let mut worst: f64 = 0.0;
            for i in (0..surf.len()).step_by((surf.len() / 50).max(1)) {
                let x = surf.nodes()[i];
                let n = surf.normals()[i];
                let expected = speed * (x - center).dot(&n);
                worst = worst.max((s.velocity.value(&x, t).dot(&n) - expected).abs());
            }
            if worst > CONSISTENCY_TOL {
                return Err(TransportError::InconsistentVelocity { time: t, mismatch: worst });
            }
        }
        Ok(s)
    }

    pub fn with_resolution(mut self, n_theta: usize, n_phi: usize) -> Self {
        self.n_theta = n_theta;
        self.n_phi = n_phi;
        self
    }

    pub fn surface_at(&self, t: f64) -> Result<ClosedSurface, SurfaceError> {
        let s = self.law.value(t);
        let surf = match self.shape {
            SurfaceShape::Sphere => ClosedSurface::sphere(s, self.n_theta, self.n_phi)?,
            SurfaceShape::Ellipsoid { a, b, c } => ClosedSurface::ellipsoid(a * s, b * s, c * s, self.n_theta, self.n_phi)?,
        };
        Ok(surf.with_center(self.center))
    }
}

/// `|d/dt int_Omega f - int_Omega (D_t f + (div v) f)|` with the derivative taken by centered
/// differences of re-quadratured integrals.
pub fn bulk_transport_residual(domain: &MovingDomain, f: &dyn ScalarField, phase_velocity: &dyn VectorField, t: f64, dt: f64) -> Result<f64, TransportError> {
    if dt <= 0.0 {
        return Err(TransportError::InvalidDomain(format!("dt must be positive, got {dt}")));
    }
    domain.check_velocity(phase_velocity, t)?;
    let integral = |s: f64| domain.integrate(|x| f.value(x, s), s);
    let lhs = (integral(t + dt) - integral(t - dt)) / (2.0 * dt);
    let rhs = if domain.is_interval() {
        domain.integrate(
            |x| {
                let v1 = phase_velocity.value(x, t)[0];
                let dv1 = phase_velocity.jacobian(x, t)[(0, 0)];
                f.time_derivative(x, t) + v1 * f.gradient(x, t)[0] + dv1 * f.value(x, t)
            },
            t,
        )
    } else {
        domain.integrate(
            |x| {
                let v = phase_velocity.value(x, t);
                f.time_derivative(x, t) + v.dot(&f.gradient(x, t)) + phase_velocity.divergence(x, t) * f.value(x, t)
            },
            t,
        )
    };
    Ok((lhs - rhs).abs())
}

/// Surface analogue with `D_t^S f + (div_G v_S) f`.
pub fn surface_transport_residual(surface: &MovingSurface, f: &dyn ScalarField, t: f64, dt: f64) -> Result<f64, TransportError> {
    if dt <= 0.0 {
        return Err(TransportError::InvalidDomain(format!("dt must be positive, got {dt}")));
    }
    let integral = |s: f64| -> Result<f64, TransportError> {
        let g = surface.surface_at(s)?;
        Ok(g.nodes().iter().zip(g.weights()).map(|(x, w)| w * f.value(x, s)).sum())
    };
    let lhs = (integral(t + dt)? - integral(t - dt)?) / (2.0 * dt);
    let g = surface.surface_at(t)?;
    let vs = |x: &Vec3| surface.velocity.value(x, t);
    let div = surface_divergence(&g, VectorInput::Ambient(&vs))?;
    let div = div.as_scalar().expect("scalar divergence");
    let rhs: f64 = g
        .nodes()
        .iter()
        .zip(g.weights())
        .zip(div)
        .map(|((x, w), d)| {
            let v = surface.velocity.value(x, t);
            w * (f.time_derivative(x, t) + v.dot(&f.gradient(x, t)) + d * f.value(x, t))
        })
        .sum();
    Ok((lhs - rhs).abs())
}

/// Row of a residual sweep over time steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub dt: f64,
    pub residual: f64,
    pub order_estimate: Option<f64>,
}

/// Run `residual(dt)` over `dts`, estimating the observed order between consecutive steps.
pub fn sweep(t: f64, dts: &[f64], mut residual: impl FnMut(f64) -> Result<f64, TransportError>) -> Result<Vec<SweepRow>, TransportError> {
    let mut rows: Vec<SweepRow> = Vec::with_capacity(dts.len());
    for &dt in dts {
        let r = residual(dt)?;
        let order = rows.last().map(|p| (p.residual / r).ln() / (p.dt / dt).ln());
        rows.push(SweepRow { t, dt, residual: r, order_estimate: order });
    }
    Ok(rows)
}

/// Least-squares slope of `log residual` against `log dt`.
pub fn observed_order(rows: &[SweepRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.dt.ln(), r.residual.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn write_sweep_csv(rows: &[SweepRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Terms of `d/dt (M_A + M_B + rho_0 |G|)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassIdentity {
    /// `int_A (D_t rho_A + rho_A div v_A)`.
    pub dm_a: f64,
    pub dm_b: f64,
    /// `rho_0 int_G div_G v_S`.
    pub d_surface: f64,
    /// Integrals of the exchange sources.
    pub source_a: f64,
    pub source_b: f64,
    /// Exchange flux through the interface from the divergence theorem
    /// (`c int_G (pi_A v_A - pi_B v_B).n` or its viscous analogue).
    pub interface_flux: f64,
    pub residual: f64,
}

fn restriction(condition: &str, worst: f64) -> Result<(), TransportError> {
    if worst > CONSISTENCY_TOL {
        Err(TransportError::RestrictionViolated { condition: condition.to_string(), value: worst })
    } else {
        Ok(())
    }
}

/// Residual of the mass law for a ball `domain_a`, the shell `domain_b` around it, and the
/// interface `surface`, after checking the model's kinematic restrictions at probes.
pub fn mass_identity_check(
    model: Model,
    fields: &FlowFields,
    params: &MaterialParams,
    domain_a: &MovingDomain,
    domain_b: &MovingDomain,
    surface: &MovingSurface,
    t: f64,
) -> Result<MassIdentity, TransportError> {
    let (DomainGeometry::Ball { radius: ra, center: ca }, DomainGeometry::SphericalShell { radius: rb, outer, center: cb }) =
        (&domain_a.geometry, &domain_b.geometry)
    else {
        return Err(TransportError::InvalidDomain("mass identity needs a ball inside a spherical shell".into()));
    };
    let r = ra.value(t);
    if (r - rb.value(t)).abs() > 1e-12 || (ca - cb).norm() > 1e-12 || (surface.center - ca).norm() > 1e-12 {
        return Err(TransportError::InvalidDomain("ball, shell and interface must share radius and center".into()));
    }
    let gamma = surface.surface_at(t)?;
    let (va, vb, vs) = (fields.a.vel.as_ref(), fields.b.vel.as_ref(), surface.velocity.as_ref());

    // restrictions
    let pts_a = domain_a.quadrature(t);
    let stride = (pts_a.len() / 200).max(1);
    restriction("div v_A = 0 in Omega_A", pts_a.iter().step_by(stride).map(|(x, _)| va.divergence(x, t).abs()).fold(0.0, f64::max))?;
    let outer_pts: Vec<(Vec3, Vec3)> = sphere_directions().into_iter().map(|n| (cb + n * *outer, n)).collect();
    match model {
        Model::Inviscid => restriction(
            "v_B.n_Omega = 0 on the outer boundary",
            outer_pts.iter().map(|(x, n)| vb.value(x, t).dot(n).abs()).fold(0.0, f64::max),
        )?,
        Model::Viscous => restriction("v_B = 0 on the outer boundary", outer_pts.iter().map(|(x, _)| vb.value(x, t).norm()).fold(0.0, f64::max))?,
    }
    let gstride = (gamma.len() / 200).max(1);
    let probes: Vec<(Vec3, Vec3)> = (0..gamma.len()).step_by(gstride).map(|i| (gamma.nodes()[i], gamma.normals()[i])).collect();
    let worst = |g: &dyn Fn(&Vec3, &Vec3) -> f64| probes.iter().map(|(x, n)| g(x, n)).fold(0.0, f64::max);
    restriction("v_A.n = v_S.n on Gamma", worst(&|x, n| (va.value(x, t) - vs.value(x, t)).dot(n).abs()))?;
    restriction("v_B.n = v_S.n on Gamma", worst(&|x, n| (vb.value(x, t) - vs.value(x, t)).dot(n).abs()))?;
    if model == Model::Viscous {
        let tangential = |v: Vec3, n: &Vec3| (v - n * n.dot(&v)).norm();
        restriction("P v_A = 0 on Gamma", worst(&|x, n| tangential(va.value(x, t), n)))?;
        restriction("P v_B = 0 on Gamma", worst(&|x, n| tangential(vb.value(x, t), n)))?;
    }

    let mass_rate = |ph: &tensors::PhaseFields, x: &Vec3| {
        let v = ph.vel.value(x, t);
        ph.rho.time_derivative(x, t) + v.dot(&ph.rho.gradient(x, t)) + ph.rho.value(x, t) * ph.vel.divergence(x, t)
    };
    let dm_a = domain_a.integrate(|x| mass_rate(&fields.a, x), t);
    let dm_b = domain_b.integrate(|x| mass_rate(&fields.b, x), t);
    let source_a = domain_a.integrate(|x| tensors::source(model, tensors::Phase::A, fields, params, x, t), t);
    let source_b = domain_b.integrate(|x| tensors::source(model, tensors::Phase::B, fields, params, x, t), t);

    let vs_fn = |x: &Vec3| vs.value(x, t);
    let div_s = surface_divergence(&gamma, VectorInput::Ambient(&vs_fn))?;
    let div_s = div_s.as_scalar().expect("scalar");
    let mut d_surface = 0.0;
    let mut interface_flux = 0.0;
    for i in 0..gamma.len() {
        let (x, n, w) = (gamma.nodes()[i], gamma.normals()[i], gamma.weights()[i]);
        d_surface += w * params.rho_0 * div_s[i];
        let flux = match model {
            Model::Inviscid => fields.a.pressure.value(&x, t) * va.value(&x, t).dot(&n) - fields.b.pressure.value(&x, t) * vb.value(&x, t).dot(&n),
            Model::Viscous => {
                let ta = tensors::stress_interface(tensors::Phase::A, va, fields.a.pressure.as_ref(), params, &n, &x, t)?;
                let tb = tensors::stress_interface(tensors::Phase::B, vb, fields.b.pressure.as_ref(), params, &n, &x, t)?;
                -(ta * va.value(&x, t).dot(&n) - tb * vb.value(&x, t).dot(&n))
            }
        };
        interface_flux += w * params.exchange() * flux;
    }
    Ok(MassIdentity { dm_a, dm_b, d_surface, source_a, source_b, interface_flux, residual: (dm_a + dm_b + d_surface).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Constant, ConstantVector};

    #[test]
    fn radius_law_rate() {
        let l = RadiusLaw { coeffs: vec![1.0, 2.0, 3.0] };
        assert_eq!(l.value(2.0), 17.0);
        assert_eq!(l.rate(2.0), 14.0);
    }

    #[test]
    fn ball_volume_and_shell_volume() {
        let b = MovingDomain::growing_ball(RadiusLaw::constant(1.5), Vec3::new(1.0, 2.0, 3.0)).unwrap();
        assert!((b.integrate(|_| 1.0, 0.0) - 4.0 / 3.0 * PI * 1.5f64.powi(3)).abs() < 1e-12);
        let s = MovingDomain::shrinking_shell(RadiusLaw::constant(1.0), 2.0, Vec3::zeros()).unwrap();
        assert!((s.integrate(|_| 1.0, 0.0) - 28.0 * PI / 3.0).abs() < 1e-12);
        let h = b.clone().with_cut(HalfSpace { axis: 0, positive: true }).unwrap();
        assert!((h.integrate(|_| 1.0, 0.0) - 2.0 / 3.0 * PI * 1.5f64.powi(3)).abs() < 1e-12);
        assert!((h.integrate(|x| x[0] - 1.0, 0.0) - PI * 1.5f64.powi(4) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn static_domain_constant_integrand() {
        let d = MovingDomain::new(
            DomainGeometry::Ball { radius: RadiusLaw::constant(1.0), center: Vec3::zeros() },
            Arc::new(ConstantVector::zero()),
        )
        .unwrap();
        let r = bulk_transport_residual(&d, &Constant(1.0), &ConstantVector::zero(), 0.5, 1e-3).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn inconsistent_velocity_is_rejected() {
        let err = MovingDomain::new(
            DomainGeometry::Ball { radius: RadiusLaw::linear(1.0, 0.5), center: Vec3::zeros() },
            Arc::new(ConstantVector::zero()),
        )
        .unwrap_err();
        assert!(matches!(err, TransportError::InconsistentVelocity { .. }));
    }

    #[test]
    fn cut_with_flux_is_rejected() {
        let d = MovingDomain::new(
            DomainGeometry::Ball { radius: RadiusLaw::constant(1.0), center: Vec3::zeros() },
            Arc::new(FnVector(|x: &Vec3, _t: f64| Vec3::new(-x[1], x[0], 0.0))),
        )
        .unwrap()
        .with_cut(HalfSpace { axis: 0, positive: true })
        .unwrap();
        let rot = FnVector(|x: &Vec3, _t: f64| Vec3::new(-x[1], x[0], 0.0));
        assert!(matches!(bulk_transport_residual(&d, &Constant(1.0), &rot, 0.0, 1e-3), Err(TransportError::CutFlux { .. })));
    }

    #[test]
    fn stretch_derivatives_match_differences() {
        let f = shell_stretch(RadiusLaw { coeffs: vec![1.0, 0.3, 0.1] }, 2.5, Vec3::new(0.1, 0.2, -0.3));
        let fd = FnVector(|x: &Vec3, t: f64| f.value(x, t));
        let x = Vec3::new(0.5, 1.1, 0.2);
        assert!((f.jacobian(&x, 0.4) - fd.jacobian(&x, 0.4)).norm() < 1e-9);
        for (a, b) in f.component_hessians(&x, 0.4).iter().zip(fd.component_hessians(&x, 0.4).iter()) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn growing_ball_volume_rate() {
        let law = RadiusLaw::linear(1.0, 0.5);
        let d = MovingDomain::growing_ball(law.clone(), Vec3::zeros()).unwrap();
        // third derivative of the volume is 8 pi R'^3 = pi, so the centered difference is off by pi dt^2 / 6
        let r = bulk_transport_residual(&d, &Constant(1.0), d.velocity.as_ref(), 0.3, 1e-3).unwrap();
        assert!((r - 1e-6 * PI / 6.0).abs() < 1e-10, "{r}");
    }

    #[test]
    fn growing_sphere_area_rate() {
        let s = MovingSurface::growing_sphere(RadiusLaw::linear(1.0, 0.5), Vec3::zeros()).unwrap();
        let r = surface_transport_residual(&s, &Constant(1.0), 0.3, 1e-3).unwrap();
        assert!(r < 1e-8, "{r}");
        let still = MovingSurface::growing_sphere(RadiusLaw::constant(1.0), Vec3::zeros()).unwrap();
        assert!(surface_transport_residual(&still, &Constant(1.0), 0.3, 1e-3).unwrap() < 1e-12);
    }

    #[test]
    fn interval_transport() {
        let d = MovingDomain::moving_interval(RadiusLaw::linear(-1.0, 0.2), RadiusLaw { coeffs: vec![1.0, 0.0, 0.5] }).unwrap();
        let f = crate::field::FnScalar(|x: &Vec3, t: f64| x[0] * x[0] + t * x[0]);
        let rows = sweep(0.4, &[1e-2, 5e-3, 2.5e-3], |dt| bulk_transport_residual(&d, &f, d.velocity.as_ref(), 0.4, dt)).unwrap();
        assert!((observed_order(&rows) - 2.0).abs() < 0.05, "{rows:?}");
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,dt,residual,order_estimate\n0.4,0.01,"));
    }

    mod mass {
        use super::*;
        use crate::tensors::catalog::{constant_state, random_solenoidal, sphere_state};

        fn params(rho_0: f64) -> MaterialParams {
            MaterialParams { mu_a: 0.3, mu_b: 0.5, lambda_b: 0.2, rho_0, pi_0: 1.5, ..Default::default() }
        }

        fn geometry(center: Vec3) -> (MovingDomain, MovingDomain, MovingSurface) {
            let law = RadiusLaw::constant(1.0);
            (
                MovingDomain::growing_ball(law.clone(), center).unwrap(),
                MovingDomain::shrinking_shell(law.clone(), 2.0, center).unwrap(),
                MovingSurface::new(SurfaceShape::Sphere, law, center, Arc::new(ConstantVector::zero())).unwrap(),
            )
        }

        /// Interface carried by the normal part of `v_A`.
        fn with_normal_velocity(s: &MovingSurface, va: SharedVector) -> MovingSurface {
            let c = s.center;
            let mut s = s.clone();
            s.velocity = Arc::new(FnVector(move |x: &Vec3, t: f64| {
                let n = (x - c).normalize();
                n * n.dot(&va.value(x, t))
            }));
            s
        }

        #[test]
        fn zero_velocities_give_zero() {
            let (a, b, g) = geometry(Vec3::zeros());
            let f = constant_state(1.0, 2.0, 3.0, 1.0);
            for model in [Model::Inviscid, Model::Viscous] {
                let m = mass_identity_check(model, &f, &params(0.5), &a, &b, &g, 0.0).unwrap();
                assert!(m.residual < 1e-14);
            }
        }

        #[test]
        fn manufactured_states_balance() {
            let (a, b, g) = geometry(Vec3::zeros());
            for rho_0 in [0.0, 0.7] {
                for model in [Model::Inviscid, Model::Viscous] {
                    let p = params(rho_0);
                    let f = sphere_state(9, model, &p, 1.0, 2.0, 0.3).to_fields();
                    let g = with_normal_velocity(&g, f.a.vel.clone());
                    let m = mass_identity_check(model, &f, &p, &a, &b, &g, 0.3).unwrap();
                    let tol = if rho_0 == 0.0 { 1e-8 } else { 1e-6 };
                    assert!(m.residual < tol, "{model} {rho_0} {m:?}");
                    // the exchange terms telescope onto the interface
                    assert!((m.source_a + m.source_b - m.interface_flux).abs() < 1e-9, "{m:?}");
                    // on a sphere the area rate vanishes with the flux of v_A, so the phases exchange mass
                    if rho_0 > 0.0 {
                        assert!(m.dm_a.abs() > 1e-3 && (m.dm_a + m.dm_b).abs() < 1e-6, "{m:?}");
                    }
                }
            }
        }

        #[test]
        fn translation_invariance() {
            let shift = Vec3::new(0.7, -1.3, 2.1);
            let p = params(0.7);
            for model in [Model::Inviscid, Model::Viscous] {
                let state = sphere_state(4, model, &p, 1.0, 2.0, 0.1);
                let (a, b, g) = geometry(Vec3::zeros());
                let f = state.to_fields();
                let g = with_normal_velocity(&g, f.a.vel.clone());
                let base = mass_identity_check(model, &f, &p, &a, &b, &g, 0.1).unwrap();
                let (a2, b2, g2) = geometry(shift);
                let f2 = state.translated(&shift).to_fields();
                let g2 = with_normal_velocity(&g2, f2.a.vel.clone());
                let moved = mass_identity_check(model, &f2, &p, &a2, &b2, &g2, 0.1).unwrap();
                assert!((base.dm_a - moved.dm_a).abs() < 1e-9);
                assert!((base.dm_b - moved.dm_b).abs() < 1e-9);
                assert!((base.d_surface - moved.d_surface).abs() < 1e-9);
                assert!((base.residual - moved.residual).abs() < 1e-9);
            }
        }

        #[test]
        fn violated_restriction_is_named() {
            let (a, b, g) = geometry(Vec3::zeros());
            let p = params(0.5);
            let f = random_solenoidal(1, Model::Inviscid, &p, 0.0).to_fields();
            let err = mass_identity_check(Model::Inviscid, &f, &p, &a, &b, &g, 0.0).unwrap_err();
            let TransportError::RestrictionViolated { condition, .. } = err else { panic!("{err}") };
            assert_eq!(condition, "v_B.n_Omega = 0 on the outer boundary");

            // inviscid restrictions hold, viscous no-slip does not
            let state = sphere_state(2, Model::Inviscid, &p, 1.0, 2.0, 0.0);
            let mut state_slip = state.clone();
            state_slip.a.vel = [0, 1, 2].map(|i| crate::poly::Poly::constant([0.3, -0.2, 0.1][i]));
            let f = state_slip.to_fields();
            let err = mass_identity_check(Model::Viscous, &f, &p, &a, &b, &g, 0.0).unwrap_err();
            assert!(err.to_string().contains("v_A.n = v_S.n on Gamma"), "{err}");
        }
    }
}
