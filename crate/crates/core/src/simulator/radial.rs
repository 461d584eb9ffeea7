//! Stress algebra for velocity fields `u(r) e_r` (spherical) or `u(x) e_1` (planar).
//!
//! For a radial field the velocity gradient has eigenvalues `u'` (radial) and `u / r`
//! (twice, tangential), so `D`, `div v`, `div T` and `div(T v)` reduce to the expressions
//! below with `alpha = 2`; the planar reduction is `alpha = 0`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Planar,
    Spherical,
}

impl Symmetry {
    /// Number of tangential directions that stretch with `r`.
    pub fn alpha(self) -> f64 {
        match self {
            Symmetry::Planar => 0.0,
            Symmetry::Spherical => 2.0,
        }
    }

    /// `alpha * q / r`, zero in the planar case even where `r = 0`.
    fn hoop(self, q: f64, r: f64) -> f64 {
        match self {
            Symmetry::Planar => 0.0,
            Symmetry::Spherical => 2.0 * q / r,
        }
    }
}

/// Values and radial derivatives of `u` and `pi` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSample {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
    pub pi: f64,
    pub dpi: f64,
}

/// Viscosities of the phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viscosity {
    pub mu: f64,
    pub lambda: f64,
}

pub fn divergence(sym: Symmetry, r: f64, u: f64, du: f64) -> f64 {
    du + sym.hoop(u, r)
}

/// `|D(v)|^2 = u'^2 + alpha (u / r)^2`.
pub fn strain_norm_sq(sym: Symmetry, r: f64, u: f64, du: f64) -> f64 {
    du * du + sym.hoop(u * u / r, r)
}

/// Viscous part of `T_rr`.
pub fn tau_rr(sym: Symmetry, visc: Viscosity, r: f64, u: f64, du: f64) -> f64 {
    visc.mu * du + visc.lambda * divergence(sym, r, u, du)
}

/// Viscous part of the tangential diagonal stress.
pub fn tau_hoop(sym: Symmetry, visc: Viscosity, r: f64, u: f64, du: f64) -> f64 {
    visc.mu * u / r + visc.lambda * divergence(sym, r, u, du)
}

/// Radial component of `div T`: `d_r T_rr + alpha (T_rr - T_hoop) / r`.
pub fn div_stress(sym: Symmetry, visc: Viscosity, s: &RadialSample) -> f64 {
    let ddiv = s.d2u + sym.hoop(s.du - s.u / s.r, s.r);
    let dt_rr = visc.mu * s.d2u + visc.lambda * ddiv - s.dpi;
    dt_rr + sym.hoop(visc.mu * (s.du - s.u / s.r), s.r)
}

/// `div(T v) = (div T) u + T_rr u' + alpha T_hoop u / r`.
pub fn div_stress_velocity(sym: Symmetry, visc: Viscosity, s: &RadialSample) -> f64 {
    let t_rr = tau_rr(sym, visc, s.r, s.u, s.du) - s.pi;
    let t_hoop = tau_hoop(sym, visc, s.r, s.u, s.du) - s.pi;
    div_stress(sym, visc, s) * s.u + t_rr * s.du + sym.hoop(t_hoop * s.u, s.r)
}
