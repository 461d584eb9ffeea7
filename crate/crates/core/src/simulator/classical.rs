//! Classical two-phase solver without interface mass or exchange terms.
//!
//! Written separately from the main operator so that the `rho_0 = 0` reduction can be
//! compared against code that never evaluates an exchange flux. It discretizes the barotropic
//! Euler / Navier-Stokes equations for phase B with the same reconstruction, Rusanov flux,
//! wall treatment and SSP-RK2 integrator; phase A is a rigid slab (planar) or at rest
//! (spherical) with constant mass.

use super::{Geometry, Limiter, SimState};
use crate::tensors::{MaterialParams, Model};

pub struct ClassicalSolver {
    spherical: bool,
    n: usize,
    dx: f64,
    /// Left face of phase B relative to the slab position (planar) or absolute (spherical).
    offset: f64,
    mu: f64,
    lambda: f64,
    k: f64,
    gamma: f64,
    limiter: Limiter,
}

struct Stage {
    drho: Vec<f64>,
    dmom: Vec<f64>,
    dpa: f64,
}

impl ClassicalSolver {
    pub fn new(model: Model, geometry: &Geometry, params: &MaterialParams, cells: usize, limiter: Limiter) -> Self {
        let (mu, lambda) = match model {
            Model::Inviscid => (0.0, 0.0),
            Model::Viscous => (params.mu_b, params.lambda_b),
        };
        let (spherical, dx, offset) = match *geometry {
            Geometry::Planar { length, width, .. } => (false, (length - width) / cells as f64, width),
            Geometry::Spherical { radius, outer } => (true, (outer - radius) / cells as f64, radius),
        };
        Self { spherical, n: cells, dx, offset, mu, lambda, k: params.k, gamma: params.gamma, limiter }
    }

    fn r_face(&self, f: usize) -> f64 {
        self.offset + self.dx * f as f64
    }

    fn r_cell(&self, i: usize) -> f64 {
        self.offset + self.dx * (i as f64 + 0.5)
    }

    fn weights(&self, i: usize) -> (f64, f64, f64) {
        if self.spherical {
            let (a, b) = (self.r_face(i), self.r_face(i + 1));
            (a * a, b * b, (b * b * b - a * a * a) / 3.0)
        } else {
            (1.0, 1.0, self.dx)
        }
    }

    fn limited(&self, left: f64, mid: f64, right: f64) -> f64 {
        let (a, b) = (mid - left, right - mid);
        match self.limiter {
            Limiter::None => 0.5 * (right - left),
            Limiter::Minmod if a > 0.0 && b > 0.0 => a.min(b),
            Limiter::Minmod if a < 0.0 && b < 0.0 => a.max(b),
            Limiter::Minmod => 0.0,
        }
    }

    fn stage(&self, rho: &[f64], mom: &[f64], v_wall: f64) -> Stage {
        let n = self.n;
        let vel: Vec<f64> = (0..n).map(|i| mom[i] / rho[i]).collect();
        let pad = |i: isize| -> (f64, f64) {
            let (j, mirrored) = if i < 0 {
                ((-1 - i) as usize, true)
            } else if i as usize >= n {
                (2 * n - 1 - i as usize, true)
            } else {
                (i as usize, false)
            };
            if mirrored {
                (rho[j], 2.0 * v_wall - vel[j])
            } else {
                (rho[j], vel[j])
            }
        };
        let slope_at = |i: isize| {
            let (l, c, r) = (pad(i - 1), pad(i), pad(i + 1));
            (self.limited(l.0, c.0, r.0), self.limited(l.1, c.1, r.1))
        };

        let mut mass = vec![0.0; n + 1];
        let mut momentum = vec![0.0; n + 1];
        let mut pressure = vec![0.0; n + 1];
        let mut stress = vec![0.0; n + 1];
        let mut uf = vec![0.0; n + 1];
        for f in 0..=n {
            let (il, ir) = (f as isize - 1, f as isize);
            let ((r0, u0), (r1, u1)) = (pad(il), pad(ir));
            let ((sr0, su0), (sr1, su1)) = (slope_at(il), slope_at(ir));
            let (mut rl, mut rr, mut ul, mut ur) = (r0 + 0.5 * sr0, r1 - 0.5 * sr1, u0 + 0.5 * su0, u1 - 0.5 * su1);
            if rl <= 0.0 || rr <= 0.0 {
                (rl, rr, ul, ur) = (r0, r1, u0, u1);
            }
            let pl = self.k * rl.powf(self.gamma);
            let pr = self.k * rr.powf(self.gamma);
            let (wl, wr) = (ul - v_wall_mesh(v_wall, self.spherical), ur - v_wall_mesh(v_wall, self.spherical));
            let a = f64::max(wl.abs() + (self.gamma * pl / rl).sqrt(), wr.abs() + (self.gamma * pr / rr).sqrt());
            if f > 0 && f < n {
                mass[f] = 0.5 * (rl * wl + rr * wr) - 0.5 * a * (rr - rl);
            }
            let fm = 0.5 * (rl * ul * wl + pl + rr * ur * wr + pr) - 0.5 * a * (rr * ur - rl * ul);
            pressure[f] = 0.5 * (pl + pr);
            momentum[f] = fm;

            let rf = self.r_face(f);
            let (u_face, du) = match f {
                0 => (v_wall, 2.0 * (vel[0] - v_wall) / self.dx),
                _ if f == n => (v_wall, 2.0 * (v_wall - vel[n - 1]) / self.dx),
                _ => (0.5 * (vel[f - 1] + vel[f]), (vel[f] - vel[f - 1]) / self.dx),
            };
            let div = if self.spherical { du + 2.0 * u_face / rf } else { du };
            uf[f] = u_face;
            stress[f] = self.mu * du + self.lambda * div;
        }

        let mut drho = vec![0.0; n];
        let mut dmom = vec![0.0; n];
        for i in 0..n {
            let (al, ar, vol) = self.weights(i);
            drho[i] = (al * mass[i] - ar * mass[i + 1]) / vol;
            let transport = (ar * (momentum[i + 1] - pressure[i + 1]) - al * (momentum[i] - pressure[i])) / vol;
            let mut force = (ar * stress[i + 1] - al * stress[i]) / vol - (pressure[i + 1] - pressure[i]) / self.dx;
            if self.spherical {
                let div = (ar * uf[i + 1] - al * uf[i]) / vol;
                let r = self.r_cell(i);
                force -= 2.0 * (self.mu * vel[i] / r + self.lambda * div) / r;
            }
            dmom[i] = force - transport;
        }
        let dpa = if self.spherical { 0.0 } else { (stress[0] - momentum[0]) - (stress[n] - momentum[n]) };
        Stage { drho, dmom, dpa }
    }

    /// One SSP-RK2 step.
    pub fn step(&self, s: &SimState, dt: f64) -> SimState {
        let advance = |base: &SimState, from: &SimState| -> SimState {
            let va = if self.spherical { 0.0 } else { from.momentum_a / from.mass_a };
            let k = self.stage(&from.rho_b, &from.mom_b, va);
            SimState {
                t: from.t + dt,
                rho_b: (0..self.n).map(|i| from.rho_b[i] + dt * k.drho[i]).collect(),
                mom_b: (0..self.n).map(|i| from.mom_b[i] + dt * k.dmom[i]).collect(),
                mass_a: base.mass_a,
                momentum_a: from.momentum_a + dt * k.dpa,
                position: from.position + dt * va,
            }
        };
        let one = advance(s, s);
        let two = advance(s, &one);
        let mix = |a: f64, b: f64| 0.5 * a + 0.5 * b;
        SimState {
            t: s.t + dt,
            rho_b: s.rho_b.iter().zip(&two.rho_b).map(|(a, b)| mix(*a, *b)).collect(),
            mom_b: s.mom_b.iter().zip(&two.mom_b).map(|(a, b)| mix(*a, *b)).collect(),
            mass_a: s.mass_a,
            momentum_a: mix(s.momentum_a, two.momentum_a),
            position: mix(s.position, two.position),
        }
    }
}

/// Mesh velocity: the slab velocity in the planar case, zero for the fixed shell.
fn v_wall_mesh(v_wall: f64, spherical: bool) -> f64 {
    if spherical {
        0.0
    } else {
        v_wall
    }
}
