//! Semi-discrete operator for phase B on a uniform reference grid.
//!
//! Phase B lives between two walls that move with a common velocity `wall` (the interface
//! velocity; zero in the spherical case). The mesh moves rigidly with `mesh`, so cell widths
//! are constant and the geometric conservation law holds trivially. Faces carry a Rusanov flux
//! of MUSCL-reconstructed primitive states; the pressure enters through face averages so that
//! a uniform state at rest is an exact fixed point.

use super::radial::{self, Symmetry, Viscosity};
use super::{Limiter, Mode};
use crate::tensors::{MaterialParams, Model};

/// Reference grid of `n` cells of width `dx` starting at `left`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub sym: Symmetry,
    pub n: usize,
    pub left: f64,
    pub dx: f64,
}

impl Grid {
    pub fn face(&self, f: usize) -> f64 {
        self.left + f as f64 * self.dx
    }

    pub fn center(&self, i: usize) -> f64 {
        self.left + (i as f64 + 0.5) * self.dx
    }

    /// Face area per unit solid angle (spherical) or cross-section (planar).
    pub fn area(&self, f: usize) -> f64 {
        match self.sym {
            Symmetry::Planar => 1.0,
            Symmetry::Spherical => self.face(f).powi(2),
        }
    }

    pub fn volume(&self, i: usize) -> f64 {
        match self.sym {
            Symmetry::Planar => self.dx,
            Symmetry::Spherical => (self.face(i + 1).powi(3) - self.face(i).powi(3)) / 3.0,
        }
    }

    /// Full measure of a unit per-steradian quantity.
    pub fn measure(&self) -> f64 {
        match self.sym {
            Symmetry::Planar => 1.0,
            Symmetry::Spherical => 4.0 * std::f64::consts::PI,
        }
    }
}

/// Face and cell quantities of one evaluation.
#[derive(Debug, Clone, Default)]
pub struct Discrete {
    pub u: Vec<f64>,
    pub pi: Vec<f64>,
    /// Rusanov mass flux relative to the mesh (zero at walls).
    pub mass_flux: Vec<f64>,
    /// Rusanov momentum flux minus the central pressure.
    pub adv_flux: Vec<f64>,
    pub pi_face: Vec<f64>,
    pub tau_face: Vec<f64>,
    pub u_face: Vec<f64>,
    /// `(T v)_r` at faces; at walls `sigma * wall`.
    pub tv_face: Vec<f64>,
    /// Total normal stress `T_rr` carried by each face, including numerical dissipation.
    pub sigma: Vec<f64>,
    pub wave_speed: Vec<f64>,
    pub rho_jump: Vec<f64>,
    pub u_jump: Vec<f64>,
    /// Cell divergence in flux form.
    pub div: Vec<f64>,
    pub dudr: Vec<f64>,
    pub tau_hoop: Vec<f64>,
    /// Cell `div(T v)` in flux form.
    pub div_tv: Vec<f64>,
}

/// Time derivatives of the phase B unknowns.
#[derive(Debug, Clone)]
pub struct Rates {
    pub drho: Vec<f64>,
    pub dmom: Vec<f64>,
    /// `T_rr` at the first and last face.
    pub sigma_first: f64,
    pub sigma_last: f64,
}

pub struct Operator<'a> {
    pub grid: Grid,
    pub model: Model,
    pub params: &'a MaterialParams,
    pub limiter: Limiter,
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

impl Operator<'_> {
    fn viscosity(&self) -> Viscosity {
        match self.model {
            Model::Inviscid => Viscosity { mu: 0.0, lambda: 0.0 },
            Model::Viscous => Viscosity { mu: self.params.mu_b, lambda: self.params.lambda_b },
        }
    }

    fn slope(&self, l: f64, c: f64, r: f64) -> f64 {
        match self.limiter {
            Limiter::Minmod => minmod(c - l, r - c),
            Limiter::None => 0.5 * (r - l),
        }
    }

    /// Evaluate all face and cell quantities for `rho`, `mom`.
    pub fn discretize(&self, rho: &[f64], mom: &[f64], wall: f64, mesh: f64) -> Discrete {
        let g = &self.grid;
        let n = g.n;
        let p = self.params;
        let visc = self.viscosity();
        let a = g.sym.alpha();
        let u: Vec<f64> = rho.iter().zip(mom).map(|(r, m)| m / r).collect();
        let pi: Vec<f64> = rho.iter().map(|r| p.eos_pressure(*r)).collect();

        // two mirror ghosts per side
        let mut er = Vec::with_capacity(n + 4);
        let mut eu = Vec::with_capacity(n + 4);
        er.extend([rho[1], rho[0]]);
        eu.extend([2.0 * wall - u[1], 2.0 * wall - u[0]]);
        er.extend_from_slice(rho);
        eu.extend_from_slice(&u);
        er.extend([rho[n - 1], rho[n - 2]]);
        eu.extend([2.0 * wall - u[n - 1], 2.0 * wall - u[n - 2]]);
        let mut sr = vec![0.0; n + 4];
        let mut su = vec![0.0; n + 4];
        for k in 1..n + 3 {
            sr[k] = self.slope(er[k - 1], er[k], er[k + 1]);
            su[k] = self.slope(eu[k - 1], eu[k], eu[k + 1]);
        }

        let nf = n + 1;
        let mut d = Discrete {
            mass_flux: vec![0.0; nf],
            adv_flux: vec![0.0; nf],
            pi_face: vec![0.0; nf],
            tau_face: vec![0.0; nf],
            u_face: vec![0.0; nf],
            tv_face: vec![0.0; nf],
            sigma: vec![0.0; nf],
            wave_speed: vec![0.0; nf],
            rho_jump: vec![0.0; nf],
            u_jump: vec![0.0; nf],
            ..Default::default()
        };
        for f in 0..nf {
            let (kl, kr) = (f + 1, f + 2);
            let (mut rl, mut rr) = (er[kl] + 0.5 * sr[kl], er[kr] - 0.5 * sr[kr]);
            let (mut ul, mut ur) = (eu[kl] + 0.5 * su[kl], eu[kr] - 0.5 * su[kr]);
            if !(rl > 0.0 && rr > 0.0) {
                (rl, rr, ul, ur) = (er[kl], er[kr], eu[kl], eu[kr]);
            }
            let (pl, pr) = (p.eos_pressure(rl), p.eos_pressure(rr));
            let (wl, wr) = (ul - mesh, ur - mesh);
            let speed = (wl.abs() + (p.gamma * pl / rl).sqrt()).max(wr.abs() + (p.gamma * pr / rr).sqrt());
            let (ml, mr) = (rl * ul, rr * ur);
            let fm = 0.5 * (ml * wl + pl + mr * wr + pr) - 0.5 * speed * (mr - ml);
            let pf = 0.5 * (pl + pr);
            let wall_face = f == 0 || f == n;
            d.mass_flux[f] = if wall_face { 0.0 } else { 0.5 * (rl * wl + rr * wr) - 0.5 * speed * (rr - rl) };
            d.adv_flux[f] = fm - pf;
            d.pi_face[f] = pf;
            d.wave_speed[f] = speed;
            d.rho_jump[f] = rr - rl;
            d.u_jump[f] = ur - ul;

            let r = g.face(f);
            let (uf, du) = if f == 0 {
                (wall, (u[0] - wall) / (0.5 * g.dx))
            } else if f == n {
                (wall, (wall - u[n - 1]) / (0.5 * g.dx))
            } else {
                (0.5 * (u[f - 1] + u[f]), (u[f] - u[f - 1]) / g.dx)
            };
            let tau = radial::tau_rr(g.sym, visc, r, uf, du);
            d.u_face[f] = uf;
            d.tau_face[f] = tau;
            d.sigma[f] = tau - fm;
            d.tv_face[f] = if wall_face { d.sigma[f] * wall } else { (tau - pf) * uf };
        }

        d.div = (0..n).map(|i| (g.area(i + 1) * d.u_face[i + 1] - g.area(i) * d.u_face[i]) / g.volume(i)).collect();
        d.dudr = (0..n).map(|i| (d.u_face[i + 1] - d.u_face[i]) / g.dx).collect();
        d.tau_hoop = (0..n)
            .map(|i| if a == 0.0 { 0.0 } else { visc.mu * u[i] / g.center(i) + visc.lambda * d.div[i] })
            .collect();
        d.div_tv = (0..n).map(|i| (g.area(i + 1) * d.tv_face[i + 1] - g.area(i) * d.tv_face[i]) / g.volume(i)).collect();
        d.u = u;
        d.pi = pi;
        d
    }

    /// Semi-discrete right-hand side.
    pub fn rates(&self, rho: &[f64], mom: &[f64], wall: f64, mesh: f64, mode: Mode) -> Rates {
        let d = self.discretize(rho, mom, wall, mesh);
        let g = &self.grid;
        let n = g.n;
        let c = self.params.exchange();
        let a = g.sym.alpha();
        let mut drho = vec![0.0; n];
        let mut dmom = vec![0.0; n];
        for i in 0..n {
            let (al, ar, vol) = (g.area(i), g.area(i + 1), g.volume(i));
            let hoop = if a == 0.0 { 0.0 } else { a * d.tau_hoop[i] / g.center(i) };
            let visc_force = (ar * d.tau_face[i + 1] - al * d.tau_face[i]) / vol - hoop;
            let grad_pi = (d.pi_face[i + 1] - d.pi_face[i]) / g.dx;
            match mode {
                Mode::Conservative => {
                    let fl = d.mass_flux[i] + c * d.tv_face[i];
                    let fr = d.mass_flux[i + 1] + c * d.tv_face[i + 1];
                    drho[i] = -(ar * fr - al * fl) / vol;
                    dmom[i] = -(ar * d.adv_flux[i + 1] - al * d.adv_flux[i]) / vol - grad_pi + visc_force;
                }
                Mode::Primitive => {
                    let (ui, ri) = (d.u[i], rho[i]);
                    let (rm, rp) = if i == 0 { (rho[0], rho[1]) } else if i == n - 1 { (rho[n - 2], rho[n - 1]) } else { (rho[i - 1], rho[i + 1]) };
                    let (um, up) = if i == 0 {
                        (2.0 * wall - d.u[0], d.u[1])
                    } else if i == n - 1 {
                        (d.u[n - 2], 2.0 * wall - d.u[n - 1])
                    } else {
                        (d.u[i - 1], d.u[i + 1])
                    };
                    let grad_rho = (rp - rm) / (2.0 * g.dx);
                    let grad_u = (up - um) / (2.0 * g.dx);
                    let source = -c * d.div_tv[i];
                    let diff = |jump: &[f64], f: usize, area: f64| {
                        if f == 0 || f == n {
                            0.0
                        } else {
                            0.5 * area * d.wave_speed[f] * jump[f]
                        }
                    };
                    let diff_rho = (diff(&d.rho_jump, i + 1, ar) - diff(&d.rho_jump, i, al)) / vol;
                    let diff_u = (diff(&d.u_jump, i + 1, ar) - diff(&d.u_jump, i, al)) / vol;
                    let dr = -(ui - mesh) * grad_rho - ri * d.div[i] + source + diff_rho;
                    let du = -(ui - mesh) * grad_u + (visc_force - grad_pi - source * ui) / ri + diff_u;
                    drho[i] = dr;
                    dmom[i] = ui * dr + ri * du;
                }
            }
        }
        Rates { drho, dmom, sigma_first: d.sigma[0], sigma_last: d.sigma[n] }
    }

    /// Largest stable step for the current state.
    pub fn dt_limit(&self, rho: &[f64], mom: &[f64], mesh: f64, cfl: f64) -> f64 {
        let p = self.params;
        let mut speed: f64 = 0.0;
        let mut rho_min = f64::INFINITY;
        for (r, m) in rho.iter().zip(mom) {
            speed = speed.max((m / r - mesh).abs() + p.eos_slope(*r).sqrt());
            rho_min = rho_min.min(*r);
        }
        let mut limit = cfl * self.grid.dx / speed;
        let visc = self.viscosity();
        let nu = (visc.mu + visc.lambda) / rho_min;
        if nu > 0.0 {
            limit = limit.min(cfl * self.grid.dx * self.grid.dx / nu);
        }
        limit
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MaterialParams {
        MaterialParams { mu_a: 0.1, mu_b: 0.05, lambda_b: 0.02, rho_0: 0.4, pi_0: 1.0, ..Default::default() }
    }

    fn shell(n: usize) -> Grid {
        Grid { sym: Symmetry::Spherical, n, left: 1.0, dx: 1.0 / n as f64 }
    }

    #[test]
    fn rest_state_is_fixed_point() {
        let p = params();
        for model in [Model::Inviscid, Model::Viscous] {
            for sym in [Symmetry::Planar, Symmetry::Spherical] {
                let grid = Grid { sym, n: 16, left: 1.0, dx: 0.0625 };
                let op = Operator { grid, model, params: &p, limiter: Limiter::Minmod };
                for mode in [Mode::Conservative, Mode::Primitive] {
                    let r = op.rates(&[1.3; 16], &[0.0; 16], 0.0, 0.0, mode);
                    assert!(r.drho.iter().chain(&r.dmom).all(|v| *v == 0.0), "{model:?} {sym:?} {mode:?}");
                    assert_eq!(r.sigma_first, r.sigma_last);
                }
            }
        }
    }

    #[test]
    fn uniform_translation_with_walls_is_fixed_point() {
        let p = params();
        let grid = Grid { sym: Symmetry::Planar, n: 10, left: 0.0, dx: 0.1 };
        let op = Operator { grid, model: Model::Inviscid, params: &p, limiter: Limiter::Minmod };
        let r = op.rates(&[2.0; 10], &[0.6; 10], 0.3, 0.3, Mode::Conservative);
        // uniform pressure, so the exchange flux is the same on both walls
        assert!(r.dmom.iter().all(|v| v.abs() < 1e-14), "{:?}", r.dmom);
        assert!((r.sigma_first - r.sigma_last).abs() < 1e-14);
    }

    #[test]
    fn shell_volumes_sum_to_shell() {
        let g = shell(37);
        let v: f64 = (0..37).map(|i| g.volume(i)).sum::<f64>() * g.measure();
        assert!((v - 4.0 * std::f64::consts::PI * 7.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn conservative_mass_rate_telescopes() {
        let p = params();
        let n = 50;
        let op = Operator { grid: shell(n), model: Model::Viscous, params: &p, limiter: Limiter::Minmod };
        let rho: Vec<f64> = (0..n).map(|i| 1.0 + 0.2 * (i as f64 * 0.3).sin()).collect();
        let mom: Vec<f64> = (0..n).map(|i| 0.1 * (i as f64 * 0.2).cos()).collect();
        let r = op.rates(&rho, &mom, 0.0, 0.0, Mode::Conservative);
        let total: f64 = (0..n).map(|i| r.drho[i] * op.grid.volume(i)).sum();
        assert!(total.abs() < 1e-13, "{total}");
    }

    #[test]
    fn discrete_divergence_converges() {
        let p = params();
        let mut errs = Vec::new();
        for n in [40, 80] {
            let op = Operator { grid: shell(n), model: Model::Viscous, params: &p, limiter: Limiter::Minmod };
            let u: Vec<f64> = (0..n).map(|i| (op.grid.center(i) - 1.0) * (2.0 - op.grid.center(i))).collect();
            let d = op.discretize(&vec![1.0; n], &u, 0.0, 0.0);
            // L1: the wall cells are first order, the interior second
            let e: f64 = (0..n)
                .map(|i| {
                    let r = op.grid.center(i);
                    let exact = radial::divergence(Symmetry::Spherical, r, u[i], 3.0 - 2.0 * r);
                    (d.div[i] - exact).abs() * op.grid.dx
                })
                .sum();
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }
}
