//! Exact polynomial versions of the stress algebra, used as oracles and to build
//! manufactured states.
//!
//! Everything here is expanded directly on [`Poly`] (e.g. `div(T v)` is the divergence of
//! the polynomial vector `T v`), so it shares no code with the pointwise evaluators.

use serde::{Deserialize, Serialize};

use super::{Equation, FlowFields, MaterialParams, Model, Phase, PhaseFields};
use crate::field::Vec3;
use crate::poly::{divergence, Poly, PolyField, PolyVec, PolyVectorField, TIME};

pub type PolyMat = [[Poly; 3]; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyPhase {
    pub rho: Poly,
    pub vel: PolyVec,
    pub pressure: Poly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyState {
    pub a: PolyPhase,
    pub b: PolyPhase,
}

impl PolyPhase {
    /// The phase moved rigidly by `shift`.
    pub fn translated(&self, shift: &Vec3) -> Self {
        Self { rho: self.rho.translated(shift), vel: self.vel.clone().map(|v| v.translated(shift)), pressure: self.pressure.translated(shift) }
    }

    pub fn to_fields(&self) -> PhaseFields {
        PhaseFields::new(
            PolyField::new(self.rho.clone()),
            PolyVectorField::new(self.vel.clone()),
            PolyField::new(self.pressure.clone()),
        )
    }
}

impl PolyState {
    pub fn translated(&self, shift: &Vec3) -> Self {
        Self { a: self.a.translated(shift), b: self.b.translated(shift) }
    }

    pub fn to_fields(&self) -> FlowFields {
        FlowFields { a: self.a.to_fields(), b: self.b.to_fields() }
    }

    pub fn phase(&self, phase: Phase) -> &PolyPhase {
        match phase {
            Phase::A => &self.a,
            Phase::B => &self.b,
        }
    }

    pub fn phase_mut(&mut self, phase: Phase) -> &mut PolyPhase {
        match phase {
            Phase::A => &mut self.a,
            Phase::B => &mut self.b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolyResidual {
    Scalar(Poly),
    Vector(PolyVec),
}

impl PolyResidual {
    pub fn eval(&self, x: &Vec3, t: f64) -> super::Residual {
        match self {
            PolyResidual::Scalar(p) => super::Residual::Scalar(p.eval(x, t)),
            PolyResidual::Vector(v) => super::Residual::Vector(Vec3::new(v[0].eval(x, t), v[1].eval(x, t), v[2].eval(x, t))),
        }
    }
}

/// `J[i][j] = d v_i / d x_j`.
pub fn jacobian(v: &PolyVec) -> PolyMat {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| v[i].derivative(j)))
}

pub fn strain(v: &PolyVec) -> PolyMat {
    let j = jacobian(v);
    [0, 1, 2].map(|a| [0, 1, 2].map(|b| (&j[a][b] + &j[b][a]).scale(0.5)))
}

pub fn stress(phase: Phase, v: &PolyVec, pi: &Poly, params: &MaterialParams) -> PolyMat {
    let (mu, lambda) = params.viscosities(phase);
    let d = strain(v);
    let iso = &divergence(v).scale(lambda) - pi;
    [0, 1, 2].map(|a| {
        [0, 1, 2].map(|b| {
            let s = d[a][b].scale(mu);
            if a == b {
                &s + &iso
            } else {
                s
            }
        })
    })
}

/// `(div T)_i = sum_j d_j T_ij`.
pub fn div_tensor(m: &PolyMat) -> PolyVec {
    [0, 1, 2].map(|i| (0..3).fold(Poly::zero(), |acc, j| &acc + &m[i][j].derivative(j)))
}

pub fn mat_vec(m: &PolyMat, v: &PolyVec) -> PolyVec {
    [0, 1, 2].map(|i| (0..3).fold(Poly::zero(), |acc, j| &acc + &(&m[i][j] * &v[j])))
}

fn dot(a: &PolyVec, b: &PolyVec) -> Poly {
    (0..3).fold(Poly::zero(), |acc, i| &acc + &(&a[i] * &b[i]))
}

fn material(p: &Poly, v: &PolyVec) -> Poly {
    (0..3).fold(p.derivative(TIME), |acc, j| &acc + &(&v[j] * &p.derivative(j)))
}

/// Exchange source of the given model for one phase.
pub fn source(model: Model, phase: Phase, state: &PolyState, params: &MaterialParams) -> Poly {
    let f = state.phase(phase);
    let c = params.exchange();
    match model {
        Model::Inviscid => divergence(&f.vel.clone().map(|vi| &vi * &f.pressure)).scale(c),
        Model::Viscous => divergence(&mat_vec(&stress(phase, &f.vel, &f.pressure, params), &f.vel)).scale(-c),
    }
}

pub fn residual(model: Model, equation: Equation, state: &PolyState, params: &MaterialParams) -> PolyResidual {
    let phase = equation.phase();
    let f = state.phase(phase);
    let src = source(model, phase, state, params);
    match equation {
        Equation::MassA => PolyResidual::Scalar(&material(&f.rho, &f.vel) - &src),
        Equation::MassB => PolyResidual::Scalar(&(&material(&f.rho, &f.vel) + &(&divergence(&f.vel) * &f.rho)) - &src),
        Equation::MomA | Equation::MomB => {
            let force = match model {
                Model::Inviscid => [0, 1, 2].map(|i| -&f.pressure.derivative(i)),
                Model::Viscous => div_tensor(&stress(phase, &f.vel, &f.pressure, params)),
            };
            PolyResidual::Vector([0, 1, 2].map(|i| {
                let accel = material(&f.vel[i], &f.vel);
                &(&(&f.rho * &accel) - &force[i]) + &(&f.vel[i] * &src)
            }))
        }
    }
}

/// One line of the conservative form, expanded directly from its flux.
pub fn conservative(line: Equation, state: &PolyState, params: &MaterialParams) -> PolyResidual {
    let phase = line.phase();
    let f = state.phase(phase);
    let stress = stress(phase, &f.vel, &f.pressure, params);
    match line {
        Equation::MassA | Equation::MassB => {
            let tv = mat_vec(&stress, &f.vel);
            let flux = [0, 1, 2].map(|i| &(&f.rho * &f.vel[i]) + &tv[i].scale(params.exchange()));
            PolyResidual::Scalar(&f.rho.derivative(TIME) + &divergence(&flux))
        }
        Equation::MomA | Equation::MomB => PolyResidual::Vector([0, 1, 2].map(|i| {
            let momentum = &f.rho * &f.vel[i];
            let flux: PolyVec = [0, 1, 2].map(|j| &(&momentum * &f.vel[j]) - &stress[i][j]);
            &momentum.derivative(TIME) + &divergence(&flux)
        })),
    }
}

/// Replace `rho` of a phase by `rho + (t - t0) m(x)` so that the phase's mass equation holds
/// exactly at `t = t0`. Sources do not depend on density, so one correction suffices.
pub fn make_mass_consistent(model: Model, phase: Phase, state: &mut PolyState, params: &MaterialParams, t0: f64) {
    let eq = match phase {
        Phase::A => Equation::MassA,
        Phase::B => Equation::MassB,
    };
    let PolyResidual::Scalar(r) = residual(model, eq, state, params) else { unreachable!() };
    let m = r.at_time(t0);
    let shift = &Poly::var(TIME) - &Poly::constant(t0);
    let f = state.phase_mut(phase);
    f.rho = &f.rho - &(&shift * &m);
}

/// Kinetic-energy density `rho |v|^2 / 2`.
pub fn kinetic_density(f: &PolyPhase) -> Poly {
    (&f.rho * &dot(&f.vel, &f.vel)).scale(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::curl;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mass_consistent_density_zeroes_mass_residual_at_t0() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = MaterialParams { mu_a: 0.4, mu_b: 0.6, lambda_b: 0.2, rho_0: 0.5, pi_0: 2.0, ..Default::default() };
        let psi = [0, 1, 2].map(|_| Poly::random(&mut rng, 3, true, 0.5));
        let mut state = PolyState {
            a: PolyPhase { rho: Poly::random(&mut rng, 2, true, 0.3), vel: curl(&psi), pressure: Poly::random(&mut rng, 2, true, 1.0) },
            b: PolyPhase {
                rho: Poly::random(&mut rng, 2, true, 0.3),
                vel: [0, 1, 2].map(|_| Poly::random(&mut rng, 2, true, 1.0)),
                pressure: Poly::random(&mut rng, 2, true, 1.0),
            },
        };
        for model in [Model::Viscous, Model::Inviscid] {
            let t0 = 0.37;
            make_mass_consistent(model, Phase::A, &mut state, &params, t0);
            make_mass_consistent(model, Phase::B, &mut state, &params, t0);
            for eq in [Equation::MassA, Equation::MassB] {
                let r = residual(model, eq, &state, &params);
                for k in 0..5 {
                    let x = Vec3::new(0.1 * k as f64, -0.2, 0.3 + 0.05 * k as f64);
                    assert!(r.eval(&x, t0).norm() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn conservative_mass_line_equals_system_mass_line_for_solenoidal_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = MaterialParams { mu_a: 0.4, mu_b: 0.6, lambda_b: 0.2, rho_0: 0.5, pi_0: 2.0, ..Default::default() };
        let psi = [0, 1, 2].map(|_| Poly::random(&mut rng, 3, false, 0.5));
        let phase = PolyPhase { rho: Poly::random(&mut rng, 2, true, 0.3), vel: curl(&psi), pressure: Poly::random(&mut rng, 2, false, 1.0) };
        let state = PolyState { a: phase.clone(), b: phase };
        let PolyResidual::Scalar(sys) = residual(Model::Viscous, Equation::MassA, &state, &params) else { panic!() };
        let PolyResidual::Scalar(cons) = conservative(Equation::MassA, &state, &params) else { panic!() };
        let diff = &sys - &cons;
        assert!(diff.terms().all(|(_, c)| c.abs() < 1e-10));
    }
}
