//! Smooth space-time fields on R^3 x R.
//!
//! Every density, velocity and pressure in the models is an analytic field. Implementors
//! supply the value and may override derivatives with closed forms; otherwise fourth-order
//! central differences are used.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Base step for first derivatives of values.
pub const FD_STEP: f64 = 1e-6;
/// Base step for second derivatives, taken as differences of gradients.
pub const HESSIAN_STEP: f64 = 1e-4;

fn scaled_step(base: f64, x: &Vec3) -> f64 {
    base * (1.0 + x.amax())
}

/// Fourth-order central difference of `g` at zero.
pub fn central4(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-g(2.0 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2.0 * h)) / (12.0 * h)
}

/// Fourth-order central difference of a vector-valued `g` at zero.
pub fn central4_vec(g: impl Fn(f64) -> Vec3, h: f64) -> Vec3 {
    (-g(2.0 * h) + g(h) * 8.0 - g(-h) * 8.0 + g(-2.0 * h)) / (12.0 * h)
}

fn shifted(x: &Vec3, axis: usize, s: f64) -> Vec3 {
    let mut y = *x;
    y[axis] += s;
    y
}

pub trait ScalarField {
    fn value(&self, x: &Vec3, t: f64) -> f64;

    fn gradient(&self, x: &Vec3, t: f64) -> Vec3 {
        let h = scaled_step(FD_STEP, x);
        Vec3::from_fn(|i, _| central4(|s| self.value(&shifted(x, i, s), t), h))
    }

    fn hessian(&self, x: &Vec3, t: f64) -> Mat3 {
        let h = scaled_step(HESSIAN_STEP, x);
        let mut m = Mat3::zeros();
        for j in 0..3 {
            let col = central4_vec(|s| self.gradient(&shifted(x, j, s), t), h);
            m.set_column(j, &col);
        }
        (m + m.transpose()) * 0.5
    }

    fn time_derivative(&self, x: &Vec3, t: f64) -> f64 {
        central4(|s| self.value(x, t + s), FD_STEP * (1.0 + t.abs()))
    }
}

pub trait VectorField {
    fn value(&self, x: &Vec3, t: f64) -> Vec3;

    /// `J[(i, j)] = d v_i / d x_j`.
    fn jacobian(&self, x: &Vec3, t: f64) -> Mat3 {
        let h = scaled_step(FD_STEP, x);
        let mut m = Mat3::zeros();
        for j in 0..3 {
            let col = central4_vec(|s| self.value(&shifted(x, j, s), t), h);
            m.set_column(j, &col);
        }
        m
    }

    /// Hessian of each component: `H[i][(j, k)] = d^2 v_i / dx_j dx_k`.
    fn component_hessians(&self, x: &Vec3, t: f64) -> [Mat3; 3] {
        let h = scaled_step(HESSIAN_STEP, x);
        let mut out = [Mat3::zeros(); 3];
        for k in 0..3 {
            let djac = {
                let plus2 = self.jacobian(&shifted(x, k, 2.0 * h), t);
                let plus1 = self.jacobian(&shifted(x, k, h), t);
                let minus1 = self.jacobian(&shifted(x, k, -h), t);
                let minus2 = self.jacobian(&shifted(x, k, -2.0 * h), t);
                (-plus2 + plus1 * 8.0 - minus1 * 8.0 + minus2) / (12.0 * h)
            };
            for (i, hess) in out.iter_mut().enumerate() {
                for j in 0..3 {
                    hess[(j, k)] = djac[(i, j)];
                }
            }
        }
        for hess in &mut out {
            *hess = (*hess + hess.transpose()) * 0.5;
        }
        out
    }

    fn time_derivative(&self, x: &Vec3, t: f64) -> Vec3 {
        central4_vec(|s| self.value(x, t + s), FD_STEP * (1.0 + t.abs()))
    }

    fn divergence(&self, x: &Vec3, t: f64) -> f64 {
        self.jacobian(x, t).trace()
    }
}

macro_rules! forward_scalar {
    ($($ty:ty),*) => {$(
        impl<T: ScalarField + ?Sized> ScalarField for $ty {
            fn value(&self, x: &Vec3, t: f64) -> f64 { (**self).value(x, t) }
            fn gradient(&self, x: &Vec3, t: f64) -> Vec3 { (**self).gradient(x, t) }
            fn hessian(&self, x: &Vec3, t: f64) -> Mat3 { (**self).hessian(x, t) }
            fn time_derivative(&self, x: &Vec3, t: f64) -> f64 { (**self).time_derivative(x, t) }
        }
    )*};
}

macro_rules! forward_vector {
    ($($ty:ty),*) => {$(
        impl<T: VectorField + ?Sized> VectorField for $ty {
            fn value(&self, x: &Vec3, t: f64) -> Vec3 { (**self).value(x, t) }
            fn jacobian(&self, x: &Vec3, t: f64) -> Mat3 { (**self).jacobian(x, t) }
            fn component_hessians(&self, x: &Vec3, t: f64) -> [Mat3; 3] { (**self).component_hessians(x, t) }
            fn time_derivative(&self, x: &Vec3, t: f64) -> Vec3 { (**self).time_derivative(x, t) }
            fn divergence(&self, x: &Vec3, t: f64) -> f64 { (**self).divergence(x, t) }
        }
    )*};
}

forward_scalar!(&T, Box<T>, std::sync::Arc<T>);
forward_vector!(&T, Box<T>, std::sync::Arc<T>);

/// Spatially and temporally constant scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn value(&self, _x: &Vec3, _t: f64) -> f64 {
        self.0
    }
    fn gradient(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
    fn hessian(&self, _x: &Vec3, _t: f64) -> Mat3 {
        Mat3::zeros()
    }
    fn time_derivative(&self, _x: &Vec3, _t: f64) -> f64 {
        0.0
    }
}

/// Spatially and temporally constant vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantVector(pub Vec3);

impl ConstantVector {
    pub fn zero() -> Self {
        Self(Vec3::zeros())
    }
}

impl VectorField for ConstantVector {
    fn value(&self, _x: &Vec3, _t: f64) -> Vec3 {
        self.0
    }
    fn jacobian(&self, _x: &Vec3, _t: f64) -> Mat3 {
        Mat3::zeros()
    }
    fn component_hessians(&self, _x: &Vec3, _t: f64) -> [Mat3; 3] {
        [Mat3::zeros(); 3]
    }
    fn time_derivative(&self, _x: &Vec3, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
}

/// Scalar field given only by a value callback; all derivatives are finite differences.
pub struct FnScalar<F>(pub F);

impl<F: Fn(&Vec3, f64) -> f64> ScalarField for FnScalar<F> {
    fn value(&self, x: &Vec3, t: f64) -> f64 {
        (self.0)(x, t)
    }
}

/// Vector field given only by a value callback; all derivatives are finite differences.
pub struct FnVector<F>(pub F);

impl<F: Fn(&Vec3, f64) -> Vec3> VectorField for FnVector<F> {
    fn value(&self, x: &Vec3, t: f64) -> Vec3 {
        (self.0)(x, t)
    }
}

type ValueFn = Box<dyn Fn(&Vec3, f64) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&Vec3, f64) -> Vec3 + Send + Sync>;
type HessFn = Box<dyn Fn(&Vec3, f64) -> Mat3 + Send + Sync>;

/// Scalar field with user-supplied closed-form derivatives.
///
/// In debug builds the supplied gradient and time derivative are compared against finite
/// differences at ten pseudo-random probes when the field is built.
pub struct ClosedFormScalar {
    value: ValueFn,
    gradient: GradFn,
    hessian: Option<HessFn>,
    time_derivative: ValueFn,
}

impl ClosedFormScalar {
    pub fn new(
        value: impl Fn(&Vec3, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vec3, f64) -> Vec3 + Send + Sync + 'static,
        time_derivative: impl Fn(&Vec3, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let field = Self {
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian: None,
            time_derivative: Box::new(time_derivative),
        };
        #[cfg(debug_assertions)]
        if let Err(msg) = field.check_against_differences(1e-6) {
            panic!("closed-form derivatives disagree with finite differences: {msg}");
        }
        field
    }

    pub fn with_hessian(mut self, hessian: impl Fn(&Vec3, f64) -> Mat3 + Send + Sync + 'static) -> Self {
        self.hessian = Some(Box::new(hessian));
        self
    }

    /// Compare closed forms against finite differences at ten fixed probes in `[-1, 1]^3 x [0, 1]`.
    pub fn check_against_differences(&self, rel_tol: f64) -> Result<(), String> {
        let fd = FnScalar(|x: &Vec3, t: f64| (self.value)(x, t));
        for k in 0..10 {
            let s = k as f64;
            let x = Vec3::new((1.3 * s + 0.2).sin(), (0.7 * s + 1.1).cos(), (2.1 * s + 0.5).sin());
            let t = 0.5 + 0.4 * (0.9 * s).sin();
            let g = (self.gradient)(&x, t);
            let g_fd = fd.gradient(&x, t);
            let scale = 1.0 + g.norm();
            if (g - g_fd).norm() > rel_tol * scale {
                return Err(format!("gradient mismatch at probe {k}: {g:?} vs {g_fd:?}"));
            }
            let dt = (self.time_derivative)(&x, t);
            let dt_fd = fd.time_derivative(&x, t);
            if (dt - dt_fd).abs() > rel_tol * (1.0 + dt.abs()) {
                return Err(format!("time derivative mismatch at probe {k}: {dt} vs {dt_fd}"));
            }
        }
        Ok(())
    }
}

impl ScalarField for ClosedFormScalar {
    fn value(&self, x: &Vec3, t: f64) -> f64 {
        (self.value)(x, t)
    }
    fn gradient(&self, x: &Vec3, t: f64) -> Vec3 {
        (self.gradient)(x, t)
    }
    fn hessian(&self, x: &Vec3, t: f64) -> Mat3 {
        match &self.hessian {
            Some(h) => h(x, t),
            None => {
                let h = scaled_step(HESSIAN_STEP, x);
                let mut m = Mat3::zeros();
                for j in 0..3 {
                    let col = central4_vec(|s| (self.gradient)(&shifted(x, j, s), t), h);
                    m.set_column(j, &col);
                }
                (m + m.transpose()) * 0.5
            }
        }
    }
    fn time_derivative(&self, x: &Vec3, t: f64) -> f64 {
        (self.time_derivative)(x, t)
    }
}

/// `base + eps * direction`, with every derivative exact by linearity.
pub struct Axpy<A, B> {
    pub base: A,
    pub direction: B,
    pub eps: f64,
}

impl<A: VectorField, B: VectorField> VectorField for Axpy<A, B> {
    fn value(&self, x: &Vec3, t: f64) -> Vec3 {
        self.base.value(x, t) + self.direction.value(x, t) * self.eps
    }
    fn jacobian(&self, x: &Vec3, t: f64) -> Mat3 {
        self.base.jacobian(x, t) + self.direction.jacobian(x, t) * self.eps
    }
    fn component_hessians(&self, x: &Vec3, t: f64) -> [Mat3; 3] {
        let a = self.base.component_hessians(x, t);
        let b = self.direction.component_hessians(x, t);
        [a[0] + b[0] * self.eps, a[1] + b[1] * self.eps, a[2] + b[2] * self.eps]
    }
    fn time_derivative(&self, x: &Vec3, t: f64) -> Vec3 {
        self.base.time_derivative(x, t) + self.direction.time_derivative(x, t) * self.eps
    }
}

/// Barotropic pressure `K rho^gamma` of a density field, differentiated by the chain rule.
pub struct BarotropicPressure<R> {
    pub density: R,
    pub k: f64,
    pub gamma: f64,
}

impl<R: ScalarField> ScalarField for BarotropicPressure<R> {
    fn value(&self, x: &Vec3, t: f64) -> f64 {
        self.k * self.density.value(x, t).powf(self.gamma)
    }
    fn gradient(&self, x: &Vec3, t: f64) -> Vec3 {
        let rho = self.density.value(x, t);
        self.density.gradient(x, t) * (self.k * self.gamma * rho.powf(self.gamma - 1.0))
    }
    fn hessian(&self, x: &Vec3, t: f64) -> Mat3 {
        let rho = self.density.value(x, t);
        let g = self.density.gradient(x, t);
        let h = self.density.hessian(x, t);
        let kg = self.k * self.gamma;
        g * g.transpose() * (kg * (self.gamma - 1.0) * rho.powf(self.gamma - 2.0))
            + h * (kg * rho.powf(self.gamma - 1.0))
    }
    fn time_derivative(&self, x: &Vec3, t: f64) -> f64 {
        let rho = self.density.value(x, t);
        self.density.time_derivative(x, t) * self.k * self.gamma * rho.powf(self.gamma - 1.0)
    }
}
