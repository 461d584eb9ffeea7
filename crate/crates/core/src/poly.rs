//! Sparse polynomials in `(x1, x2, x3, t)` with exact calculus.
//!
//! Manufactured states are built from these: derivatives, products and curls stay exact,
//! so residual checks only see round-off.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::field::{Mat3, ScalarField, Vec3, VectorField};

/// Index of the time variable in an exponent tuple.
pub const TIME: usize = 3;

type Exponents = [u8; 4];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Term>", into = "Vec<Term>")]
pub struct Poly {
    terms: BTreeMap<Exponents, f64>,
}

/// Serialized form of one monomial: `coef * x1^e[0] x2^e[1] x3^e[2] t^e[3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub exps: [u8; 4],
}

impl From<Vec<Term>> for Poly {
    fn from(terms: Vec<Term>) -> Self {
        let mut p = Poly::zero();
        for term in terms {
            p.accumulate(term.exps, term.coef);
        }
        p
    }
}

impl From<Poly> for Vec<Term> {
    fn from(p: Poly) -> Self {
        p.terms.into_iter().map(|(exps, coef)| Term { coef, exps }).collect()
    }
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, [0, 0, 0, 0])
    }

    /// The coordinate `x_{i+1}` for `i < 3`, or `t` for `i == TIME`.
    pub fn var(i: usize) -> Self {
        let mut e = [0u8; 4];
        e[i] = 1;
        Self::monomial(1.0, e)
    }

    pub fn monomial(coef: f64, exps: Exponents) -> Self {
        let mut p = Self::zero();
        p.accumulate(exps, coef);
        p
    }

    fn accumulate(&mut self, exps: Exponents, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += coef;
        if *entry == 0.0 {
            self.terms.remove(&exps);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (Exponents, f64)> + '_ {
        self.terms.iter().map(|(e, c)| (*e, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().map(|&k| k as u32).sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &Vec3, t: f64) -> f64 {
        let vars = [x[0], x[1], x[2], t];
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut m = *c;
                for (v, &k) in vars.iter().zip(e) {
                    if k > 0 {
                        m *= v.powi(k as i32);
                    }
                }
                m
            })
            .sum()
    }

    pub fn derivative(&self, var: usize) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut e2 = *e;
                e2[var] -= 1;
                out.accumulate(e2, c * e[var] as f64);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            out.accumulate(*e, c * s);
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::constant(1.0), |acc, _| &acc * self)
    }

    /// Substitute `t = t0`, leaving a time-independent polynomial.
    pub fn at_time(&self, t0: f64) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            let mut e2 = *e;
            e2[TIME] = 0;
            out.accumulate(e2, c * t0.powi(e[TIME] as i32));
        }
        out
    }

    /// `q(x, t) = p(x - shift, t)`.
    pub fn translated(&self, shift: &Vec3) -> Poly {
        let shifted_vars: Vec<Poly> =
            (0..3).map(|i| &Poly::var(i) - &Poly::constant(shift[i])).collect();
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            let mut m = Poly::monomial(*c, [0, 0, 0, e[TIME]]);
            for i in 0..3 {
                if e[i] > 0 {
                    m = &m * &shifted_vars[i].pow(e[i] as u32);
                }
            }
            out = &out + &m;
        }
        out
    }

    /// Random polynomial in space (and optionally time) of total degree `<= degree`,
    /// coefficients uniform in `[-scale, scale]`.
    pub fn random(rng: &mut impl Rng, degree: u8, with_time: bool, scale: f64) -> Poly {
        let mut out = Poly::zero();
        let tmax = if with_time { degree.min(2) } else { 0 };
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                for c in 0..=(degree - a - b) {
                    for d in 0..=tmax.min(degree - a - b - c) {
                        out.accumulate([a, b, c, d], rng.gen_range(-scale..=scale));
                    }
                }
            }
        }
        out
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.accumulate(*e, *c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.accumulate(*e, -*c);
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]];
                out.accumulate(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly { (&self).$m(&rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Mul<f64> for &Poly {
    type Output = Poly;
    fn mul(self, s: f64) -> Poly {
        self.scale(s)
    }
}

/// Three polynomial components of a vector field.
pub type PolyVec = [Poly; 3];

pub fn gradient(p: &Poly) -> PolyVec {
    [p.derivative(0), p.derivative(1), p.derivative(2)]
}

pub fn divergence(v: &PolyVec) -> Poly {
    &(&v[0].derivative(0) + &v[1].derivative(1)) + &v[2].derivative(2)
}

pub fn curl(v: &PolyVec) -> PolyVec {
    [
        &v[2].derivative(1) - &v[1].derivative(2),
        &v[0].derivative(2) - &v[2].derivative(0),
        &v[1].derivative(0) - &v[0].derivative(1),
    ]
}

pub fn dot(a: &PolyVec, b: &PolyVec) -> Poly {
    &(&(&a[0] * &b[0]) + &(&a[1] * &b[1])) + &(&a[2] * &b[2])
}

pub fn scale_vec(s: &Poly, v: &PolyVec) -> PolyVec {
    [s * &v[0], s * &v[1], s * &v[2]]
}

pub fn add_vec(a: &PolyVec, b: &PolyVec) -> PolyVec {
    [&a[0] + &b[0], &a[1] + &b[1], &a[2] + &b[2]]
}

/// The position field `x` as polynomials.
pub fn position() -> PolyVec {
    [Poly::var(0), Poly::var(1), Poly::var(2)]
}

/// `|x|^2`.
pub fn radius_squared() -> Poly {
    dot(&position(), &position())
}

/// Scalar polynomial field with all derivatives precomputed.
#[derive(Debug, Clone)]
pub struct PolyField {
    p: Poly,
    grad: [Poly; 3],
    hess: [[Poly; 3]; 3],
    dt: Poly,
}

impl PolyField {
    pub fn new(p: Poly) -> Self {
        let grad = gradient(&p);
        let hess = [0, 1, 2].map(|i| [0, 1, 2].map(|j| grad[i].derivative(j)));
        let dt = p.derivative(TIME);
        Self { p, grad, hess, dt }
    }

    pub fn poly(&self) -> &Poly {
        &self.p
    }
}

impl From<Poly> for PolyField {
    fn from(p: Poly) -> Self {
        Self::new(p)
    }
}

impl ScalarField for PolyField {
    fn value(&self, x: &Vec3, t: f64) -> f64 {
        self.p.eval(x, t)
    }
    fn gradient(&self, x: &Vec3, t: f64) -> Vec3 {
        Vec3::new(self.grad[0].eval(x, t), self.grad[1].eval(x, t), self.grad[2].eval(x, t))
    }
    fn hessian(&self, x: &Vec3, t: f64) -> Mat3 {
        Mat3::from_fn(|i, j| self.hess[i][j].eval(x, t))
    }
    fn time_derivative(&self, x: &Vec3, t: f64) -> f64 {
        self.dt.eval(x, t)
    }
}

/// Vector polynomial field with exact derivatives.
#[derive(Debug, Clone)]
pub struct PolyVectorField {
    comps: [PolyField; 3],
}

impl PolyVectorField {
    pub fn new(v: PolyVec) -> Self {
        let [a, b, c] = v;
        Self { comps: [PolyField::new(a), PolyField::new(b), PolyField::new(c)] }
    }

    pub fn zero() -> Self {
        Self::new([Poly::zero(), Poly::zero(), Poly::zero()])
    }

    pub fn polys(&self) -> PolyVec {
        [self.comps[0].p.clone(), self.comps[1].p.clone(), self.comps[2].p.clone()]
    }
}

impl From<PolyVec> for PolyVectorField {
    fn from(v: PolyVec) -> Self {
        Self::new(v)
    }
}

impl VectorField for PolyVectorField {
    fn value(&self, x: &Vec3, t: f64) -> Vec3 {
        Vec3::from_fn(|i, _| self.comps[i].value(x, t))
    }
    fn jacobian(&self, x: &Vec3, t: f64) -> Mat3 {
        Mat3::from_fn(|i, j| self.comps[i].grad[j].eval(x, t))
    }
    fn component_hessians(&self, x: &Vec3, t: f64) -> [Mat3; 3] {
        [0, 1, 2].map(|i| self.comps[i].hessian(x, t))
    }
    fn time_derivative(&self, x: &Vec3, t: f64) -> Vec3 {
        Vec3::from_fn(|i, _| self.comps[i].dt.eval(x, t))
    }
}
