//! One-dimensional quadrature rules shared by the surface, bulk and ledger integrators.

use std::f64::consts::PI;

/// A quadrature rule on a fixed interval: `sum(w_k f(x_k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss–Legendre rule with `n` points on `[-1, 1]`.
    ///
    /// Nodes come from Newton iteration on the three-term Legendre recurrence,
    /// exact for polynomials up to degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                dp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z_old = z;
                z = z_old - p1 / dp;
                if (z - z_old).abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Gauss–Legendre rule mapped to `[a, b]`.
    pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Self {
        Self::gauss_legendre(n).mapped(a, b)
    }

    /// Periodic trapezoid rule with `n` equally spaced points on `[a, a + period)`.
    pub fn periodic_trapezoid(n: usize, a: f64, period: f64) -> Self {
        assert!(n > 0, "trapezoid rule needs at least one node");
        let h = period / n as f64;
        Self {
            nodes: (0..n).map(|k| a + h * k as f64).collect(),
            weights: vec![h; n],
        }
    }

    /// Affine map of a rule defined on `[-1, 1]` onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| w * half).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
        for n in 1..12 {
            let rule = Rule::gauss_legendre(n);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = rule.integrate(|x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg} got={got}");
            }
        }
    }

    #[test]
    fn mapped_rule_integrates_sine() {
        let rule = Rule::gauss_legendre_on(20, 0.0, PI);
        assert!((rule.integrate(f64::sin) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_is_exact_for_low_trig_polynomials() {
        let rule = Rule::periodic_trapezoid(8, 0.0, 2.0 * PI);
        assert!((rule.integrate(|p| p.cos().powi(2)) - PI).abs() < 1e-14);
        assert!(rule.integrate(|p| (3.0 * p).sin()).abs() < 1e-14);
    }
}
