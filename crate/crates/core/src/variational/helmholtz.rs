//! Least-squares pressure recovery `grad Pi ~ F` on a Cartesian grid masked to a ball.
//!
//! Each pair of neighbouring cells carries the line integral of `F` between their centers.
//! Those edge values are an exact potential difference when `F` is a gradient, so every
//! elementary loop (plaquette) must have zero circulation; a nonzero one means `F` has a
//! rotational part. The normal equations are the graph Laplacian with natural (zero-flux)
//! boundary conditions, solved by conjugate gradients on mean-zero vectors.

use super::VariationalError;
use crate::field::Vec3;
use crate::quadrature::Rule;

/// Relative residual at which conjugate gradients stop.
pub const HELMHOLTZ_SOLVER_TOL: f64 = 1e-10;
/// Largest admissible normalized plaquette circulation.
pub const HELMHOLTZ_CURL_TOL: f64 = 1e-6;

const EDGE_POINTS: usize = 4;

/// Pressure samples at the active cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzSolution {
    pub h: f64,
    pub points: Vec<Vec3>,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub solver_residual: f64,
    /// `|grad_h Pi - F|_2 / |F|_2` over the grid edges.
    pub gradient_mismatch: f64,
    pub max_circulation: f64,
}

impl HelmholtzSolution {
    /// Relative discrete L2 distance to `exact - mean(exact)`.
    pub fn relative_error(&self, exact: impl Fn(&Vec3) -> f64) -> f64 {
        let e: Vec<f64> = self.points.iter().map(exact).collect();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for (p, q) in self.values.iter().zip(&e) {
            num += (p - (q - mean)).powi(2);
            den += (q - mean).powi(2);
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

struct Grid {
    n: usize,
    index: Vec<Option<usize>>,
    points: Vec<Vec3>,
}

impl Grid {
    fn new(center: Vec3, radius: f64, h: f64) -> Self {
        let n = (2.0 * radius / h).round() as usize;
        let origin = center - Vec3::repeat(radius);
        let mut index = vec![None; n * n * n];
        let mut points = Vec::new();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let x = origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * h;
                    if (x - center).norm() < radius {
                        index[i + n * (j + n * k)] = Some(points.len());
                        points.push(x);
                    }
                }
            }
        }
        Self { n, index, points }
    }

    fn cell(&self, c: [usize; 3]) -> Option<usize> {
        if c.iter().any(|&v| v >= self.n) {
            return None;
        }
        self.index[c[0] + self.n * (c[1] + self.n * c[2])]
    }

    fn coords(&self, flat: usize) -> [usize; 3] {
        [flat % self.n, (flat / self.n) % self.n, flat / (self.n * self.n)]
    }
}

fn step(c: [usize; 3], axis: usize) -> [usize; 3] {
    let mut d = c;
    d[axis] += 1;
    d
}

/// Recover `Pi` with `grad Pi ~ F` in the ball of radius `radius` around `center`.
pub fn helmholtz_pressure(f: &dyn Fn(&Vec3) -> Vec3, center: Vec3, radius: f64, h: f64) -> Result<HelmholtzSolution, VariationalError> {
    if !(radius > 0.0 && h > 0.0 && h < radius) {
        return Err(VariationalError::InvalidGeometry(format!("need 0 < h < radius, got h={h}, radius={radius}")));
    }
    let grid = Grid::new(center, radius, h);
    let m = grid.points.len();
    let line = Rule::gauss_legendre_on(EDGE_POINTS, 0.0, 1.0);

    // edges (from, to, axis) with mean of F along the segment
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut edge_at = vec![[usize::MAX; 3]; m];
    for flat in 0..grid.index.len() {
        let Some(a) = grid.index[flat] else { continue };
        let c = grid.coords(flat);
        for axis in 0..3 {
            if let Some(b) = grid.cell(step(c, axis)) {
                let (xa, xb) = (grid.points[a], grid.points[b]);
                let mean: f64 = line.iter().map(|(s, w)| w * f(&(xa + (xb - xa) * s))[axis]).sum();
                edge_at[a][axis] = edges.len();
                edges.push((a, b, mean));
            }
        }
    }

    let scale = edges.iter().fold(0.0f64, |s, e| s.max(e.2.abs()));
    let mut max_circulation: f64 = 0.0;
    for flat in 0..grid.index.len() {
        let Some(a) = grid.index[flat] else { continue };
        let c = grid.coords(flat);
        for (p, q) in [(0, 1), (1, 2), (0, 2)] {
            let (Some(bp), Some(bq)) = (grid.cell(step(c, p)), grid.cell(step(c, q))) else { continue };
            if grid.cell(step(step(c, p), q)).is_none() {
                continue;
            }
            let e = |cell: usize, axis: usize| edges[edge_at[cell][axis]].2;
            let loop_sides = [e(a, p), e(bp, q), -e(bq, p), -e(a, q)];
            let circ: f64 = loop_sides.iter().sum();
            let size: f64 = loop_sides.iter().map(|v| v.abs()).sum::<f64>().max(1e-12 * scale);
            if size > 0.0 {
                max_circulation = max_circulation.max(circ.abs() / size);
            }
        }
    }
    if max_circulation > HELMHOLTZ_CURL_TOL {
        return Err(VariationalError::IllPosed { residual: max_circulation });
    }

    // L Pi = b with L the graph Laplacian and b the divergence of the edge values
    let mut rhs = vec![0.0; m];
    for &(a, b, g) in &edges {
        rhs[a] -= g * h;
        rhs[b] += g * h;
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(a, b, _) in &edges {
            let d = x[a] - x[b];
            out[a] += d;
            out[b] -= d;
        }
    };
    let (values, iterations, solver_residual) = conjugate_gradient(apply, &rhs, 20 * m.max(10));
    let (mut num, mut den) = (0.0, 0.0);
    for &(a, b, g) in &edges {
        num += ((values[b] - values[a]) / h - g).powi(2);
        den += g * g;
    }
    let gradient_mismatch = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    Ok(HelmholtzSolution { h, points: grid.points, values, iterations, solver_residual, gradient_mismatch, max_circulation })
}

fn remove_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// CG for a symmetric operator that is positive definite on mean-zero vectors.
fn conjugate_gradient(apply: impl Fn(&[f64], &mut [f64]), rhs: &[f64], max_iter: usize) -> (Vec<f64>, usize, f64) {
    let n = rhs.len();
    let mut b = rhs.to_vec();
    remove_mean(&mut b);
    let bnorm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return (x, 0, 0.0);
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut it = 0;
    while it < max_iter && rr.sqrt() > HELMHOLTZ_SOLVER_TOL * bnorm {
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        it += 1;
    }
    remove_mean(&mut x);
    (x, it, rr.sqrt() / bnorm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_gives_zero() {
        let s = helmholtz_pressure(&|_| Vec3::zeros(), Vec3::zeros(), 1.0, 0.25).unwrap();
        assert!(s.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn quadratic_potential_recovered() {
        let f = |x: &Vec3| Vec3::new(2.0 * x[0], 2.0 * x[1], 0.0);
        let s = helmholtz_pressure(&f, Vec3::zeros(), 1.0, 1.0 / 16.0).unwrap();
        let err = s.relative_error(|x| x[0] * x[0] + x[1] * x[1]);
        assert!(err < 1e-4, "{err}");
        assert!(s.gradient_mismatch < 1e-6);
        assert!(s.values.iter().sum::<f64>().abs() < 1e-8 * s.values.len() as f64);
    }

    #[test]
    fn rotation_is_ill_posed() {
        let f = |x: &Vec3| Vec3::new(-x[1], x[0], 0.0);
        let err = helmholtz_pressure(&f, Vec3::zeros(), 1.0, 0.125).unwrap_err();
        assert!(matches!(err, VariationalError::IllPosed { residual } if residual > 0.1));
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(helmholtz_pressure(&|_| Vec3::zeros(), Vec3::zeros(), 1.0, 2.0).is_err());
    }
}
