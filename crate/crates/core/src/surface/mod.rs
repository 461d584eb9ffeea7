//! Differential geometry on closed surfaces.
//!
//! A [`ClosedSurface`] is either a parametric sphere/ellipsoid (exact normals and curvature,
//! product Gauss-Legendre x trapezoid quadrature) or a closed triangle mesh (vertex normals
//! and curvature from local quadratic fits seeded by angle-weighted normals, piecewise-linear
//! reconstruction of nodal data, lumped vertex weights).
//!
//! Orientation: normals point out of the enclosed region, so a sphere of radius `R` has
//! mean curvature `H = -div_G n = -2/R`.

mod mesh;

use std::f64::consts::PI;
use std::io::Write;

use thiserror::Error;

pub use mesh::TriMesh;

use crate::field::{central4, central4_vec, Mat3, Vec3};
use crate::quadrature::Rule;

/// Sign applied to the enclosed-region normal. Normals point from the inner phase outward.
pub const NORMAL_ORIENTATION: f64 = 1.0;

/// Relative step for differentiating ambient extensions in parametric mode.
pub const PARAMETRIC_FD_STEP: f64 = 1e-3;

/// Faces smaller than this fraction of the mean face area are rejected.
pub const DEGENERATE_AREA_FRACTION: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("node index {node} out of range for surface with {len} nodes")]
    NodeOutOfRange { node: usize, len: usize },
    #[error("parametric mode needs an ambient extension; per-node values cannot be differentiated")]
    MissingExtension,
    #[error("degenerate triangle: face {face} has area {area:e}")]
    DegenerateFace { face: usize, area: f64 },
    #[error("mesh is not closed: {0}")]
    NotClosed(String),
    #[error("mesh normals point inward (signed volume {0:e})")]
    NotOutward(f64),
    #[error("OFF parse error: {0}")]
    Off(String),
    #[error("field has {got} values but the surface has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid surface parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceKind {
    ParametricSphere { radius: f64 },
    ParametricEllipsoid { a: f64, b: f64, c: f64 },
    TriangleMesh(TriMesh),
}

/// Per-node values on a surface.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceField {
    Scalar(Vec<f64>),
    Vector(Vec<Vec3>),
}

impl SurfaceField {
    pub fn len(&self) -> usize {
        match self {
            SurfaceField::Scalar(v) => v.len(),
            SurfaceField::Vector(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_scalar(&self) -> Option<&[f64]> {
        match self {
            SurfaceField::Scalar(v) => Some(v),
            SurfaceField::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[Vec3]> {
        match self {
            SurfaceField::Vector(v) => Some(v),
            SurfaceField::Scalar(_) => None,
        }
    }
}

/// A scalar to be differentiated or integrated on a surface.
#[derive(Clone, Copy)]
pub enum ScalarInput<'a> {
    /// Callback defined in a 3D neighbourhood of the surface.
    Ambient(&'a dyn Fn(&Vec3) -> f64),
    /// One value per surface node.
    Nodal(&'a [f64]),
}

#[derive(Clone, Copy)]
pub enum VectorInput<'a> {
    Ambient(&'a dyn Fn(&Vec3) -> Vec3),
    Nodal(&'a [Vec3]),
}

#[derive(Debug, Clone)]
struct MeshData {
    mesh: TriMesh,
    order: usize,
    face_areas: Vec<f64>,
    /// Gradients of the three hat functions on each face.
    hat_gradients: Vec<[Vec3; 3]>,
    /// Sum of adjacent face areas per vertex.
    vertex_area: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ClosedSurface {
    kind: SurfaceKind,
    center: Vec3,
    n_theta: usize,
    n_phi: usize,
    nodes: Vec<Vec3>,
    normals: Vec<Vec3>,
    weights: Vec<f64>,
    curvature: Vec<f64>,
    mesh: Option<MeshData>,
}

impl ClosedSurface {
    /// Sphere centered at the origin sampled on `n_theta x n_phi` nodes.
    pub fn sphere(radius: f64, n_theta: usize, n_phi: usize) -> Result<Self, SurfaceError> {
        Self::parametric(SurfaceKind::ParametricSphere { radius }, Vec3::zeros(), n_theta, n_phi)
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64, n_theta: usize, n_phi: usize) -> Result<Self, SurfaceError> {
        Self::parametric(SurfaceKind::ParametricEllipsoid { a, b, c }, Vec3::zeros(), n_theta, n_phi)
    }

    /// Validated triangle mesh; `order` 1 is the centroid rule and 2 the 3-point rule.
    pub fn from_mesh(mesh: TriMesh, order: usize) -> Result<Self, SurfaceError> {
        if !(1..=2).contains(&order) {
            return Err(SurfaceError::InvalidParameter(format!("mesh quadrature order {order} not in 1..=2")));
        }
        if mesh.faces.is_empty() {
            return Err(SurfaceError::NotClosed("mesh has no faces".into()));
        }
        mesh.check_closed()?;
        let nf = mesh.faces.len();
        let face_areas: Vec<f64> = (0..nf).map(|f| mesh.face_area(f)).collect();
        let mean_area = face_areas.iter().sum::<f64>() / nf as f64;
        for (face, &area) in face_areas.iter().enumerate() {
            if !(area >= DEGENERATE_AREA_FRACTION * mean_area) {
                return Err(SurfaceError::DegenerateFace { face, area });
            }
        }
        let volume = mesh.signed_volume();
        if volume <= 0.0 {
            return Err(SurfaceError::NotOutward(volume));
        }

        let nv = mesh.vertices.len();
        let mut hat_gradients = Vec::with_capacity(nf);
        let mut vertex_area = vec![0.0; nv];
        let mut normal_sum = vec![Vec3::zeros(); nv];
        for (fi, f) in mesh.faces.iter().enumerate() {
            let p = f.map(|i| mesh.vertices[i]);
            let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let nrm = cross / cross.norm();
            let double_area = 2.0 * face_areas[fi];
            let mut grads = [Vec3::zeros(); 3];
            for k in 0..3 {
                let opposite = p[(k + 2) % 3] - p[(k + 1) % 3];
                grads[k] = nrm.cross(&opposite) / double_area;
                let e1 = (p[(k + 1) % 3] - p[k]).normalize();
                let e2 = (p[(k + 2) % 3] - p[k]).normalize();
                let angle = e1.dot(&e2).clamp(-1.0, 1.0).acos();
                normal_sum[f[k]] += nrm * angle;
                vertex_area[f[k]] += face_areas[fi];
            }
            hat_gradients.push(grads);
        }
        let mut normals = Vec::with_capacity(nv);
        for (v, s) in normal_sum.iter().enumerate() {
            let len = s.norm();
            if len == 0.0 {
                return Err(SurfaceError::NotClosed(format!("vertex {v} belongs to no face")));
            }
            normals.push(s / len * NORMAL_ORIENTATION);
        }
        let weights = vertex_area.iter().map(|a| a / 3.0).collect();
        let center = mesh.vertices.iter().sum::<Vec3>() / nv as f64;
        let data = MeshData { mesh: mesh.clone(), order, face_areas, hat_gradients, vertex_area };
        let mut surface = Self {
            kind: SurfaceKind::TriangleMesh(mesh.clone()),
            center,
            n_theta: 0,
            n_phi: 0,
            nodes: mesh.vertices,
            normals,
            weights,
            curvature: Vec::new(),
            mesh: Some(data),
        };
        let (normals, curvature) = fit_quadratic_patches(&surface.mesh.as_ref().unwrap().mesh, &surface.normals)?;
        surface.normals = normals;
        surface.curvature = curvature;
        Ok(surface)
    }

    fn parametric(kind: SurfaceKind, center: Vec3, n_theta: usize, n_phi: usize) -> Result<Self, SurfaceError> {
        if n_theta == 0 || n_phi == 0 {
            return Err(SurfaceError::InvalidParameter("quadrature resolution must be positive".into()));
        }
        let (a, b, c) = match kind {
            SurfaceKind::ParametricSphere { radius } => (radius, radius, radius),
            SurfaceKind::ParametricEllipsoid { a, b, c } => (a, b, c),
            SurfaceKind::TriangleMesh(_) => unreachable!("parametric constructor called with a mesh"),
        };
        if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(SurfaceError::InvalidParameter(format!("semi-axes must be positive, got ({a}, {b}, {c})")));
        }
        let theta = Rule::gauss_legendre_on(n_theta, 0.0, PI);
        let phi = Rule::periodic_trapezoid(n_phi, 0.0, 2.0 * PI);
        let cap = n_theta * n_phi;
        let (mut nodes, mut normals, mut weights, mut curvature) =
            (Vec::with_capacity(cap), Vec::with_capacity(cap), Vec::with_capacity(cap), Vec::with_capacity(cap));
        let d = Vec3::new(1.0 / (a * a), 1.0 / (b * b), 1.0 / (c * c));
        for (th, wt) in theta.iter() {
            let (st, ct) = th.sin_cos();
            for (ph, wp) in phi.iter() {
                let (sp, cp) = ph.sin_cos();
                let x = Vec3::new(a * st * cp, b * st * sp, c * ct);
                let x_th = Vec3::new(a * ct * cp, b * ct * sp, -c * st);
                let x_ph = Vec3::new(-a * st * sp, b * st * cp, 0.0);
                let jac = x_th.cross(&x_ph).norm();
                let g = x.component_mul(&d);
                let gn = g.norm();
                let h = -(d.sum() * gn * gn - g.dot(&g.component_mul(&d))) / (gn * gn * gn);
                nodes.push(x + center);
                normals.push(g / gn * NORMAL_ORIENTATION);
                weights.push(wt * wp * jac);
                curvature.push(h * NORMAL_ORIENTATION);
            }
        }
        Ok(Self { kind, center, n_theta, n_phi, nodes, normals, weights, curvature, mesh: None })
    }

    /// Rigidly translate the surface.
    pub fn translated(&self, shift: &Vec3) -> Self {
        let mut s = self.clone();
        s.center += shift;
        for x in &mut s.nodes {
            *x += shift;
        }
        if let (SurfaceKind::TriangleMesh(m), Some(data)) = (&mut s.kind, &mut s.mesh) {
            for v in &mut m.vertices {
                *v += shift;
            }
            data.mesh = m.clone();
        }
        s
    }

    /// Parametric surface centered at `center`.
    pub fn with_center(mut self, center: Vec3) -> Self {
        let shift = center - self.center;
        self = self.translated(&shift);
        self
    }

    pub fn kind(&self) -> &SurfaceKind {
        &self.kind
    }

    pub fn is_parametric(&self) -> bool {
        self.mesh.is_none()
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    /// Quadrature weight per node (lumped vertex area in mesh mode).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn node(&self, i: usize) -> Result<Vec3, SurfaceError> {
        self.check_node(i).map(|_| self.nodes[i])
    }

    pub fn normal(&self, i: usize) -> Result<Vec3, SurfaceError> {
        self.check_node(i).map(|_| self.normals[i])
    }

    /// Mean curvature at a node.
    pub fn curvature(&self, i: usize) -> Result<f64, SurfaceError> {
        self.check_node(i).map(|_| self.curvature[i])
    }

    /// Mesh connectivity, when the surface is triangulated.
    pub fn mesh(&self) -> Option<&TriMesh> {
        self.mesh.as_ref().map(|m| &m.mesh)
    }

    /// Longest mesh edge, or the largest angular spacing times the bounding radius.
    pub fn resolution(&self) -> f64 {
        match &self.mesh {
            Some(m) => m.mesh.max_edge(),
            None => self.bounding_radius() * (PI / self.n_theta as f64).max(2.0 * PI / self.n_phi as f64),
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        match &self.kind {
            SurfaceKind::ParametricSphere { radius } => *radius,
            SurfaceKind::ParametricEllipsoid { a, b, c } => a.max(*b).max(*c),
            SurfaceKind::TriangleMesh(m) => m.vertices.iter().map(|v| (v - self.center).norm()).fold(0.0, f64::max),
        }
    }

    fn check_node(&self, i: usize) -> Result<(), SurfaceError> {
        if i < self.nodes.len() {
            Ok(())
        } else {
            Err(SurfaceError::NodeOutOfRange { node: i, len: self.nodes.len() })
        }
    }

    fn check_len(&self, got: usize) -> Result<(), SurfaceError> {
        if got == self.nodes.len() {
            Ok(())
        } else {
            Err(SurfaceError::LengthMismatch { expected: self.nodes.len(), got })
        }
    }

    fn fd_step(&self) -> f64 {
        PARAMETRIC_FD_STEP * self.bounding_radius()
    }

    fn projector(&self, i: usize) -> Mat3 {
        let n = self.normals[i];
        Mat3::identity() - n * n.transpose()
    }

    /// Face-area-weighted average of per-face divergences of a piecewise-linear field.
    fn mesh_divergence(&self, values: &[Vec3]) -> Vec<f64> {
        let data = self.mesh.as_ref().expect("mesh data");
        let mut acc = vec![0.0; self.nodes.len()];
        for (fi, f) in data.mesh.faces.iter().enumerate() {
            let g = &data.hat_gradients[fi];
            let div: f64 = (0..3).map(|k| values[f[k]].dot(&g[k])).sum();
            for &v in f {
                acc[v] += data.face_areas[fi] * div;
            }
        }
        acc.iter().zip(&data.vertex_area).map(|(a, w)| a / w).collect()
    }

    fn mesh_gradient(&self, values: &[f64]) -> Vec<Vec3> {
        let data = self.mesh.as_ref().expect("mesh data");
        let mut acc = vec![Vec3::zeros(); self.nodes.len()];
        for (fi, f) in data.mesh.faces.iter().enumerate() {
            let g = &data.hat_gradients[fi];
            let grad: Vec3 = (0..3).map(|k| g[k] * values[f[k]]).sum();
            for &v in f {
                acc[v] += grad * data.face_areas[fi];
            }
        }
        acc.iter()
            .enumerate()
            .map(|(v, a)| self.projector(v) * (a / data.vertex_area[v]))
            .collect()
    }

    fn sample_scalar(&self, f: ScalarInput<'_>) -> Result<Vec<f64>, SurfaceError> {
        match f {
            ScalarInput::Ambient(g) => Ok(self.nodes.iter().map(g).collect()),
            ScalarInput::Nodal(v) => {
                self.check_len(v.len())?;
                Ok(v.to_vec())
            }
        }
    }

    fn sample_vector(&self, f: VectorInput<'_>) -> Result<Vec<Vec3>, SurfaceError> {
        match f {
            VectorInput::Ambient(g) => Ok(self.nodes.iter().map(g).collect()),
            VectorInput::Nodal(v) => {
                self.check_len(v.len())?;
                Ok(v.to_vec())
            }
        }
    }
}

/// Vertex normals and mean curvature from least-squares quadratic height fits over each
/// vertex's two-ring, in the frame of the angle-weighted normal.
///
/// The returned normal is that of the fitted patch at the vertex, and the curvature is
/// `-div_G` of the patch's normal field there. Two fitting sweeps are made so the second
/// frame is aligned with the improved normal.
fn fit_quadratic_patches(mesh: &TriMesh, initial: &[Vec3]) -> Result<(Vec<Vec3>, Vec<f64>), SurfaceError> {
    use nalgebra::{DMatrix, DVector};
    let nv = mesh.vertices.len();
    let mut ring1: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for f in &mesh.faces {
        for k in 0..3 {
            for j in 1..3 {
                let (a, b) = (f[k], f[(k + j) % 3]);
                if !ring1[a].contains(&b) {
                    ring1[a].push(b);
                }
            }
        }
    }
    let mut normals = initial.to_vec();
    let mut curvature = vec![0.0; nv];
    for _sweep in 0..2 {
        for v in 0..nv {
            let mut nbrs: Vec<usize> = ring1[v].clone();
            for &w in &ring1[v] {
                for &u in &ring1[w] {
                    if u != v && !nbrs.contains(&u) {
                        nbrs.push(u);
                    }
                }
            }
            let n = normals[v];
            let helper = if n[0].abs() < 0.9 { Vec3::x() } else { Vec3::y() };
            let t1 = n.cross(&helper).normalize();
            let t2 = n.cross(&t1);
            let scale = nbrs
                .iter()
                .map(|&u| (mesh.vertices[u] - mesh.vertices[v]).norm())
                .fold(0.0, f64::max);
            let rows = nbrs.len();
            if rows < 5 {
                return Err(SurfaceError::NotClosed(format!("vertex {v} has too few neighbours to fit a patch")));
            }
            let mut a = DMatrix::zeros(rows, 5);
            let mut rhs = DVector::zeros(rows);
            for (r, &u) in nbrs.iter().enumerate() {
                let d = (mesh.vertices[u] - mesh.vertices[v]) / scale;
                let (p, q, z) = (d.dot(&t1), d.dot(&t2), d.dot(&n));
                a[(r, 0)] = p * p;
                a[(r, 1)] = p * q;
                a[(r, 2)] = q * q;
                a[(r, 3)] = p;
                a[(r, 4)] = q;
                rhs[r] = z;
            }
            let coef = a
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .map_err(|e| SurfaceError::NotClosed(format!("patch fit failed at vertex {v}: {e}")))?;
            let (fuu, fuv, fvv) = (2.0 * coef[0] / scale, coef[1] / scale, 2.0 * coef[2] / scale);
            let (fu, fv) = (coef[3], coef[4]);
            let g = 1.0 + fu * fu + fv * fv;
            curvature[v] = ((1.0 + fv * fv) * fuu - 2.0 * fu * fv * fuv + (1.0 + fu * fu) * fvv) / g.powf(1.5);
            normals[v] = ((n - t1 * fu - t2 * fv) / g.sqrt()).normalize();
        }
    }
    Ok((normals, curvature))
}

/// `(I - n n^T) vec` at a node.
pub fn tangential_project(surface: &ClosedSurface, node: usize, vec: &Vec3) -> Result<Vec3, SurfaceError> {
    let n = surface.normal(node)?;
    Ok(vec - n * n.dot(vec))
}

/// Tangential gradient `P grad f` at every node.
pub fn surface_gradient(surface: &ClosedSurface, f: ScalarInput<'_>) -> Result<SurfaceField, SurfaceError> {
    if surface.is_parametric() {
        let ScalarInput::Ambient(g) = f else {
            return Err(SurfaceError::MissingExtension);
        };
        let h = surface.fd_step();
        let out = surface
            .nodes
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let grad = Vec3::from_fn(|k, _| {
                    central4(
                        |s| {
                            let mut y = *x;
                            y[k] += s;
                            g(&y)
                        },
                        h,
                    )
                });
                surface.projector(i) * grad
            })
            .collect();
        return Ok(SurfaceField::Vector(out));
    }
    let values = surface.sample_scalar(f)?;
    Ok(SurfaceField::Vector(surface.mesh_gradient(&values)))
}

/// `div_G V = tr(J) - n^T J n` at every node.
pub fn surface_divergence(surface: &ClosedSurface, v: VectorInput<'_>) -> Result<SurfaceField, SurfaceError> {
    if surface.is_parametric() {
        let VectorInput::Ambient(g) = v else {
            return Err(SurfaceError::MissingExtension);
        };
        let h = surface.fd_step();
        let out = surface
            .nodes
            .iter()
            .zip(&surface.normals)
            .map(|(x, n)| {
                let mut jac = Mat3::zeros();
                for k in 0..3 {
                    let col = central4_vec(
                        |s| {
                            let mut y = *x;
                            y[k] += s;
                            g(&y)
                        },
                        h,
                    );
                    jac.set_column(k, &col);
                }
                jac.trace() - n.dot(&(jac * n))
            })
            .collect();
        return Ok(SurfaceField::Scalar(out));
    }
    let values = surface.sample_vector(v)?;
    Ok(SurfaceField::Scalar(surface.mesh_divergence(&values)))
}

/// Mean curvature `H = -div_G n` per node.
pub fn mean_curvature(surface: &ClosedSurface) -> SurfaceField {
    SurfaceField::Scalar(surface.curvature.clone())
}

/// Quadrature value of the surface integral of `f`.
///
/// Nodal data on a mesh is integrated as its piecewise-linear interpolant, which is exact.
/// Ambient callbacks on a mesh are sampled with the configured per-triangle rule.
pub fn surface_integral(surface: &ClosedSurface, f: ScalarInput<'_>) -> Result<f64, SurfaceError> {
    match (&surface.mesh, f) {
        (Some(data), ScalarInput::Ambient(g)) => {
            let mut total = 0.0;
            for (fi, face) in data.mesh.faces.iter().enumerate() {
                let p = face.map(|i| data.mesh.vertices[i]);
                let avg = if data.order == 1 {
                    g(&((p[0] + p[1] + p[2]) / 3.0))
                } else {
                    (0..3)
                        .map(|k| g(&(p[k] * (2.0 / 3.0) + p[(k + 1) % 3] / 6.0 + p[(k + 2) % 3] / 6.0)))
                        .sum::<f64>()
                        / 3.0
                };
                total += data.face_areas[fi] * avg;
            }
            Ok(total)
        }
        _ => {
            let values = surface.sample_scalar(f)?;
            Ok(values.iter().zip(&surface.weights).map(|(v, w)| v * w).sum())
        }
    }
}

/// The two sides of the surface divergence theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceTheoremTerms {
    /// Integral of `div_G V`.
    pub divergence: f64,
    /// Integral of `-H V.n`.
    pub curvature: f64,
}

impl DivergenceTheoremTerms {
    pub fn residual(&self) -> f64 {
        (self.divergence - self.curvature).abs()
    }
}

pub fn divergence_theorem_terms(surface: &ClosedSurface, v: VectorInput<'_>) -> Result<DivergenceTheoremTerms, SurfaceError> {
    let div = surface_divergence(surface, v)?;
    let div = div.as_scalar().expect("scalar divergence");
    let values = surface.sample_vector(v)?;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..surface.len() {
        let w = surface.weights[i];
        lhs += w * div[i];
        rhs -= w * surface.curvature[i] * values[i].dot(&surface.normals[i]);
    }
    Ok(DivergenceTheoremTerms { divergence: lhs, curvature: rhs })
}

/// `|int div_G V + int H V.n|`.
pub fn divergence_theorem_residual(surface: &ClosedSurface, v: VectorInput<'_>) -> Result<f64, SurfaceError> {
    divergence_theorem_terms(surface, v).map(|t| t.residual())
}

/// Write `node_id,x,y,z,value` rows (vector fields get `value_x,value_y,value_z`).
pub fn write_csv(surface: &ClosedSurface, field: &SurfaceField, out: impl Write) -> Result<(), Box<dyn std::error::Error>> {
    surface.check_len(field.len())?;
    let mut w = csv::Writer::from_writer(out);
    match field {
        SurfaceField::Scalar(values) => {
            w.write_record(["node_id", "x", "y", "z", "value"])?;
            for (i, (x, v)) in surface.nodes.iter().zip(values).enumerate() {
                w.write_record([i.to_string(), fmt(x[0]), fmt(x[1]), fmt(x[2]), fmt(*v)])?;
            }
        }
        SurfaceField::Vector(values) => {
            w.write_record(["node_id", "x", "y", "z", "value_x", "value_y", "value_z"])?;
            for (i, (x, v)) in surface.nodes.iter().zip(values).enumerate() {
                w.write_record([i.to_string(), fmt(x[0]), fmt(x[1]), fmt(x[2]), fmt(v[0]), fmt(v[1]), fmt(v[2])])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// Exact mean curvature of the ellipsoid `(x/a)^2 + (y/b)^2 + (z/c)^2 = 1` at a point on it.
pub fn ellipsoid_mean_curvature(a: f64, b: f64, c: f64, x: &Vec3) -> f64 {
    let d = Vec3::new(1.0 / (a * a), 1.0 / (b * b), 1.0 / (c * c));
    let g = x.component_mul(&d);
    let gn = g.norm();
    -(d.sum() * gn * gn - g.dot(&g.component_mul(&d))) / gn.powi(3)
}
