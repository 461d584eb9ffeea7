//! Closed triangle meshes: OFF ingestion, validation and icosphere generation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::SurfaceError;
use crate::field::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        Self { vertices, faces }
    }

    /// Parse OFF text: `OFF`, then `nv nf ne`, then vertex rows and `3 i j k` face rows.
    pub fn parse_off(text: &str) -> Result<Self, SurfaceError> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .flat_map(str::split_whitespace);
        let bad = |msg: &str| SurfaceError::Off(msg.to_string());
        match tokens.next() {
            Some("OFF") => {}
            other => return Err(bad(&format!("expected OFF header, found {other:?}"))),
        }
        let mut next_num = |what: &str| -> Result<f64, SurfaceError> {
            tokens
                .next()
                .ok_or_else(|| bad(&format!("unexpected end of file reading {what}")))?
                .parse::<f64>()
                .map_err(|e| bad(&format!("invalid {what}: {e}")))
        };
        let nv = next_num("vertex count")? as usize;
        let nf = next_num("face count")? as usize;
        let _ne = next_num("edge count")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let x = next_num("vertex coordinate")?;
            let y = next_num("vertex coordinate")?;
            let z = next_num("vertex coordinate")?;
            vertices.push(Vec3::new(x, y, z));
        }
        let mut faces = Vec::with_capacity(nf);
        for f in 0..nf {
            let k = next_num("face arity")? as usize;
            if k != 3 {
                return Err(bad(&format!("face {f} has {k} vertices; only triangles are supported")));
            }
            let mut tri = [0usize; 3];
            for slot in &mut tri {
                let idx = next_num("face index")? as usize;
                if idx >= nv {
                    return Err(bad(&format!("face {f} references vertex {idx} of {nv}")));
                }
                *slot = idx;
            }
            faces.push(tri);
        }
        Ok(Self { vertices, faces })
    }

    pub fn read_off(path: impl AsRef<Path>) -> Result<Self, SurfaceError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SurfaceError::Off(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse_off(&text)
    }

    pub fn to_off(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "OFF\n{} {} 0", self.vertices.len(), self.faces.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2]);
        }
        for f in &self.faces {
            let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
        }
        s
    }

    /// Every undirected edge must border exactly two faces, with opposite orientation.
    pub fn check_closed(&self) -> Result<(), SurfaceError> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let e = (f[k], f[(k + 1) % 3]);
                if directed.insert(e, fi).is_some() {
                    return Err(SurfaceError::NotClosed(format!(
                        "directed edge {:?} appears twice (faces inconsistently oriented or non-manifold)",
                        e
                    )));
                }
            }
        }
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                return Err(SurfaceError::NotClosed(format!("edge ({a}, {b}) borders only one face")));
            }
        }
        Ok(())
    }

    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f].map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Subdivided icosahedron projected to the unit sphere; `level` 0 is the icosahedron.
    pub fn icosphere(level: usize) -> Self {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            (-1.0, phi, 0.0),
            (1.0, phi, 0.0),
            (-1.0, -phi, 0.0),
            (1.0, -phi, 0.0),
            (0.0, -1.0, phi),
            (0.0, 1.0, phi),
            (0.0, -1.0, -phi),
            (0.0, 1.0, -phi),
            (phi, 0.0, -1.0),
            (phi, 0.0, 1.0),
            (-phi, 0.0, -1.0),
            (-phi, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
                let key = (a.min(b), a.max(b));
                *midpoint.entry(key).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                    verts.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        Self { vertices, faces }
    }

    /// Icosphere mapped to the ellipsoid with the given semi-axes.
    pub fn ellipsoid(level: usize, semi_axes: Vec3) -> Self {
        let mut mesh = Self::icosphere(level);
        for v in &mut mesh.vertices {
            *v = v.component_mul(&semi_axes);
        }
        mesh
    }

    /// Longest edge length.
    pub fn max_edge(&self) -> f64 {
        self.faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| (f[k], f[(k + 1) % 3])))
            .map(|(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .fold(0.0, f64::max)
    }
}
