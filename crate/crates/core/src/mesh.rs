//! Structured triangulations of the unit square, affine element maps and
//! face connectivity.
//!
//! Local edge `e` of an element joins local vertices `e` and `(e + 1) % 3`,
//! which matches the reference edge numbering in [`crate::specfun`].

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::specfun::{gauss_legendre, reference_edge_point};

pub const MAX_LEVEL: u32 = 12;

/// A face shared by two elements. `normal` points from `elems[0]` into `elems[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorFace {
    pub elems: [usize; 2],
    pub local_edges: [usize; 2],
    pub normal: [f64; 2],
    pub length: f64,
    /// Face mesh size used by the penalty: smaller adjacent element diameter.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFace {
    pub elem: usize,
    pub local_edge: usize,
    /// Outward unit normal.
    pub normal: [f64; 2],
    pub length: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceRef {
    Interior(usize),
    Boundary(usize),
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub elements: Vec<[usize; 3]>,
    pub interior_faces: Vec<InteriorFace>,
    pub boundary_faces: Vec<BoundaryFace>,
    pub level: u32,
}

impl Triangulation {
    /// Uniform mesh of `(0,1)^2` with `(2^level)^2` squares, each cut along the
    /// diagonal parallel to `(0,0)-(1,1)`.
    pub fn unit_square(level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::RefinementLevel(level));
        }
        let n = 1usize << level;
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                elements.push([v00, v10, v11]);
                elements.push([v00, v11, v01]);
            }
        }
        let mut mesh = Self {
            vertices,
            elements,
            interior_faces: Vec::new(),
            boundary_faces: Vec::new(),
            level,
        };
        mesh.build_faces();
        Ok(mesh)
    }

    fn build_faces(&mut self) {
        let mut open: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let diam: Vec<f64> = (0..self.elements.len()).map(|k| self.diameter(k)).collect();
        let mut interior = Vec::new();
        for (k, tri) in self.elements.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some((k1, e1)) = open.remove(&key) {
                    interior.push((k1, e1, k, e));
                } else {
                    open.insert(key, (k, e));
                }
            }
        }
        interior.sort_unstable();
        self.interior_faces = interior
            .into_iter()
            .map(|(k1, e1, k2, e2)| {
                let (normal, length) = self.edge_normal(k1, e1);
                InteriorFace {
                    elems: [k1, k2],
                    local_edges: [e1, e2],
                    normal,
                    length,
                    h: diam[k1].min(diam[k2]),
                }
            })
            .collect();
        let mut boundary: Vec<(usize, usize)> = open.into_values().collect();
        boundary.sort_unstable();
        self.boundary_faces = boundary
            .into_iter()
            .map(|(k, e)| {
                let (normal, length) = self.edge_normal(k, e);
                BoundaryFace {
                    elem: k,
                    local_edge: e,
                    normal,
                    length,
                    h: diam[k],
                }
            })
            .collect();
    }

    /// Outward unit normal and length of local edge `e` of element `k`.
    fn edge_normal(&self, k: usize, e: usize) -> ([f64; 2], f64) {
        let tri = self.elements[k];
        let a = self.vertices[tri[e]];
        let b = self.vertices[tri[(e + 1) % 3]];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        // CCW ordering: the outward normal is the tangent rotated clockwise.
        ([dy / len, -dx / len], len)
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_vertices(&self, k: usize) -> [[f64; 2]; 3] {
        let t = self.elements[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn signed_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.element_vertices(k);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Longest edge of element `k`.
    pub fn diameter(&self, k: usize) -> f64 {
        let v = self.element_vertices(k);
        (0..3)
            .map(|e| {
                let (a, b) = (v[e], v[(e + 1) % 3]);
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self, k: usize) -> [f64; 2] {
        let [a, b, c] = self.element_vertices(k);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Nominal granularity `2^-level`.
    pub fn granularity(&self) -> f64 {
        1.0 / (1u64 << self.level) as f64
    }

    /// Element containing `point` (closed unit square), using the structured layout.
    pub fn locate(&self, point: [f64; 2]) -> Option<usize> {
        let n = 1usize << self.level;
        let [x, y] = point;
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return None;
        }
        let i = ((x * n as f64).floor() as usize).min(n - 1);
        let j = ((y * n as f64).floor() as usize).min(n - 1);
        let lx = x * n as f64 - i as f64;
        let ly = y * n as f64 - j as f64;
        let base = 2 * (j * n + i);
        Some(if ly <= lx { base } else { base + 1 })
    }
}

/// Affine map `x = origin + J xi_hat` from the reference triangle to an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub origin: [f64; 2],
    /// Row-major Jacobian; columns are `v1 - v0` and `v2 - v0`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// `J^{-T}`, row-major.
    pub inv_t: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn from_vertices(v: [[f64; 2]; 3]) -> Option<Self> {
        let jac = [
            [v[1][0] - v[0][0], v[2][0] - v[0][0]],
            [v[1][1] - v[0][1], v[2][1] - v[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det <= 0.0 || !det.is_finite() {
            return None;
        }
        let inv_t = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        Some(Self {
            origin: v[0],
            jac,
            det,
            inv_t,
        })
    }

    #[inline]
    pub fn to_physical(&self, r: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    #[inline]
    pub fn to_reference(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        // J^{-1} = (J^{-T})^T
        [
            self.inv_t[0][0] * d[0] + self.inv_t[1][0] * d[1],
            self.inv_t[0][1] * d[0] + self.inv_t[1][1] * d[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    #[inline]
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}

pub fn build_affine_maps(mesh: &Triangulation) -> Result<Vec<AffineMap>> {
    (0..mesh.n_elements())
        .map(|k| AffineMap::from_vertices(mesh.element_vertices(k)).ok_or(Error::DegenerateElement(k)))
        .collect()
}

/// Quadrature node on a face, seen from both adjacent elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceNode {
    pub point: [f64; 2],
    /// Physical weight (includes the face length).
    pub weight: f64,
    /// Reference coordinates in the first element and, for interior faces, the second.
    pub reference: [[f64; 2]; 2],
}

/// Gauss-Legendre nodes on a face, parametrized from the first element's edge.
///
/// For interior faces the second element's reference points are obtained by
/// pulling the same physical nodes back through its affine map, so the k-th
/// node is geometrically identical on both sides.
pub fn face_trace_nodes(
    mesh: &Triangulation,
    maps: &[AffineMap],
    face: FaceRef,
    n_points: usize,
) -> Result<Vec<TraceNode>> {
    let (k1, e1, other, length) = match face {
        FaceRef::Interior(f) => {
            let face = mesh.interior_faces.get(f).ok_or(Error::FaceIndex {
                index: f,
                count: mesh.interior_faces.len(),
            })?;
            (face.elems[0], face.local_edges[0], Some(face.elems[1]), face.length)
        }
        FaceRef::Boundary(f) => {
            let face = mesh.boundary_faces.get(f).ok_or(Error::FaceIndex {
                index: f,
                count: mesh.boundary_faces.len(),
            })?;
            (face.elem, face.local_edge, None, face.length)
        }
    };
    let (x, w) = gauss_legendre(n_points.max(1));
    let m1 = &maps[k1];
    Ok(x.iter()
        .zip(&w)
        .map(|(&x, &w)| {
            let s = 0.5 * (1.0 + x);
            let r1 = reference_edge_point(e1, s);
            let point = m1.to_physical(r1);
            let r2 = other.map_or(r1, |k2| maps[k2].to_reference(point));
            TraceNode {
                point,
                weight: 0.5 * w * length,
                reference: [r1, r2],
            }
        })
        .collect())
}
