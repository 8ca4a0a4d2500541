//! The broken polynomial space on a triangulation: mesh, affine maps, the
//! tabulated reference basis and precomputed face traces.

use crate::error::Result;
use crate::mesh::{build_affine_maps, face_trace_nodes, AffineMap, FaceRef, Triangulation};
use crate::specfun::{DubinerBasis, QuadRule};

/// Basis traces at one face quadrature node, for one adjacent element.
#[derive(Debug, Clone)]
pub struct SideTrace {
    pub values: Vec<f64>,
    /// Physical gradients.
    pub grads: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct FaceNode {
    pub point: [f64; 2],
    pub weight: f64,
    pub sides: Vec<SideTrace>,
}

#[derive(Debug)]
pub struct DgSpace {
    mesh: Triangulation,
    maps: Vec<AffineMap>,
    basis: DubinerBasis,
    interior: Vec<Vec<FaceNode>>,
    boundary: Vec<Vec<FaceNode>>,
}

impl DgSpace {
    /// Degree-`p` space with volume rules exact to degree `2p + 2` and
    /// `2p + 2` Gauss points per face. The volume rule is symmetrized so that
    /// the discrete operators commute with the mesh reflection `x <-> y`.
    pub fn new(mesh: Triangulation, p: usize) -> Result<Self> {
        Self::with_quadrature(mesh, p, 2 * p + 2, 2 * p + 2)
    }

    pub fn with_quadrature(mesh: Triangulation, p: usize, volume_exactness: usize, face_points: usize) -> Result<Self> {
        let maps = build_affine_maps(&mesh)?;
        let basis = DubinerBasis::tabulate(p, QuadRule::triangle(volume_exactness)?.symmetrized())?;
        let side = |k: usize, r: [f64; 2]| -> Result<SideTrace> {
            let values = basis.eval_all(r[0], r[1])?;
            let grads = basis
                .grad_all(r[0], r[1])?
                .into_iter()
                .map(|g| maps[k].push_gradient(g))
                .collect();
            Ok(SideTrace { values, grads })
        };
        let mut interior = Vec::with_capacity(mesh.interior_faces.len());
        for (f, face) in mesh.interior_faces.iter().enumerate() {
            let nodes = face_trace_nodes(&mesh, &maps, FaceRef::Interior(f), face_points)?;
            interior.push(
                nodes
                    .into_iter()
                    .map(|n| {
                        Ok(FaceNode {
                            point: n.point,
                            weight: n.weight,
                            sides: vec![
                                side(face.elems[0], n.reference[0])?,
                                side(face.elems[1], n.reference[1])?,
                            ],
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let mut boundary = Vec::with_capacity(mesh.boundary_faces.len());
        for (f, face) in mesh.boundary_faces.iter().enumerate() {
            let nodes = face_trace_nodes(&mesh, &maps, FaceRef::Boundary(f), face_points)?;
            boundary.push(
                nodes
                    .into_iter()
                    .map(|n| {
                        Ok(FaceNode {
                            point: n.point,
                            weight: n.weight,
                            sides: vec![side(face.elem, n.reference[0])?],
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Self {
            mesh,
            maps,
            basis,
            interior,
            boundary,
        })
    }

    pub fn mesh(&self) -> &Triangulation {
        &self.mesh
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn basis(&self) -> &DubinerBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn n_loc(&self) -> usize {
        self.basis.n_loc()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    /// Global number of degrees of freedom.
    pub fn n_dofs(&self) -> usize {
        self.n_elements() * self.n_loc()
    }

    #[inline]
    pub fn dof(&self, element: usize, mode: usize) -> usize {
        element * self.n_loc() + mode
    }

    pub fn interior_nodes(&self, face: usize) -> &[FaceNode] {
        &self.interior[face]
    }

    pub fn boundary_nodes(&self, face: usize) -> &[FaceNode] {
        &self.boundary[face]
    }

    /// Physical location of volume node `q` in element `k`.
    #[inline]
    pub fn volume_point(&self, k: usize, q: usize) -> [f64; 2] {
        self.maps[k].to_physical(self.basis.rule().points()[q])
    }

    /// Penalty scale `alpha p^2 / h_F` of an interior face.
    pub fn penalty_scale(&self, alpha: f64, face: usize) -> f64 {
        let p = self.degree() as f64;
        alpha * p * p / self.mesh.interior_faces[face].h
    }
}
