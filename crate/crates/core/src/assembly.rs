//! Assembly of the DG algebraic objects: mass, interior-penalty stiffness,
//! FitzHugh-Nagumo reaction matrix and forcing vectors, plus modal projection
//! and evaluation of fields.
//!
//! Global degrees of freedom are element-major: dof `k * n_loc + m` is mode
//! `m` of element `k`. Physical basis functions are the reference Dubiner
//! modes composed with the inverse element map, so they are orthogonal on
//! each element with `int_K phi_m phi_n = |det J_K| delta_mn`.
//!
//! The stiffness matrix is `A = K - W^T - theta W + S` with
//!
//! ```text
//! K_jk = sum_K  int_K  Sigma grad phi_k . grad phi_j
//! W_jk = sum_F  int_F  [[phi_k]] . {{Sigma grad phi_j}}
//! S_jk = sum_F  int_F  gamma_F [[phi_k]] . [[phi_j]],   gamma_F = alpha p^2 / h_F  n^T Sigma n
//! ```
//!
//! where face sums run over interior faces only. Neumann data enter through
//! the forcing vector.

use std::f64::consts::SQRT_2;

use crate::dynamics::ModelParams;
use crate::error::{Error, Result};
use crate::space::DgSpace;
use crate::sparse::CsrMatrix;

/// Coefficients of a DG function in the global modal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalField {
    coeffs: Vec<f64>,
    n_loc: usize,
}

impl ModalField {
    pub fn zeros(space: &DgSpace) -> Self {
        Self {
            coeffs: vec![0.0; space.n_dofs()],
            n_loc: space.n_loc(),
        }
    }

    pub fn from_coeffs(space: &DgSpace, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: space.n_dofs(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            coeffs,
            n_loc: space.n_loc(),
        })
    }

    /// The constant function `c`: `c / sqrt(2)` on every constant mode.
    pub fn constant(space: &DgSpace, c: f64) -> Self {
        let mut f = Self::zeros(space);
        for k in 0..space.n_elements() {
            f.coeffs[space.dof(k, 0)] = c / SQRT_2;
        }
        f
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn n_loc(&self) -> usize {
        self.n_loc
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn element(&self, k: usize) -> &[f64] {
        &self.coeffs[k * self.n_loc..(k + 1) * self.n_loc]
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + s * b).collect(),
            n_loc: self.n_loc,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Values at the volume quadrature nodes of element `k`.
    pub fn values_at_nodes(&self, space: &DgSpace, k: usize) -> Vec<f64> {
        let basis = space.basis();
        let local = self.element(k);
        (0..basis.rule().len())
            .map(|q| dot(basis.values_at_node(q), local))
            .collect()
    }

    /// Value at a physical point of the unit square.
    pub fn evaluate_at(&self, space: &DgSpace, point: [f64; 2]) -> Option<f64> {
        let k = space.mesh().locate(point)?;
        let r = space.maps()[k].to_reference(point);
        let local = self.element(k);
        Some(
            space
                .basis()
                .modes()
                .iter()
                .zip(local)
                .map(|(&(i, j), c)| c * crate::specfun::dubiner_eval_closed(i, j, r[0].max(0.0), r[1].clamp(0.0, 1.0)))
                .sum(),
        )
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Constant symmetric positive semi-definite conductivity tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionTensor([[f64; 2]; 2]);

impl DiffusionTensor {
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self> {
        if m[0][1] != m[1][0] {
            return Err(Error::param("diffusion tensor", "must be symmetric"));
        }
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if m.iter().flatten().any(|v| !v.is_finite()) || m[0][0] < 0.0 || m[1][1] < 0.0 || tr < 0.0 || det < 0.0 {
            return Err(Error::param("diffusion tensor", "must be positive semi-definite"));
        }
        Ok(Self(m))
    }

    pub fn isotropic(s: f64) -> Self {
        Self([[s, 0.0], [0.0, s]])
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.0
    }

    pub fn scaled(&self, s: f64) -> Self {
        let m = self.0;
        Self([[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]])
    }

    #[inline]
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// `n^T Sigma n`.
    pub fn normal_component(&self, n: [f64; 2]) -> f64 {
        let s = self.apply(n);
        s[0] * n[0] + s[1] * n[1]
    }
}

/// Interior-penalty variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theta {
    /// SIP, `theta = 1`.
    Symmetric,
    /// IIP, `theta = 0`.
    Incomplete,
    /// NIP, `theta = -1`.
    NonSymmetric,
}

impl Theta {
    pub fn value(self) -> f64 {
        match self {
            Theta::Symmetric => 1.0,
            Theta::Incomplete => 0.0,
            Theta::NonSymmetric => -1.0,
        }
    }

    pub fn from_int(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Theta::Symmetric),
            0 => Ok(Theta::Incomplete),
            -1 => Ok(Theta::NonSymmetric),
            _ => Err(Error::param("theta", format!("must be -1, 0 or 1, got {v}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    pub alpha: f64,
    pub theta: Theta,
}

impl PenaltySpec {
    pub fn new(alpha: f64, theta: Theta) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", "penalty parameter must be positive"));
        }
        Ok(Self { alpha, theta })
    }
}

/// Diagonal mass matrix; every mode of element `K` gets `|det J_K|`.
pub fn assemble_mass(space: &DgSpace) -> CsrMatrix {
    let n_loc = space.n_loc();
    let diag: Vec<f64> = space
        .maps()
        .iter()
        .flat_map(|m| std::iter::repeat_n(m.det, n_loc))
        .collect();
    CsrMatrix::from_diagonal(&diag)
}

/// The separate volume, consistency and penalty parts of the stiffness matrix.
#[derive(Debug, Clone)]
pub struct StiffnessParts {
    pub volume: CsrMatrix,
    pub consistency: CsrMatrix,
    pub penalty: CsrMatrix,
}

impl StiffnessParts {
    /// `K - W^T - theta W + S`.
    pub fn compose(&self, theta: Theta) -> CsrMatrix {
        let wt = self.consistency.transpose();
        self.volume
            .add_scaled(&wt, -1.0)
            .and_then(|a| a.add_scaled(&self.consistency, -theta.value()))
            .and_then(|a| a.add_scaled(&self.penalty, 1.0))
            .expect("parts share the same shape")
    }
}

pub fn assemble_stiffness_parts(space: &DgSpace, sigma: &DiffusionTensor, alpha: f64) -> StiffnessParts {
    let n = space.n_dofs();
    let n_loc = space.n_loc();
    let basis = space.basis();
    let rule = basis.rule();

    let mut vol = Vec::with_capacity(space.n_elements() * n_loc * n_loc);
    let mut grads = vec![[0.0; 2]; n_loc];
    let mut fluxes = vec![[0.0; 2]; n_loc];
    let mut local = vec![0.0; n_loc * n_loc];
    for (k, map) in space.maps().iter().enumerate() {
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &w) in rule.weights().iter().enumerate() {
            for (m, g) in basis.grads_at_node(q).iter().enumerate() {
                grads[m] = map.push_gradient(*g);
                fluxes[m] = sigma.apply(grads[m]);
            }
            let wd = w * map.det;
            for j in 0..n_loc {
                for kk in 0..n_loc {
                    local[j * n_loc + kk] += wd * (grads[kk][0] * fluxes[j][0] + grads[kk][1] * fluxes[j][1]);
                }
            }
        }
        for j in 0..n_loc {
            for kk in 0..n_loc {
                vol.push((space.dof(k, j), space.dof(k, kk), local[j * n_loc + kk]));
            }
        }
    }

    let n_faces = space.mesh().interior_faces.len();
    let mut cons = Vec::with_capacity(n_faces * 4 * n_loc * n_loc);
    let mut pen = Vec::with_capacity(n_faces * 4 * n_loc * n_loc);
    let sign = [1.0, -1.0];
    let mut w_blk = vec![0.0; 4 * n_loc * n_loc];
    let mut s_blk = vec![0.0; 4 * n_loc * n_loc];
    for (f, face) in space.mesh().interior_faces.iter().enumerate() {
        let nrm = face.normal;
        let gamma = space.penalty_scale(alpha, f) * sigma.normal_component(nrm);
        w_blk.iter_mut().for_each(|v| *v = 0.0);
        s_blk.iter_mut().for_each(|v| *v = 0.0);
        for node in space.interior_nodes(f) {
            for sj in 0..2 {
                let tj = &node.sides[sj];
                for sk in 0..2 {
                    let tk = &node.sides[sk];
                    let off = (sj * 2 + sk) * n_loc * n_loc;
                    for j in 0..n_loc {
                        let flux = sigma.apply(tj.grads[j]);
                        let avg_n = 0.5 * (flux[0] * nrm[0] + flux[1] * nrm[1]);
                        for kk in 0..n_loc {
                            let jump_k = sign[sk] * tk.values[kk];
                            w_blk[off + j * n_loc + kk] += node.weight * jump_k * avg_n;
                            s_blk[off + j * n_loc + kk] += node.weight * gamma * sign[sj] * tj.values[j] * jump_k;
                        }
                    }
                }
            }
        }
        for sj in 0..2 {
            for sk in 0..2 {
                let off = (sj * 2 + sk) * n_loc * n_loc;
                for j in 0..n_loc {
                    for kk in 0..n_loc {
                        let row = space.dof(face.elems[sj], j);
                        let col = space.dof(face.elems[sk], kk);
                        cons.push((row, col, w_blk[off + j * n_loc + kk]));
                        pen.push((row, col, s_blk[off + j * n_loc + kk]));
                    }
                }
            }
        }
    }
    let build = |e: &[(usize, usize, f64)]| CsrMatrix::from_triplets(n, n, e).expect("dofs in range");
    StiffnessParts {
        volume: build(&vol),
        consistency: build(&cons),
        penalty: build(&pen),
    }
}

/// Interior-penalty stiffness matrix `A = K - W^T - theta W + S`.
pub fn assemble_stiffness(space: &DgSpace, sigma: &DiffusionTensor, pen: &PenaltySpec) -> CsrMatrix {
    assemble_stiffness_parts(space, sigma, pen.alpha).compose(pen.theta)
}

/// Element-block matrix `int_K f(V) phi_k phi_j` for a pointwise factor `f`.
pub fn assemble_weighted_mass(space: &DgSpace, v: &ModalField, factor: impl Fn(f64) -> f64) -> CsrMatrix {
    let n = space.n_dofs();
    let n_loc = space.n_loc();
    let basis = space.basis();
    let weights = basis.rule().weights();
    let mut entries = Vec::with_capacity(space.n_elements() * n_loc * n_loc);
    let mut local = vec![0.0; n_loc * n_loc];
    for (k, map) in space.maps().iter().enumerate() {
        local.iter_mut().for_each(|x| *x = 0.0);
        let coeffs = v.element(k);
        for (q, &w) in weights.iter().enumerate() {
            let phi = basis.values_at_node(q);
            let fq = w * map.det * factor(dot(phi, coeffs));
            for j in 0..n_loc {
                let a = fq * phi[j];
                for kk in 0..n_loc {
                    local[j * n_loc + kk] += a * phi[kk];
                }
            }
        }
        for j in 0..n_loc {
            for kk in 0..n_loc {
                entries.push((space.dof(k, j), space.dof(k, kk), local[j * n_loc + kk]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &entries).expect("dofs in range")
}

/// Reaction matrix `C(V)` with factor `chi_m kappa (V - 1)(V - a)`.
pub fn assemble_reaction(space: &DgSpace, v: &ModalField, params: &ModelParams) -> CsrMatrix {
    let (chi, kappa, a) = (params.chi_m, params.kappa, params.a);
    assemble_weighted_mass(space, v, |x| chi * kappa * (x - 1.0) * (x - a))
}

/// Applied current and Neumann data of one potential equation.
pub trait Forcing {
    /// Volume source at `x`, time `t`.
    fn source(&self, x: [f64; 2], t: f64) -> f64;
    /// Normal flux `Sigma grad u . n` on the boundary; `n` is the outward normal.
    fn flux(&self, x: [f64; 2], n: [f64; 2], t: f64) -> f64;
}

/// No source, homogeneous Neumann data.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoForcing;

impl Forcing for NoForcing {
    fn source(&self, _: [f64; 2], _: f64) -> f64 {
        0.0
    }
    fn flux(&self, _: [f64; 2], _: [f64; 2], _: f64) -> f64 {
        0.0
    }
}

/// Forcing built from a pair of closures.
pub struct FnForcing<S, B> {
    pub source: S,
    pub flux: B,
}

impl<S, B> Forcing for FnForcing<S, B>
where
    S: Fn([f64; 2], f64) -> f64,
    B: Fn([f64; 2], [f64; 2], f64) -> f64,
{
    fn source(&self, x: [f64; 2], t: f64) -> f64 {
        (self.source)(x, t)
    }
    fn flux(&self, x: [f64; 2], n: [f64; 2], t: f64) -> f64 {
        (self.flux)(x, n, t)
    }
}

/// Forcing vector `R_j = int_Omega I phi_j + int_{boundary} b phi_j` at time `t`.
pub fn assemble_forcing(space: &DgSpace, t: f64, forcing: &dyn Forcing) -> Vec<f64> {
    let mut r = vec![0.0; space.n_dofs()];
    let n_loc = space.n_loc();
    let basis = space.basis();
    let weights = basis.rule().weights();
    for (k, map) in space.maps().iter().enumerate() {
        let local = &mut r[k * n_loc..(k + 1) * n_loc];
        for (q, &w) in weights.iter().enumerate() {
            let s = forcing.source(space.volume_point(k, q), t);
            if s == 0.0 {
                continue;
            }
            let ws = w * map.det * s;
            for (out, phi) in local.iter_mut().zip(basis.values_at_node(q)) {
                *out += ws * phi;
            }
        }
    }
    for (f, face) in space.mesh().boundary_faces.iter().enumerate() {
        for node in space.boundary_nodes(f) {
            let b = forcing.flux(node.point, face.normal, t);
            if b == 0.0 {
                continue;
            }
            let local = &mut r[face.elem * n_loc..(face.elem + 1) * n_loc];
            for (out, phi) in local.iter_mut().zip(&node.sides[0].values) {
                *out += node.weight * b * phi;
            }
        }
    }
    r
}

/// `L^2` projection onto the DG space; the mass matrix is diagonal so each
/// coefficient is a reference-element moment of `f` against one mode.
pub fn modal_project(space: &DgSpace, f: impl Fn([f64; 2]) -> f64) -> ModalField {
    let mut field = ModalField::zeros(space);
    let n_loc = space.n_loc();
    let basis = space.basis();
    for k in 0..space.n_elements() {
        for (q, &w) in basis.rule().weights().iter().enumerate() {
            let fx = w * f(space.volume_point(k, q));
            for (m, phi) in basis.values_at_node(q).iter().enumerate() {
                field.coeffs[k * n_loc + m] += fx * phi;
            }
        }
    }
    field
}

/// Value of `field` at reference point `r` of element `k`. Rejects `eta >= 1`.
pub fn evaluate_field(space: &DgSpace, field: &ModalField, k: usize, r: [f64; 2]) -> Result<f64> {
    let phi = space.basis().eval_all(r[0], r[1])?;
    Ok(dot(&phi, field.element(k)))
}

/// Integrals `d_j = int_Omega phi_j`: `|det J_K| sqrt(2)/2` on constant modes, zero elsewhere.
pub fn mean_weights(space: &DgSpace) -> Vec<f64> {
    let mut d = vec![0.0; space.n_dofs()];
    for (k, map) in space.maps().iter().enumerate() {
        d[space.dof(k, 0)] = map.det * SQRT_2 / 2.0;
    }
    d
}

/// Area of the computational domain.
pub fn domain_area(space: &DgSpace) -> f64 {
    space.maps().iter().map(|m| 0.5 * m.det).sum()
}
