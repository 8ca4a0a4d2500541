//! Jacobi polynomials, Gauss quadrature and the modal Dubiner basis on the
//! reference triangle `K = {(xi, eta) : xi, eta >= 0, xi + eta <= 1}`.
//!
//! The Dubiner functions are built on the collapsed square `[-1, 1]^2`:
//!
//! ```text
//! xi  = (1 + a)(1 - b) / 4
//! eta = (1 + b) / 2
//! phi_ij(xi, eta) = c_ij (1 - eta)^i P_i^{0,0}(a) P_j^{2i+1,0}(b),
//! c_ij = sqrt(2 (2i + 1)(i + j + 1))
//! ```
//!
//! and are orthonormal in `L^2(K)`.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Jacobi polynomial `P_n^{alpha,beta}(x)` by the three-term recurrence.
///
/// Valid for `alpha, beta >= -1` with `alpha + beta > -2`.
pub fn jacobi(n: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let ab = alpha + beta;
    let mut p_prev = 1.0;
    let mut p = 0.5 * (alpha - beta + (ab + 2.0) * x);
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + ab;
        let a1 = 2.0 * k * (k + ab) * (c - 2.0);
        let a2 = (c - 1.0) * (alpha * alpha - beta * beta);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c;
        let p_next = ((a2 + a3 * x) * p - a4 * p_prev) / a1;
        p_prev = p;
        p = p_next;
    }
    p
}

/// Derivative `d/dx P_n^{alpha,beta}(x) = (n + alpha + beta + 1)/2 P_{n-1}^{alpha+1,beta+1}(x)`.
pub fn jacobi_deriv(n: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    0.5 * (n as f64 + alpha + beta + 1.0) * jacobi(n - 1, alpha + 1.0, beta + 1.0, x)
}

/// Gauss-Jacobi nodes and weights for `int_{-1}^{1} (1-x)^alpha (1+x)^beta f(x) dx`.
///
/// Nodes come out in ascending order and are exact for polynomials of degree
/// `2n - 1`. Roots are found by Newton iteration with deflation against the
/// roots already located, seeded from Chebyshev-Gauss points.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_jacobi needs at least one node");
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    for k in 0..n {
        let mut r = -((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
        if k > 0 {
            r = 0.5 * (r + nodes[k - 1]);
        }
        for _ in 0..100 {
            let s: f64 = nodes.iter().map(|&x| 1.0 / (r - x)).sum();
            let p = jacobi(n, alpha, beta, r);
            let dp = jacobi_deriv(n, alpha, beta, r);
            let delta = -p / (dp - s * p);
            r += delta;
            if delta.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(r);
    }
    let nf = n as f64;
    let log_c = (alpha + beta + 1.0) * std::f64::consts::LN_2 + ln_gamma(nf + alpha + 1.0) + ln_gamma(nf + beta + 1.0)
        - ln_gamma(nf + alpha + beta + 1.0)
        - ln_gamma(nf + 1.0);
    let c = log_c.exp();
    let weights = nodes
        .iter()
        .map(|&x| {
            let dp = jacobi_deriv(n, alpha, beta, x);
            c / ((1.0 - x * x) * dp * dp)
        })
        .collect();
    (nodes, weights)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Collapsed-coordinate map from the square `[-1,1]^2` onto the reference triangle.
pub fn collapse(a: f64, b: f64) -> (f64, f64) {
    (0.25 * (1.0 + a) * (1.0 - b), 0.5 * (1.0 + b))
}

/// Number of Dubiner modes of total degree `<= p`.
pub fn n_modes(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

/// Mode index pairs `(i, j)`, ordered by total degree `i + j` and then by `i`.
pub fn mode_indices(p: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n_modes(p));
    for d in 0..=p {
        for i in 0..=d {
            out.push((i, d - i));
        }
    }
    out
}

fn normalization(i: usize, j: usize) -> f64 {
    (2.0 * (2 * i + 1) as f64 * (i + j + 1) as f64).sqrt()
}

fn check_interior(xi: f64, eta: f64) -> Result<()> {
    if eta >= 1.0 || !eta.is_finite() || !xi.is_finite() {
        return Err(Error::CollapsedEdge { xi, eta });
    }
    Ok(())
}

/// Dubiner function `phi_ij(xi, eta)`. Rejects points with `eta >= 1`.
pub fn dubiner_eval(i: usize, j: usize, xi: f64, eta: f64) -> Result<f64> {
    check_interior(xi, eta)?;
    let t = 1.0 - eta;
    let a = 2.0 * xi / t - 1.0;
    let b = 2.0 * eta - 1.0;
    Ok(normalization(i, j) * t.powi(i as i32) * jacobi(i, 0.0, 0.0, a) * jacobi(j, (2 * i + 1) as f64, 0.0, b))
}

/// Reference gradient `(d/dxi, d/deta)` of `phi_ij`. Rejects points with `eta >= 1`.
pub fn dubiner_grad(i: usize, j: usize, xi: f64, eta: f64) -> Result<[f64; 2]> {
    check_interior(xi, eta)?;
    let c = normalization(i, j);
    let t = 1.0 - eta;
    let a = 2.0 * xi / t - 1.0;
    let b = 2.0 * eta - 1.0;
    let beta_idx = (2 * i + 1) as f64;
    let q = jacobi(j, beta_idx, 0.0, b);
    let dq = jacobi_deriv(j, beta_idx, 0.0, b);
    if i == 0 {
        return Ok([0.0, 2.0 * c * dq]);
    }
    let pa = jacobi(i, 0.0, 0.0, a);
    let dpa = jacobi_deriv(i, 0.0, 0.0, a);
    let t_im1 = t.powi(i as i32 - 1);
    let d_xi = c * 2.0 * t_im1 * dpa * q;
    let d_eta = c * (t_im1 * q * ((1.0 + a) * dpa - i as f64 * pa) + 2.0 * t_im1 * t * pa * dq);
    Ok([d_xi, d_eta])
}

/// Evaluates `phi_ij` on the closed triangle, including the collapsed vertex.
///
/// Uses the homogeneous form `t^i P_i(x / t)` with `x = 2 xi + eta - 1`,
/// `t = 1 - eta`, which is a polynomial in `(xi, eta)` and needs no division.
pub(crate) fn dubiner_eval_closed(i: usize, j: usize, xi: f64, eta: f64) -> f64 {
    let x = 2.0 * xi + eta - 1.0;
    let t = 1.0 - eta;
    let mut s_prev = 1.0;
    let mut s = x;
    let scaled = if i == 0 {
        1.0
    } else {
        for n in 1..i {
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0) * x * s - nf * t * t * s_prev) / (nf + 1.0);
            s_prev = s;
            s = next;
        }
        s
    };
    normalization(i, j) * scaled * jacobi(j, (2 * i + 1) as f64, 0.0, 2.0 * eta - 1.0)
}

/// Quadrature rule on the reference triangle.
#[derive(Debug, Clone)]
pub struct QuadRule {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
    exactness: usize,
}

impl QuadRule {
    /// Collapsed tensor rule: Gauss-Legendre in `a`, Gauss-Jacobi(1,0) in `b`.
    ///
    /// The `(1 - b)` factor of the collapse Jacobian is carried by the Jacobi
    /// weight, so the rule is exact for total degree `<= exactness` on the
    /// triangle. All nodes are strictly interior.
    pub fn triangle(exactness: usize) -> Result<Self> {
        if exactness == 0 {
            return Err(Error::QuadratureDegree(exactness));
        }
        let n = exactness / 2 + 1;
        let (xa, wa) = gauss_legendre(n);
        let (xb, wb) = gauss_jacobi(n, 1.0, 0.0);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&b, &w_b) in xb.iter().zip(&wb) {
            for (&a, &w_a) in xa.iter().zip(&wa) {
                let (xi, eta) = collapse(a, b);
                points.push([xi, eta]);
                weights.push(0.125 * w_a * w_b);
            }
        }
        Ok(Self {
            points,
            weights,
            exactness,
        })
    }

    /// The rule averaged with its mirror image under `(xi, eta) -> (eta, xi)`.
    ///
    /// Same exactness, twice the nodes. Elements that are mirror images of
    /// each other then sample non-polynomial integrands at mirrored points.
    pub fn symmetrized(&self) -> Self {
        let mut points = self.points.clone();
        points.extend(self.points.iter().map(|p| [p[1], p[0]]));
        let weights = self.weights.iter().chain(&self.weights).map(|w| 0.5 * w).collect();
        Self {
            points,
            weights,
            exactness: self.exactness,
        }
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }
}

/// Gauss-Legendre rule on one edge of the reference triangle.
///
/// Edge 0 runs `(0,0) -> (1,0)`, edge 1 `(1,0) -> (0,1)`, edge 2 `(0,1) -> (0,0)`.
/// Weights include the reference edge length.
#[derive(Debug, Clone)]
pub struct EdgeQuad {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Position of each node along the edge, in `(0, 1)`.
    pub params: Vec<f64>,
}

pub fn edge_quad_points(edge: usize, n_points: usize) -> Result<EdgeQuad> {
    if edge > 2 {
        return Err(Error::EdgeId(edge));
    }
    let (x, w) = gauss_legendre(n_points.max(1));
    let length = if edge == 1 { 2f64.sqrt() } else { 1.0 };
    let params: Vec<f64> = x.iter().map(|&x| 0.5 * (1.0 + x)).collect();
    let points = params.iter().map(|&s| reference_edge_point(edge, s)).collect();
    let weights = w.iter().map(|&w| 0.5 * w * length).collect();
    Ok(EdgeQuad {
        points,
        weights,
        params,
    })
}

pub(crate) fn reference_edge_point(edge: usize, s: f64) -> [f64; 2] {
    match edge {
        0 => [s, 0.0],
        1 => [1.0 - s, s],
        _ => [0.0, 1.0 - s],
    }
}

/// Dubiner modes of degree `p` tabulated at the nodes of a quadrature rule.
#[derive(Debug, Clone)]
pub struct DubinerBasis {
    degree: usize,
    modes: Vec<(usize, usize)>,
    rule: QuadRule,
    // node-major: values[q * n_loc + m]
    values: Vec<f64>,
    grads: Vec<[f64; 2]>,
}

impl DubinerBasis {
    pub fn tabulate(p: usize, rule: QuadRule) -> Result<Self> {
        if p == 0 {
            return Err(Error::param("p", "polynomial degree must be at least 1"));
        }
        let modes = mode_indices(p);
        let mut values = Vec::with_capacity(rule.len() * modes.len());
        let mut grads = Vec::with_capacity(rule.len() * modes.len());
        for pt in rule.points() {
            for &(i, j) in &modes {
                values.push(dubiner_eval(i, j, pt[0], pt[1])?);
                grads.push(dubiner_grad(i, j, pt[0], pt[1])?);
            }
        }
        Ok(Self {
            degree: p,
            modes,
            rule,
            values,
            grads,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_loc(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[(usize, usize)] {
        &self.modes
    }

    pub fn rule(&self) -> &QuadRule {
        &self.rule
    }

    #[inline]
    pub fn value(&self, node: usize, mode: usize) -> f64 {
        self.values[node * self.modes.len() + mode]
    }

    #[inline]
    pub fn grad(&self, node: usize, mode: usize) -> [f64; 2] {
        self.grads[node * self.modes.len() + mode]
    }

    /// All mode values at one node.
    pub fn values_at_node(&self, node: usize) -> &[f64] {
        let n = self.modes.len();
        &self.values[node * n..(node + 1) * n]
    }

    pub fn grads_at_node(&self, node: usize) -> &[[f64; 2]] {
        let n = self.modes.len();
        &self.grads[node * n..(node + 1) * n]
    }

    /// All mode values at an arbitrary interior reference point.
    pub fn eval_all(&self, xi: f64, eta: f64) -> Result<Vec<f64>> {
        self.modes.iter().map(|&(i, j)| dubiner_eval(i, j, xi, eta)).collect()
    }

    pub fn grad_all(&self, xi: f64, eta: f64) -> Result<Vec<[f64; 2]>> {
        self.modes.iter().map(|&(i, j)| dubiner_grad(i, j, xi, eta)).collect()
    }

    /// Gram matrix `int_K phi_m phi_n` under the attached rule, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.n_loc();
        let mut g = vec![0.0; n * n];
        for (q, w) in self.rule.weights().iter().enumerate() {
            let v = self.values_at_node(q);
            for a in 0..n {
                for b in 0..n {
                    g[a * n + b] += w * v[a] * v[b];
                }
            }
        }
        g
    }
}
