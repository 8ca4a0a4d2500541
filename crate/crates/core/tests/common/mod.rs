//! Dense brute-force reference assembly.
//!
//! Shares nothing with the library beyond element vertex lists and, for the
//! reaction matrix only, the volume quadrature points (the reaction integrand
//! is not a polynomial of bounded degree that a different rule would also
//! integrate exactly). Everything else, Gauss points, Jacobi polynomials,
//! basis normalization, face detection and trace evaluation, is recomputed
//! here from first principles.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss-Legendre on [-1, 1] by Golub-Welsch.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn binomial(n: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i as f64) / (i + 1) as f64)
}

/// Jacobi polynomial by its explicit finite sum.
pub fn jacobi(n: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    (0..=n)
        .map(|s| {
            binomial(n as f64 + alpha, n - s)
                * binomial(n as f64 + beta, s)
                * ((x - 1.0) / 2.0).powi(s as i32)
                * ((x + 1.0) / 2.0).powi((n - s) as i32)
        })
        .sum()
}

fn jacobi_d(n: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        0.5 * (n as f64 + alpha + beta + 1.0) * jacobi(n - 1, alpha + 1.0, beta + 1.0, x)
    }
}

/// Modes of degree <= p ordered by total degree, then by the first index.
pub fn modes(p: usize) -> Vec<(usize, usize)> {
    (0..=p).flat_map(|d| (0..=d).map(move |i| (i, d - i))).collect()
}

/// Orthonormal basis function and its reference gradient at an interior point.
pub fn basis(i: usize, j: usize, xi: f64, eta: f64) -> (f64, [f64; 2]) {
    let c = (2.0 * (2 * i + 1) as f64 * (i + j + 1) as f64).sqrt();
    let s = 1.0 - eta;
    let a = 2.0 * xi / s - 1.0;
    let b = 2.0 * eta - 1.0;
    let pa = jacobi(i, 0.0, 0.0, a);
    let dpa = jacobi_d(i, 0.0, 0.0, a);
    let pb = jacobi(j, (2 * i + 1) as f64, 0.0, b);
    let dpb = jacobi_d(j, (2 * i + 1) as f64, 0.0, b);
    let si = s.powi(i as i32);
    let value = c * pa * si * pb;
    // a = 2 xi / (1 - eta) - 1, b = 2 eta - 1
    let da_dxi = 2.0 / s;
    let da_deta = 2.0 * xi / (s * s);
    let dsi_deta = if i == 0 {
        0.0
    } else {
        -(i as f64) * s.powi(i as i32 - 1)
    };
    let d_xi = c * dpa * da_dxi * si * pb;
    let d_eta = c * (dpa * da_deta * si * pb + pa * dsi_deta * pb + pa * si * dpb * 2.0);
    (value, [d_xi, d_eta])
}

/// High-order collapsed rule on the reference triangle.
pub fn triangle_rule(n: usize) -> Vec<([f64; 2], f64)> {
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::new();
    for (a, wa) in x.iter().zip(&w) {
        for (b, wb) in x.iter().zip(&w) {
            let xi = (1.0 + a) * (1.0 - b) / 4.0;
            let eta = (1.0 + b) / 2.0;
            out.push(([xi, eta], wa * wb * (1.0 - b) / 8.0));
        }
    }
    out
}

#[derive(Clone, Copy)]
pub struct Affine {
    pub v0: [f64; 2],
    pub j: [[f64; 2]; 2],
    pub det: f64,
}

impl Affine {
    pub fn new(v: [[f64; 2]; 3]) -> Self {
        let j = [
            [v[1][0] - v[0][0], v[2][0] - v[0][0]],
            [v[1][1] - v[0][1], v[2][1] - v[0][1]],
        ];
        Self {
            v0: v[0],
            j,
            det: j[0][0] * j[1][1] - j[0][1] * j[1][0],
        }
    }

    pub fn forward(&self, r: [f64; 2]) -> [f64; 2] {
        [
            self.v0[0] + self.j[0][0] * r[0] + self.j[0][1] * r[1],
            self.v0[1] + self.j[1][0] * r[0] + self.j[1][1] * r[1],
        ]
    }

    pub fn inverse(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.v0[0], x[1] - self.v0[1]];
        [
            (self.j[1][1] * d[0] - self.j[0][1] * d[1]) / self.det,
            (-self.j[1][0] * d[0] + self.j[0][0] * d[1]) / self.det,
        ]
    }

    /// Physical gradient from a reference gradient: `J^{-T} g`.
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            (self.j[1][1] * g[0] - self.j[1][0] * g[1]) / self.det,
            (-self.j[0][1] * g[0] + self.j[0][0] * g[1]) / self.det,
        ]
    }
}

pub struct Oracle {
    pub p: usize,
    pub elements: Vec<[[f64; 2]; 3]>,
    pub maps: Vec<Affine>,
    pub modes: Vec<(usize, usize)>,
}

pub struct SharedEdge {
    pub k0: usize,
    pub k1: usize,
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// Unit normal pointing out of `k0`.
    pub normal: [f64; 2],
}

fn same(a: [f64; 2], b: [f64; 2]) -> bool {
    (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Oracle {
    pub fn new(elements: Vec<[[f64; 2]; 3]>, p: usize) -> Self {
        let maps = elements.iter().map(|&v| Affine::new(v)).collect();
        Self {
            p,
            elements,
            maps,
            modes: modes(p),
        }
    }

    pub fn n_loc(&self) -> usize {
        self.modes.len()
    }

    pub fn n(&self) -> usize {
        self.n_loc() * self.elements.len()
    }

    pub fn diameter(&self, k: usize) -> f64 {
        let v = self.elements[k];
        dist(v[0], v[1]).max(dist(v[1], v[2])).max(dist(v[0], v[2]))
    }

    /// All edges shared by two elements, found by comparing coordinates.
    pub fn interior_edges(&self) -> Vec<SharedEdge> {
        let mut out = Vec::new();
        let ne = self.elements.len();
        for k0 in 0..ne {
            for k1 in k0 + 1..ne {
                let v0 = self.elements[k0];
                let v1 = self.elements[k1];
                let shared: Vec<[f64; 2]> = v0.iter().copied().filter(|&a| v1.iter().any(|&b| same(a, b))).collect();
                if shared.len() != 2 {
                    continue;
                }
                let (a, b) = (shared[0], shared[1]);
                let t = [b[0] - a[0], b[1] - a[1]];
                let len = dist(a, b);
                let mut normal = [t[1] / len, -t[0] / len];
                let c0 = [
                    (v0[0][0] + v0[1][0] + v0[2][0]) / 3.0,
                    (v0[0][1] + v0[1][1] + v0[2][1]) / 3.0,
                ];
                if (c0[0] - a[0]) * normal[0] + (c0[1] - a[1]) * normal[1] > 0.0 {
                    normal = [-normal[0], -normal[1]];
                }
                out.push(SharedEdge { k0, k1, a, b, normal });
            }
        }
        out
    }

    fn eval(&self, k: usize, x: [f64; 2]) -> Vec<(f64, [f64; 2])> {
        let r = self.maps[k].inverse(x);
        self.modes
            .iter()
            .map(|&(i, j)| {
                let (v, g) = basis(i, j, r[0], r[1]);
                (v, self.maps[k].grad(g))
            })
            .collect()
    }

    pub fn mass(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let nl = self.n_loc();
        let mut m = vec![vec![0.0; n]; n];
        let rule = triangle_rule(2 * self.p + 4);
        for (k, map) in self.maps.iter().enumerate() {
            for &(r, w) in &rule {
                let phi = self.eval(k, map.forward(r));
                for a in 0..nl {
                    for b in 0..nl {
                        m[k * nl + a][k * nl + b] += w * map.det.abs() * phi[a].0 * phi[b].0;
                    }
                }
            }
        }
        m
    }

    /// `a(phi_col, phi_row)` for the interior penalty form with homogeneous
    /// Neumann boundaries.
    pub fn stiffness(&self, sigma: [[f64; 2]; 2], alpha: f64, theta: f64) -> Vec<Vec<f64>> {
        let n = self.n();
        let nl = self.n_loc();
        let mut a = vec![vec![0.0; n]; n];
        let apply = |g: [f64; 2]| {
            [
                sigma[0][0] * g[0] + sigma[0][1] * g[1],
                sigma[1][0] * g[0] + sigma[1][1] * g[1],
            ]
        };
        let rule = triangle_rule(2 * self.p + 4);
        for (k, map) in self.maps.iter().enumerate() {
            for &(r, w) in &rule {
                let phi = self.eval(k, map.forward(r));
                for row in 0..nl {
                    for col in 0..nl {
                        let sg = apply(phi[col].1);
                        let g = phi[row].1;
                        a[k * nl + row][k * nl + col] += w * map.det.abs() * (sg[0] * g[0] + sg[1] * g[1]);
                    }
                }
            }
        }
        let (gx, gw) = gauss_legendre(self.p + 3);
        for e in self.interior_edges() {
            let len = dist(e.a, e.b);
            let nn = e.normal;
            let sigma_nn = {
                let s = apply(nn);
                s[0] * nn[0] + s[1] * nn[1]
            };
            let h = self.diameter(e.k0).min(self.diameter(e.k1));
            let gamma = alpha * (self.p * self.p) as f64 / h * sigma_nn;
            for (s, ws) in gx.iter().zip(&gw) {
                let t = 0.5 * (s + 1.0);
                let x = [e.a[0] + t * (e.b[0] - e.a[0]), e.a[1] + t * (e.b[1] - e.a[1])];
                let w = 0.5 * ws * len;
                // (global dof, jump coefficient along n, flux sigma grad . n / 2)
                let mut entries = Vec::new();
                for (k, sign) in [(e.k0, 1.0), (e.k1, -1.0)] {
                    for (m, (v, g)) in self.eval(k, x).into_iter().enumerate() {
                        let sg = apply(g);
                        entries.push((k * nl + m, sign * v, 0.5 * (sg[0] * nn[0] + sg[1] * nn[1])));
                    }
                }
                for &(row, jump_r, avg_r) in &entries {
                    for &(col, jump_c, avg_c) in &entries {
                        a[row][col] += w * (-avg_c * jump_r - theta * avg_r * jump_c + gamma * jump_r * jump_c);
                    }
                }
            }
        }
        a
    }

    /// Reaction matrix `int chi kappa (V-1)(V-a) phi_col phi_row` on the
    /// given reference rule.
    pub fn reaction(
        &self,
        coeffs: &[f64],
        rule: &[([f64; 2], f64)],
        chi: f64,
        kappa: f64,
        a_param: f64,
    ) -> Vec<Vec<f64>> {
        let n = self.n();
        let nl = self.n_loc();
        let mut c = vec![vec![0.0; n]; n];
        for (k, map) in self.maps.iter().enumerate() {
            for &(r, w) in rule {
                let phi = self.eval(k, map.forward(r));
                let v: f64 = (0..nl).map(|m| coeffs[k * nl + m] * phi[m].0).sum();
                let f = chi * kappa * (v - 1.0) * (v - a_param);
                for row in 0..nl {
                    for col in 0..nl {
                        c[k * nl + row][k * nl + col] += w * map.det.abs() * f * phi[row].0 * phi[col].0;
                    }
                }
            }
        }
        c
    }
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            assert_eq!(x.len(), y.len());
            x.iter().zip(y).map(|(u, v)| (u - v).abs())
        })
        .fold(0.0, f64::max)
}
