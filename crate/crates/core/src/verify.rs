//! Manufactured solutions, discrete error norms and h/p convergence drivers.
//!
//! The exact fields are
//!
//! ```text
//! phi_i = 2 s e^{-5t},  phi_e = s e^{-5t},  V = s e^{-5t},  w = k V,
//! s(x, y) = sin(2 pi x) sin(2 pi y),  k = eps / (eps Gamma - 5)
//! ```
//!
//! and the applied currents and Neumann data are whatever makes them solve
//! the continuous equations.

use std::f64::consts::PI;

use crate::assembly::{modal_project, Forcing, ModalField};
use crate::dynamics::{i_ion, BidomainSolver, BidomainState, ModelParams, MonodomainSolver, MonodomainState};
use crate::error::{Error, Result};
use crate::mesh::Triangulation;
use crate::space::DgSpace;
use crate::sparse::{GmresOptions, Preconditioner};

/// Which reaction-diffusion system to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Monodomain,
    Bidomain,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Monodomain => "mono",
            Model::Bidomain => "bi",
        })
    }
}

/// `k` such that `w = k V` solves `w' = eps (V - Gamma w)` when `V' = -lambda V`.
pub fn derive_gating_constant(epsilon: f64, gamma: f64, lambda: f64) -> Result<f64> {
    let denom = epsilon * gamma - lambda;
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    if denom == 0.0 {
        return Err(Error::param(
            "epsilon",
            "eps * Gamma equals the decay rate; no exact gating solution",
        ));
    }
    Ok(epsilon / denom)
}

/// Closed-form exact solution and its derivatives.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedSolution {
    pub params: ModelParams,
    pub k: f64,
    pub lambda: f64,
    pub amp_i: f64,
    pub amp_e: f64,
}

impl ManufacturedSolution {
    pub fn new(params: ModelParams) -> Result<Self> {
        let lambda = 5.0;
        Ok(Self {
            params,
            k: derive_gating_constant(params.epsilon, params.gamma, lambda)?,
            lambda,
            amp_i: 2.0,
            amp_e: 1.0,
        })
    }

    fn decay(&self, t: f64) -> f64 {
        (-self.lambda * t).exp()
    }

    fn s(x: [f64; 2]) -> f64 {
        (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin()
    }

    fn grad_s(x: [f64; 2]) -> [f64; 2] {
        let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
        let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
        [2.0 * PI * cx * sy, 2.0 * PI * sx * cy]
    }

    fn hessian_s(x: [f64; 2]) -> [[f64; 2]; 2] {
        let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
        let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
        let f = 4.0 * PI * PI;
        [[-f * sx * sy, f * cx * cy], [f * cx * cy, -f * sx * sy]]
    }

    fn div_flux_s(sigma: [[f64; 2]; 2], x: [f64; 2]) -> f64 {
        let h = Self::hessian_s(x);
        sigma[0][0] * h[0][0] + sigma[0][1] * h[0][1] + sigma[1][0] * h[1][0] + sigma[1][1] * h[1][1]
    }

    pub fn v(&self, x: [f64; 2], t: f64) -> f64 {
        (self.amp_i - self.amp_e) * Self::s(x) * self.decay(t)
    }

    pub fn grad_v(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let g = Self::grad_s(x);
        let c = (self.amp_i - self.amp_e) * self.decay(t);
        [c * g[0], c * g[1]]
    }

    pub fn dv_dt(&self, x: [f64; 2], t: f64) -> f64 {
        -self.lambda * self.v(x, t)
    }

    pub fn w(&self, x: [f64; 2], t: f64) -> f64 {
        self.k * self.v(x, t)
    }

    pub fn dw_dt(&self, x: [f64; 2], t: f64) -> f64 {
        self.k * self.dv_dt(x, t)
    }

    pub fn phi_i(&self, x: [f64; 2], t: f64) -> f64 {
        self.amp_i * Self::s(x) * self.decay(t)
    }

    pub fn phi_e(&self, x: [f64; 2], t: f64) -> f64 {
        self.amp_e * Self::s(x) * self.decay(t)
    }

    pub fn grad_phi_i(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let g = Self::grad_s(x);
        let c = self.amp_i * self.decay(t);
        [c * g[0], c * g[1]]
    }

    pub fn grad_phi_e(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let g = Self::grad_s(x);
        let c = self.amp_e * self.decay(t);
        [c * g[0], c * g[1]]
    }

    fn membrane_terms(&self, x: [f64; 2], t: f64) -> f64 {
        let p = &self.params;
        p.chi_m * p.c_m * self.dv_dt(x, t) + p.chi_m * i_ion(self.v(x, t), self.w(x, t), p)
    }

    /// Monodomain current with `Sigma = params.sigma`.
    pub fn current_mono(&self, x: [f64; 2], t: f64) -> f64 {
        let div = (self.amp_i - self.amp_e) * self.decay(t) * Self::div_flux_s(self.params.sigma.matrix(), x);
        self.membrane_terms(x, t) - div
    }

    pub fn current_intra(&self, x: [f64; 2], t: f64) -> f64 {
        let div = self.amp_i * self.decay(t) * Self::div_flux_s(self.params.sigma_i.matrix(), x);
        self.membrane_terms(x, t) - div
    }

    /// Extracellular current `I_e` in `-chi C V_t - div(Sigma_e grad phi_e) - chi I_ion = -I_e`.
    pub fn current_extra(&self, x: [f64; 2], t: f64) -> f64 {
        let div = self.amp_e * self.decay(t) * Self::div_flux_s(self.params.sigma_e.matrix(), x);
        self.membrane_terms(x, t) + div
    }

    pub fn forcing(&self, which: Potential) -> ManufacturedForcing<'_> {
        ManufacturedForcing { exact: self, which }
    }
}

/// Selects one of the potential equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    Mono,
    Intra,
    Extra,
}

pub struct ManufacturedForcing<'a> {
    exact: &'a ManufacturedSolution,
    which: Potential,
}

impl Forcing for ManufacturedForcing<'_> {
    fn source(&self, x: [f64; 2], t: f64) -> f64 {
        match self.which {
            Potential::Mono => self.exact.current_mono(x, t),
            Potential::Intra => self.exact.current_intra(x, t),
            Potential::Extra => self.exact.current_extra(x, t),
        }
    }

    fn flux(&self, x: [f64; 2], n: [f64; 2], t: f64) -> f64 {
        let e = self.exact;
        let (sigma, g) = match self.which {
            Potential::Mono => (e.params.sigma, e.grad_v(x, t)),
            Potential::Intra => (e.params.sigma_i, e.grad_phi_i(x, t)),
            Potential::Extra => (e.params.sigma_e, e.grad_phi_e(x, t)),
        };
        let f = sigma.apply(g);
        f[0] * n[0] + f[1] * n[1]
    }
}

/// Discrete error norms of `u_h - u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub linf: f64,
    pub l2: f64,
    pub h1: f64,
    pub dg: f64,
}

impl ErrorNorms {
    pub fn as_array(&self) -> [f64; 4] {
        [self.linf, self.l2, self.h1, self.dg]
    }
}

/// `L^inf` over volume nodes, `L^2`, `H^1 = (L2^2 + |grad_h e|^2)^{1/2}` and
/// `DG = (|grad_h e|^2 + sum_F int_F alpha p^2 / h_F [[u_h]]^2)^{1/2}`.
/// The exact field is continuous so only `u_h` contributes jumps.
pub fn error_norms(
    space: &DgSpace,
    numeric: &ModalField,
    exact: impl Fn([f64; 2]) -> f64,
    exact_grad: impl Fn([f64; 2]) -> [f64; 2],
    alpha: f64,
) -> ErrorNorms {
    let basis = space.basis();
    let rule = basis.rule();
    let (mut linf, mut l2sq, mut gradsq) = (0.0_f64, 0.0, 0.0);
    for (k, map) in space.maps().iter().enumerate() {
        let local = numeric.element(k);
        for (q, &w) in rule.weights().iter().enumerate() {
            let x = space.volume_point(k, q);
            let mut u = 0.0;
            let mut g = [0.0; 2];
            for (m, c) in local.iter().enumerate() {
                u += c * basis.value(q, m);
                let pg = map.push_gradient(basis.grad(q, m));
                g[0] += c * pg[0];
                g[1] += c * pg[1];
            }
            let e = u - exact(x);
            let ge = exact_grad(x);
            let (dx, dy) = (g[0] - ge[0], g[1] - ge[1]);
            linf = linf.max(e.abs());
            l2sq += w * map.det * e * e;
            gradsq += w * map.det * (dx * dx + dy * dy);
        }
    }
    let mut jumpsq = 0.0;
    for (f, face) in space.mesh().interior_faces.iter().enumerate() {
        let scale = space.penalty_scale(alpha, f);
        let (a, b) = (numeric.element(face.elems[0]), numeric.element(face.elems[1]));
        for node in space.interior_nodes(f) {
            let ua: f64 = node.sides[0].values.iter().zip(a).map(|(p, c)| p * c).sum();
            let ub: f64 = node.sides[1].values.iter().zip(b).map(|(p, c)| p * c).sum();
            jumpsq += node.weight * scale * (ua - ub).powi(2);
        }
    }
    ErrorNorms {
        linf,
        l2: l2sq.sqrt(),
        h1: (l2sq + gradsq).sqrt(),
        dg: (gradsq + jumpsq).sqrt(),
    }
}

/// Least-squares slope of `log e` against `log h`.
pub fn least_squares_slope(h: &[f64], e: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(e)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 || pts.len() != h.len() {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub sigma: u32,
    pub h: f64,
    pub errors: ErrorNorms,
    /// Least-squares slopes over this row and up to two previous rows.
    pub slopes: Option<[f64; 4]>,
}

/// Fills the `slopes` column using a sliding window of up to three rows.
pub fn attach_slopes(rows: &mut [ConvergenceRow]) {
    for i in 0..rows.len() {
        if i == 0 {
            rows[i].slopes = None;
            continue;
        }
        let lo = i.saturating_sub(2);
        let h: Vec<f64> = rows[lo..=i].iter().map(|r| r.h).collect();
        let mut out = [0.0; 4];
        let mut ok = true;
        for (c, o) in out.iter_mut().enumerate() {
            let e: Vec<f64> = rows[lo..=i].iter().map(|r| r.errors.as_array()[c]).collect();
            match least_squares_slope(&h, &e) {
                Some(s) => *o = s,
                None => ok = false,
            }
        }
        rows[i].slopes = ok.then_some(out);
    }
}

/// Solver settings shared by the convergence drivers.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolverSettings {
    pub gmres: GmresOptions,
    pub precond: Preconditioner,
}

/// Runs the manufactured problem to `params.t_final` and measures the
/// transmembrane potential error.
pub fn run_manufactured(
    model: Model,
    space: &DgSpace,
    params: &ModelParams,
    settings: &SolverSettings,
) -> Result<ErrorNorms> {
    let exact = ManufacturedSolution::new(*params)?;
    let t_end = params.n_steps() as f64 * params.dt;
    let v_final = match model {
        Model::Monodomain => {
            let solver = MonodomainSolver::new(space, *params)?.with_solver(settings.gmres, settings.precond);
            let mut state = MonodomainState {
                v: modal_project(space, |x| exact.v(x, 0.0)),
                w: modal_project(space, |x| exact.w(x, 0.0)),
                time: 0.0,
                step: 0,
            };
            let forcing = exact.forcing(Potential::Mono);
            for _ in 0..params.n_steps() {
                state = solver.step(&state, &forcing)?.0;
            }
            state.v
        }
        Model::Bidomain => {
            let solver = BidomainSolver::new(space, *params)?.with_solver(settings.gmres, settings.precond);
            let mut state = BidomainState::new(
                modal_project(space, |x| exact.phi_i(x, 0.0)),
                modal_project(space, |x| exact.phi_e(x, 0.0)),
                modal_project(space, |x| exact.w(x, 0.0)),
            );
            let (fi, fe) = (exact.forcing(Potential::Intra), exact.forcing(Potential::Extra));
            for _ in 0..params.n_steps() {
                state = solver.step(&state, &fi, &fe)?.0;
            }
            state.v().clone()
        }
    };
    Ok(error_norms(
        space,
        &v_final,
        |x| exact.v(x, t_end),
        |x| exact.grad_v(x, t_end),
        params.alpha,
    ))
}

/// h-convergence sweep at fixed degree `p`.
pub fn run_h_convergence(
    model: Model,
    p: usize,
    levels: &[u32],
    params: &ModelParams,
    settings: &SolverSettings,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::with_capacity(levels.len());
    for &sigma in levels {
        let mesh = Triangulation::unit_square(sigma)?;
        let h = mesh.granularity();
        let space = DgSpace::new(mesh, p)?;
        let errors = run_manufactured(model, &space, params, settings)?;
        rows.push(ConvergenceRow {
            sigma,
            h,
            errors,
            slopes: None,
        });
    }
    attach_slopes(&mut rows);
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeRow {
    pub p: usize,
    pub errors: ErrorNorms,
}

/// p-convergence sweep on a fixed mesh.
pub fn run_p_convergence(
    model: Model,
    level: u32,
    degrees: &[usize],
    params: &ModelParams,
    settings: &SolverSettings,
) -> Result<Vec<DegreeRow>> {
    let mesh = Triangulation::unit_square(level)?;
    degrees
        .iter()
        .map(|&p| {
            let space = DgSpace::new(mesh.clone(), p)?;
            Ok(DegreeRow {
                p,
                errors: run_manufactured(model, &space, params, settings)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::DiffusionTensor;
    use crate::dynamics::check_compatibility;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn gating_constant_examples() {
        let k = derive_gating_constant(1.2, 0.1, 5.0).unwrap();
        assert_abs_diff_eq!(k, 1.2 / (0.12 - 5.0), epsilon = 1e-15);
        assert_abs_diff_eq!(k, -0.245901639344, epsilon = 1e-11);
        assert_eq!(derive_gating_constant(0.0, 0.1, 5.0).unwrap(), 0.0);
        assert!(derive_gating_constant(50.0, 0.1, 5.0).is_err());
    }

    #[test]
    fn constant_error_norms() {
        let s = DgSpace::new(Triangulation::unit_square(2).unwrap(), 2).unwrap();
        let one = ModalField::constant(&s, 1.0);
        let e = error_norms(&s, &one, |_| 0.0, |_| [0.0, 0.0], 10.0);
        assert_abs_diff_eq!(e.l2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.h1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.linf, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.dg, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn continuous_field_dg_norm_is_gradient_norm() {
        let s = DgSpace::new(Triangulation::unit_square(2).unwrap(), 2).unwrap();
        let f = modal_project(&s, |x| x[0] * x[1] + 0.5 * x[0]);
        let e = error_norms(&s, &f, |_| 0.0, |_| [0.0, 0.0], 10.0);
        // int (y + 1/2)^2 + x^2 over the unit square
        let grad_sq: f64 = 17.0 / 12.0;
        assert_abs_diff_eq!(e.dg, grad_sq.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(e.h1 * e.h1, e.l2 * e.l2 + e.dg * e.dg, epsilon = 1e-12);
    }

    #[test]
    fn projection_errors_shrink_with_refinement() {
        let exact = ManufacturedSolution::new(ModelParams::default()).unwrap();
        let mut last = [f64::INFINITY; 4];
        for level in 1..=4 {
            let s = DgSpace::new(Triangulation::unit_square(level).unwrap(), 2).unwrap();
            let f = modal_project(&s, |x| exact.v(x, 0.0));
            let e = error_norms(&s, &f, |x| exact.v(x, 0.0), |x| exact.grad_v(x, 0.0), 10.0).as_array();
            for c in 0..4 {
                assert!(e[c] < last[c], "level {level} norm {c}");
            }
            last = e;
        }
    }

    #[test]
    fn slope_examples() {
        assert_abs_diff_eq!(
            least_squares_slope(&[1.0, 0.5, 0.25], &[1.0, 0.5, 0.25]).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            least_squares_slope(&[0.5, 0.25], &[0.4, 0.1]).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        assert!(least_squares_slope(&[0.5], &[0.1]).is_none());
        assert!(least_squares_slope(&[0.5, 0.25], &[0.0, 0.1]).is_none());
    }

    fn fd_second(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn gating_ode_residual(x in 0.0f64..1.0, y in 0.0f64..1.0, t in 0.0f64..0.01) {
            let e = ManufacturedSolution::new(ModelParams::default()).unwrap();
            let p = e.params;
            let r = e.dw_dt([x, y], t) - p.epsilon * (e.v([x, y], t) - p.gamma * e.w([x, y], t));
            prop_assert!(r.abs() <= 1e-12);
        }

        #[test]
        fn monodomain_pde_residual(x in 0.05f64..0.95, y in 0.05f64..0.95, t in 0.0f64..0.003) {
            let params = ModelParams {
                sigma: DiffusionTensor::new([[0.12, 0.03], [0.03, 0.2]]).unwrap(),
                ..Default::default()
            };
            let e = ManufacturedSolution::new(params).unwrap();
            let h = 1e-4;
            let ht = 1e-6;
            let vt = (e.v([x, y], t + ht) - e.v([x, y], t - ht)) / (2.0 * ht);
            let s = params.sigma.matrix();
            let vxx = fd_second(|z| e.v([z, y], t), x, h);
            let vyy = fd_second(|z| e.v([x, z], t), y, h);
            let vxy = (e.v([x + h, y + h], t) - e.v([x + h, y - h], t) - e.v([x - h, y + h], t)
                + e.v([x - h, y - h], t))
                / (4.0 * h * h);
            let div = s[0][0] * vxx + 2.0 * s[0][1] * vxy + s[1][1] * vyy;
            let lhs = params.chi_m * params.c_m * vt - div
                + params.chi_m * i_ion(e.v([x, y], t), e.w([x, y], t), &params);
            let rhs = e.current_mono([x, y], t);
            prop_assert!((lhs - rhs).abs() <= 1e-6 * rhs.abs().max(1.0), "{} vs {}", lhs, rhs);
        }
    }

    #[test]
    fn manufactured_data_are_compatible() {
        let e = ManufacturedSolution::new(ModelParams::default()).unwrap();
        let s = DgSpace::new(Triangulation::unit_square(3).unwrap(), 2).unwrap();
        for t in [0.0, 1e-3, 3e-3] {
            let d = check_compatibility(&s, t, &e.forcing(Potential::Intra), &e.forcing(Potential::Extra));
            assert!(d.abs() <= 1e-10, "t={t}: {d}");
        }
    }
}
