//! FitzHugh-Nagumo kinetics and the semi-implicit monodomain and bidomain
//! steppers.
//!
//! Each step first advances the gating variable with `V^n`, then solves the
//! linear potential system in which only the reaction factor is lagged:
//!
//! ```text
//! w^{n+1} = (w^n + dt eps V^n) / (1 + dt eps Gamma)
//! [(chi C / dt) M + A + C(V^n)] V^{n+1} = R(t^{n+1}) + (chi C / dt) M V^n - chi M w^{n+1}
//! ```
//!
//! The bidomain system has the constant pair `(1, 1)` in its kernel. It is
//! deflated inside GMRES and the extracellular potential is then shifted to
//! zero weighted mean.

use crate::assembly::{
    assemble_forcing, assemble_mass, assemble_reaction, assemble_stiffness, mean_weights, DiffusionTensor, Forcing,
    ModalField, PenaltySpec, Theta,
};
use crate::error::{Error, Result};
use crate::space::DgSpace;
use crate::sparse::{gmres, gmres_with, BlockJacobi, CsrMatrix, GmresOptions, Preconditioner, SolverReport, TwoLevel};

/// Physical and numerical constants of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub chi_m: f64,
    pub c_m: f64,
    pub kappa: f64,
    pub a: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Monodomain conductivity.
    pub sigma: DiffusionTensor,
    pub sigma_i: DiffusionTensor,
    pub sigma_e: DiffusionTensor,
    pub theta: Theta,
    pub alpha: f64,
    pub dt: f64,
    pub t_final: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        let s = DiffusionTensor::isotropic(0.12);
        Self {
            chi_m: 1e5,
            c_m: 1.0,
            kappa: 19.5,
            a: 1.3e-2,
            epsilon: 1.2,
            gamma: 0.1,
            sigma: s,
            sigma_i: s,
            sigma_e: s,
            theta: Theta::Symmetric,
            alpha: 10.0,
            dt: 1e-4,
            t_final: 3e-3,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("chi_m", self.chi_m),
            ("c_m", self.c_m),
            ("kappa", self.kappa),
            ("epsilon", self.epsilon),
            ("alpha", self.alpha),
            ("dt", self.dt),
            ("t_final", self.t_final),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::param(
                "gamma",
                format!("must be non-negative, got {}", self.gamma),
            ));
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(Error::param("a", format!("must lie in (0, 1), got {}", self.a)));
        }
        let ratio = self.t_final / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::param(
                "t_final",
                format!("must be a positive integer multiple of dt = {}", self.dt),
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn penalty(&self) -> Result<PenaltySpec> {
        PenaltySpec::new(self.alpha, self.theta)
    }

    /// `chi_m C_m / dt`.
    pub fn mass_coefficient(&self) -> f64 {
        self.chi_m * self.c_m / self.dt
    }
}

/// `I_ion(V, w) = kappa V (V - a)(V - 1) + w`.
pub fn i_ion(v: f64, w: f64, params: &ModelParams) -> f64 {
    params.kappa * v * (v - params.a) * (v - 1.0) + w
}

/// Implicit gating update, coefficient by coefficient.
pub fn gating_step(w: &ModalField, v: &ModalField, dt: f64, epsilon: f64, gamma: f64) -> ModalField {
    let denom = 1.0 + dt * epsilon * gamma;
    let mut out = w.clone();
    for (o, vv) in out.coeffs_mut().iter_mut().zip(v.coeffs()) {
        *o = (*o + dt * epsilon * vv) / denom;
    }
    out
}

/// Returns `(chi_m C_m / dt) M` as a diagonal.
fn scaled_mass(space: &DgSpace, c: f64) -> Vec<f64> {
    assemble_mass(space).diagonal().into_iter().map(|m| c * m).collect()
}

/// Element layout of a system of `n_fields` stacked DG fields, used to build
/// the two-level preconditioner.
struct Layout {
    n_loc: usize,
    n_elements: usize,
    n_fields: usize,
    aggregates: Vec<Vec<usize>>,
}

impl Layout {
    fn new(space: &DgSpace, n_fields: usize) -> Self {
        Self {
            n_loc: space.n_loc(),
            n_elements: space.n_elements(),
            n_fields,
            aggregates: aggregate_elements(space, COARSE_GRID),
        }
    }

    /// Block Jacobi on the coupled element blocks, plus one coarse vector per
    /// aggregate and field: the constant mode scaled by `1 / scale`.
    fn two_level<'m>(
        &self,
        a: &'m CsrMatrix,
        scale: Option<&[f64]>,
        kernel: Option<&[f64]>,
    ) -> Result<TwoLevel<'m, BlockJacobi>> {
        let n = self.n_loc * self.n_elements;
        let weight = |i: usize| scale.map_or(1.0, |s| 1.0 / s[i]);
        let columns: Vec<Vec<(usize, f64)>> = (0..self.n_fields)
            .flat_map(|f| {
                self.aggregates.iter().map(move |elems| {
                    elems
                        .iter()
                        .map(|&k| {
                            let i = f * n + k * self.n_loc;
                            (i, weight(i))
                        })
                        .collect()
                })
            })
            .collect();
        let blocks: Vec<Vec<usize>> = (0..self.n_elements)
            .map(|k| {
                (0..self.n_loc)
                    .flat_map(|m| (0..self.n_fields).map(move |f| f * n + k * self.n_loc + m))
                    .collect()
            })
            .collect();
        let smoother = BlockJacobi::new(a, blocks)?;
        TwoLevel::with_smoother(a, columns, kernel, smoother)
    }

    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        a: &CsrMatrix,
        rhs: &[f64],
        x0: &[f64],
        opts: &GmresOptions,
        precond: Preconditioner,
        scale: Option<&[f64]>,
        kernel: Option<&[f64]>,
    ) -> Result<(Vec<f64>, SolverReport)> {
        let (x, report) = match precond {
            Preconditioner::TwoLevel => {
                let pc = self.two_level(a, scale, kernel)?;
                gmres_with(a, rhs, x0, opts, &pc, kernel)?
            }
            other => gmres(a, rhs, x0, opts, other, kernel)?,
        };
        check_converged(x, report)
    }
}

fn check_converged(x: Vec<f64>, report: SolverReport) -> Result<(Vec<f64>, SolverReport)> {
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual: report.relative_residual,
        });
    }
    Ok((x, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonodomainState {
    pub v: ModalField,
    pub w: ModalField,
    pub time: f64,
    pub step: usize,
}

impl MonodomainState {
    pub fn zeros(space: &DgSpace) -> Self {
        Self {
            v: ModalField::zeros(space),
            w: ModalField::zeros(space),
            time: 0.0,
            step: 0,
        }
    }
}

pub struct MonodomainSolver<'a> {
    space: &'a DgSpace,
    params: ModelParams,
    mass: Vec<f64>,
    /// `(chi C / dt) M + A`.
    base: CsrMatrix,
    layout: Layout,
    opts: GmresOptions,
    precond: Preconditioner,
}

impl<'a> MonodomainSolver<'a> {
    pub fn new(space: &'a DgSpace, params: ModelParams) -> Result<Self> {
        params.validate()?;
        let a = assemble_stiffness(space, &params.sigma, &params.penalty()?);
        let c = params.mass_coefficient();
        let mass = assemble_mass(space).diagonal();
        let base = a.add_scaled(&CsrMatrix::from_diagonal(&scaled_mass(space, c)), 1.0)?;
        Ok(Self {
            space,
            params,
            mass,
            base,
            layout: Layout::new(space, 1),
            opts: GmresOptions::default(),
            precond: Preconditioner::default(),
        })
    }

    pub fn with_solver(mut self, opts: GmresOptions, precond: Preconditioner) -> Self {
        self.opts = opts;
        self.precond = precond;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn space(&self) -> &DgSpace {
        self.space
    }

    pub fn step(&self, state: &MonodomainState, forcing: &dyn Forcing) -> Result<(MonodomainState, SolverReport)> {
        let p = &self.params;
        let t_next = (state.step + 1) as f64 * p.dt;
        let w_next = gating_step(&state.w, &state.v, p.dt, p.epsilon, p.gamma);
        let reaction = assemble_reaction(self.space, &state.v, p);
        let system = self.base.add_scaled(&reaction, 1.0)?;
        let c = p.mass_coefficient();
        let mut rhs = assemble_forcing(self.space, t_next, forcing);
        for (i, r) in rhs.iter_mut().enumerate() {
            *r += self.mass[i] * (c * state.v.coeffs()[i] - p.chi_m * w_next.coeffs()[i]);
        }
        let (v, report) = self
            .layout
            .solve(&system, &rhs, state.v.coeffs(), &self.opts, self.precond, None, None)
            .map_err(|e| step_error(state.step + 1, e))?;
        Ok((
            MonodomainState {
                v: ModalField::from_coeffs(self.space, v)?,
                w: w_next,
                time: t_next,
                step: state.step + 1,
            },
            report,
        ))
    }
}

fn step_error(step: usize, e: Error) -> Error {
    Error::StepFailed {
        step,
        source: Box::new(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidomainState {
    pub phi_i: ModalField,
    pub phi_e: ModalField,
    pub w: ModalField,
    v: ModalField,
    pub time: f64,
    pub step: usize,
}

impl BidomainState {
    pub fn new(phi_i: ModalField, phi_e: ModalField, w: ModalField) -> Self {
        let v = phi_i.add_scaled(&phi_e, -1.0);
        Self {
            phi_i,
            phi_e,
            w,
            v,
            time: 0.0,
            step: 0,
        }
    }

    pub fn zeros(space: &DgSpace) -> Self {
        let z = ModalField::zeros(space);
        Self::new(z.clone(), z.clone(), z)
    }

    /// Transmembrane potential `phi_i - phi_e`.
    pub fn v(&self) -> &ModalField {
        &self.v
    }
}

/// Forcing of the extracellular row: the source enters with a minus sign.
struct Extracellular<'f>(&'f dyn Forcing);

impl Forcing for Extracellular<'_> {
    fn source(&self, x: [f64; 2], t: f64) -> f64 {
        -self.0.source(x, t)
    }
    fn flux(&self, x: [f64; 2], n: [f64; 2], t: f64) -> f64 {
        self.0.flux(x, n, t)
    }
}

pub struct BidomainSolver<'a> {
    space: &'a DgSpace,
    params: ModelParams,
    mass: Vec<f64>,
    /// `cM + A_i`.
    membrane: CsrMatrix,
    a_i: CsrMatrix,
    /// `A_i + A_e`.
    a_sum: CsrMatrix,
    one: ModalField,
    kernel: Vec<f64>,
    weights: Vec<f64>,
    layout: Layout,
    opts: GmresOptions,
    precond: Preconditioner,
    compat_tol: f64,
}

impl<'a> BidomainSolver<'a> {
    pub fn new(space: &'a DgSpace, params: ModelParams) -> Result<Self> {
        params.validate()?;
        let pen = params.penalty()?;
        let c = params.mass_coefficient();
        let cm = CsrMatrix::from_diagonal(&scaled_mass(space, c));
        let a_i = assemble_stiffness(space, &params.sigma_i, &pen);
        let a_e = assemble_stiffness(space, &params.sigma_e, &pen);
        let one = ModalField::constant(space, 1.0);
        let kernel = [one.coeffs(), one.coeffs()].concat();
        Ok(Self {
            space,
            params,
            mass: assemble_mass(space).diagonal(),
            membrane: a_i.add_scaled(&cm, 1.0)?,
            a_sum: a_i.add_scaled(&a_e, 1.0)?,
            a_i,
            one,
            kernel,
            weights: mean_weights(space),
            layout: Layout::new(space, 2),
            opts: GmresOptions::default(),
            precond: Preconditioner::default(),
            compat_tol: 1e-8,
        })
    }

    pub fn with_solver(mut self, opts: GmresOptions, precond: Preconditioner) -> Self {
        self.opts = opts;
        self.precond = precond;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn space(&self) -> &DgSpace {
        self.space
    }

    pub fn step(
        &self,
        state: &BidomainState,
        intra: &dyn Forcing,
        extra: &dyn Forcing,
    ) -> Result<(BidomainState, SolverReport)> {
        let step = state.step + 1;
        self.step_inner(state, intra, extra).map_err(|e| step_error(step, e))
    }

    /// The block system
    ///
    /// ```text
    /// [ cM + A_i + C    -cM - C      ] [phi_i]   [R_i + s]
    /// [ -cM - C         cM + A_e + C ] [phi_e] = [R_e - s],   s = cM V^n - chi M w^{n+1}
    /// ```
    ///
    /// is solved in the unknowns `(V, phi_e)` after replacing the second row
    /// by the sum of both rows:
    ///
    /// ```text
    /// [ cM + A_i + C    A_i       ] [V    ]   [R_i + s  ]
    /// [ A_i             A_i + A_e ] [phi_e] = [R_i + R_e]
    /// ```
    ///
    /// The membrane rows are larger than the elliptic ones by the factor
    /// `chi C / dt`, so the system is balanced by symmetric diagonal scaling
    /// before GMRES. Its kernel is `(0, 1)`.
    fn step_inner(
        &self,
        state: &BidomainState,
        intra: &dyn Forcing,
        extra: &dyn Forcing,
    ) -> Result<(BidomainState, SolverReport)> {
        let p = &self.params;
        let n = self.space.n_dofs();
        let t_next = (state.step + 1) as f64 * p.dt;
        let w_next = gating_step(&state.w, &state.v, p.dt, p.epsilon, p.gamma);
        let reaction = assemble_reaction(self.space, &state.v, p);
        let c = p.mass_coefficient();
        let r_i = assemble_forcing(self.space, t_next, intra);
        let r_e = assemble_forcing(self.space, t_next, &Extracellular(extra));
        let mut rhs = vec![0.0; 2 * n];
        for j in 0..n {
            let s = self.mass[j] * (c * state.v.coeffs()[j] - p.chi_m * w_next.coeffs()[j]);
            rhs[j] = r_i[j] + s;
            rhs[n + j] = r_e[j] - s;
        }
        let defect = kernel_defect(&self.kernel, &rhs);
        if defect > self.compat_tol {
            return Err(Error::Incompatible { defect });
        }

        let system = CsrMatrix::block2x2(
            &self.membrane.add_scaled(&reaction, 1.0)?,
            &self.a_i,
            &self.a_i,
            &self.a_sum,
        )?;
        let scale: Vec<f64> = system
            .diagonal()
            .into_iter()
            .map(|d| if d.abs() > 0.0 { 1.0 / d.abs().sqrt() } else { 1.0 })
            .collect();
        let system = system.scale_rows_cols(&scale, &scale)?;
        let mut b = vec![0.0; 2 * n];
        for j in 0..n {
            b[j] = scale[j] * rhs[j];
            b[n + j] = scale[n + j] * (rhs[j] + rhs[n + j]);
        }
        let x0: Vec<f64> = state
            .v
            .coeffs()
            .iter()
            .chain(state.phi_e.coeffs())
            .zip(&scale)
            .map(|(x, s)| x / s)
            .collect();
        let kernel: Vec<f64> = (0..2 * n)
            .map(|j| {
                if j < n {
                    0.0
                } else {
                    self.one.coeffs()[j - n] / scale[j]
                }
            })
            .collect();
        let (y, report) = self
            .layout
            .solve(&system, &b, &x0, &self.opts, self.precond, Some(&scale), Some(&kernel))?;
        let v: Vec<f64> = (0..n).map(|j| y[j] * scale[j]).collect();
        let phi_e: Vec<f64> = (0..n).map(|j| y[n + j] * scale[n + j]).collect();
        let phi_i: Vec<f64> = v.iter().zip(&phi_e).map(|(a, b)| a + b).collect();
        let phi_i = ModalField::from_coeffs(self.space, phi_i)?;
        let phi_e = ModalField::from_coeffs(self.space, phi_e)?;
        let (phi_i, phi_e) = gauge_fix(self.space, &self.weights, phi_i, phi_e);
        let mut next = BidomainState::new(phi_i, phi_e, w_next);
        next.time = t_next;
        next.step = state.step + 1;
        Ok((next, report))
    }
}

/// Cells per side of the coarsest aggregate grid.
const COARSE_GRID: usize = 16;

/// Groups elements by the block of a `grid x grid` partition of the unit
/// square that holds their centroid.
fn aggregate_elements(space: &DgSpace, grid: usize) -> Vec<Vec<usize>> {
    let mesh = space.mesh();
    let g = grid.min(1 << mesh.level).max(1);
    let mut groups = vec![Vec::new(); g * g];
    for k in 0..mesh.n_elements() {
        let c = mesh.centroid(k);
        let i = ((c[0] * g as f64) as usize).min(g - 1);
        let j = ((c[1] * g as f64) as usize).min(g - 1);
        groups[j * g + i].push(k);
    }
    groups
}

fn kernel_defect(kernel: &[f64], rhs: &[f64]) -> f64 {
    let kk: f64 = kernel.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rr: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rr == 0.0 {
        return 0.0;
    }
    let kr: f64 = kernel.iter().zip(rhs).map(|(a, b)| a * b).sum();
    kr.abs() / (kk * rr)
}

fn weighted_mean(weights: &[f64], phi: &ModalField) -> f64 {
    weights.iter().zip(phi.coeffs()).map(|(d, v)| d * v).sum()
}

/// Shifts both potentials by one constant so that `sum_j phi_e_j d_j = 0`.
fn gauge_fix(space: &DgSpace, weights: &[f64], phi_i: ModalField, phi_e: ModalField) -> (ModalField, ModalField) {
    let one = ModalField::constant(space, 1.0);
    let shift = weighted_mean(weights, &phi_e) / weighted_mean(weights, &one);
    (phi_i.add_scaled(&one, -shift), phi_e.add_scaled(&one, -shift))
}

/// Subtracts the constant that makes `sum_j phi_j d_j` vanish.
pub fn enforce_zero_mean(space: &DgSpace, phi: &ModalField) -> ModalField {
    let d = mean_weights(space);
    let one = ModalField::constant(space, 1.0);
    let shift = weighted_mean(&d, phi) / weighted_mean(&d, &one);
    phi.add_scaled(&one, -shift)
}

/// `int I_i - int I_e + int b_i + int b_e` by quadrature at time `t`.
/// Zero for data admitting a bidomain solution.
pub fn check_compatibility(space: &DgSpace, t: f64, intra: &dyn Forcing, extra: &dyn Forcing) -> f64 {
    let one = ModalField::constant(space, 1.0);
    let r_i = assemble_forcing(space, t, intra);
    let r_e = assemble_forcing(space, t, &Extracellular(extra));
    one.coeffs()
        .iter()
        .zip(r_i.iter().zip(&r_e))
        .map(|(o, (a, b))| o * (a + b))
        .sum()
}

/// Monodomain reduction of a bidomain model with `Sigma_e = xi Sigma_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodomainReduction {
    pub sigma: DiffusionTensor,
    pub xi: f64,
}

impl MonodomainReduction {
    /// `(xi I_i + I_e) / (1 + xi)`.
    pub fn current(&self, i_i: f64, i_e: f64) -> f64 {
        (self.xi * i_i + i_e) / (1.0 + self.xi)
    }
}

pub fn monodomain_reduce(sigma_i: &DiffusionTensor, xi: f64) -> Result<MonodomainReduction> {
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::param("xi", format!("must be positive, got {xi}")));
    }
    Ok(MonodomainReduction {
        sigma: sigma_i.scaled(xi / (1.0 + xi)),
        xi,
    })
}
