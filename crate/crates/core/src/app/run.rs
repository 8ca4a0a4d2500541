//! Time loop driver and the work behind the CLI subcommands.

use std::path::{Path, PathBuf};

use crate::app::config::{RunConfig, Scenario, SweepMode};
use crate::app::csv::{write_convergence_csv, write_degree_csv, write_summary_csv, SummaryRow};
use crate::app::vtk::{field_range, write_vtk};
use crate::assembly::{modal_project, Forcing, ModalField, NoForcing};
use crate::dynamics::{BidomainSolver, BidomainState, MonodomainSolver, MonodomainState};
use crate::error::{Error, Result};
use crate::mesh::Triangulation;
use crate::space::DgSpace;
use crate::sparse::SolverReport;
use crate::verify::{
    error_norms, run_h_convergence, run_p_convergence, ConvergenceRow, DegreeRow, ErrorNorms, ManufacturedSolution,
    Model, Potential,
};

/// State handed to the snapshot observer.
pub struct Snapshot<'a> {
    pub step: usize,
    pub time: f64,
    pub space: &'a DgSpace,
    pub v: &'a ModalField,
    pub w: &'a ModalField,
    pub phi_i: Option<&'a ModalField>,
    pub phi_e: Option<&'a ModalField>,
    /// Linear solve of the step that produced this state; `None` at step 0.
    pub report: Option<SolverReport>,
}

impl Snapshot<'_> {
    pub fn fields(&self) -> Vec<(&'static str, &ModalField)> {
        let mut f = vec![("Vm", self.v), ("w", self.w)];
        if let (Some(i), Some(e)) = (self.phi_i, self.phi_e) {
            f.push(("phi_i", i));
            f.push(("phi_e", e));
        }
        f
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub rows: Vec<SummaryRow>,
    pub steps: usize,
    pub total_iterations: usize,
    /// Transmembrane error at the final time, manufactured scenario only.
    pub final_errors: Option<ErrorNorms>,
}

/// Runs the configured scenario, calling `on_snapshot` at every step listed
/// by [`RunConfig::snapshot_steps`].
pub fn run_simulation(cfg: &RunConfig, on_snapshot: &mut dyn FnMut(&Snapshot) -> Result<()>) -> Result<RunSummary> {
    let space = DgSpace::new(Triangulation::unit_square(cfg.level)?, cfg.p)?;
    let params = cfg.params;
    let n_steps = params.n_steps();
    let wanted = cfg.snapshot_steps();
    let exact = match cfg.scenario {
        Scenario::Manufactured => Some(ManufacturedSolution::new(params)?),
        _ => None,
    };
    let stimulus: &dyn Forcing = match &cfg.stimulus {
        Some(s) => s,
        None => &NoForcing,
    };
    let mut summary = RunSummary {
        steps: n_steps,
        ..Default::default()
    };
    let mut emit = |snap: &Snapshot, summary: &mut RunSummary| -> Result<()> {
        if wanted.binary_search(&snap.step).is_err() {
            return Ok(());
        }
        let (vm_min, vm_max) = field_range(snap.space, snap.v);
        summary.rows.push(SummaryRow {
            step: snap.step,
            time: snap.time,
            iterations: snap.report.map_or(0, |r| r.iterations),
            relative_residual: snap.report.map_or(0.0, |r| r.relative_residual),
            vm_min,
            vm_max,
        });
        on_snapshot(snap)
    };

    let final_v = match cfg.model {
        Model::Monodomain => {
            let solver = MonodomainSolver::new(&space, params)?.with_solver(cfg.solver.gmres, cfg.solver.precond);
            let mut state = match &exact {
                Some(e) => MonodomainState {
                    v: modal_project(&space, |x| e.v(x, 0.0)),
                    w: modal_project(&space, |x| e.w(x, 0.0)),
                    time: 0.0,
                    step: 0,
                },
                None => MonodomainState::zeros(&space),
            };
            let mono_forcing = exact.as_ref().map(|e| e.forcing(Potential::Mono));
            let forcing: &dyn Forcing = match &mono_forcing {
                Some(f) => f,
                None => stimulus,
            };
            let mut report = None;
            for _ in 0..=n_steps {
                let snap = Snapshot {
                    step: state.step,
                    time: state.time,
                    space: &space,
                    v: &state.v,
                    w: &state.w,
                    phi_i: None,
                    phi_e: None,
                    report,
                };
                emit(&snap, &mut summary)?;
                if state.step == n_steps {
                    break;
                }
                let (next, r) = solver.step(&state, forcing)?;
                summary.total_iterations += r.iterations;
                report = Some(r);
                state = next;
            }
            state.v
        }
        Model::Bidomain => {
            let solver = BidomainSolver::new(&space, params)?.with_solver(cfg.solver.gmres, cfg.solver.precond);
            let mut state = match &exact {
                Some(e) => BidomainState::new(
                    modal_project(&space, |x| e.phi_i(x, 0.0)),
                    modal_project(&space, |x| e.phi_e(x, 0.0)),
                    modal_project(&space, |x| e.w(x, 0.0)),
                ),
                None => BidomainState::zeros(&space),
            };
            let pair = exact
                .as_ref()
                .map(|e| (e.forcing(Potential::Intra), e.forcing(Potential::Extra)));
            let (intra, extra): (&dyn Forcing, &dyn Forcing) = match &pair {
                Some((i, e)) => (i, e),
                None => (stimulus, stimulus),
            };
            let mut report = None;
            for _ in 0..=n_steps {
                let snap = Snapshot {
                    step: state.step,
                    time: state.time,
                    space: &space,
                    v: state.v(),
                    w: &state.w,
                    phi_i: Some(&state.phi_i),
                    phi_e: Some(&state.phi_e),
                    report,
                };
                emit(&snap, &mut summary)?;
                if state.step == n_steps {
                    break;
                }
                let (next, r) = solver.step(&state, intra, extra)?;
                summary.total_iterations += r.iterations;
                report = Some(r);
                state = next;
            }
            state.v().clone()
        }
    };
    if let Some(e) = &exact {
        let t = n_steps as f64 * params.dt;
        summary.final_errors = Some(error_norms(
            &space,
            &final_v,
            |x| e.v(x, t),
            |x| e.grad_v(x, t),
            params.alpha,
        ));
    }
    Ok(summary)
}

/// `solve`: runs the simulation, writes one VTK file per snapshot (if
/// enabled) and `summary.csv` into `out_dir`.
pub fn solve(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let vtk = cfg.output.vtk;
    let summary = run_simulation(cfg, &mut |snap| {
        if vtk {
            let path = out_dir.join(format!("snapshot_{:06}.vtk", snap.step));
            let title = format!("cardiodg {} step {} t={}", cfg.model, snap.step, snap.time);
            write_vtk(path, snap.space, &snap.fields(), &title)?;
        }
        Ok(())
    })?;
    write_summary_csv(&summary.rows, out_dir.join("summary.csv"))?;
    Ok(summary)
}

pub enum ConvergenceOutput {
    H(Vec<ConvergenceRow>),
    P(Vec<DegreeRow>),
}

/// `convergence`: sweeps the manufactured problem and writes
/// `convergence_h.csv` or `convergence_p.csv` into `out_dir`.
pub fn run_convergence(cfg: &RunConfig, out_dir: &Path) -> Result<(ConvergenceOutput, PathBuf)> {
    if cfg.scenario != Scenario::Manufactured {
        return Err(Error::param(
            "scenario",
            "convergence studies need the manufactured scenario",
        ));
    }
    let conv = &cfg.convergence;
    match conv.mode {
        SweepMode::H => {
            let rows = run_h_convergence(cfg.model, cfg.p, &conv.levels, &cfg.params, &cfg.solver)?;
            let path = out_dir.join("convergence_h.csv");
            write_convergence_csv(&rows, &path)?;
            Ok((ConvergenceOutput::H(rows), path))
        }
        SweepMode::P => {
            let rows = run_p_convergence(cfg.model, cfg.level, &conv.degrees, &cfg.params, &cfg.solver)?;
            let path = out_dir.join("convergence_p.csv");
            write_degree_csv(&rows, &path)?;
            Ok((ConvergenceOutput::P(rows), path))
        }
    }
}
