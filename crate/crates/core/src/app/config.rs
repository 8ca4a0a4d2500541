//! TOML run configuration.
//!
//! Every key is optional except `model`. Missing physics keys take the
//! verification defaults; the `stimulus` scenario switches a few of them
//! (`c_m = 1e-2`, `epsilon = 40`, `dt = 1e-3`, `t_final = 0.4`, `p = 2`,
//! level 6) unless they are set explicitly. Unknown keys are rejected.
//!
//! ```toml
//! model = "mono"            # mono | bi
//! scenario = "manufactured" # manufactured | stimulus | custom
//!
//! [discretization]
//! p = 2
//! sigma = 3                 # refinement level, h = 2^-sigma
//! alpha = 10.0
//! theta = 1                 # 1 SIP, 0 IIP, -1 NIP
//!
//! [time]
//! dt = 1e-4
//! t_final = 3e-3
//!
//! [physics]
//! chi_m = 1e5
//! c_m = 1.0
//! kappa = 19.5
//! a = 0.013
//! epsilon = 1.2
//! gamma = 0.1
//! sigma = 0.12              # scalar (isotropic) or [[sxx, sxy], [sxy, syy]]
//! sigma_i = 0.12
//! sigma_e = 0.12
//!
//! [stimulus]
//! amplitude = 2e6
//! x = [0.4, 0.6]
//! y = [0.4, 0.6]
//! window = [0.0, 1e-3]
//!
//! [output]
//! dir = "out"
//! stride = 10
//! snapshot_times = [0.04, 0.10]
//! vtk = true
//!
//! [solver]
//! rel_tol = 1e-10
//! max_iter = 2000
//! restart = 30
//! preconditioner = "two-level" # two-level | jacobi | none
//!
//! [convergence]
//! mode = "h"                # h | p
//! levels = [1, 2, 3, 4, 5]
//! degrees = [1, 2, 3, 4, 5]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::app::scenario::StimulusSpec;
use crate::assembly::{DiffusionTensor, Theta};
use crate::dynamics::ModelParams;
use crate::error::{Error, Result};
use crate::mesh::MAX_LEVEL;
use crate::sparse::{GmresOptions, Preconditioner};
use crate::verify::{Model, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    #[default]
    Manufactured,
    Stimulus,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
enum RawModel {
    #[serde(rename = "mono", alias = "monodomain")]
    Mono,
    #[serde(rename = "bi", alias = "bidomain")]
    Bi,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
enum RawTensor {
    Scalar(f64),
    Matrix([[f64; 2]; 2]),
}

impl RawTensor {
    fn resolve(self, field: &str) -> Result<DiffusionTensor> {
        match self {
            RawTensor::Scalar(s) if s >= 0.0 && s.is_finite() => Ok(DiffusionTensor::isotropic(s)),
            RawTensor::Scalar(s) => Err(Error::param(field, format!("must be non-negative, got {s}"))),
            RawTensor::Matrix(m) => DiffusionTensor::new(m).map_err(|e| match e {
                Error::InvalidParameter { reason, .. } => Error::param(field, reason),
                other => other,
            }),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiscretization {
    p: Option<usize>,
    sigma: Option<u32>,
    alpha: Option<f64>,
    theta: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: Option<f64>,
    t_final: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysics {
    chi_m: Option<f64>,
    c_m: Option<f64>,
    kappa: Option<f64>,
    a: Option<f64>,
    epsilon: Option<f64>,
    gamma: Option<f64>,
    sigma: Option<RawTensor>,
    sigma_i: Option<RawTensor>,
    sigma_e: Option<RawTensor>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStimulus {
    amplitude: Option<f64>,
    x: Option<[f64; 2]>,
    y: Option<[f64; 2]>,
    window: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    stride: Option<i64>,
    snapshot_times: Option<Vec<f64>>,
    vtk: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    rel_tol: Option<f64>,
    max_iter: Option<usize>,
    restart: Option<usize>,
    preconditioner: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConvergence {
    mode: Option<String>,
    levels: Option<Vec<u32>>,
    degrees: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    #[serde(default)]
    scenario: Scenario,
    #[serde(default)]
    discretization: RawDiscretization,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    physics: RawPhysics,
    stimulus: Option<RawStimulus>,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    convergence: RawConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    H,
    P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSpec {
    pub mode: SweepMode,
    pub levels: Vec<u32>,
    pub degrees: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Snapshot every `stride` steps; ignored when `snapshot_times` is set.
    pub stride: usize,
    pub snapshot_times: Option<Vec<f64>>,
    pub vtk: bool,
}

/// A fully validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Model,
    pub scenario: Scenario,
    pub p: usize,
    pub level: u32,
    pub params: ModelParams,
    pub stimulus: Option<StimulusSpec>,
    pub output: OutputSpec,
    pub solver: SolverSettings,
    pub convergence: ConvergenceSpec,
}

/// Highest polynomial degree accepted from a config file.
pub const MAX_DEGREE: usize = 10;

impl RunConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        resolve(raw)
    }

    /// Snapshot step indices, always including the first and last step.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        let n = self.params.n_steps();
        let mut steps: Vec<usize> = match &self.output.snapshot_times {
            Some(times) => times.iter().map(|t| (t / self.params.dt).round() as usize).collect(),
            None => (0..=n).step_by(self.output.stride).collect(),
        };
        steps.push(0);
        steps.push(n);
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let model = match raw.model {
        RawModel::Mono => Model::Monodomain,
        RawModel::Bi => Model::Bidomain,
    };
    let stim = raw.scenario == Scenario::Stimulus;
    let d = ModelParams::default();
    let ph = &raw.physics;

    let p = raw.discretization.p.unwrap_or(if stim { 2 } else { 1 });
    if p == 0 || p > MAX_DEGREE {
        return Err(Error::param(
            "discretization.p",
            format!("must lie in 1..={MAX_DEGREE}, got {p}"),
        ));
    }
    let level = raw.discretization.sigma.unwrap_or(if stim { 6 } else { 3 });
    if level > MAX_LEVEL {
        return Err(Error::param(
            "discretization.sigma",
            format!("must lie in 0..={MAX_LEVEL}, got {level}"),
        ));
    }
    let theta = Theta::from_int(raw.discretization.theta.unwrap_or(1))
        .map_err(|_| Error::param("discretization.theta", "must be -1, 0 or 1"))?;

    let tensor = |v: Option<RawTensor>, field: &str| v.map_or(Ok(d.sigma), |t| t.resolve(field));
    let params = ModelParams {
        chi_m: ph.chi_m.unwrap_or(d.chi_m),
        c_m: ph.c_m.unwrap_or(if stim { 1e-2 } else { d.c_m }),
        kappa: ph.kappa.unwrap_or(d.kappa),
        a: ph.a.unwrap_or(d.a),
        epsilon: ph.epsilon.unwrap_or(if stim { 40.0 } else { d.epsilon }),
        gamma: ph.gamma.unwrap_or(d.gamma),
        sigma: tensor(ph.sigma, "physics.sigma")?,
        sigma_i: tensor(ph.sigma_i, "physics.sigma_i")?,
        sigma_e: tensor(ph.sigma_e, "physics.sigma_e")?,
        theta,
        alpha: raw.discretization.alpha.unwrap_or(d.alpha),
        dt: raw.time.dt.unwrap_or(if stim { 1e-3 } else { d.dt }),
        t_final: raw.time.t_final.unwrap_or(if stim { 0.4 } else { d.t_final }),
    };
    params.validate()?;

    let stimulus = match (raw.stimulus, stim) {
        (Some(s), _) => Some(resolve_stimulus(s)?),
        (None, true) => Some(StimulusSpec::default()),
        (None, false) => None,
    };
    if stimulus.is_some() && raw.scenario == Scenario::Manufactured {
        return Err(Error::param("stimulus", "not used by the manufactured scenario"));
    }

    let stride = raw.output.stride.unwrap_or(if stim { 40 } else { 10 });
    if stride < 1 {
        return Err(Error::param(
            "output.stride",
            format!("must be at least 1, got {stride}"),
        ));
    }
    let snapshot_times = match raw.output.snapshot_times {
        Some(t) => Some(t),
        None if stim && raw.output.stride.is_none() => Some(vec![0.04, 0.10, 0.16, 0.22, 0.28, 0.34]),
        None => None,
    };
    if let Some(times) = &snapshot_times {
        for &t in times {
            if !(t >= 0.0 && t <= params.t_final * (1.0 + 1e-12)) {
                return Err(Error::param(
                    "output.snapshot_times",
                    format!("{t} lies outside [0, {}]", params.t_final),
                ));
            }
        }
    }
    let output = OutputSpec {
        dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
        stride: stride as usize,
        snapshot_times,
        vtk: raw.output.vtk.unwrap_or(true),
    };

    let ds = GmresOptions::default();
    let rel_tol = raw.solver.rel_tol.unwrap_or(ds.rel_tol);
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::param(
            "solver.rel_tol",
            format!("must lie in (0, 1), got {rel_tol}"),
        ));
    }
    let max_iter = raw.solver.max_iter.unwrap_or(ds.max_iter);
    let restart = raw.solver.restart.unwrap_or(ds.restart);
    if max_iter == 0 {
        return Err(Error::param("solver.max_iter", "must be at least 1"));
    }
    if restart == 0 {
        return Err(Error::param("solver.restart", "must be at least 1"));
    }
    let precond = match raw.solver.preconditioner.as_deref() {
        None | Some("two-level") => Preconditioner::TwoLevel,
        Some("jacobi") => Preconditioner::Jacobi,
        Some("none") => Preconditioner::None,
        Some(other) => {
            return Err(Error::param(
                "solver.preconditioner",
                format!("expected \"jacobi\", \"two-level\" or \"none\", got \"{other}\""),
            ))
        }
    };
    let solver = SolverSettings {
        gmres: GmresOptions {
            rel_tol,
            max_iter,
            restart,
        },
        precond,
    };

    let mode = match raw.convergence.mode.as_deref() {
        None | Some("h") => SweepMode::H,
        Some("p") => SweepMode::P,
        Some(other) => {
            return Err(Error::param(
                "convergence.mode",
                format!("expected \"h\" or \"p\", got \"{other}\""),
            ))
        }
    };
    let levels = raw.convergence.levels.unwrap_or_else(|| (1..=5).collect());
    if levels.is_empty() || levels.iter().any(|&l| l > MAX_LEVEL) {
        return Err(Error::param(
            "convergence.levels",
            format!("need one or more levels in 0..={MAX_LEVEL}"),
        ));
    }
    let degrees = raw.convergence.degrees.unwrap_or_else(|| (1..=5).collect());
    if degrees.is_empty() || degrees.iter().any(|&q| q == 0 || q > MAX_DEGREE) {
        return Err(Error::param(
            "convergence.degrees",
            format!("need one or more degrees in 1..={MAX_DEGREE}"),
        ));
    }

    Ok(RunConfig {
        model,
        scenario: raw.scenario,
        p,
        level,
        params,
        stimulus,
        output,
        solver,
        convergence: ConvergenceSpec { mode, levels, degrees },
    })
}

fn resolve_stimulus(raw: RawStimulus) -> Result<StimulusSpec> {
    let d = StimulusSpec::default();
    let spec = StimulusSpec {
        amplitude: raw.amplitude.unwrap_or(d.amplitude),
        x: raw.x.unwrap_or(d.x),
        y: raw.y.unwrap_or(d.y),
        window: raw.window.unwrap_or(d.window),
    };
    spec.validate()?;
    Ok(spec)
}
