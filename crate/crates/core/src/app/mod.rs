//! Run configuration, scenarios, simulation driver and file output.

pub mod config;
pub mod csv;
pub mod run;
pub mod scenario;
pub mod vtk;
pub mod wave;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use config::{RunConfig, Scenario, SweepMode};
pub use run::{run_convergence, run_simulation, solve, ConvergenceOutput, RunSummary, Snapshot};
pub use scenario::StimulusSpec;

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Process exit status for an error: 1 configuration, 2 solver, 3 I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ConfigRead { .. }
        | Error::ConfigParse(_)
        | Error::InvalidParameter { .. }
        | Error::RefinementLevel(_) => 1,
        Error::Io { .. } => 3,
        Error::StepFailed { source, .. } => exit_code(source).max(2),
        _ => 2,
    }
}
