//! Excitation wave from a square stimulus in the middle of the tissue.
//!
//! ```text
//! cargo run --release --example stimulus_wave -- [mono|bi] [sigma] [rel_tol] [out_dir]
//! ```
//!
//! Prints the membrane potential range, the front radius and the x<->y mirror
//! defect at every snapshot. With an output directory it also writes VTK files.

use std::time::Instant;

use cardiodg::app::wave::{activation_radius, mirror_asymmetry};
use cardiodg::app::{run_simulation, vtk::write_vtk, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let model = args.first().map_or("mono", String::as_str);
    let sigma: u32 = args.get(1).map_or(Ok(6), |s| s.parse())?;
    let out = args.get(3).map(std::path::PathBuf::from);

    let mut text = format!("model = \"{model}\"\nscenario = \"stimulus\"\n[discretization]\nsigma = {sigma}\n");
    if let Some(tol) = args.get(2) {
        text += &format!("[solver]\nrel_tol = {:e}\n", tol.parse::<f64>()?);
    }
    let cfg = RunConfig::from_toml(&text)?;
    println!(
        "{} p={} sigma={} dt={} T={}",
        cfg.model, cfg.p, cfg.level, cfg.params.dt, cfg.params.t_final
    );
    println!(
        "{:>6} {:>8} {:>11} {:>11} {:>9} {:>10} {:>6}",
        "step", "t", "min Vm", "max Vm", "radius", "mirror", "iters"
    );
    let start = Instant::now();
    let summary = run_simulation(&cfg, &mut |s| {
        let radius = activation_radius(s.space, s.v, [0.5, 0.5], 0.5);
        let mirror = mirror_asymmetry(s.space, s.v, 64);
        let (lo, hi) = cardiodg::app::vtk::field_range(s.space, s.v);
        println!(
            "{:>6} {:>8.3} {:>11.4e} {:>11.4e} {:>9.4} {:>10.2e} {:>6}",
            s.step,
            s.time,
            lo,
            hi,
            radius,
            mirror,
            s.report.map_or(0, |r| r.iterations)
        );
        if let Some(dir) = &out {
            write_vtk(
                dir.join(format!("wave_{:06}.vtk", s.step)),
                s.space,
                &s.fields(),
                "stimulus wave",
            )?;
        }
        Ok(())
    })?;
    println!(
        "{} steps, {} GMRES iterations, {:.1} s",
        summary.steps,
        summary.total_iterations,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
