//! Steady interior-penalty solve of `-div(S grad u) + u = f` with a natural
//! boundary condition, using the assembly and sparse-solver layers directly.
//! The exact solution is `u = cos(pi x) cos(pi y)`.
//!
//! ```text
//! cargo run --example dg_helmholtz -- [p] [max_level] [out.vtk]
//! ```

use std::f64::consts::PI;

use cardiodg::app::vtk::write_vtk;
use cardiodg::assembly::{
    assemble_forcing, assemble_mass, assemble_stiffness, DiffusionTensor, FnForcing, ModalField, PenaltySpec, Theta,
};
use cardiodg::mesh::Triangulation;
use cardiodg::space::DgSpace;
use cardiodg::sparse::{gmres_with, BlockJacobi, GmresOptions, TwoLevel};
use cardiodg::verify::error_norms;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let p: usize = args.first().map_or(Ok(2), |s| s.parse())?;
    let max_level: u32 = args.get(1).map_or(Ok(5), |s| s.parse())?;
    let s = 0.5;

    let u = |x: [f64; 2]| (PI * x[0]).cos() * (PI * x[1]).cos();
    let grad = |x: [f64; 2]| {
        [
            -PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
            -PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
        ]
    };
    let forcing = FnForcing {
        source: |x: [f64; 2], _t: f64| (1.0 + 2.0 * PI * PI * s) * u(x),
        // zero normal flux on the boundary of the unit square
        flux: |_: [f64; 2], _: [f64; 2], _: f64| 0.0,
    };

    println!("p = {p}, S = {s} I");
    println!("{:>5} {:>8} {:>12} {:>12} {:>6}", "level", "dofs", "L2", "DG", "iters");
    let mut last = None;
    for level in 1..=max_level {
        let space = DgSpace::new(Triangulation::unit_square(level)?, p)?;
        let pen = PenaltySpec::new(10.0, Theta::from_int(1)?)?;
        let a = assemble_stiffness(&space, &DiffusionTensor::isotropic(s), &pen);
        let system = a.add_scaled(&assemble_mass(&space), 1.0)?;
        let rhs = assemble_forcing(&space, 0.0, &forcing);
        let opts = GmresOptions {
            rel_tol: 1e-12,
            ..GmresOptions::default()
        };
        // element-block smoother plus a coarse space of piecewise constants
        // on an 8 x 8 grid of patches
        let n_loc = space.n_loc();
        let blocks = (0..space.n_elements())
            .map(|k| (k * n_loc..(k + 1) * n_loc).collect())
            .collect();
        let mut columns = vec![Vec::new(); 64];
        for k in 0..space.n_elements() {
            let c = space.mesh().centroid(k);
            let patch = ((c[1] * 8.0) as usize).min(7) * 8 + ((c[0] * 8.0) as usize).min(7);
            columns[patch].push((space.dof(k, 0), 1.0));
        }
        columns.retain(|c| !c.is_empty());
        let precond = TwoLevel::with_smoother(&system, columns, None, BlockJacobi::new(&system, blocks)?)?;
        let (x, report) = gmres_with(&system, &rhs, &vec![0.0; rhs.len()], &opts, &precond, None)?;
        let uh = ModalField::from_coeffs(&space, x)?;
        let e = error_norms(&space, &uh, u, grad, 10.0);
        println!(
            "{level:>5} {:>8} {:>12.4e} {:>12.4e} {:>6}",
            space.n_dofs(),
            e.l2,
            e.dg,
            report.iterations
        );
        last = Some((space, uh));
    }
    if let (Some(path), Some((space, uh))) = (args.get(2), last) {
        write_vtk(path, &space, &[("u", &uh)], "dg helmholtz")?;
        println!("wrote {path}");
    }
    Ok(())
}
