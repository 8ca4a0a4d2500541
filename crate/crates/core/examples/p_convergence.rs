//! p-convergence of the manufactured problem on the level-3 mesh.
//!
//! ```text
//! cargo run --example p_convergence -- [mono|bi] [max_degree]
//! ```

use cardiodg::dynamics::ModelParams;
use cardiodg::verify::{run_p_convergence, Model, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let model = match args.first().map(String::as_str) {
        Some("bi") => Model::Bidomain,
        _ => Model::Monodomain,
    };
    let max_p: usize = args.get(1).map_or(Ok(5), |s| s.parse())?;
    let degrees: Vec<usize> = (1..=max_p).collect();
    let rows = run_p_convergence(model, 3, &degrees, &ModelParams::default(), &SolverSettings::default())?;
    println!("{model}domain, h = 1/8");
    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "p", "Linf", "L2", "H1", "DG");
    for r in rows {
        let e = r.errors;
        println!(
            "{:>3} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.p, e.linf, e.l2, e.h1, e.dg
        );
    }
    Ok(())
}
