//! h-convergence of the manufactured problem.
//!
//! ```text
//! cargo run --example h_convergence -- [mono|bi] [p] [first_level] [last_level]
//! ```

use std::time::Instant;

use cardiodg::dynamics::ModelParams;
use cardiodg::verify::{run_h_convergence, Model, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let model = match args.first().map(String::as_str) {
        Some("bi") => Model::Bidomain,
        _ => Model::Monodomain,
    };
    let p: usize = args.get(1).map_or(Ok(1), |s| s.parse())?;
    let lo: u32 = args.get(2).map_or(Ok(1), |s| s.parse())?;
    let hi: u32 = args.get(3).map_or(Ok(5), |s| s.parse())?;
    let levels: Vec<u32> = (lo..=hi).collect();

    let start = Instant::now();
    let rows = run_h_convergence(model, p, &levels, &ModelParams::default(), &SolverSettings::default())?;
    println!("{model}domain, p = {p}");
    println!(
        "{:>5} {:>10} {:>12} {:>12} {:>12} {:>12}   slopes",
        "sigma", "h", "Linf", "L2", "H1", "DG"
    );
    for r in &rows {
        let e = r.errors;
        let slopes = r
            .slopes
            .map(|s| format!("{:.2} {:.2} {:.2} {:.2}", s[0], s[1], s[2], s[3]))
            .unwrap_or_default();
        println!(
            "{:>5} {:>10.5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}   {}",
            r.sigma, r.h, e.linf, e.l2, e.h1, e.dg, slopes
        );
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
