//! Orthonormal modal basis and collapsed-coordinate quadrature on the
//! reference triangle.
//!
//! ```text
//! cargo run --example basis_quadrature -- [max_degree]
//! ```

use cardiodg::specfun::{dubiner_eval, gauss_jacobi, jacobi, mode_indices, DubinerBasis, QuadRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let max_p: usize = std::env::args().nth(1).map_or(Ok(8), |s| s.parse())?;

    // Gauss-Jacobi nodes are the roots of the matching Jacobi polynomial
    let (x, w) = gauss_jacobi(5, 1.0, 0.0);
    let root_defect = x.iter().map(|&x| jacobi(5, 1.0, 0.0, x).abs()).fold(0.0, f64::max);
    println!(
        "5-point Gauss-Jacobi(1,0): weight sum {:.15} (exact 2), max |P5(x_i)| = {root_defect:.1e}",
        w.iter().sum::<f64>()
    );

    // a triangle rule of exactness d integrates x^a y^b exactly for a + b <= d:
    // int_T x^a y^b = a! b! / (a + b + 2)!
    let rule = QuadRule::triangle(6)?;
    let exact = 2.0 * 6.0 / (7.0 * 6.0 * 5.0 * 4.0 * 3.0 * 2.0);
    let approx = rule.integrate(|x, y| x * x * y * y * y);
    println!("{} nodes, int x^2 y^3 = {approx:.15e} (exact {exact:.15e})", rule.len());

    println!("\n{:>3} {:>6} {:>6} {:>12}", "p", "modes", "nodes", "|G - I|max");
    for p in 1..=max_p {
        let basis = DubinerBasis::tabulate(p, QuadRule::triangle(2 * p)?)?;
        let n = basis.n_loc();
        let defect = basis
            .gram()
            .iter()
            .enumerate()
            .map(|(k, g)| (g - if k / n == k % n { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        println!("{p:>3} {n:>6} {:>6} {defect:>12.2e}", basis.rule().len());
    }

    println!("\nmodes of degree <= 2 at the centroid:");
    for (i, j) in mode_indices(2) {
        println!("  phi_({i},{j}) = {:+.6}", dubiner_eval(i, j, 1.0 / 3.0, 1.0 / 3.0)?);
    }
    Ok(())
}
