//! Uniform triangulations of the unit square and their face connectivity.
//!
//! ```text
//! cargo run --example mesh_refinement -- [max_level]
//! ```

use cardiodg::mesh::{build_affine_maps, Triangulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let max_level: u32 = std::env::args().nth(1).map_or(Ok(5), |s| s.parse())?;
    println!(
        "{:>5} {:>9} {:>9} {:>9} {:>9} {:>10} {:>12}",
        "level", "elements", "vertices", "interior", "boundary", "h", "area sum"
    );
    for level in 0..=max_level {
        let mesh = Triangulation::unit_square(level)?;
        let area: f64 = (0..mesh.n_elements()).map(|k| mesh.signed_area(k)).sum();
        println!(
            "{level:>5} {:>9} {:>9} {:>9} {:>9} {:>10.5} {area:>12.9}",
            mesh.n_elements(),
            mesh.vertices.len(),
            mesh.interior_faces.len(),
            mesh.boundary_faces.len(),
            mesh.granularity()
        );
    }

    let mesh = Triangulation::unit_square(1)?;
    let maps = build_affine_maps(&mesh)?;
    println!("\nlevel 1 elements (counter-clockwise vertices, centroid):");
    for (k, map) in maps.iter().enumerate() {
        let c = mesh.centroid(k);
        let back = map.to_reference(c);
        println!(
            "  {k}: {:?}  centroid ({:.3}, {:.3}) -> reference ({:.3}, {:.3})",
            mesh.element_vertices(k),
            c[0],
            c[1],
            back[0],
            back[1]
        );
    }
    println!("\nlevel 1 interior faces:");
    for f in &mesh.interior_faces {
        println!(
            "  elements {:?} normal ({:+.3}, {:+.3}) length {:.4}",
            f.elems, f.normal[0], f.normal[1], f.length
        );
    }
    let probe = [0.3, 0.6];
    println!("\npoint {probe:?} lies in element {:?}", mesh.locate(probe));
    Ok(())
}
