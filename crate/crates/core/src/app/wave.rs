//! Diagnostics for a propagating excitation front.

use crate::app::vtk::{reference_lattice, sample_lattice};
use crate::assembly::ModalField;
use crate::space::DgSpace;

/// Largest distance from `centre` of a lattice point where `v >= threshold`;
/// zero when no point is activated.
pub fn activation_radius(space: &DgSpace, v: &ModalField, centre: [f64; 2], threshold: f64) -> f64 {
    let (points, _) = reference_lattice(space.degree());
    let values = sample_lattice(space, v);
    let mut r_max = 0.0f64;
    for (k, map) in space.maps().iter().enumerate() {
        for (i, r) in points.iter().enumerate() {
            if values[k * points.len() + i] >= threshold {
                let x = map.to_physical(*r);
                r_max = r_max.max((x[0] - centre[0]).hypot(x[1] - centre[1]));
            }
        }
    }
    r_max
}

/// Probe points of an `n x n` grid shifted off every mesh line and diagonal
/// up to fine levels, so each probe lies strictly inside one element.
pub fn probe_grid(n: usize) -> Vec<[f64; 2]> {
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pts.push([(i as f64 + 0.3137) / n as f64, (j as f64 + 0.6913) / n as f64]);
        }
    }
    pts
}

/// `max |v(x, y) - v(y, x)|` over the probe grid.
pub fn mirror_asymmetry(space: &DgSpace, v: &ModalField, n: usize) -> f64 {
    probe_grid(n)
        .into_iter()
        .filter_map(|[x, y]| Some((v.evaluate_at(space, [x, y])? - v.evaluate_at(space, [y, x])?).abs()))
        .fold(0.0, f64::max)
}
