//! Legacy ASCII VTK output.
//!
//! Each element is drawn as its degree-`p` lattice: the `(p+1)(p+2)/2` points
//! `(a/p, b/p)`, `a + b <= p`, of the reference triangle split into `p^2`
//! linear sub-triangles. Points are not shared between elements, so
//! discontinuities survive in the picture.

use std::fmt::Write as _;
use std::path::Path;

use crate::app::write_atomic;
use crate::assembly::ModalField;
use crate::error::Result;
use crate::space::DgSpace;
use crate::specfun::dubiner_eval_closed;

/// Reference lattice points and sub-triangles of a degree-`p` element.
#[allow(clippy::needless_range_loop)]
pub fn reference_lattice(p: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let p = p.max(1);
    let mut index = vec![vec![usize::MAX; p + 1]; p + 1];
    let mut points = Vec::with_capacity((p + 1) * (p + 2) / 2);
    for b in 0..=p {
        for a in 0..=p - b {
            index[a][b] = points.len();
            points.push([a as f64 / p as f64, b as f64 / p as f64]);
        }
    }
    let mut cells = Vec::with_capacity(p * p);
    for b in 0..p {
        for a in 0..p - b {
            cells.push([index[a][b], index[a + 1][b], index[a][b + 1]]);
            if a + b + 2 <= p {
                cells.push([index[a + 1][b], index[a + 1][b + 1], index[a][b + 1]]);
            }
        }
    }
    (points, cells)
}

/// Basis values at the lattice points, point-major.
fn lattice_table(space: &DgSpace, points: &[[f64; 2]]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|r| {
            space
                .basis()
                .modes()
                .iter()
                .map(|&(i, j)| dubiner_eval_closed(i, j, r[0], r[1]))
                .collect()
        })
        .collect()
}

/// Values of `field` at the lattice points of every element, element-major.
pub fn sample_lattice(space: &DgSpace, field: &ModalField) -> Vec<f64> {
    let (points, _) = reference_lattice(space.degree());
    let table = lattice_table(space, &points);
    let mut out = Vec::with_capacity(space.n_elements() * points.len());
    for k in 0..space.n_elements() {
        let c = field.element(k);
        out.extend(
            table
                .iter()
                .map(|phi| phi.iter().zip(c).map(|(a, b)| a * b).sum::<f64>()),
        );
    }
    out
}

/// `(min, max)` of the field over the lattice points.
pub fn field_range(space: &DgSpace, field: &ModalField) -> (f64, f64) {
    sample_lattice(space, field)
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

pub fn render_vtk(space: &DgSpace, fields: &[(&str, &ModalField)], title: &str) -> String {
    let (points, cells) = reference_lattice(space.degree());
    let np = points.len();
    let ne = space.n_elements();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or(""));
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", ne * np);
    for map in space.maps() {
        for r in &points {
            let x = map.to_physical(*r);
            let _ = writeln!(s, "{} {} 0", x[0], x[1]);
        }
    }
    let nc = ne * cells.len();
    let _ = writeln!(s, "CELLS {} {}", nc, 4 * nc);
    for k in 0..ne {
        for c in &cells {
            let _ = writeln!(s, "3 {} {} {}", k * np + c[0], k * np + c[1], k * np + c[2]);
        }
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {}", ne * np);
    for (name, field) in fields {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in sample_lattice(space, field) {
            let _ = writeln!(s, "{v}");
        }
    }
    s
}

pub fn write_vtk(path: impl AsRef<Path>, space: &DgSpace, fields: &[(&str, &ModalField)], title: &str) -> Result<()> {
    write_atomic(path.as_ref(), render_vtk(space, fields, title).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Triangulation;

    fn section<'a>(text: &'a str, header: &str) -> Vec<&'a str> {
        let mut lines = text.lines().skip_while(|l| !l.starts_with(header));
        let head = lines.next().unwrap();
        let count: usize = head.split_whitespace().nth(1).unwrap().parse().unwrap();
        lines.take(count).collect()
    }

    #[test]
    fn lattice_counts() {
        for p in 1..=6 {
            let (pts, cells) = reference_lattice(p);
            assert_eq!(pts.len(), (p + 1) * (p + 2) / 2);
            assert_eq!(cells.len(), p * p);
            // sub-cells tile the reference triangle with positive orientation
            let area: f64 = cells
                .iter()
                .map(|c| {
                    let (a, b, d) = (pts[c[0]], pts[c[1]], pts[c[2]]);
                    0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0]))
                })
                .inspect(|&a| assert!(a > 0.0))
                .sum();
            assert!((area - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn coarse_meshes() {
        let s = DgSpace::new(Triangulation::unit_square(0).unwrap(), 1).unwrap();
        let f = ModalField::constant(&s, 0.75);
        let text = render_vtk(&s, &[("Vm", &f)], "t");
        assert_eq!(section(&text, "POINTS").len(), 6);
        assert_eq!(section(&text, "CELLS").len(), 2);
        assert!(text.contains("SCALARS Vm double 1"));
        for v in text.lines().skip_while(|l| !l.starts_with("LOOKUP_TABLE")).skip(1) {
            assert!((v.parse::<f64>().unwrap() - 0.75).abs() < 1e-14);
        }

        let s = DgSpace::new(Triangulation::unit_square(0).unwrap(), 2).unwrap();
        let text = render_vtk(&s, &[("Vm", &ModalField::zeros(&s))], "t");
        assert_eq!(section(&text, "CELLS").len(), 8);
        assert_eq!(section(&text, "POINTS").len(), 12);
    }

    #[test]
    fn lattice_samples_reproduce_linear_fields() {
        let s = DgSpace::new(Triangulation::unit_square(2).unwrap(), 3).unwrap();
        let f = crate::assembly::modal_project(&s, |x| 2.0 * x[0] - x[1]);
        let (pts, _) = reference_lattice(3);
        let vals = sample_lattice(&s, &f);
        for (k, map) in s.maps().iter().enumerate() {
            for (i, r) in pts.iter().enumerate() {
                let x = map.to_physical(*r);
                assert!((vals[k * pts.len() + i] - (2.0 * x[0] - x[1])).abs() < 1e-12);
            }
        }
        let (lo, hi) = field_range(&s, &f);
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
    }
}
