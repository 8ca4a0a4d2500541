//! CSV tables.

use std::fmt::Write as _;
use std::path::Path;

use crate::app::write_atomic;
use crate::error::{Error, Result};
use crate::verify::{ConvergenceRow, DegreeRow};

pub const CONVERGENCE_HEADER: &str = "sigma,h,Linf,L2,H1,DG,slope_Linf,slope_L2,slope_H1,slope_DG";

/// Scientific notation with six significant digits and a two-digit signed
/// exponent, e.g. `1.26940e-03`.
pub fn sci6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn render_convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from(CONVERGENCE_HEADER);
    s.push('\n');
    for r in rows {
        let e = r.errors;
        let _ = write!(
            s,
            "{},{},{},{},{},{}",
            r.sigma,
            sci6(r.h),
            sci6(e.linf),
            sci6(e.l2),
            sci6(e.h1),
            sci6(e.dg)
        );
        match r.slopes {
            Some(sl) => {
                for v in sl {
                    let _ = write!(s, ",{v:.6}");
                }
            }
            None => s.push_str(",,,,"),
        }
        s.push('\n');
    }
    s
}

pub fn write_convergence_csv(rows: &[ConvergenceRow], path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::param("rows", "convergence table is empty"));
    }
    write_atomic(path.as_ref(), render_convergence_csv(rows).as_bytes())
}

pub fn render_degree_csv(rows: &[DegreeRow]) -> String {
    let mut s = String::from("p,Linf,L2,H1,DG\n");
    for r in rows {
        let e = r.errors;
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.p,
            sci6(e.linf),
            sci6(e.l2),
            sci6(e.h1),
            sci6(e.dg)
        );
    }
    s
}

pub fn write_degree_csv(rows: &[DegreeRow], path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::param("rows", "convergence table is empty"));
    }
    write_atomic(path.as_ref(), render_degree_csv(rows).as_bytes())
}

/// One line of the run summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub step: usize,
    pub time: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    pub vm_min: f64,
    pub vm_max: f64,
}

pub const SUMMARY_HEADER: &str = "step,time,iterations,relative_residual,vm_min,vm_max";

pub fn render_summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.step,
            sci6(r.time),
            r.iterations,
            sci6(r.relative_residual),
            sci6(r.vm_min),
            sci6(r.vm_max)
        );
    }
    s
}

pub fn write_summary_csv(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), render_summary_csv(rows).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{attach_slopes, ErrorNorms};

    fn row(sigma: u32, e: f64) -> ConvergenceRow {
        ConvergenceRow {
            sigma,
            h: 0.5f64.powi(sigma as i32),
            errors: ErrorNorms {
                linf: e,
                l2: e,
                h1: e,
                dg: e,
            },
            slopes: None,
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(sci6(1.269e-3), "1.26900e-03");
        assert_eq!(sci6(0.0), "0.00000e+00");
        assert_eq!(sci6(-12345.678), "-1.23457e+04");
        assert_eq!(sci6(1e100), "1.00000e+100");
    }

    #[test]
    fn single_row_has_empty_slopes() {
        let mut rows = vec![row(1, 0.1)];
        attach_slopes(&mut rows);
        let text = render_convergence_csv(&rows);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CONVERGENCE_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "1,5.00000e-01,1.00000e-01,1.00000e-01,1.00000e-01,1.00000e-01,,,,"
        );
    }

    #[test]
    fn halving_errors_give_unit_slope() {
        let mut rows = vec![row(1, 0.4), row(2, 0.2), row(3, 0.1)];
        attach_slopes(&mut rows);
        let text = render_convergence_csv(&rows);
        let last = text.lines().last().unwrap();
        assert!(last.ends_with(",1.000000,1.000000,1.000000,1.000000"), "{last}");
        assert!(write_convergence_csv(&[], "unused.csv").is_err());
    }
}
