//! CSV trajectories and JSON views of fibres and run results.
//!
//! CSV columns are `t, x_1..x_n, y_1..y_p, u_1..u_m, residual` plus `branch`
//! for inclusion runs. Numbers carry 17 significant digits in scientific
//! notation, rows end with `\n`. In JSON, infinite or undefined numbers are
//! written as `null`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::TrajectoryRecord;
use crate::model::Dims;
use crate::output::FibreSet;

/// Scientific notation with 17 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn csv_header(dims: Dims, with_branch: bool) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=dims.n).map(|i| format!("x_{i}")));
    cols.extend((1..=dims.p).map(|i| format!("y_{i}")));
    cols.extend((1..=dims.m).map(|i| format!("u_{i}")));
    cols.push("residual".into());
    if with_branch {
        cols.push("branch".into());
    }
    cols.join(",")
}

pub fn write_csv<W: Write>(out: &mut W, rec: &TrajectoryRecord<f64>, dims: Dims) -> Result<()> {
    writeln!(out, "{}", csv_header(dims, rec.branches.is_some()))?;
    let mut line = String::new();
    for k in 0..rec.len() {
        line.clear();
        line.push_str(&format_number(rec.times[k]));
        for v in rec.x[k].iter().chain(&rec.y[k]).chain(&rec.u[k]).chain([&rec.residuals[k]]) {
            line.push(',');
            line.push_str(&format_number(*v));
        }
        if let Some(b) = &rec.branches {
            line.push(',');
            line.push_str(&b[k].to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn write_csv_file(path: &Path, rec: &TrajectoryRecord<f64>, dims: Dims) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    write_csv(&mut out, rec, dims)?;
    out.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<S: Serialize + ?Sized>(value: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json_file<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    std::fs::write(path, to_json(value)?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentView {
    pub start: Vec<f64>,
    pub dir: Vec<f64>,
    pub length: Option<f64>,
    pub end: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShellView {
    pub r_min: f64,
    pub r_max: f64,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FibreView {
    pub t: f64,
    pub w: Vec<f64>,
    pub exact: bool,
    pub empty: bool,
    pub points: Vec<Vec<f64>>,
    pub segments: Vec<SegmentView>,
    pub shells: Vec<ShellView>,
    /// Scalar outputs only: segments as sorted `[lo, hi]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<[Option<f64>; 2]>>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn fibre_view(t: f64, w: &[f64], fibre: &FibreSet<f64>) -> FibreView {
    let mut points = fibre.points.clone();
    points.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let intervals = (w.len() == 1).then(|| {
        let mut iv: Vec<(f64, f64)> = fibre.segments.iter().map(|s| s.bounds_1d()).collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        iv.into_iter().map(|(a, b)| [finite(a), finite(b)]).collect()
    });
    FibreView {
        t,
        w: w.to_vec(),
        exact: fibre.exact,
        empty: fibre.is_empty(),
        points,
        segments: fibre
            .segments
            .iter()
            .map(|s| SegmentView {
                start: s.start.clone(),
                dir: s.dir.clone(),
                length: finite(s.length),
                end: s.end(),
            })
            .collect(),
        shells: fibre
            .shells
            .iter()
            .map(|s| ShellView {
                r_min: s.r_min,
                r_max: s.r_max,
                dim: s.dim,
            })
            .collect(),
        intervals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::Segment;

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_number(f64::INFINITY), "inf");
        for x in [0.1, 1.0 / 3.0, -7.25e-300, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn header_layout() {
        let d = Dims { n: 2, m: 1, me: 1, p: 1 };
        assert_eq!(csv_header(d, false), "t,x_1,x_2,y_1,u_1,residual");
        assert_eq!(csv_header(d, true), "t,x_1,x_2,y_1,u_1,residual,branch");
    }

    #[test]
    fn interval_view() {
        let f = FibreSet {
            segments: vec![Segment::interval(0.3, 1.3), Segment::interval(f64::NEG_INFINITY, -2.0)],
            ..FibreSet::empty(true)
        };
        let v = fibre_view(0.0, &[0.3], &f);
        assert_eq!(v.intervals, Some(vec![[None, Some(-2.0)], [Some(0.3), Some(1.3)]]));
        let json = to_json(&v).unwrap();
        assert!(json.contains("\"length\": null"));
        assert!(json.ends_with("}\n"));
    }
}
