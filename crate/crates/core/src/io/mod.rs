//! Readers and writers: ASCII OBJ/PLY meshes, oriented point clouds, skeleton
//! OBJ files with a `.radii` sidecar, and JSON run reports.

mod cloud;
mod mesh;
mod skeleton;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub use cloud::{load_point_cloud, write_point_cloud, OrientedPointCloud};
pub use mesh::{load_mesh, write_mesh, TriangleMesh};
pub use skeleton::{radii_path, read_skeleton, write_skeleton, SkeletonFile};

/// C-style `%.9g` formatting (nine significant digits, trailing zeros trimmed).
pub fn format_g9(x: f64) -> String {
    format_g(x, 9)
}

/// C-style `%.<prec>g`.
pub fn format_g(x: f64, prec: usize) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let prec = prec.max(1);
    let sci = format!("{:.*e}", prec - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -4 || exp >= prec as i32 {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (prec as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Round-trips a value through `%.9g`, matching what readers of the
/// `.radii` sidecar will see.
pub fn round_g9(x: f64) -> f64 {
    format_g9(x).parse().expect("formatted float parses")
}

/// Writes any serializable report as pretty JSON. Field order follows the
/// struct definition, so output is deterministic.
pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, report)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a list of non-negative integers, one per line (blank lines and `#`
/// comments skipped).
pub fn read_index_list(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line.parse::<usize>().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: format!("expected a non-negative integer: {e}"),
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Writes one integer per line.
pub fn write_index_list(path: &Path, values: &[usize]) -> Result<()> {
    let mut s = String::with_capacity(values.len() * 4);
    for v in values {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_f64(tok: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("invalid number `{tok}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("non-finite number `{tok}`"),
        });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_matches_c_printf() {
        let cases = [
            (0.5, "0.5"),
            (0.1 + 0.2, "0.3"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001234, "0.0001234"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (0.0, "0"),
            (100.0, "100"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g9(x), want, "formatting {x}");
        }
    }

    #[test]
    fn index_list_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.txt");
        let v = vec![0, 3, 1, 1, 2];
        write_index_list(&p, &v).unwrap();
        assert_eq!(read_index_list(&p).unwrap(), v);
    }
}
