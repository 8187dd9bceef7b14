use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::mesh::parse_obj_index;
use super::{format_g9, parse_f64};
use crate::error::{Error, Result};
use crate::geom::Point3;

/// On-disk skeleton: vertices with radii, edges and triangles (0-based).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SkeletonFile {
    pub vertices: Vec<Point3>,
    pub radii: Vec<f64>,
    pub edges: Vec<[usize; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl SkeletonFile {
    pub fn validate(&self) -> Result<()> {
        if self.radii.len() != self.vertices.len() {
            return Err(Error::InvalidParameter(format!(
                "{} radii for {} vertices",
                self.radii.len(),
                self.vertices.len()
            )));
        }
        if let Some(r) = self.radii.iter().find(|r| !(**r > 0.0)) {
            return Err(Error::InvalidParameter(format!("non-positive radius {r}")));
        }
        let n = self.vertices.len();
        let bad = self
            .edges
            .iter()
            .flat_map(|e| e.iter())
            .chain(self.triangles.iter().flat_map(|t| t.iter()))
            .find(|&&i| i >= n);
        if let Some(&index) = bad {
            return Err(Error::IndexOutOfRange { index, len: n });
        }
        Ok(())
    }
}

/// Sidecar path: the skeleton path with `.radii` appended.
pub fn radii_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".radii");
    PathBuf::from(s)
}

/// Writes `v`/`l`/`f` records to `path` and one `%.9g` radius per line to
/// `<path>.radii`.
pub fn write_skeleton(path: &Path, skel: &SkeletonFile) -> Result<()> {
    skel.validate()?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# skeleton: {} vertices, {} edges, {} triangles",
        skel.vertices.len(),
        skel.edges.len(),
        skel.triangles.len()
    );
    for v in &skel.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for e in &skel.edges {
        let _ = writeln!(s, "l {} {}", e[0] + 1, e[1] + 1);
    }
    for t in &skel.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))?;

    let mut r = String::new();
    for &x in &skel.radii {
        r.push_str(&format_g9(x));
        r.push('\n');
    }
    let rp = radii_path(path);
    std::fs::write(&rp, r).map_err(|e| Error::io(&rp, e))
}

/// Reads a skeleton written by [`write_skeleton`] (or any OBJ with `l`/`f`
/// records plus a radii sidecar).
pub fn read_skeleton(path: &Path) -> Result<SkeletonFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut skel = SkeletonFile::default();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<&str> = toks.collect();
                if c.len() < 3 {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        msg: "vertex needs 3 coordinates".into(),
                    });
                }
                skel.vertices.push(Point3::new(
                    parse_f64(c[0], path, line)?,
                    parse_f64(c[1], path, line)?,
                    parse_f64(c[2], path, line)?,
                ));
            }
            Some("l") => {
                let idx: Vec<usize> = toks
                    .map(|t| parse_obj_index(t, skel.vertices.len(), path, line))
                    .collect::<Result<_>>()?;
                for w in idx.windows(2) {
                    skel.edges.push([w[0], w[1]]);
                }
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| parse_obj_index(t, skel.vertices.len(), path, line))
                    .collect::<Result<_>>()?;
                for k in 1..idx.len().saturating_sub(1) {
                    skel.triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    let rp = radii_path(path);
    let rtext = std::fs::read_to_string(&rp).map_err(|e| Error::io(&rp, e))?;
    for (n, raw) in rtext.lines().enumerate() {
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        skel.radii.push(parse_f64(raw, &rp, n + 1)?);
    }
    skel.validate().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })?;
    Ok(skel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_vertex() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.obj");
        let s = SkeletonFile {
            vertices: vec![Point3::new(0.5, 0.5, 0.5)],
            radii: vec![0.25],
            ..Default::default()
        };
        write_skeleton(&p, &s).unwrap();
        let body = std::fs::read_to_string(&p).unwrap();
        assert_eq!(body.lines().filter(|l| l.starts_with("v ")).count(), 1);
        assert_eq!(std::fs::read_to_string(radii_path(&p)).unwrap(), "0.25\n");
    }

    #[test]
    fn edge_record_is_one_based() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.obj");
        let s = SkeletonFile {
            vertices: vec![Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0)],
            radii: vec![0.1, 0.2],
            edges: vec![[0, 1]],
            triangles: vec![],
        };
        write_skeleton(&p, &s).unwrap();
        let body = std::fs::read_to_string(&p).unwrap();
        assert!(body.lines().any(|l| l == "l 1 2"));
    }

    #[test]
    fn invalid_skeleton_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.obj");
        let s = SkeletonFile {
            vertices: vec![Point3::ORIGIN],
            radii: vec![0.0],
            ..Default::default()
        };
        assert!(write_skeleton(&p, &s).is_err());
        let s = SkeletonFile {
            vertices: vec![Point3::ORIGIN],
            radii: vec![1.0],
            edges: vec![[0, 3]],
            ..Default::default()
        };
        assert!(matches!(write_skeleton(&p, &s), Err(Error::IndexOutOfRange { index: 3, .. })));
    }

    #[test]
    fn round_trip_recovers_topology() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let n = 30;
        let s = SkeletonFile {
            vertices: (0..n).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect(),
            radii: (0..n).map(|_| rng.random_range(0.01..0.3)).collect(),
            edges: (0..40).map(|_| [rng.random_range(0..n), rng.random_range(0..n)]).collect(),
            triangles: (0..10)
                .map(|_| [rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n)])
                .collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rt.obj");
        write_skeleton(&p, &s).unwrap();
        let back = read_skeleton(&p).unwrap();
        assert_eq!(back.vertices, s.vertices);
        assert_eq!(back.edges, s.edges);
        assert_eq!(back.triangles, s.triangles);
        for (a, b) in s.radii.iter().zip(&back.radii) {
            assert_eq!(super::super::round_g9(*a), *b);
        }
    }
}
