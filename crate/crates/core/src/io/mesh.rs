use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use super::parse_f64;
use crate::error::{Error, Result};
use crate::geom::{triangle_area_vector, Aabb, Point3};

/// Indexed triangle mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Builds a mesh, dropping triangles with repeated indices or zero area.
    /// Returns the mesh and the number of dropped triangles.
    pub fn cleaned(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> (TriangleMesh, usize) {
        let before = triangles.len();
        let triangles: Vec<[usize; 3]> = triangles
            .into_iter()
            .filter(|t| {
                t[0] != t[1]
                    && t[1] != t[2]
                    && t[0] != t[2]
                    && triangle_area_vector(vertices[t[0]], vertices[t[1]], vertices[t[2]])
                        .norm_squared()
                        > 0.0
            })
            .collect();
        let dropped = before - triangles.len();
        (TriangleMesh { vertices, triangles }, dropped)
    }

    pub fn corners(&self, t: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn bbox(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    /// Same mesh with every vertex passed through `f`.
    pub fn map_vertices(&self, f: impl Fn(Point3) -> Point3) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Surface area.
    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                0.5 * triangle_area_vector(a, b, c).norm()
            })
            .sum()
    }

    /// Signed enclosed volume (positive for outward-oriented closed meshes).
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }
}

/// Loads an ASCII OBJ or PLY mesh. Polygons are fan-triangulated; degenerate
/// triangles are dropped with a warning.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (vertices, faces) = if is_ply(&text) {
        let ply = super::cloud::parse_ply(&text, path)?;
        (ply.positions, ply.faces)
    } else {
        parse_obj(&text, path)?
    };
    let mut triangles = Vec::with_capacity(faces.len());
    for (line, poly) in faces {
        for &i in &poly {
            if i >= vertices.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("vertex index {} out of range ({} vertices)", i + 1, vertices.len()),
                });
            }
        }
        for k in 1..poly.len().saturating_sub(1) {
            triangles.push([poly[0], poly[k], poly[k + 1]]);
        }
    }
    let (mesh, dropped) = TriangleMesh::cleaned(vertices, triangles);
    if dropped > 0 {
        warn!("{}: dropped {dropped} degenerate triangles", path.display());
    }
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok(mesh)
}

pub(crate) fn is_ply(text: &str) -> bool {
    text.lines().next().map(str::trim) == Some("ply")
}

type Faces = Vec<(usize, Vec<usize>)>;

fn parse_obj(text: &str, path: &Path) -> Result<(Vec<Point3>, Faces)> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
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
                vertices.push(Point3::new(
                    parse_f64(c[0], path, line)?,
                    parse_f64(c[1], path, line)?,
                    parse_f64(c[2], path, line)?,
                ));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for t in toks {
                    poly.push(parse_obj_index(t, vertices.len(), path, line)?);
                }
                if poly.len() < 3 {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        msg: "face needs at least 3 vertices".into(),
                    });
                }
                faces.push((line, poly));
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

/// OBJ index token (`7`, `7/1/2`, `-1`) to a 0-based index.
pub(crate) fn parse_obj_index(tok: &str, nverts: usize, path: &Path, line: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let bad = || Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("invalid vertex index `{tok}`"),
    };
    let v: i64 = head.parse().map_err(|_| bad())?;
    if v > 0 {
        Ok((v - 1) as usize)
    } else if v < 0 && (-v) as usize <= nverts {
        Ok((nverts as i64 + v) as usize)
    } else {
        Err(bad())
    }
}

/// Writes an OBJ with shortest round-trip float formatting.
pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
