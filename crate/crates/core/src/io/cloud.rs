use std::fmt::Write as _;
use std::path::Path;

use super::mesh::is_ply;
use super::parse_f64;
use crate::error::{Error, Result};
use crate::geom::Point3;

/// Points with unit normals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrientedPointCloud {
    pub points: Vec<Point3>,
    pub normals: Vec<Point3>,
}

impl OrientedPointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Loads `x y z nx ny nz` text (one point per line) or an ASCII PLY with
/// `nx ny nz` vertex properties. Normals are renormalized.
pub fn load_point_cloud(path: &Path) -> Result<OrientedPointCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (points, raw_normals) = if is_ply(&text) {
        let ply = parse_ply(&text, path)?;
        let normals = ply.normals.ok_or(Error::MissingNormals {
            path: path.to_path_buf(),
            line: ply.header_lines,
        })?;
        let lines: Vec<usize> = (0..ply.positions.len()).map(|i| ply.header_lines + 1 + i).collect();
        (ply.positions, normals.into_iter().zip(lines).collect::<Vec<_>>())
    } else {
        parse_xyzn(&text, path)?
    };
    if points.is_empty() {
        return Err(Error::DegenerateInput(format!("{}: point cloud is empty", path.display())));
    }
    let mut normals = Vec::with_capacity(raw_normals.len());
    for (n, line) in raw_normals {
        normals.push(n.normalized().ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: "zero-length normal".into(),
        })?);
    }
    Ok(OrientedPointCloud { points, normals })
}

type Normals = Vec<(Point3, usize)>;

fn parse_xyzn(text: &str, path: &Path) -> Result<(Vec<Point3>, Normals)> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        match f.len() {
            3 => {
                return Err(Error::MissingNormals {
                    path: path.to_path_buf(),
                    line,
                })
            }
            6 => {
                let v: Vec<f64> = f.iter().map(|t| parse_f64(t, path, line)).collect::<Result<_>>()?;
                points.push(Point3::new(v[0], v[1], v[2]));
                normals.push((Point3::new(v[3], v[4], v[5]), line));
            }
            k => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("expected 6 fields (x y z nx ny nz), found {k}"),
                })
            }
        }
    }
    Ok((points, normals))
}

/// Writes `x y z nx ny nz` lines with round-trip float formatting.
pub fn write_point_cloud(path: &Path, cloud: &OrientedPointCloud) -> Result<()> {
    let mut s = String::new();
    for (p, n) in cloud.points.iter().zip(&cloud.normals) {
        let _ = writeln!(s, "{} {} {} {} {} {}", p.x, p.y, p.z, n.x, n.y, n.z);
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub(crate) struct PlyData {
    pub positions: Vec<Point3>,
    pub normals: Option<Vec<Point3>>,
    pub faces: Vec<(usize, Vec<usize>)>,
    pub header_lines: usize,
}

struct PlyElement {
    name: String,
    count: usize,
    props: Vec<String>,
}

/// Minimal ASCII PLY reader: `vertex` (x y z, optional nx ny nz) and `face`
/// (vertex_indices list) elements; other elements are skipped.
pub(crate) fn parse_ply(text: &str, path: &Path) -> Result<PlyData> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut header_lines = 0;
    let mut ascii = false;
    for (n, raw) in lines.by_ref() {
        header_lines = n + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            ["ply"] | [] => {}
            ["format", fmt, ..] => {
                if *fmt != "ascii" {
                    return Err(err(n + 1, format!("unsupported PLY format `{fmt}`")));
                }
                ascii = true;
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count.parse().map_err(|_| err(n + 1, "bad element count".into()))?,
                props: Vec::new(),
            }),
            ["property", "list", _, _, name] | ["property", _, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| err(n + 1, "property before element".into()))?;
                el.props.push(name.to_string());
            }
            ["end_header"] => break,
            _ => return Err(err(n + 1, format!("unrecognized header line `{raw}`"))),
        }
    }
    if !ascii {
        return Err(err(header_lines, "missing `format ascii` line".into()));
    }
    let mut positions = Vec::new();
    let mut normals: Option<Vec<Point3>> = None;
    let mut faces = Vec::new();
    for el in &elements {
        let col = |name: &str| el.props.iter().position(|p| p == name);
        for _ in 0..el.count {
            let (n, raw) = lines
                .next()
                .ok_or_else(|| err(header_lines, format!("truncated `{}` element", el.name)))?;
            let line = n + 1;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            match el.name.as_str() {
                "vertex" => {
                    let get = |c: Option<usize>| -> Result<Option<f64>> {
                        match c {
                            Some(c) => {
                                let t = toks.get(c).ok_or_else(|| err(line, "missing vertex property".into()))?;
                                parse_f64(t, path, line).map(Some)
                            }
                            None => Ok(None),
                        }
                    };
                    let (x, y, z) = (get(col("x"))?, get(col("y"))?, get(col("z"))?);
                    let (Some(x), Some(y), Some(z)) = (x, y, z) else {
                        return Err(err(line, "vertex element lacks x/y/z".into()));
                    };
                    positions.push(Point3::new(x, y, z));
                    if let (Some(nx), Some(ny), Some(nz)) = (get(col("nx"))?, get(col("ny"))?, get(col("nz"))?) {
                        normals.get_or_insert_with(Vec::new).push(Point3::new(nx, ny, nz));
                    }
                }
                "face" => {
                    let k: usize = toks
                        .first()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(line, "bad face record".into()))?;
                    if toks.len() < k + 1 || k < 3 {
                        return Err(err(line, "bad face record".into()));
                    }
                    let poly = toks[1..=k]
                        .iter()
                        .map(|t| t.parse::<usize>().map_err(|_| err(line, format!("bad index `{t}`"))))
                        .collect::<Result<Vec<_>>>()?;
                    faces.push((line, poly));
                }
                _ => {}
            }
        }
    }
    Ok(PlyData {
        positions,
        normals,
        faces,
        header_lines,
    })
}
