//! Procedural closed test meshes with outward-facing triangles.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::geom::Point3;
use crate::io::TriangleMesh;

/// Axis-aligned box `[lo, hi]`, 12 triangles.
pub fn cuboid(lo: Point3, hi: Point3) -> TriangleMesh {
    let v: Vec<Point3> = (0..8)
        .map(|i| {
            Point3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            )
        })
        .collect();
    let quads = [
        [0, 2, 3, 1], // z = lo
        [4, 5, 7, 6], // z = hi
        [0, 1, 5, 4], // y = lo
        [2, 6, 7, 3], // y = hi
        [0, 4, 6, 2], // x = lo
        [1, 3, 7, 5], // x = hi
    ];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriangleMesh { vertices: v, triangles }
}

/// Unit cube `[0, 1]^3`.
pub fn unit_cube() -> TriangleMesh {
    cuboid(Point3::ORIGIN, Point3::new(1.0, 1.0, 1.0))
}

/// Icosahedron subdivided `level` times and projected onto a sphere.
pub fn icosphere(center: Point3, radius: f64, level: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Point3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::new(x, y, z).normalized().unwrap())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut m = |a: usize, b: usize, v: &mut Vec<Point3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a] + v[b]) * 0.5).normalized().unwrap());
                v.len() - 1
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for [a, b, c] in f {
            let ab = m(a, b, &mut v);
            let bc = m(b, c, &mut v);
            let ca = m(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    TriangleMesh {
        vertices: v.into_iter().map(|p| center + p * radius).collect(),
        triangles: f,
    }
}

/// Surface of revolution about z. `profile` runs from the bottom pole to the
/// top pole as `(radius, z)` pairs; the first and last radii are ignored.
fn revolve(profile: &[(f64, f64)], nu: usize) -> TriangleMesh {
    let rings = &profile[1..profile.len() - 1];
    let mut v = vec![Point3::new(0.0, 0.0, profile[0].1)];
    for &(r, z) in rings {
        for j in 0..nu {
            let a = 2.0 * PI * j as f64 / nu as f64;
            v.push(Point3::new(r * a.cos(), r * a.sin(), z));
        }
    }
    let top = v.len();
    v.push(Point3::new(0.0, 0.0, profile[profile.len() - 1].1));
    let at = |k: usize, j: usize| 1 + k * nu + j % nu;
    let mut t = Vec::new();
    for j in 0..nu {
        t.push([0, at(0, j + 1), at(0, j)]);
    }
    for k in 0..rings.len() - 1 {
        for j in 0..nu {
            let (a, b, c, d) = (at(k, j), at(k, j + 1), at(k + 1, j + 1), at(k + 1, j));
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    let k = rings.len() - 1;
    for j in 0..nu {
        t.push([at(k, j), at(k, j + 1), top]);
    }
    TriangleMesh { vertices: v, triangles: t }
}

/// Capsule along z: a cylinder of `radius` over `z in [-half_length, half_length]`
/// closed by hemispheres.
pub fn capsule(radius: f64, half_length: f64, nu: usize, nv: usize) -> TriangleMesh {
    let nv = nv.max(2);
    let mut profile = Vec::new();
    for i in 0..=nv {
        let phi = -PI / 2.0 + (PI / 2.0) * i as f64 / nv as f64;
        profile.push((radius * phi.cos(), -half_length + radius * phi.sin()));
    }
    let step = radius * (PI / 2.0) / nv as f64;
    let bands = ((2.0 * half_length / step).ceil() as usize).max(1);
    for i in 1..bands {
        profile.push((radius, -half_length + 2.0 * half_length * i as f64 / bands as f64));
    }
    for i in 0..=nv {
        let phi = (PI / 2.0) * i as f64 / nv as f64;
        profile.push((radius * phi.cos(), half_length + radius * phi.sin()));
    }
    revolve(&profile, nu)
}

/// Torus around z with tube centre radius `major` and tube radius `minor`.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> TriangleMesh {
    let mut v = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let w = 2.0 * PI * j as f64 / nv as f64;
            let r = major + minor * w.cos();
            v.push(Point3::new(r * u.cos(), r * u.sin(), minor * w.sin()));
        }
    }
    let at = |i: usize, j: usize| (i % nu) * nv + j % nv;
    let mut t = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    TriangleMesh { vertices: v, triangles: t }
}

/// Icosphere scaled to semi-axes `(a, b, c)`.
pub fn ellipsoid(a: f64, b: f64, c: f64, level: u32) -> TriangleMesh {
    icosphere(Point3::ORIGIN, 1.0, level).map_vertices(|p| Point3::new(a * p.x, b * p.y, c * p.z))
}

/// Star-shaped bumpy sphere: each icosphere vertex direction `d` is pushed to
/// radius `1 + amplitude * s(d)` with a smooth low-frequency `s` in [-1, 1].
pub fn blob(amplitude: f64, level: u32) -> TriangleMesh {
    icosphere(Point3::ORIGIN, 1.0, level).map_vertices(|d| {
        let s = (2.0 * d.x).sin() * (3.0 * d.y).cos() * 0.6 + (2.5 * d.z + 0.5).sin() * 0.4;
        d * (1.0 + amplitude * s)
    })
}

/// Two overlapping spheres of radius 0.8 centred at `z = +-0.7`, revolved
/// as one profile; the waist at `z = 0` has radius ~0.39.
pub fn peanut(nu: usize, nv: usize) -> TriangleMesh {
    let (c, r) = (0.7, 0.8);
    let profile: Vec<(f64, f64)> = (0..=nv)
        .map(|i| {
            let s = i as f64 / nv as f64;
            let z = (c + r) * -(PI * s).cos();
            let d = z.abs() - c;
            ((r * r - d * d).max(0.0).sqrt(), z)
        })
        .collect();
    revolve(&profile, nu)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed, consistently oriented 2-manifold: every directed edge appears once
    /// and its reverse appears once.
    fn assert_closed(m: &TriangleMesh) {
        let mut dir: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &m.triangles {
            for k in 0..3 {
                *dir.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &c) in &dir {
            assert_eq!(c, 1, "edge {a}-{b} repeated");
            assert_eq!(dir.get(&(b, a)), Some(&1), "edge {a}-{b} has no twin");
        }
    }

    fn euler(m: &TriangleMesh) -> i64 {
        let mut e = std::collections::HashSet::new();
        for t in &m.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                e.insert((a.min(b), a.max(b)));
            }
        }
        m.vertices.len() as i64 - e.len() as i64 + m.triangles.len() as i64
    }

    #[test]
    fn shapes_are_closed_with_expected_genus() {
        let meshes = [
            (unit_cube(), 2),
            (icosphere(Point3::ORIGIN, 1.0, 2), 2),
            (capsule(0.1, 0.5, 24, 6), 2),
            (ellipsoid(1.0, 0.5, 0.3, 2), 2),
            (blob(0.25, 3), 2),
            (peanut(32, 40), 2),
            (torus(1.0, 0.3, 32, 16), 0),
        ];
        for (i, (m, chi)) in meshes.iter().enumerate() {
            assert_closed(m);
            assert_eq!(euler(m), *chi, "shape {i}");
            assert!(m.signed_volume() > 0.0, "shape {i} is inside out");
        }
    }

    #[test]
    fn volumes_approach_analytic() {
        assert!((unit_cube().signed_volume() - 1.0).abs() < 1e-12);
        let s = icosphere(Point3::ORIGIN, 1.0, 4).signed_volume();
        assert!((s - 4.0 / 3.0 * PI).abs() < 0.02, "{s}");
        let c = capsule(0.1, 0.5, 64, 16).signed_volume();
        let want = PI * 0.01 * 1.0 + 4.0 / 3.0 * PI * 0.001;
        assert!((c - want).abs() / want < 0.01, "{c} vs {want}");
        let t = torus(1.0, 0.3, 96, 48).signed_volume();
        let want = 2.0 * PI * PI * 1.0 * 0.09;
        assert!((t - want).abs() / want < 0.01);
    }
}
