use rand::Rng;

use crate::geom::{Aabb, Point3};
use crate::io::TriangleMesh;
use crate::rng::{stream_rng, Stage};

const LEAF: usize = 4;
const GRAZE: f64 = 1e-9;
const MAX_RECASTS: u64 = 32;

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    // Leaf when `count > 0`: triangles `order[start..start + count]`.
    start: usize,
    count: usize,
    left: usize,
    right: usize,
}

/// Point-in-mesh classifier: ray parity along three seeded directions with a
/// majority vote. A ray whose hit lands within `1e-9` (barycentric) of a
/// triangle edge, or whose origin lies on a triangle, is replaced by the next
/// seeded direction.
#[derive(Debug, Clone)]
pub struct MeshInside {
    tris: Vec<[Point3; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    directions: Vec<Point3>,
}

enum Cast {
    Hits(usize),
    Graze,
}

impl MeshInside {
    pub fn new(mesh: &TriangleMesh, seed: u64) -> Self {
        let tris: Vec<[Point3; 3]> = (0..mesh.triangles.len()).map(|t| mesh.corners(t)).collect();
        let mut s = MeshInside {
            order: (0..tris.len()).collect(),
            tris,
            nodes: Vec::new(),
            directions: (0..3 * MAX_RECASTS).map(|k| direction(seed, k)).collect(),
        };
        if !s.tris.is_empty() {
            s.build(0, s.tris.len());
        }
        s
    }

    fn tri_box(&self, t: usize) -> Aabb {
        Aabb::from_points(&self.tris[t]).expect("three corners")
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let bbox = self.order[start..end]
            .iter()
            .map(|&t| self.tri_box(t))
            .reduce(|a, b| a.union(&b))
            .expect("nonempty range");
        let id = self.nodes.len();
        self.nodes.push(Node {
            bbox,
            start,
            count: end - start,
            left: usize::MAX,
            right: usize::MAX,
        });
        if end - start <= LEAF {
            return id;
        }
        let ext = bbox.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let tris = &self.tris;
        let key = |t: usize| tris[t][0].axis(axis) + tris[t][1].axis(axis) + tris[t][2].axis(axis);
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| key(a).total_cmp(&key(b)));
        let l = self.build(start, mid);
        let r = self.build(mid, end);
        let n = &mut self.nodes[id];
        n.left = l;
        n.right = r;
        n.count = 0;
        id
    }

    fn cast(&self, o: Point3, d: Point3) -> Cast {
        let inv = Point3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        let mut hits = 0;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !ray_hits_box(o, inv, &node.bbox) {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    match intersect(o, d, &self.tris[t]) {
                        Hit::Miss => {}
                        Hit::Clean => hits += 1,
                        Hit::Graze => return Cast::Graze,
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        Cast::Hits(hits)
    }

    pub fn contains(&self, p: Point3) -> bool {
        if self.nodes.is_empty() || !self.nodes[0].bbox.contains(p) {
            return false;
        }
        let mut votes = 0;
        let mut next = 0;
        for _ in 0..3 {
            let mut parity = None;
            for _ in 0..MAX_RECASTS {
                let d = self.directions[next];
                next += 1;
                if let Cast::Hits(h) = self.cast(p, d) {
                    parity = Some(h % 2 == 1);
                    break;
                }
            }
            if parity.unwrap_or(false) {
                votes += 1;
            }
        }
        votes >= 2
    }
}

fn direction(seed: u64, k: u64) -> Point3 {
    let mut rng = stream_rng(seed, Stage::InsideRays, k);
    loop {
        let v = Point3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n2 = v.norm_squared();
        if n2 > 1e-4 && n2 <= 1.0 {
            return v / n2.sqrt();
        }
    }
}

/// One-off point-in-mesh query; build a [`MeshInside`] for repeated queries.
pub fn inside_mesh(p: Point3, mesh: &TriangleMesh, seed: u64) -> bool {
    MeshInside::new(mesh, seed).contains(p)
}

fn ray_hits_box(o: Point3, inv: Point3, b: &Aabb) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        let (oa, ia) = (o.axis(a), inv.axis(a));
        let mut n = (b.min.axis(a) - oa) * ia;
        let mut f = (b.max.axis(a) - oa) * ia;
        if n > f {
            std::mem::swap(&mut n, &mut f);
        }
        // NaN from 0 * inf means the ray lies in the slab plane; keep it.
        if n.is_nan() || f.is_nan() {
            continue;
        }
        t0 = t0.max(n);
        t1 = t1.min(f * (1.0 + 4.0 * f64::EPSILON));
        if t0 > t1 {
            return false;
        }
    }
    true
}

enum Hit {
    Miss,
    Clean,
    Graze,
}

/// Moller-Trumbore with grazing detection.
fn intersect(o: Point3, d: Point3, t: &[Point3; 3]) -> Hit {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let pv = d.cross(e2);
    let det = e1.dot(pv);
    let scale = e1.norm() * e2.norm();
    if det.abs() <= 1e-12 * scale {
        // Ray parallel to the plane: a coplanar origin counts as grazing.
        let n = e1.cross(e2);
        let dist = (o - t[0]).dot(n).abs();
        return if dist <= GRAZE * scale { Hit::Graze } else { Hit::Miss };
    }
    let inv = 1.0 / det;
    let s = o - t[0];
    let u = s.dot(pv) * inv;
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    let w = 1.0 - u - v;
    if u < -GRAZE || v < -GRAZE || w < -GRAZE {
        return Hit::Miss;
    }
    let dist = e2.dot(q) * inv;
    let len = scale.sqrt();
    if dist < -GRAZE * len {
        return Hit::Miss;
    }
    if u < GRAZE || v < GRAZE || w < GRAZE || dist <= GRAZE * len {
        return Hit::Graze;
    }
    Hit::Clean
}

/// Interior label of a Voronoi vertex from its four dual generators: inside
/// iff `(v - g_k) . n_k < 0` for every generator.
pub fn inside_cloud_label(v: Point3, generators: [usize; 4], points: &[Point3], normals: &[Point3]) -> bool {
    generators.iter().all(|&g| (v - points[g]).dot(normals[g]) < 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use rand::SeedableRng;

    #[test]
    fn cube_center_and_far_point() {
        let m = shapes::unit_cube();
        assert!(inside_mesh(Point3::new(0.5, 0.5, 0.5), &m, 0));
        assert!(!inside_mesh(Point3::new(2.0, 2.0, 2.0), &m, 0));
    }

    #[test]
    fn matches_box_containment() {
        let inside = MeshInside::new(&shapes::unit_cube(), 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let p = Point3::new(
                rng.random_range(-0.5..1.5),
                rng.random_range(-0.5..1.5),
                rng.random_range(-0.5..1.5),
            );
            let want = (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y) && (0.0..=1.0).contains(&p.z);
            assert_eq!(inside.contains(p), want, "{p:?}");
        }
    }

    #[test]
    fn grazing_queries_resolve() {
        let inside = MeshInside::new(&shapes::unit_cube(), 0);
        // Points on the cube diagonal plane, where rays often cross shared edges.
        for i in 1..20 {
            let s = i as f64 / 20.0;
            assert!(inside.contains(Point3::new(s, s, 0.5)));
            assert!(inside.contains(Point3::new(s, 1.0 - s, s)));
        }
    }

    #[test]
    fn sphere_and_torus_analytic() {
        let sphere = MeshInside::new(&shapes::icosphere(Point3::ORIGIN, 1.0, 4), 1);
        let torus = MeshInside::new(&shapes::torus(1.0, 0.3, 96, 48), 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut wrong = 0;
        for _ in 0..2000 {
            let p = Point3::new(
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
            );
            let r = p.norm();
            // Skip the thin shell where the polyhedral and analytic shapes differ.
            if (r - 1.0).abs() > 0.01 {
                wrong += (sphere.contains(p) != (r < 1.0)) as usize;
            }
            let q = ((p.x * p.x + p.y * p.y).sqrt() - 1.0).hypot(p.z);
            if (q - 0.3).abs() > 0.01 {
                wrong += (torus.contains(p) != (q < 0.3)) as usize;
            }
        }
        assert_eq!(wrong, 0);
    }

    #[test]
    fn cloud_label_sign() {
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        ];
        let nrm = vec![Point3::new(0.0, 0.0, 1.0); 4];
        assert!(inside_cloud_label(Point3::new(0.5, 0.5, -0.3), [0, 1, 2, 3], &pts, &nrm));
        assert!(!inside_cloud_label(Point3::new(0.5, 0.5, 0.3), [0, 1, 2, 3], &pts, &nrm));
        let mut flipped = nrm.clone();
        flipped[2] = Point3::new(0.0, 0.0, -1.0);
        // One violating generator suffices for "outside".
        assert!(!inside_cloud_label(Point3::new(0.5, 0.5, -0.3), [0, 1, 2, 3], &pts, &flipped));
    }
}
