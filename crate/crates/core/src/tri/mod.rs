//! Delaunay and regular (weighted Delaunay) tetrahedralizations.
//!
//! Construction is incremental: points are inserted in Morton order and each
//! insertion removes the tetrahedra whose orthospheres the new point
//! conflicts with, then re-links the cavity boundary to the new vertex. This
//! is the beneath-beyond update of the lower convex hull of the lifted points
//! `(p, |p|^2 - w)`. The hull is closed by a vertex at infinity, so points
//! outside the current hull need no special handling.
//!
//! Coordinates receive a deterministic per-index perturbation of
//! `1e-9 * diagonal` before any predicate runs, which breaks cospherical and
//! coplanar ties. Predicates are evaluated on the perturbed coordinates with
//! exact arithmetic where the floating-point filter fails.

mod expansion;
pub mod predicates;

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{bbox_diagonal, Aabb, Point3};
use crate::rng::{stream_rng, Stage};
pub use predicates::{orient3d, power_test};

const PERTURBATION: f64 = 1e-9;
const PERTURBATION_SEED: u64 = 0x5eed;

/// Coordinate perturbation a triangulation of `points` applies.
pub fn jitter(points: &[Point3]) -> f64 {
    PERTURBATION * bbox_diagonal(points)
}
const INF: usize = usize::MAX;
const NONE: usize = usize::MAX;

/// A point with a squared-radius weight; power distance is `|x - p|^2 - weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPoint {
    pub position: Point3,
    pub weight: f64,
}

impl WeightedPoint {
    pub fn new(position: Point3, weight: f64) -> Self {
        WeightedPoint { position, weight }
    }
}

/// A finished tetrahedralization. Tetrahedra are positively oriented on the
/// perturbed coordinates; `neighbors[t][i]` is the tetrahedron across the
/// face opposite `tets[t][i]` (`None` on the convex hull).
#[derive(Debug, Clone)]
pub struct Triangulation {
    points: Vec<Point3>,
    weights: Vec<f64>,
    perturbed: Vec<Point3>,
    tets: Vec<[usize; 4]>,
    neighbors: Vec<[Option<usize>; 4]>,
    redundant: Vec<usize>,
    perturbation: f64,
}

impl Triangulation {
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Coordinates the predicates actually ran on.
    pub fn perturbed_points(&self) -> &[Point3] {
        &self.perturbed
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn neighbors(&self) -> &[[Option<usize>; 4]] {
        &self.neighbors
    }

    /// Input indices that appear in no tetrahedron, ascending.
    pub fn redundant(&self) -> &[usize] {
        &self.redundant
    }

    /// Magnitude of the coordinate perturbation.
    pub fn perturbation(&self) -> f64 {
        self.perturbation
    }

    /// All edges, sorted and deduplicated, as ascending index pairs.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = Vec::with_capacity(self.tets.len() * 6);
        for t in &self.tets {
            for i in 0..4 {
                for j in i + 1..4 {
                    e.push(sorted2(t[i], t[j]));
                }
            }
        }
        e.sort_unstable();
        e.dedup();
        e
    }

    /// All triangles, sorted and deduplicated, as ascending index triples.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let mut f: Vec<[usize; 3]> = Vec::with_capacity(self.tets.len() * 4);
        for t in &self.tets {
            for i in 0..4 {
                f.push(face_key(t, i));
            }
        }
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Orthocentre and squared orthoradius of tetrahedron `t` from the
    /// unperturbed input.
    pub fn orthosphere(&self, t: usize) -> Option<(Point3, f64)> {
        let v = self.tets[t];
        orthosphere(v.map(|i| self.points[i]), v.map(|i| self.weights[i]))
    }
}

fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn face_key(t: &[usize; 4], i: usize) -> [usize; 3] {
    let mut f = [0; 3];
    let mut k = 0;
    for (j, &v) in t.iter().enumerate() {
        if j != i {
            f[k] = v;
            k += 1;
        }
    }
    f.sort_unstable();
    f
}

/// Centre `c` and `rho^2` with `|c - p_i|^2 - w_i = rho^2` for all four points.
/// `None` for a flat tetrahedron.
pub fn orthosphere(p: [Point3; 4], w: [f64; 4]) -> Option<(Point3, f64)> {
    let u = [p[1] - p[0], p[2] - p[0], p[3] - p[0]];
    let b = [1, 2, 3].map(|i| u[i - 1].norm_squared() - w[i] + w[0]);
    let det = u[0].dot(u[1].cross(u[2]));
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let c = (u[1].cross(u[2]) * b[0] + u[2].cross(u[0]) * b[1] + u[0].cross(u[1]) * b[2]) / (2.0 * det);
    Some((p[0] + c, c.norm_squared() - w[0]))
}

/// Circumcentre and circumradius of a tetrahedron.
pub fn circumsphere(p: [Point3; 4]) -> Option<(Point3, f64)> {
    orthosphere(p, [0.0; 4]).map(|(c, r2)| (c, r2.max(0.0).sqrt()))
}

/// Regular triangulation of weighted points.
pub fn regular_triangulation(points: &[WeightedPoint]) -> Result<Triangulation> {
    let pos: Vec<Point3> = points.iter().map(|p| p.position).collect();
    let w: Vec<f64> = points.iter().map(|p| p.weight).collect();
    build(pos, w)
}

/// Delaunay triangulation (all weights zero).
pub fn delaunay(points: &[Point3]) -> Result<Triangulation> {
    build(points.to_vec(), vec![0.0; points.len()])
}

fn build(points: Vec<Point3>, weights: Vec<f64>) -> Result<Triangulation> {
    let n = points.len();
    if n < 4 {
        return Err(Error::DegenerateInput(format!("triangulation needs at least 4 points, got {n}")));
    }
    if let Some(i) = (0..n).find(|&i| !points[i].is_finite() || !weights[i].is_finite()) {
        return Err(Error::DegenerateInput(format!("point {i} has a non-finite coordinate or weight")));
    }
    if initial_simplex(&points, &(0..n).collect::<Vec<_>>()).is_none() {
        return Err(Error::DegenerateInput("all points are coplanar".into()));
    }
    let perturbation = jitter(&points);
    let perturbed: Vec<Point3> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = stream_rng(PERTURBATION_SEED, Stage::Jitter, i as u64);
            let mut d = || rng.random_range(-1.0..=1.0) * perturbation;
            Point3::new(p.x + d(), p.y + d(), p.z + d())
        })
        .collect();
    let order = morton_order(&perturbed);
    let start = initial_simplex(&perturbed, &order)
        .ok_or_else(|| Error::DegenerateInput("perturbed points are coplanar".into()))?;

    let mut b = Builder::new(&perturbed, &weights, start);
    for &q in &order {
        if !start.contains(&q) {
            b.insert(q);
        }
    }
    let (tets, neighbors, present) = b.finish();
    let redundant = (0..n).filter(|&i| !present[i]).collect();
    Ok(Triangulation {
        points,
        weights,
        perturbed,
        tets,
        neighbors,
        redundant,
        perturbation,
    })
}

fn morton_order(p: &[Point3]) -> Vec<usize> {
    fn spread(mut x: u64) -> u64 {
        x &= 0x1f_ffff;
        x = (x | x << 32) & 0x1f00000000ffff;
        x = (x | x << 16) & 0x1f0000ff0000ff;
        x = (x | x << 8) & 0x100f00f00f00f00f;
        x = (x | x << 4) & 0x10c30c30c30c30c3;
        (x | x << 2) & 0x1249249249249249
    }
    let bb = Aabb::from_points(p).expect("nonempty");
    let ext = bb.extent();
    let s = ext.x.max(ext.y).max(ext.z).max(f64::MIN_POSITIVE);
    let q = |v: f64, lo: f64| (((v - lo) / s) * 2_097_151.0).clamp(0.0, 2_097_151.0) as u64;
    let mut keyed: Vec<(u64, usize)> = p
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let code = spread(q(v.x, bb.min.x)) | spread(q(v.y, bb.min.y)) << 1 | spread(q(v.z, bb.min.z)) << 2;
            (code, i)
        })
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// A well-shaped, non-flat starting tetrahedron drawn from `order`.
fn initial_simplex(p: &[Point3], order: &[usize]) -> Option<[usize; 4]> {
    let a = order[0];
    let far = |f: &dyn Fn(usize) -> f64| {
        order
            .iter()
            .copied()
            .map(|i| (f(i), i))
            .fold((0.0, NONE), |best, c| if c.0 > best.0 { c } else { best })
    };
    let (_, b) = far(&|i| p[i].distance_squared(p[a]));
    if b == NONE {
        return None;
    }
    let (_, c) = far(&|i| (p[b] - p[a]).cross(p[i] - p[a]).norm_squared());
    if c == NONE {
        return None;
    }
    let (_, d) = far(&|i| orient3d(p[a], p[b], p[c], p[i]).abs());
    if d == NONE {
        // Every orient3d sign was exactly zero.
        return None;
    }
    let vol = predicates::orient3d(p[a], p[b], p[c], p[d]);
    Some(if vol > 0.0 { [a, b, c, d] } else { [b, a, c, d] })
}

struct Builder<'a> {
    p: &'a [Point3],
    w: &'a [f64],
    cells: Vec<[usize; 4]>,
    nbr: Vec<[usize; 4]>,
    alive: Vec<bool>,
    free: Vec<usize>,
    mark: Vec<u32>,
    stamp: u32,
    hint: usize,
    rng: ChaCha8Rng,
    cavity: Vec<usize>,
    boundary: Vec<(usize, usize)>,
    stack: Vec<usize>,
}

impl<'a> Builder<'a> {
    fn new(p: &'a [Point3], w: &'a [f64], s: [usize; 4]) -> Self {
        let mut b = Builder {
            p,
            w,
            cells: Vec::new(),
            nbr: Vec::new(),
            alive: Vec::new(),
            free: Vec::new(),
            mark: Vec::new(),
            stamp: 0,
            hint: 0,
            rng: stream_rng(PERTURBATION_SEED, Stage::Jitter, u64::MAX),
            cavity: Vec::new(),
            boundary: Vec::new(),
            stack: Vec::new(),
        };
        let c0 = b.alloc(s);
        let mut faces = HashMap::new();
        b.link_faces(c0, &mut faces);
        for i in 0..4 {
            let mut v = s;
            v[i] = INF;
            // The vertex at infinity sits on the far side of face i.
            v.swap((i + 1) % 4, (i + 2) % 4);
            let c = b.alloc(v);
            b.link_faces(c, &mut faces);
        }
        b.hint = c0;
        b
    }

    fn alloc(&mut self, v: [usize; 4]) -> usize {
        if let Some(c) = self.free.pop() {
            self.cells[c] = v;
            self.nbr[c] = [NONE; 4];
            self.alive[c] = true;
            self.mark[c] = 0;
            c
        } else {
            self.cells.push(v);
            self.nbr.push([NONE; 4]);
            self.alive.push(true);
            self.mark.push(0);
            self.cells.len() - 1
        }
    }

    fn link_faces(&mut self, c: usize, faces: &mut HashMap<[usize; 3], (usize, usize)>) {
        for i in 0..4 {
            let key = face_key(&self.cells[c], i);
            if let Some((o, j)) = faces.remove(&key) {
                self.nbr[c][i] = o;
                self.nbr[o][j] = c;
            } else {
                faces.insert(key, (c, i));
            }
        }
    }

    fn inf_slot(&self, c: usize) -> Option<usize> {
        self.cells[c].iter().position(|&v| v == INF)
    }

    fn orient_with(&self, c: usize, i: usize, q: usize) -> f64 {
        let mut v = self.cells[c];
        v[i] = q;
        orient3d(self.p[v[0]], self.p[v[1]], self.p[v[2]], self.p[v[3]])
    }

    fn conflict(&self, c: usize, q: usize) -> bool {
        match self.inf_slot(c) {
            Some(k) => {
                let o = self.orient_with(c, k, q);
                if o != 0.0 {
                    o > 0.0
                } else {
                    self.finite_conflict(self.nbr[c][k], q)
                }
            }
            None => self.finite_conflict(c, q),
        }
    }

    fn finite_conflict(&self, c: usize, q: usize) -> bool {
        let t = self.cells[c].map(|i| (self.p[i], self.w[i]));
        power_test(t, (self.p[q], self.w[q])) > 0.0
    }

    fn locate(&mut self, q: usize) -> usize {
        let mut c = self.hint;
        if let Some(k) = self.inf_slot(c) {
            c = self.nbr[c][k];
        }
        let cap = 64 + 4 * self.cells.len();
        for _ in 0..cap {
            if self.inf_slot(c).is_some() {
                return c;
            }
            let start = self.rng.random_range(0..4);
            let next = (0..4)
                .map(|j| (start + j) % 4)
                .find(|&i| self.orient_with(c, i, q) < 0.0);
            match next {
                Some(i) => c = self.nbr[c][i],
                None => return c,
            }
        }
        self.locate_brute(q)
    }

    fn locate_brute(&self, q: usize) -> usize {
        let live = || (0..self.cells.len()).filter(|&c| self.alive[c]);
        live()
            .filter(|&c| self.inf_slot(c).is_none())
            .find(|&c| (0..4).all(|i| self.orient_with(c, i, q) >= 0.0))
            .or_else(|| {
                live().find(|&c| matches!(self.inf_slot(c), Some(k) if self.orient_with(c, k, q) > 0.0))
            })
            .unwrap_or(self.hint)
    }

    /// Inserts point `q`; returns false if it is redundant.
    fn insert(&mut self, q: usize) -> bool {
        let start = self.locate(q);
        if !self.conflict(start, q) {
            return false;
        }
        self.stamp += 2;
        let (inside, outside) = (self.stamp, self.stamp + 1);
        self.cavity.clear();
        self.boundary.clear();
        self.stack.clear();
        self.mark[start] = inside;
        self.cavity.push(start);
        self.stack.push(start);
        while let Some(c) = self.stack.pop() {
            for i in 0..4 {
                let n = self.nbr[c][i];
                if self.mark[n] == inside {
                    continue;
                }
                if self.mark[n] != outside && self.conflict(n, q) {
                    self.mark[n] = inside;
                    self.cavity.push(n);
                    self.stack.push(n);
                } else {
                    self.mark[n] = outside;
                    self.boundary.push((c, i));
                }
            }
        }
        let mut faces = HashMap::with_capacity(self.boundary.len() * 3);
        let boundary = std::mem::take(&mut self.boundary);
        let mut last = start;
        for &(c, i) in &boundary {
            let mut v = self.cells[c];
            v[i] = q;
            let outer = self.nbr[c][i];
            let nc = self.alloc(v);
            self.nbr[nc][i] = outer;
            let back = self.nbr[outer].iter().position(|&x| x == c).expect("adjacency is symmetric");
            self.nbr[outer][back] = nc;
            for j in (0..4).filter(|&j| j != i) {
                let key = face_key(&v, j);
                if let Some((o, oj)) = faces.remove(&key) {
                    self.nbr[nc][j] = o;
                    self.nbr[o][oj] = nc;
                } else {
                    faces.insert(key, (nc, j));
                }
            }
            last = nc;
        }
        debug_assert!(faces.is_empty(), "cavity boundary is not closed");
        self.boundary = boundary;
        for k in 0..self.cavity.len() {
            let c = self.cavity[k];
            self.alive[c] = false;
            self.free.push(c);
        }
        self.hint = last;
        true
    }

    fn finish(self) -> (Vec<[usize; 4]>, Vec<[Option<usize>; 4]>, Vec<bool>) {
        let mut present = vec![false; self.p.len()];
        let mut id = vec![NONE; self.cells.len()];
        let mut tets = Vec::new();
        for c in 0..self.cells.len() {
            if !self.alive[c] {
                continue;
            }
            for &v in &self.cells[c] {
                if v != INF {
                    present[v] = true;
                }
            }
            if self.inf_slot(c).is_none() {
                id[c] = tets.len();
                tets.push(self.cells[c]);
            }
        }
        let neighbors = (0..self.cells.len())
            .filter(|&c| id[c] != NONE)
            .map(|c| self.nbr[c].map(|n| if id[n] == NONE { None } else { Some(id[n]) }))
            .collect();
        (tets, neighbors, present)
    }
}

/// A Voronoi vertex: the circumcentre of a Delaunay tetrahedron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiVertex {
    pub tet: usize,
    pub center: Point3,
    pub radius: f64,
}

#[derive(Debug, Clone, Default)]
pub struct VoronoiVertices {
    pub vertices: Vec<VoronoiVertex>,
    /// Tetrahedra skipped because their circumradius exceeds ten bounding-box
    /// diagonals (or they are flat).
    pub skipped: usize,
}

/// One circumcentre per tetrahedron, computed on the unperturbed points.
pub fn voronoi_vertices(t: &Triangulation) -> VoronoiVertices {
    let limit = 10.0 * bbox_diagonal(&t.points);
    let mut out = VoronoiVertices::default();
    for (k, tet) in t.tets.iter().enumerate() {
        match circumsphere(tet.map(|i| t.points[i])) {
            Some((center, radius)) if radius <= limit && center.is_finite() => {
                out.vertices.push(VoronoiVertex { tet: k, center, radius })
            }
            _ => out.skipped += 1,
        }
    }
    if out.skipped > 0 {
        log::debug!("skipped {} near-degenerate tetrahedra", out.skipped);
    }
    out
}

/// Edges and triangles of `t` whose vertices all belong to `marked`, sorted
/// and deduplicated.
pub fn simplices_among(t: &Triangulation, marked: &[usize]) -> (Vec<[usize; 2]>, Vec<[usize; 3]>) {
    let mut m = vec![false; t.points.len()];
    for &i in marked {
        if i < m.len() {
            m[i] = true;
        }
    }
    let mut edges = Vec::new();
    let mut tris = Vec::new();
    for tet in &t.tets {
        for i in 0..4 {
            if m[tet[i]] {
                for j in i + 1..4 {
                    if m[tet[j]] {
                        edges.push(sorted2(tet[i], tet[j]));
                    }
                }
            }
            let f = face_key(tet, i);
            if f.iter().all(|&v| m[v]) {
                tris.push(f);
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    tris.sort_unstable();
    tris.dedup();
    (edges, tris)
}
