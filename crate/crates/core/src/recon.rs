//! Approximate reconstruction of a skeleton as a union of swept-sphere
//! primitives, and the two-sided Hausdorff error against the input surface.
//!
//! The field of a primitive at `p` is the distance from `p` to its closest
//! simplex point `c` minus the radius interpolated at `c`. This is an
//! approximation of the true envelope distance, exact for constant radii.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connect::Skeleton;
use crate::error::{Error, Result};
use crate::geom::{closest_on_segment, closest_on_triangle, triangle_area_vector, Point3, SpatialIndex};
use crate::rng::{stream_rng, Stage};

const INSIDE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MedialPrimitive {
    Sphere { center: Point3, radius: f64 },
    Cone { centers: [Point3; 2], radii: [f64; 2] },
    Slab { centers: [Point3; 3], radii: [f64; 3] },
}

fn unit(rng: &mut impl Rng) -> Point3 {
    Point3::from_array(UnitSphere.sample(rng))
}

/// Any unit vector orthogonal to `d` (unit).
fn orthogonal(d: Point3) -> Point3 {
    let a = if d.x.abs() < 0.9 {
        Point3::new(1.0, 0.0, 0.0)
    } else {
        Point3::new(0.0, 1.0, 0.0)
    };
    d.cross(a).normalized().expect("non-parallel helper axis")
}

impl MedialPrimitive {
    pub fn field(&self, p: Point3) -> f64 {
        match *self {
            MedialPrimitive::Sphere { center, radius } => p.distance(center) - radius,
            MedialPrimitive::Cone { centers: [a, b], radii: [ra, rb] } => {
                let (c, t) = closest_on_segment(p, a, b);
                p.distance(c) - (ra + (rb - ra) * t)
            }
            MedialPrimitive::Slab { centers: [a, b, c], radii } => {
                let (q, w) = closest_on_triangle(p, a, b, c);
                p.distance(q) - (w[0] * radii[0] + w[1] * radii[1] + w[2] * radii[2])
            }
        }
    }

    /// Bounding sphere of the primitive's solid.
    fn bound(&self) -> (Point3, f64) {
        let (pts, radii): (&[Point3], &[f64]) = match self {
            MedialPrimitive::Sphere { center, radius } => (std::slice::from_ref(center), std::slice::from_ref(radius)),
            MedialPrimitive::Cone { centers, radii } => (centers, radii),
            MedialPrimitive::Slab { centers, radii } => (centers, radii),
        };
        let c = pts.iter().fold(Point3::ORIGIN, |s, &p| s + p) / pts.len() as f64;
        let r = pts
            .iter()
            .zip(radii)
            .map(|(&p, &r)| p.distance(c) + r)
            .fold(0.0, f64::max);
        (c, r)
    }

    /// Area of the zero set of this primitive's own field that `sample` draws from:
    /// the whole sphere, the lateral surface of a cone, both faces of a slab.
    fn area(&self) -> f64 {
        match *self {
            MedialPrimitive::Sphere { radius, .. } => 4.0 * PI * radius * radius,
            MedialPrimitive::Cone { centers: [a, b], radii: [ra, rb] } => {
                PI * (ra + rb) * a.distance(b).hypot(rb - ra)
            }
            MedialPrimitive::Slab { centers, radii } => {
                let area = 0.5 * triangle_area_vector(centers[0], centers[1], centers[2]).norm();
                2.0 * area * (1.0 + slab_gradient(&centers, &radii).norm_squared()).sqrt()
            }
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Point3 {
        match *self {
            MedialPrimitive::Sphere { center, radius } => center + unit(rng) * radius,
            MedialPrimitive::Cone { centers: [a, b], radii: [ra, rb] } => {
                // Inverse CDF of a density proportional to r(t) on [0, 1].
                let u: f64 = rng.random();
                let t = u * (ra + rb) / (ra + (ra * ra + (rb * rb - ra * ra) * u).max(0.0).sqrt());
                let d = (b - a).normalized().expect("non-degenerate cone");
                let e1 = orthogonal(d);
                let e2 = d.cross(e1);
                let phi = 2.0 * PI * rng.random::<f64>();
                a + (b - a) * t + (e1 * phi.cos() + e2 * phi.sin()) * (ra + (rb - ra) * t)
            }
            MedialPrimitive::Slab { centers: [a, b, c], radii } => {
                let (mut s, mut t): (f64, f64) = (rng.random(), rng.random());
                if s + t > 1.0 {
                    s = 1.0 - s;
                    t = 1.0 - t;
                }
                let n = triangle_area_vector(a, b, c).normalized().expect("non-degenerate slab");
                let r = radii[0] * (1.0 - s - t) + radii[1] * s + radii[2] * t;
                let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
                a + (b - a) * s + (c - a) * t + n * (side * r)
            }
        }
    }
}

/// In-plane gradient of the barycentric radius interpolation.
fn slab_gradient(c: &[Point3; 3], r: &[f64; 3]) -> Point3 {
    let (e1, e2) = (c[1] - c[0], c[2] - c[0]);
    let (a, b) = (r[1] - r[0], r[2] - r[0]);
    let (g11, g12, g22) = (e1.dot(e1), e1.dot(e2), e2.dot(e2));
    let det = g11 * g22 - g12 * g12;
    let alpha = (g22 * a - g12 * b) / det;
    let beta = (g11 * b - g12 * a) / det;
    e1 * alpha + e2 * beta
}

/// Sphere per vertex, cone per edge, slab per triangle; simplices with
/// coincident or collinear vertices are left to their lower-order faces.
pub fn primitives(s: &Skeleton) -> Vec<MedialPrimitive> {
    let v = &s.vertices;
    let r = &s.radii;
    let mut out: Vec<MedialPrimitive> = v
        .iter()
        .zip(r)
        .map(|(&center, &radius)| MedialPrimitive::Sphere { center, radius })
        .collect();
    for &[a, b] in &s.edges {
        if v[a].distance(v[b]) > 1e-12 {
            out.push(MedialPrimitive::Cone {
                centers: [v[a], v[b]],
                radii: [r[a], r[b]],
            });
        }
    }
    for &[a, b, c] in &s.triangles {
        let area2 = triangle_area_vector(v[a], v[b], v[c]).norm();
        let longest = v[a].distance(v[b]).max(v[b].distance(v[c])).max(v[c].distance(v[a]));
        if area2 > 1e-12 * longest * longest {
            out.push(MedialPrimitive::Slab {
                centers: [v[a], v[b], v[c]],
                radii: [r[a], r[b], r[c]],
            });
        }
    }
    out
}

/// A skeleton's primitives with bounding spheres for pruned field queries.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    prims: Vec<MedialPrimitive>,
    bounds: Vec<(Point3, f64)>,
}

impl Reconstruction {
    pub fn new(s: &Skeleton) -> Result<Self> {
        if s.vertices.is_empty() {
            return Err(Error::InvalidParameter("empty skeleton".into()));
        }
        s.validate()?;
        let prims = primitives(s);
        let bounds = prims.iter().map(|p| p.bound()).collect();
        Ok(Reconstruction { prims, bounds })
    }

    pub fn primitives(&self) -> &[MedialPrimitive] {
        &self.prims
    }

    /// Minimum primitive field at `p`; negative inside the union.
    pub fn field(&self, p: Point3) -> f64 {
        let mut best = f64::INFINITY;
        for (prim, &(c, r)) in self.prims.iter().zip(&self.bounds) {
            if p.distance(c) - r < best {
                best = best.min(prim.field(p));
            }
        }
        best
    }
}

/// One-off field query; build a [`Reconstruction`] for repeated queries.
pub fn field_distance(p: Point3, s: &Skeleton) -> Result<f64> {
    Ok(Reconstruction::new(s)?.field(p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionSamples {
    /// Samples kept on the union boundary.
    pub points: Vec<Point3>,
    /// Samples drawn before discarding interior ones.
    pub drawn: usize,
}

/// Draws `n` samples over all primitive surfaces in proportion to area and
/// keeps those not strictly inside another primitive.
pub fn sample_reconstruction(s: &Skeleton, n: usize, seed: u64) -> Result<ReconstructionSamples> {
    let rec = Reconstruction::new(s)?;
    let mut cdf = Vec::with_capacity(rec.prims.len());
    let mut total = 0.0;
    for p in &rec.prims {
        total += p.area();
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("skeleton has zero surface area".into()));
    }
    let points: Vec<Point3> = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = stream_rng(seed, Stage::EvalReconstruction, i as u64);
            let u = rng.random::<f64>() * total;
            let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let q = rec.prims[k].sample(&mut rng);
            (rec.field(q) >= -INSIDE_TOL).then_some(q)
        })
        .collect();
    Ok(ReconstructionSamples { points, drawn: n })
}

/// Hausdorff errors as percentages of the bounding-box diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTriple {
    /// Surface to reconstruction.
    pub eps1: f64,
    /// Reconstruction to surface.
    pub eps2: f64,
    pub eps: f64,
}

fn directed(from: &[Point3], to: &SpatialIndex) -> f64 {
    from.par_iter().map(|&p| to.nearest(p).1).reduce(|| 0.0, f64::max)
}

pub fn hausdorff(surface: &[Point3], reconstruction: &[Point3], diagonal: f64) -> Result<ErrorTriple> {
    if surface.is_empty() || reconstruction.is_empty() {
        return Err(Error::InvalidParameter("Hausdorff distance needs two nonempty sets".into()));
    }
    if !(diagonal > 0.0) {
        return Err(Error::InvalidParameter(format!("diagonal must be > 0, got {diagonal}")));
    }
    let eps1 = 100.0 * directed(surface, &SpatialIndex::new(reconstruction)) / diagonal;
    let eps2 = 100.0 * directed(reconstruction, &SpatialIndex::new(surface)) / diagonal;
    Ok(ErrorTriple {
        eps1,
        eps2,
        eps: eps1.max(eps2),
    })
}
