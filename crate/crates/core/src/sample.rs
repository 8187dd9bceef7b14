//! Surface sample sets: the coverage universe and the generators for Voronoi
//! candidates.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{triangle_area_vector, Point3};
use crate::io::{OrientedPointCloud, TriangleMesh};
use crate::rng::{stream_rng, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    Mesh,
    Cloud,
}

/// Points on the input boundary, optionally with unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSampleSet {
    pub points: Vec<Point3>,
    pub normals: Option<Vec<Point3>>,
    pub source: SampleSource,
}

impl SurfaceSampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Draws `m` area-uniform samples from `mesh`: a triangle is chosen with
/// probability proportional to its area, then a uniform barycentric point.
/// Each sample uses its own index-derived RNG stream keyed by `seed` and
/// `stage`, and carries its triangle's face normal.
pub fn sample_mesh_surface_stage(
    mesh: &TriangleMesh,
    m: usize,
    seed: u64,
    stage: Stage,
) -> Result<SurfaceSampleSet> {
    if m == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(mesh.triangles.len());
    let mut normals = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.corners(t);
        let av = triangle_area_vector(a, b, c);
        let area = 0.5 * av.norm();
        total += area;
        cdf.push(total);
        normals.push(av.normalized().unwrap_or(Point3::new(0.0, 0.0, 1.0)));
    }
    if !(total > 0.0) {
        return Err(Error::EmptyMesh);
    }
    let (points, nrm): (Vec<Point3>, Vec<Point3>) = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, stage, i as u64);
            let u: f64 = rng.random::<f64>() * total;
            let t = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let (mut r1, mut r2): (f64, f64) = (rng.random(), rng.random());
            if r1 + r2 > 1.0 {
                r1 = 1.0 - r1;
                r2 = 1.0 - r2;
            }
            let [a, b, c] = mesh.corners(t);
            (a + (b - a) * r1 + (c - a) * r2, normals[t])
        })
        .unzip();
    Ok(SurfaceSampleSet {
        points,
        normals: Some(nrm),
        source: SampleSource::Mesh,
    })
}

/// [`sample_mesh_surface_stage`] on the cover-sample stream.
pub fn sample_mesh_surface(mesh: &TriangleMesh, m: usize, seed: u64) -> Result<SurfaceSampleSet> {
    sample_mesh_surface_stage(mesh, m, seed, Stage::CoverSamples)
}

/// Wraps an oriented cloud as a sample set; normals are carried unchanged.
pub fn as_samples(cloud: &OrientedPointCloud) -> SurfaceSampleSet {
    SurfaceSampleSet {
        points: cloud.points.clone(),
        normals: Some(cloud.normals.clone()),
        source: SampleSource::Cloud,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> TriangleMesh {
        // Areas 1 and 3, well separated along x.
        TriangleMesh {
            vertices: vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(10.0, 0.0, 0.0),
                Point3::new(16.0, 0.0, 0.0),
                Point3::new(10.0, 1.0, 0.0),
            ],
            triangles: vec![[0, 1, 2], [3, 4, 5]],
        }
    }

    #[test]
    fn area_weighting_binomial_bound() {
        // Binomial(4000, 3/4): sd = sqrt(4000 * 3/16) = 27.4; [2850, 3150] is
        // beyond 5 sd on either side.
        let s = sample_mesh_surface(&two_triangles(), 4000, 1).unwrap();
        let second = s.points.iter().filter(|p| p.x >= 10.0).count();
        assert!((2850..=3150).contains(&second), "{second}");
    }

    #[test]
    fn area_fractions_within_three_sigma_over_seeds() {
        let mesh = two_triangles();
        let m = 2000;
        let sd = (m as f64 * 0.75 * 0.25).sqrt();
        for seed in 0..10 {
            let s = sample_mesh_surface(&mesh, m, seed).unwrap();
            let second = s.points.iter().filter(|p| p.x >= 10.0).count() as f64;
            assert!((second - 0.75 * m as f64).abs() < 3.0 * sd, "seed {seed}: {second}");
        }
    }

    #[test]
    fn single_sample_lies_on_a_triangle() {
        let mesh = two_triangles();
        let s = sample_mesh_surface(&mesh, 1, 5).unwrap();
        assert_eq!(s.len(), 1);
        let p = s.points[0];
        assert_eq!(p.z, 0.0);
        let inside = |a: Point3, b: Point3, c: Point3| {
            let (q, _) = crate::geom::closest_on_triangle(p, a, b, c);
            (q - p).norm() < 1e-12
        };
        let [a, b, c] = mesh.corners(0);
        let [d, e, f] = mesh.corners(1);
        assert!(inside(a, b, c) || inside(d, e, f));
        assert_eq!(s.normals.unwrap()[0], Point3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn deterministic_per_seed() {
        let mesh = two_triangles();
        let a = sample_mesh_surface(&mesh, 300, 9).unwrap();
        let b = sample_mesh_surface(&mesh, 300, 9).unwrap();
        let c = sample_mesh_surface(&mesh, 300, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // Prefix stability: per-index streams make the first k samples independent of m.
        let d = sample_mesh_surface(&mesh, 100, 9).unwrap();
        assert_eq!(&a.points[..100], &d.points[..]);
    }

    #[test]
    fn cloud_wrapping_keeps_normals() {
        let cloud = OrientedPointCloud {
            points: (0..2000).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect(),
            normals: (0..2000)
                .map(|i| Point3::new(0.0, (i as f64).sin(), (i as f64).cos()))
                .collect(),
        };
        let s = as_samples(&cloud);
        assert_eq!(s.len(), 2000);
        assert_eq!(s.normals.as_ref().unwrap(), &cloud.normals);
        assert_eq!(s.source, SampleSource::Cloud);
    }

    #[test]
    fn rejects_zero_count_and_empty_mesh() {
        assert!(sample_mesh_surface(&two_triangles(), 0, 0).is_err());
        assert!(matches!(
            sample_mesh_surface(&TriangleMesh::default(), 5, 0),
            Err(Error::EmptyMesh)
        ));
    }
}
