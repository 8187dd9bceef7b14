//! Candidate inner balls: interior Voronoi vertices of a surface sample set or
//! random interior points, with radii taken as the distance to the nearest
//! cover sample.

mod inside;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Point3, SpatialIndex};
use crate::io::{OrientedPointCloud, TriangleMesh};
use crate::rng::{stream_rng, Stage};
use crate::sample::SurfaceSampleSet;
use crate::tri::{delaunay, voronoi_vertices};
pub use inside::{inside_cloud_label, inside_mesh, MeshInside};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateOrigin {
    Voronoi,
    Random,
}

/// An inner ball. `dilated` is set by [`crate::cover::dilate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateBall {
    pub center: Point3,
    pub radius: f64,
    pub dilated: Option<f64>,
    pub origin: CandidateOrigin,
}

impl CandidateBall {
    /// `r'` if set, otherwise `r`.
    pub fn dilated_radius(&self) -> f64 {
        self.dilated.unwrap_or(self.radius)
    }
}

/// The boundary that candidates must lie inside.
#[derive(Debug, Clone, Copy)]
pub enum Shape<'a> {
    Mesh(&'a TriangleMesh),
    Cloud(&'a OrientedPointCloud),
}

/// Inside/outside bookkeeping from candidate generation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GenerationStats {
    /// Random trials drawn, or Voronoi vertices examined.
    pub trials: u64,
    /// Points passing the inside test.
    pub accepted: usize,
    /// Accepted points removed by the cluster filter.
    pub filtered_out: usize,
    /// Near-degenerate tetrahedra whose circumcentre was not used.
    pub skipped_tets: usize,
    /// Coordinate perturbation of the triangulation; zero for random candidates.
    pub jitter: f64,
}

/// Outlier filter parameters in unit-box units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterFilter {
    pub k: usize,
    pub radius: f64,
    pub min_count: usize,
}

impl Default for ClusterFilter {
    fn default() -> Self {
        ClusterFilter {
            k: 100,
            radius: 0.02,
            min_count: 20,
        }
    }
}

/// Indices of the points that survive the filter: a point is kept iff at
/// least `min_count` of its `k` nearest other points lie within `radius`.
/// The rule is reapplied to the survivors until nothing changes.
pub fn cluster_filter_indices(points: &[Point3], f: &ClusterFilter) -> Vec<usize> {
    let mut keep: Vec<usize> = (0..points.len()).collect();
    loop {
        let sub: Vec<Point3> = keep.iter().map(|&i| points[i]).collect();
        let index = SpatialIndex::new(&sub);
        let pass: Vec<bool> = (0..sub.len())
            .into_par_iter()
            .map(|i| {
                let close = index
                    .k_nearest(sub[i], f.k + 1)
                    .into_iter()
                    .filter(|&(j, _)| j != i)
                    .take(f.k)
                    .filter(|&(_, d)| d <= f.radius)
                    .count();
                close >= f.min_count
            })
            .collect();
        if pass.iter().all(|&b| b) {
            return keep;
        }
        keep = keep.into_iter().zip(pass).filter(|&(_, b)| b).map(|(i, _)| i).collect();
    }
}

pub fn cluster_filter(points: &[Point3], f: &ClusterFilter) -> Vec<Point3> {
    cluster_filter_indices(points, f).into_iter().map(|i| points[i]).collect()
}

/// Nearest-sample orientation test for arbitrary query points of a cloud.
#[derive(Debug, Clone)]
pub struct CloudInside<'a> {
    index: SpatialIndex,
    normals: &'a [Point3],
}

impl<'a> CloudInside<'a> {
    pub fn new(cloud: &'a OrientedPointCloud) -> Self {
        CloudInside {
            index: SpatialIndex::new(&cloud.points),
            normals: &cloud.normals,
        }
    }

    /// `(p - s) . n_s < 0` for the nearest sample `s`.
    pub fn contains(&self, p: Point3) -> bool {
        let (s, _) = self.index.nearest(p);
        (p - self.index.points()[s]).dot(self.normals[s]) < 0.0
    }
}

const STALL_TRIALS: u64 = 1_000_000;
const STALL_RATE: f64 = 1e-3;
const BATCH: u64 = 8192;

/// Rejection sampling in the shape's bounding box until `n` points pass the
/// inside test. Cloud results are then cluster-filtered, so fewer than `n`
/// may remain.
pub fn candidates_random(shape: Shape, n: usize, seed: u64) -> Result<(Vec<Point3>, GenerationStats)> {
    if n == 0 {
        return Err(Error::InvalidParameter("random candidate count must be at least 1".into()));
    }
    let (bbox, test): (Aabb, Box<dyn Fn(Point3) -> bool + Sync>) = match shape {
        Shape::Mesh(m) => {
            let inside = MeshInside::new(m, seed);
            (m.bbox().ok_or(Error::EmptyMesh)?, Box::new(move |p| inside.contains(p)))
        }
        Shape::Cloud(c) => {
            let inside = CloudInside::new(c);
            let bbox = Aabb::from_points(&c.points)
                .ok_or_else(|| Error::DegenerateInput("point cloud is empty".into()))?;
            (bbox, Box::new(move |p| inside.contains(p)))
        }
    };
    let ext = bbox.extent();
    let mut out = Vec::with_capacity(n);
    let mut trials = 0u64;
    while out.len() < n {
        if trials >= STALL_TRIALS && (out.len() as f64) < STALL_RATE * trials as f64 {
            return Err(Error::SamplingStalled {
                accepted: out.len(),
                trials,
            });
        }
        let batch: Vec<Option<Point3>> = (trials..trials + BATCH)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(seed, Stage::RandomCandidates, t);
                let p = Point3::new(
                    bbox.min.x + ext.x * rng.random::<f64>(),
                    bbox.min.y + ext.y * rng.random::<f64>(),
                    bbox.min.z + ext.z * rng.random::<f64>(),
                );
                test(p).then_some(p)
            })
            .collect();
        let mut used = BATCH;
        for (k, p) in batch.into_iter().enumerate() {
            if let Some(p) = p {
                out.push(p);
                if out.len() == n {
                    used = k as u64 + 1;
                    break;
                }
            }
        }
        trials += used;
    }
    let mut stats = GenerationStats {
        trials,
        accepted: out.len(),
        ..Default::default()
    };
    if let Shape::Cloud(_) = shape {
        let kept = cluster_filter(&out, &ClusterFilter::default());
        stats.filtered_out = out.len() - kept.len();
        out = kept;
    }
    Ok((out, stats))
}

/// Interior circumcentres of the Delaunay tetrahedralization of `gen`.
pub fn candidates_voronoi_mesh(
    gen: &SurfaceSampleSet,
    mesh: &TriangleMesh,
    seed: u64,
) -> Result<(Vec<Point3>, GenerationStats)> {
    let t = delaunay(&gen.points)?;
    let vv = voronoi_vertices(&t);
    let inside = MeshInside::new(mesh, seed);
    let kept: Vec<Point3> = vv
        .vertices
        .par_iter()
        .filter(|v| inside.contains(v.center))
        .map(|v| v.center)
        .collect();
    let stats = GenerationStats {
        trials: vv.vertices.len() as u64,
        accepted: kept.len(),
        filtered_out: 0,
        skipped_tets: vv.skipped,
        jitter: t.perturbation(),
    };
    Ok((kept, stats))
}

/// Circumcentres labeled inside by all four dual generators' normals, then
/// cluster-filtered.
pub fn candidates_voronoi_cloud(gen: &SurfaceSampleSet) -> Result<(Vec<Point3>, GenerationStats)> {
    let normals = gen
        .normals
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("cloud samples need normals".into()))?;
    let t = delaunay(&gen.points)?;
    let vv = voronoi_vertices(&t);
    let labeled: Vec<Point3> = vv
        .vertices
        .iter()
        .filter(|v| inside_cloud_label(v.center, t.tets()[v.tet], &gen.points, normals))
        .map(|v| v.center)
        .collect();
    let kept = cluster_filter(&labeled, &ClusterFilter::default());
    let stats = GenerationStats {
        trials: vv.vertices.len() as u64,
        accepted: labeled.len(),
        filtered_out: labeled.len() - kept.len(),
        skipped_tets: vv.skipped,
        jitter: t.perturbation(),
    };
    Ok((kept, stats))
}

/// Radius of each centre = distance to the nearest cover sample. Centres that
/// coincide with a sample are dropped; the drop count is returned.
pub fn estimate_radii(
    centers: &[Point3],
    origin: CandidateOrigin,
    samples: &SurfaceSampleSet,
) -> Result<(Vec<CandidateBall>, usize)> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no cover samples".into()));
    }
    let index = SpatialIndex::new(&samples.points);
    let balls: Vec<CandidateBall> = centers
        .par_iter()
        .map(|&c| CandidateBall {
            center: c,
            radius: index.nearest(c).1,
            dilated: None,
            origin,
        })
        .collect();
    let before = balls.len();
    let balls: Vec<CandidateBall> = balls.into_iter().filter(|b| b.radius > 0.0).collect();
    let dropped = before - balls.len();
    if dropped > 0 {
        log::warn!("dropped {dropped} candidates coincident with a surface sample");
    }
    Ok((balls, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{as_samples, sample_mesh_surface};
    use crate::shapes;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn cluster_defaults() {
        let f = ClusterFilter::default();
        assert_eq!((f.k, f.radius, f.min_count), (100, 0.02, 20));
    }

    #[test]
    fn dense_cluster_kept_isolated_removed() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let c = Point3::new(0.5, 0.5, 0.5);
        let mut pts: Vec<Point3> = (0..200)
            .map(|_| c + Point3::new(rng.random_range(-0.005..0.005), rng.random_range(-0.005..0.005), 0.0))
            .collect();
        assert_eq!(cluster_filter(&pts, &ClusterFilter::default()).len(), 200);
        let same = vec![c; 200];
        assert_eq!(cluster_filter(&same, &ClusterFilter::default()).len(), 200);
        pts.push(c + Point3::new(1.0, 0.0, 0.0));
        let idx = cluster_filter_indices(&pts, &ClusterFilter::default());
        assert_eq!(idx, (0..200).collect::<Vec<_>>());
    }

    #[test]
    fn fewer_than_k_points_uses_all() {
        let pts = vec![Point3::ORIGIN; 25];
        assert_eq!(cluster_filter(&pts, &ClusterFilter::default()).len(), 25);
        assert!(cluster_filter(&pts[..20], &ClusterFilter::default()).is_empty());
    }

    #[test]
    fn random_cube_acceptance_matches_volume() {
        // A cube inside a larger bounding box: add a far-away tiny tetrahedron
        // so the sampling box is [0, 2]^3 and the acceptance rate is 1/8.
        let mut m = shapes::unit_cube();
        let base = m.vertices.len();
        m.vertices.extend([
            Point3::new(2.0, 2.0, 2.0),
            Point3::new(1.99, 2.0, 2.0),
            Point3::new(2.0, 1.99, 2.0),
            Point3::new(2.0, 2.0, 1.99),
        ]);
        m.triangles
            .extend([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]].map(|t| t.map(|i| base + i)));
        let (pts, stats) = candidates_random(Shape::Mesh(&m), 10_000, 4).unwrap();
        assert_eq!(pts.len(), 10_000);
        assert!(pts.iter().all(|p| p.x <= 1.0 && p.y <= 1.0 && p.z <= 1.0 || p.x > 1.98));
        let rate = stats.accepted as f64 / stats.trials as f64;
        // Binomial sd of the rate at ~80k trials is ~0.0012.
        assert!((rate - 0.125).abs() < 0.006, "rate {rate}");
    }

    #[test]
    fn random_single_and_deterministic() {
        let m = shapes::icosphere(Point3::ORIGIN, 1.0, 3);
        let (a, _) = candidates_random(Shape::Mesh(&m), 1, 0).unwrap();
        assert_eq!(a.len(), 1);
        assert!(inside_mesh(a[0], &m, 0));
        let (b, _) = candidates_random(Shape::Mesh(&m), 500, 9).unwrap();
        let (c, _) = candidates_random(Shape::Mesh(&m), 500, 9).unwrap();
        assert_eq!(b, c);
        let inside = MeshInside::new(&m, 9);
        assert!(b.iter().all(|p| inside.contains(*p)));
    }

    #[test]
    fn thin_shape_stalls() {
        // A long diagonal sliver has negligible volume relative to its box.
        let mut m = shapes::cuboid(Point3::ORIGIN, Point3::new(1e-4, 1e-4, 1e-4));
        m.vertices.push(Point3::new(1.0, 1.0, 1.0));
        let far = m.vertices.len() - 1;
        m.triangles.push([far, 0, 1]);
        let r = candidates_random(Shape::Mesh(&m), 10, 0);
        assert!(matches!(r, Err(Error::SamplingStalled { .. })), "{r:?}");
    }

    #[test]
    fn voronoi_tetrahedron_one_candidate() {
        let m = TriangleMesh {
            vertices: vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            triangles: vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
        };
        // A regular tetrahedron contains its circumcentre.
        let reg = TriangleMesh {
            vertices: vec![
                Point3::new(1.0, 1.0, 1.0),
                Point3::new(1.0, -1.0, -1.0),
                Point3::new(-1.0, 1.0, -1.0),
                Point3::new(-1.0, -1.0, 1.0),
            ],
            triangles: m.triangles.clone(),
        };
        let gen = SurfaceSampleSet {
            points: reg.vertices.clone(),
            normals: None,
            source: crate::sample::SampleSource::Mesh,
        };
        let (c, stats) = candidates_voronoi_mesh(&gen, &reg, 0).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0].norm() < 1e-12);
        assert_eq!(stats.trials, 1);
        // The right-corner tetrahedron's circumcentre (0.5, 0.5, 0.5) is outside it.
        let gen = SurfaceSampleSet {
            points: m.vertices.clone(),
            ..gen
        };
        assert!(candidates_voronoi_mesh(&gen, &m, 0).unwrap().0.is_empty());
    }

    #[test]
    fn voronoi_sphere_clusters_at_center() {
        // Facets must be small against the sample spacing (~0.056 here) for
        // local tetrahedra to see curvature rather than flat patches.
        let m = shapes::icosphere(Point3::ORIGIN, 1.0, 6);
        let gen = sample_mesh_surface(&m, 4000, 2).unwrap();
        let (c, _) = candidates_voronoi_mesh(&gen, &m, 0).unwrap();
        assert!(!c.is_empty());
        let inside = MeshInside::new(&m, 0);
        assert!(c.iter().all(|p| inside.contains(*p)));
        let mean = c.iter().map(|p| p.norm()).sum::<f64>() / c.len() as f64;
        assert!(mean < 0.1, "mean distance {mean}");
    }

    fn sphere_cloud(n: usize, seed: u64) -> OrientedPointCloud {
        let m = shapes::icosphere(Point3::ORIGIN, 1.0, 5);
        let s = sample_mesh_surface(&m, n, seed).unwrap();
        // Analytic normals on the sphere.
        OrientedPointCloud {
            normals: s.points.iter().map(|p| p.normalized().unwrap()).collect(),
            points: s.points.iter().map(|p| p.normalized().unwrap()).collect(),
        }
    }

    #[test]
    fn cloud_labels_match_sphere() {
        let cloud = sphere_cloud(2000, 5);
        let gen = as_samples(&cloud);
        let t = delaunay(&gen.points).unwrap();
        let vv = voronoi_vertices(&t);
        let normals = gen.normals.as_ref().unwrap();
        let agree = vv
            .vertices
            .iter()
            .filter(|v| inside_cloud_label(v.center, t.tets()[v.tet], &gen.points, normals) == (v.center.norm() < 1.0))
            .count();
        assert!(agree as f64 >= 0.99 * vv.vertices.len() as f64, "{agree}/{}", vv.vertices.len());
    }

    #[test]
    fn cloud_random_candidates_inside() {
        // Unit-box scale so the filter radius is meaningful.
        let mut cloud = sphere_cloud(2000, 6);
        for p in &mut cloud.points {
            *p = *p * 0.5 + Point3::new(0.5, 0.5, 0.5);
        }
        let (c, stats) = candidates_random(Shape::Cloud(&cloud), 3000, 1).unwrap();
        assert!(stats.accepted == 3000 && c.len() + stats.filtered_out == 3000);
        let center = Point3::new(0.5, 0.5, 0.5);
        assert!(c.iter().all(|p| p.distance(center) < 0.5 + 1e-3));
    }

    #[test]
    fn radii_at_sphere_center_and_coincident_drop() {
        let m = shapes::icosphere(Point3::ORIGIN, 1.0, 4);
        let s = sample_mesh_surface(&m, 1500, 0).unwrap();
        let (b, dropped) = estimate_radii(&[Point3::ORIGIN, s.points[3]], CandidateOrigin::Random, &s).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(b.len(), 1);
        assert!((b[0].radius - 1.0).abs() < 0.01);
        assert_eq!(b[0].dilated, None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn radii_match_scan(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Point3> = (0..300).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect();
            let s = SurfaceSampleSet { points: pts.clone(), normals: None, source: crate::sample::SampleSource::Mesh };
            let centers: Vec<Point3> = (0..500).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect();
            let (b, _) = estimate_radii(&centers, CandidateOrigin::Random, &s).unwrap();
            prop_assert_eq!(b.len(), 500);
            for (ball, c) in b.iter().zip(&centers) {
                let want = pts.iter().map(|p| p.distance(*c)).fold(f64::INFINITY, f64::min);
                prop_assert!((ball.radius - want).abs() <= 1e-12);
            }
        }

        #[test]
        fn cluster_filter_is_idempotent(seed in 0u64..1000, n in 20usize..400, spread in 0.01..0.3f64) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Point3> = (0..n)
                .map(|_| Point3::new(rng.random_range(0.0..spread), rng.random_range(0.0..spread), rng.random_range(0.0..spread)))
                .collect();
            let f = ClusterFilter::default();
            let once = cluster_filter(&pts, &f);
            prop_assert_eq!(cluster_filter(&once, &f), once);
        }
    }
}
