//! Geometric primitives shared by every stage: points, boxes, unit-box
//! normalization and a kd-tree.

mod aabb;
mod kdtree;
mod normalize;
mod point;

pub use aabb::{bbox_diagonal, Aabb};
pub use kdtree::SpatialIndex;
pub use normalize::{normalize_to_unit_box, NormalizeTransform};
pub use point::{Point3, Vector3};

/// Closest point to `p` on segment `[a, b]`, with its parameter in [0, 1].
pub fn closest_on_segment(p: Point3, a: Point3, b: Point3) -> (Point3, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

/// Closest point to `p` on triangle `abc`, with barycentric weights of a, b, c.
///
/// Region-based method from Ericson, "Real-Time Collision Detection", 5.1.5.
pub fn closest_on_triangle(p: Point3, a: Point3, b: Point3, c: Point3) -> (Point3, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

/// Twice the area vector of triangle `abc` (its direction is the face normal).
pub fn triangle_area_vector(a: Point3, b: Point3, c: Point3) -> Vector3 {
    (b - a).cross(c - a)
}

pub fn triangle_area(a: Point3, b: Point3, c: Point3) -> f64 {
    0.5 * triangle_area_vector(a, b, c).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt() -> impl Strategy<Value = Point3> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
    }

    #[test]
    fn symmetric_cube_normalizes_to_unit() {
        let pts = [Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)];
        let (out, tf) = normalize_to_unit_box(&pts).unwrap();
        assert_eq!(tf.scale, 0.5);
        assert_eq!(out[0], Point3::ORIGIN);
        assert_eq!(out[1], Point3::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn unit_box_is_identity() {
        let pts = [Point3::ORIGIN, Point3::new(1.0, 0.3, 1.0), Point3::new(0.2, 1.0, 0.0)];
        let (out, tf) = normalize_to_unit_box(&pts).unwrap();
        assert_eq!(tf, NormalizeTransform::IDENTITY);
        assert_eq!(out, pts);
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert!(matches!(
            normalize_to_unit_box(&[p, p, p]),
            Err(crate::Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn flat_input_is_allowed() {
        let pts = [Point3::new(0.0, 0.0, 5.0), Point3::new(2.0, 1.0, 5.0)];
        let (out, tf) = normalize_to_unit_box(&pts).unwrap();
        assert_eq!(tf.scale, 0.5);
        assert_eq!(out[1], Point3::new(1.0, 0.5, 0.0));
    }

    #[test]
    fn seeded_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let pts: Vec<Point3> = (0..100)
            .map(|_| {
                Point3::new(
                    rng.random_range(-50.0..50.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(0.0..200.0),
                )
            })
            .collect();
        let (out, tf) = normalize_to_unit_box(&pts).unwrap();
        let b = Aabb::from_points(&out).unwrap();
        assert!(b.min.x >= 0.0 && b.min.y >= 0.0 && b.min.z >= 0.0);
        assert!(b.max.x <= 1.0 && b.max.y <= 1.0 && b.max.z <= 1.0);
        let err = pts
            .iter()
            .zip(&out)
            .map(|(p, q)| {
                let r = tf.invert(*q);
                (r.x - p.x).abs().max((r.y - p.y).abs()).max((r.z - p.z).abs())
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "round trip error {err}");
    }

    #[test]
    fn diagonal_values() {
        let cube: Vec<Point3> = (0..8)
            .map(|i| Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
            .collect();
        assert_eq!(bbox_diagonal(&cube), 3f64.sqrt());
        let p = Point3::new(0.3, 0.1, 4.0);
        assert_eq!(bbox_diagonal(&[p, p, p]), 0.0);
    }

    proptest! {
        #[test]
        fn diagonal_matches_componentwise(pts in prop::collection::vec(pt(), 1..60)) {
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for p in &pts {
                for a in 0..3 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
            let d = Point3::new(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]).norm();
            prop_assert_eq!(bbox_diagonal(&pts), d);
        }

        #[test]
        fn normalization_round_trips_and_preserves_ratios(pts in prop::collection::vec(pt(), 3..40)) {
            prop_assume!(bbox_diagonal(&pts) > 1e-3);
            let (out, tf) = normalize_to_unit_box(&pts).unwrap();
            for (p, q) in pts.iter().zip(&out) {
                let r = tf.invert(*q);
                prop_assert!((r - *p).norm() < 1e-12 * (1.0 + p.norm()));
            }
            let d01 = pts[0].distance(pts[1]);
            let d02 = pts[0].distance(pts[2]);
            prop_assume!(d01 > 1e-3 && d02 > 1e-3);
            let ratio_in = d01 / d02;
            let ratio_out = out[0].distance(out[1]) / out[0].distance(out[2]);
            prop_assert!((ratio_in - ratio_out).abs() < 1e-12 * ratio_in.max(1.0));
        }

        #[test]
        fn index_agrees_with_scan(pts in prop::collection::vec(pt(), 1..200), q in pt()) {
            let idx = SpatialIndex::new(&pts);
            let mut best = (usize::MAX, f64::INFINITY);
            for (i, p) in pts.iter().enumerate() {
                let d = p.distance_squared(q);
                if d < best.1 { best = (i, d); }
            }
            prop_assert_eq!(idx.nearest(q), (best.0, best.1.sqrt()));
        }
    }

    #[test]
    fn closest_point_on_triangle_regions() {
        let a = Point3::ORIGIN;
        let b = Point3::new(1.0, 0.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        let (q, _) = closest_on_triangle(Point3::new(0.2, 0.2, 1.0), a, b, c);
        assert!((q - Point3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        assert_eq!(closest_on_triangle(Point3::new(-1.0, -1.0, 0.0), a, b, c).0, a);
        let (q, _) = closest_on_triangle(Point3::new(1.0, 1.0, 0.0), a, b, c);
        assert!((q - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
        let (q, t) = closest_on_segment(Point3::new(0.5, 3.0, 0.0), a, b);
        assert_eq!((q, t), (Point3::new(0.5, 0.0, 0.0), 0.5));
    }
}
