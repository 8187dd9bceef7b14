//! Adaptive geometric predicates: a floating-point evaluation accepted when
//! it clears a forward error bound, otherwise an exact expansion evaluation.

use super::expansion::{det3, Expansion};
use crate::geom::Point3;

const ORIENT_BOUND: f64 = 1e-14;
const POWER_BOUND: f64 = 1e-14;

fn det3_f(r0: [f64; 3], r1: [f64; 3], r2: [f64; 3]) -> (f64, f64) {
    let m0 = r1[1] * r2[2] - r1[2] * r2[1];
    let m1 = r1[0] * r2[2] - r1[2] * r2[0];
    let m2 = r1[0] * r2[1] - r1[1] * r2[0];
    let p0 = (r1[1] * r2[2]).abs() + (r1[2] * r2[1]).abs();
    let p1 = (r1[0] * r2[2]).abs() + (r1[2] * r2[0]).abs();
    let p2 = (r1[0] * r2[1]).abs() + (r1[1] * r2[0]).abs();
    (
        r0[0] * m0 - r0[1] * m1 + r0[2] * m2,
        r0[0].abs() * p0 + r0[1].abs() * p1 + r0[2].abs() * p2,
    )
}

/// `(b - a) . ((c - a) x (d - a))`; positive for `(0, e1, e2, e3)`. The sign
/// is exact.
pub fn orient3d(a: Point3, b: Point3, c: Point3, d: Point3) -> f64 {
    let (det, perm) = det3_f((b - a).to_array(), (c - a).to_array(), (d - a).to_array());
    if det.abs() > ORIENT_BOUND * perm {
        return det;
    }
    orient3d_exact(a, b, c, d)
}

pub(crate) fn orient3d_exact(a: Point3, b: Point3, c: Point3, d: Point3) -> f64 {
    let row = |p: Point3| {
        [
            Expansion::diff(p.x, a.x),
            Expansion::diff(p.y, a.y),
            Expansion::diff(p.z, a.z),
        ]
    };
    det3(&row(b), &row(c), &row(d)).sign()
}

/// Power test of `q` against the orthosphere of the positively oriented
/// weighted tetrahedron `t`. Positive iff
/// `|q - c|^2 - w_q < rho^2`, zero on the orthosphere. The sign is exact.
pub fn power_test(t: [(Point3, f64); 4], q: (Point3, f64)) -> f64 {
    let (qp, qw) = q;
    let mut rows = [[0.0; 4]; 4];
    let mut mag = [0.0; 4];
    for (k, (p, w)) in t.iter().enumerate() {
        let d = *p - qp;
        let l2 = d.norm_squared();
        rows[k] = [d.x, d.y, d.z, l2 - w + qw];
        mag[k] = l2 + w.abs() + qw.abs();
    }
    let mut det = 0.0;
    let mut perm = 0.0;
    for i in 0..4 {
        let r: Vec<[f64; 3]> = (0..4)
            .filter(|&k| k != i)
            .map(|k| [rows[k][0], rows[k][1], rows[k][2]])
            .collect();
        let (m, pm) = det3_f(r[0], r[1], r[2]);
        let s = if i % 2 == 0 { -1.0 } else { 1.0 };
        det += s * rows[i][3] * m;
        perm += mag[i] * pm;
    }
    if det.abs() > POWER_BOUND * perm {
        return -det;
    }
    power_test_exact(t, q)
}

pub(crate) fn power_test_exact(t: [(Point3, f64); 4], q: (Point3, f64)) -> f64 {
    let (qp, qw) = q;
    let rows: Vec<[Expansion; 3]> = t
        .iter()
        .map(|(p, _)| {
            [
                Expansion::diff(p.x, qp.x),
                Expansion::diff(p.y, qp.y),
                Expansion::diff(p.z, qp.z),
            ]
        })
        .collect();
    let lifted: Vec<Expansion> = t
        .iter()
        .zip(&rows)
        .map(|((_, w), r)| {
            r[0].mul(&r[0])
                .add(&r[1].mul(&r[1]))
                .add(&r[2].mul(&r[2]))
                .sub(&Expansion::from_f64(*w))
                .add(&Expansion::from_f64(qw))
        })
        .collect();
    let mut det = Expansion::default();
    for i in 0..4 {
        let r: Vec<&[Expansion; 3]> = (0..4).filter(|&k| k != i).map(|k| &rows[k]).collect();
        let term = lifted[i].mul(&det3(r[0], r[1], r[2]));
        det = if i % 2 == 0 { det.sub(&term) } else { det.add(&term) };
    }
    -det.sign()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SCALE: f64 = 1.0 / (1u64 << 30) as f64;

    fn ipt() -> impl Strategy<Value = [i64; 3]> {
        let c = -(1i64 << 19)..(1i64 << 19);
        (c.clone(), c.clone(), c).prop_map(|(x, y, z)| [x, y, z])
    }

    fn to_pt(p: [i64; 3]) -> Point3 {
        Point3::new(p[0] as f64 * SCALE, p[1] as f64 * SCALE, p[2] as f64 * SCALE)
    }

    fn det3_i(r: [[i128; 3]; 3]) -> i128 {
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }

    fn orient_i(p: [[i64; 3]; 4]) -> i128 {
        let d = |k: usize| [0, 1, 2].map(|a| (p[k][a] - p[0][a]) as i128);
        det3_i([d(1), d(2), d(3)])
    }

    /// Integer oracle with weights in units of SCALE^2.
    fn power_i(p: [[i64; 3]; 4], w: [i64; 4], q: [i64; 3], wq: i64) -> i128 {
        let d: Vec<[i128; 3]> = (0..4).map(|k| [0, 1, 2].map(|a| (p[k][a] - q[a]) as i128)).collect();
        let l: Vec<i128> = (0..4)
            .map(|k| d[k].iter().map(|v| v * v).sum::<i128>() - w[k] as i128 + wq as i128)
            .collect();
        let mut det = 0i128;
        for i in 0..4 {
            let r: Vec<[i128; 3]> = (0..4).filter(|&k| k != i).map(|k| d[k]).collect();
            let s = if i % 2 == 0 { -1 } else { 1 };
            det += s * l[i] * det3_i([r[0], r[1], r[2]]);
        }
        -det
    }

    #[test]
    fn unit_tet_orientation_and_centroid_conflict() {
        let t = [
            Point3::ORIGIN,
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        assert!(orient3d(t[0], t[1], t[2], t[3]) > 0.0);
        assert!(orient3d(t[1], t[0], t[2], t[3]) < 0.0);
        let tw = t.map(|p| (p, 0.0));
        assert!(power_test(tw, (Point3::new(0.25, 0.25, 0.25), 0.0)) > 0.0);
        assert!(power_test(tw, (Point3::new(2.0, 2.0, 2.0), 0.0)) < 0.0);
        // (1,1,1) lies on the circumsphere centred at (0.5,0.5,0.5).
        assert_eq!(power_test(tw, (Point3::new(1.0, 1.0, 1.0), 0.0)), 0.0);
        // A large query weight puts a far point in conflict.
        assert!(power_test(tw, (Point3::new(2.0, 2.0, 2.0), 20.0)) > 0.0);
    }

    #[test]
    fn coplanar_and_cospherical_are_exact_zero() {
        let a = Point3::new(0.1, 0.2, 0.3);
        let b = Point3::new(0.7, 0.2, 0.3);
        let c = Point3::new(0.1, 0.9, 0.3);
        let d = Point3::new(0.4, 0.4, 0.3);
        assert_eq!(orient3d(a, b, c, d), 0.0);
        let cube: Vec<Point3> = (0..8)
            .map(|i| Point3::new(0.1 * (i & 1) as f64, 0.1 * ((i >> 1) & 1) as f64, 0.1 * ((i >> 2) & 1) as f64))
            .collect();
        let mut t = [(cube[0], 0.0), (cube[1], 0.0), (cube[2], 0.0), (cube[4], 0.0)];
        if orient3d(t[0].0, t[1].0, t[2].0, t[3].0) < 0.0 {
            t.swap(0, 1);
        }
        assert_eq!(power_test(t, (cube[7], 0.0)), 0.0);
    }

    proptest! {
        #[test]
        fn orient_matches_integer_oracle(p in [ipt(), ipt(), ipt(), ipt()]) {
            let want = orient_i(p).signum() as f64;
            let pts = p.map(to_pt);
            prop_assert_eq!(orient3d(pts[0], pts[1], pts[2], pts[3]).signum() * want.abs(), want);
            prop_assert_eq!(orient3d_exact(pts[0], pts[1], pts[2], pts[3]), want);
        }

        #[test]
        fn degenerate_orient_is_zero(p in [ipt(), ipt(), ipt()], s in -4i64..4, t in -4i64..4) {
            let d = [0, 1, 2].map(|a| p[0][a] + s * (p[1][a] - p[0][a]) + t * (p[2][a] - p[0][a]));
            prop_assume!(d.iter().all(|v| v.abs() < (1i64 << 40)));
            let pts = [p[0], p[1], p[2], d].map(to_pt);
            prop_assert_eq!(orient3d(pts[0], pts[1], pts[2], pts[3]), 0.0);
        }

        #[test]
        fn power_matches_integer_oracle(
            p in [ipt(), ipt(), ipt(), ipt()],
            q in ipt(),
            w in prop::array::uniform4(0i64..(1i64 << 36)),
            wq in 0i64..(1i64 << 36),
        ) {
            let o = orient_i(p);
            prop_assume!(o != 0);
            let mut p = p;
            let mut w = w;
            if o < 0 {
                p.swap(0, 1);
                w.swap(0, 1);
            }
            let want = power_i(p, w, q, wq).signum() as f64;
            let s2 = SCALE * SCALE;
            let t = [0, 1, 2, 3].map(|k| (to_pt(p[k]), w[k] as f64 * s2));
            let qq = (to_pt(q), wq as f64 * s2);
            prop_assert_eq!(power_test_exact(t, qq), want);
            let f = power_test(t, qq);
            prop_assert_eq!(if f > 0.0 { 1.0 } else if f < 0.0 { -1.0 } else { 0.0 }, want);
        }

        #[test]
        fn cospherical_power_is_zero(p in [ipt(), ipt(), ipt(), ipt()]) {
            // A vertex of the tetrahedron lies on its own circumsphere.
            let o = orient_i(p);
            prop_assume!(o != 0);
            let mut p = p;
            if o < 0 { p.swap(0, 1); }
            let t = p.map(|q| (to_pt(q), 0.0));
            prop_assert_eq!(power_test(t, t[2]), 0.0);
        }
    }
}
