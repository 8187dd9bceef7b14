//! Skeleton connectivity from the regular triangulation of the selected
//! dilated balls together with small balls at the surface samples.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::inner::CandidateBall;
use crate::tri::{regular_triangulation, simplices_among, WeightedPoint};

pub use crate::io::SkeletonFile as Skeleton;

/// Connects `selected`: centers weighted by `(boost * r')^2`, samples by
/// `delta_r^2`; edges and triangles are the triangulation simplices whose
/// vertices are all selected centers. Output radii are the undilated `r`.
pub fn connect_selected(selected: &[CandidateBall], samples: &[Point3], delta_r: f64, boost: f64) -> Result<Skeleton> {
    if selected.is_empty() {
        return Err(Error::InvalidParameter("no selected balls to connect".into()));
    }
    if !(boost > 0.0 && boost.is_finite()) {
        return Err(Error::InvalidParameter(format!("connect boost must be > 0, got {boost}")));
    }
    if !(delta_r >= 0.0 && delta_r.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta_r must be >= 0, got {delta_r}")));
    }
    let mut skel = Skeleton {
        vertices: selected.iter().map(|b| b.center).collect(),
        radii: selected.iter().map(|b| b.radius).collect(),
        ..Skeleton::default()
    };
    if selected.len() == 1 {
        return Ok(skel);
    }
    let mut pts: Vec<WeightedPoint> = selected
        .iter()
        .map(|b| WeightedPoint::new(b.center, (boost * b.dilated_radius()).powi(2)))
        .collect();
    pts.extend(samples.iter().map(|&s| WeightedPoint::new(s, delta_r * delta_r)));
    let t = regular_triangulation(&pts)?;
    let marked: Vec<usize> = (0..selected.len()).collect();
    let (edges, triangles) = simplices_among(&t, &marked);
    skel.edges = edges;
    skel.triangles = triangles;
    Ok(skel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SkeletonStats {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub components: usize,
    /// `E - V + components` of the edge graph.
    pub cycle_rank: usize,
}

pub fn skeleton_stats(s: &Skeleton) -> SkeletonStats {
    let n = s.vertices.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = n;
    for &[a, b] in &s.edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            components -= 1;
        }
    }
    SkeletonStats {
        vertices: n,
        edges: s.edges.len(),
        faces: s.triangles.len(),
        components,
        cycle_rank: s.edges.len() + components - n,
    }
}
