use serde::{Deserialize, Serialize};

use super::{Aabb, Point3};
use crate::error::{Error, Result};

/// Uniform scale + translation taking the input bounding box into the unit cube.
///
/// `apply(p) = p * scale + translation`, evaluated as `(p - origin) / length`
/// so the longest box axis spans exactly [0, 1]; shorter axes start at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizeTransform {
    pub scale: f64,
    pub translation: [f64; 3],
    /// Bounding-box minimum of the input.
    pub origin: [f64; 3],
    /// Longest bounding-box extent of the input (`1 / scale`).
    pub length: f64,
}

impl NormalizeTransform {
    pub const IDENTITY: NormalizeTransform = NormalizeTransform {
        scale: 1.0,
        translation: [0.0; 3],
        origin: [0.0; 3],
        length: 1.0,
    };

    /// Transform for the given bounding box. Fails if every axis has zero extent.
    pub fn for_box(bbox: &Aabb) -> Result<Self> {
        let e = bbox.extent();
        let longest = e.x.max(e.y).max(e.z);
        if !(longest > 0.0) || !longest.is_finite() {
            return Err(Error::DegenerateInput(
                "all points coincide; cannot normalize".into(),
            ));
        }
        let scale = 1.0 / longest;
        let t = Point3::ORIGIN - bbox.min * scale;
        Ok(NormalizeTransform {
            scale,
            translation: t.to_array(),
            origin: bbox.min.to_array(),
            length: longest,
        })
    }

    #[inline]
    pub fn apply(&self, p: Point3) -> Point3 {
        (p - Point3::from_array(self.origin)) / self.length
    }

    #[inline]
    pub fn invert(&self, q: Point3) -> Point3 {
        q * self.length + Point3::from_array(self.origin)
    }

    /// Lengths scale uniformly.
    pub fn apply_length(&self, l: f64) -> f64 {
        l / self.length
    }

    pub fn invert_length(&self, l: f64) -> f64 {
        l * self.length
    }
}

/// Maps `points` into [0,1]^3 with a uniform scale.
pub fn normalize_to_unit_box(points: &[Point3]) -> Result<(Vec<Point3>, NormalizeTransform)> {
    let bbox = Aabb::from_points(points)
        .ok_or_else(|| Error::DegenerateInput("no points to normalize".into()))?;
    let tf = NormalizeTransform::for_box(&bbox)?;
    Ok((points.iter().map(|&p| tf.apply(p)).collect(), tf))
}
