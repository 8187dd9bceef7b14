use serde::{Deserialize, Serialize};

use super::Point3;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    /// Bounding box of a point set, `None` when empty.
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Option<Aabb> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut b = Aabb {
            min: first,
            max: first,
        };
        for p in it {
            b.min = b.min.min_by_component(*p);
            b.max = b.max.max_by_component(*p);
        }
        Some(b)
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.min_by_component(o.min),
            max: self.max.max_by_component(o.max),
        }
    }

    /// Grows the box by `pad` in every direction.
    pub fn padded(&self, pad: f64) -> Aabb {
        let d = Point3::new(pad, pad, pad);
        Aabb {
            min: self.min - d,
            max: self.max + d,
        }
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }
}

/// Length of the bounding-box diagonal of `points`; 0 for an empty set.
pub fn bbox_diagonal(points: &[Point3]) -> f64 {
    Aabb::from_points(points).map_or(0.0, |b| b.diagonal())
}
