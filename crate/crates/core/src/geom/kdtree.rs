use super::{Aabb, Point3};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    lo: usize,
    hi: usize,
    /// Child node ids; `None` for leaves.
    children: Option<(usize, usize)>,
}

/// Static kd-tree over a fixed point set.
///
/// All queries compare squared distances computed by [`Point3::distance_squared`]
/// and break ties by the lower point index, so they agree exactly with a linear
/// scan.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

fn bbox_distance_squared(b: &Aabb, q: Point3) -> f64 {
    let mut d = 0.0;
    for a in 0..3 {
        let v = q[a];
        let e = if v < b.min[a] {
            b.min[a] - v
        } else if v > b.max[a] {
            v - b.max[a]
        } else {
            0.0
        };
        d += e * e;
    }
    d
}

/// Lexicographic (distance, index) ordering used for ties.
#[inline]
fn better(d: f64, i: usize, best_d: f64, best_i: usize) -> bool {
    d < best_d || (d == best_d && i < best_i)
}

impl SpatialIndex {
    pub fn new(points: &[Point3]) -> Self {
        let mut idx = SpatialIndex {
            points: points.to_vec(),
            perm: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            idx.build(0, points.len());
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    fn build(&mut self, lo: usize, hi: usize) -> usize {
        let bbox = Aabb::from_points(self.perm[lo..hi].iter().map(|&i| &self.points[i]))
            .expect("nonempty range");
        let id = self.nodes.len();
        self.nodes.push(Node {
            bbox,
            lo,
            hi,
            children: None,
        });
        if hi - lo > LEAF_SIZE {
            let e = bbox.extent();
            let axis = if e.x >= e.y && e.x >= e.z {
                0
            } else if e.y >= e.z {
                1
            } else {
                2
            };
            let mid = (hi - lo) / 2;
            let pts = &self.points;
            self.perm[lo..hi].select_nth_unstable_by(mid, |&a, &b| {
                pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
            });
            let left = self.build(lo, lo + mid);
            let right = self.build(lo + mid, hi);
            self.nodes[id].children = Some((left, right));
        }
        id
    }

    /// Closest indexed point to `q` and its distance. Panics on an empty index.
    pub fn nearest(&self, q: Point3) -> (usize, f64) {
        assert!(!self.is_empty(), "nearest() on empty index");
        let mut best = (f64::INFINITY, usize::MAX);
        self.nearest_rec(0, q, &mut best);
        (best.1, best.0.sqrt())
    }

    fn nearest_rec(&self, node: usize, q: Point3, best: &mut (f64, usize)) {
        let n = &self.nodes[node];
        // Equal bound distance can still hide a lower-index tie.
        if bbox_distance_squared(&n.bbox, q) > best.0 {
            return;
        }
        match n.children {
            None => {
                for &i in &self.perm[n.lo..n.hi] {
                    let d = self.points[i].distance_squared(q);
                    if better(d, i, best.0, best.1) {
                        *best = (d, i);
                    }
                }
            }
            Some((l, r)) => {
                let dl = bbox_distance_squared(&self.nodes[l].bbox, q);
                let dr = bbox_distance_squared(&self.nodes[r].bbox, q);
                if dl <= dr {
                    self.nearest_rec(l, q, best);
                    self.nearest_rec(r, q, best);
                } else {
                    self.nearest_rec(r, q, best);
                    self.nearest_rec(l, q, best);
                }
            }
        }
    }

    /// The `k` closest points, sorted by (distance, index). Returns all points
    /// when fewer than `k` exist.
    pub fn k_nearest(&self, q: Point3, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        // Sorted ascending by (d2, index); small k keeps insertion cheap.
        let mut heap: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.knn_rec(0, q, k, &mut heap);
        heap.into_iter().map(|(d, i)| (i, d.sqrt())).collect()
    }

    fn knn_rec(&self, node: usize, q: Point3, k: usize, heap: &mut Vec<(f64, usize)>) {
        let n = &self.nodes[node];
        if heap.len() == k && bbox_distance_squared(&n.bbox, q) > heap[k - 1].0 {
            return;
        }
        match n.children {
            None => {
                for &i in &self.perm[n.lo..n.hi] {
                    let d = self.points[i].distance_squared(q);
                    if heap.len() < k || better(d, i, heap[k - 1].0, heap[k - 1].1) {
                        let pos = heap.partition_point(|&(hd, hi)| !better(d, i, hd, hi));
                        heap.insert(pos, (d, i));
                        heap.truncate(k);
                    }
                }
            }
            Some((l, r)) => {
                let dl = bbox_distance_squared(&self.nodes[l].bbox, q);
                let dr = bbox_distance_squared(&self.nodes[r].bbox, q);
                let (a, b) = if dl <= dr { (l, r) } else { (r, l) };
                self.knn_rec(a, q, k, heap);
                self.knn_rec(b, q, k, heap);
            }
        }
    }

    /// Indices of all points with `distance(p, q) <= radius`, ascending.
    pub fn within_radius(&self, q: Point3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.is_empty() && radius >= 0.0 {
            self.within_rec(0, q, radius, &mut out);
            out.sort_unstable();
        }
        out
    }

    fn within_rec(&self, node: usize, q: Point3, radius: f64, out: &mut Vec<usize>) {
        let n = &self.nodes[node];
        // Prune with slack; the final test below uses the exact shared formula.
        let bound = bbox_distance_squared(&n.bbox, q).sqrt();
        if bound > radius * (1.0 + 1e-12) + 1e-300 {
            return;
        }
        match n.children {
            None => {
                for &i in &self.perm[n.lo..n.hi] {
                    if self.points[i].distance(q) <= radius {
                        out.push(i);
                    }
                }
            }
            Some((l, r)) => {
                self.within_rec(l, q, radius, out);
                self.within_rec(r, q, radius, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect()
    }

    fn scan_nearest(points: &[Point3], q: Point3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = p.distance_squared(q);
            if d < best.1 {
                best = (i, d);
            }
        }
        (best.0, best.1.sqrt())
    }

    #[test]
    fn single_point() {
        let idx = SpatialIndex::new(&[Point3::ORIGIN]);
        assert_eq!(idx.nearest(Point3::new(1.0, 0.0, 0.0)), (0, 1.0));
    }

    #[test]
    fn query_on_indexed_point_is_zero() {
        let pts = random_points(50, 3);
        let idx = SpatialIndex::new(&pts);
        assert_eq!(idx.nearest(pts[17]), (17, 0.0));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let p = Point3::new(0.5, 0.5, 0.5);
        let pts = vec![Point3::ORIGIN, p, Point3::new(1.0, 1.0, 1.0), p, p];
        let idx = SpatialIndex::new(&pts);
        assert_eq!(idx.nearest(p).0, 1);
        let knn = idx.k_nearest(p, 3);
        assert_eq!(knn.iter().map(|x| x.0).collect::<Vec<_>>(), vec![1, 3, 4]);
    }

    #[test]
    fn matches_linear_scan() {
        let pts = random_points(1000, 11);
        let idx = SpatialIndex::new(&pts);
        for q in random_points(100, 12) {
            assert_eq!(idx.nearest(q), scan_nearest(&pts, q));
        }
    }

    #[test]
    fn knn_and_radius_match_scan() {
        let pts = random_points(400, 5);
        let idx = SpatialIndex::new(&pts);
        for q in random_points(30, 6) {
            let mut all: Vec<(f64, usize)> =
                pts.iter().enumerate().map(|(i, p)| (p.distance_squared(q), i)).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let want: Vec<usize> = all.iter().take(25).map(|x| x.1).collect();
            let got: Vec<usize> = idx.k_nearest(q, 25).iter().map(|x| x.0).collect();
            assert_eq!(got, want);

            let r = 0.2;
            let want: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].distance(q) <= r).collect();
            assert_eq!(idx.within_radius(q, r), want);
        }
        assert_eq!(idx.k_nearest(Point3::ORIGIN, 1000).len(), 400);
    }
}
