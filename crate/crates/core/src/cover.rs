//! Ball dilation and the binary coverage matrix `D` with its required-row
//! vector `B`.
//!
//! `d_ji = 1` iff `|p_i - s_j| <= r'_i`, boundary inclusive. Columns are the
//! candidates, stored as ascending row lists.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{Point3, SpatialIndex};
use crate::inner::CandidateBall;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", content = "value", rename_all = "lowercase")]
pub enum DilationMode {
    /// `r' = r + delta_r`.
    Offset(f64),
    /// `r' = r * sigma_r`.
    Scaling(f64),
}

impl Default for DilationMode {
    fn default() -> Self {
        DilationMode::Offset(0.02)
    }
}

impl DilationMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DilationMode::Offset(d) if !(d > 0.0 && d.is_finite()) => {
                Err(Error::InvalidParameter(format!("delta_r must be > 0, got {d}")))
            }
            DilationMode::Scaling(s) if !(s > 1.0 && s.is_finite()) => {
                Err(Error::InvalidParameter(format!("sigma_r must be > 1, got {s}")))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, r: f64) -> f64 {
        match *self {
            DilationMode::Offset(d) => r + d,
            DilationMode::Scaling(s) => r * s,
        }
    }
}

/// Sets `r'` on every candidate.
pub fn dilate(candidates: &[CandidateBall], mode: DilationMode) -> Result<Vec<CandidateBall>> {
    mode.validate()?;
    Ok(candidates
        .iter()
        .map(|c| CandidateBall {
            dilated: Some(mode.apply(c.radius)),
            ..*c
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMatrix {
    m: usize,
    columns: Vec<Vec<u32>>,
    required: Vec<bool>,
    priority: Vec<f64>,
}

impl CoverageMatrix {
    /// Builds from explicit columns; rows are required and column priorities
    /// (the tie-break radii) are zero unless given.
    pub fn from_columns(m: usize, mut columns: Vec<Vec<u32>>, priority: Option<Vec<f64>>) -> Result<Self> {
        let n = columns.len();
        for col in &mut columns {
            col.sort_unstable();
            col.dedup();
            if let Some(&j) = col.last() {
                if j as usize >= m {
                    return Err(Error::IndexOutOfRange { index: j as usize, len: m });
                }
            }
        }
        let priority = priority.unwrap_or_else(|| vec![0.0; n]);
        if priority.len() != n {
            return Err(Error::InvalidParameter(format!("{} priorities for {n} columns", priority.len())));
        }
        Ok(CoverageMatrix {
            m,
            columns,
            required: vec![true; m],
            priority,
        })
    }

    /// Rows (surface samples).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Columns (candidates).
    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, i: usize) -> &[u32] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    pub fn required(&self) -> &[bool] {
        &self.required
    }

    /// Tie-break value of each column (the undilated radius).
    pub fn priority(&self) -> &[f64] {
        &self.priority
    }

    pub fn entry(&self, j: usize, i: usize) -> bool {
        self.columns[i].binary_search(&(j as u32)).is_ok()
    }

    /// Row-major view: the columns covering each row, ascending.
    pub fn rows(&self) -> Vec<Vec<u32>> {
        let mut rows = vec![Vec::new(); self.m];
        for (i, col) in self.columns.iter().enumerate() {
            for &j in col {
                rows[j as usize].push(i as u32);
            }
        }
        rows
    }

    /// Submatrix on `rows` x `cols` (both ascending), renumbered locally and
    /// keeping required flags and priorities.
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> CoverageMatrix {
        let mut local = vec![u32::MAX; self.m];
        for (k, &j) in rows.iter().enumerate() {
            local[j] = k as u32;
        }
        let columns = cols
            .iter()
            .map(|&i| {
                self.columns[i]
                    .iter()
                    .map(|&j| local[j as usize])
                    .filter(|&k| k != u32::MAX)
                    .collect()
            })
            .collect();
        CoverageMatrix {
            m: rows.len(),
            columns,
            required: rows.iter().map(|&j| self.required[j]).collect(),
            priority: cols.iter().map(|&i| self.priority[i]).collect(),
        }
    }

    /// Marks `ignored` rows as not required; all others become required.
    pub fn set_ignorable(&self, ignored: &[usize]) -> Result<CoverageMatrix> {
        self.clone().into_ignorable(ignored)
    }

    /// [`set_ignorable`](Self::set_ignorable) without copying the columns.
    pub fn into_ignorable(mut self, ignored: &[usize]) -> Result<CoverageMatrix> {
        let mut required = vec![true; self.m];
        for &j in ignored {
            if j >= self.m {
                return Err(Error::IndexOutOfRange { index: j, len: self.m });
            }
            required[j] = false;
        }
        self.required = required;
        Ok(self)
    }

    /// Required rows left uncovered by `chosen`, ascending.
    pub fn uncovered(&self, chosen: &[usize]) -> Vec<usize> {
        let mut covered = vec![false; self.m];
        for &i in chosen {
            for &j in &self.columns[i] {
                covered[j as usize] = true;
            }
        }
        (0..self.m).filter(|&j| self.required[j] && !covered[j]).collect()
    }

    /// Text instance: an `m n` header, then one line per column listing its rows.
    pub fn write_instance(&self, path: &Path) -> Result<()> {
        let mut s = format!("{} {}\n", self.m, self.n());
        for col in &self.columns {
            let mut first = true;
            for j in col {
                if !first {
                    s.push(' ');
                }
                first = false;
                let _ = write!(s, "{j}");
            }
            s.push('\n');
        }
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn read_instance(path: &Path) -> Result<CoverageMatrix> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim_start().starts_with('#'));
        let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing `m n` header".into()))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| perr(hl + 1, format!("bad header token `{t}`"))))
            .collect::<Result<_>>()?;
        let [m, n] = h[..] else {
            return Err(perr(hl + 1, "header must be `m n`".into()));
        };
        let mut columns = Vec::with_capacity(n);
        for (k, line) in lines {
            if columns.len() == n {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(perr(k + 1, format!("more than {n} column lines")));
            }
            let col = line
                .split_whitespace()
                .map(|t| {
                    let j: usize = t.parse().map_err(|_| perr(k + 1, format!("bad row index `{t}`")))?;
                    if j >= m {
                        return Err(perr(k + 1, format!("row {j} out of range for m = {m}")));
                    }
                    Ok(j as u32)
                })
                .collect::<Result<Vec<u32>>>()?;
            columns.push(col);
        }
        if columns.len() != n {
            return Err(perr(text.lines().count(), format!("expected {n} column lines, found {}", columns.len())));
        }
        CoverageMatrix::from_columns(m, columns, None)
    }
}

/// `D` for `samples` against the dilated `candidates`, via radius queries.
pub fn build_coverage(samples: &[Point3], candidates: &[CandidateBall]) -> Result<CoverageMatrix> {
    if samples.len() > u32::MAX as usize {
        return Err(Error::TooLarge {
            n: samples.len(),
            limit: u32::MAX as usize,
        });
    }
    let index = SpatialIndex::new(samples);
    let columns: Vec<Vec<u32>> = candidates
        .par_iter()
        .map(|c| {
            index
                .within_radius(c.center, c.dilated_radius())
                .into_iter()
                .map(|j| j as u32)
                .collect()
        })
        .collect();
    let priority = candidates.iter().map(|c| c.radius).collect();
    CoverageMatrix::from_columns(samples.len(), columns, Some(priority))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::CandidateOrigin;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ball(c: Point3, r: f64, rp: f64) -> CandidateBall {
        CandidateBall {
            center: c,
            radius: r,
            dilated: Some(rp),
            origin: CandidateOrigin::Random,
        }
    }

    fn dense(samples: &[Point3], cands: &[CandidateBall]) -> Vec<Vec<u32>> {
        cands
            .iter()
            .map(|c| {
                (0..samples.len() as u32)
                    .filter(|&j| c.center.distance(samples[j as usize]) <= c.dilated_radius())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn dilation_modes() {
        let b = [ball(Point3::ORIGIN, 0.1, 0.0)];
        let off = dilate(&b, DilationMode::Offset(0.02)).unwrap();
        assert!((off[0].dilated.unwrap() - 0.12).abs() < 1e-15);
        let sc = dilate(&b, DilationMode::Scaling(1.5)).unwrap();
        assert!((sc[0].dilated.unwrap() - 0.15).abs() < 1e-15);
        assert!(dilate(&b, DilationMode::Offset(0.0)).is_err());
        assert!(dilate(&b, DilationMode::Scaling(1.0)).is_err());
        assert_eq!(DilationMode::default(), DilationMode::Offset(0.02));
    }

    #[test]
    fn boundary_is_inclusive() {
        let s = [Point3::new(0.5, 0.0, 0.0), Point3::new(0.75, 0.0, 0.0)];
        let m = build_coverage(&s, &[ball(Point3::ORIGIN, 0.25, 0.5)]).unwrap();
        assert_eq!(m.column(0), &[0]);
        let m = build_coverage(&s, &[ball(Point3::new(5.0, 5.0, 5.0), 0.1, 0.1)]).unwrap();
        assert!(m.column(0).is_empty());
        assert_eq!(m.required(), &[true, true]);
    }

    #[test]
    fn dense_loop_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let s: Vec<Point3> = (0..200).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect();
        let c: Vec<CandidateBall> = (0..50)
            .map(|_| {
                let r = rng.random_range(0.05..0.3);
                ball(Point3::new(rng.random(), rng.random(), rng.random()), r, r + 0.02)
            })
            .collect();
        let m = build_coverage(&s, &c).unwrap();
        assert_eq!(m.columns(), &dense(&s, &c)[..]);
        for j in 0..200 {
            for i in 0..50 {
                assert_eq!(m.entry(j, i), s[j].distance(c[i].center) <= c[i].dilated_radius());
            }
        }
    }

    #[test]
    fn ignorable_rows() {
        let m = CoverageMatrix::from_columns(3, vec![vec![0], vec![1, 2]], None).unwrap();
        let all = m.set_ignorable(&[0, 1, 2]).unwrap();
        assert!(all.uncovered(&[]).is_empty());
        assert_eq!(m.set_ignorable(&[]).unwrap(), m);
        assert!(matches!(m.set_ignorable(&[3]), Err(Error::IndexOutOfRange { index: 3, len: 3 })));
        assert_eq!(m.uncovered(&[1]), vec![0]);
    }

    #[test]
    fn restriction_renumbers() {
        let m = CoverageMatrix::from_columns(4, vec![vec![0, 3], vec![1], vec![1, 2, 3]], Some(vec![0.1, 0.2, 0.3]))
            .unwrap()
            .set_ignorable(&[2])
            .unwrap();
        let r = m.restrict(&[1, 2, 3], &[0, 2]);
        assert_eq!(r.columns(), &[vec![2], vec![0, 1, 2]]);
        assert_eq!(r.required(), &[true, false, true]);
        assert_eq!(r.priority(), &[0.1, 0.3]);
    }

    #[test]
    fn instance_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("inst.txt");
        let m = CoverageMatrix::from_columns(4, vec![vec![0, 3], vec![], vec![1, 2, 3]], None).unwrap();
        m.write_instance(&p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "4 3\n0 3\n\n1 2 3\n");
        assert_eq!(CoverageMatrix::read_instance(&p).unwrap(), m);
        std::fs::write(&p, "2 1\n0 5\n").unwrap();
        assert!(matches!(CoverageMatrix::read_instance(&p), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&p, "2 2\n0\n").unwrap();
        assert!(CoverageMatrix::read_instance(&p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn index_matches_dense(seed in 0u64..10_000, m in 1usize..2000, n in 1usize..500) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<Point3> = (0..m).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect();
            let c: Vec<CandidateBall> = (0..n)
                .map(|_| ball(Point3::new(rng.random(), rng.random(), rng.random()), 0.0, rng.random_range(0.0..0.2)))
                .collect();
            let mat = build_coverage(&s, &c).unwrap();
            prop_assert_eq!(mat.columns(), &dense(&s, &c)[..]);
        }

        #[test]
        fn coverage_is_monotone_in_radius(seed in 0u64..10_000, grow in 0.0..0.1f64) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<Point3> = (0..300).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect();
            let c: Vec<CandidateBall> = (0..40)
                .map(|_| ball(Point3::new(rng.random(), rng.random(), rng.random()), 0.0, rng.random_range(0.0..0.2)))
                .collect();
            let bigger: Vec<CandidateBall> = c.iter().map(|b| ball(b.center, 0.0, b.dilated_radius() + grow)).collect();
            let a = build_coverage(&s, &c).unwrap();
            let b = build_coverage(&s, &bigger).unwrap();
            for i in 0..40 {
                prop_assert!(a.column(i).iter().all(|j| b.column(i).contains(j)));
            }
        }
    }
}
