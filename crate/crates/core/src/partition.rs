//! Divide and conquer for large inputs: split the surface samples into parts,
//! give each candidate the part of its nearest sample, solve every part on its
//! own and merge, repairing rows whose coverers all lie in other parts.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cover::CoverageMatrix;
use crate::error::{Error, Result};
use crate::geom::{Point3, SpatialIndex};
use crate::rng::{stage_rng, Stage};
use crate::solve::{Fixings, Selection, Solver};

pub const KMEANS_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub k: usize,
    pub sample_labels: Vec<usize>,
    pub candidate_labels: Vec<usize>,
}

/// How sample labels are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionSpec {
    KMeans { k: usize, seed: u64 },
    /// One label per sample; `k` defaults to the largest label plus one.
    Labels { labels: Vec<usize>, k: Option<usize> },
}

/// Lloyd's k-means with farthest-point seeding from a seeded first center.
/// Ties go to the lowest center index.
pub fn kmeans(points: &[Point3], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidParameter(format!(
            "k must be in 1..={}, got {k}",
            points.len()
        )));
    }
    let mut rng = stage_rng(seed, Stage::Partition);
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut gap: Vec<f64> = points.iter().map(|p| p.distance_squared(centers[0])).collect();
    while centers.len() < k {
        let far = (0..points.len()).fold(0, |b, i| if gap[i] > gap[b] { i } else { b });
        let c = points[far];
        centers.push(c);
        for (g, p) in gap.iter_mut().zip(points) {
            *g = g.min(p.distance_squared(c));
        }
    }
    let assign = |centers: &[Point3]| -> Vec<usize> {
        points
            .par_iter()
            .map(|p| {
                (0..centers.len()).fold(0, |b, c| {
                    if p.distance_squared(centers[c]) < p.distance_squared(centers[b]) {
                        c
                    } else {
                        b
                    }
                })
            })
            .collect()
    };
    let mut labels = assign(&centers);
    for _ in 0..KMEANS_ITERATIONS {
        let mut sum = vec![Point3::ORIGIN; k];
        let mut count = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sum[l] = sum[l] + *p;
            count[l] += 1;
        }
        for c in 0..k {
            if count[c] > 0 {
                centers[c] = sum[c] / count[c] as f64;
            }
        }
        let next = assign(&centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(labels)
}

/// Labels samples per `spec` and each candidate center by its nearest sample.
pub fn partition_samples(samples: &[Point3], candidates: &[Point3], spec: &PartitionSpec) -> Result<Partition> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples to partition".into()));
    }
    let (k, sample_labels) = match spec {
        PartitionSpec::KMeans { k, seed } => (*k, kmeans(samples, *k, *seed)?),
        PartitionSpec::Labels { labels, k } => {
            if labels.len() != samples.len() {
                return Err(Error::BadLabels(format!(
                    "{} labels for {} samples",
                    labels.len(),
                    samples.len()
                )));
            }
            let top = labels.iter().copied().max().unwrap_or(0);
            let k = k.unwrap_or(top + 1);
            if top >= k {
                return Err(Error::BadLabels(format!("label {top} out of range for k = {k}")));
            }
            (k, labels.clone())
        }
    };
    let index = SpatialIndex::new(samples);
    let candidate_labels = candidates.par_iter().map(|&c| sample_labels[index.nearest(c).0]).collect();
    Ok(Partition {
        k,
        sample_labels,
        candidate_labels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartStats {
    pub part: usize,
    pub rows: usize,
    pub candidates: usize,
    pub objective: usize,
    pub optimal: bool,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionedSelection {
    pub selection: Selection,
    pub parts: Vec<PartStats>,
    /// Rows left uncovered by the merged parts and fixed by the global pass.
    pub repaired_rows: Vec<usize>,
    /// Candidates added by the global pass.
    pub repair_chosen: Vec<usize>,
}

fn local_fixings(global: &[usize], cols: &[usize]) -> Vec<usize> {
    global.iter().filter_map(|i| cols.binary_search(i).ok()).collect()
}

/// Solves each part on its own rows and candidates, concurrently, then takes
/// the union. Rows that only other parts' candidates could cover are covered
/// afterwards by one global solve restricted to them.
pub fn solve_partitioned(
    matrix: &CoverageMatrix,
    part: &Partition,
    solver: &Solver,
    fix: &Fixings,
) -> Result<PartitionedSelection> {
    let start = Instant::now();
    if part.sample_labels.len() != matrix.m() || part.candidate_labels.len() != matrix.n() {
        return Err(Error::BadLabels(format!(
            "partition covers {} samples and {} candidates, matrix is {} x {}",
            part.sample_labels.len(),
            part.candidate_labels.len(),
            matrix.m(),
            matrix.n()
        )));
    }
    // Global feasibility first so errors name the part of the bad rows.
    if let Err(Error::Infeasible { rows, .. }) = solve_check(matrix, fix) {
        let p = part.sample_labels[rows[0]];
        let rows = rows.into_iter().filter(|&j| part.sample_labels[j] == p).collect();
        return Err(Error::Infeasible { rows, part: Some(p) });
    }
    // Rows covered by a forced-in column of any part are done.
    let mut required = matrix.required().to_vec();
    for &i in &fix.forced_in {
        for &j in matrix.column(i) {
            required[j as usize] = false;
        }
    }
    let results: Vec<Result<(Vec<usize>, PartStats)>> = (0..part.k)
        .into_par_iter()
        .map(|p| {
            let rows: Vec<usize> = (0..matrix.m()).filter(|&j| part.sample_labels[j] == p).collect();
            let cols: Vec<usize> = (0..matrix.n()).filter(|&i| part.candidate_labels[i] == p).collect();
            let mut sub = matrix.restrict(&rows, &cols);
            let out = local_fixings(&fix.forced_out, &cols);
            let mut reachable = vec![false; rows.len()];
            for (li, col) in sub.columns().iter().enumerate() {
                if out.binary_search(&li).is_err() {
                    for &r in col {
                        reachable[r as usize] = true;
                    }
                }
            }
            let ignored: Vec<usize> = (0..rows.len())
                .filter(|&r| !required[rows[r]] || !reachable[r])
                .collect();
            sub = sub.into_ignorable(&ignored)?;
            let local = Fixings::new(local_fixings(&fix.forced_in, &cols), out)?;
            let sel = solver.solve(&sub, &local).map_err(|e| match e {
                Error::Infeasible { rows: r, .. } => Error::Infeasible {
                    rows: r.into_iter().map(|x| rows[x]).collect(),
                    part: Some(p),
                },
                e => e,
            })?;
            let stats = PartStats {
                part: p,
                rows: rows.len(),
                candidates: cols.len(),
                objective: sel.objective,
                optimal: sel.optimal,
                wall_time: sel.wall_time,
            };
            Ok((sel.chosen.iter().map(|&i| cols[i]).collect(), stats))
        })
        .collect();
    let mut chosen = Vec::new();
    let mut parts = Vec::with_capacity(part.k);
    let mut optimal = true;
    let mut kind = None;
    for r in results {
        let (c, s) = r?;
        chosen.extend(c);
        optimal &= s.optimal;
        parts.push(s);
    }
    chosen.extend(&fix.forced_in);
    chosen.sort_unstable();
    chosen.dedup();
    let repaired_rows = matrix.uncovered(&chosen);
    let mut repair_chosen = Vec::new();
    if !repaired_rows.is_empty() {
        let all: Vec<usize> = (0..matrix.n()).collect();
        let gap = matrix.restrict(&repaired_rows, &all).into_ignorable(&[])?;
        let sel = solver.solve(&gap, &Fixings::new(Vec::new(), fix.forced_out.clone())?)?;
        kind = Some(sel.solver);
        repair_chosen = sel.chosen.clone();
        chosen.extend(sel.chosen);
        chosen.sort_unstable();
        chosen.dedup();
        optimal = false;
    }
    let kind = kind.unwrap_or(match solver {
        Solver::Greedy => crate::solve::SolverKind::Greedy,
        Solver::Exact { .. } => crate::solve::SolverKind::Exact,
    });
    let mut v = vec![false; matrix.n()];
    for &i in &chosen {
        v[i] = true;
    }
    let selection = Selection {
        objective: chosen.len(),
        chosen,
        v,
        solver: kind,
        // Per-part optima only add up to a global optimum with a single part.
        optimal: optimal && part.k == 1,
        wall_time: start.elapsed().as_secs_f64(),
        fixings: fix.clone(),
    };
    assert!(matrix.uncovered(&selection.chosen).is_empty(), "merged selection is infeasible");
    Ok(PartitionedSelection {
        selection,
        parts,
        repaired_rows,
        repair_chosen,
    })
}

/// Infeasibility of the whole problem under `fix`, without solving it.
fn solve_check(matrix: &CoverageMatrix, fix: &Fixings) -> Result<()> {
    let mut allowed = vec![true; matrix.n()];
    for &i in fix.forced_out.iter().chain(&fix.forced_in) {
        if i >= matrix.n() {
            return Err(Error::IndexOutOfRange { index: i, len: matrix.n() });
        }
    }
    for &i in &fix.forced_out {
        allowed[i] = false;
    }
    let mut covered = vec![false; matrix.m()];
    for (i, col) in matrix.columns().iter().enumerate() {
        if allowed[i] {
            for &j in col {
                covered[j as usize] = true;
            }
        }
    }
    let bad: Vec<usize> = (0..matrix.m()).filter(|&j| matrix.required()[j] && !covered[j]).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Infeasible { rows: bad, part: None })
    }
}
