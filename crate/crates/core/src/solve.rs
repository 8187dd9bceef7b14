//! Minimum-cardinality set cover over a [`CoverageMatrix`]: a greedy
//! heuristic, an exact branch-and-bound and a brute-force oracle.
//!
//! Minimizing `|v|_2` over binary `v` is the same as minimizing the number of
//! selected candidates, so every solver works with cardinality.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cover::CoverageMatrix;
use crate::error::{Error, Result};

pub const BRUTE_FORCE_LIMIT: usize = 22;
pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(120);

/// Subgradient steps at the root and at every other search node.
const ROOT_ASCENT: usize = 20_000;
const NODE_ASCENT: usize = 25;
/// Moves of the incumbent local search per block.
const SEARCH_STEPS: usize = 30_000;
/// Ascent steps between reduced-cost primal probes.
const PROBE_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Greedy,
    Exact,
    Brute,
}

/// Which solver a pipeline run uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    Greedy,
    Exact { time_limit: Duration },
}

impl Default for Solver {
    fn default() -> Self {
        Solver::Exact {
            time_limit: DEFAULT_TIME_LIMIT,
        }
    }
}

impl Solver {
    pub fn solve(&self, matrix: &CoverageMatrix, fix: &Fixings) -> Result<Selection> {
        match *self {
            Solver::Greedy => solve_greedy(matrix, fix),
            Solver::Exact { time_limit } => solve_exact(matrix, fix, time_limit),
        }
    }
}

/// Candidates forced into or out of the selection.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Fixings {
    pub forced_in: Vec<usize>,
    pub forced_out: Vec<usize>,
}

impl Fixings {
    pub fn new(mut forced_in: Vec<usize>, mut forced_out: Vec<usize>) -> Result<Self> {
        forced_in.sort_unstable();
        forced_in.dedup();
        forced_out.sort_unstable();
        forced_out.dedup();
        if let Some(i) = forced_in.iter().find(|i| forced_out.binary_search(i).is_ok()) {
            return Err(Error::InvalidParameter(format!("candidate {i} is both forced in and forced out")));
        }
        Ok(Fixings { forced_in, forced_out })
    }

    fn check(&self, n: usize) -> Result<()> {
        if let Some(&i) = self.forced_in.iter().chain(&self.forced_out).find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        Fixings::new(self.forced_in.clone(), self.forced_out.clone()).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub chosen: Vec<usize>,
    pub v: Vec<bool>,
    pub solver: SolverKind,
    pub optimal: bool,
    pub objective: usize,
    /// Seconds.
    pub wall_time: f64,
    pub fixings: Fixings,
}

impl Selection {
    fn new(n: usize, mut chosen: Vec<usize>, solver: SolverKind, optimal: bool, start: Instant, fix: &Fixings) -> Self {
        chosen.sort_unstable();
        chosen.dedup();
        let mut v = vec![false; n];
        for &i in &chosen {
            v[i] = true;
        }
        Selection {
            objective: chosen.len(),
            chosen,
            v,
            solver,
            optimal,
            wall_time: start.elapsed().as_secs_f64(),
            fixings: fix.clone(),
        }
    }
}

/// Every required row is covered by some chosen column.
pub fn is_feasible(matrix: &CoverageMatrix, chosen: &[usize]) -> bool {
    matrix.uncovered(chosen).is_empty()
}

fn checked(matrix: &CoverageMatrix, sel: Selection) -> Selection {
    assert!(is_feasible(matrix, &sel.chosen), "solver returned an infeasible selection");
    assert!(sel.fixings.forced_in.iter().all(|&i| sel.v[i]));
    assert!(sel.fixings.forced_out.iter().all(|&i| !sel.v[i]));
    sel
}

/// Required rows still to cover after the fixings, with the allowed columns.
struct Residual {
    rows: Vec<bool>,
    allowed: Vec<bool>,
}

fn residual(matrix: &CoverageMatrix, fix: &Fixings) -> Result<Residual> {
    fix.check(matrix.n())?;
    let mut rows = matrix.required().to_vec();
    for &i in &fix.forced_in {
        for &j in matrix.column(i) {
            rows[j as usize] = false;
        }
    }
    let mut allowed = vec![true; matrix.n()];
    for &i in fix.forced_in.iter().chain(&fix.forced_out) {
        allowed[i] = false;
    }
    let mut coverable = vec![false; matrix.m()];
    for (i, col) in matrix.columns().iter().enumerate() {
        if allowed[i] {
            for &j in col {
                coverable[j as usize] = true;
            }
        }
    }
    let bad: Vec<usize> = (0..matrix.m()).filter(|&j| rows[j] && !coverable[j]).collect();
    if !bad.is_empty() {
        return Err(Error::Infeasible { rows: bad, part: None });
    }
    Ok(Residual { rows, allowed })
}

/// Column order used for every tie: larger radius first, then lower index.
fn priority_cmp(matrix: &CoverageMatrix, a: usize, b: usize) -> Ordering {
    let p = matrix.priority();
    p[b].total_cmp(&p[a]).then(a.cmp(&b))
}

#[derive(PartialEq)]
struct HeapEntry<'a> {
    gain: usize,
    col: usize,
    priority: &'a [f64],
}

impl Eq for HeapEntry<'_> {}

impl PartialOrd for HeapEntry<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .cmp(&other.gain)
            .then(self.priority[self.col].total_cmp(&self.priority[other.col]))
            .then(other.col.cmp(&self.col))
    }
}

/// Lazy greedy: gains only shrink, so a popped entry whose recomputed gain is
/// unchanged is the true maximum under the tie order.
fn greedy_cover(matrix: &CoverageMatrix, mut uncovered: Vec<bool>, allowed: &[bool]) -> Vec<usize> {
    let gain = |i: usize, unc: &[bool]| matrix.column(i).iter().filter(|&&j| unc[j as usize]).count();
    let mut left = uncovered.iter().filter(|&&u| u).count();
    let mut heap: BinaryHeap<HeapEntry> = (0..matrix.n())
        .filter(|&i| allowed[i])
        .map(|i| HeapEntry {
            gain: gain(i, &uncovered),
            col: i,
            priority: matrix.priority(),
        })
        .filter(|e| e.gain > 0)
        .collect();
    let mut chosen = Vec::new();
    while left > 0 {
        let Some(top) = heap.pop() else { break };
        let g = gain(top.col, &uncovered);
        if g == 0 {
            continue;
        }
        if g < top.gain {
            heap.push(HeapEntry { gain: g, ..top });
            continue;
        }
        for &j in matrix.column(top.col) {
            if uncovered[j as usize] {
                uncovered[j as usize] = false;
                left -= 1;
            }
        }
        chosen.push(top.col);
    }
    chosen
}

pub fn solve_greedy(matrix: &CoverageMatrix, fix: &Fixings) -> Result<Selection> {
    let start = Instant::now();
    let res = residual(matrix, fix)?;
    let mut chosen = greedy_cover(matrix, res.rows, &res.allowed);
    chosen.extend(&fix.forced_in);
    Ok(checked(matrix, Selection::new(matrix.n(), chosen, SolverKind::Greedy, false, start, fix)))
}

/// Enumerates subsets of the free columns by size, each size in
/// lexicographic order, so the first feasible subset is the
/// lexicographically smallest minimum cover.
pub fn brute_force(matrix: &CoverageMatrix, fix: &Fixings) -> Result<Selection> {
    let start = Instant::now();
    if matrix.n() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n: matrix.n(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let res = residual(matrix, fix)?;
    let target: FixedBitSet = (0..matrix.m()).filter(|&j| res.rows[j]).collect();
    let cols: Vec<usize> = (0..matrix.n()).filter(|&i| res.allowed[i]).collect();
    let bits: Vec<FixedBitSet> = cols
        .iter()
        .map(|&i| {
            let mut b = FixedBitSet::with_capacity(matrix.m());
            b.extend(matrix.column(i).iter().map(|&j| j as usize));
            b
        })
        .collect();
    for k in 0..=cols.len() {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let mut cov = FixedBitSet::with_capacity(matrix.m());
            for &t in &idx {
                cov.union_with(&bits[t]);
            }
            if target.is_subset(&cov) {
                let mut chosen: Vec<usize> = idx.iter().map(|&t| cols[t]).collect();
                chosen.extend(&fix.forced_in);
                return Ok(checked(matrix, Selection::new(matrix.n(), chosen, SolverKind::Brute, true, start, fix)));
            }
            if !next_combination(&mut idx, cols.len()) {
                break;
            }
        }
    }
    unreachable!("the residual check guarantees a feasible subset")
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for p in (0..k).rev() {
        if idx[p] < n - k + p {
            idx[p] += 1;
            for q in p + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// One independent subproblem after reduction. Local columns are sorted by
/// the tie order; `rows` of a column are local row ids.
struct Block {
    cols: Vec<usize>,
    col_rows: Vec<FixedBitSet>,
    row_cols: Vec<Vec<u32>>,
}

/// Reduction result: columns forced by unit rows and the remaining blocks.
struct Reduced {
    forced: Vec<usize>,
    blocks: Vec<Block>,
}

/// Repeats unit-row forcing, dominated-column removal and dominated-row
/// removal to a fixpoint, then splits into connected components.
fn reduce(matrix: &CoverageMatrix, res: &Residual) -> Reduced {
    let (m, n) = (matrix.m(), matrix.n());
    let mut row_on = res.rows.clone();
    let mut col_on = res.allowed.clone();
    let mut forced = Vec::new();
    let full_rows = matrix.rows();
    loop {
        let mut changed = false;

        // Unit rows.
        for j in 0..m {
            if !row_on[j] {
                continue;
            }
            let mut it = full_rows[j].iter().map(|&i| i as usize).filter(|&i| col_on[i]);
            let first = it.next().expect("residual rows are coverable");
            if it.next().is_none() {
                forced.push(first);
                col_on[first] = false;
                for &r in matrix.column(first) {
                    row_on[r as usize] = false;
                }
                changed = true;
            }
        }

        // Dominated columns: drop `a` when an earlier column in (size desc,
        // tie order) covers a superset of its live rows.
        let mut bits: Vec<Option<FixedBitSet>> = vec![None; n];
        let mut size = vec![0usize; n];
        for i in 0..n {
            if col_on[i] {
                let mut b = FixedBitSet::with_capacity(m);
                b.extend(matrix.column(i).iter().map(|&j| j as usize).filter(|&j| row_on[j]));
                size[i] = b.count_ones(..);
                if size[i] == 0 {
                    col_on[i] = false;
                    changed = true;
                } else {
                    bits[i] = Some(b);
                }
            }
        }
        let mut order: Vec<usize> = (0..n).filter(|&i| col_on[i]).collect();
        order.sort_by(|&a, &b| size[b].cmp(&size[a]).then(priority_cmp(matrix, a, b)));
        let mut rank = vec![usize::MAX; n];
        for (k, &i) in order.iter().enumerate() {
            rank[i] = k;
        }
        // Any row of `a` works as the pivot; the rarest one keeps the scan short.
        let covers: Vec<usize> = (0..m)
            .map(|j| full_rows[j].iter().filter(|&&i| col_on[i as usize]).count())
            .collect();
        for &a in &order {
            let ba = bits[a].as_ref().expect("live column");
            let pivot = ba
                .ones()
                .min_by_key(|&j| (covers[j], j))
                .expect("nonempty column");
            let dominated = full_rows[pivot].iter().map(|&b| b as usize).any(|b| {
                b != a && col_on[b] && rank[b] < rank[a] && ba.is_subset(bits[b].as_ref().expect("live column"))
            });
            if dominated {
                col_on[a] = false;
                changed = true;
            }
        }

        // Dominated rows: drop `j` when another live row's coverers are a
        // subset of j's (equal sets keep the lower row).
        let row_list: Vec<Vec<u32>> = (0..m)
            .map(|j| {
                if row_on[j] {
                    full_rows[j].iter().copied().filter(|&i| col_on[i as usize]).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        let mut by_first: Vec<Vec<u32>> = vec![Vec::new(); n];
        for j in 0..m {
            if let Some(&c) = row_list[j].first() {
                by_first[c as usize].push(j as u32);
            }
        }
        let mut mark = vec![false; n];
        for j in 0..m {
            if !row_on[j] {
                continue;
            }
            for &c in &row_list[j] {
                mark[c as usize] = true;
            }
            let cj = row_list[j].len();
            let dominated = row_list[j].iter().any(|&c| {
                by_first[c as usize].iter().map(|&k| k as usize).any(|k| {
                    let ck = row_list[k].len();
                    k != j
                        && row_on[k]
                        && (ck < cj || (ck == cj && k < j))
                        && row_list[k].iter().all(|&i| mark[i as usize])
                })
            });
            for &c in &row_list[j] {
                mark[c as usize] = false;
            }
            if dominated {
                row_on[j] = false;
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }

    // Connected components of the live row/column graph.
    let mut comp_of_row = vec![usize::MAX; m];
    let mut comp_of_col = vec![usize::MAX; n];
    let mut ncomp = 0;
    let full_rows_live = |j: usize| full_rows[j].iter().map(|&i| i as usize).filter(|&i| col_on[i]);
    for s in 0..m {
        if !row_on[s] || comp_of_row[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp_of_row[s] = ncomp;
        while let Some(j) = stack.pop() {
            for i in full_rows_live(j) {
                if comp_of_col[i] == usize::MAX {
                    comp_of_col[i] = ncomp;
                    for &r in matrix.column(i) {
                        let r = r as usize;
                        if row_on[r] && comp_of_row[r] == usize::MAX {
                            comp_of_row[r] = ncomp;
                            stack.push(r);
                        }
                    }
                }
            }
        }
        ncomp += 1;
    }
    let mut blocks = Vec::with_capacity(ncomp);
    for c in 0..ncomp {
        let rows: Vec<usize> = (0..m).filter(|&j| comp_of_row[j] == c).collect();
        let mut cols: Vec<usize> = (0..n).filter(|&i| comp_of_col[i] == c).collect();
        cols.sort_by(|&a, &b| priority_cmp(matrix, a, b));
        let mut local = vec![usize::MAX; m];
        for (k, &j) in rows.iter().enumerate() {
            local[j] = k;
        }
        let col_rows: Vec<FixedBitSet> = cols
            .iter()
            .map(|&i| {
                let mut b = FixedBitSet::with_capacity(rows.len());
                b.extend(
                    matrix
                        .column(i)
                        .iter()
                        .map(|&j| local[j as usize])
                        .filter(|&k| k != usize::MAX),
                );
                b
            })
            .collect();
        let mut row_cols = vec![Vec::new(); rows.len()];
        for (k, b) in col_rows.iter().enumerate() {
            for r in b.ones() {
                row_cols[r].push(k as u32);
            }
        }
        blocks.push(Block { cols, col_rows, row_cols });
    }
    Reduced { forced, blocks }
}

/// Row-weighting local search over full covers of `block`. Each step drops
/// the column whose loss is smallest and adds the best coverer of a random
/// uncovered row, then raises the weight of rows still uncovered. Whenever
/// the set covers everything it is recorded and a column is dropped.
fn local_search(block: &Block, start: Vec<u32>, steps: usize, deadline: Instant) -> Vec<u32> {
    let mut ls = Walk::new(block, &start);
    let mut rng = ChaCha8Rng::seed_from_u64(((block.cols.len() as u64) << 32) ^ block.row_cols.len() as u64);
    let mut best = start;
    let (mut last_added, mut last_removed) = (usize::MAX, usize::MAX);
    for step in 0..steps {
        if step % 256 == 255 && Instant::now() >= deadline {
            break;
        }
        let current: Vec<usize> = (0..block.cols.len()).filter(|&c| ls.inside[c]).collect();
        if ls.open == 0 {
            if current.len() < best.len() {
                best = current.iter().map(|&c| c as u32).collect();
            }
            if current.len() <= 1 {
                break;
            }
            let c = ls.pick(current.iter().copied()).expect("non-empty set");
            ls.toggle(c, step);
            continue;
        }
        if let Some(c) = ls.pick(current.iter().copied().filter(|&c| c != last_added)) {
            ls.toggle(c, step);
            last_removed = c;
        }
        let open: Vec<usize> = (0..block.row_cols.len()).filter(|&r| ls.times[r] == 0).collect();
        if open.is_empty() {
            continue;
        }
        let r = open[rng.random_range(0..open.len())];
        let coverers = block.row_cols[r].iter().map(|&c| c as usize);
        let add = ls
            .pick(coverers.clone().filter(|&c| c != last_removed))
            .or_else(|| ls.pick(coverers))
            .expect("every row has a coverer");
        ls.toggle(add, step);
        last_added = add;
        for q in open {
            if ls.times[q] == 0 {
                ls.weight[q] += 1;
            }
        }
    }
    best
}

/// State of the local search.
struct Walk<'a> {
    block: &'a Block,
    weight: Vec<u64>,
    times: Vec<u32>,
    inside: Vec<bool>,
    stamp: Vec<usize>,
    open: usize,
}

impl<'a> Walk<'a> {
    fn new(block: &'a Block, start: &[u32]) -> Self {
        let mut w = Walk {
            block,
            weight: vec![1; block.row_cols.len()],
            times: vec![0; block.row_cols.len()],
            inside: vec![false; block.cols.len()],
            stamp: vec![0; block.cols.len()],
            open: block.row_cols.len(),
        };
        for &c in start {
            w.toggle(c as usize, 0);
        }
        w
    }

    /// Weight gained by adding `c`, or minus the weight lost by dropping it.
    fn score(&self, c: usize) -> i64 {
        let rows = self.block.col_rows[c].ones();
        if self.inside[c] {
            -rows.filter(|&r| self.times[r] == 1).map(|r| self.weight[r] as i64).sum::<i64>()
        } else {
            rows.filter(|&r| self.times[r] == 0).map(|r| self.weight[r] as i64).sum()
        }
    }

    /// Highest score, then least recently moved, then lowest index.
    fn pick(&self, cands: impl Iterator<Item = usize>) -> Option<usize> {
        cands
            .map(|c| (self.score(c), Reverse(self.stamp[c]), Reverse(c)))
            .max()
            .map(|(_, _, Reverse(c))| c)
    }

    fn toggle(&mut self, c: usize, step: usize) {
        self.inside[c] = !self.inside[c];
        for r in self.block.col_rows[c].ones() {
            if self.inside[c] {
                self.times[r] += 1;
                if self.times[r] == 1 {
                    self.open -= 1;
                }
            } else {
                self.times[r] -= 1;
                if self.times[r] == 0 {
                    self.open += 1;
                }
            }
        }
        self.stamp[c] = step;
    }
}

struct Search<'a> {
    block: &'a Block,
    best: Vec<u32>,
    excluded: Vec<bool>,
    deadline: Instant,
    timed_out: bool,
    nodes: u64,
}

impl Search<'_> {
    fn greedy(block: &Block) -> Vec<u32> {
        let nrows = block.row_cols.len();
        let mut unc: FixedBitSet = (0..nrows).collect();
        let mut chosen = Vec::new();
        while !unc.is_clear() {
            // Local order is the tie order, so the first maximum wins.
            let (best, _) = block
                .col_rows
                .iter()
                .enumerate()
                .map(|(k, b)| (k, b.intersection_count(&unc)))
                .fold((usize::MAX, 0), |acc, (k, g)| if g > acc.1 { (k, g) } else { acc });
            unc.difference_with(&block.col_rows[best]);
            chosen.push(best as u32);
        }
        chosen
    }

    fn lower_bound(&self, unc: &FixedBitSet) -> usize {
        let left = unc.count_ones(..);
        let widest = self
            .block
            .col_rows
            .iter()
            .enumerate()
            .filter(|(k, _)| !self.excluded[*k])
            .map(|(_, b)| b.intersection_count(unc))
            .max()
            .unwrap_or(0);
        if widest == 0 {
            return usize::MAX;
        }
        let ceil = left.div_ceil(widest);
        // Rows with pairwise disjoint coverer sets each need their own column.
        let mut rows: Vec<(usize, usize)> = unc
            .ones()
            .map(|r| (self.live_coverers(r).count(), r))
            .collect();
        rows.sort_unstable();
        let mut used = vec![false; self.block.cols.len()];
        let mut packing = 0;
        for (_, r) in rows {
            if self.live_coverers(r).all(|c| !used[c]) {
                packing += 1;
                for c in self.live_coverers(r) {
                    used[c] = true;
                }
            }
        }
        ceil.max(packing).max(self.dual_bound(unc))
    }

    /// Sum of row weights that no live column overfills, started from
    /// `1 / widest coverer` per row and raised greedily in row order.
    fn dual_bound(&self, unc: &FixedBitSet) -> usize {
        let ncols = self.block.cols.len();
        let width: Vec<usize> = (0..ncols)
            .map(|c| if self.excluded[c] { 0 } else { self.block.col_rows[c].intersection_count(unc) })
            .collect();
        let mut slack = vec![1.0f64; ncols];
        let mut weight = vec![0.0f64; self.block.row_cols.len()];
        let mut rows: Vec<(usize, usize)> = unc
            .ones()
            .map(|r| (self.live_coverers(r).count(), r))
            .collect();
        rows.sort_unstable();
        for &(_, r) in &rows {
            let w = self.live_coverers(r).map(|c| width[c]).max().unwrap_or(0);
            if w == 0 {
                return usize::MAX;
            }
            weight[r] = 1.0 / w as f64;
            for c in self.live_coverers(r) {
                slack[c] -= weight[r];
            }
        }
        let mut total: f64 = rows.iter().map(|&(_, r)| weight[r]).sum();
        for &(_, r) in &rows {
            let raise = self.live_coverers(r).map(|c| slack[c]).fold(f64::INFINITY, f64::min);
            if raise > 0.0 {
                for c in self.live_coverers(r) {
                    slack[c] -= raise;
                }
                total += raise;
            }
        }
        (total - 1e-9).ceil().max(0.0) as usize
    }

    fn live_coverers(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.block.row_cols[r]
            .iter()
            .map(|&c| c as usize)
            .filter(|&c| !self.excluded[c])
    }

    /// Subgradient ascent on the Lagrangian dual of the uncovered rows,
    /// warm-started from `u`. Returns the best bound seen and the column
    /// reduced costs at that point.
    fn lagrangian(&mut self, unc: &FixedBitSet, chosen: &[u32], u: &mut [f64], iters: usize) -> (f64, Vec<f64>) {
        let ncols = self.block.cols.len();
        let rows: Vec<usize> = unc.ones().collect();
        let live: Vec<usize> = (0..ncols)
            .filter(|&c| !self.excluded[c] && !self.block.col_rows[c].is_disjoint(unc))
            .collect();
        let mut cost = vec![1.0; ncols];
        let mut best = (f64::NEG_INFINITY, cost.clone());
        let mut lambda = if iters > 50 { 2.0 } else { 0.5 };
        let mut stale = 0;
        let mut g = vec![0.0f64; u.len()];
        for it in 0..iters {
            if it % 64 == 63 && Instant::now() >= self.deadline {
                self.timed_out = true;
                break;
            }
            let mut l: f64 = rows.iter().map(|&r| u[r]).sum();
            for &c in &live {
                let used: f64 = self.block.col_rows[c].intersection(unc).map(|r| u[r]).sum();
                cost[c] = 1.0 - used;
                l += cost[c].min(0.0);
            }
            if it % PROBE_EVERY == PROBE_EVERY - 1 || it + 1 == iters {
                self.probe(unc, chosen, &cost);
            }
            let target = self.best.len() - chosen.len();
            if l > best.0 + 1e-9 {
                best = (l, cost.clone());
                stale = 0;
            } else {
                stale += 1;
                if stale >= if iters > 50 { 100 } else { 5 } {
                    lambda *= 0.5;
                    stale = 0;
                }
            }
            if (best.0 - 1e-6).ceil() >= target as f64 || lambda < 1e-3 {
                break;
            }
            for &r in &rows {
                g[r] = 1.0;
            }
            for &c in &live {
                if cost[c] < 0.0 {
                    for r in self.block.col_rows[c].intersection(unc) {
                        g[r] -= 1.0;
                    }
                }
            }
            let norm: f64 = rows.iter().map(|&r| g[r] * g[r]).sum();
            if norm == 0.0 {
                break;
            }
            let step = lambda * (target as f64 - l).max(0.05) / norm;
            for &r in &rows {
                u[r] = (u[r] + step * g[r]).max(0.0);
            }
        }
        best
    }

    /// Covers `unc` by taking, row by row, the live coverer of lowest
    /// reduced cost, then drops columns made redundant, costliest first.
    fn cheapest_cover(&self, unc: &FixedBitSet, cost: &[f64]) -> Vec<usize> {
        let mut left = unc.clone();
        let mut picked = Vec::new();
        let mut rows: Vec<(usize, usize)> = unc.ones().map(|r| (self.live_coverers(r).count(), r)).collect();
        rows.sort_unstable();
        for (_, r) in rows {
            if !left.contains(r) {
                continue;
            }
            let Some(c) = self.live_coverers(r).min_by(|&a, &b| cost[a].total_cmp(&cost[b])) else {
                return Vec::new();
            };
            left.difference_with(&self.block.col_rows[c]);
            picked.push(c);
        }
        self.prune_redundant(unc, picked, cost)
    }

    /// Greedy on reduced cost per newly covered row.
    fn ratio_cover(&self, unc: &FixedBitSet, cost: &[f64]) -> Vec<usize> {
        let mut left = unc.clone();
        let mut picked = Vec::new();
        let live: Vec<usize> = (0..self.block.cols.len()).filter(|&c| !self.excluded[c]).collect();
        while !left.is_clear() {
            let mut best: Option<(f64, usize)> = None;
            for &c in &live {
                let k = self.block.col_rows[c].intersection_count(&left);
                if k == 0 {
                    continue;
                }
                let k = k as f64;
                let score = if cost[c] > 0.0 { cost[c] / k } else { cost[c] * k };
                if best.is_none_or(|(b, _)| score < b) {
                    best = Some((score, c));
                }
            }
            let Some((_, c)) = best else {
                return Vec::new();
            };
            left.difference_with(&self.block.col_rows[c]);
            picked.push(c);
        }
        self.prune_redundant(unc, picked, cost)
    }

    fn prune_redundant(&self, unc: &FixedBitSet, mut picked: Vec<usize>, cost: &[f64]) -> Vec<usize> {
        picked.sort_by(|&a, &b| cost[b].total_cmp(&cost[a]).then(a.cmp(&b)));
        let mut times = vec![0u32; self.block.row_cols.len()];
        for &c in &picked {
            for r in self.block.col_rows[c].intersection(unc) {
                times[r] += 1;
            }
        }
        let mut keep = Vec::with_capacity(picked.len());
        for c in picked {
            if self.block.col_rows[c].intersection(unc).all(|r| times[r] > 1) {
                for r in self.block.col_rows[c].intersection(unc) {
                    times[r] -= 1;
                }
            } else {
                keep.push(c);
            }
        }
        keep
    }

    fn probe(&mut self, unc: &FixedBitSet, chosen: &[u32], cost: &[f64]) {
        for cover in [self.cheapest_cover(unc, cost), self.ratio_cover(unc, cost)] {
            if !cover.is_empty() && chosen.len() + cover.len() < self.best.len() {
                let found = chosen.iter().copied().chain(cover.iter().map(|&c| c as u32)).collect();
                self.best = self.swap_down(found);
            }
        }
    }

    /// Replaces two columns of a full cover by one while that is possible.
    fn swap_down(&self, mut cover: Vec<u32>) -> Vec<u32> {
        let nrows = self.block.row_cols.len();
        'improve: loop {
            let mut times = vec![0u32; nrows];
            for &c in &cover {
                for r in self.block.col_rows[c as usize].ones() {
                    times[r] += 1;
                }
            }
            for a in 0..cover.len() {
                for b in a + 1..cover.len() {
                    let (ca, cb) = (cover[a] as usize, cover[b] as usize);
                    let mut need: FixedBitSet = FixedBitSet::with_capacity(nrows);
                    for r in self.block.col_rows[ca].union(&self.block.col_rows[cb]) {
                        let own = u32::from(self.block.col_rows[ca].contains(r)) + u32::from(self.block.col_rows[cb].contains(r));
                        if times[r] == own {
                            need.insert(r);
                        }
                    }
                    let Some(r0) = need.ones().next() else {
                        cover.retain(|&c| c as usize != ca && c as usize != cb);
                        continue 'improve;
                    };
                    let hit = self.block.row_cols[r0]
                        .iter()
                        .map(|&c| c as usize)
                        .find(|&c| need.is_subset(&self.block.col_rows[c]));
                    if let Some(c) = hit {
                        cover.retain(|&x| x as usize != ca && x as usize != cb);
                        cover.push(c as u32);
                        continue 'improve;
                    }
                }
            }
            return cover;
        }
    }

    fn run(&mut self, unc: &FixedBitSet, chosen: &mut Vec<u32>, parent: &[f64]) {
        if self.timed_out {
            return;
        }
        self.nodes += 1;
        if Instant::now() >= self.deadline {
            self.timed_out = true;
            return;
        }
        if unc.is_clear() {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return;
        }
        if chosen.len() + 1 >= self.best.len() {
            return;
        }
        let lb = self.lower_bound(unc);
        if lb == usize::MAX || chosen.len() + lb >= self.best.len() {
            return;
        }
        let mut u = parent.to_vec();
        let iters = if chosen.is_empty() { ROOT_ASCENT } else { NODE_ASCENT };
        let (bound, cost) = self.lagrangian(unc, chosen, &mut u, iters);
        if self.timed_out {
            return;
        }
        if chosen.is_empty() {
            log::debug!("exact: root bound {bound:.3} incumbent {}", self.best.len());
        }
        let target = self.best.len() - chosen.len();
        if (bound - 1e-6).ceil() >= target as f64 {
            return;
        }
        // A column whose reduced cost lifts the bound past the incumbent
        // cannot be part of a better cover below this node.
        let mut undo = Vec::new();
        for c in 0..self.block.cols.len() {
            if !self.excluded[c] && bound + cost[c] > target as f64 - 1.0 + 1e-6 {
                self.excluded[c] = true;
                undo.push(c);
            }
        }
        // Likewise a column whose removal would do the same belongs to
        // every better cover.
        let forced: Vec<usize> = (0..self.block.cols.len())
            .filter(|&c| !self.excluded[c] && cost[c] < 0.0 && bound - cost[c] > target as f64 - 1.0 + 1e-6)
            .collect();
        if !forced.is_empty() {
            let mut next = unc.clone();
            for &c in &forced {
                next.difference_with(&self.block.col_rows[c]);
                chosen.push(c as u32);
            }
            self.run(&next, chosen, &u);
            chosen.truncate(chosen.len() - forced.len());
            for c in undo {
                self.excluded[c] = false;
            }
            return;
        }
        let row = unc
            .ones()
            .min_by_key(|&r| (self.live_coverers(r).count(), r))
            .expect("uncovered rows");
        let mut branch: Vec<usize> = self.live_coverers(row).collect();
        branch.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
        for c in branch {
            let mut next = unc.clone();
            next.difference_with(&self.block.col_rows[c]);
            chosen.push(c as u32);
            self.run(&next, chosen, &u);
            chosen.pop();
            if self.timed_out {
                break;
            }
            self.excluded[c] = true;
            undo.push(c);
        }
        for c in undo {
            self.excluded[c] = false;
        }
    }
}

/// Branch-and-bound after dominance reduction. Each component starts from a
/// greedy incumbent; on timeout the incumbents found so far are returned with
/// `optimal = false`.
pub fn solve_exact(matrix: &CoverageMatrix, fix: &Fixings, time_limit: Duration) -> Result<Selection> {
    let start = Instant::now();
    let deadline = start + time_limit;
    let res = residual(matrix, fix)?;
    let reduced = reduce(matrix, &res);
    log::debug!(
        "exact: reduced {} x {} to {} blocks {:?} (rows x cols) in {:.3}s",
        res.rows.iter().filter(|&&r| r).count(),
        res.allowed.iter().filter(|&&a| a).count(),
        reduced.blocks.len(),
        reduced.blocks.iter().map(|b| (b.row_cols.len(), b.cols.len())).collect::<Vec<_>>(),
        start.elapsed().as_secs_f64()
    );
    let mut chosen = reduced.forced.clone();
    chosen.extend(&fix.forced_in);
    let mut optimal = true;
    let mut nodes = 0;
    for block in &reduced.blocks {
        let mut s = Search {
            block,
            best: Vec::new(),
            excluded: vec![false; block.cols.len()],
            deadline,
            timed_out: false,
            nodes: 0,
        };
        s.best = s.swap_down(local_search(block, Search::greedy(block), SEARCH_STEPS, deadline));
        if Instant::now() >= deadline {
            s.timed_out = true;
        } else {
            let all: FixedBitSet = (0..block.row_cols.len()).collect();
            let u: Vec<f64> = block
                .row_cols
                .iter()
                .map(|cs| 1.0 / cs.iter().map(|&c| block.col_rows[c as usize].count_ones(..)).max().unwrap_or(1) as f64)
                .collect();
            s.run(&all, &mut Vec::new(), &u);
        }
        optimal &= !s.timed_out;
        nodes += s.nodes;
        chosen.extend(s.best.iter().map(|&k| block.cols[k as usize]));
    }
    log::debug!(
        "exact: {} forced, {} blocks, {nodes} nodes, optimal={optimal}",
        reduced.forced.len(),
        reduced.blocks.len()
    );
    Ok(checked(matrix, Selection::new(matrix.n(), chosen, SolverKind::Exact, optimal, start, fix)))
}
