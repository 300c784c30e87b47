use crate::error::{Error, Result};
use crate::matrix::Matrix;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Posterior triggering probabilities.
///
/// Row `i` holds the background probability `p_ii` and the off-diagonal
/// entries `p_ij` (`j < i`) that are nonzero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkageMatrix {
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl LinkageMatrix {
    pub fn new() -> Self {
        Self {
            row_ptr: vec![0],
            ..Self::default()
        }
    }

    /// Appends row `i = self.len()`; `entries` must have `j < i`, ascending.
    pub fn push_row(&mut self, background: f64, entries: impl IntoIterator<Item = (usize, f64)>) {
        let i = self.diag.len();
        if self.row_ptr.is_empty() {
            self.row_ptr.push(0);
        }
        for (j, p) in entries {
            debug_assert!(j < i);
            self.cols.push(j as u32);
            self.vals.push(p);
        }
        self.diag.push(background);
        self.row_ptr.push(self.cols.len());
    }

    /// Number of events (rows).
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of stored off-diagonal entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn background(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .zip(&self.vals[range])
            .map(|(&j, &p)| (j as usize, p))
    }

    /// `p_ij`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, p)| p)
    }

    /// All stored off-diagonal entries as `(i, j, p_ij)`.
    pub fn triggers(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len()).flat_map(move |i| self.row(i).map(move |(j, p)| (i, j, p)))
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.diag[i] + self.row(i).map(|(_, p)| p).sum::<f64>()
    }

    /// Checks nonnegativity and `Σ_{j≤i} p_ij = 1` within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        for i in 0..self.len() {
            if self.diag[i] < 0.0 || self.row(i).any(|(_, p)| p < 0.0) {
                return Err(Error::InvalidParameter(format!("negative probability in row {i}")));
            }
            let s = self.row_sum(i);
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidParameter(format!("row {i} sums to {s}")));
            }
        }
        Ok(())
    }
}

/// A retrieved pair: event `i` triggered by the earlier event `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedPair {
    pub i: usize,
    pub j: usize,
    pub p: f64,
}

// Less = ranks earlier: larger p first, then (i, j) ascending.
fn rank_order(a: &RankedPair, b: &RankedPair) -> Ordering {
    b.p.total_cmp(&a.p).then_with(|| (a.i, a.j).cmp(&(b.i, b.j)))
}

struct HeapEntry(RankedPair);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        rank_order(&self.0, &other.0) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_order(&self.0, &other.0)
    }
}

/// The `n_top` off-diagonal entries with the largest `p_ij`.
pub fn linkage_rank(linkage: &LinkageMatrix, n_top: usize) -> Vec<RankedPair> {
    linkage_rank_filtered(linkage, n_top, |_, _| true)
}

/// Like [`linkage_rank`], restricted to pairs accepted by `keep(i, j)`.
pub fn linkage_rank_filtered(linkage: &LinkageMatrix, n_top: usize, keep: impl Fn(usize, usize) -> bool) -> Vec<RankedPair> {
    if n_top == 0 {
        return Vec::new();
    }
    // Max-heap on rank order: the top is the worst pair kept so far.
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(n_top.min(linkage.nnz()) + 1);
    for (i, j, p) in linkage.triggers() {
        if !keep(i, j) {
            continue;
        }
        let candidate = HeapEntry(RankedPair { i, j, p });
        if heap.len() < n_top {
            heap.push(candidate);
        } else if let Some(mut worst) = heap.peek_mut() {
            if candidate < *worst {
                *worst = candidate;
            }
        }
    }
    let mut out: Vec<RankedPair> = heap.into_iter().map(|e| e.0).collect();
    out.sort_by(rank_order);
    out
}

/// A directed influence edge `source → target` with weight `α_{target,source}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub target: usize,
    pub source: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    pub edges: Vec<Edge>,
    pub indegree: Vec<usize>,
    pub outdegree: Vec<usize>,
}

/// Keeps the entries of `A` strictly above `threshold` as directed edges.
#[allow(clippy::needless_range_loop)]
pub fn threshold_adjacency(a: &Matrix, threshold: f64) -> Adjacency {
    let d = a.rows();
    let mut edges = Vec::new();
    let mut indegree = vec![0; d];
    let mut outdegree = vec![0; a.cols()];
    for target in 0..d {
        for source in 0..a.cols() {
            let weight = a.get(target, source);
            if weight > threshold {
                edges.push(Edge { target, source, weight });
                indegree[target] += 1;
                outdegree[source] += 1;
            }
        }
    }
    Adjacency {
        edges,
        indegree,
        outdegree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, p: f64) -> LinkageMatrix {
        let mut l = LinkageMatrix::new();
        for i in 0..n {
            l.push_row(1.0 - p * i as f64, (0..i).map(|j| (j, p)));
        }
        l
    }

    #[test]
    fn rank_edge_cases() {
        let l = uniform(4, 0.1);
        assert!(linkage_rank(&l, 0).is_empty());
        let top = linkage_rank(&l, 3);
        let ids: Vec<(usize, usize)> = top.iter().map(|r| (r.i, r.j)).collect();
        assert_eq!(ids, vec![(1, 0), (2, 0), (2, 1)]);
        assert_eq!(linkage_rank(&l, 100).len(), 6);
    }

    #[test]
    fn rank_orders_by_probability() {
        let mut l = LinkageMatrix::new();
        l.push_row(1.0, []);
        l.push_row(0.7, [(0, 0.3)]);
        l.push_row(0.1, [(0, 0.5), (1, 0.4)]);
        let top = linkage_rank(&l, 2);
        assert_eq!((top[0].i, top[0].j, top[0].p), (2, 0, 0.5));
        assert_eq!((top[1].i, top[1].j), (2, 1));
        assert!(l.check(1e-12).is_ok());
        assert_eq!(l.get(2, 1), 0.4);
        assert_eq!(l.get(1, 1), 0.7);
    }

    #[test]
    fn adjacency_examples() {
        let a = Matrix::from_rows(&[vec![0.6, 0.2], vec![0.9, 0.4]]).unwrap();
        let adj = threshold_adjacency(&a, 0.5);
        let pairs: Vec<(usize, usize)> = adj.edges.iter().map(|e| (e.target, e.source)).collect();
        assert_eq!(pairs, vec![(0, 0), (1, 0)]);
        assert_eq!(adj.outdegree, vec![2, 0]);
        assert_eq!(adj.indegree, vec![1, 1]);
        assert!(threshold_adjacency(&Matrix::zeros(3, 3), 0.5).edges.is_empty());
        assert_eq!(threshold_adjacency(&Matrix::zeros(3, 3), -1.0).edges.len(), 9);
    }
}
