use super::metrics::{precision_recall_f1, silhouette, PairSet};
use crate::error::{check_len, Error, Result};
use crate::hawkes::{fit_em, linkage_rank_filtered, EmConfig, Event, MarkSpace};
use crate::rbm::{embed, train, RbmHyper};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub grid: Vec<f64>,
    /// `scores[g][f]`: score of grid value `g` on fold `f`.
    pub scores: Vec<Vec<f64>>,
    pub mean_scores: Vec<f64>,
    pub best: f64,
}

impl CvResult {
    fn from_scores(grid: &[f64], scores: Vec<Vec<f64>>) -> Self {
        let mean_scores: Vec<f64> = scores
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect();
        let mut best_idx = 0;
        for g in 1..grid.len() {
            let better = mean_scores[g] > mean_scores[best_idx];
            let tie_smaller = mean_scores[g] == mean_scores[best_idx] && grid[g] < grid[best_idx];
            if better || tie_smaller {
                best_idx = g;
            }
        }
        Self {
            grid: grid.to_vec(),
            scores,
            mean_scores,
            best: grid[best_idx],
        }
    }

    pub fn best_index(&self) -> usize {
        self.grid.iter().position(|&g| g == self.best).expect("best comes from the grid")
    }

    /// `(param, fold, score)` rows in grid-then-fold order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, usize, f64)> + '_ {
        self.grid
            .iter()
            .zip(&self.scores)
            .flat_map(|(&g, row)| row.iter().enumerate().map(move |(f, &s)| (g, f, s)))
    }
}

fn check_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("parameter grid"));
    }
    if let Some(bad) = grid.iter().find(|g| !g.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} grid contains {bad}")));
    }
    Ok(())
}

/// Seeded fold labels: shuffle `0..n`, then deal positions round-robin.
pub fn assign_folds(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 || folds > n {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= folds <= {n}, got {folds}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    Ok(fold_of)
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(fold as u64 + 1)
}

/// Selects `δ` by the held-out silhouette of `h/√m` against category labels.
///
/// Each fold trains one RBM per grid value on the remaining documents; the
/// training seed depends only on `seed` and the fold, so grid values share
/// initialisation and minibatch order.
pub fn cv_delta(
    corpus: &[Vec<f64>],
    labels: &[usize],
    delta_grid: &[f64],
    folds: usize,
    seed: u64,
    base: &RbmHyper,
) -> Result<CvResult> {
    check_len("labels", corpus.len(), labels.len())?;
    check_grid(delta_grid, "delta")?;
    let categories: BTreeSet<usize> = labels.iter().copied().collect();
    if categories.len() < 2 {
        return Err(Error::TooFewClusters { found: categories.len() });
    }
    let fold_of = assign_folds(corpus.len(), folds, seed)?;
    let mut scores = vec![Vec::with_capacity(folds); delta_grid.len()];
    for f in 0..folds {
        let train_docs: Vec<Vec<f64>> = (0..corpus.len()).filter(|&i| fold_of[i] != f).map(|i| corpus[i].clone()).collect();
        let held: Vec<usize> = (0..corpus.len()).filter(|&i| fold_of[i] == f).collect();
        let held_labels: Vec<usize> = held.iter().map(|&i| labels[i]).collect();
        for (g, &delta) in delta_grid.iter().enumerate() {
            let hyper = RbmHyper {
                delta,
                seed: fold_seed(seed, f),
                ..base.clone()
            };
            let params = train(&train_docs, &hyper)?;
            let points: Vec<Vec<f64>> = held.iter().map(|&i| embed(&corpus[i], &params).normalized()).collect();
            scores[g].push(silhouette(&points, &held_labels)?);
        }
    }
    Ok(CvResult::from_scores(delta_grid, scores))
}

/// Fixed inputs to every fit in [`cv_beta`].
#[derive(Debug, Clone)]
pub struct BetaCvSetup<'a> {
    pub omega: &'a MarkSpace,
    pub horizon: f64,
    pub mu: &'a [f64],
    pub em: EmConfig,
}

/// Selects `β` by F1 of the top-ranked linkage pairs against labelled pairs.
///
/// The model is unsupervised, so it is fitted once per grid value on all
/// events. Events are split into folds; fold `f` is scored on the pairs with
/// at least one endpoint in it, retrieving a share of `n_top` proportional to
/// its share of the true pairs.
pub fn cv_beta(
    events: &[Event],
    truth: &PairSet<usize>,
    beta_grid: &[f64],
    n_top: usize,
    folds: usize,
    seed: u64,
    setup: &BetaCvSetup<'_>,
) -> Result<CvResult> {
    check_grid(beta_grid, "beta")?;
    if truth.is_empty() {
        return Err(Error::EmptyInput("truth pairs"));
    }
    if let Some(&(_, j)) = truth.iter().find(|&&(_, j)| j >= events.len()) {
        return Err(Error::InvalidEvents(format!("truth pair refers to event {j} of {}", events.len())));
    }
    let fold_of = assign_folds(events.len(), folds, seed)?;
    let fold_truth: Vec<PairSet<usize>> = (0..folds)
        .map(|f| {
            truth
                .iter()
                .filter(|&&(a, b)| fold_of[a] == f || fold_of[b] == f)
                .copied()
                .collect()
        })
        .collect();
    let universe: usize = fold_truth.iter().map(PairSet::len).sum();
    let fold_budget: Vec<usize> = fold_truth
        .iter()
        .map(|u| (n_top as f64 * u.len() as f64 / universe as f64).round() as usize)
        .collect();

    let mut scores = vec![Vec::with_capacity(folds); beta_grid.len()];
    for (g, &beta) in beta_grid.iter().enumerate() {
        let fit = fit_em(events, setup.omega, beta, setup.horizon, setup.mu, &setup.em)?;
        for f in 0..folds {
            let ranked = linkage_rank_filtered(&fit.linkage, fold_budget[f], |i, j| fold_of[i] == f || fold_of[j] == f);
            let retrieved: PairSet<usize> = ranked.iter().map(|r| (r.i, r.j)).collect();
            scores[g].push(precision_recall_f1(&retrieved, &fold_truth[f]).f1);
        }
    }
    Ok(CvResult::from_scores(beta_grid, scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_balanced_and_seeded() {
        let a = assign_folds(23, 5, 7).unwrap();
        assert_eq!(a, assign_folds(23, 5, 7).unwrap());
        for f in 0..5 {
            let size = a.iter().filter(|&&x| x == f).count();
            assert!(size == 4 || size == 5);
        }
        assert!(assign_folds(3, 5, 0).is_err());
        assert!(assign_folds(10, 1, 0).is_err());
    }

    #[test]
    fn best_prefers_smallest_on_ties() {
        let r = CvResult::from_scores(&[1.0, 0.1, 10.0], vec![vec![0.5], vec![0.5], vec![0.2]]);
        assert_eq!(r.best, 0.1);
        assert_eq!(r.best_index(), 1);
        let r = CvResult::from_scores(&[3.0], vec![vec![0.0, 1.0]]);
        assert_eq!(r.best, 3.0);
        assert_eq!(r.mean_scores, vec![0.5]);
        assert_eq!(r.rows().collect::<Vec<_>>(), vec![(3.0, 0, 0.0), (3.0, 1, 1.0)]);
    }
}
