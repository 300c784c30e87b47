use crate::error::{check_len, Error, Result};
use std::collections::{BTreeMap, BTreeSet};

/// A set of unordered pairs, stored as `(min, max)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairSet<K: Ord = usize> {
    pairs: BTreeSet<(K, K)>,
}

impl<K: Ord + Clone> PairSet<K> {
    pub fn new() -> Self {
        Self { pairs: BTreeSet::new() }
    }

    /// Inserts `{a, b}`; self-pairs are ignored. Returns whether the pair was new.
    pub fn insert(&mut self, a: K, b: K) -> bool {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => self.pairs.insert((a, b)),
            std::cmp::Ordering::Greater => self.pairs.insert((b, a)),
            std::cmp::Ordering::Equal => false,
        }
    }

    pub fn contains(&self, a: &K, b: &K) -> bool {
        if a <= b {
            self.pairs.contains(&(a.clone(), b.clone()))
        } else {
            self.pairs.contains(&(b.clone(), a.clone()))
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(K, K)> {
        self.pairs.iter()
    }

    pub fn intersection_len(&self, other: &PairSet<K>) -> usize {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.pairs.iter().filter(|p| large.pairs.contains(p)).count()
    }
}

impl<K: Ord + Clone> FromIterator<(K, K)> for PairSet<K> {
    fn from_iter<I: IntoIterator<Item = (K, K)>>(iter: I) -> Self {
        let mut set = Self::new();
        for (a, b) in iter {
            set.insert(a, b);
        }
        set
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub hits: usize,
}

/// Precision `|U∩V|/|V|`, recall `|U∩V|/|U|` and their harmonic mean.
///
/// Empty `V` gives precision 0, empty `U` gives recall 0, and F1 is 0 when
/// `P + R = 0`.
pub fn precision_recall_f1<K: Ord + Clone>(retrieved: &PairSet<K>, truth: &PairSet<K>) -> RetrievalScores {
    let hits = retrieved.intersection_len(truth);
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(hits, retrieved.len());
    let recall = ratio(hits, truth.len());
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    RetrievalScores {
        precision,
        recall,
        f1,
        hits,
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Mean silhouette coefficient under Euclidean distance.
///
/// Points in singleton clusters score 0, as does any point with `a = b = 0`.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    check_len("labels", points.len(), labels.len())?;
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        clusters.entry(l).or_default().push(i);
    }
    if clusters.len() < 2 {
        return Err(Error::TooFewClusters { found: clusters.len() });
    }
    let mut total = 0.0;
    for (i, point) in points.iter().enumerate() {
        let own = &clusters[&labels[i]];
        if own.len() == 1 {
            continue;
        }
        let a = own
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| euclidean(point, &points[j]))
            .sum::<f64>()
            / (own.len() - 1) as f64;
        let b = clusters
            .iter()
            .filter(|(&l, _)| l != labels[i])
            .map(|(_, members)| members.iter().map(|&j| euclidean(point, &points[j])).sum::<f64>() / members.len() as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / points.len() as f64)
}
