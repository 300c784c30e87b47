//! Marked multivariate Hawkes model over discrete beats with binary text marks.
//!
//! The conditional intensity of beat `k` for a mark `h` is
//!
//! ```text
//! λ_k(t, h) = μ_k + Σ_{j: t_j < t} α_{k,s_j} β e^{−β(t − t_j)} h̃ᵀh̃_j,   h̃ = h/√m
//! ```
//!
//! The spatial matrix `A = {α_uv}` is fitted by EM with `β` and `μ` held fixed.

mod em;
mod likelihood;
mod linkage;

pub use em::{e_step, fit_em, m_step, EmConfig, EmFit, EmWorkspace};
pub use likelihood::{compensator, intensity, log_likelihood, lower_bound};
pub use linkage::{linkage_rank, linkage_rank_filtered, threshold_adjacency, Adjacency, Edge, LinkageMatrix, RankedPair};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use std::collections::HashSet;

/// One observed incident.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub id: String,
    /// Time in days within `[0, T]`.
    pub t: f64,
    pub beat: usize,
    pub embedding: Embedding,
    pub bow: Option<Vec<f64>>,
}

impl Event {
    pub fn new(id: impl Into<String>, t: f64, beat: usize, embedding: Embedding) -> Self {
        Self {
            id: id.into(),
            t,
            beat,
            embedding,
            bow: None,
        }
    }
}

/// Checks strict time ordering, beat range and a common embedding width.
pub fn validate_events(events: &[Event], d: usize) -> Result<()> {
    let m = events.first().map_or(0, |e| e.embedding.len());
    for (i, e) in events.iter().enumerate() {
        if !e.t.is_finite() || e.t < 0.0 {
            return Err(Error::InvalidEvents(format!("event {} has invalid time {}", e.id, e.t)));
        }
        if e.beat >= d {
            return Err(Error::InvalidEvents(format!(
                "event {} has beat {} outside [0, {d})",
                e.id, e.beat
            )));
        }
        if e.embedding.len() != m {
            return Err(Error::InvalidEvents(format!(
                "event {} has a {}-bit embedding, expected {m}",
                e.id,
                e.embedding.len()
            )));
        }
        if i > 0 && e.t <= events[i - 1].t {
            return Err(Error::InvalidEvents(format!(
                "events must be strictly increasing in time ({} at {} follows {} at {})",
                e.id,
                e.t,
                events[i - 1].id,
                events[i - 1].t
            )));
        }
    }
    Ok(())
}

/// Sorts events by time and separates tied timestamps by `jitter` days.
pub fn break_ties(events: &mut [Event], jitter: f64) {
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    for i in 1..events.len() {
        if events[i].t <= events[i - 1].t {
            events[i].t = events[i - 1].t + jitter;
        }
    }
}

/// Number of beats implied by the data (`max beat + 1`).
pub fn beat_count(events: &[Event]) -> usize {
    events.iter().map(|e| e.beat + 1).max().unwrap_or(0)
}

/// The set `Ω` of distinct observed marks.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkSpace {
    members: Vec<Embedding>,
    /// `S = Σ_{h∈Ω} h/√m`.
    sum_normalized: Vec<f64>,
    bit_counts: Vec<u32>,
}

impl MarkSpace {
    /// Deduplicates marks by exact bit equality, keeping first-seen order.
    pub fn from_members(marks: impl IntoIterator<Item = Embedding>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut members = Vec::new();
        for h in marks {
            if seen.insert(h.clone()) {
                members.push(h);
            }
        }
        let m = members.first().map_or(0, Embedding::len);
        if members.iter().any(|h| h.len() != m) {
            return Err(Error::InvalidParameter("mark space members differ in width".into()));
        }
        let mut bit_counts = vec![0u32; m];
        for h in &members {
            for (l, bit) in h.iter().enumerate() {
                bit_counts[l] += u32::from(bit);
            }
        }
        let scale = if m == 0 { 0.0 } else { 1.0 / (m as f64).sqrt() };
        let sum_normalized = bit_counts.iter().map(|&c| f64::from(c) * scale).collect();
        Ok(Self {
            members,
            sum_normalized,
            bit_counts,
        })
    }

    /// `Ω` as the union of the embeddings carried by `events`.
    pub fn build(events: &[Event]) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::EmptyInput("events"));
        }
        Self::from_members(events.iter().map(|e| e.embedding.clone()))
    }

    pub fn members(&self) -> &[Embedding] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn width(&self) -> usize {
        self.bit_counts.len()
    }

    pub fn sum_normalized(&self) -> &[f64] {
        &self.sum_normalized
    }

    /// `Σ_{h∈Ω} h̃ᵀh̃_j`, computed exactly from per-bit counts.
    pub fn total_similarity(&self, h: &Embedding) -> f64 {
        if self.bit_counts.is_empty() {
            return 0.0;
        }
        let shared: u64 = h
            .iter()
            .zip(&self.bit_counts)
            .filter(|(bit, _)| *bit)
            .map(|(_, &c)| u64::from(c))
            .sum();
        shared as f64 / self.width() as f64
    }
}

/// Model parameters for a fixed decay `β` and horizon `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesParams {
    /// Background rate per beat, in events per day per mark.
    pub mu: Vec<f64>,
    /// `a.get(u, v)` is the influence of beat `v` on beat `u`.
    pub a: Matrix,
    pub beta: f64,
    pub horizon: f64,
}

impl HawkesParams {
    pub fn new(mu: Vec<f64>, a: Matrix, beta: f64, horizon: f64) -> Result<Self> {
        let params = Self { mu, a, beta, horizon };
        params.validate()?;
        Ok(params)
    }

    pub fn d(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.mu.len();
        if self.a.rows() != d || self.a.cols() != d {
            return Err(Error::DimensionMismatch {
                what: "coefficient matrix",
                expected: d * d,
                found: self.a.rows() * self.a.cols(),
            });
        }
        if self.mu.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidParameter("mu must be positive and finite".into()));
        }
        if self.a.as_slice().iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("A must be nonnegative and finite".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        Ok(())
    }

    /// Checks that `events` fit this parameterisation and lie in `[0, T]`.
    pub fn check_events(&self, events: &[Event]) -> Result<()> {
        validate_events(events, self.d())?;
        if let Some(last) = events.last() {
            if last.t > self.horizon {
                return Err(Error::InvalidEvents(format!(
                    "event {} at {} lies beyond the horizon {}",
                    last.id, last.t, self.horizon
                )));
            }
        }
        Ok(())
    }
}

/// Background rates from per-beat counts: `μ_k = max(count_k, 1) / (|Ω| T)`.
pub fn init_mu(events: &[Event], d: usize, horizon: f64, omega_size: usize) -> Result<Vec<f64>> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    if omega_size == 0 {
        return Err(Error::InvalidParameter("mark space is empty".into()));
    }
    let mut counts = vec![0usize; d];
    for e in events {
        if e.beat >= d {
            return Err(Error::InvalidEvents(format!("beat {} outside [0, {d})", e.beat)));
        }
        counts[e.beat] += 1;
    }
    let scale = omega_size as f64 * horizon;
    Ok(counts.into_iter().map(|c| c.max(1) as f64 / scale).collect())
}
