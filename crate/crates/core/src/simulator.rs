//! Branching-process simulation of the marked Hawkes model.
//!
//! Background events arrive in beat `k` as a Poisson process of rate
//! `μ_k |Ω|` with marks drawn from `mark_dist`. An event `(t_j, v, h_j)`
//! spawns, for each target beat `k` and mark `h ∈ Ω`, children at rate
//! `α_{k,v} β e^{−β(t − t_j)} h̃ᵀh̃_j` on `(t_j, T]`. Every child records its
//! parent, which gives exact ground truth for linkage retrieval.

use crate::embedding::Embedding;
use crate::error::{check_len, Error, Result};
use crate::evaluation::PairSet;
use crate::hawkes::{Event, HawkesParams, MarkSpace};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub t: f64,
    pub beat: usize,
    pub embedding: Embedding,
    /// Index of the triggering event in the sorted output; `None` for background.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: HawkesParams,
    pub omega: MarkSpace,
    /// Background mark law over the members of `omega`.
    pub mark_dist: Vec<f64>,
    pub seed: u64,
    pub max_events: usize,
}

impl SimConfig {
    /// Uniform background marks over `omega`.
    pub fn uniform_marks(params: HawkesParams, omega: MarkSpace, seed: u64, max_events: usize) -> Self {
        let mark_dist = vec![1.0 / omega.len() as f64; omega.len()];
        Self {
            params,
            omega,
            mark_dist,
            seed,
            max_events,
        }
    }
}

/// Largest expected offspring count of a single event,
/// `max_{v, h_j ∈ Ω} Σ_k α_{k,v} Σ_{h∈Ω} h̃ᵀh̃_j`.
pub fn branching_ratio(params: &HawkesParams, omega: &MarkSpace) -> f64 {
    let d = params.d();
    let max_similarity = omega
        .members()
        .iter()
        .map(|h| omega.total_similarity(h))
        .fold(0.0, f64::max);
    let max_column = (0..d)
        .map(|v| (0..d).map(|k| params.a.get(k, v)).sum::<f64>())
        .fold(0.0, f64::max);
    max_column * max_similarity
}

struct Pending {
    t: f64,
    beat: usize,
    mark: usize,
    parent: Option<usize>,
}

fn poisson_count(mean: f64, rng: &mut impl Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Simulates one realisation on `[0, T]`, returned in time order.
pub fn simulate(config: &SimConfig) -> Result<Vec<SimEvent>> {
    let params = &config.params;
    params.validate()?;
    let omega = &config.omega;
    if omega.is_empty() {
        return Err(Error::InvalidParameter("mark space is empty".into()));
    }
    check_len("mark distribution", omega.len(), config.mark_dist.len())?;
    let total: f64 = config.mark_dist.iter().sum();
    if config.mark_dist.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("mark distribution must be a probability vector".into()));
    }
    let ratio = branching_ratio(params, omega);
    if ratio >= 1.0 {
        return Err(Error::Unstable { ratio });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d = params.d();
    let horizon = params.horizon;
    let beta = params.beta;
    let members = omega.members();
    let background_marks = WeightedIndex::new(&config.mark_dist)
        .map_err(|e| Error::InvalidParameter(format!("mark distribution: {e}")))?;
    // Offspring of a parent with mark j take mark h with probability ∝ h̃ᵀh̃_j.
    let offspring_marks: Vec<Option<WeightedIndex<f64>>> = members
        .iter()
        .map(|hj| WeightedIndex::new(members.iter().map(|h| h.similarity(hj))).ok())
        .collect();
    let similarity_totals: Vec<f64> = members.iter().map(|h| omega.total_similarity(h)).collect();

    let mut generated: Vec<Pending> = Vec::new();
    let push = |generated: &mut Vec<Pending>, p: Pending| -> Result<()> {
        if generated.len() >= config.max_events {
            return Err(Error::EventCapExceeded { cap: config.max_events });
        }
        generated.push(p);
        Ok(())
    };

    for k in 0..d {
        let count = poisson_count(params.mu[k] * omega.len() as f64 * horizon, &mut rng);
        for _ in 0..count {
            let t = rng.random::<f64>() * horizon;
            let mark = background_marks.sample(&mut rng);
            push(&mut generated, Pending { t, beat: k, mark, parent: None })?;
        }
    }

    let mut next = 0;
    while next < generated.len() {
        let (t_parent, v, mark_parent) = (generated[next].t, generated[next].beat, generated[next].mark);
        let window = 1.0 - (-beta * (horizon - t_parent)).exp();
        if let Some(child_marks) = &offspring_marks[mark_parent] {
            for k in 0..d {
                let mean = params.a.get(k, v) * window * similarity_totals[mark_parent];
                for _ in 0..poisson_count(mean, &mut rng) {
                    // Inverse CDF of the exponential kernel truncated to (t_parent, T].
                    let u: f64 = rng.random();
                    let t = t_parent - (-u * window).ln_1p() / beta;
                    let mark = child_marks.sample(&mut rng);
                    push(
                        &mut generated,
                        Pending {
                            t: t.min(horizon),
                            beat: k,
                            mark,
                            parent: Some(next),
                        },
                    )?;
                }
            }
        }
        next += 1;
    }

    let mut order: Vec<usize> = (0..generated.len()).collect();
    order.sort_by(|&a, &b| generated[a].t.total_cmp(&generated[b].t).then(a.cmp(&b)));
    let mut position = vec![0; generated.len()];
    for (pos, &g) in order.iter().enumerate() {
        position[g] = pos;
    }
    let events: Vec<SimEvent> = order
        .iter()
        .map(|&g| {
            let p = &generated[g];
            SimEvent {
                t: p.t,
                beat: p.beat,
                embedding: members[p.mark].clone(),
                parent: p.parent.map(|q| position[q]),
            }
        })
        .collect();
    for pair in events.windows(2) {
        if pair[1].t <= pair[0].t {
            return Err(Error::InvalidEvents(format!("simulated timestamps tie at {}", pair[0].t)));
        }
    }
    Ok(events)
}

/// Stable identifier used for simulated event `index`.
pub fn event_id(index: usize) -> String {
    format!("e{index:06}")
}

/// Converts simulated events into model input events.
pub fn to_events(sim: &[SimEvent]) -> Vec<Event> {
    sim.iter()
        .enumerate()
        .map(|(i, s)| Event::new(event_id(i), s.t, s.beat, s.embedding.clone()))
        .collect()
}

/// All pairs `(i, j)`, `i < j`, whose events descend from the same background event.
pub fn truth_pairs(sim: &[SimEvent]) -> PairSet<usize> {
    let mut root = vec![0; sim.len()];
    for (i, e) in sim.iter().enumerate() {
        root[i] = match e.parent {
            Some(p) => {
                assert!(p < i, "parent {p} does not precede child {i}");
                root[p]
            }
            None => i,
        };
    }
    let mut clusters: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &r) in root.iter().enumerate() {
        clusters.entry(r).or_default().push(i);
    }
    let mut pairs = PairSet::new();
    for members in clusters.values() {
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                pairs.insert(a, b);
            }
        }
    }
    pairs
}

/// `count` distinct random marks of width `m`, each with `ones` bits set.
pub fn random_marks(count: usize, m: usize, ones: usize, rng: &mut impl Rng) -> Result<Vec<Embedding>> {
    if ones > m || ones == 0 {
        return Err(Error::InvalidParameter(format!("cannot set {ones} of {m} bits")));
    }
    let mut out: Vec<Embedding> = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(Error::InvalidParameter(format!(
                "could not draw {count} distinct {m}-bit marks with {ones} ones"
            )));
        }
        let chosen = rand::seq::index::sample(rng, m, ones);
        let mut h = Embedding::zeros(m);
        for j in chosen.iter() {
            h.set(j, true);
        }
        if !out.contains(&h) {
            out.push(h);
        }
    }
    Ok(out)
}
