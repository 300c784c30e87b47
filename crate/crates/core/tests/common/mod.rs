#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sttpp::hawkes::{Event, HawkesParams, MarkSpace};
use sttpp::simulator::{branching_ratio, random_marks, simulate, to_events, SimConfig, SimEvent};
use sttpp::Matrix;

/// A seeded instance of the simulated benchmark.
pub struct SimCase {
    pub params: HawkesParams,
    pub omega: MarkSpace,
    pub sim: Vec<SimEvent>,
    pub events: Vec<Event>,
}

/// `d` beats, `marks` distinct 16-bit marks with 3 ones, a sparse `A` with
/// entries in [0.1, 0.5] on the diagonal and `extra` random off-diagonal cells.
pub fn sim_case(seed: u64, d: usize, marks: usize, extra: usize, mu: f64, beta: f64, horizon: f64) -> SimCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = MarkSpace::from_members(random_marks(marks, 16, 3, &mut rng).unwrap()).unwrap();
    let mut a = Matrix::zeros(d, d);
    for k in 0..d {
        a.set(k, k, rng.random_range(0.1..0.5));
    }
    let mut placed = 0;
    while placed < extra {
        let (u, v) = (rng.random_range(0..d), rng.random_range(0..d));
        if a.get(u, v) == 0.0 {
            a.set(u, v, rng.random_range(0.1..0.5));
            placed += 1;
        }
    }
    let params = HawkesParams::new(vec![mu; d], a, beta, horizon).unwrap();
    assert!(branching_ratio(&params, &omega) < 0.9);
    let config = SimConfig::uniform_marks(params.clone(), omega.clone(), seed ^ 0xA5A5, 1_000_000);
    let sim = simulate(&config).unwrap();
    let events = to_events(&sim);
    SimCase {
        params,
        omega,
        sim,
        events,
    }
}

/// Prints one acceptance line and returns whether it passed.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    println!("criterion {id:>2} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

/// A labelled synthetic corpus: 200 documents over 100 keywords, where
/// keywords `kw00..kw04` mark category 0 and `kw05..kw09` category 1; the
/// other 90 keywords are category-independent noise with Zipf-like frequencies.
pub struct LabelledCorpus {
    pub vocab: sttpp::text::Vocabulary,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

pub fn labelled_corpus(seed: u64) -> LabelledCorpus {
    use rand::distr::weighted::WeightedIndex;
    use rand::distr::Distribution;
    use sttpp::text::{build_vocabulary, tfidf_vectorize, Document};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = WeightedIndex::new((0..90).map(|r| 1.0 / (r as f64 + 1.0).powf(0.8))).unwrap();
    let mut docs = Vec::with_capacity(200);
    let mut labels = Vec::with_capacity(200);
    for i in 0..200 {
        let label = i % 2;
        let mut tokens: Vec<String> = Vec::new();
        for s in 0..5 {
            if rng.random::<f64>() < 0.6 {
                tokens.push(format!("kw{:02}", 5 * label + s));
            }
        }
        for _ in 0..12 {
            tokens.push(format!("kw{:02}", 10 + noise.sample(&mut rng)));
        }
        // Every keyword occurs at least once so the vocabulary has exactly 100 entries.
        if i < 100 {
            tokens.push(format!("kw{:02}", i));
        }
        docs.push(Document::from_tokens(format!("d{i:03}"), tokens));
        labels.push(label);
    }
    let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
    assert_eq!(vocab.len(), 100);
    let rows = docs.iter().map(|d| tfidf_vectorize(d, &vocab)).collect();
    LabelledCorpus { vocab, rows, labels }
}
