//! Subcommand implementations. Each reads its inputs, writes its artifacts
//! into the output directory and reports the seed it used.

use crate::config::{ASpec, PipelineConfig};
use crate::error::CliError;
use crate::formats::{
    bits_string, load_events, read_csv, read_json, read_jsonl, read_text, BowRecord, CorpusRecord,
    EmbeddingRecord, EventRecord, ModelFile, OutDir,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::path::Path;
use sttpp::evaluation::{cv_beta, cv_delta, precision_recall_f1, BetaCvSetup, CvResult, PairSet};
use sttpp::hawkes::{
    beat_count, e_step, fit_em, init_mu, linkage_rank, threshold_adjacency, EmConfig, Event, HawkesParams, MarkSpace,
};
use sttpp::rbm::{embed, reconstruct_corpus, selected_indices, train, SavedRbm};
use sttpp::simulator::{branching_ratio, event_id, random_marks, simulate, to_events, truth_pairs, SimConfig};
use sttpp::text::{build_vocabulary, tfidf_vectorize, Document, StopWords, Vocabulary};
use sttpp::Matrix;

fn num(v: f64) -> String {
    v.to_string()
}

fn load_bow(path: &Path) -> Result<(Vec<BowRecord>, Vec<Vec<f64>>), CliError> {
    let records: Vec<BowRecord> = read_jsonl(path)?;
    if records.is_empty() {
        return Err(CliError::data(format!("{}: no documents", path.display())));
    }
    let p = records[0].p;
    let mut rows = Vec::with_capacity(records.len());
    for r in &records {
        if r.p != p {
            return Err(CliError::data(format!("document {} has {} keywords, expected {p}", r.id, r.p)));
        }
        rows.push(r.dense()?);
    }
    Ok((records, rows))
}

fn load_rbm(path: &Path) -> Result<(SavedRbm, sttpp::rbm::RbmParams), CliError> {
    let saved: SavedRbm = read_json(path)?;
    let params = saved.params()?;
    Ok((saved, params))
}

fn load_vocabulary(path: &Path) -> Result<Vocabulary, CliError> {
    let raw: Vocabulary = read_json(path)?;
    Ok(Vocabulary::from_entries(raw.n_docs, raw.entries)?)
}

pub fn preprocess(cfg: &PipelineConfig, corpus: &Path, out: &mut OutDir) -> Result<(), CliError> {
    let stop = match &cfg.text.stopword_file {
        Some(path) => StopWords::parse(&read_text(path)?),
        None => StopWords::english(),
    };
    let records: Vec<CorpusRecord> = read_jsonl(corpus)?;
    if records.is_empty() {
        return Err(CliError::data(format!("{}: no documents", corpus.display())));
    }
    let docs: Vec<Document> = records.iter().map(|r| Document::new(r.id.clone(), r.text.clone(), &stop)).collect();
    let vocab = build_vocabulary(&docs, cfg.text.min_tf, cfg.text.max_df_ratio)?;
    let bow: Vec<BowRecord> = records
        .iter()
        .zip(&docs)
        .map(|(r, d)| BowRecord::from_dense(r.id.clone(), r.time, r.beat, r.category, &tfidf_vectorize(d, &vocab)))
        .collect();
    out.write_json("vocabulary.json", &vocab)?;
    out.write_jsonl("bow.jsonl", &bow)
}

pub fn train_rbm(cfg: &PipelineConfig, bow: &Path, out: &mut OutDir) -> Result<(), CliError> {
    let (_, rows) = load_bow(bow)?;
    let params = train(&rows, &cfg.rbm)?;
    out.write_json("rbm.json", &SavedRbm::new(&params, &cfg.rbm))
}

pub fn embed_corpus(rbm: &Path, bow: &Path, out: &mut OutDir) -> Result<(), CliError> {
    let (_, params) = load_rbm(rbm)?;
    let (records, rows) = load_bow(bow)?;
    if rows[0].len() != params.p() {
        return Err(CliError::data(format!(
            "documents have {} keywords but the model expects {}",
            rows[0].len(),
            params.p()
        )));
    }
    let mut embeddings = Vec::with_capacity(rows.len());
    let mut events = Vec::new();
    for (r, x) in records.iter().zip(&rows) {
        let bits = bits_string(&embed(x, &params));
        if let (Some(time), Some(beat)) = (r.time, r.beat) {
            events.push(EventRecord {
                id: r.id.clone(),
                time,
                beat,
                bits: bits.clone(),
            });
        }
        embeddings.push(EmbeddingRecord {
            event_id: r.id.clone(),
            bits,
        });
    }
    out.write_jsonl("embeddings.jsonl", &embeddings)?;
    out.write_jsonl("events.jsonl", &events)
}

pub fn reconstruct(cfg: &PipelineConfig, rbm: &Path, bow: &Path, vocab: &Path, rounds: usize, out: &mut OutDir) -> Result<(), CliError> {
    let (saved, params) = load_rbm(rbm)?;
    let (_, rows) = load_bow(bow)?;
    let vocab = load_vocabulary(vocab)?;
    if vocab.len() != params.p() {
        return Err(CliError::data(format!(
            "vocabulary has {} keywords but the model expects {}",
            vocab.len(),
            params.p()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(saved.seed);
    let recon = reconstruct_corpus(&rows, &params, rounds, &mut rng);
    let selected = selected_indices(&recon, cfg.rbm.tau);
    let n = recon.rows() as f64;
    let rows = (0..recon.cols()).map(|l| {
        let mean = (0..recon.rows()).map(|i| recon.get(i, l)).sum::<f64>() / n;
        vec![
            vocab.keyword(l).to_owned(),
            num(mean),
            u8::from(selected.binary_search(&l).is_ok()).to_string(),
        ]
    });
    out.write_csv("keywords.csv", &["keyword", "mean_reconstruction", "selected"], rows)
}

struct Prepared {
    events: Vec<Event>,
    omega: MarkSpace,
    d: usize,
    horizon: f64,
    mu: Vec<f64>,
}

fn prepare(cfg: &PipelineConfig, events: &Path) -> Result<Prepared, CliError> {
    let events = load_events(events, cfg.hawkes.tie_jitter)?;
    let last = events.last().expect("load_events rejects empty input").t;
    let horizon = cfg.hawkes.horizon.unwrap_or(last);
    if horizon < last {
        return Err(CliError::data(format!("an event at {last} lies beyond the horizon {horizon}")));
    }
    let d = cfg.hawkes.d.unwrap_or_else(|| beat_count(&events));
    let omega = MarkSpace::build(&events)?;
    let mu = init_mu(&events, d, horizon, omega.len())?;
    Ok(Prepared {
        events,
        omega,
        d,
        horizon,
        mu,
    })
}

fn em_config(cfg: &PipelineConfig) -> EmConfig {
    EmConfig {
        max_iter: cfg.hawkes.max_iter,
        tol: cfg.hawkes.tol,
        seed: cfg.hawkes.seed,
        update_mu: cfg.hawkes.mu_update,
    }
}

pub fn fit(cfg: &PipelineConfig, events: &Path, out: &mut OutDir) -> Result<(), CliError> {
    let prep = prepare(cfg, events)?;
    let fit = fit_em(&prep.events, &prep.omega, cfg.hawkes.beta, prep.horizon, &prep.mu, &em_config(cfg))?;
    let model = ModelFile {
        d: prep.d,
        m: prep.omega.width(),
        beta: cfg.hawkes.beta,
        horizon: prep.horizon,
        mu: fit.params.mu.clone(),
        a: fit.params.a.as_slice().to_vec(),
        omega: prep.omega.members().iter().map(bits_string).collect(),
        ll_trace: fit.ll_trace.clone(),
        iterations: fit.iterations,
        converged: fit.converged,
    };
    out.write_json("model.json", &model)?;
    let ids: Vec<&str> = prep.events.iter().map(|e| e.id.as_str()).collect();
    let ids = &ids;
    let linkage = &fit.linkage;
    let rows = (0..linkage.len()).flat_map(|i| {
        let background = vec![ids[i].to_owned(), ids[i].to_owned(), num(linkage.background(i))];
        std::iter::once(background).chain(linkage.row(i).map(move |(j, p)| vec![ids[i].to_owned(), ids[j].to_owned(), num(p)]))
    });
    out.write_csv("linkage.csv", &["i_id", "j_id", "p"], rows)?;
    let trace = fit.ll_trace.iter().enumerate().map(|(k, ll)| vec![k.to_string(), num(*ll)]);
    out.write_csv("ll_trace.csv", &["iteration", "log_likelihood"], trace)
}

pub fn retrieve(cfg: &PipelineConfig, model: &Path, events: &Path, top: usize, out: &mut OutDir) -> Result<(), CliError> {
    let model: ModelFile = read_json(model)?;
    let params = model.params()?;
    let events = load_events(events, cfg.hawkes.tie_jitter)?;
    let linkage = e_step(&events, &params)?;
    let rows = linkage_rank(&linkage, top)
        .into_iter()
        .map(|r| vec![events[r.i].id.clone(), events[r.j].id.clone(), num(r.p)]);
    out.write_csv("retrieved.csv", &["i_id", "j_id", "p"], rows)
}

fn draw_a(spec: &ASpec, d: usize, omega: &MarkSpace, mu: &[f64], beta: f64, horizon: f64, rng: &mut ChaCha8Rng) -> Result<HawkesParams, CliError> {
    let (low, high, density) = match spec {
        ASpec::Explicit(rows) => {
            let a = Matrix::from_rows(rows).ok_or_else(|| CliError::config("[sim] a rows differ in length"))?;
            return Ok(HawkesParams::new(mu.to_vec(), a, beta, horizon)?);
        }
        ASpec::Random { low, high, density } => (*low, *high, *density),
    };
    // Redraw until the process is comfortably subcritical.
    for _ in 0..1000 {
        let a = Matrix::from_fn(d, d, |u, v| {
            if u == v || rng.random::<f64>() < density {
                rng.random_range(low..=high)
            } else {
                0.0
            }
        });
        let params = HawkesParams::new(mu.to_vec(), a, beta, horizon)?;
        if branching_ratio(&params, omega) < 0.9 {
            return Ok(params);
        }
    }
    Err(CliError::config("[sim] could not draw a random A with branching ratio below 0.9; lower a_high or a_density"))
}

pub fn simulate_cmd(cfg: &PipelineConfig, out: &mut OutDir) -> Result<(), CliError> {
    let s = &cfg.sim;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let omega = MarkSpace::from_members(random_marks(s.marks, s.m, s.ones, &mut rng)?)?;
    let params = draw_a(&s.a, s.d, &omega, &vec![s.mu; s.d], s.beta, s.horizon, &mut rng)?;
    let ratio = branching_ratio(&params, &omega);
    let sim = simulate(&SimConfig::uniform_marks(params.clone(), omega.clone(), rng.random(), s.max_events))?;
    let events = to_events(&sim);
    let records: Vec<EventRecord> = events.iter().map(EventRecord::from_event).collect();
    out.write_jsonl("events.jsonl", &records)?;
    let truth = truth_pairs(&sim);
    let rows = truth.iter().map(|&(a, b)| vec![event_id(b), event_id(a)]);
    out.write_csv("truth.csv", &["i_id", "j_id"], rows)?;
    let parents = sim.iter().enumerate().map(|(i, e)| vec![event_id(i), e.parent.map(event_id).unwrap_or_default()]);
    out.write_csv("parents.csv", &["id", "parent_id"], parents)?;
    out.write_json(
        "simulation.json",
        &serde_json::json!({
            "d": s.d,
            "m": s.m,
            "beta": s.beta,
            "horizon": s.horizon,
            "mu": params.mu,
            "a": params.a.as_slice(),
            "omega": omega.members().iter().map(bits_string).collect::<Vec<_>>(),
            "branching_ratio": ratio,
            "n_events": sim.len(),
            "n_truth_pairs": truth.len(),
        }),
    )
}

fn read_pairs(path: &Path) -> Result<PairSet<String>, CliError> {
    let rows = read_csv(path, &["i_id", "j_id"])?;
    let mut pairs = PairSet::new();
    for row in rows {
        if row[0] == row[1] {
            continue;
        }
        pairs.insert(row[0].clone(), row[1].clone());
    }
    Ok(pairs)
}

pub fn evaluate(retrieved: &Path, truth: &Path, out: &mut OutDir) -> Result<(), CliError> {
    let v = read_pairs(retrieved)?;
    let u = read_pairs(truth)?;
    let scores = precision_recall_f1(&v, &u);
    out.write_json(
        "metrics.json",
        &serde_json::json!({
            "precision": scores.precision,
            "recall": scores.recall,
            "f1": scores.f1,
            "hits": scores.hits,
            "retrieved": v.len(),
            "truth": u.len(),
        }),
    )
}

fn write_cv(out: &mut OutDir, stem: &str, result: &CvResult) -> Result<(), CliError> {
    let rows = result.rows().map(|(g, f, s)| vec![num(g), f.to_string(), num(s)]);
    out.write_csv(&format!("{stem}.csv"), &["param", "fold", "score"], rows)?;
    out.write_json(
        &format!("{stem}.json"),
        &serde_json::json!({
            "best": result.best,
            "grid": result.grid,
            "mean_scores": result.mean_scores,
        }),
    )
}

pub fn cv_delta_cmd(cfg: &PipelineConfig, bow: &Path, out: &mut OutDir) -> Result<(), CliError> {
    let (records, rows) = load_bow(bow)?;
    let labels: Vec<usize> = records
        .iter()
        .map(|r| r.category.ok_or_else(|| CliError::data(format!("document {} has no category", r.id))))
        .collect::<Result<_, _>>()?;
    let result = cv_delta(&rows, &labels, &cfg.eval.delta_grid, cfg.eval.folds, cfg.eval.seed, &cfg.rbm)?;
    write_cv(out, "cv_delta", &result)
}

pub fn cv_beta_cmd(cfg: &PipelineConfig, events: &Path, truth: &Path, out: &mut OutDir) -> Result<(), CliError> {
    let prep = prepare(cfg, events)?;
    let index: HashMap<&str, usize> = prep.events.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    let mut pairs = PairSet::new();
    for (a, b) in read_pairs(truth)?.iter() {
        let lookup = |id: &str| index.get(id).copied().ok_or_else(|| CliError::data(format!("truth refers to unknown event {id}")));
        pairs.insert(lookup(a)?, lookup(b)?);
    }
    let setup = BetaCvSetup {
        omega: &prep.omega,
        horizon: prep.horizon,
        mu: &prep.mu,
        em: em_config(cfg),
    };
    let result = cv_beta(&prep.events, &pairs, &cfg.eval.beta_grid, cfg.eval.n_top, cfg.eval.folds, cfg.eval.seed, &setup)?;
    write_cv(out, "cv_beta", &result)
}

pub fn graph(model: &Path, threshold: f64, out: &mut OutDir) -> Result<(), CliError> {
    let model: ModelFile = read_json(model)?;
    let params = model.params()?;
    let adjacency = threshold_adjacency(&params.a, threshold);
    let rows = adjacency
        .edges
        .iter()
        .map(|e| vec![e.target.to_string(), e.source.to_string(), num(e.weight)]);
    out.write_csv("edges.csv", &["target_beat", "source_beat", "weight"], rows)
}
