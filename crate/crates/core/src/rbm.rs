//! Gaussian-Bernoulli RBM with a probabilistic keyword-selection penalty.
//!
//! Visible units are real TF-IDF values, hidden units are binary. The energy is
//!
//! ```text
//! E(x, h) = Σ_l (x_l − b_l)² / 2σ² − Σ_j c_j h_j − Σ_{l,j} (x_l / σ) h_j w_lj
//! ```
//!
//! Training adds `δ Σ_l P(X_l ≥ τ)` to the negative log-likelihood, which
//! pushes the model towards activating only a few keywords above `τ`.

use crate::embedding::Embedding;
use crate::error::{check_len, Error, Result};
use crate::matrix::Matrix;
use crate::normal;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

/// Closed form used for the penalty gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientForm {
    /// `∂P/∂w_lk = H_k φ(z_l)` and `∂P/∂b_l = φ(z_l)/σ` with `z_l = (τ − b_l − σΣ_j w_lj H_j)/σ`.
    #[default]
    Exact,
    /// Hazard-based form: `H_k φ(τ'_l)/(1 − Φ(τ'_l))` for `w` and
    /// `φ(τ'_l)/(2σ²(1 − Φ(τ'_l)))` for `b`, with `τ'_l = τ − b_l − σΣ_j w_lj H_j`.
    /// Kept for comparison; it does not match the derivative of the penalty.
    PaperLiteral,
}

/// Network parameters `θ = {w, b, c}` plus the fixed noise scale `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    /// Visible-hidden weights, `p × m`.
    pub w: Matrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub sigma: f64,
}

impl RbmParams {
    pub fn new(w: Matrix, b: Vec<f64>, c: Vec<f64>, sigma: f64) -> Result<Self> {
        check_len("visible bias", w.rows(), b.len())?;
        check_len("hidden bias", w.cols(), c.len())?;
        let params = Self { w, b, c, sigma };
        params.validate()?;
        Ok(params)
    }

    /// `w ~ N(0, 0.01²)`, `b` = per-keyword corpus mean, `c = 0`.
    pub fn init(corpus_mean: &[f64], m: usize, sigma: f64, rng: &mut impl Rng) -> Result<Self> {
        let normal = Normal::new(0.0, 0.01).expect("valid normal");
        let w = Matrix::from_fn(corpus_mean.len(), m, |_, _| normal.sample(rng));
        Self::new(w, corpus_mean.to_vec(), vec![0.0; m], sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        let finite = self.w.as_slice().iter().chain(&self.b).chain(&self.c).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("RBM parameters must be finite".into()));
        }
        Ok(())
    }

    /// Number of visible units (keywords).
    pub fn p(&self) -> usize {
        self.w.rows()
    }

    /// Number of hidden units (embedding bits).
    pub fn m(&self) -> usize {
        self.w.cols()
    }
}

/// Training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbmHyper {
    pub m: usize,
    pub delta: f64,
    pub tau: f64,
    pub cd_k: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub sigma: f64,
    #[serde(default)]
    pub gradient_form: GradientForm,
}

impl Default for RbmHyper {
    fn default() -> Self {
        Self {
            m: 64,
            delta: 1e-2,
            tau: 1e-2,
            cd_k: 1,
            learning_rate: 0.01,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            sigma: 1.0,
            gradient_form: GradientForm::Exact,
        }
    }
}

impl RbmHyper {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be >= 0, got {}", self.delta));
        }
        if !self.tau.is_finite() {
            return bad("tau must be finite".into());
        }
        if self.cd_k == 0 {
            return bad("cd_k must be at least 1".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be >= 0, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        Ok(())
    }
}

/// On-disk form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedRbm {
    pub p: usize,
    pub m: usize,
    pub sigma: f64,
    /// Row-major `p × m`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub hyper: RbmHyper,
    pub seed: u64,
}

impl SavedRbm {
    pub fn new(params: &RbmParams, hyper: &RbmHyper) -> Self {
        Self {
            p: params.p(),
            m: params.m(),
            sigma: params.sigma,
            w: params.w.as_slice().to_vec(),
            b: params.b.clone(),
            c: params.c.clone(),
            hyper: hyper.clone(),
            seed: hyper.seed,
        }
    }

    pub fn params(&self) -> Result<RbmParams> {
        let w = Matrix::from_row_major(self.p, self.m, self.w.clone()).ok_or(Error::DimensionMismatch {
            what: "weight matrix",
            expected: self.p * self.m,
            found: self.w.len(),
        })?;
        RbmParams::new(w, self.b.clone(), self.c.clone(), self.sigma)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Energy `E_θ(x, h)`.
pub fn energy(x: &[f64], h: &Embedding, params: &RbmParams) -> Result<f64> {
    check_len("visible vector", params.p(), x.len())?;
    check_len("hidden vector", params.m(), h.len())?;
    let s = params.sigma;
    let quad: f64 = x.iter().zip(&params.b).map(|(xl, bl)| (xl - bl).powi(2)).sum::<f64>() / (2.0 * s * s);
    let mut hidden = 0.0;
    let mut inter = 0.0;
    for j in (0..params.m()).filter(|&j| h.get(j)) {
        hidden += params.c[j];
        for (l, &xl) in x.iter().enumerate() {
            inter += xl / s * params.w.get(l, j);
        }
    }
    Ok(quad - hidden - inter)
}

/// `p(H_j = 1 | x) = sigm(c_j + Σ_l (x_l/σ) w_lj)` for every hidden unit.
pub fn cond_hidden(x: &[f64], params: &RbmParams) -> Vec<f64> {
    assert_eq!(x.len(), params.p(), "visible vector length");
    let mut act = params.c.clone();
    for (l, &xl) in x.iter().enumerate() {
        if xl == 0.0 {
            continue;
        }
        let scaled = xl / params.sigma;
        for (a, &wlj) in act.iter_mut().zip(params.w.row(l)) {
            *a += scaled * wlj;
        }
    }
    act.into_iter().map(sigmoid).collect()
}

/// Mean of `p(X | h)`: `b_l + σ Σ_j w_lj h_j`.
pub fn cond_visible_mean(h: &Embedding, params: &RbmParams) -> Vec<f64> {
    assert_eq!(h.len(), params.m(), "hidden vector length");
    let active: Vec<usize> = (0..params.m()).filter(|&j| h.get(j)).collect();
    params
        .b
        .iter()
        .enumerate()
        .map(|(l, &bl)| {
            let row = params.w.row(l);
            bl + params.sigma * active.iter().map(|&j| row[j]).sum::<f64>()
        })
        .collect()
}

fn sample_hidden(probs: &[f64], rng: &mut impl Rng) -> Embedding {
    Embedding::from_bools(probs.iter().map(|&p| rng.random::<f64>() < p))
}

fn sample_visible(h: &Embedding, params: &RbmParams, rng: &mut impl Rng) -> Vec<f64> {
    cond_visible_mean(h, params)
        .into_iter()
        .map(|mean| {
            let z: f64 = StandardNormal.sample(rng);
            mean + params.sigma * z
        })
        .collect()
}

/// One block-Gibbs sweep: `h ~ p(H | x)`, then `x' ~ p(X | h)`.
pub fn gibbs_step(x: &[f64], params: &RbmParams, rng: &mut impl Rng) -> (Embedding, Vec<f64>) {
    let h = sample_hidden(&cond_hidden(x, params), rng);
    let x_next = sample_visible(&h, params, rng);
    (h, x_next)
}

/// Hazard `φ(t)/(1 − Φ(t))` of the standard normal.
pub fn hazard(t: f64) -> f64 {
    normal::hazard(t)
}

// Standardised threshold z_l = (τ − b_l − σ Σ_j w_lj h_j) / σ.
fn standardized_thresholds(params: &RbmParams, tau: f64, h: &Embedding) -> Vec<f64> {
    cond_visible_mean(h, params)
        .into_iter()
        .map(|mean| (tau - mean) / params.sigma)
        .collect()
}

/// Monte-Carlo estimate of `Σ_l P(X_l ≥ τ | θ)` averaged over hidden samples.
pub fn penalty_value(params: &RbmParams, tau: f64, h_samples: &[Embedding]) -> Result<f64> {
    if h_samples.is_empty() {
        return Err(Error::EmptyInput("hidden samples"));
    }
    let mut total = 0.0;
    for h in h_samples {
        check_len("hidden sample", params.m(), h.len())?;
        total += standardized_thresholds(params, tau, h)
            .into_iter()
            .map(normal::survival)
            .sum::<f64>();
    }
    Ok(total / h_samples.len() as f64)
}

/// Gradient of `δ · penalty` with respect to `w` and `b`.
///
/// The hidden bias does not enter the penalty, so it has no component here.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyGradient {
    pub w: Matrix,
    pub b: Vec<f64>,
}

/// Penalty gradient for a fixed set of hidden samples.
pub fn penalty_gradient_for_samples(
    params: &RbmParams,
    tau: f64,
    delta: f64,
    h_samples: &[Embedding],
    form: GradientForm,
) -> Result<PenaltyGradient> {
    if h_samples.is_empty() {
        return Err(Error::EmptyInput("hidden samples"));
    }
    let (p, m) = (params.p(), params.m());
    let mut grad = PenaltyGradient {
        w: Matrix::zeros(p, m),
        b: vec![0.0; p],
    };
    if delta == 0.0 {
        return Ok(grad);
    }
    let s = params.sigma;
    let scale = delta / h_samples.len() as f64;
    for h in h_samples {
        check_len("hidden sample", m, h.len())?;
        let active: Vec<usize> = (0..m).filter(|&j| h.get(j)).collect();
        for (l, mean) in cond_visible_mean(h, params).into_iter().enumerate() {
            let (dw, db) = match form {
                GradientForm::Exact => {
                    let dens = normal::pdf((tau - mean) / s);
                    (dens, dens / s)
                }
                GradientForm::PaperLiteral => {
                    let hz = normal::hazard(tau - mean);
                    (hz, hz / (2.0 * s * s))
                }
            };
            grad.b[l] += scale * db;
            for &k in &active {
                grad.w.add_at(l, k, scale * dw);
            }
        }
    }
    Ok(grad)
}

/// Penalty gradient with hidden samples drawn from `p(H | x)` for each row of the batch.
pub fn penalty_gradient(
    x_batch: &[Vec<f64>],
    params: &RbmParams,
    tau: f64,
    delta: f64,
    rng: &mut impl Rng,
) -> Result<PenaltyGradient> {
    if x_batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let samples: Vec<Embedding> = x_batch
        .iter()
        .map(|x| sample_hidden(&cond_hidden(x, params), rng))
        .collect();
    penalty_gradient_for_samples(params, tau, delta, &samples, GradientForm::Exact)
}

/// One CD-k stochastic-gradient step on a mini-batch.
///
/// `Δw_lj = ⟨x_l h_j⟩_data − ⟨x_l h_j⟩_k − ∂(δ·penalty)/∂w_lj`,
/// `Δb_l = ⟨x_l⟩_data − ⟨x_l⟩_k − ∂(δ·penalty)/∂b_l`,
/// `Δc_j = ⟨p(h_j|x)⟩_data − ⟨p(h_j|x)⟩_k`. The negative phase uses the
/// chain state after `k` sweeps started at each data row; visible samples are
/// not clamped.
pub fn cd_k_update(x_batch: &[Vec<f64>], params: &RbmParams, hyper: &RbmHyper, rng: &mut impl Rng) -> Result<RbmParams> {
    if x_batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let (p, m) = (params.p(), params.m());
    let mut dw = Matrix::zeros(p, m);
    let mut db = vec![0.0; p];
    let mut dc = vec![0.0; m];
    let mut data_samples = Vec::with_capacity(x_batch.len());

    for x in x_batch {
        check_len("visible vector", p, x.len())?;
        let ph_data = cond_hidden(x, params);
        accumulate(&mut dw, &mut db, &mut dc, x, &ph_data, 1.0);

        let h0 = sample_hidden(&ph_data, rng);
        let mut h = h0.clone();
        let mut x_model = Vec::new();
        let mut ph_model = Vec::new();
        for step in 0..hyper.cd_k {
            x_model = sample_visible(&h, params, rng);
            ph_model = cond_hidden(&x_model, params);
            if step + 1 < hyper.cd_k {
                h = sample_hidden(&ph_model, rng);
            }
        }
        accumulate(&mut dw, &mut db, &mut dc, &x_model, &ph_model, -1.0);
        data_samples.push(h0);
    }

    let penalty = penalty_gradient_for_samples(params, hyper.tau, hyper.delta, &data_samples, hyper.gradient_form)?;
    let rate = hyper.learning_rate;
    let inv_n = 1.0 / x_batch.len() as f64;
    let mut next = params.clone();
    for ((wv, dv), pv) in next.w.as_mut_slice().iter_mut().zip(dw.as_slice()).zip(penalty.w.as_slice()) {
        *wv += rate * (dv * inv_n - pv);
    }
    for ((bv, dv), pv) in next.b.iter_mut().zip(&db).zip(&penalty.b) {
        *bv += rate * (dv * inv_n - pv);
    }
    for (cv, dv) in next.c.iter_mut().zip(&dc) {
        *cv += rate * dv * inv_n;
    }
    Ok(next)
}

fn accumulate(dw: &mut Matrix, db: &mut [f64], dc: &mut [f64], x: &[f64], ph: &[f64], sign: f64) {
    for (l, &xl) in x.iter().enumerate() {
        db[l] += sign * xl;
        if xl != 0.0 {
            for (d, &pj) in dw.row_mut(l).iter_mut().zip(ph) {
                *d += sign * xl * pj;
            }
        }
    }
    for (d, &pj) in dc.iter_mut().zip(ph) {
        *d += sign * pj;
    }
}

/// Per-keyword mean over the corpus.
pub fn corpus_mean(corpus: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = corpus.first().ok_or(Error::EmptyInput("corpus"))?;
    let mut mean = vec![0.0; first.len()];
    for x in corpus {
        check_len("visible vector", mean.len(), x.len())?;
        for (acc, v) in mean.iter_mut().zip(x) {
            *acc += v;
        }
    }
    let n = corpus.len() as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    Ok(mean)
}

/// Trains an RBM from scratch: seeded initialisation, then `epochs` passes of
/// shuffled mini-batch CD-k updates.
pub fn train(corpus: &[Vec<f64>], hyper: &RbmHyper) -> Result<RbmParams> {
    hyper.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut params = RbmParams::init(&corpus_mean(corpus)?, hyper.m, hyper.sigma, &mut rng)?;
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut batch = Vec::with_capacity(hyper.batch_size);
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(hyper.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| corpus[i].clone()));
            params = cd_k_update(&batch, &params, hyper, &mut rng)?;
        }
    }
    params.validate()?;
    Ok(params)
}

/// Deterministic binary embedding: bit `j` is set iff `p(H_j = 1 | x) > 0.5`.
pub fn embed(x: &[f64], params: &RbmParams) -> Embedding {
    Embedding::from_bools(cond_hidden(x, params).into_iter().map(|p| p > 0.5))
}

/// Mean squared reconstruction error `‖x − E[X | embed(x)]‖²` over a corpus.
pub fn reconstruction_error(corpus: &[Vec<f64>], params: &RbmParams) -> f64 {
    if corpus.is_empty() {
        return 0.0;
    }
    let total: f64 = corpus
        .iter()
        .map(|x| {
            let mean = cond_visible_mean(&embed(x, params), params);
            x.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        })
        .sum();
    total / corpus.len() as f64
}

/// Gibbs reconstruction of every document.
///
/// Each document runs `gibbs_rounds` hidden/visible sweeps starting from its
/// own vector; the returned row is the visible mean of the final sweep,
/// clamped at zero.
pub fn reconstruct_corpus(docs: &[Vec<f64>], params: &RbmParams, gibbs_rounds: usize, rng: &mut impl Rng) -> Matrix {
    let mut out = Matrix::zeros(docs.len(), params.p());
    let rounds = gibbs_rounds.max(1);
    for (i, x) in docs.iter().enumerate() {
        let mut current = x.clone();
        let mut h = Embedding::zeros(params.m());
        for round in 0..rounds {
            h = sample_hidden(&cond_hidden(&current, params), rng);
            if round + 1 < rounds {
                current = sample_visible(&h, params, rng);
            }
        }
        for (o, v) in out.row_mut(i).iter_mut().zip(cond_visible_mean(&h, params)) {
            *o = v.max(0.0);
        }
    }
    out
}

/// Indices of keywords whose mean reconstructed value exceeds `tau`.
pub fn selected_indices(reconstructed: &Matrix, tau: f64) -> Vec<usize> {
    let n = reconstructed.rows();
    if n == 0 {
        return Vec::new();
    }
    (0..reconstructed.cols())
        .filter(|&l| (0..n).map(|i| reconstructed.get(i, l)).sum::<f64>() / n as f64 > tau)
        .collect()
}

/// Keywords selected by the reconstructed corpus.
pub fn selected_keywords(reconstructed: &Matrix, vocab: &crate::text::Vocabulary, tau: f64) -> Vec<String> {
    selected_indices(reconstructed, tau)
        .into_iter()
        .map(|l| vocab.keyword(l).to_owned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(w: f64, b: f64, c: f64, sigma: f64) -> RbmParams {
        RbmParams::new(Matrix::from_row_major(1, 1, vec![w]).unwrap(), vec![b], vec![c], sigma).unwrap()
    }

    fn small_params(seed: u64, p: usize, m: usize) -> RbmParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Matrix::from_fn(p, m, |_, _| rng.random_range(-0.8..0.8));
        let b = (0..p).map(|_| rng.random_range(-0.5..0.5)).collect();
        let c = (0..m).map(|_| rng.random_range(-0.5..0.5)).collect();
        RbmParams::new(w, b, c, 0.7).unwrap()
    }

    #[test]
    fn energy_examples() {
        let params = single(0.3, 1.0, 0.5, 1.0);
        let on = Embedding::from_bits(&[1]).unwrap();
        assert_relative_eq!(energy(&[2.0], &on, &params).unwrap(), -0.6, epsilon = 1e-14);
        let p = small_params(1, 4, 3);
        assert_eq!(energy(&p.b.clone(), &Embedding::zeros(3), &p).unwrap(), 0.0);
        assert!(matches!(
            energy(&[1.0], &Embedding::zeros(3), &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn energy_is_invariant_under_hidden_permutation() {
        let p = small_params(2, 4, 3);
        let perm = [2, 0, 1];
        let permuted = RbmParams::new(
            Matrix::from_fn(4, 3, |l, j| p.w.get(l, perm[j])),
            p.b.clone(),
            perm.iter().map(|&j| p.c[j]).collect(),
            p.sigma,
        )
        .unwrap();
        let x = [0.3, -0.2, 1.1, 0.0];
        let h = Embedding::from_bits(&[1, 0, 1]).unwrap();
        let h_perm = Embedding::from_bools(perm.iter().map(|&j| h.get(j)));
        assert_relative_eq!(
            energy(&x, &h, &p).unwrap(),
            energy(&x, &h_perm, &permuted).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn hidden_conditional_examples() {
        let zero = RbmParams::new(Matrix::zeros(3, 2), vec![0.0; 3], vec![0.0; 2], 1.0).unwrap();
        assert_eq!(cond_hidden(&[0.0; 3], &zero), vec![0.5, 0.5]);
        let p = single(2.0, 0.0, -1.0, 1.0);
        assert_relative_eq!(cond_hidden(&[1.0], &p)[0], 0.731_058_578_630_004_9, epsilon = 1e-12);
        let q = small_params(3, 5, 4);
        for v in cond_hidden(&[3.0, -2.0, 0.5, 9.0, 1.0], &q) {
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn hidden_conditional_matches_boltzmann_ratio() {
        let p = small_params(4, 3, 3);
        let x = [0.4, -1.2, 0.9];
        let probs = cond_hidden(&x, &p);
        for (j, &prob) in probs.iter().enumerate() {
            for others in 0..4u8 {
                let mut h = Embedding::zeros(3);
                for (slot, k) in (0..3).filter(|&k| k != j).enumerate() {
                    h.set(k, others >> slot & 1 == 1);
                }
                let mut h_on = h.clone();
                h_on.set(j, true);
                let e_on = energy(&x, &h_on, &p).unwrap();
                let e_off = energy(&x, &h, &p).unwrap();
                let ratio = (-e_on).exp() / ((-e_on).exp() + (-e_off).exp());
                assert!((ratio - prob).abs() < 1e-12, "j={j} others={others}");
            }
        }
    }

    #[test]
    fn visible_mean_examples() {
        let p = RbmParams::new(Matrix::from_row_major(1, 2, vec![0.3, -0.2]).unwrap(), vec![0.1], vec![0.0; 2], 2.0).unwrap();
        assert_relative_eq!(cond_visible_mean(&Embedding::from_bits(&[1, 1]).unwrap(), &p)[0], 0.3, epsilon = 1e-14);
        assert_eq!(cond_visible_mean(&Embedding::zeros(2), &p), vec![0.1]);

        let q = small_params(5, 4, 4);
        let h1 = Embedding::from_bits(&[1, 0, 1, 0]).unwrap();
        let h2 = Embedding::from_bits(&[0, 1, 0, 0]).unwrap();
        let both = Embedding::from_bits(&[1, 1, 1, 0]).unwrap();
        let lhs: Vec<f64> = cond_visible_mean(&h1, &q)
            .iter()
            .zip(cond_visible_mean(&h2, &q))
            .zip(cond_visible_mean(&Embedding::zeros(4), &q))
            .map(|((a, b), z)| a + b - z)
            .collect();
        for (a, b) in lhs.iter().zip(cond_visible_mean(&both, &q)) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn gibbs_hidden_bits_follow_bernoulli() {
        // c = 7 gives p(h = 1) = sigm(7) ≈ 0.99909.
        let p = single(0.0, 0.0, 7.0, 1.0);
        let prob = sigmoid(7.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let ones = (0..draws).filter(|_| gibbs_step(&[0.0], &p, &mut rng).0.get(0)).count();
        let sd = (draws as f64 * prob * (1.0 - prob)).sqrt();
        assert!((ones as f64 - draws as f64 * prob).abs() <= 3.0 * sd + 1.0);
    }

    #[test]
    fn gibbs_is_seed_deterministic() {
        let p = small_params(6, 5, 4);
        let x = [0.2, 0.0, 0.4, 1.0, 0.1];
        let a = gibbs_step(&x, &p, &mut ChaCha8Rng::seed_from_u64(9));
        let b = gibbs_step(&x, &p, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn gibbs_visible_mean_matches_conditional() {
        // Large positive c pins h = (1, 1); the visible samples are then N(mean, σ²).
        let mut p = small_params(7, 3, 2);
        p.c = vec![40.0, 40.0];
        let mean = cond_visible_mean(&Embedding::from_bits(&[1, 1]).unwrap(), &p);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let draws = 10_000;
        let mut acc = [0.0; 3];
        for _ in 0..draws {
            let (h, xs) = gibbs_step(&[0.0; 3], &p, &mut rng);
            assert_eq!(h.to_bits(), vec![1, 1]);
            acc.iter_mut().zip(&xs).for_each(|(a, v)| *a += v);
        }
        for (a, m) in acc.iter().zip(&mean) {
            assert!((a / draws as f64 - m).abs() < 4.0 * p.sigma / 100.0);
        }
    }

    #[test]
    fn penalty_examples() {
        let zero = RbmParams::new(Matrix::zeros(3, 2), vec![0.0; 3], vec![0.0; 2], 1.0).unwrap();
        let samples = vec![Embedding::from_bits(&[1, 0]).unwrap(), Embedding::zeros(2)];
        assert_relative_eq!(penalty_value(&zero, 0.0, &samples).unwrap(), 1.5, epsilon = 1e-15);
        let one = single(0.0, 0.0, 0.0, 1.0);
        let v = penalty_value(&one, 1.6449, &[Embedding::zeros(1)]).unwrap();
        assert!((v - 0.05).abs() < 1e-4);
        assert_eq!(penalty_value(&one, 0.0, &[]), Err(Error::EmptyInput("hidden samples")));
    }

    #[test]
    fn penalty_is_nonincreasing_in_tau() {
        let p = small_params(8, 4, 3);
        let samples = vec![Embedding::from_bits(&[1, 0, 1]).unwrap(), Embedding::from_bits(&[0, 1, 1]).unwrap()];
        let mut prev = f64::INFINITY;
        for i in -40..40 {
            let v = penalty_value(&p, i as f64 * 0.1, &samples).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn zero_delta_gives_zero_gradient() {
        let p = small_params(9, 3, 2);
        let g = penalty_gradient(&[vec![0.1, 0.2, 0.3]], &p, 0.01, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(g.w.as_slice().iter().chain(&g.b).all(|&v| v == 0.0));
    }

    #[test]
    fn single_unit_gradient_matches_finite_difference() {
        let (tau, b, w) = (0.4, 0.1, 0.25);
        let h = [Embedding::from_bits(&[1]).unwrap()];
        let g = penalty_gradient_for_samples(&single(w, b, 0.0, 1.0), tau, 1.0, &h, GradientForm::Exact).unwrap();
        let step = 1e-6;
        let f = |wv: f64| normal::survival(tau - b - wv);
        let fd = (f(w + step) - f(w - step)) / (2.0 * step);
        assert!((g.w.get(0, 0) - fd).abs() / fd.abs() < 1e-4);
    }

    #[test]
    fn gradient_rows_only_touch_their_own_keyword() {
        // Perturbing w_jk moves only P(X_j ≥ τ); every other keyword's term is flat.
        let p = small_params(10, 3, 2);
        let h = [Embedding::from_bits(&[1, 1]).unwrap()];
        let per_keyword = |params: &RbmParams| -> Vec<f64> {
            standardized_thresholds(params, 0.05, &h[0]).into_iter().map(normal::survival).collect()
        };
        let base = per_keyword(&p);
        let mut bumped = p.clone();
        bumped.w.add_at(1, 0, 1e-3);
        let moved = per_keyword(&bumped);
        assert_eq!(base[0], moved[0]);
        assert_eq!(base[2], moved[2]);
        assert_ne!(base[1], moved[1]);
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let p = small_params(11, 3, 2);
        let hyper = RbmHyper {
            learning_rate: 0.0,
            m: 2,
            ..RbmHyper::default()
        };
        let next = cd_k_update(&[vec![0.1, 0.0, 0.4]], &p, &hyper, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(next, p);
    }

    #[test]
    fn cd_update_vanishes_on_model_samples() {
        // With w = 0 the model is x ~ N(b, σ²) independent of h; a batch drawn
        // from it is a fixed point of CD in expectation.
        let p = RbmParams::new(Matrix::zeros(2, 2), vec![0.3, -0.1], vec![0.0; 2], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let batch: Vec<Vec<f64>> = (0..10_000)
            .map(|_| p.b.iter().map(|&b| b + rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let hyper = RbmHyper {
            m: 2,
            delta: 0.0,
            cd_k: 1,
            learning_rate: 1.0,
            ..RbmHyper::default()
        };
        let next = cd_k_update(&batch, &p, &hyper, &mut rng).unwrap();
        // Each component is a mean of 10⁴ differences with unit-order variance.
        let band = 5.0 * (2.0f64 / 10_000.0).sqrt();
        for (a, b) in next.w.as_slice().iter().zip(p.w.as_slice()) {
            assert!((a - b).abs() < band);
        }
        for (a, b) in next.b.iter().zip(&p.b) {
            assert!((a - b).abs() < band);
        }
        for (a, b) in next.c.iter().zip(&p.c) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn embed_examples() {
        let p = single(2.0, 0.0, -1.0, 1.0);
        assert_eq!(embed(&[1.0], &p).to_bits(), vec![1]);
        let off = RbmParams::new(Matrix::zeros(2, 1), vec![0.0; 2], vec![-5.0], 1.0).unwrap();
        assert_eq!(embed(&[3.0, 1.0], &off).to_bits(), vec![0]);
        let q = small_params(12, 4, 6);
        let x = [0.5, 0.1, 0.0, 0.9];
        assert_eq!(embed(&x, &q), embed(&x, &q));
    }

    #[test]
    fn reconstruction_with_zero_weights_is_clamped_bias() {
        let p = RbmParams::new(Matrix::zeros(3, 2), vec![0.2, -0.4, 0.0], vec![0.0; 2], 1.0).unwrap();
        let docs = vec![vec![1.0, 0.0, 0.5], vec![0.0, 2.0, 0.0]];
        let r = reconstruct_corpus(&docs, &p, 3, &mut ChaCha8Rng::seed_from_u64(0));
        for i in 0..2 {
            assert_eq!(r.row(i), &[0.2, 0.0, 0.0]);
        }
    }

    #[test]
    fn reconstruction_is_seed_deterministic() {
        let p = small_params(13, 4, 3);
        let docs = vec![vec![0.1, 0.2, 0.0, 0.3], vec![0.0, 0.0, 1.0, 0.0]];
        let a = reconstruct_corpus(&docs, &p, 4, &mut ChaCha8Rng::seed_from_u64(5));
        let b = reconstruct_corpus(&docs, &p, 4, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn keyword_selection_thresholds() {
        let zero = Matrix::zeros(3, 4);
        assert!(selected_indices(&zero, 0.01).is_empty());
        assert_eq!(selected_indices(&zero, -1.0), vec![0, 1, 2, 3]);
        let m = Matrix::from_rows(&[vec![0.0, 0.05], vec![0.0, 0.0]]).unwrap();
        assert_eq!(selected_indices(&m, 0.01), vec![1]);
    }

    #[test]
    fn saved_model_roundtrip() {
        let p = small_params(14, 3, 2);
        let saved = SavedRbm::new(&p, &RbmHyper { m: 2, ..RbmHyper::default() });
        let json = serde_json::to_string(&saved).unwrap();
        let back: SavedRbm = serde_json::from_str(&json).unwrap();
        assert_eq!(back.params().unwrap(), p);
    }

    #[test]
    fn hyper_validation() {
        assert!(RbmHyper::default().validate().is_ok());
        assert!(RbmHyper { cd_k: 0, ..RbmHyper::default() }.validate().is_err());
        assert!(RbmHyper { delta: -1.0, ..RbmHyper::default() }.validate().is_err());
        assert!(RbmHyper { sigma: 0.0, ..RbmHyper::default() }.validate().is_err());
    }
}
