use super::{Event, HawkesParams, LinkageMatrix, MarkSpace};
use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// `β e^{−β Δt} h̃ᵀh̃'` without the spatial coefficient.
#[inline]
pub(crate) fn kernel(beta: f64, dt: f64, similarity: f64) -> f64 {
    beta * (-beta * dt).exp() * similarity
}

/// Conditional intensity `λ_k(t, h)` given every event strictly before `t`.
pub fn intensity(k: usize, t: f64, h: &Embedding, events: &[Event], params: &HawkesParams) -> f64 {
    let trigger: f64 = events
        .iter()
        .take_while(|e| e.t < t)
        .map(|e| params.a.get(k, e.beat) * kernel(params.beta, t - e.t, h.similarity(&e.embedding)))
        .sum();
    params.mu[k] + trigger
}

/// `∫₀ᵀ Σ_k Σ_{h∈Ω} λ_k(τ, h) dτ` in closed form.
pub fn compensator(events: &[Event], params: &HawkesParams, omega: &MarkSpace) -> f64 {
    let background: f64 = params.mu.iter().sum::<f64>() * omega.len() as f64 * params.horizon;
    let triggered: f64 = events
        .iter()
        .map(|e| {
            let column: f64 = (0..params.d()).map(|k| params.a.get(k, e.beat)).sum();
            column * (1.0 - (-params.beta * (params.horizon - e.t)).exp()) * omega.total_similarity(&e.embedding)
        })
        .sum();
    background + triggered
}

// Intensity of event i at its own time, from its predecessors.
fn event_intensity(events: &[Event], i: usize, params: &HawkesParams) -> f64 {
    let ei = &events[i];
    let mut total = params.mu[ei.beat];
    for ej in events[..i].iter().rev() {
        let temporal = params.beta * (-params.beta * (ei.t - ej.t)).exp();
        if temporal == 0.0 {
            break;
        }
        let alpha = params.a.get(ei.beat, ej.beat);
        if alpha != 0.0 {
            total += alpha * temporal * ei.embedding.similarity(&ej.embedding);
        }
    }
    total
}

/// Exact log-likelihood of the event sequence on `[0, T]`.
pub fn log_likelihood(events: &[Event], params: &HawkesParams, omega: &MarkSpace) -> Result<f64> {
    params.check_events(events)?;
    let mut total = 0.0;
    for i in 0..events.len() {
        let lambda = event_intensity(events, i, params);
        if !(lambda > 0.0) {
            return Err(Error::NonPositiveIntensity { index: i });
        }
        total += lambda.ln();
    }
    Ok(total - compensator(events, params, omega))
}

fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Jensen lower bound on the log-likelihood for auxiliary probabilities `p_ij`.
///
/// At the posterior returned by [`super::e_step`] the bound is tight.
pub fn lower_bound(events: &[Event], params: &HawkesParams, omega: &MarkSpace, linkage: &LinkageMatrix) -> Result<f64> {
    params.check_events(events)?;
    if linkage.len() != events.len() {
        return Err(Error::DimensionMismatch {
            what: "linkage rows",
            expected: events.len(),
            found: linkage.len(),
        });
    }
    let mut total = 0.0;
    for (i, ei) in events.iter().enumerate() {
        let p_bg = linkage.background(i);
        if p_bg > 0.0 {
            total += p_bg * params.mu[ei.beat].ln() - entropy_term(p_bg);
        }
        for (j, p) in linkage.row(i) {
            if p <= 0.0 {
                continue;
            }
            let ej = &events[j];
            let rate = params.a.get(ei.beat, ej.beat) * kernel(params.beta, ei.t - ej.t, ei.embedding.similarity(&ej.embedding));
            total += p * rate.ln() - entropy_term(p);
        }
    }
    Ok(total - compensator(events, params, omega))
}
