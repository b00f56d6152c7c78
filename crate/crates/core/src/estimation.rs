//! Estimators over one or many candidate histories: maximum-likelihood
//! selection, ensemble-restricted EM, likelihood-weighted averaging and Wald
//! intervals.
//!
//! The `1 / (n! (n-1)!)` prior on histories cancels in every ratio below and
//! is never materialised.

use serde::{Deserialize, Serialize};

use crate::engine::{log_likelihood_at, mle, PointEstimate, SufficientStats};
use crate::error::{DmcError, Result};
use crate::reconstruction::DeconstructionResult;

pub const Z_95: f64 = 1.96;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Raw bounds; use [`Interval::clamped`] only for display.
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn clamped(&self) -> Interval {
        Interval {
            lo: self.lo.clamp(0.0, 1.0),
            hi: self.hi.clamp(0.0, 1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub q_m_hat: Option<f64>,
    pub q_c_hat: f64,
    pub log_likelihood: f64,
    pub ci_m: Option<Interval>,
    pub ci_c: Option<Interval>,
    pub method_tag: String,
}

impl Estimate {
    pub fn point(&self) -> PointEstimate {
        PointEstimate {
            q_m: self.q_m_hat,
            q_c: self.q_c_hat,
        }
    }
}

/// Candidate histories for one graph.
#[derive(Clone, Debug)]
pub struct ThetaEnsemble {
    results: Vec<DeconstructionResult>,
    source: String,
}

impl ThetaEnsemble {
    pub fn new(results: Vec<DeconstructionResult>, source: impl Into<String>) -> Result<Self> {
        let first = results.first().ok_or(DmcError::EmptyEnsemble)?;
        let n = first.stats.n;
        if let Some(r) = results.iter().find(|r| r.stats.n != n) {
            return Err(DmcError::MixedEnsemble(n, r.stats.n));
        }
        Ok(ThetaEnsemble {
            results,
            source: source.into(),
        })
    }

    /// Drops repeated histories, keeping first occurrences in order.
    pub fn distinct(mut self) -> Self {
        let mut seen = std::collections::HashSet::new();
        self.results.retain(|r| seen.insert(r.theta.clone()));
        self
    }

    pub fn results(&self) -> &[DeconstructionResult] {
        &self.results
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    fn steps(&self) -> f64 {
        self.results[0].stats.n.saturating_sub(1) as f64
    }

    /// Index of the first member with the highest log-likelihood at its own
    /// maximiser.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, r) in self.results.iter().enumerate().skip(1) {
            if r.log_likelihood_at_mle > self.results[best].log_likelihood_at_mle {
                best = i;
            }
        }
        best
    }
}

/// Closed-form estimate of the highest-likelihood history.
pub fn max_likelihood_select(ens: &ThetaEnsemble) -> Estimate {
    let best = &ens.results[ens.argmax()];
    let est = mle(&best.stats);
    Estimate {
        q_m_hat: est.q_m,
        q_c_hat: est.q_c,
        log_likelihood: best.log_likelihood_at_mle,
        ci_m: None,
        ci_c: None,
        method_tag: format!("{} max", ens.source),
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Normalised posterior weights over the ensemble at `at`, and the log of the
/// unnormalised total.
fn responsibilities(ens: &ThetaEnsemble, at: PointEstimate) -> (Vec<f64>, f64) {
    let logs: Vec<f64> = ens
        .results
        .iter()
        .map(|r| log_likelihood_at(&r.stats, at.q_m, at.q_c))
        .collect();
    let total = log_sum_exp(&logs);
    let weights = logs.iter().map(|l| (l - total).exp()).collect();
    (weights, total)
}

/// The ensemble-restricted observed-data objective `ln sum_z f(G, z; q)`.
pub fn ensemble_objective(ens: &ThetaEnsemble, at: PointEstimate) -> f64 {
    responsibilities(ens, at).1
}

/// Weighted sufficient statistics `(sum r W, sum r X, sum r Y)`.
fn weighted_stats(ens: &ThetaEnsemble, weights: &[f64]) -> (f64, f64, f64) {
    ens.results
        .iter()
        .zip(weights)
        .fold((0.0, 0.0, 0.0), |(w, x, y), (r, f)| {
            (
                w + f * r.stats.w as f64,
                x + f * r.stats.x as f64,
                y + f * r.stats.y as f64,
            )
        })
}

fn ratio_estimate(ens: &ThetaEnsemble, weights: &[f64]) -> PointEstimate {
    let (sw, sx, sy) = weighted_stats(ens, weights);
    let steps = ens.steps();
    let q_c = if steps > 0.0 {
        (sw / steps).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q_m = (sy > 0.0).then(|| (1.0 - sx / sy).clamp(0.0, 1.0));
    PointEstimate { q_m, q_c }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct EmOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmOutcome {
    pub estimate: Estimate,
    pub iterations: usize,
    /// Objective before each M-step, then at the final point.
    pub objective_trace: Vec<f64>,
    /// Steps where the objective dropped by more than rounding noise.
    pub monotonicity_violations: usize,
}

/// EM over the ensemble from a user-chosen interior starting point.
pub fn em_estimate(ens: &ThetaEnsemble, init: PointEstimate, opts: EmOptions) -> Result<EmOutcome> {
    let interior = |v: f64| v > 0.0 && v < 1.0;
    if !interior(init.q_c) || !init.q_m.is_none_or(interior) {
        return Err(DmcError::InvalidConfig(
            "EM starting point must lie strictly inside (0, 1)".into(),
        ));
    }
    run_em(ens, init, opts)
}

/// EM started from the ensemble's maximum-likelihood estimate, which may sit
/// on the boundary; the best member always has positive weight there.
pub fn em_from_max_likelihood(ens: &ThetaEnsemble, opts: EmOptions) -> Result<EmOutcome> {
    let init = max_likelihood_select(ens).point();
    run_em(ens, init, opts)
}

fn run_em(ens: &ThetaEnsemble, init: PointEstimate, opts: EmOptions) -> Result<EmOutcome> {
    let mut q = init;
    let mut trace = Vec::new();
    let mut violations = 0;
    let mut iterations = 0;
    let mut prev: Option<(f64, bool)> = None;
    while iterations < opts.max_iter {
        let (weights, objective) = responsibilities(ens, q);
        if objective == f64::NEG_INFINITY {
            return Err(DmcError::DegenerateWeights);
        }
        // Objectives are only comparable while q_m stays defined (or absent).
        if let Some((p, had_qm)) = prev {
            if had_qm == q.q_m.is_some() && objective < p - 1e-12 * p.abs().max(1.0) {
                violations += 1;
            }
        }
        prev = Some((objective, q.q_m.is_some()));
        trace.push(objective);
        let next = ratio_estimate(ens, &weights);
        iterations += 1;
        let delta = match (next.q_m, q.q_m) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        }
        .max((next.q_c - q.q_c).abs());
        q = next;
        if delta < opts.tol {
            break;
        }
    }
    let final_objective = ensemble_objective(ens, q);
    if let Some((p, had_qm)) = prev {
        if had_qm == q.q_m.is_some() && final_objective < p - 1e-12 * p.abs().max(1.0) {
            violations += 1;
        }
    }
    trace.push(final_objective);
    Ok(EmOutcome {
        estimate: Estimate {
            q_m_hat: q.q_m,
            q_c_hat: q.q_c,
            log_likelihood: final_objective,
            ci_m: None,
            ci_c: None,
            method_tag: format!("{} em", ens.source),
        },
        iterations,
        objective_trace: trace,
        monotonicity_violations: violations,
    })
}

/// Likelihood-weighted average of the per-history statistics at `at`
/// (normally the maximum-likelihood estimate).
pub fn averaged_estimate(ens: &ThetaEnsemble, at: PointEstimate) -> Result<Estimate> {
    let (weights, objective) = responsibilities(ens, at);
    if objective == f64::NEG_INFINITY {
        return Err(DmcError::DegenerateWeights);
    }
    let est = ratio_estimate(ens, &weights);
    Ok(Estimate {
        q_m_hat: est.q_m,
        q_c_hat: est.q_c,
        log_likelihood: objective,
        ci_m: None,
        ci_c: None,
        method_tag: format!("{} averaged", ens.source),
    })
}

/// Attaches 95% Wald intervals computed from the statistics of the history
/// that produced `est`. Bounds are left unclamped.
pub fn wald_ci(mut est: Estimate, stats: &SufficientStats) -> Estimate {
    est.ci_m = match est.q_m_hat {
        Some(q) if stats.y > 0 => Some(wald(q, stats.y as f64)),
        _ => None,
    };
    let steps = stats.n.saturating_sub(1) as f64;
    est.ci_c = (steps > 0.0).then(|| wald(est.q_c_hat, steps));
    est
}

fn wald(q: f64, trials: f64) -> Interval {
    let half = Z_95 * (q * (1.0 - q) / trials).sqrt();
    Interval {
        lo: q - half,
        hi: q + half,
    }
}

/// Every estimator applied to one ensemble: the maximum-likelihood estimate
/// with Wald intervals, EM started from it, and the averaged estimate.
#[derive(Clone, Debug)]
pub struct EnsembleEstimates {
    pub best: DeconstructionResult,
    pub max: Estimate,
    pub em: EmOutcome,
    pub averaged: Estimate,
    pub ensemble_size: usize,
}

pub fn estimate_all(ens: &ThetaEnsemble, opts: EmOptions) -> Result<EnsembleEstimates> {
    let best = ens.results[ens.argmax()].clone();
    let max = wald_ci(max_likelihood_select(ens), &best.stats);
    let em = em_from_max_likelihood(ens, opts)?;
    let averaged = averaged_estimate(ens, max.point())?;
    Ok(EnsembleEstimates {
        best,
        max,
        em,
        averaged,
        ensemble_size: ens.len(),
    })
}
