use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::{PairScanner, PairScore, ScanMode};
use super::{derive_seed, improves, DeconstructionResult};
use crate::engine::{check_probability, mle, step_log_likelihood, Params, PointEstimate};
use crate::engine::{SufficientStats, Theta};
use crate::error::{DmcError, Result};
use crate::graph::{Graph, NodeId, StepStats};

struct MinY;

impl PairScore for MinY {
    type Key = i64;
    fn key(&self, s: StepStats) -> i64 {
        -(s.y as i64)
    }
}

struct NkScore(PointEstimate);

impl PairScore for NkScore {
    type Key = f64;
    fn key(&self, s: StepStats) -> f64 {
        step_log_likelihood(s, self.0.q_m, self.0.q_c)
    }
}

fn greedy<S: PairScore>(g: &Graph, scorer: &S, seed: u64, mode: ScanMode) -> DeconstructionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = g.clone();
    let mut stats = SufficientStats::empty(g.node_count());
    let mut removals = Vec::with_capacity(g.node_count().saturating_sub(1));
    if g.node_count() > 1 {
        let mut scanner = PairScanner::new(&work, scorer, mode);
        while work.node_count() > 1 {
            let (a, b) = scanner.select(&mut rng).expect("at least one live pair");
            let (anchor, new) = if a < b { (a, b) } else { (b, a) };
            let mut dirty: Vec<NodeId> = work
                .neighbors(new)
                .expect("live node")
                .iter()
                .copied()
                .filter(|z| *z != anchor)
                .collect();
            dirty.sort_unstable();
            dirty.push(anchor);
            stats.add(work.reverse_step(new, anchor).expect("live pair"));
            removals.push((new, anchor));
            scanner.update(&work, scorer, new, &dirty);
        }
    }
    let theta = match work.nodes().next() {
        Some(s) => Theta::from_removals(s, &removals),
        None => Theta {
            arrival_order: vec![],
            anchors: vec![],
        },
    };
    DeconstructionResult::new(theta, stats)
}

/// Greedy deconstruction that always merges a pair with the smallest
/// neighbourhood union `Y(u, v)`; ties are broken uniformly at random.
pub fn minimize_y(g: &Graph, seed: u64) -> DeconstructionResult {
    minimize_y_with_mode(g, seed, ScanMode::Incremental)
}

pub fn minimize_y_with_mode(g: &Graph, seed: u64, mode: ScanMode) -> DeconstructionResult {
    greedy(g, &MinY, seed, mode)
}

/// Greedy deconstruction maximising the per-pair likelihood at fixed
/// parameters.
pub fn nk_greedy(g: &Graph, params: Params, seed: u64) -> Result<DeconstructionResult> {
    let params = Params::new(params.q_m, params.q_c)?;
    Ok(nk_greedy_at(g, params.into(), seed))
}

/// As [`nk_greedy`], accepting an undefined `q_m` (the mutation factor is
/// then left out of the pair score).
pub fn nk_greedy_at(g: &Graph, at: PointEstimate, seed: u64) -> DeconstructionResult {
    nk_greedy_with_mode(g, at, seed, ScanMode::Incremental)
}

pub fn nk_greedy_with_mode(
    g: &Graph,
    at: PointEstimate,
    seed: u64,
    mode: ScanMode,
) -> DeconstructionResult {
    greedy(g, &NkScore(at), seed, mode)
}

/// Settings for the multi-start grid refinement around the greedy search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NkConfig {
    pub initial_grid: Vec<Params>,
    /// Each refinement shrinks the grid spacing by this factor.
    pub refinement_base: u32,
    /// Grids run after the likelihood stops increasing (0 or 1 in practice).
    pub extra_rounds: u32,
    pub max_rounds: u32,
}

impl Default for NkConfig {
    fn default() -> Self {
        let base = 5;
        NkConfig {
            initial_grid: square_grid(0.5, 0.5, 1.0 / base as f64),
            refinement_base: base,
            extra_rounds: 0,
            max_rounds: 50,
        }
    }
}

impl NkConfig {
    pub fn plus_one() -> Self {
        NkConfig {
            extra_rounds: 1,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_grid.is_empty() {
            return Err(DmcError::InvalidConfig("initial grid is empty".into()));
        }
        if self.refinement_base < 2 {
            return Err(DmcError::InvalidConfig(
                "refinement base must be at least 2".into(),
            ));
        }
        if self.max_rounds == 0 {
            return Err(DmcError::InvalidConfig(
                "max_rounds must be positive".into(),
            ));
        }
        for p in &self.initial_grid {
            check_probability("q_m", p.q_m)?;
            check_probability("q_c", p.q_c)?;
            if !p.is_interior() {
                return Err(DmcError::InvalidConfig(format!(
                    "grid point ({}, {}) is on the boundary",
                    p.q_m, p.q_c
                )));
            }
        }
        Ok(())
    }
}

/// 4x4 grid with the given spacing centred on `(q_m, q_c)`. Points outside
/// the open unit interval are dropped coordinate-wise.
fn square_grid(q_m: f64, q_c: f64, spacing: f64) -> Vec<Params> {
    let axis = |c: f64| -> Vec<f64> {
        [-1.5, -0.5, 0.5, 1.5]
            .iter()
            .map(|o| c + o * spacing)
            .filter(|v| *v > 0.0 && *v < 1.0)
            .collect()
    };
    let (ms, cs) = (axis(q_m), axis(q_c));
    ms.iter()
        .flat_map(|&m| cs.iter().map(move |&c| Params { q_m: m, q_c: c }))
        .collect()
}

/// Best history found by a multi-run search plus every history it visited.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: DeconstructionResult,
    pub visited: Vec<DeconstructionResult>,
    pub rounds: u32,
}

/// Runs the greedy search from every grid point, then repeatedly recentres
/// a finer grid on the best estimate until the best log-likelihood stops
/// increasing (plus `extra_rounds` further grids).
pub fn nk_grid_search(g: &Graph, config: &NkConfig, seed: u64) -> Result<SearchOutcome> {
    config.validate()?;
    let mut grid = config.initial_grid.clone();
    let mut best: Option<(DeconstructionResult, Params)> = None;
    let mut visited = Vec::new();
    let mut round = 1u32;
    let mut extras_left: Option<u32> = None;
    loop {
        let runs: Vec<(DeconstructionResult, Params)> = grid
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let s = derive_seed(seed, &[round as u64, i as u64]);
                (nk_greedy_at(g, (*p).into(), s), *p)
            })
            .collect();
        let mut improved = false;
        for (r, p) in &runs {
            let better = match &best {
                None => true,
                Some((b, _)) => improves(r.log_likelihood_at_mle, b.log_likelihood_at_mle),
            };
            if better {
                best = Some((r.clone(), *p));
                improved = true;
            }
        }
        visited.extend(runs.into_iter().map(|(r, _)| r));

        match extras_left.as_mut() {
            Some(0) => break,
            Some(k) => *k -= 1,
            None if !improved => {
                if config.extra_rounds == 0 {
                    break;
                }
                extras_left = Some(config.extra_rounds - 1);
            }
            None => {}
        }
        if round >= config.max_rounds {
            break;
        }
        round += 1;
        let (b, start) = best.as_ref().expect("first round always sets a best");
        let est = mle(&b.stats);
        let spacing = (config.refinement_base as f64).powi(-(round as i32));
        grid = square_grid(est.q_m.unwrap_or(start.q_m), est.q_c, spacing);
    }
    let (best, _) = best.expect("non-empty grid");
    Ok(SearchOutcome {
        best,
        visited,
        rounds: round,
    })
}

/// Minimize-Y deconstruction whose estimate seeds the likelihood-greedy
/// search; estimates are fed back until the likelihood stops increasing.
/// Every round restarts from a fresh copy of `g`.
pub fn minimize_y_then_nk(g: &Graph, seed: u64, max_rounds: u32) -> SearchOutcome {
    let first = minimize_y(g, derive_seed(seed, &[0]));
    let mut best = first.clone();
    let mut visited = vec![first];
    let mut round = 0;
    while round < max_rounds {
        round += 1;
        let at = mle(&best.stats);
        let r = nk_greedy_at(g, at, derive_seed(seed, &[round as u64]));
        let better = improves(r.log_likelihood_at_mle, best.log_likelihood_at_mle);
        visited.push(r.clone());
        if !better {
            break;
        }
        best = r;
    }
    SearchOutcome {
        best,
        visited,
        rounds: round,
    }
}
