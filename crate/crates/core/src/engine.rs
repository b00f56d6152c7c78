//! Forward DMC generation, reverse deconstruction, and the complete-data
//! likelihood with its closed-form maximiser.
//!
//! Random draws during generation come from one ChaCha8 stream per graph, in
//! this order for each arriving node: the anchor index, then for every anchor
//! neighbour in ascending id order a Bernoulli(`q_m`) modification draw
//! followed (only when modified) by a fair coin, and finally the
//! Bernoulli(`q_c`) complementation draw.

use num_bigint::BigUint;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DmcError, Result};
use crate::graph::{Graph, NodeId, StepStats};

/// Model parameters: mutation probability `q_m` and complementation
/// probability `q_c`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub q_m: f64,
    pub q_c: f64,
}

impl Params {
    pub fn new(q_m: f64, q_c: f64) -> Result<Self> {
        check_probability("q_m", q_m)?;
        check_probability("q_c", q_c)?;
        Ok(Params { q_m, q_c })
    }

    pub fn is_interior(&self) -> bool {
        self.q_m > 0.0 && self.q_m < 1.0 && self.q_c > 0.0 && self.q_c < 1.0
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(DmcError::InvalidProbability { name, value })
    }
}

/// A point estimate where `q_m` may be undefined (no neighbourhood was ever
/// observed, i.e. `Y = 0`).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub q_m: Option<f64>,
    pub q_c: f64,
}

impl From<Params> for PointEstimate {
    fn from(p: Params) -> Self {
        PointEstimate {
            q_m: Some(p.q_m),
            q_c: p.q_c,
        }
    }
}

/// Arrival history: `arrival_order[0]` is the seed node and `anchors[i]` is
/// the node duplicated by `arrival_order[i + 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Theta {
    pub arrival_order: Vec<NodeId>,
    pub anchors: Vec<NodeId>,
}

impl Theta {
    /// Builds a history from reverse steps listed in the order they were
    /// applied (latest arrival first) and the final surviving node.
    pub fn from_removals(survivor: NodeId, removals: &[(NodeId, NodeId)]) -> Theta {
        let mut arrival_order = Vec::with_capacity(removals.len() + 1);
        let mut anchors = Vec::with_capacity(removals.len());
        arrival_order.push(survivor);
        for &(new, anchor) in removals.iter().rev() {
            arrival_order.push(new);
            anchors.push(anchor);
        }
        Theta {
            arrival_order,
            anchors,
        }
    }

    pub fn len(&self) -> usize {
        self.arrival_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrival_order.is_empty()
    }

    /// `(new, anchor)` pairs in reverse arrival order, i.e. the order in
    /// which a deconstruction applies them.
    pub fn reverse_steps(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (1..self.arrival_order.len())
            .rev()
            .map(move |i| (self.arrival_order[i], self.anchors[i - 1]))
    }

    /// Structural checks: permutation of the graph's nodes, and every anchor
    /// already present and distinct from the node it anchors.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let n = self.arrival_order.len();
        if n != g.node_count() {
            return Err(DmcError::InvalidTheta(format!(
                "arrival order has {n} nodes, graph has {}",
                g.node_count()
            )));
        }
        if self.anchors.len() + 1 != n.max(1) {
            return Err(DmcError::InvalidTheta(format!(
                "expected {} anchors, found {}",
                n.saturating_sub(1),
                self.anchors.len()
            )));
        }
        let mut position = vec![usize::MAX; g.id_bound()];
        for (i, v) in self.arrival_order.iter().enumerate() {
            if !g.contains(*v) {
                return Err(DmcError::InvalidTheta(format!(
                    "node {v} is not in the graph"
                )));
            }
            if position[v.index()] != usize::MAX {
                return Err(DmcError::InvalidTheta(format!("node {v} arrives twice")));
            }
            position[v.index()] = i;
        }
        for (i, a) in self.anchors.iter().enumerate() {
            let p = position.get(a.index()).copied().unwrap_or(usize::MAX);
            if p > i {
                return Err(DmcError::InvalidTheta(format!(
                    "anchor {a} of arrival {} is not yet present",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Summed `(W, X, Y)` over a full deconstruction of an `n`-node graph.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SufficientStats {
    pub w: u64,
    pub x: u64,
    pub y: u64,
    pub n: u64,
}

impl SufficientStats {
    pub fn empty(n: usize) -> Self {
        SufficientStats {
            n: n as u64,
            ..Default::default()
        }
    }

    pub fn add(&mut self, s: StepStats) {
        self.w += s.w as u64;
        self.x += s.x as u64;
        self.y += s.y as u64;
    }

    pub fn is_consistent(&self) -> bool {
        self.x <= self.y && self.w < self.n.max(1)
    }
}

/// Bernoulli outcome counts recorded while generating a graph.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct GenerationTrace {
    pub complementations: u64,
    pub modified_neighbors: u64,
    pub anchor_degree_total: u64,
}

/// Grows an `n`-node DMC graph from a single seed node.
pub fn forward_generate(n: usize, params: Params, seed: u64) -> Result<(Graph, Theta)> {
    forward_generate_traced(n, params, seed).map(|(g, t, _)| (g, t))
}

pub fn forward_generate_traced(
    n: usize,
    params: Params,
    seed: u64,
) -> Result<(Graph, Theta, GenerationTrace)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    forward_generate_with(n, params, &mut rng)
}

pub fn forward_generate_with<R: Rng + ?Sized>(
    n: usize,
    params: Params,
    rng: &mut R,
) -> Result<(Graph, Theta, GenerationTrace)> {
    if n == 0 {
        return Err(DmcError::EmptyGraph);
    }
    let params = Params::new(params.q_m, params.q_c)?;
    let mut g = Graph::with_nodes(1);
    let mut trace = GenerationTrace::default();
    let mut anchors = Vec::with_capacity(n - 1);
    for existing in 1..n {
        let anchor = NodeId(rng.gen_range(0..existing) as u32);
        let new = g.add_node();
        let nbrs = g.sorted_neighbors(anchor)?;
        trace.anchor_degree_total += nbrs.len() as u64;
        for z in &nbrs {
            g.add_edge(new, *z)?;
        }
        for z in nbrs {
            if rng.gen_bool(params.q_m) {
                trace.modified_neighbors += 1;
                if rng.gen_bool(0.5) {
                    g.remove_edge(z, anchor)?;
                } else {
                    g.remove_edge(z, new)?;
                }
            }
        }
        if rng.gen_bool(params.q_c) {
            trace.complementations += 1;
            g.add_edge(new, anchor)?;
        }
        anchors.push(anchor);
    }
    let theta = Theta {
        arrival_order: (0..n as u32).map(NodeId).collect(),
        anchors,
    };
    Ok((g, theta, trace))
}

/// Replays `theta` backwards on a copy of `g` and sums the step statistics.
pub fn deconstruct(g: &Graph, theta: &Theta) -> Result<SufficientStats> {
    theta.validate(g)?;
    let mut work = g.clone();
    let mut stats = SufficientStats::empty(g.node_count());
    for (new, anchor) in theta.reverse_steps() {
        stats.add(work.reverse_step(new, anchor)?);
    }
    debug_assert_eq!(work.node_count(), 1.min(g.node_count()));
    Ok(stats)
}

/// `k * ln(p)` with `0 * ln(0) = 0`.
#[inline]
pub fn xlogy(k: u64, p: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * p.ln()
    }
}

/// Complete-data log-likelihood `ln L(q_m, q_c, theta)`.
pub fn log_likelihood(stats: &SufficientStats, params: Params) -> f64 {
    log_likelihood_at(stats, Some(params.q_m), params.q_c)
}

/// As [`log_likelihood`], but an absent `q_m` drops the mutation factor.
pub fn log_likelihood_at(stats: &SufficientStats, q_m: Option<f64>, q_c: f64) -> f64 {
    let steps = stats.n.saturating_sub(1);
    let mut ll = xlogy(stats.w, q_c) + xlogy(steps - stats.w, 1.0 - q_c);
    if let Some(q_m) = q_m {
        ll += xlogy(stats.y - stats.x, q_m) + xlogy(stats.x, 1.0 - q_m);
    }
    ll
}

/// Per-pair log-likelihood used to score candidate pairs in greedy search.
#[inline]
pub fn step_log_likelihood(s: StepStats, q_m: Option<f64>, q_c: f64) -> f64 {
    let mut ll = xlogy(s.w as u64, q_c) + xlogy(1 - s.w as u64, 1.0 - q_c);
    if let Some(q_m) = q_m {
        ll += xlogy((s.y - s.x) as u64, q_m) + xlogy(s.x as u64, 1.0 - q_m);
    }
    ll
}

/// Closed-form maximiser of the complete-data likelihood.
pub fn mle(stats: &SufficientStats) -> PointEstimate {
    let q_m = (stats.y > 0).then(|| 1.0 - stats.x as f64 / stats.y as f64);
    let steps = stats.n.saturating_sub(1);
    let q_c = if steps == 0 {
        0.0
    } else {
        stats.w as f64 / steps as f64
    };
    PointEstimate { q_m, q_c }
}

/// Log-likelihood evaluated at the statistics' own maximiser.
pub fn max_log_likelihood(stats: &SufficientStats) -> f64 {
    let est = mle(stats);
    log_likelihood_at(stats, est.q_m, est.q_c)
}

/// Number of distinct pair sequences that fully deconstruct an `n`-node
/// graph: `prod_{i=2..n} C(i, 2)`.
pub fn theta_space_size(n: usize) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for i in 2..=n as u64 {
        acc *= i * (i - 1) / 2;
    }
    acc
}
