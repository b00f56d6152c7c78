use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DeconstructionResult;
use crate::engine::{deconstruct, SufficientStats, Theta};
use crate::error::Result;
use crate::graph::{Graph, NodeId};

/// Deconstruction along a recorded generation history.
pub fn true_theta(g: &Graph, recorded: &Theta) -> Result<DeconstructionResult> {
    let stats = deconstruct(g, recorded)?;
    Ok(DeconstructionResult::new(recorded.clone(), stats))
}

/// Removes nodes in the true reverse arrival order but draws each anchor
/// uniformly from the other remaining nodes.
pub fn true_new_random_anchor(
    g: &Graph,
    recorded: &Theta,
    seed: u64,
) -> Result<DeconstructionResult> {
    recorded.validate(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = g.clone();
    let mut stats = SufficientStats::empty(g.node_count());
    // Remaining nodes are exactly the arrival-order prefix.
    let order = &recorded.arrival_order;
    let mut removals = Vec::with_capacity(order.len().saturating_sub(1));
    for i in (1..order.len()).rev() {
        let new = order[i];
        let anchor = order[rng.gen_range(0..i)];
        stats.add(work.reverse_step(new, anchor)?);
        removals.push((new, anchor));
    }
    let survivor = order.first().copied().unwrap_or(NodeId(0));
    let theta = if order.is_empty() {
        recorded.clone()
    } else {
        Theta::from_removals(survivor, &removals)
    };
    Ok(DeconstructionResult::new(theta, stats))
}

/// `count` independent deconstructions, each choosing a uniformly random
/// pair at every step.
pub fn random_sequences(g: &Graph, count: usize, seed: u64) -> Vec<DeconstructionResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_once(g, &mut rng)).collect()
}

fn random_once<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> DeconstructionResult {
    let mut work = g.clone();
    let mut live: Vec<NodeId> = g.nodes().collect();
    let mut stats = SufficientStats::empty(live.len());
    let mut removals = Vec::with_capacity(live.len().saturating_sub(1));
    while live.len() > 1 {
        let picked = sample(rng, live.len(), 2);
        let (i, j) = (picked.index(0), picked.index(1));
        let (anchor_idx, new_idx) = if live[i] < live[j] { (i, j) } else { (j, i) };
        let (new, anchor) = (live[new_idx], live[anchor_idx]);
        stats.add(work.reverse_step(new, anchor).expect("live pair"));
        removals.push((new, anchor));
        live.remove(new_idx);
    }
    let theta = match live.first() {
        Some(&s) => Theta::from_removals(s, &removals),
        None => Theta {
            arrival_order: vec![],
            anchors: vec![],
        },
    };
    DeconstructionResult::new(theta, stats)
}
