//! Arrival-order recovery scores.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::engine::Theta;
use crate::error::{DmcError, Result};
use crate::graph::NodeId;

/// Arrival rank per node, `1` for the oldest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrivalOrder {
    ranks: FxHashMap<NodeId, u32>,
}

impl ArrivalOrder {
    /// Nodes listed oldest first.
    pub fn from_sequence(nodes: &[NodeId]) -> Self {
        ArrivalOrder {
            ranks: nodes
                .iter()
                .enumerate()
                .map(|(i, v)| (*v, i as u32 + 1))
                .collect(),
        }
    }

    pub fn rank(&self, v: NodeId) -> Option<u32> {
        self.ranks.get(&v).copied()
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Nodes oldest first.
    pub fn sequence(&self) -> Vec<NodeId> {
        let mut v: Vec<(u32, NodeId)> = self.ranks.iter().map(|(n, r)| (*r, *n)).collect();
        v.sort_unstable();
        v.into_iter().map(|(_, n)| n).collect()
    }

    pub fn reversed(&self) -> Self {
        let mut seq = self.sequence();
        seq.reverse();
        Self::from_sequence(&seq)
    }
}

/// Kendall's tau between two rankings of the same nodes:
/// `(concordant - discordant) / C(n, 2)`.
pub fn kendall_tau(truth: &ArrivalOrder, estimate: &ArrivalOrder) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(DmcError::MismatchedOrders);
    }
    let seq = truth.sequence();
    let est: Vec<i64> = seq
        .iter()
        .map(|v| {
            estimate
                .rank(*v)
                .map(i64::from)
                .ok_or(DmcError::MismatchedOrders)
        })
        .collect::<Result<_>>()?;
    let n = est.len();
    if n < 2 {
        return Ok(1.0);
    }
    // `seq` is sorted by true rank, so a pair is concordant iff the
    // estimated ranks increase along it.
    let mut score: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            score += (est[j] - est[i]).signum();
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}

/// Arrival order read directly from the history's own new-node labels.
pub fn lenient_order(theta: &Theta) -> ArrivalOrder {
    ArrivalOrder::from_sequence(&theta.arrival_order)
}

/// Arrival order when the deconstruction cannot tell the new node from its
/// anchor: each reverse step removes one of the two uniformly at random, and
/// the survivor takes over the anchor's role in later steps.
pub fn strict_order(theta: &Theta, seed: u64) -> ArrivalOrder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = theta.arrival_order.len();
    let mut current: FxHashMap<NodeId, NodeId> =
        theta.arrival_order.iter().map(|v| (*v, *v)).collect();
    let mut removed_latest_first = Vec::with_capacity(n);
    for (new, anchor) in theta.reverse_steps() {
        let a = current[&new];
        let b = current[&anchor];
        let (gone, kept) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
        removed_latest_first.push(gone);
        current.insert(anchor, kept);
    }
    let mut seq = Vec::with_capacity(n);
    if let Some(first) = theta.arrival_order.first() {
        seq.push(current[first]);
    }
    seq.extend(removed_latest_first.into_iter().rev());
    ArrivalOrder::from_sequence(&seq)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    pearson(&ra, &rb)
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in &idx[i..=j] {
            ranks[*k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab / (saa * sbb).sqrt()
}
