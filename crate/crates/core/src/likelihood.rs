//! Exact probability of observing a small graph (up to isomorphism) under the
//! DMC process, obtained by summing over every pair sequence.
//!
//! A labelled history `(order, anchors)` reproduces a specific labelled graph
//! with probability `prod 1/(i-1)` for the anchor draws times
//! `(q_m/2)^(Y-X) (1-q_m)^X q_c^W (1-q_c)^(n-1-W)`; the fair coin contributes
//! the `1/2` per modified neighbour. Histories map `2^(n-1)`-to-one onto
//! unordered pair sequences, and each unlabelled shape is hit once per
//! automorphism, giving
//!
//! `P(G) = 2^(n-1) / (|Aut G| (n-1)!) * sum_seq 2^-(Y-X) L(q, seq)`.

use std::collections::BTreeMap;

use crate::engine::SufficientStats;
use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::reconstruction::for_each_pair_sequence;

/// The exact likelihood of a graph as a polynomial in `(q_m, q_c)`, stored as
/// weighted monomials `q_m^(y-x) (1-q_m)^x q_c^w (1-q_c)^(n-1-w)`.
#[derive(Clone, Debug)]
pub struct ExactLikelihood {
    n: u64,
    terms: Vec<((u64, u64, u64), f64)>,
}

impl ExactLikelihood {
    pub fn of_graph(g: &Graph, cap: usize) -> Result<Self> {
        let n = g.node_count();
        let mut counts: BTreeMap<(u64, u64, u64), u64> = BTreeMap::new();
        for_each_pair_sequence(g, cap, |_, _, s: &SufficientStats| {
            *counts.entry((s.w, s.x, s.y)).or_default() += 1;
        })?;
        let steps = n.saturating_sub(1) as i32;
        let factorial: f64 = (1..=steps.max(0) as u64).map(|k| k as f64).product();
        let scale = 2f64.powi(steps) / (automorphism_count(g) as f64 * factorial);
        let terms = counts
            .into_iter()
            .map(|((w, x, y), c)| ((w, x, y), scale * c as f64 * 0.5f64.powi((y - x) as i32)))
            .collect();
        Ok(ExactLikelihood { n: n as u64, terms })
    }

    pub fn value(&self, q_m: f64, q_c: f64) -> f64 {
        let steps = self.n.saturating_sub(1);
        self.terms
            .iter()
            .map(|&((w, x, y), c)| {
                c * q_m.powi((y - x) as i32)
                    * (1.0 - q_m).powi(x as i32)
                    * q_c.powi(w as i32)
                    * (1.0 - q_c).powi((steps - w) as i32)
            })
            .sum()
    }

    /// Partial derivatives `(d/dq_m, d/dq_c)`.
    pub fn gradient(&self, q_m: f64, q_c: f64) -> (f64, f64) {
        let steps = self.n.saturating_sub(1);
        let mut gm = 0.0;
        let mut gc = 0.0;
        for &((w, x, y), c) in &self.terms {
            let (dm, fm) = monomial(q_m, y - x, x);
            let (dc, fc) = monomial(q_c, w, steps - w);
            gm += c * dm * fc;
            gc += c * fm * dc;
        }
        (gm, gc)
    }

    /// Numerical maximiser over `[0, 1]^2` by coordinate ascent, each 1-D
    /// step solving the stationarity condition by bisection.
    pub fn maximize(&self) -> (f64, f64) {
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for i in 0..=100 {
            for j in 0..=100 {
                let (m, c) = (i as f64 / 100.0, j as f64 / 100.0);
                let v = self.value(m, c);
                if v > best.2 {
                    best = (m, c, v);
                }
            }
        }
        let (mut m, mut c) = (best.0, best.1);
        for _ in 0..200 {
            let m_next = maximize_1d(|t| self.value(t, c), |t| self.gradient(t, c).0);
            let c_next = maximize_1d(|t| self.value(m_next, t), |t| self.gradient(m_next, t).1);
            let moved = (m_next - m).abs().max((c_next - c).abs());
            m = m_next;
            c = c_next;
            if moved < 1e-15 {
                break;
            }
        }
        (m, c)
    }
}

/// `(d/dt, value)` of `t^a (1-t)^b`.
fn monomial(t: f64, a: u64, b: u64) -> (f64, f64) {
    let value = t.powi(a as i32) * (1.0 - t).powi(b as i32);
    let mut d = 0.0;
    if a > 0 {
        d += a as f64 * t.powi(a as i32 - 1) * (1.0 - t).powi(b as i32);
    }
    if b > 0 {
        d -= b as f64 * t.powi(a as i32) * (1.0 - t).powi(b as i32 - 1);
    }
    (d, value)
}

fn maximize_1d(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> f64 {
    const STEPS: usize = 1000;
    let mut candidates = vec![0.0, 1.0];
    let mut prev = df(0.0);
    for k in 1..=STEPS {
        let t = k as f64 / STEPS as f64;
        let cur = df(t);
        if prev > 0.0 && cur <= 0.0 {
            let (mut lo, mut hi) = ((k - 1) as f64 / STEPS as f64, t);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if df(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            candidates.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    candidates
        .into_iter()
        .fold((0.0, f64::NEG_INFINITY), |acc, t| {
            let v = f(t);
            if v > acc.1 {
                (t, v)
            } else {
                acc
            }
        })
        .0
}

/// Number of node permutations that preserve adjacency. Brute force.
pub fn automorphism_count(g: &Graph) -> u64 {
    let nodes: Vec<NodeId> = g.nodes().collect();
    let n = nodes.len();
    let adj: Vec<Vec<bool>> = nodes
        .iter()
        .map(|&u| {
            nodes
                .iter()
                .map(|&v| g.has_edge(u, v).unwrap_or(false))
                .collect()
        })
        .collect();
    let mut perm: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    count_automorphisms(&adj, &mut perm, &mut used)
}

fn count_automorphisms(adj: &[Vec<bool>], perm: &mut Vec<usize>, used: &mut [bool]) -> u64 {
    let k = perm.len();
    if k == adj.len() {
        return 1;
    }
    let mut total = 0;
    for cand in 0..adj.len() {
        if used[cand] {
            continue;
        }
        if (0..k).any(|i| adj[k][i] != adj[cand][perm[i]]) {
            continue;
        }
        used[cand] = true;
        perm.push(cand);
        total += count_automorphisms(adj, perm, used);
        perm.pop();
        used[cand] = false;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn automorphisms() {
        assert_eq!(automorphism_count(&Graph::with_nodes(4)), 24);
        let path = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(automorphism_count(&path), 2);
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(automorphism_count(&c4), 8);
    }

    #[test]
    fn probabilities_sum_to_one_over_shapes() {
        // The four 3-node shapes exhaust the probability mass.
        let shapes: [&[(u32, u32)]; 4] =
            [&[], &[(0, 1)], &[(0, 1), (0, 2)], &[(0, 1), (0, 2), (1, 2)]];
        for (qm, qc) in [(0.3, 0.6), (0.9, 0.1)] {
            let total: f64 = shapes
                .iter()
                .map(|e| {
                    let g = Graph::from_edges(3, e).unwrap();
                    ExactLikelihood::of_graph(&g, 8).unwrap().value(qm, qc)
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "total {total}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (1, 3)]).unwrap();
        let lik = ExactLikelihood::of_graph(&g, 8).unwrap();
        let (m, c, h) = (0.37, 0.61, 1e-6);
        let (gm, gc) = lik.gradient(m, c);
        let fm = (lik.value(m + h, c) - lik.value(m - h, c)) / (2.0 * h);
        let fc = (lik.value(m, c + h) - lik.value(m, c - h)) / (2.0 * h);
        assert!((gm - fm).abs() < 1e-7);
        assert!((gc - fc).abs() < 1e-7);
    }
}
