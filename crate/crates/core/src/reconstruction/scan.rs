//! Incremental best-pair bookkeeping for greedy deconstruction.
//!
//! Scores live in a dense `bound x bound` matrix. After a reverse step only
//! pairs touching the anchor or a former neighbour of the removed node can
//! change, so only those entries are recomputed; per-row maxima and tie
//! counts are patched rather than rebuilt.

use rand::Rng;

use crate::graph::{Graph, NodeId, StepStats};

/// How pair scores are refreshed between steps.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum ScanMode {
    #[default]
    Incremental,
    /// Recompute every pair each step. Slow; used to cross-check.
    FullRescan,
}

pub(crate) trait PairScore {
    type Key: Copy + PartialOrd + Default;
    fn key(&self, s: StepStats) -> Self::Key;
}

pub(crate) struct PairScanner<K> {
    bound: usize,
    alive: Vec<bool>,
    scores: Vec<K>,
    row_best: Vec<K>,
    row_ties: Vec<u32>,
    mode: ScanMode,
}

impl<K: Copy + PartialOrd + Default> PairScanner<K> {
    pub(crate) fn new<S: PairScore<Key = K>>(g: &Graph, scorer: &S, mode: ScanMode) -> Self {
        let bound = g.id_bound();
        let mut alive = vec![false; bound];
        for v in g.nodes() {
            alive[v.index()] = true;
        }
        let mut scanner = PairScanner {
            bound,
            alive,
            scores: vec![K::default(); bound * bound],
            row_best: vec![K::default(); bound],
            row_ties: vec![0; bound],
            mode,
        };
        scanner.rebuild(g, scorer);
        scanner
    }

    fn rebuild<S: PairScore<Key = K>>(&mut self, g: &Graph, scorer: &S) {
        let live: Vec<NodeId> = g.nodes().collect();
        for (i, &u) in live.iter().enumerate() {
            for &v in &live[i + 1..] {
                let k = scorer.key(g.pair_stats(u, v).expect("live pair"));
                self.set(u.index(), v.index(), k);
            }
        }
        for u in live {
            self.rescan_row(u.index());
        }
    }

    #[inline]
    fn set(&mut self, u: usize, v: usize, k: K) {
        self.scores[u * self.bound + v] = k;
        self.scores[v * self.bound + u] = k;
    }

    #[inline]
    fn get(&self, u: usize, v: usize) -> K {
        self.scores[u * self.bound + v]
    }

    fn rescan_row(&mut self, u: usize) {
        let mut best: Option<K> = None;
        let mut ties = 0;
        for v in 0..self.bound {
            if v == u || !self.alive[v] {
                continue;
            }
            let k = self.get(u, v);
            match best {
                Some(b) if k < b => {}
                Some(b) if k == b => ties += 1,
                _ => {
                    best = Some(k);
                    ties = 1;
                }
            }
        }
        self.row_best[u] = best.unwrap_or_default();
        self.row_ties[u] = ties;
    }

    /// Picks a maximal-score pair uniformly at random among all ties.
    pub(crate) fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(NodeId, NodeId)> {
        let mut global: Option<K> = None;
        let mut total: u64 = 0;
        for u in 0..self.bound {
            if !self.alive[u] || self.row_ties[u] == 0 {
                continue;
            }
            let b = self.row_best[u];
            match global {
                Some(g) if b < g => {}
                Some(g) if b == g => total += self.row_ties[u] as u64,
                _ => {
                    global = Some(b);
                    total = self.row_ties[u] as u64;
                }
            }
        }
        let global = global?;
        // Every unordered pair is counted once from each endpoint's row.
        let mut r = rng.gen_range(0..total);
        for u in 0..self.bound {
            if !self.alive[u] || self.row_ties[u] == 0 || self.row_best[u] != global {
                continue;
            }
            let ties = self.row_ties[u] as u64;
            if r >= ties {
                r -= ties;
                continue;
            }
            for v in 0..self.bound {
                if v != u && self.alive[v] && self.get(u, v) == global {
                    if r == 0 {
                        return Some((NodeId(u as u32), NodeId(v as u32)));
                    }
                    r -= 1;
                }
            }
            unreachable!("row tie count out of sync");
        }
        unreachable!("global tie count out of sync")
    }

    /// Refreshes scores after `removed` was deleted. `dirty` must hold every
    /// live node whose neighbourhood changed in that step.
    pub(crate) fn update<S: PairScore<Key = K>>(
        &mut self,
        g: &Graph,
        scorer: &S,
        removed: NodeId,
        dirty: &[NodeId],
    ) {
        self.alive[removed.index()] = false;
        if self.mode == ScanMode::FullRescan {
            self.rebuild(g, scorer);
            return;
        }
        let mut is_dirty = vec![false; self.bound];
        for d in dirty {
            is_dirty[d.index()] = true;
        }
        let clean: Vec<usize> = (0..self.bound)
            .filter(|&u| self.alive[u] && !is_dirty[u])
            .collect();

        // Retire stale entries that currently sit at a row maximum.
        for &u in &clean {
            let best = self.row_best[u];
            if self.get(u, removed.index()) == best {
                self.row_ties[u] -= 1;
            }
            for d in dirty {
                if self.get(u, d.index()) == best {
                    self.row_ties[u] -= 1;
                }
            }
        }

        for (i, &d) in dirty.iter().enumerate() {
            for v in g.nodes() {
                if v == d || (is_dirty[v.index()] && dirty[..i].contains(&v)) {
                    continue;
                }
                let k = scorer.key(g.pair_stats(d, v).expect("live pair"));
                self.set(d.index(), v.index(), k);
            }
        }

        for &u in &clean {
            if self.row_ties[u] == 0 {
                self.rescan_row(u);
                continue;
            }
            for d in dirty {
                let k = self.get(u, d.index());
                let best = self.row_best[u];
                if k > best {
                    self.row_best[u] = k;
                    self.row_ties[u] = 1;
                } else if k == best {
                    self.row_ties[u] += 1;
                }
            }
        }
        for d in dirty {
            self.rescan_row(d.index());
        }
    }
}
