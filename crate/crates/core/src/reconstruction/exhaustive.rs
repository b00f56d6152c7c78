use super::DeconstructionResult;
use crate::engine::{SufficientStats, Theta};
use crate::error::{DmcError, Result};
use crate::graph::{Graph, NodeId};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 8;

/// Visits every unordered pair sequence that deconstructs `g` down to one
/// node, depth first with in-place undo. The callback receives the applied
/// `(new, anchor)` steps, the survivor and the summed statistics. Visit
/// order is deterministic (lexicographic over ascending node pairs).
pub fn for_each_pair_sequence<F>(g: &Graph, cap: usize, mut visit: F) -> Result<()>
where
    F: FnMut(&[(NodeId, NodeId)], NodeId, &SufficientStats),
{
    let n = g.node_count();
    if n > cap {
        return Err(DmcError::ExhaustiveCap { nodes: n, cap });
    }
    if n == 0 {
        return Ok(());
    }
    let mut work = g.clone();
    let mut live: Vec<NodeId> = g.nodes().collect();
    let mut path = Vec::with_capacity(n - 1);
    descend(
        &mut work,
        &mut live,
        &mut path,
        SufficientStats::empty(n),
        &mut visit,
    );
    Ok(())
}

fn descend<F>(
    g: &mut Graph,
    live: &mut Vec<NodeId>,
    path: &mut Vec<(NodeId, NodeId)>,
    stats: SufficientStats,
    visit: &mut F,
) where
    F: FnMut(&[(NodeId, NodeId)], NodeId, &SufficientStats),
{
    if live.len() == 1 {
        visit(path, live[0], &stats);
        return;
    }
    for i in 0..live.len() {
        for j in i + 1..live.len() {
            let (anchor, new) = (live[i], live[j]);
            let (step, undo) = g.reverse_step_with_undo(new, anchor).expect("live pair");
            let mut next = stats;
            next.add(step);
            live.remove(j);
            path.push((new, anchor));
            descend(g, live, path, next, visit);
            path.pop();
            live.insert(j, new);
            g.undo(undo);
        }
    }
}

/// Every pair sequence of `g` as a full result, in visit order.
pub fn exhaustive(g: &Graph, cap: usize) -> Result<Vec<DeconstructionResult>> {
    let mut out = Vec::new();
    for_each_pair_sequence(g, cap, |path, survivor, stats| {
        out.push(DeconstructionResult::new(
            Theta::from_removals(survivor, path),
            *stats,
        ));
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::deconstruct;

    #[test]
    fn counts_and_cap() {
        let g = Graph::with_nodes(3);
        assert_eq!(exhaustive(&g, 8).unwrap().len(), 3);
        let g = Graph::with_nodes(9);
        match exhaustive(&g, 8) {
            Err(DmcError::ExhaustiveCap { nodes: 9, cap: 8 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(exhaustive(&Graph::new(), 8).unwrap().len(), 0);
        assert_eq!(exhaustive(&Graph::with_nodes(1), 8).unwrap().len(), 1);
    }

    #[test]
    fn results_replay_and_graph_is_restored() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        let all = exhaustive(&g, 8).unwrap();
        assert_eq!(all.len(), 180);
        for r in &all {
            assert_eq!(r.stats, deconstruct(&g, &r.theta).unwrap());
        }
    }
}
