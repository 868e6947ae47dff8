use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use crate::topology::{NodeId, Path, Topology};

use super::{ConnectionChoice, RoutingError};

/// Distance label of a node after a sweep: cost to the nearest seed and that
/// seed. Among equally near seeds the lowest id wins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Label {
    pub dist: f64,
    pub root: NodeId,
}

impl Label {
    fn key(&self) -> (f64, NodeId) {
        (self.dist, self.root)
    }
}

fn key_cmp(a: (f64, NodeId), b: (f64, NodeId)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

#[derive(Debug, PartialEq)]
struct Entry {
    dist: f64,
    root: NodeId,
    node: NodeId,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        key_cmp((self.dist, self.root), (other.dist, other.root)).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra: every seed starts at distance 0. Labels are
/// compared as `(distance, seed id)` so each node ends up attached to the
/// lowest-id seed among its nearest ones. Indexed by `id - 1`.
pub(crate) fn sweep(g: &Topology, seeds: impl IntoIterator<Item = NodeId>) -> Vec<Option<Label>> {
    let mut labels: Vec<Option<Label>> = vec![None; g.id_bound()];
    let mut settled = vec![false; g.id_bound()];
    let mut heap = BinaryHeap::new();
    for s in seeds {
        if g.contains(s) {
            labels[s.index()] = Some(Label { dist: 0.0, root: s });
            heap.push(Reverse(Entry { dist: 0.0, root: s, node: s }));
        }
    }
    while let Some(Reverse(Entry { dist, root, node })) = heap.pop() {
        if settled[node.index()] {
            continue;
        }
        settled[node.index()] = true;
        for &(next, w) in g.neighbors(node) {
            if settled[next.index()] {
                continue;
            }
            let cand = (dist + w, root);
            let better = match labels[next.index()] {
                None => true,
                Some(l) => key_cmp(cand, l.key()) == Ordering::Less,
            };
            if better {
                labels[next.index()] = Some(Label { dist: cand.0, root });
                heap.push(Reverse(Entry { dist: cand.0, root, node: next }));
            }
        }
    }
    labels
}

fn same_cost(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

/// Walks from `from` down to its label's seed, always stepping to the
/// lowest-id neighbor that lies on a shortest path to that seed. The result
/// is the lexicographically smallest shortest path `from -> seed`.
pub(crate) fn walk(g: &Topology, labels: &[Option<Label>], from: NodeId) -> Option<Path> {
    let start = labels.get(from.index()).copied().flatten()?;
    let mut nodes = vec![from];
    let mut cur = from;
    let mut here = start;
    while cur != start.root {
        let (next, label) = g
            .neighbors(cur)
            .iter()
            .find_map(|&(u, w)| {
                let l = labels[u.index()]?;
                (l.root == start.root && same_cost(l.dist + w, here.dist)).then_some((u, l))
            })
            .expect("a settled node always has a predecessor on a shortest path");
        nodes.push(next);
        cur = next;
        here = label;
    }
    Some(Path { nodes, cost: start.dist })
}

/// Minimal-cost path `u -> v`, or `None` when disconnected. Among equal-cost
/// paths the lexicographically smallest node sequence is returned.
pub fn shortest_path(g: &Topology, u: NodeId, v: NodeId) -> Result<Option<Path>, RoutingError> {
    for n in [u, v] {
        if !g.contains(n) {
            return Err(RoutingError::UnknownNode(n));
        }
    }
    let labels = sweep(g, [v]);
    Ok(walk(g, &labels, u))
}

/// Single-source labels, used for reachability and shortest-path trees.
pub(crate) fn distances_from(g: &Topology, s: NodeId) -> Vec<Option<Label>> {
    sweep(g, [s])
}

/// Nearest pending destination to any connector, found with one sweep seeded
/// at every connector. Ties go to the lowest destination id, then the lowest
/// connector id, then the lexicographically smallest path. `None` when no
/// destination is reachable.
pub fn nearest_destination(
    g: &Topology,
    connectors: &BTreeSet<NodeId>,
    dests: &BTreeSet<NodeId>,
) -> Result<Option<ConnectionChoice>, RoutingError> {
    for &n in connectors.iter().chain(dests) {
        if !g.contains(n) {
            return Err(RoutingError::UnknownNode(n));
        }
    }
    if connectors.is_empty() || dests.is_empty() {
        return Ok(None);
    }
    let labels = sweep(g, connectors.iter().copied());
    let best = dests
        .iter()
        .filter(|d| !connectors.contains(d))
        .filter_map(|&d| labels[d.index()].map(|l| (l.dist, d)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(best.map(|(_, dest)| {
        let path = walk(g, &labels, dest).expect("labelled node");
        ConnectionChoice { dest, connector: path.last(), path }
    }))
}
