use std::collections::BTreeMap;

use crate::lightforest::{GrowState, LightForest, MulticastSession};
use crate::topology::{NodeId, Path, Topology};

use super::shortest::{sweep, walk, Label};
use super::{check_session, ConnectionChoice, RoutingError, Trace, TraceStep};

/// Shortest paths of the original graph, one sweep per target, computed on
/// first use.
struct PathCache<'g> {
    g: &'g Topology,
    to: BTreeMap<NodeId, Vec<Option<Label>>>,
}

impl<'g> PathCache<'g> {
    fn new(g: &'g Topology) -> Self {
        PathCache { g, to: BTreeMap::new() }
    }

    fn labels(&mut self, target: NodeId) -> &[Option<Label>] {
        let g = self.g;
        self.to.entry(target).or_insert_with(|| sweep(g, [target]))
    }

    fn dist(&mut self, from: NodeId, to: NodeId) -> Option<f64> {
        self.labels(to)[from.index()].map(|l| l.dist)
    }

    fn path(&mut self, from: NodeId, to: NodeId) -> Option<Path> {
        let g = self.g;
        walk(g, self.labels(to), from)
    }
}

/// A shortest path qualifies when it avoids exhausted MI nodes, enters the
/// tree only at its connector and passes no other pending destination.
fn qualifies(st: &GrowState, p: &Path) -> bool {
    let connector = p.last();
    p.nodes.iter().all(|v| !st.mi_set.contains(v) && (*v == connector || !st.tree.contains(*v)))
        && p.interior().iter().all(|v| !st.remaining.contains(v))
}

/// The Member-Only selection rule on one state: among all (destination,
/// connector) pairs, in order of original-graph distance then destination id
/// then connector id, the first whose shortest path qualifies.
fn select(st: &GrowState, cache: &mut PathCache<'_>) -> Option<ConnectionChoice> {
    let mut pairs: Vec<(f64, NodeId, NodeId)> = Vec::new();
    for &d in &st.remaining {
        for &c in &st.mc_set {
            if let Some(dist) = cache.dist(d, c) {
                pairs.push((dist, d, c));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    pairs.into_iter().find_map(|(_, dest, connector)| {
        let path = cache.path(dest, connector)?;
        qualifies(st, &path).then_some(ConnectionChoice { dest, connector, path })
    })
}

/// Member-Only light-forest: grows each tree with the nearest destination
/// whose original-graph shortest path to a connector satisfies the splitting
/// constraint; when none does, the tree is finished and a new one begins.
pub fn member_only_build(g: &Topology, ms: &MulticastSession) -> Result<LightForest, RoutingError> {
    build(g, ms, None)
}

pub(super) fn build(
    g: &Topology,
    ms: &MulticastSession,
    mut trace: Option<&mut Trace>,
) -> Result<LightForest, RoutingError> {
    check_session(g, ms)?;
    let mut cache = PathCache::new(g);
    let mut trees = Vec::new();
    let mut remaining = ms.destinations.clone();

    while !remaining.is_empty() {
        let mut st = GrowState::new(g.clone(), ms.source, trees.len() + 1, remaining);
        loop {
            let choice = if st.remaining.is_empty() { None } else { select(&st, &mut cache) };
            if let Some(t) = trace.as_deref_mut() {
                t.steps.push(TraceStep { state: st.clone(), choice: choice.clone() });
            }
            let Some(c) = choice else { break };
            st.extend(&c.path, c.connector, c.dest)?;
        }
        remaining = std::mem::take(&mut st.remaining);
        trees.push(st.tree);
    }
    if let Some(t) = trace {
        t.sweeps = cache.to.len();
    }
    Ok(LightForest { session: ms.clone(), trees })
}

/// Member-Only's choice for an arbitrary state, searching paths in `g`.
pub fn member_only_select(g: &Topology, st: &GrowState) -> Option<ConnectionChoice> {
    select(st, &mut PathCache::new(g))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::lightforest::{first_tree_destinations, link_stress, validate_forest};
    use crate::routing::hslt_build;
    use crate::topology::{builtin_topology, Capability};

    fn n(v: u32) -> NodeId {
        NodeId(v)
    }

    #[test]
    fn nine_needs_second_tree() {
        let g = builtin_topology("nsf14").unwrap();
        let ms = MulticastSession::new(&g, 2, n(8), [n(9), n(10), n(11)]).unwrap();
        let f = member_only_build(&g, &ms).unwrap();
        assert_eq!(link_stress(&f), 2);
        assert_eq!(f.trees[0].served(), &BTreeSet::from([n(10), n(11)]));
        assert_eq!(f.trees[1].served(), &BTreeSet::from([n(9)]));
        assert_eq!(first_tree_destinations(&f), Ok(2));
        assert!(validate_forest(&g, &f).is_empty());
    }

    #[test]
    fn six_blocked_by_node_five() {
        let g = builtin_topology("nsf14").unwrap();
        let ms = MulticastSession::new(&g, 1, n(8), [n(4), n(6)]).unwrap();
        let f = member_only_build(&g, &ms).unwrap();
        assert_eq!(link_stress(&f), 2);
    }

    #[test]
    fn adjacent_destination_matches_hslt() {
        let g = builtin_topology("nsf14").unwrap();
        let ms = MulticastSession::new(&g, 0, n(8), [n(10)]).unwrap();
        assert_eq!(member_only_build(&g, &ms).unwrap(), hslt_build(&g, &ms).unwrap());
    }

    #[test]
    fn all_mc_gives_one_tree() {
        let g = builtin_topology("longhaul28").unwrap();
        let all: BTreeSet<NodeId> = g.nodes().collect();
        let g = g.with_mc_nodes(&all);
        assert!(g.nodes().all(|v| g.capability(v) == Some(Capability::MC)));
        let ms = MulticastSession::new(&g, 0, n(1), (2..=28).step_by(3).map(n)).unwrap();
        assert_eq!(link_stress(&member_only_build(&g, &ms).unwrap()), 1);
    }
}
