use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::lightforest::{LightForest, LightTree, MulticastSession};
use crate::topology::{Edge, NodeId, Topology};

use super::{check_session, distances_from, walk, RoutingError};

/// Rooted tree under decomposition: parent map plus the destinations it serves.
struct Draft {
    parent: BTreeMap<NodeId, NodeId>,
    served: BTreeSet<NodeId>,
}

impl Draft {
    fn children(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut out: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (&c, &p) in &self.parent {
            out.entry(p).or_default().push(c);
        }
        out
    }

    fn depth(&self, mut v: NodeId) -> usize {
        let mut d = 0;
        while let Some(&p) = self.parent.get(&v) {
            v = p;
            d += 1;
        }
        d
    }

    fn subtree(&self, top: NodeId, children: &BTreeMap<NodeId, Vec<NodeId>>) -> Vec<NodeId> {
        let mut out = vec![top];
        let mut i = 0;
        while i < out.len() {
            if let Some(cs) = children.get(&out[i]) {
                out.extend(cs);
            }
            i += 1;
        }
        out
    }

    /// Topmost (then lowest-id) non-root MI node with more than one child.
    fn overloaded(&self, g: &Topology, root: NodeId, children: &BTreeMap<NodeId, Vec<NodeId>>) -> Option<NodeId> {
        children
            .iter()
            .filter(|(&v, cs)| v != root && cs.len() > 1 && !g.is_mc(v))
            .map(|(&v, _)| (self.depth(v), v))
            .min()
            .map(|(_, v)| v)
    }
}

/// Reroute-to-Source light-forest.
///
/// The shortest-path tree from the source to every destination is built
/// first. Then, top-down, each non-root MI node with several children keeps
/// the child branch holding the most destinations (ties: lowest child id);
/// every other branch moves to a new tree that repeats the source-to-node
/// trunk. New trees are checked the same way, in creation order.
pub fn reroute_to_source_build(g: &Topology, ms: &MulticastSession) -> Result<LightForest, RoutingError> {
    build(g, ms)
}

pub(super) fn build(g: &Topology, ms: &MulticastSession) -> Result<LightForest, RoutingError> {
    check_session(g, ms)?;
    let root = ms.source;
    let labels = distances_from(g, root);
    let mut spt = Draft { parent: BTreeMap::new(), served: ms.destinations.clone() };
    for &d in &ms.destinations {
        let p = walk(g, &labels, d).expect("reachability checked");
        for w in p.nodes.windows(2) {
            spt.parent.insert(w[0], w[1]);
        }
    }

    let mut queue = VecDeque::from([spt]);
    let mut trees = Vec::new();
    while let Some(mut draft) = queue.pop_front() {
        loop {
            let children = draft.children();
            let Some(v) = draft.overloaded(g, root, &children) else { break };
            let branches: Vec<(NodeId, Vec<NodeId>)> =
                children[&v].iter().map(|&c| (c, draft.subtree(c, &children))).collect();
            let keep = branches
                .iter()
                .map(|(c, nodes)| (nodes.iter().filter(|x| draft.served.contains(x)).count(), std::cmp::Reverse(*c)))
                .max()
                .map(|(_, c)| c.0)
                .expect("overloaded node has children");

            let mut trunk = BTreeMap::new();
            let mut x = v;
            while let Some(&p) = draft.parent.get(&x) {
                trunk.insert(x, p);
                x = p;
            }
            for (c, nodes) in branches.into_iter().filter(|(c, _)| *c != keep) {
                let mut parent = trunk.clone();
                let mut served = BTreeSet::new();
                for &u in &nodes {
                    parent.insert(u, draft.parent.remove(&u).expect("subtree node has a parent"));
                    if draft.served.remove(&u) {
                        served.insert(u);
                    }
                }
                debug_assert_eq!(parent[&c], v);
                queue.push_back(Draft { parent, served });
            }
        }
        trees.push(finish(g, root, trees.len() + 1, draft));
    }
    Ok(LightForest { session: ms.clone(), trees })
}

fn finish(g: &Topology, root: NodeId, serial: usize, d: Draft) -> LightTree {
    let edges: BTreeSet<Edge> = d.parent.iter().map(|(&c, &p)| Edge::new(c, p)).collect();
    let mut t = LightTree::from_edges(g, root, serial, edges, d.served);
    t.parent = d.parent;
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lightforest::{forest_cost, link_stress, validate_forest};
    use crate::routing::shortest_path;
    use crate::topology::builtin_topology;

    fn n(v: u32) -> NodeId {
        NodeId(v)
    }

    #[test]
    fn splits_at_node_five() {
        let g = builtin_topology("nsf14").unwrap();
        let ms = MulticastSession::new(&g, 1, n(8), [n(4), n(6)]).unwrap();
        let f = reroute_to_source_build(&g, &ms).unwrap();
        assert_eq!(link_stress(&f), 2);
        assert_eq!(f.trees[0].served(), &BTreeSet::from([n(4)]));
        assert_eq!(f.trees[1].served(), &BTreeSet::from([n(6)]));
        assert_eq!(forest_cost(&f), 6.0);
        assert!(validate_forest(&g, &f).is_empty());
    }

    #[test]
    fn all_mc_is_the_shortest_path_tree() {
        let g = builtin_topology("longhaul28").unwrap();
        let g = g.with_mc_nodes(&g.nodes().collect());
        let dests: Vec<NodeId> = [5, 13, 22, 27, 16].into_iter().map(n).collect();
        let ms = MulticastSession::new(&g, 0, n(9), dests.clone()).unwrap();
        let f = reroute_to_source_build(&g, &ms).unwrap();
        assert_eq!(link_stress(&f), 1);
        let t = &f.trees[0];
        for d in dests {
            let mut hops = 0.0;
            let mut x = d;
            while let Some(&p) = t.parent_map().get(&x) {
                hops += g.edge_cost(Edge::new(x, p)).unwrap();
                x = p;
            }
            assert_eq!(x, n(9));
            assert_eq!(hops, shortest_path(&g, n(9), d).unwrap().unwrap().cost);
        }
    }

    #[test]
    fn nested_overloads_are_all_resolved() {
        let g = builtin_topology("longhaul28").unwrap();
        let ms = MulticastSession::new(&g, 0, n(1), (2..=28).map(n)).unwrap();
        let f = reroute_to_source_build(&g, &ms).unwrap();
        assert!(validate_forest(&g, &f).is_empty(), "{:?}", validate_forest(&g, &f));
        assert!(link_stress(&f) > 1);
    }
}
