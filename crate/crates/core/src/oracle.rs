//! Exhaustive reference answers for small instances.
//!
//! Nothing here shares code with the routing builders: paths and trees are
//! enumerated directly from the topology's adjacency lists.

use thiserror::Error;

use crate::lightforest::{GrowState, MulticastSession};
use crate::topology::{NodeId, Path, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_nodes: usize,
    pub max_enumerated: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_nodes: 8, max_enumerated: 5_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {nodes} nodes, budget allows {max}")]
    TooManyNodes { nodes: usize, max: usize },
    #[error("enumeration exceeded {0} candidates")]
    TooManyCandidates(usize),
    #[error("destination {0} is already in the tree")]
    DestinationInTree(NodeId),
}

fn check_size(g: &Topology, budget: &OracleBudget) -> Result<(), OracleError> {
    let nodes = g.node_count();
    if nodes > budget.max_nodes {
        return Err(OracleError::TooManyNodes { nodes, max: budget.max_nodes });
    }
    Ok(())
}

/// Cheapest simple path in `g` from `dest` to any connector of `state` that
/// avoids exhausted MI nodes and touches the tree only at its final node.
/// Ties: lowest connector id, then smallest node sequence.
pub fn shortest_feasible_path(
    g: &Topology,
    state: &GrowState,
    dest: NodeId,
    budget: &OracleBudget,
) -> Result<Option<Path>, OracleError> {
    check_size(g, budget)?;
    if state.tree.contains(dest) {
        return Err(OracleError::DestinationInTree(dest));
    }
    let tree_nodes = state.tree.nodes();
    let blocked = |v: NodeId| state.mi_set.contains(&v) || (tree_nodes.contains(&v) && !state.mc_set.contains(&v));

    struct Search<'a> {
        g: &'a Topology,
        stack: Vec<NodeId>,
        on_stack: Vec<bool>,
        best: Option<(f64, NodeId, Vec<NodeId>)>,
        count: usize,
        limit: usize,
    }

    impl Search<'_> {
        fn offer(&mut self, cost: f64) {
            let end = *self.stack.last().unwrap();
            let better = match &self.best {
                None => true,
                Some((c, conn, seq)) => cost
                    .total_cmp(c)
                    .then(end.cmp(conn))
                    .then_with(|| self.stack.as_slice().cmp(seq.as_slice()))
                    .is_lt(),
            };
            if better {
                self.best = Some((cost, end, self.stack.clone()));
            }
        }
    }

    fn dfs(
        s: &mut Search<'_>,
        cost: f64,
        is_connector: &dyn Fn(NodeId) -> bool,
        blocked: &dyn Fn(NodeId) -> bool,
    ) -> Result<(), OracleError> {
        s.count += 1;
        if s.count > s.limit {
            return Err(OracleError::TooManyCandidates(s.limit));
        }
        let here = *s.stack.last().unwrap();
        for &(next, w) in s.g.neighbors(here) {
            if s.on_stack[next.index()] || blocked(next) {
                continue;
            }
            s.stack.push(next);
            s.on_stack[next.index()] = true;
            if is_connector(next) {
                s.offer(cost + w);
            } else {
                dfs(s, cost + w, is_connector, blocked)?;
            }
            s.on_stack[next.index()] = false;
            s.stack.pop();
        }
        Ok(())
    }

    if blocked(dest) {
        return Ok(None);
    }
    let mut s = Search {
        g,
        stack: vec![dest],
        on_stack: vec![false; g.id_bound()],
        best: None,
        count: 0,
        limit: budget.max_enumerated,
    };
    s.on_stack[dest.index()] = true;
    let is_connector = |v: NodeId| state.mc_set.contains(&v);
    dfs(&mut s, 0.0, &is_connector, &blocked)?;
    Ok(s.best.map(|(cost, _, nodes)| Path { nodes, cost }))
}

/// Minimal tree count `k*` over all feasible light-forests of the session,
/// and the minimal total cost among forests with `k*` trees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinStress {
    pub trees: usize,
    pub cost: f64,
}

/// Exhaustive optimum: enumerates every subtree of `g` rooted at the source
/// that satisfies the splitting constraint, records the cheapest tree
/// covering each destination subset, then partitions the destination set.
pub fn min_stress_forest(
    g: &Topology,
    ms: &MulticastSession,
    budget: &OracleBudget,
) -> Result<Option<MinStress>, OracleError> {
    check_size(g, budget)?;
    let dests: Vec<NodeId> = ms.destinations.iter().copied().collect();
    let k = dests.len();
    let full = (1usize << k) - 1;
    let bit = |v: NodeId| dests.iter().position(|&d| d == v).map(|i| 1usize << i);

    // cheapest feasible tree containing at least the destinations of each mask
    let mut cover = vec![f64::INFINITY; full + 1];
    let mut count = 0usize;
    let mut in_tree = vec![false; g.id_bound()];
    in_tree[ms.source.index()] = true;
    let frontier: Vec<(NodeId, NodeId, f64)> = g.neighbors(ms.source).iter().map(|&(v, w)| (ms.source, v, w)).collect();
    TreeEnum {
        g,
        root: ms.source,
        in_tree,
        children: vec![0; g.id_bound()],
        cover: &mut cover,
        bit: &bit,
        count: &mut count,
        limit: budget.max_enumerated,
    }
    .grow(frontier, 0.0, 0)?;
    for mask in (0..=full).rev() {
        for i in 0..k {
            if mask & (1 << i) != 0 {
                let sub = mask & !(1 << i);
                if cover[mask] < cover[sub] {
                    cover[sub] = cover[mask];
                }
            }
        }
    }

    // best[(mask)] = (trees, cost) covering exactly `mask` as a partition
    let mut best: Vec<Option<(usize, f64)>> = vec![None; full + 1];
    best[0] = Some((0, 0.0));
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let mut sub = mask;
        let mut acc: Option<(usize, f64)> = None;
        while sub > 0 {
            if sub & low != 0 && cover[sub].is_finite() {
                if let Some((t, c)) = best[mask & !sub] {
                    let cand = (t + 1, c + cover[sub]);
                    let take = match acc {
                        None => true,
                        Some(a) => cand.0 < a.0 || (cand.0 == a.0 && cand.1 < a.1),
                    };
                    if take {
                        acc = Some(cand);
                    }
                }
            }
            sub = (sub - 1) & mask;
        }
        best[mask] = acc;
    }
    Ok(best[full].map(|(trees, cost)| MinStress { trees, cost }))
}

struct TreeEnum<'a, F: Fn(NodeId) -> Option<usize>> {
    g: &'a Topology,
    root: NodeId,
    in_tree: Vec<bool>,
    children: Vec<usize>,
    cover: &'a mut Vec<f64>,
    bit: &'a F,
    count: &'a mut usize,
    limit: usize,
}

impl<F: Fn(NodeId) -> Option<usize>> TreeEnum<'_, F> {
    /// Include/exclude recursion over frontier links. Every subtree
    /// containing the root is reached exactly once, at a leaf of the
    /// recursion where the frontier is empty.
    fn grow(&mut self, mut frontier: Vec<(NodeId, NodeId, f64)>, cost: f64, mask: usize) -> Result<(), OracleError> {
        let Some((u, v, w)) = frontier.pop() else {
            *self.count += 1;
            if *self.count > self.limit {
                return Err(OracleError::TooManyCandidates(self.limit));
            }
            if cost < self.cover[mask] {
                self.cover[mask] = cost;
            }
            return Ok(());
        };

        // exclude (u, v)
        self.grow(frontier.clone(), cost, mask)?;

        // include (u, v) unless it would make a non-root MI node branch
        let splitting_ok = u == self.root || self.g.is_mc(u) || self.children[u.index()] == 0;
        if splitting_ok {
            self.in_tree[v.index()] = true;
            self.children[u.index()] += 1;
            let mut next: Vec<(NodeId, NodeId, f64)> = frontier.into_iter().filter(|&(_, x, _)| x != v).collect();
            for &(x, wx) in self.g.neighbors(v) {
                if !self.in_tree[x.index()] {
                    next.push((v, x, wx));
                }
            }
            let m = mask | (self.bit)(v).unwrap_or(0);
            let r = self.grow(next, cost + w, m);
            self.children[u.index()] -= 1;
            self.in_tree[v.index()] = false;
            r?;
        }
        Ok(())
    }
}
