//! Light-trees, light-forests and the bookkeeping used while a tree grows.
//!
//! A light-tree occupies one wavelength on every link it uses and is rooted
//! at the session source. Non-root MI nodes may have at most one child; the
//! source may always branch (several emitters on the same wavelength).
//! A light-forest is the ordered list of trees serving one session; the sets
//! of newly served destinations partition the session's destination set.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{Capability, Edge, NodeId, Path, Topology};

/// A multicast request `ms(s, D)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MulticastSession {
    pub id: u64,
    pub source: NodeId,
    pub destinations: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("session has no destinations")]
    NoDestinations,
    #[error("source {0} is also listed as a destination")]
    SourceIsDestination(NodeId),
    #[error("node {0} is not part of the topology")]
    UnknownNode(NodeId),
}

impl MulticastSession {
    pub fn new(
        g: &Topology,
        id: u64,
        source: NodeId,
        destinations: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self, SessionError> {
        let destinations: BTreeSet<NodeId> = destinations.into_iter().collect();
        if !g.contains(source) {
            return Err(SessionError::UnknownNode(source));
        }
        if let Some(&d) = destinations.iter().find(|&&d| !g.contains(d)) {
            return Err(SessionError::UnknownNode(d));
        }
        if destinations.contains(&source) {
            return Err(SessionError::SourceIsDestination(source));
        }
        if destinations.is_empty() {
            return Err(SessionError::NoDestinations);
        }
        Ok(MulticastSession { id, source, destinations })
    }

    /// `K = |D|`.
    pub fn size(&self) -> usize {
        self.destinations.len()
    }
}

/// One light-tree `LT_i(s, D_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LightTree {
    pub(crate) root: NodeId,
    pub(crate) edges: BTreeSet<Edge>,
    pub(crate) parent: BTreeMap<NodeId, NodeId>,
    pub(crate) served: BTreeSet<NodeId>,
    pub(crate) cost: f64,
    pub wavelength: Option<u32>,
    pub serial: usize,
}

impl LightTree {
    /// The single-node tree `{s}`.
    pub fn new(root: NodeId, serial: usize) -> Self {
        LightTree {
            root,
            edges: BTreeSet::new(),
            parent: BTreeMap::new(),
            served: BTreeSet::new(),
            cost: 0.0,
            wavelength: None,
            serial,
        }
    }

    /// Rebuilds a tree from an edge list, orienting it away from `root`.
    /// Edge costs are looked up in `g`; links missing from `g` count as zero
    /// and are reported by [`validate_tree`].
    pub fn from_edges(
        g: &Topology,
        root: NodeId,
        serial: usize,
        edges: impl IntoIterator<Item = Edge>,
        served: impl IntoIterator<Item = NodeId>,
    ) -> Self {
        let edges: BTreeSet<Edge> = edges.into_iter().collect();
        let cost = edges.iter().filter_map(|&e| g.edge_cost(e)).sum();
        let (parent, _) = orient(root, &edges);
        LightTree { root, edges, parent, served: served.into_iter().collect(), cost, wavelength: None, serial }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    /// Parent of each non-root node (signal flows parent → child).
    pub fn parent_map(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.parent
    }

    /// Newly served destinations `D_i`.
    pub fn served(&self) -> &BTreeSet<NodeId> {
        &self.served
    }

    pub fn nodes(&self) -> BTreeSet<NodeId> {
        let mut s: BTreeSet<NodeId> = self.parent.keys().copied().collect();
        s.insert(self.root);
        for e in &self.edges {
            let (u, v) = e.endpoints();
            s.insert(u);
            s.insert(v);
        }
        s
    }

    pub fn contains(&self, n: NodeId) -> bool {
        n == self.root || self.parent.contains_key(&n)
    }

    pub fn children(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut out: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (&child, &p) in &self.parent {
            out.entry(p).or_default().push(child);
        }
        out
    }

    pub fn child_count(&self, n: NodeId) -> usize {
        self.parent.values().filter(|&&p| p == n).count()
    }

    /// Adds the link `parent -> child`; `child` must not be in the tree yet.
    pub(crate) fn attach(&mut self, parent: NodeId, child: NodeId, cost: f64) {
        debug_assert!(!self.contains(child));
        self.edges.insert(Edge::new(parent, child));
        self.parent.insert(child, parent);
        self.cost += cost;
    }
}

/// BFS orientation of an edge set from `root`. Returns the parent map and the
/// set of nodes reached.
fn orient(root: NodeId, edges: &BTreeSet<Edge>) -> (BTreeMap<NodeId, NodeId>, BTreeSet<NodeId>) {
    let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for e in edges {
        let (u, v) = e.endpoints();
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    let mut parent = BTreeMap::new();
    let mut seen = BTreeSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in adj.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
            if seen.insert(v) {
                parent.insert(v, u);
                queue.push_back(v);
            }
        }
    }
    (parent, seen)
}

/// Ordered set of light-trees serving one session.
#[derive(Debug, Clone, PartialEq)]
pub struct LightForest {
    pub session: MulticastSession,
    pub trees: Vec<LightTree>,
}

/// Everything that can be wrong with a single tree.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeViolation {
    #[error("link {0} is not in the topology")]
    ForeignEdge(Edge),
    #[error("node {0} is not in the topology")]
    UnknownNode(NodeId),
    #[error("links form a cycle")]
    Cycle,
    #[error("node {0} is not connected to the root")]
    Disconnected(NodeId),
    #[error("MI branching at {node} ({children} children)")]
    MiBranching { node: NodeId, children: usize },
    #[error("served destination {0} is not in the tree")]
    ServedOutsideTree(NodeId),
    #[error("parent map disagrees with the link set at node {0}")]
    ParentMismatch(NodeId),
}

/// Checks a tree against the topology: links exist, they form one tree
/// rooted at the source, no non-root MI node branches, served nodes are in
/// the tree. Returns one entry per violation; empty means valid.
pub fn validate_tree(g: &Topology, t: &LightTree) -> Vec<TreeViolation> {
    let mut out = Vec::new();
    if !g.contains(t.root) {
        out.push(TreeViolation::UnknownNode(t.root));
    }
    for &e in &t.edges {
        if !g.has_edge(e) {
            out.push(TreeViolation::ForeignEdge(e));
        }
    }
    let (parent, reached) = orient(t.root, &t.edges);
    let mut endpoints = BTreeSet::new();
    for e in &t.edges {
        let (u, v) = e.endpoints();
        endpoints.insert(u);
        endpoints.insert(v);
    }
    for &v in &endpoints {
        if !reached.contains(&v) {
            out.push(TreeViolation::Disconnected(v));
        }
    }
    let reached_edges = t.edges.iter().filter(|e| reached.contains(&e.endpoints().0)).count();
    if reached_edges + 1 != reached.len() {
        out.push(TreeViolation::Cycle);
    }

    let mut children: BTreeMap<NodeId, usize> = BTreeMap::new();
    for &p in parent.values() {
        *children.entry(p).or_default() += 1;
    }
    for (&node, &count) in &children {
        if node != t.root && count > 1 && g.capability(node) == Some(Capability::MI) {
            out.push(TreeViolation::MiBranching { node, children: count });
        }
    }
    for &d in &t.served {
        if !reached.contains(&d) {
            out.push(TreeViolation::ServedOutsideTree(d));
        }
    }
    for (&child, &p) in &t.parent {
        if parent.get(&child) != Some(&p) {
            out.push(TreeViolation::ParentMismatch(child));
        }
    }
    out
}

/// Problems at the forest level: per-tree violations plus the partition laws.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForestViolation {
    #[error("tree {serial}: {violation}")]
    Tree { serial: usize, violation: TreeViolation },
    #[error("tree {0} is not rooted at the session source")]
    WrongRoot(usize),
    #[error("tree {0} serves no new destination")]
    EmptyTree(usize),
    #[error("destination {0} is served by more than one tree")]
    ServedTwice(NodeId),
    #[error("node {0} is served but is not a session destination")]
    NotADestination(NodeId),
    #[error("destination {0} is not served by any tree")]
    Unserved(NodeId),
}

/// Validates every tree and the partition of the destination set.
pub fn validate_forest(g: &Topology, f: &LightForest) -> Vec<ForestViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for t in &f.trees {
        out.extend(
            validate_tree(g, t).into_iter().map(|violation| ForestViolation::Tree { serial: t.serial, violation }),
        );
        if t.root != f.session.source {
            out.push(ForestViolation::WrongRoot(t.serial));
        }
        if t.served.is_empty() {
            out.push(ForestViolation::EmptyTree(t.serial));
        }
        for &d in &t.served {
            if !f.session.destinations.contains(&d) {
                out.push(ForestViolation::NotADestination(d));
            }
            if !seen.insert(d) {
                out.push(ForestViolation::ServedTwice(d));
            }
        }
    }
    for &d in &f.session.destinations {
        if !seen.contains(&d) {
            out.push(ForestViolation::Unserved(d));
        }
    }
    out
}

/// Sum of link costs of one tree.
pub fn tree_cost(t: &LightTree) -> f64 {
    t.cost
}

/// Total cost of a session: sum of tree costs.
pub fn forest_cost(f: &LightForest) -> f64 {
    f.trees.iter().map(tree_cost).sum()
}

/// Link stress: number of trees (= wavelengths the session needs per fiber).
pub fn link_stress(f: &LightForest) -> usize {
    f.trees.len()
}

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
#[error("forest has no trees")]
pub struct EmptyForest;

/// `l_1`: destinations newly served by the first tree.
pub fn first_tree_destinations(f: &LightForest) -> Result<usize, EmptyForest> {
    f.trees.first().map(|t| t.served.len()).ok_or(EmptyForest)
}

/// Reasons [`GrowState::extend`] refuses a path.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintViolation {
    #[error("path must run from destination {dest} to connector {connector}")]
    Endpoints { dest: NodeId, connector: NodeId },
    #[error("node {0} is not a connector")]
    NotAConnector(NodeId),
    #[error("node {0} is not an unserved destination")]
    NotPending(NodeId),
    #[error("node {0} is an exhausted MI node")]
    ExhaustedMi(NodeId),
    #[error("node {0} is already in the tree")]
    AlreadyInTree(NodeId),
    #[error("node {0} is an unserved destination inside the path")]
    PendingInterior(NodeId),
    #[error("link {0} is not available in the working graph")]
    MissingLink(Edge),
}

/// State of a light-tree under construction.
///
/// * `mc_set`: connectors: the root, MC tree nodes and leaf MI tree nodes.
/// * `mi_set`: non-root, non-leaf MI tree nodes (splitting exhausted).
/// * `remaining`: destinations not yet served by this or earlier trees.
/// * `working`: the graph paths are searched in.
#[derive(Debug, Clone)]
pub struct GrowState {
    pub tree: LightTree,
    pub mc_set: BTreeSet<NodeId>,
    pub mi_set: BTreeSet<NodeId>,
    pub remaining: BTreeSet<NodeId>,
    pub working: Topology,
}

impl GrowState {
    /// Fresh tree `{s}` on `working`, with `MC_SET = {s}` and `MI_SET = ∅`.
    pub fn new(working: Topology, source: NodeId, serial: usize, remaining: BTreeSet<NodeId>) -> Self {
        GrowState {
            tree: LightTree::new(source, serial),
            mc_set: BTreeSet::from([source]),
            mi_set: BTreeSet::new(),
            remaining,
            working,
        }
    }

    /// Merges `path` (running `dest -> … -> connector`) into the tree and
    /// updates the node sets. The state is untouched on error.
    pub fn extend(&mut self, path: &Path, connector: NodeId, dest: NodeId) -> Result<(), ConstraintViolation> {
        if path.nodes.len() < 2 || path.first() != dest || path.last() != connector {
            return Err(ConstraintViolation::Endpoints { dest, connector });
        }
        if !self.mc_set.contains(&connector) {
            return Err(ConstraintViolation::NotAConnector(connector));
        }
        if !self.remaining.contains(&dest) {
            return Err(ConstraintViolation::NotPending(dest));
        }
        let mut seen = BTreeSet::new();
        for &v in &path.nodes {
            if self.mi_set.contains(&v) {
                return Err(ConstraintViolation::ExhaustedMi(v));
            }
            if (v != connector && self.tree.contains(v)) || !seen.insert(v) {
                return Err(ConstraintViolation::AlreadyInTree(v));
            }
        }
        if let Some(&v) = path.interior().iter().find(|v| self.remaining.contains(v)) {
            return Err(ConstraintViolation::PendingInterior(v));
        }
        let mut costs = Vec::with_capacity(path.hops());
        for e in path.edges() {
            costs.push(self.working.edge_cost(e).ok_or(ConstraintViolation::MissingLink(e))?);
        }

        // connector end first so every attach hangs off an existing node
        for (i, w) in path.nodes.windows(2).enumerate().rev() {
            self.tree.attach(w[1], w[0], costs[i]);
        }
        let root = self.tree.root;
        if connector != root && !self.working.is_mc(connector) {
            self.mc_set.remove(&connector);
            self.mi_set.insert(connector);
        }
        for &v in path.interior() {
            if self.working.is_mc(v) {
                self.mc_set.insert(v);
            } else {
                self.mi_set.insert(v);
            }
        }
        self.mc_set.insert(dest);
        self.remaining.remove(&dest);
        self.tree.served.insert(dest);
        Ok(())
    }

    /// `g` minus the exhausted MI nodes and the tree's links: the graph in
    /// which every path avoids `MI_SET` by construction.
    pub fn modified_graph(&self, g: &Topology) -> Topology {
        g.delete_from(&self.mi_set, &self.tree.edges).0
    }
}

// ---------------------------------------------------------------------------
// JSON form
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct SessionDoc {
    id: u64,
    source: NodeId,
    destinations: Vec<NodeId>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeDoc {
    serial: usize,
    wavelength: Option<u32>,
    edges: Vec<Edge>,
    served: Vec<NodeId>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ForestDoc {
    session: SessionDoc,
    trees: Vec<TreeDoc>,
}

fn compact<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("forest serializes")
}

#[derive(Debug, Error)]
pub enum ForestFormatError {
    #[error("invalid forest JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid session: {0}")]
    Session(#[from] SessionError),
}

impl LightForest {
    /// JSON with the session on one line and one line per tree. Field order
    /// is fixed: `session{id,source,destinations}`, then
    /// `trees[{serial,wavelength,edges,served}]`.
    pub fn to_json(&self) -> String {
        let doc = ForestDoc {
            session: SessionDoc {
                id: self.session.id,
                source: self.session.source,
                destinations: self.session.destinations.iter().copied().collect(),
            },
            trees: self
                .trees
                .iter()
                .map(|t| TreeDoc {
                    serial: t.serial,
                    wavelength: t.wavelength,
                    edges: t.edges.iter().copied().collect(),
                    served: t.served.iter().copied().collect(),
                })
                .collect(),
        };
        let trees: Vec<String> = doc.trees.iter().map(|t| format!("    {}", compact(t))).collect();
        format!("{{\n  \"session\": {},\n  \"trees\": [\n{}\n  ]\n}}\n", compact(&doc.session), trees.join(",\n"))
    }

    /// Parses the JSON produced by [`LightForest::to_json`]. Structural
    /// problems of the trees are left for [`validate_forest`] to report.
    pub fn from_json(g: &Topology, text: &str) -> Result<Self, ForestFormatError> {
        let doc: ForestDoc = serde_json::from_str(text)?;
        let session = MulticastSession::new(g, doc.session.id, doc.session.source, doc.session.destinations)?;
        let trees = doc
            .trees
            .into_iter()
            .map(|t| {
                let mut tree = LightTree::from_edges(g, session.source, t.serial, t.edges, t.served);
                tree.wavelength = t.wavelength;
                tree
            })
            .collect();
        Ok(LightForest { session, trees })
    }
}

impl fmt::Display for LightForest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.trees {
            let edges: Vec<String> = t.edges.iter().map(|e| e.to_string()).collect();
            let served: Vec<String> = t.served.iter().map(|n| n.to_string()).collect();
            write!(f, "tree {}", t.serial)?;
            if let Some(w) = t.wavelength {
                write!(f, " (λ{w})")?;
            }
            writeln!(f, ": serves {{{}}} links [{}]", served.join(","), edges.join(" "))?;
        }
        Ok(())
    }
}
