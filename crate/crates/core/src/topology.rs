//! Network graph model: nodes with a splitting capability, undirected weighted
//! fiber links, the `.topo` text format and the two shipped reference networks.
//!
//! A [`Topology`] is immutable once built. Derived graphs (the working graphs
//! used while growing a light-tree) are produced by [`Topology::delete_from`],
//! which always returns an independent copy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node identifier. Ids are 1-based in files and throughout the API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub(crate) fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// Light splitting capability of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Capability {
    /// Multicast capable: carries a splitter, may branch.
    MC,
    /// Multicast incapable: tap-and-continue only, at most one child.
    MI,
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Capability::MC => "MC",
            Capability::MI => "MI",
        })
    }
}

impl FromStr for Capability {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "MC" | "mc" => Ok(Capability::MC),
            "MI" | "mi" => Ok(Capability::MI),
            other => Err(format!("unknown splitting capability `{other}`")),
        }
    }
}

/// Undirected edge, stored with the smaller endpoint first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    a: NodeId,
    b: NodeId,
}

impl Edge {
    pub fn new(u: NodeId, v: NodeId) -> Self {
        if u <= v {
            Edge { a: u, b: v }
        } else {
            Edge { a: v, b: u }
        }
    }

    pub fn endpoints(self) -> (NodeId, NodeId) {
        (self.a, self.b)
    }

    pub fn contains(self, n: NodeId) -> bool {
        self.a == n || self.b == n
    }

    /// The endpoint opposite to `n`, if `n` is an endpoint.
    pub fn other(self, n: NodeId) -> Option<NodeId> {
        if self.a == n {
            Some(self.b)
        } else if self.b == n {
            Some(self.a)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

impl Serialize for Edge {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.a, self.b).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Edge {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (u, v) = <(NodeId, NodeId)>::deserialize(d)?;
        Ok(Edge::new(u, v))
    }
}

/// Simple path with its additive cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub cost: f64,
}

impl Path {
    pub fn single(n: NodeId) -> Self {
        Path { nodes: vec![n], cost: 0.0 }
    }

    pub fn first(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn last(&self) -> NodeId {
        *self.nodes.last().expect("path is never empty")
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.nodes.windows(2).map(|w| Edge::new(w[0], w[1]))
    }

    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Nodes strictly between the two endpoints.
    pub fn interior(&self) -> &[NodeId] {
        if self.nodes.len() <= 2 {
            &[]
        } else {
            &self.nodes[1..self.nodes.len() - 1]
        }
    }

    pub fn reversed(&self) -> Path {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Path { nodes, cost: self.cost }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
    #[error("unknown built-in topology `{0}` (expected nsf14 or longhaul28)")]
    UnknownBuiltin(String),
    #[error("node {0} is not part of the topology")]
    UnknownNode(NodeId),
    #[error("edge {0} is not part of the topology")]
    UnknownEdge(Edge),
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge {0}")]
    DuplicateEdge(Edge),
    #[error("edge {0} has non-positive cost {1}")]
    NonPositiveCost(Edge, f64),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseErrorKind {
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("missing `topology <name>` header")]
    MissingHeader,
    #[error("duplicate `topology` header")]
    DuplicateHeader,
    #[error("unknown node {0}")]
    UnknownNode(u32),
    #[error("duplicate node {0}")]
    DuplicateNode(u32),
    #[error("node ids must be contiguous 1..{expected}, found {found}")]
    NonContiguous { expected: usize, found: u32 },
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(u32, u32),
    #[error("self-loop at node {0}")]
    SelfLoop(u32),
    #[error("non-positive cost {0}")]
    NonPositiveCost(f64),
}

/// Undirected weighted graph `G(V, E, c)` with per-node splitting capability.
///
/// Node slots are indexed by `id - 1`; a slot is empty once the node has been
/// deleted from a derived graph, so ids stay stable across derivations.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    name: String,
    caps: Vec<Option<Capability>>,
    adj: Vec<Vec<(NodeId, f64)>>,
    edges: BTreeMap<Edge, f64>,
}

impl Topology {
    /// Builds a topology from explicit node and edge lists.
    pub fn new(
        name: impl Into<String>,
        nodes: impl IntoIterator<Item = (NodeId, Capability)>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, f64)>,
    ) -> Result<Self, TopologyError> {
        let mut t = Topology { name: name.into(), caps: Vec::new(), adj: Vec::new(), edges: BTreeMap::new() };
        for (id, cap) in nodes {
            t.insert_node(id, cap);
        }
        for (u, v, c) in edges {
            t.insert_edge(u, v, c)?;
        }
        Ok(t)
    }

    fn insert_node(&mut self, id: NodeId, cap: Capability) {
        assert!(id.0 >= 1, "node ids are 1-based");
        if self.caps.len() < id.0 as usize {
            self.caps.resize(id.0 as usize, None);
            self.adj.resize(id.0 as usize, Vec::new());
        }
        self.caps[id.index()] = Some(cap);
    }

    fn insert_edge(&mut self, u: NodeId, v: NodeId, cost: f64) -> Result<(), TopologyError> {
        if !self.contains(u) {
            return Err(TopologyError::UnknownNode(u));
        }
        if !self.contains(v) {
            return Err(TopologyError::UnknownNode(v));
        }
        if u == v {
            return Err(TopologyError::SelfLoop(u));
        }
        let e = Edge::new(u, v);
        if !(cost > 0.0 && cost.is_finite()) {
            return Err(TopologyError::NonPositiveCost(e, cost));
        }
        if self.edges.contains_key(&e) {
            return Err(TopologyError::DuplicateEdge(e));
        }
        self.edges.insert(e, cost);
        for (x, y) in [(u, v), (v, u)] {
            let list = &mut self.adj[x.index()];
            let pos = list.partition_point(|(n, _)| *n < y);
            list.insert(pos, (y, cost));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of nodes `N`.
    pub fn node_count(&self) -> usize {
        self.caps.iter().filter(|c| c.is_some()).count()
    }

    /// Number of edges `M`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Largest id slot; ids of present nodes are all `<= id_bound()`.
    pub fn id_bound(&self) -> usize {
        self.caps.len()
    }

    pub fn contains(&self, n: NodeId) -> bool {
        n.0 >= 1 && self.caps.get(n.index()).is_some_and(|c| c.is_some())
    }

    pub fn capability(&self, n: NodeId) -> Option<Capability> {
        self.caps.get(n.index()).copied().flatten()
    }

    pub fn is_mc(&self, n: NodeId) -> bool {
        self.capability(n) == Some(Capability::MC)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.caps.iter().enumerate().filter(|(_, c)| c.is_some()).map(|(i, _)| NodeId(i as u32 + 1))
    }

    pub fn edges(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.edges.iter().map(|(e, c)| (*e, *c))
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn edge_cost(&self, e: Edge) -> Option<f64> {
        self.edges.get(&e).copied()
    }

    /// Neighbors of `n` in ascending id order, with link costs.
    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, f64)] {
        self.adj.get(n.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Cost of a node sequence, if every consecutive pair is a link.
    pub fn path_cost(&self, nodes: &[NodeId]) -> Option<f64> {
        nodes.windows(2).map(|w| self.edge_cost(Edge::new(w[0], w[1]))).sum()
    }

    /// Copy of this topology with the given nodes set to MC and every other
    /// node set to MI.
    pub fn with_mc_nodes(&self, mc: &BTreeSet<NodeId>) -> Topology {
        let mut t = self.clone();
        for (i, cap) in t.caps.iter_mut().enumerate() {
            if cap.is_some() {
                let id = NodeId(i as u32 + 1);
                *cap = Some(if mc.contains(&id) { Capability::MC } else { Capability::MI });
            }
        }
        t
    }

    /// Derived graph with `nodes` (and their incident links) and `edges`
    /// removed. Elements absent from `self` are ignored; the returned flag is
    /// `true` when at least one requested element was missing.
    pub fn delete_from<'a>(
        &self,
        nodes: impl IntoIterator<Item = &'a NodeId>,
        edges: impl IntoIterator<Item = &'a Edge>,
    ) -> (Topology, bool) {
        let mut t = self.clone();
        let mut missing = false;
        for &e in edges {
            missing |= !t.remove_edge(e);
        }
        for &n in nodes {
            if !t.contains(n) {
                missing = true;
                continue;
            }
            let incident: Vec<Edge> = t.adj[n.index()].iter().map(|(m, _)| Edge::new(n, *m)).collect();
            for e in incident {
                t.remove_edge(e);
            }
            t.caps[n.index()] = None;
        }
        (t, missing)
    }

    fn remove_edge(&mut self, e: Edge) -> bool {
        if self.edges.remove(&e).is_none() {
            return false;
        }
        let (u, v) = e.endpoints();
        self.adj[u.index()].retain(|(n, _)| *n != v);
        self.adj[v.index()].retain(|(n, _)| *n != u);
        true
    }

    /// Renders the topology in the `.topo` text format.
    pub fn render(&self) -> String {
        let mut out = format!("topology {}\n", self.name);
        for n in self.nodes() {
            out.push_str(&format!("node {} {}\n", n, self.capability(n).unwrap()));
        }
        for (e, c) in self.edges() {
            let (u, v) = e.endpoints();
            if c == 1.0 {
                out.push_str(&format!("edge {u} {v}\n"));
            } else {
                out.push_str(&format!("edge {u} {v} {c}\n"));
            }
        }
        out
    }
}

/// Parses the line-oriented `.topo` format:
///
/// ```text
/// topology <name>
/// node <id> <MC|MI>
/// edge <u> <v> [cost]     # cost defaults to 1
/// ```
///
/// `#` starts a comment. Nodes must be declared before the edges that use
/// them and ids must be exactly `1..=N`.
pub fn parse_topology(text: &str) -> Result<Topology, TopologyError> {
    let err = |line: usize, kind: ParseErrorKind| TopologyError::Parse { line, kind };
    let mut name: Option<String> = None;
    let mut node_lines: BTreeMap<u32, usize> = BTreeMap::new();
    let mut topo = Topology { name: String::new(), caps: Vec::new(), adj: Vec::new(), edges: BTreeMap::new() };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let malformed = || err(line_no, ParseErrorKind::Malformed(line.to_string()));
        match fields[0] {
            "topology" => {
                if fields.len() != 2 {
                    return Err(malformed());
                }
                if name.is_some() {
                    return Err(err(line_no, ParseErrorKind::DuplicateHeader));
                }
                name = Some(fields[1].to_string());
            }
            "node" => {
                if name.is_none() {
                    return Err(err(line_no, ParseErrorKind::MissingHeader));
                }
                if fields.len() != 3 {
                    return Err(malformed());
                }
                let id: u32 = fields[1].parse().map_err(|_| malformed())?;
                if id == 0 {
                    return Err(malformed());
                }
                let cap: Capability = fields[2].parse().map_err(|_| malformed())?;
                if node_lines.insert(id, line_no).is_some() {
                    return Err(err(line_no, ParseErrorKind::DuplicateNode(id)));
                }
                topo.insert_node(NodeId(id), cap);
            }
            "edge" => {
                if name.is_none() {
                    return Err(err(line_no, ParseErrorKind::MissingHeader));
                }
                if !(3..=4).contains(&fields.len()) {
                    return Err(malformed());
                }
                let u: u32 = fields[1].parse().map_err(|_| malformed())?;
                let v: u32 = fields[2].parse().map_err(|_| malformed())?;
                let cost: f64 = match fields.get(3) {
                    Some(c) => c.parse().map_err(|_| malformed())?,
                    None => 1.0,
                };
                for id in [u, v] {
                    if !node_lines.contains_key(&id) {
                        return Err(err(line_no, ParseErrorKind::UnknownNode(id)));
                    }
                }
                topo.insert_edge(NodeId(u), NodeId(v), cost).map_err(|e| match e {
                    TopologyError::SelfLoop(_) => err(line_no, ParseErrorKind::SelfLoop(u)),
                    TopologyError::DuplicateEdge(_) => err(line_no, ParseErrorKind::DuplicateEdge(u, v)),
                    TopologyError::NonPositiveCost(_, c) => err(line_no, ParseErrorKind::NonPositiveCost(c)),
                    other => other,
                })?;
            }
            _ => return Err(malformed()),
        }
    }

    topo.name = name.ok_or(err(0, ParseErrorKind::MissingHeader))?;
    let n = node_lines.len();
    if let Some((&found, &line)) = node_lines.iter().find(|(&id, _)| id as usize > n) {
        return Err(err(line, ParseErrorKind::NonContiguous { expected: n, found }));
    }
    Ok(topo)
}

const NSF14: &str = include_str!("../topologies/nsf14.topo");
const LONGHAUL28: &str = include_str!("../topologies/longhaul28.topo");

/// Names accepted by [`builtin_topology`].
pub const BUILTIN_NAMES: [&str; 2] = ["nsf14", "longhaul28"];

/// Returns one of the embedded reference topologies.
pub fn builtin_topology(name: &str) -> Result<Topology, TopologyError> {
    let text = match name {
        "nsf14" => NSF14,
        "longhaul28" => LONGHAUL28,
        other => return Err(TopologyError::UnknownBuiltin(other.to_string())),
    };
    Ok(parse_topology(text).expect("embedded topology parses"))
}
