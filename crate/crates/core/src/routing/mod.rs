//! Light-forest construction.
//!
//! Three builders share one contract: given a topology and a valid session
//! they return a [`LightForest`] whose trees respect the splitting constraint
//! and whose served sets partition the destinations.
//!
//! * [`hslt_build`]: grows each tree in a working graph from which exhausted
//!   MI nodes and used links are deleted after every connection, so the
//!   nearest destination is always reachable by a constraint-satisfying path.
//! * [`member_only_build`]: connects the nearest destination only through the
//!   original-graph shortest path, closing the tree when every such path is
//!   blocked.
//! * [`reroute_to_source_build`]: splits the source shortest-path tree at
//!   every overloaded MI node.
//!
//! Tie-breaking is deterministic everywhere: lowest destination id, then
//! lowest connector id, then the lexicographically smallest path.

mod hslt;
mod member_only;
mod reroute;
mod shortest;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lightforest::{ConstraintViolation, GrowState, LightForest, MulticastSession};
use crate::topology::{NodeId, Path, Topology};

pub use hslt::hslt_build;
pub use member_only::{member_only_build, member_only_select};
pub use reroute::reroute_to_source_build;
pub use shortest::{nearest_destination, shortest_path};

pub(crate) use shortest::{distances_from, walk};

/// One connection step: `path` runs from `dest` to `connector`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionChoice {
    pub dest: NodeId,
    pub connector: NodeId,
    pub path: Path,
}

impl fmt::Display for ConnectionChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "connect {} to {} via {} (cost {})", self.dest, self.connector, self.path, self.path.cost)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmKind {
    Hslt,
    MemberOnly,
    RerouteToSource,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 3] =
        [AlgorithmKind::Hslt, AlgorithmKind::MemberOnly, AlgorithmKind::RerouteToSource];

    pub fn short_name(self) -> &'static str {
        match self {
            AlgorithmKind::Hslt => "hslt",
            AlgorithmKind::MemberOnly => "mo",
            AlgorithmKind::RerouteToSource => "r2s",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hslt" | "hypo-steiner" => Ok(AlgorithmKind::Hslt),
            "mo" | "member-only" => Ok(AlgorithmKind::MemberOnly),
            "r2s" | "reroute-to-source" => Ok(AlgorithmKind::RerouteToSource),
            other => Err(format!("unknown algorithm `{other}` (expected hslt, mo or r2s)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("node {0} is not part of the topology")]
    UnknownNode(NodeId),
    #[error("destination {0} is unreachable from the source")]
    Unreachable(NodeId),
    #[error("session does not belong to this topology: {0}")]
    InvalidSession(String),
    #[error("internal constraint violation: {0}")]
    Constraint(#[from] ConstraintViolation),
}

/// One selection step of a grow-based builder: the state before selection
/// and what was chosen. `choice == None` closes the tree.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub state: GrowState,
    pub choice: Option<ConnectionChoice>,
}

/// Construction trace of one forest.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    /// Shortest-path sweeps performed (HSLT: one per selection).
    pub sweeps: usize,
}

impl Trace {
    pub fn connections(&self) -> impl Iterator<Item = (usize, &ConnectionChoice)> {
        self.steps.iter().filter_map(|s| s.choice.as_ref().map(|c| (s.state.tree.serial, c)))
    }
}

/// Runs the builder selected by `kind`.
pub fn build(kind: AlgorithmKind, g: &Topology, ms: &MulticastSession) -> Result<LightForest, RoutingError> {
    build_traced(kind, g, ms, None)
}

/// Like [`build`], recording every selection step into `trace` when given.
pub fn build_traced(
    kind: AlgorithmKind,
    g: &Topology,
    ms: &MulticastSession,
    trace: Option<&mut Trace>,
) -> Result<LightForest, RoutingError> {
    match kind {
        AlgorithmKind::Hslt => hslt::build(g, ms, trace),
        AlgorithmKind::MemberOnly => member_only::build(g, ms, trace),
        AlgorithmKind::RerouteToSource => reroute::build(g, ms),
    }
}

/// Checks the session against `g` and that every destination is reachable
/// from the source in `g`.
pub(crate) fn check_session(g: &Topology, ms: &MulticastSession) -> Result<(), RoutingError> {
    MulticastSession::new(g, ms.id, ms.source, ms.destinations.iter().copied())
        .map_err(|e| RoutingError::InvalidSession(e.to_string()))?;
    let labels = distances_from(g, ms.source);
    match ms.destinations.iter().find(|d| labels[d.index()].is_none()) {
        Some(&d) => Err(RoutingError::Unreachable(d)),
        None => Ok(()),
    }
}
