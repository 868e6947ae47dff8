//! Multicast routing in WDM networks with sparse light splitting.
//!
//! Only multicast-capable (MC) nodes can split light; multicast-incapable
//! (MI) nodes can forward to one outgoing link and drop locally. A session
//! that cannot fit in one light-tree is served by a light-forest, each tree
//! on its own wavelength.
//!
//! - [`topology`]: networks, parsing and the built-in test networks.
//! - [`lightforest`]: sessions, trees, forests, metrics and the grow state.
//! - [`routing`]: the Hypo-Steiner, Member-Only and Reroute-to-Source builders.
//! - [`wdm`]: wavelength occupancy and First-Fit admission.
//! - [`oracle`]: brute-force reference answers for small graphs.
//! - [`experiment`]: seeded batch experiments and their CSV output.

pub mod experiment;
pub mod lightforest;
pub mod oracle;
pub mod routing;
pub mod topology;
pub mod wdm;

pub use lightforest::{LightForest, LightTree, MulticastSession};
pub use routing::{build, AlgorithmKind, RoutingError};
pub use topology::{builtin_topology, parse_topology, Capability, Edge, NodeId, Path, Topology};
pub use wdm::WavelengthState;
