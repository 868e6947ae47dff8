//! Wavelength occupancy, First-Fit assignment and session admission.
//!
//! Occupancy is kept per undirected link: a tree using wavelength λ on a
//! fiber blocks λ in both directions. There is no wavelength conversion, so
//! a tree needs one slot free on every link it uses. Sessions never leave.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use crate::lightforest::{LightForest, LightTree};
use crate::topology::{Edge, Topology};

/// Who holds a slot on a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotOwner {
    pub session: u64,
    pub tree: usize,
}

/// Per-link occupancy of `W` wavelength slots, numbered `1..=W`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavelengthState {
    wavelengths: u32,
    occupancy: BTreeMap<Edge, BTreeMap<u32, SlotOwner>>,
}

/// Outcome of [`WavelengthState::admit_session`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissionResult {
    pub accepted: bool,
    /// Slot per tree, in forest order (empty when rejected).
    pub assignments: Vec<u32>,
    pub reason: Option<Blocking>,
}

/// Why a session was rejected: the first tree that found no common slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blocking {
    pub tree_serial: usize,
    /// Links of that tree with no free slot left at all; may be empty when
    /// the links are individually free but share no common slot.
    pub saturated: Vec<Edge>,
}

impl WavelengthState {
    /// Empty occupancy for every link of `g`.
    pub fn new(g: &Topology, wavelengths: u32) -> Self {
        assert!(wavelengths > 0, "W must be positive");
        WavelengthState { wavelengths, occupancy: g.edges().map(|(e, _)| (e, BTreeMap::new())).collect() }
    }

    pub fn wavelengths(&self) -> u32 {
        self.wavelengths
    }

    pub fn is_used(&self, e: Edge, slot: u32) -> bool {
        self.occupancy.get(&e).is_some_and(|m| m.contains_key(&slot))
    }

    /// Total used (link, slot) pairs.
    pub fn used_slots(&self) -> usize {
        self.occupancy.values().map(BTreeMap::len).sum()
    }

    pub fn occupancy(&self) -> impl Iterator<Item = (Edge, u32, SlotOwner)> + '_ {
        self.occupancy.iter().flat_map(|(&e, m)| m.iter().map(move |(&s, &o)| (e, s, o)))
    }

    /// Smallest slot free on every link of `tree` and not listed in
    /// `also_blocked`. Pure query.
    pub fn first_fit_assign(&self, tree: &LightTree, also_blocked: &HashSet<(Edge, u32)>) -> Option<u32> {
        (1..=self.wavelengths)
            .find(|&slot| tree.edges().iter().all(|&e| !self.is_used(e, slot) && !also_blocked.contains(&(e, slot))))
    }

    /// All-or-nothing admission. Trees are assigned in forest order; a tree
    /// must avoid slots already taken on its links by earlier trees of the
    /// same forest. On success every tree's slot is committed and written back
    /// into `forest`; on rejection the state is left untouched.
    pub fn admit_session(&mut self, forest: &mut LightForest) -> AdmissionResult {
        let mut claimed: HashSet<(Edge, u32)> = HashSet::new();
        let mut assignments = Vec::with_capacity(forest.trees.len());
        for t in &forest.trees {
            match self.first_fit_assign(t, &claimed) {
                Some(slot) => {
                    claimed.extend(t.edges().iter().map(|&e| (e, slot)));
                    assignments.push(slot);
                }
                None => {
                    let saturated = t
                        .edges()
                        .iter()
                        .copied()
                        .filter(|e| (1..=self.wavelengths).all(|s| self.is_used(*e, s) || claimed.contains(&(*e, s))))
                        .collect();
                    return AdmissionResult {
                        accepted: false,
                        assignments: Vec::new(),
                        reason: Some(Blocking { tree_serial: t.serial, saturated }),
                    };
                }
            }
        }
        for (t, &slot) in forest.trees.iter_mut().zip(&assignments) {
            let owner = SlotOwner { session: forest.session.id, tree: t.serial };
            for &e in t.edges() {
                let prev = self.occupancy.entry(e).or_default().insert(slot, owner);
                debug_assert!(prev.is_none());
            }
            t.wavelength = Some(slot);
        }
        AdmissionResult { accepted: true, assignments, reason: None }
    }

    /// Fraction of all `M·W` link slots in use.
    pub fn wavelength_efficiency(&self, g: &Topology) -> f64 {
        let total = g.edge_count() as f64 * self.wavelengths as f64;
        if total == 0.0 {
            return 0.0;
        }
        self.used_slots() as f64 / total
    }

    /// CSV dump: `edge_u,edge_v,slot,session_id,tree_serial`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge_u,edge_v,slot,session_id,tree_serial\n");
        for (e, slot, o) in self.occupancy() {
            let (u, v) = e.endpoints();
            writeln!(out, "{u},{v},{slot},{},{}", o.session, o.tree).unwrap();
        }
        out
    }

    /// Slots per link, for invariant checks.
    pub fn slots_on(&self, e: Edge) -> BTreeSet<u32> {
        self.occupancy.get(&e).map(|m| m.keys().copied().collect()).unwrap_or_default()
    }
}
