use crate::lightforest::{GrowState, LightForest, MulticastSession};
use crate::topology::{NodeId, Topology};

use super::{check_session, nearest_destination, RoutingError, Trace, TraceStep};

/// Hypo-Steiner light-forest.
///
/// Each tree starts on a fresh copy of `g` with `MC_SET = {s}`. Every step
/// connects the nearest pending destination in the current working graph,
/// then derives the next working graph by deleting the path's links, its MI
/// interior nodes and the connector when it is a non-root MI node. The
/// destination itself stays: it is a leaf and may serve as a connector once.
/// The tree closes when no pending destination is reachable any more.
pub fn hslt_build(g: &Topology, ms: &MulticastSession) -> Result<LightForest, RoutingError> {
    build(g, ms, None)
}

pub(super) fn build(
    g: &Topology,
    ms: &MulticastSession,
    mut trace: Option<&mut Trace>,
) -> Result<LightForest, RoutingError> {
    check_session(g, ms)?;
    let mut trees = Vec::new();
    let mut remaining = ms.destinations.clone();

    while !remaining.is_empty() {
        let mut st = GrowState::new(g.clone(), ms.source, trees.len() + 1, remaining);
        loop {
            let choice = nearest_destination(&st.working, &st.mc_set, &st.remaining)?;
            if let Some(t) = trace.as_deref_mut() {
                t.sweeps += 1;
                t.steps.push(TraceStep { state: st.clone(), choice: choice.clone() });
            }
            let Some(c) = choice else { break };

            let mut doomed: Vec<NodeId> = c.path.interior().iter().copied().filter(|&v| !st.working.is_mc(v)).collect();
            if c.connector != ms.source && !st.working.is_mc(c.connector) {
                doomed.push(c.connector);
            }
            let used: Vec<_> = c.path.edges().collect();
            st.extend(&c.path, c.connector, c.dest)?;
            st.working = st.working.delete_from(&doomed, &used).0;
        }
        remaining = std::mem::take(&mut st.remaining);
        trees.push(st.tree);
    }
    Ok(LightForest { session: ms.clone(), trees })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::lightforest::{forest_cost, link_stress, validate_forest};
    use crate::topology::{builtin_topology, Edge};

    fn n(v: u32) -> NodeId {
        NodeId(v)
    }

    fn edges(pairs: &[(u32, u32)]) -> BTreeSet<Edge> {
        pairs.iter().map(|&(u, v)| Edge::new(n(u), n(v))).collect()
    }

    #[test]
    fn four_and_six_share_one_tree() {
        let g = builtin_topology("nsf14").unwrap();
        let ms = MulticastSession::new(&g, 1, n(8), [n(4), n(6)]).unwrap();
        let f = hslt_build(&g, &ms).unwrap();
        assert_eq!(link_stress(&f), 1);
        assert_eq!(f.trees[0].edges(), &edges(&[(8, 7), (7, 5), (5, 4), (8, 10), (10, 11), (11, 6)]));
        assert_eq!(forest_cost(&f), 6.0);
        assert!(validate_forest(&g, &f).is_empty());
    }

    #[test]
    fn nine_to_eleven_share_one_tree() {
        let g = builtin_topology("nsf14").unwrap();
        let ms = MulticastSession::new(&g, 2, n(8), [n(9), n(10), n(11)]).unwrap();
        let mut trace = Trace::default();
        let f = build(&g, &ms, Some(&mut trace)).unwrap();
        assert_eq!(link_stress(&f), 1);
        assert_eq!(f.trees[0].edges(), &edges(&[(8, 10), (10, 11), (8, 7), (7, 5), (5, 4), (4, 9)]));
        let order: Vec<u32> = trace.connections().map(|(_, c)| c.dest.0).collect();
        assert_eq!(order, vec![10, 11, 9]);
        // before the third connection
        let st = &trace.steps[2].state;
        assert_eq!(st.mc_set, BTreeSet::from([n(8), n(11)]));
        assert_eq!(st.mi_set, BTreeSet::from([n(10)]));
        assert!(!st.working.contains(n(10)));
        assert_eq!(trace.sweeps, 3 + 1);
    }

    #[test]
    fn neighbor_destination_is_one_link() {
        let g = builtin_topology("nsf14").unwrap();
        let ms = MulticastSession::new(&g, 0, n(8), [n(7)]).unwrap();
        let f = hslt_build(&g, &ms).unwrap();
        assert_eq!((link_stress(&f), forest_cost(&f)), (1, 1.0));
    }

    #[test]
    fn unreachable_destination_is_rejected() {
        let g = builtin_topology("nsf14").unwrap();
        let (cut, _) = g.delete_from(&[n(7), n(10)], &[]);
        let ms = MulticastSession::new(&cut, 0, n(8), [n(1)]).unwrap();
        assert_eq!(hslt_build(&cut, &ms), Err(RoutingError::Unreachable(n(1))));
    }
}
