mod common;

use std::collections::{BTreeSet, HashMap};

use common::{pairwise_nearest, random_connected, random_session};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wdm_multicast::experiment::{
    quality_samples, quality_scenario, run_throughput_stream, ExperimentConfig, GroupSize,
};
use wdm_multicast::lightforest::{forest_cost, link_stress, validate_forest, validate_tree, GrowState};
use wdm_multicast::oracle::{min_stress_forest, shortest_feasible_path, OracleBudget};
use wdm_multicast::routing::{build_traced, nearest_destination, Trace};
use wdm_multicast::{
    build, builtin_topology, parse_topology, AlgorithmKind, Edge, LightForest, MulticastSession, NodeId, Topology,
    WavelengthState,
};

/// Random connected instance: graph on 3..=`max_nodes` nodes and a session.
fn instance(seed: u64, max_nodes: u32, max_cost: u32) -> (Topology, MulticastSession) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = rng.gen_range(3..=max_nodes);
    let extra = rng.gen_range(0.0..0.5);
    let mc = rng.gen_range(0.0..0.6);
    let g = random_connected(&mut rng, nodes, extra, mc, max_cost);
    let k = rng.gen_range(1..nodes as usize);
    let ms = random_session(&mut rng, &g, k, seed);
    (g, ms)
}

fn traced(kind: AlgorithmKind, g: &Topology, ms: &MulticastSession) -> (LightForest, Trace) {
    let mut t = Trace::default();
    let f = build_traced(kind, g, ms, Some(&mut t)).unwrap();
    (f, t)
}

/// MC_SET, MI_SET and the tree agree after every step.
fn check_roles(g: &Topology, st: &GrowState) -> Result<(), TestCaseError> {
    let root = st.tree.root();
    prop_assert!(st.mc_set.is_disjoint(&st.mi_set));
    let mut mc = BTreeSet::from([root]);
    let mut mi = BTreeSet::new();
    for v in st.tree.nodes() {
        if v == root {
            continue;
        }
        let leaf = st.tree.child_count(v) == 0;
        if g.is_mc(v) || leaf {
            mc.insert(v);
        } else {
            mi.insert(v);
        }
    }
    prop_assert_eq!(&st.mc_set, &mc);
    prop_assert_eq!(&st.mi_set, &mi);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn forests_partition_the_destinations(seed in any::<u64>()) {
        let (g, ms) = instance(seed, 14, 3);
        for kind in AlgorithmKind::ALL {
            let f = build(kind, &g, &ms).unwrap();
            prop_assert!(validate_forest(&g, &f).is_empty(), "{}: {:?}", kind, validate_forest(&g, &f));
            let mut seen = BTreeSet::new();
            for t in &f.trees {
                prop_assert!(!t.served().is_empty());
                for d in t.served() {
                    prop_assert!(seen.insert(*d));
                }
            }
            prop_assert_eq!(&seen, &ms.destinations);
            let total: usize = f.trees.iter().map(|t| t.served().len()).sum();
            prop_assert_eq!(total, ms.size());
        }
    }

    #[test]
    fn grow_states_keep_roles_consistent(seed in any::<u64>()) {
        let (g, ms) = instance(seed, 12, 2);
        for kind in [AlgorithmKind::Hslt, AlgorithmKind::MemberOnly] {
            let (_, trace) = traced(kind, &g, &ms);
            for step in &trace.steps {
                check_roles(&g, &step.state)?;
                prop_assert!(validate_tree(&g, &step.state.tree).is_empty());
            }
        }
    }

    #[test]
    fn hslt_paths_avoid_exhausted_nodes(seed in any::<u64>()) {
        let (g, ms) = instance(seed, 14, 3);
        let (_, trace) = traced(AlgorithmKind::Hslt, &g, &ms);
        for step in &trace.steps {
            let Some(c) = &step.choice else { continue };
            let st = &step.state;
            prop_assert!(c.path.nodes.iter().all(|v| !st.mi_set.contains(v)));
            prop_assert!(c.path.nodes[..c.path.nodes.len() - 1].iter().all(|v| !st.tree.contains(*v)));
            prop_assert!(st.mc_set.contains(&c.connector));
            prop_assert_eq!(g.path_cost(&c.path.nodes), Some(c.path.cost));
        }
    }

    #[test]
    fn first_connection_is_shared(seed in any::<u64>()) {
        let (g, ms) = instance(seed, 14, 3);
        let (_, h) = traced(AlgorithmKind::Hslt, &g, &ms);
        let (_, m) = traced(AlgorithmKind::MemberOnly, &g, &ms);
        prop_assert_eq!(&h.steps[0].choice, &m.steps[0].choice);
    }

    #[test]
    fn hslt_dominates_member_only_per_state(seed in any::<u64>()) {
        let (g, ms) = instance(seed, 14, 3);
        let (_, trace) = traced(AlgorithmKind::MemberOnly, &g, &ms);
        for step in &trace.steps {
            let Some(c) = &step.choice else { continue };
            let st = &step.state;
            let h = nearest_destination(&st.modified_graph(&g), &st.mc_set, &st.remaining).unwrap();
            let h = h.expect("a qualifying Member-Only pair survives in the modified graph");
            prop_assert!(h.path.cost <= c.path.cost);
        }
    }

    #[test]
    fn hslt_connections_are_minimal(seed in any::<u64>()) {
        let (g, ms) = instance(seed, 8, 3);
        let (_, trace) = traced(AlgorithmKind::Hslt, &g, &ms);
        let budget = OracleBudget::default();
        for step in &trace.steps {
            let st = &step.state;
            let mut best: Option<f64> = None;
            for &d in &st.remaining {
                if let Some(p) = shortest_feasible_path(&g, st, d, &budget).unwrap() {
                    best = Some(best.map_or(p.cost, |b: f64| b.min(p.cost)));
                }
            }
            prop_assert_eq!(best, step.choice.as_ref().map(|c| c.path.cost));
        }
    }

    #[test]
    fn multi_source_sweep_matches_pairwise(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = rng.gen_range(2..=20);
        let mut g = random_connected(&mut rng, nodes, 0.15, 0.3, 4);
        let cut: Vec<NodeId> = g.nodes().filter(|_| rng.gen_bool(0.1)).collect();
        g = g.delete_from(&cut, &[]).0;
        let live: Vec<NodeId> = g.nodes().collect();
        prop_assume!(!live.is_empty());
        let connectors: BTreeSet<NodeId> = live.iter().copied().filter(|_| rng.gen_bool(0.3)).collect();
        let dests: BTreeSet<NodeId> = live.iter().copied().filter(|v| !connectors.contains(v) && rng.gen_bool(0.4)).collect();
        let got = nearest_destination(&g, &connectors, &dests).unwrap();
        let want = pairwise_nearest(&g, &connectors, &dests);
        prop_assert_eq!(got.as_ref().map(|c| (c.path.cost, c.dest, c.connector)), want);
        if let Some(c) = got {
            prop_assert_eq!(c.path.first(), c.dest);
            prop_assert_eq!(g.path_cost(&c.path.nodes), Some(c.path.cost));
        }
    }

    #[test]
    fn hslt_cost_is_bounded(seed in any::<u64>()) {
        let (g, ms) = instance(seed, 16, 1);
        let f = build(AlgorithmKind::Hslt, &g, &ms).unwrap();
        let n = g.node_count() as f64;
        let cost = forest_cost(&f);
        prop_assert!(cost >= ms.size() as f64);
        prop_assert!(cost <= n * (n - 1.0) / 2.0);
    }

    #[test]
    fn heuristics_never_beat_the_minimum_stress(seed in any::<u64>()) {
        let (g, ms) = instance(seed, 7, 2);
        let best = min_stress_forest(&g, &ms, &OracleBudget::default()).unwrap().unwrap();
        for kind in AlgorithmKind::ALL {
            prop_assert!(link_stress(&build(kind, &g, &ms).unwrap()) >= best.trees);
        }
    }

    #[test]
    fn all_splitters_give_one_tree(seed in any::<u64>()) {
        let (g, ms) = instance(seed, 14, 3);
        let g = g.with_mc_nodes(&g.nodes().collect());
        for kind in AlgorithmKind::ALL {
            prop_assert_eq!(link_stress(&build(kind, &g, &ms).unwrap()), 1);
        }
    }

    #[test]
    fn topology_text_round_trips(seed in any::<u64>()) {
        let (g, _) = instance(seed, 14, 5);
        let back = parse_topology(&g.render()).unwrap();
        prop_assert_eq!(back.render(), g.render());
        prop_assert_eq!(back.edge_count(), g.edge_count());
        let adj_edges: usize = g.nodes().map(|v| g.neighbors(v).len()).sum();
        prop_assert_eq!(adj_edges, 2 * g.edge_count());
    }

    #[test]
    fn deletion_only_shrinks(seed in any::<u64>(), frac in 0.0f64..0.5) {
        let (g, _) = instance(seed, 14, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
        let nodes: Vec<NodeId> = g.nodes().filter(|_| rng.gen_bool(frac)).collect();
        let edges: Vec<Edge> = g.edges().map(|(e, _)| e).filter(|_| rng.gen_bool(frac)).collect();
        let (h, missing) = g.delete_from(&nodes, &edges);
        prop_assert!(!missing);
        prop_assert!(h.nodes().all(|v| g.contains(v) && !nodes.contains(&v)));
        prop_assert!(h.edges().all(|(e, c)| g.edge_cost(e) == Some(c) && !edges.contains(&e)));
        prop_assert_eq!(g.delete_from(&[], &[]).0.render(), g.render());
    }

    #[test]
    fn forest_json_round_trips(seed in any::<u64>()) {
        let (g, ms) = instance(seed, 14, 3);
        for kind in AlgorithmKind::ALL {
            let f = build(kind, &g, &ms).unwrap();
            let back = LightForest::from_json(&g, &f.to_json()).unwrap();
            prop_assert_eq!(back.to_json(), f.to_json());
            prop_assert!(validate_forest(&g, &back).is_empty());
        }
    }

    #[test]
    fn admission_respects_wavelength_constraints(seed in any::<u64>(), w in 1u32..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected(&mut rng, 10, 0.2, 0.3, 1);
        let mut state = WavelengthState::new(&g, w);
        let mut admitted: Vec<LightForest> = Vec::new();
        for id in 0..30 {
            let k = rng.gen_range(1..=5);
            let ms = random_session(&mut rng, &g, k, id);
            let mut f = build(AlgorithmKind::Hslt, &g, &ms).unwrap();
            let before = state.clone();
            let r = state.admit_session(&mut f);
            if r.accepted {
                prop_assert_eq!(r.assignments.len(), f.trees.len());
                admitted.push(f);
            } else {
                prop_assert_eq!(&state, &before);
            }
        }
        let mut claims: HashMap<(Edge, u32), (u64, usize)> = HashMap::new();
        for f in &admitted {
            for t in &f.trees {
                let slot = t.wavelength.unwrap();
                prop_assert!((1..=w).contains(&slot));
                for &e in t.edges() {
                    prop_assert!(claims.insert((e, slot), (f.session.id, t.serial)).is_none());
                }
            }
        }
        prop_assert_eq!(claims.len(), state.used_slots());
        let manual = claims.len() as f64 / (g.edge_count() as f64 * w as f64);
        prop_assert_eq!(state.wavelength_efficiency(&g), manual);
    }
}

#[test]
fn parallel_quality_matches_sequential() {
    let g = builtin_topology("longhaul28").unwrap();
    let cfg = ExperimentConfig { sessions: 64, group_size: GroupSize::Uniform(2, 28), seed: 11, ..Default::default() };
    for kind in AlgorithmKind::ALL {
        let par = quality_samples(&g, &cfg, kind, 5);
        for (i, got) in par.iter().enumerate() {
            let sc = quality_scenario(&g, &cfg, 5, i as u64);
            let f = build(kind, &sc.network(&g), &sc.session).unwrap();
            let got = got.as_ref().unwrap();
            assert_eq!(got.stress, link_stress(&f));
            assert_eq!(got.cost, forest_cost(&f));
        }
    }
}

#[test]
fn throughput_stream_accounting() {
    let g = builtin_topology("longhaul28").unwrap();
    for seed in 0..10 {
        let out = run_throughput_stream(&g, AlgorithmKind::Hslt, GroupSize::Uniform(3, 28), 4, 20, seed);
        let sessions: BTreeSet<u64> = out.state.occupancy().map(|(_, _, o)| o.session).collect();
        assert_eq!(sessions.len(), out.row.accepted);
        assert_eq!(out.row.efficiency, out.state.used_slots() as f64 / (43.0 * 20.0));
    }
}
