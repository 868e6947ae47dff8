#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use wdm_multicast::{Capability, MulticastSession, NodeId, Topology};

pub fn n(v: u32) -> NodeId {
    NodeId(v)
}

pub fn ids<'a>(it: impl IntoIterator<Item = &'a NodeId>) -> Vec<u32> {
    it.into_iter().map(|v| v.0).collect()
}

/// Connected graph on `1..=nodes`: a random spanning tree plus each other
/// pair with probability `extra`. Nodes are MC with probability `mc`; costs
/// are uniform integers in `1..=max_cost`.
pub fn random_connected(rng: &mut impl Rng, nodes: u32, extra: f64, mc: f64, max_cost: u32) -> Topology {
    let mut order: Vec<u32> = (1..=nodes).collect();
    order.shuffle(rng);
    let mut edges = BTreeSet::new();
    for i in 1..order.len() {
        let j = rng.gen_range(0..i);
        let (a, b) = (order[i].min(order[j]), order[i].max(order[j]));
        edges.insert((a, b));
    }
    for a in 1..=nodes {
        for b in a + 1..=nodes {
            if rng.gen_bool(extra) {
                edges.insert((a, b));
            }
        }
    }
    let caps: Vec<(NodeId, Capability)> =
        (1..=nodes).map(|v| (n(v), if rng.gen_bool(mc) { Capability::MC } else { Capability::MI })).collect();
    let costed: Vec<(NodeId, NodeId, f64)> =
        edges.into_iter().map(|(a, b)| (n(a), n(b), rng.gen_range(1..=max_cost) as f64)).collect();
    Topology::new("random", caps, costed).expect("valid random graph")
}

/// Random session with `k` destinations on a graph with ids `1..=N`.
pub fn random_session(rng: &mut impl Rng, g: &Topology, k: usize, id: u64) -> MulticastSession {
    let mut all: Vec<NodeId> = g.nodes().collect();
    all.shuffle(rng);
    MulticastSession::new(g, id, all[0], all[1..=k].iter().copied()).expect("valid session")
}

fn slot(v: NodeId) -> usize {
    v.0 as usize - 1
}

/// Plain array Dijkstra from `src`; `None` marks unreachable or absent nodes.
pub fn dijkstra(g: &Topology, src: NodeId) -> Vec<Option<f64>> {
    let size = g.id_bound();
    let mut dist: Vec<Option<f64>> = vec![None; size];
    let mut done = vec![false; size];
    dist[slot(src)] = Some(0.0);
    loop {
        let next = (0..size)
            .filter(|&i| !done[i] && dist[i].is_some())
            .min_by(|&a, &b| dist[a].unwrap().total_cmp(&dist[b].unwrap()));
        let Some(u) = next else { break };
        done[u] = true;
        let du = dist[u].unwrap();
        for &(v, w) in g.neighbors(NodeId(u as u32 + 1)) {
            let alt = du + w;
            if dist[slot(v)].is_none_or(|d| alt < d) {
                dist[slot(v)] = Some(alt);
            }
        }
    }
    dist
}

/// Minimum over every (destination, connector) pair of the pairwise
/// distance, as `(cost, dest, connector)` with ties on lowest ids.
pub fn pairwise_nearest(
    g: &Topology,
    connectors: &BTreeSet<NodeId>,
    dests: &BTreeSet<NodeId>,
) -> Option<(f64, NodeId, NodeId)> {
    let mut best: Option<(f64, NodeId, NodeId)> = None;
    for &c in connectors {
        let dist = dijkstra(g, c);
        for &d in dests.iter().filter(|d| !connectors.contains(d)) {
            if let Some(x) = dist[slot(d)] {
                let cand = (x, d, c);
                let better = match best {
                    None => true,
                    Some(b) => x < b.0 || (x == b.0 && (d, c) < (b.1, b.2)),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
    }
    best
}

pub fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = xs.into_iter().fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    sum / count as f64
}
