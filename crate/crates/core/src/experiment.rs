//! Random scenarios and batch experiments.
//!
//! Every random draw comes from a ChaCha stream derived from the base seed
//! and the scenario's index, never from execution order, so sequential and
//! parallel runs give bit-identical results.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::lightforest::{first_tree_destinations, forest_cost, link_stress, LightForest, MulticastSession};
use crate::routing::{build, AlgorithmKind, RoutingError};
use crate::topology::{NodeId, Topology};
use crate::wdm::WavelengthState;

/// Group size `K + 1` (source included).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupSize {
    Fixed(usize),
    /// Uniform on the inclusive range.
    Uniform(usize, usize),
}

impl GroupSize {
    fn bounds(self) -> (usize, usize) {
        match self {
            GroupSize::Fixed(n) => (n, n),
            GroupSize::Uniform(lo, hi) => (lo, hi),
        }
    }

    fn draw(self, rng: &mut impl Rng) -> usize {
        match self {
            GroupSize::Fixed(n) => n,
            GroupSize::Uniform(lo, hi) => rng.gen_range(lo..=hi),
        }
    }
}

impl fmt::Display for GroupSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSize::Fixed(n) => write!(f, "{n}"),
            GroupSize::Uniform(lo, hi) => write!(f, "{lo}:{hi}"),
        }
    }
}

impl FromStr for GroupSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad group size `{s}`"));
        match s.split_once(':') {
            Some((lo, hi)) => Ok(GroupSize::Uniform(num(lo)?, num(hi)?)),
            None => Ok(GroupSize::Fixed(num(s)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("group size {0} out of range 2..={1}")]
    GroupSize(usize, usize),
    #[error("MC count {0} exceeds node count {1}")]
    McCount(usize, usize),
    #[error("session count must be at least 1")]
    NoSessions,
    #[error("wavelength count must be at least 1")]
    NoWavelengths,
    #[error("no algorithms selected")]
    NoAlgorithms,
    #[error("topology node ids must be contiguous 1..N")]
    SparseIds,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub algorithms: Vec<AlgorithmKind>,
    pub group_size: GroupSize,
    /// MC counts to sweep (quality) or the single count used (throughput: first entry).
    pub mc_counts: Vec<usize>,
    /// Sessions per configuration (quality) or seed streams (throughput).
    pub sessions: usize,
    pub wavelengths: u32,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithms: AlgorithmKind::ALL.to_vec(),
            group_size: GroupSize::Fixed(7),
            mc_counts: vec![0],
            sessions: 1000,
            wavelengths: 20,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self, g: &Topology) -> Result<(), ConfigError> {
        let n = g.node_count();
        if g.id_bound() != n {
            return Err(ConfigError::SparseIds);
        }
        let (lo, hi) = self.group_size.bounds();
        for size in [lo, hi] {
            if !(2..=n).contains(&size) {
                return Err(ConfigError::GroupSize(size, n));
            }
        }
        if lo > hi {
            return Err(ConfigError::GroupSize(lo, n));
        }
        if let Some(&mc) = self.mc_counts.iter().find(|&&mc| mc > n) {
            return Err(ConfigError::McCount(mc, n));
        }
        if self.sessions == 0 {
            return Err(ConfigError::NoSessions);
        }
        if self.wavelengths == 0 {
            return Err(ConfigError::NoWavelengths);
        }
        if self.algorithms.is_empty() {
            return Err(ConfigError::NoAlgorithms);
        }
        Ok(())
    }
}

/// RNG for one `(purpose, key, index)` slot of a seeded experiment.
pub fn stream_rng(seed: u64, purpose: u64, key: u64, index: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&purpose.to_le_bytes());
    bytes[16..24].copy_from_slice(&key.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(index);
    rng
}

/// Draws `mc_count` distinct MC nodes uniformly.
pub fn gen_mc_placement(rng: &mut impl Rng, g: &Topology, mc_count: usize) -> BTreeSet<NodeId> {
    let nodes: Vec<NodeId> = g.nodes().collect();
    sample(rng, nodes.len(), mc_count).into_iter().map(|i| nodes[i]).collect()
}

/// Draws a group of `K + 1` distinct nodes uniformly; the first one drawn is
/// the source.
pub fn gen_session(rng: &mut impl Rng, g: &Topology, group: GroupSize, id: u64) -> MulticastSession {
    let nodes: Vec<NodeId> = g.nodes().collect();
    let size = group.draw(rng);
    let picked: Vec<NodeId> = sample(rng, nodes.len(), size).into_iter().map(|i| nodes[i]).collect();
    MulticastSession::new(g, id, picked[0], picked[1..].iter().copied()).expect("distinct nodes of g")
}

/// One random scenario: MC placement, then the session.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub mc: BTreeSet<NodeId>,
    pub session: MulticastSession,
}

impl Scenario {
    /// `g` with this scenario's splitting capabilities.
    pub fn network(&self, g: &Topology) -> Topology {
        g.with_mc_nodes(&self.mc)
    }
}

pub fn gen_scenario(rng: &mut impl Rng, g: &Topology, group: GroupSize, mc_count: usize, id: u64) -> Scenario {
    let mc = gen_mc_placement(rng, g, mc_count);
    let session = gen_session(rng, g, group, id);
    Scenario { mc, session }
}

const QUALITY: u64 = 1;
const PLACEMENT: u64 = 2;
const ARRIVALS: u64 = 3;

/// Scenario `index` of the quality sweep at `mc_count`. Shared by every
/// algorithm so they are compared on identical inputs.
pub fn quality_scenario(g: &Topology, cfg: &ExperimentConfig, mc_count: usize, index: u64) -> Scenario {
    let mut rng = stream_rng(cfg.seed, QUALITY, mc_count as u64, index);
    gen_scenario(&mut rng, g, cfg.group_size, mc_count, index)
}

/// Aggregates of one (algorithm, MC count) cell of a quality sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub algorithm: AlgorithmKind,
    pub mc_count: usize,
    pub group_size: GroupSize,
    pub mean_stress: f64,
    pub mean_first_tree: f64,
    pub mean_cost: f64,
    /// Sessions averaged over.
    pub completed: usize,
    /// Sessions the builder refused (unreachable destinations).
    pub skipped: usize,
}

/// Per-session measurements of the three quality metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionMetrics {
    pub stress: usize,
    pub first_tree: usize,
    pub cost: f64,
}

fn measure(kind: AlgorithmKind, g: &Topology, sc: &Scenario) -> Result<SessionMetrics, RoutingError> {
    let net = sc.network(g);
    let f = build(kind, &net, &sc.session)?;
    Ok(SessionMetrics {
        stress: link_stress(&f),
        first_tree: first_tree_destinations(&f).expect("forest of a valid session has a tree"),
        cost: forest_cost(&f),
    })
}

/// Raw per-session results of one sweep cell, in session order.
pub fn quality_samples(
    g: &Topology,
    cfg: &ExperimentConfig,
    kind: AlgorithmKind,
    mc_count: usize,
) -> Vec<Result<SessionMetrics, RoutingError>> {
    (0..cfg.sessions as u64).into_par_iter().map(|i| measure(kind, g, &quality_scenario(g, cfg, mc_count, i))).collect()
}

/// Sweeps every configured MC count and algorithm; one row per pair.
/// Means are over completed sessions and summed in session order.
pub fn run_quality_experiment(g: &Topology, cfg: &ExperimentConfig) -> Result<Vec<MetricRow>, ConfigError> {
    cfg.validate(g)?;
    let mut rows = Vec::new();
    for &mc_count in &cfg.mc_counts {
        for &kind in &cfg.algorithms {
            let samples = quality_samples(g, cfg, kind, mc_count);
            let ok: Vec<SessionMetrics> = samples.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
            let done = ok.len();
            let mean = |f: &dyn Fn(&SessionMetrics) -> f64| {
                if done == 0 {
                    0.0
                } else {
                    ok.iter().map(f).sum::<f64>() / done as f64
                }
            };
            rows.push(MetricRow {
                algorithm: kind,
                mc_count,
                group_size: cfg.group_size,
                mean_stress: mean(&|m| m.stress as f64),
                mean_first_tree: mean(&|m| m.first_tree as f64),
                mean_cost: mean(&|m| m.cost),
                completed: done,
                skipped: samples.len() - done,
            });
        }
    }
    Ok(rows)
}

pub const QUALITY_HEADER: &str = "algo,mc_count,group_size,mean_stress,mean_l1,mean_cost";

pub fn quality_csv(rows: &[MetricRow]) -> String {
    let mut out = format!("{QUALITY_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6}",
            r.algorithm, r.mc_count, r.group_size, r.mean_stress, r.mean_first_tree, r.mean_cost
        )
        .unwrap();
    }
    out
}

/// Result of one seed stream of the throughput experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputRow {
    pub algorithm: AlgorithmKind,
    pub wavelengths: u32,
    pub seed: u64,
    pub mc_count: usize,
    /// Sessions admitted before the first rejection.
    pub accepted: usize,
    /// Wavelength efficiency at stop time.
    pub efficiency: f64,
}

/// Upper bound on sessions per stream; a stream always ends at a rejection
/// long before this on any network with finite `W`.
const MAX_ARRIVALS: u64 = 1_000_000;

/// Everything one throughput stream produced.
#[derive(Debug, Clone)]
pub struct StreamOutcome {
    pub row: ThroughputRow,
    pub state: WavelengthState,
    /// Admitted forests, with their wavelengths filled in.
    pub admitted: Vec<LightForest>,
}

/// Offers sessions of stream `stream_seed` one by one and admits each forest
/// with First-Fit until the first rejection. The MC placement is drawn once
/// per stream.
pub fn run_throughput_stream(
    g: &Topology,
    kind: AlgorithmKind,
    group: GroupSize,
    mc_count: usize,
    wavelengths: u32,
    stream_seed: u64,
) -> StreamOutcome {
    let mut rng = stream_rng(stream_seed, PLACEMENT, mc_count as u64, 0);
    let net = g.with_mc_nodes(&gen_mc_placement(&mut rng, g, mc_count));
    let mut state = WavelengthState::new(&net, wavelengths);
    let mut admitted = Vec::new();
    for i in 0..MAX_ARRIVALS {
        let mut rng = stream_rng(stream_seed, ARRIVALS, mc_count as u64, i);
        let session = gen_session(&mut rng, &net, group, i);
        let Ok(mut forest) = build(kind, &net, &session) else { break };
        if !state.admit_session(&mut forest).accepted {
            break;
        }
        admitted.push(forest);
    }
    let row = ThroughputRow {
        algorithm: kind,
        wavelengths,
        seed: stream_seed,
        mc_count,
        accepted: admitted.len(),
        efficiency: state.wavelength_efficiency(&net),
    };
    StreamOutcome { row, state, admitted }
}

/// Runs `cfg.sessions` seed streams (`seed, seed+1, …`) per algorithm at
/// the first configured MC count.
pub fn run_throughput_experiment(g: &Topology, cfg: &ExperimentConfig) -> Result<Vec<ThroughputRow>, ConfigError> {
    cfg.validate(g)?;
    let mc_count = cfg.mc_counts.first().copied().unwrap_or(0);
    let mut rows = Vec::new();
    for &kind in &cfg.algorithms {
        let part: Vec<ThroughputRow> = (0..cfg.sessions as u64)
            .into_par_iter()
            .map(|i| {
                run_throughput_stream(g, kind, cfg.group_size, mc_count, cfg.wavelengths, cfg.seed.wrapping_add(i)).row
            })
            .collect();
        rows.extend(part);
    }
    Ok(rows)
}

pub const THROUGHPUT_HEADER: &str = "algo,W,seed,accepted,efficiency";

pub fn throughput_csv(rows: &[ThroughputRow]) -> String {
    let mut out = format!("{THROUGHPUT_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{:.6}", r.algorithm, r.wavelengths, r.seed, r.accepted, r.efficiency).unwrap();
    }
    out
}

/// Mean accepted sessions and mean efficiency per algorithm, in first-seen order.
pub fn throughput_summary(rows: &[ThroughputRow]) -> Vec<(AlgorithmKind, f64, f64)> {
    let mut kinds: Vec<AlgorithmKind> = Vec::new();
    for r in rows {
        if !kinds.contains(&r.algorithm) {
            kinds.push(r.algorithm);
        }
    }
    kinds
        .into_iter()
        .map(|k| {
            let mine: Vec<&ThroughputRow> = rows.iter().filter(|r| r.algorithm == k).collect();
            let n = mine.len() as f64;
            let acc = mine.iter().map(|r| r.accepted as f64).sum::<f64>() / n;
            let eff = mine.iter().map(|r| r.efficiency).sum::<f64>() / n;
            (k, acc, eff)
        })
        .collect()
}
