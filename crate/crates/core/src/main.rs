use std::collections::BTreeSet;
use std::error::Error;
use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wdm_multicast::experiment::{
    quality_csv, run_quality_experiment, run_throughput_experiment, throughput_csv, throughput_summary,
    ExperimentConfig, GroupSize,
};
use wdm_multicast::lightforest::{first_tree_destinations, forest_cost, link_stress, validate_forest};
use wdm_multicast::routing::{build_traced, Trace};
use wdm_multicast::{builtin_topology, parse_topology, AlgorithmKind, LightForest, MulticastSession, NodeId, Topology};

type CliResult<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "wdm-multicast", version, about = "Light-forest multicast routing under sparse light splitting")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Route one session and print the forest with its metrics.
    Route(RouteArgs),
    /// Sweep MC counts and report mean stress, first-tree size and cost as CSV.
    Quality(QualityArgs),
    /// Admit random sessions until the first blocking and report CSV.
    Throughput(ThroughputArgs),
    /// Check a serialized forest against a topology.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct TopologyArg {
    /// Built-in name, path to a .topo file, or a name found in $WDM_TOPOLOGY_DIR.
    #[arg(long, default_value = "nsf14")]
    topology: String,
}

#[derive(Args)]
struct RouteArgs {
    #[command(flatten)]
    topo: TopologyArg,
    /// Source node id.
    #[arg(long)]
    source: u32,
    /// Comma-separated destination ids.
    #[arg(long, value_delimiter = ',', required = true)]
    dests: Vec<u32>,
    /// Comma-separated MC node ids; replaces the file's capabilities.
    #[arg(long, value_delimiter = ',')]
    mc: Option<Vec<u32>>,
    /// hslt, mo or r2s.
    #[arg(long, default_value = "hslt")]
    algo: AlgorithmKind,
    /// Print every selection step.
    #[arg(long)]
    trace: bool,
    /// Print the forest as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct QualityArgs {
    #[command(flatten)]
    topo: TopologyArg,
    /// Group size K+1, fixed (`14`) or uniform range (`3:28`).
    #[arg(long, default_value = "14")]
    group_size: GroupSize,
    /// MC counts: `lo:hi`, `lo:hi:step` or a comma list.
    #[arg(long, default_value = "0")]
    mc_sweep: String,
    #[arg(long, default_value_t = 1000)]
    sessions: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "r2s,mo,hslt")]
    algos: Vec<AlgorithmKind>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ThroughputArgs {
    #[command(flatten)]
    topo: TopologyArg,
    #[arg(long, default_value_t = 20)]
    wavelengths: u32,
    /// Group size; defaults to uniform on 3..=N.
    #[arg(long)]
    group_size: Option<GroupSize>,
    #[arg(long, default_value_t = 0)]
    mc_count: usize,
    /// Seed streams; stream i uses seed + i.
    #[arg(long, default_value_t = 200)]
    streams: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "mo,hslt")]
    algos: Vec<AlgorithmKind>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    topo: TopologyArg,
    /// Forest JSON file.
    #[arg(long)]
    forest: PathBuf,
    #[arg(long, value_delimiter = ',')]
    mc: Option<Vec<u32>>,
}

fn load_topology(name: &str) -> CliResult<Topology> {
    let direct = FsPath::new(name);
    if direct.is_file() {
        return read_topology(direct);
    }
    if let Some(dir) = std::env::var_os("WDM_TOPOLOGY_DIR") {
        let p = PathBuf::from(dir).join(format!("{name}.topo"));
        if p.is_file() {
            return read_topology(&p);
        }
    }
    Ok(builtin_topology(name)?)
}

fn read_topology(p: &FsPath) -> CliResult<Topology> {
    let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
    parse_topology(&text).map_err(|e| format!("{}: {e}", p.display()).into())
}

fn apply_mc(g: Topology, mc: &Option<Vec<u32>>) -> CliResult<Topology> {
    let Some(ids) = mc else { return Ok(g) };
    let set: BTreeSet<NodeId> = ids.iter().map(|&v| NodeId(v)).collect();
    if let Some(v) = set.iter().find(|v| !g.contains(**v)) {
        return Err(format!("MC node {v} not in topology").into());
    }
    Ok(g.with_mc_nodes(&set))
}

fn parse_sweep(s: &str) -> CliResult<Vec<usize>> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad MC sweep `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    let out = match parts.as_slice() {
        [one] => one.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        [lo, hi] => (num(lo)?..=num(hi)?).collect(),
        [lo, hi, step] => {
            let step = num(step)?;
            if step == 0 {
                return Err("MC sweep step must be positive".into());
            }
            (num(lo)?..=num(hi)?).step_by(step).collect()
        }
        _ => return Err(format!("bad MC sweep `{s}`").into()),
    };
    if out.is_empty() {
        return Err(format!("empty MC sweep `{s}`").into());
    }
    Ok(out)
}

fn emit(output: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn set_text(s: &BTreeSet<NodeId>) -> String {
    let items: Vec<String> = s.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

fn print_trace(trace: &Trace) {
    for (i, step) in trace.steps.iter().enumerate() {
        let st = &step.state;
        let action = match &step.choice {
            Some(c) => c.to_string(),
            None => "close tree".to_string(),
        };
        println!(
            "step {} tree {}: MC_SET {} MI_SET {} D {} -> {action}",
            i + 1,
            st.tree.serial,
            set_text(&st.mc_set),
            set_text(&st.mi_set),
            set_text(&st.remaining),
        );
    }
    println!("sweeps {}", trace.sweeps);
}

fn route(a: RouteArgs) -> CliResult<ExitCode> {
    let g = apply_mc(load_topology(&a.topo.topology)?, &a.mc)?;
    let ms = MulticastSession::new(&g, 0, NodeId(a.source), a.dests.iter().map(|&v| NodeId(v)))?;
    let mut trace = Trace::default();
    let forest = build_traced(a.algo, &g, &ms, a.trace.then_some(&mut trace))?;
    if a.trace {
        print_trace(&trace);
    }
    if a.json {
        print!("{}", forest.to_json());
    } else {
        print!("{forest}");
        println!("stress {}", link_stress(&forest));
        println!("cost {}", forest_cost(&forest));
        println!("first-tree destinations {}", first_tree_destinations(&forest).unwrap_or(0));
    }
    Ok(ExitCode::SUCCESS)
}

fn quality(a: QualityArgs) -> CliResult<ExitCode> {
    let g = load_topology(&a.topo.topology)?;
    let cfg = ExperimentConfig {
        algorithms: a.algos,
        group_size: a.group_size,
        mc_counts: parse_sweep(&a.mc_sweep)?,
        sessions: a.sessions,
        wavelengths: 20,
        seed: a.seed,
    };
    let rows = run_quality_experiment(&g, &cfg)?;
    for r in rows.iter().filter(|r| r.skipped > 0) {
        eprintln!("{} mc={}: skipped {} of {} sessions", r.algorithm, r.mc_count, r.skipped, cfg.sessions);
    }
    emit(&a.output, &quality_csv(&rows))?;
    Ok(ExitCode::SUCCESS)
}

fn throughput(a: ThroughputArgs) -> CliResult<ExitCode> {
    let g = load_topology(&a.topo.topology)?;
    let cfg = ExperimentConfig {
        algorithms: a.algos,
        group_size: a.group_size.unwrap_or(GroupSize::Uniform(3, g.node_count())),
        mc_counts: vec![a.mc_count],
        sessions: a.streams,
        wavelengths: a.wavelengths,
        seed: a.seed,
    };
    let rows = run_throughput_experiment(&g, &cfg)?;
    for (k, acc, eff) in throughput_summary(&rows) {
        eprintln!("{k}: mean accepted {acc:.3}, mean efficiency {eff:.4}");
    }
    emit(&a.output, &throughput_csv(&rows))?;
    Ok(ExitCode::SUCCESS)
}

fn validate(a: ValidateArgs) -> CliResult<ExitCode> {
    let g = apply_mc(load_topology(&a.topo.topology)?, &a.mc)?;
    let text = fs::read_to_string(&a.forest).map_err(|e| format!("{}: {e}", a.forest.display()))?;
    let forest = LightForest::from_json(&g, &text)?;
    let violations = validate_forest(&g, &forest);
    if violations.is_empty() {
        println!("ok: {} trees, cost {}", link_stress(&forest), forest_cost(&forest));
        return Ok(ExitCode::SUCCESS);
    }
    for v in &violations {
        println!("violation: {v}");
    }
    Ok(ExitCode::from(1))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Command::Route(a) => route(a),
        Command::Quality(a) => quality(a),
        Command::Throughput(a) => throughput(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
