//! `muleplan` — generate deployments, plan mobile-element tours,
//! simulate lifetimes, run batch experiments and export LP models.
//!
//! Relative output paths resolve against `MULEPLAN_OUT_DIR` when set.
//!
//! Exit codes: 2 usage / no connected deployment, 3 infeasible plan,
//! 4 malformed plan file, 5 oracle asked for an oversized instance.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use muleplan_core::energy::{
    lifetime, simulate_rounds, tour_budget, MobilityParams, RadioParams, SimReport,
};
use muleplan_core::experiment::{
    aggregate, aggregate_to_csv, rows_to_csv, run_experiment, AlgoKind, ExperimentConfig, Scenario,
};
use muleplan_core::ilp::{brute_oracle, export_lp, IlpError, IlpInstance};
use muleplan_core::multi::{mp_plan, MultiConfig, PartitionPlanner};
use muleplan_core::planfile::{read_plan_file, write_plan_file, PlanBlock};
use muleplan_core::planner::{gp_plan, tp_plan, Plan, PlanConfig, PlanError};
use muleplan_core::rdvt::rdvt_plan;
use muleplan_core::topology::{generate, DeploymentKind, DeploymentSpec, Topology, TopologyError};
use muleplan_core::types::NodeId;

#[derive(Parser)]
#[command(name = "muleplan", version, about = "Mobile-element tour planning for sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random deployment and write its topology file.
    Generate(GenerateArgs),
    /// Plan a collection tour for a topology file.
    Plan(PlanArgs),
    /// Report the network lifetime of a plan file.
    Simulate(SimulateArgs),
    /// Run a generate/plan/simulate grid and write CSV results.
    Experiment(ExperimentArgs),
    /// Export the exact formulation in LP format.
    ExportLp(ExportLpArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Uniform,
    Variable,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    kind: KindArg,
    /// Number of nodes (at least 2).
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    /// Side of the square deployment area, meters.
    #[arg(long, default_value_t = 500.0)]
    area: f64,
    /// Communication range, meters.
    #[arg(long, default_value_t = 100.0)]
    range: f64,
    /// Cells per grid side (variable density only).
    #[arg(long, default_value_t = 10)]
    grid_dim: usize,
    /// Number of dense cells (variable density only).
    #[arg(long, default_value_t = 30)]
    dense_cells: usize,
    /// Density multiplier of dense cells (variable density only).
    #[arg(long, default_value_t = 5.0)]
    x: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output topology file.
    #[arg(long, default_value = "topology.txt")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Gp,
    Tp,
    Rdvt,
    Mp,
    RdvtMp,
}

impl AlgoArg {
    fn name(self) -> &'static str {
        match self {
            AlgoArg::Gp => "gp",
            AlgoArg::Tp => "tp",
            AlgoArg::Rdvt => "rdvt",
            AlgoArg::Mp => "mp",
            AlgoArg::RdvtMp => "rdvt-mp",
        }
    }
}

/// `auto` (0.15 of the spanning-tree length) or explicit seconds.
#[derive(Clone, Copy, Debug)]
enum BudgetArg {
    Auto,
    Seconds(f64),
}

impl FromStr for BudgetArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(BudgetArg::Auto);
        }
        s.parse::<f64>()
            .map(BudgetArg::Seconds)
            .map_err(|_| format!("expected `auto` or seconds, got `{s}`"))
    }
}

#[derive(Args)]
struct PlanArgs {
    /// Topology file to plan over.
    #[arg(long)]
    topology: PathBuf,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// Tour budget: `auto` or seconds.
    #[arg(long = "L", default_value = "auto")]
    budget: BudgetArg,
    /// Budget fraction of the spanning-tree length used by `auto`.
    #[arg(long, default_value_t = 0.15)]
    fraction: f64,
    /// Cap on the hop-bound escalation; defaults to the node count.
    #[arg(long)]
    k_max: Option<usize>,
    /// Mobile element speed, m/s.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Mobile elements for the multi-element algorithms.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Clustering seed for the multi-element algorithms.
    #[arg(long, default_value_t = 0)]
    cluster_seed: u64,
    /// Output plan file.
    #[arg(long, default_value = "plan.txt")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Plan file to evaluate.
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value_t = 250_000.0)]
    bandwidth: f64,
    #[arg(long, default_value_t = 0.021)]
    tx_power: f64,
    #[arg(long, default_value_t = 0.015)]
    rx_power: f64,
    #[arg(long, default_value_t = 10.0)]
    battery: f64,
    #[arg(long, default_value_t = 100)]
    packet_size: u32,
    /// Run the explicit round-by-round simulation up to this cap instead
    /// of the closed form.
    #[arg(long)]
    max_rounds: Option<u64>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    scenario: KindArg,
    /// Comma-separated node counts.
    #[arg(long, value_delimiter = ',', default_value = "50,100,150")]
    n_list: Vec<usize>,
    /// Comma-separated algorithms (gp, tp, rdvt, mp, rdvt-mp).
    #[arg(long, value_delimiter = ',', default_value = "gp,tp,rdvt")]
    algos: Vec<String>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100.0)]
    range: f64,
    #[arg(long, default_value_t = 500.0)]
    area: f64,
    #[arg(long, default_value_t = 10)]
    grid_dim: usize,
    #[arg(long, default_value_t = 30)]
    dense_cells: usize,
    #[arg(long, default_value_t = 5.0)]
    x: f64,
    #[arg(long, default_value_t = 0.15)]
    fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Mobile elements for mp / rdvt-mp columns.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Per-trial output CSV; the aggregate lands next to it as
    /// `<stem>.agg.csv`.
    #[arg(long, default_value = "results.csv")]
    out_csv: PathBuf,
}

#[derive(Args)]
struct ExportLpArgs {
    #[arg(long)]
    topology: PathBuf,
    /// Tour budget, seconds.
    #[arg(long = "L")]
    budget: f64,
    /// Hop bound.
    #[arg(long)]
    k: usize,
    /// Objective weight; defaults to n * max travel time + 1.
    #[arg(long)]
    big_m: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Also solve the instance exactly (only up to 9 nodes).
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value = "model.lp")]
    out: PathBuf,
}

/// Failure with a dedicated process exit code.
struct CliFailure {
    code: u8,
    message: String,
}

impl CliFailure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliFailure {
            code,
            message: message.into(),
        }
    }
}

impl From<TopologyError> for CliFailure {
    fn from(e: TopologyError) -> Self {
        let code = match e {
            TopologyError::ConnectivityFailure { .. } => 2,
            _ => 1,
        };
        CliFailure::new(code, e.to_string())
    }
}

impl From<PlanError> for CliFailure {
    fn from(e: PlanError) -> Self {
        let code = match e {
            PlanError::Infeasible { .. } => 3,
            _ => 1,
        };
        CliFailure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliFailure {
    fn from(e: std::io::Error) -> Self {
        CliFailure::new(1, e.to_string())
    }
}

/// Relative output paths land in `MULEPLAN_OUT_DIR` when it is set.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("MULEPLAN_OUT_DIR") {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path.to_path_buf(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::ExportLp(args) => cmd_export_lp(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliFailure> {
    let kind = match args.kind {
        KindArg::Uniform => DeploymentKind::Uniform,
        KindArg::Variable => DeploymentKind::Variable {
            grid_dim: args.grid_dim,
            dense_cells: args.dense_cells,
            density_multiplier: args.x,
        },
    };
    let spec = DeploymentSpec {
        kind,
        n: args.n as usize,
        area_side: args.area,
        seed: args.seed,
    };
    let topo = generate(&spec, args.range)?;
    let out = resolve_out(&args.out);
    topo.save(&out)?;
    println!("nodes {}", topo.len());
    println!("sink {}", topo.sink());
    println!("written {}", out.display());
    Ok(())
}

fn load_topology(path: &Path) -> Result<Topology, CliFailure> {
    Topology::load(path).map_err(|e| CliFailure::new(1, format!("{}: {e}", path.display())))
}

fn cmd_plan(args: PlanArgs) -> Result<(), CliFailure> {
    let topo = load_topology(&args.topology)?;
    let budget = match args.budget {
        BudgetArg::Auto => tour_budget(
            &topo,
            &MobilityParams {
                speed: args.speed,
                budget_fraction: args.fraction,
            },
        ),
        BudgetArg::Seconds(s) => s,
    };
    let k_max = args.k_max.unwrap_or(topo.len());
    let cfg = PlanConfig::new(budget, k_max, args.speed)?;
    let algo = args.algo.name();
    println!("algo {algo}");
    println!("budget {budget}");

    let blocks = match args.algo {
        AlgoArg::Gp | AlgoArg::Tp | AlgoArg::Rdvt => {
            let plan = match args.algo {
                AlgoArg::Gp => gp_plan(&topo, &cfg)?,
                AlgoArg::Tp => tp_plan(&topo, &cfg)?,
                _ => rdvt_plan(&topo, &cfg)?,
            };
            print_plan_summary(&plan, None);
            vec![PlanBlock::from_plan(&plan, algo, budget, None, None)]
        }
        AlgoArg::Mp | AlgoArg::RdvtMp => {
            let mc = MultiConfig {
                elements: args.m,
                budget,
                k_max,
                speed: args.speed,
                seed: args.cluster_seed,
            };
            let planner = match args.algo {
                AlgoArg::Mp => PartitionPlanner::Gp,
                _ => PartitionPlanner::Rdvt,
            };
            let parts = mp_plan(&topo, &mc, planner)?;
            let mut blocks = Vec::with_capacity(parts.len());
            for p in &parts {
                print_plan_summary(&p.plan, Some(p.index));
                blocks.push(PlanBlock::from_plan(
                    &p.plan,
                    algo,
                    budget,
                    Some(p.index),
                    Some(&p.nodes),
                ));
            }
            blocks
        }
    };
    let out = resolve_out(&args.out);
    write_plan_file(&out, &blocks).map_err(|e| CliFailure::new(1, e.to_string()))?;
    println!("written {}", out.display());
    Ok(())
}

fn print_plan_summary(plan: &Plan, partition: Option<usize>) {
    let prefix = match partition {
        Some(i) => format!("partition {i} "),
        None => String::new(),
    };
    println!("{prefix}cps {}", plan.caching_points.len());
    println!("{prefix}tour_length {}", plan.tour.length);
    println!("{prefix}achieved_k {}", plan.achieved_k);
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliFailure> {
    let radio = RadioParams {
        bandwidth_bps: args.bandwidth,
        tx_power_w: args.tx_power,
        rx_power_w: args.rx_power,
        battery_j: args.battery,
        packet_bytes: args.packet_size,
    };
    radio.validate().map_err(|m| CliFailure::new(1, m))?;
    let blocks =
        read_plan_file(&args.plan).map_err(|e| CliFailure::new(4, e.to_string()))?;

    let mut worst: Option<(u64, NodeId)> = None;
    let mut out = String::new();
    for block in &blocks {
        let (plan, members) = block
            .to_plan()
            .map_err(|e| CliFailure::new(4, e.to_string()))?;
        let report: SimReport = match args.max_rounds {
            Some(cap) => simulate_rounds(&plan, &radio, cap),
            None => lifetime(&plan, &radio),
        };
        let first_dead_global = members[report.first_dead.0];
        if let Some(p) = block.partition {
            writeln!(
                out,
                "partition {p} lifetime_rounds {} first_dead {}",
                report.lifetime_rounds, first_dead_global
            )
            .unwrap();
        }
        let max_subtree = report
            .per_node
            .iter()
            .map(|e| e.subtree_size)
            .max()
            .unwrap_or(0);
        if block.partition.is_none() {
            writeln!(out, "nodes {}", plan.n()).unwrap();
            writeln!(out, "max_subtree {max_subtree}").unwrap();
            if report.truncated {
                writeln!(out, "truncated at {}", report.lifetime_rounds).unwrap();
            }
        }
        if worst.is_none_or(|(l, _)| report.lifetime_rounds < l) {
            worst = Some((report.lifetime_rounds, first_dead_global));
        }
    }
    let (life, dead) = worst.expect("plan file holds at least one block");
    println!("lifetime_rounds {life}");
    println!("first_dead {dead}");
    print!("{out}");
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliFailure> {
    let mut algos = Vec::new();
    for name in &args.algos {
        match AlgoKind::parse(name) {
            Some(a) => algos.push(a),
            None => return Err(CliFailure::new(1, format!("unknown algorithm `{name}`"))),
        }
    }
    let scenario = match args.scenario {
        KindArg::Uniform => Scenario::Uniform,
        KindArg::Variable => Scenario::Variable,
    };
    let cfg = ExperimentConfig {
        scenario,
        n_list: args.n_list.clone(),
        algos,
        trials: args.trials,
        root_seed: args.seed,
        comm_range: args.range,
        area_side: args.area,
        grid_dim: args.grid_dim,
        dense_cells: args.dense_cells,
        density_multiplier: args.x,
        budget_fraction: args.fraction,
        speed: args.speed,
        elements: args.m,
        threads: args.threads,
        radio: RadioParams::micaz(),
    };
    let rows = run_experiment(&cfg);
    let out = resolve_out(&args.out_csv);
    std::fs::write(&out, rows_to_csv(&rows))?;
    let agg_path = out.with_extension("agg.csv");
    std::fs::write(&agg_path, aggregate_to_csv(&aggregate(&rows)))?;
    let failures = rows.iter().filter(|r| r.status != "ok").count();
    println!("rows {}", rows.len());
    println!("failures {failures}");
    println!("written {}", out.display());
    println!("written {}", agg_path.display());
    Ok(())
}

fn cmd_export_lp(args: ExportLpArgs) -> Result<(), CliFailure> {
    let topo = load_topology(&args.topology)?;
    let inst = IlpInstance::from_topology(&topo, args.speed, args.budget, args.k, args.big_m)
        .map_err(|e| CliFailure::new(1, e.to_string()))?;
    let out = resolve_out(&args.out);
    std::fs::write(&out, export_lp(&inst))?;
    println!("written {}", out.display());
    if args.oracle {
        let sol = brute_oracle(&inst).map_err(|e| match e {
            IlpError::OracleTooLarge { .. } => CliFailure::new(5, e.to_string()),
            IlpError::Infeasible { .. } => CliFailure::new(3, e.to_string()),
            other => CliFailure::new(1, other.to_string()),
        })?;
        println!("oracle_assignment_hops {}", sol.assignment_hops);
        println!("oracle_travel {}", sol.travel_time);
        let order = sol
            .tour
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        println!("oracle_tour {order}");
    }
    Ok(())
}
