//! Batch experiment engine: generate -> plan -> simulate over a grid of
//! (node count, algorithm, trial), with deterministic seeding and CSV
//! output.
//!
//! Trial seeds derive from the root seed by the documented split
//! `seed = mix(mix(mix(mix(root) ^ scenario_index) ^ n) ^ trial)` where
//! `mix` is splitmix64, so any row can be reproduced in isolation and
//! the row set is independent of scheduling.

use rayon::prelude::*;

use crate::energy::{lifetime, tour_budget, MobilityParams, RadioParams};
use crate::multi::{mp_plan, MultiConfig, PartitionPlanner};
use crate::planner::{gp_plan, tp_plan, Plan, PlanError};
use crate::rdvt::rdvt_plan;
use crate::topology::{sub_seed, DeploymentKind, DeploymentSpec, TopologyError};

/// Node-placement scenario of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Uniform,
    Variable,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Uniform => "uniform",
            Scenario::Variable => "variable",
        }
    }

    fn index(self) -> u64 {
        match self {
            Scenario::Uniform => 0,
            Scenario::Variable => 1,
        }
    }
}

/// Planner selection for one experiment column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoKind {
    Gp,
    Tp,
    Rdvt,
    /// Multi-element planning with GP per partition.
    Mp,
    /// Multi-element planning with RD-VT per partition.
    RdvtMp,
}

impl AlgoKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgoKind::Gp => "gp",
            AlgoKind::Tp => "tp",
            AlgoKind::Rdvt => "rdvt",
            AlgoKind::Mp => "mp",
            AlgoKind::RdvtMp => "rdvt-mp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gp" => Some(AlgoKind::Gp),
            "tp" => Some(AlgoKind::Tp),
            "rdvt" => Some(AlgoKind::Rdvt),
            "mp" => Some(AlgoKind::Mp),
            "rdvt-mp" => Some(AlgoKind::RdvtMp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n_list: Vec<usize>,
    pub algos: Vec<AlgoKind>,
    pub trials: usize,
    pub root_seed: u64,
    pub comm_range: f64,
    pub area_side: f64,
    pub grid_dim: usize,
    pub dense_cells: usize,
    pub density_multiplier: f64,
    pub budget_fraction: f64,
    pub speed: f64,
    /// Mobile elements for the multi-element algorithms.
    pub elements: usize,
    /// Worker threads; 0 picks the rayon default.
    pub threads: usize,
    pub radio: RadioParams,
}

impl ExperimentConfig {
    /// Evaluation defaults: 500 m square, 100 m radios, 10x10 grid with
    /// 30 dense cells at x = 5, budget 0.15 of the tree length at 1 m/s.
    pub fn defaults(scenario: Scenario) -> Self {
        ExperimentConfig {
            scenario,
            n_list: vec![50, 100, 150],
            algos: vec![AlgoKind::Gp, AlgoKind::Tp, AlgoKind::Rdvt],
            trials: 10,
            root_seed: 1,
            comm_range: 100.0,
            area_side: 500.0,
            grid_dim: 10,
            dense_cells: 30,
            density_multiplier: 5.0,
            budget_fraction: 0.15,
            speed: 1.0,
            elements: 3,
            threads: 1,
            radio: RadioParams::micaz(),
        }
    }

    fn deployment(&self, n: usize, seed: u64) -> DeploymentSpec {
        let kind = match self.scenario {
            Scenario::Uniform => DeploymentKind::Uniform,
            Scenario::Variable => DeploymentKind::Variable {
                grid_dim: self.grid_dim,
                dense_cells: self.dense_cells,
                density_multiplier: self.density_multiplier,
            },
        };
        DeploymentSpec {
            kind,
            n,
            area_side: self.area_side,
            seed,
        }
    }
}

/// Plan metrics of one successful row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowMetrics {
    pub cp_count: usize,
    pub tour_len: f64,
    pub achieved_k: usize,
    pub lifetime: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub scenario: Scenario,
    pub n: usize,
    pub algo: AlgoKind,
    pub trial: usize,
    pub seed: u64,
    pub status: String,
    pub metrics: Option<RowMetrics>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// The documented seed split for one trial.
pub fn trial_seed(root: u64, scenario: Scenario, n: usize, trial: usize) -> u64 {
    let mut s = splitmix64(root);
    s = splitmix64(s ^ scenario.index());
    s = splitmix64(s ^ n as u64);
    splitmix64(s ^ trial as u64)
}

/// Clustering seeds stay off the deployment seed's stream.
const MP_SEED_TAG: u64 = 0x6d70;

fn plan_status(err: &PlanError) -> String {
    match err {
        PlanError::Infeasible { .. } => "infeasible".into(),
        PlanError::Uncoverable { .. } => "uncoverable".into(),
        PlanError::PartitionDisconnected { .. } => "partition_disconnected".into(),
        PlanError::InvalidConfig(_) => "invalid_config".into(),
    }
}

fn single_metrics(plan: &Plan, radio: &RadioParams) -> RowMetrics {
    RowMetrics {
        cp_count: plan.caching_points.len(),
        tour_len: plan.tour.length,
        achieved_k: plan.achieved_k,
        lifetime: lifetime(plan, radio).lifetime_rounds,
    }
}

fn run_row(cfg: &ExperimentConfig, n: usize, algo: AlgoKind, trial: usize) -> ExperimentRow {
    let seed = trial_seed(cfg.root_seed, cfg.scenario, n, trial);
    let row = |status: String, metrics: Option<RowMetrics>| ExperimentRow {
        scenario: cfg.scenario,
        n,
        algo,
        trial,
        seed,
        status,
        metrics,
    };

    let topo = match crate::topology::generate(&cfg.deployment(n, seed), cfg.comm_range) {
        Ok(t) => t,
        Err(TopologyError::ConnectivityFailure { .. }) => {
            return row("generate_failed".into(), None)
        }
        Err(e) => return row(format!("generate_error:{e}"), None),
    };
    let budget = tour_budget(
        &topo,
        &MobilityParams {
            speed: cfg.speed,
            budget_fraction: cfg.budget_fraction,
        },
    );
    let plan_cfg = crate::planner::PlanConfig {
        budget,
        k_max: n,
        speed: cfg.speed,
    };

    let single = |result: Result<Plan, PlanError>| match result {
        Ok(plan) => row("ok".into(), Some(single_metrics(&plan, &cfg.radio))),
        Err(e) => row(plan_status(&e), None),
    };
    match algo {
        AlgoKind::Gp => single(gp_plan(&topo, &plan_cfg)),
        AlgoKind::Tp => single(tp_plan(&topo, &plan_cfg)),
        AlgoKind::Rdvt => single(rdvt_plan(&topo, &plan_cfg)),
        AlgoKind::Mp | AlgoKind::RdvtMp => {
            let mc = MultiConfig {
                elements: cfg.elements,
                budget,
                k_max: n,
                speed: cfg.speed,
                seed: sub_seed(seed, MP_SEED_TAG),
            };
            let planner = if algo == AlgoKind::Mp {
                PartitionPlanner::Gp
            } else {
                PartitionPlanner::Rdvt
            };
            match mp_plan(&topo, &mc, planner) {
                Ok(parts) => {
                    // fleet view: total caching points, longest tour,
                    // deepest forest, first death anywhere
                    let metrics = RowMetrics {
                        cp_count: parts.iter().map(|p| p.plan.caching_points.len()).sum(),
                        tour_len: parts
                            .iter()
                            .map(|p| p.plan.tour.length)
                            .fold(0.0, f64::max),
                        achieved_k: parts.iter().map(|p| p.plan.achieved_k).max().unwrap_or(0),
                        lifetime: parts
                            .iter()
                            .map(|p| lifetime(&p.plan, &cfg.radio).lifetime_rounds)
                            .min()
                            .unwrap_or(0),
                    };
                    row("ok".into(), Some(metrics))
                }
                Err(e) => row(plan_status(&e), None),
            }
        }
    }
}

/// Run the full grid. Rows come back sorted by
/// `(scenario, n, algo, trial)` whatever the thread count, so output is
/// schedule-independent.
pub fn run_experiment(cfg: &ExperimentConfig) -> Vec<ExperimentRow> {
    let mut jobs = Vec::new();
    for &n in &cfg.n_list {
        for &algo in &cfg.algos {
            for trial in 0..cfg.trials {
                jobs.push((n, algo, trial));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .expect("thread pool");
    let mut rows: Vec<ExperimentRow> =
        pool.install(|| jobs.par_iter().map(|&(n, a, t)| run_row(cfg, n, a, t)).collect());
    rows.sort_by(|a, b| {
        (a.n, a.algo.as_str(), a.trial).cmp(&(b.n, b.algo.as_str(), b.trial))
    });
    rows
}

/// Quote a CSV field if it holds a delimiter, quote or newline.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-trial rows as CSV with a header.
pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from("scenario,n,algo,trial,seed,cp_count,tour_len,achieved_k,lifetime,status\n");
    for r in rows {
        let (cp, len, k, life) = match r.metrics {
            Some(m) => (
                m.cp_count.to_string(),
                m.tour_len.to_string(),
                m.achieved_k.to_string(),
                m.lifetime.to_string(),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(r.scenario.as_str()),
            r.n,
            csv_field(r.algo.as_str()),
            r.trial,
            r.seed,
            cp,
            len,
            k,
            life,
            csv_field(&r.status),
        ));
    }
    out
}

/// Mean metrics per `(scenario, n, algo)` over the rows that completed.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub scenario: Scenario,
    pub n: usize,
    pub algo: AlgoKind,
    pub trials_ok: usize,
    pub mean_cp_count: f64,
    pub mean_tour_len: f64,
    pub mean_achieved_k: f64,
    pub mean_lifetime: f64,
}

pub fn aggregate(rows: &[ExperimentRow]) -> Vec<Aggregate> {
    let mut out: Vec<Aggregate> = Vec::new();
    for r in rows {
        let Some(m) = r.metrics else { continue };
        let key = (r.scenario, r.n, r.algo);
        let agg = match out
            .iter_mut()
            .find(|a| (a.scenario, a.n, a.algo) == key)
        {
            Some(a) => a,
            None => {
                out.push(Aggregate {
                    scenario: r.scenario,
                    n: r.n,
                    algo: r.algo,
                    trials_ok: 0,
                    mean_cp_count: 0.0,
                    mean_tour_len: 0.0,
                    mean_achieved_k: 0.0,
                    mean_lifetime: 0.0,
                });
                out.last_mut().unwrap()
            }
        };
        agg.trials_ok += 1;
        agg.mean_cp_count += m.cp_count as f64;
        agg.mean_tour_len += m.tour_len;
        agg.mean_achieved_k += m.achieved_k as f64;
        agg.mean_lifetime += m.lifetime as f64;
    }
    for a in &mut out {
        let t = a.trials_ok as f64;
        a.mean_cp_count /= t;
        a.mean_tour_len /= t;
        a.mean_achieved_k /= t;
        a.mean_lifetime /= t;
    }
    out
}

pub fn aggregate_to_csv(aggregates: &[Aggregate]) -> String {
    let mut out = String::from(
        "scenario,n,algo,trials_ok,mean_cp_count,mean_tour_len,mean_achieved_k,mean_lifetime\n",
    );
    for a in aggregates {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            a.scenario.as_str(),
            a.n,
            a.algo.as_str(),
            a.trials_ok,
            a.mean_cp_count,
            a.mean_tour_len,
            a.mean_achieved_k,
            a.mean_lifetime,
        ));
    }
    out
}
