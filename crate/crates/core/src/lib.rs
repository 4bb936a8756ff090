//! Mobile-element tour planning for wireless sensor networks.
//!
//! A mobile collector tours a subset of the nodes (caching points) under
//! a travel-time budget while everything else forwards its data over at
//! most `k` hops. This crate provides the deployment model, the GP / TP
//! planning heuristics and the RD-VT baseline, multi-element planning on
//! top of medoid clustering, a per-round energy and lifetime simulation,
//! an LP export of the exact formulation with a brute-force oracle for
//! tiny instances, and a deterministic batch-experiment engine.

pub mod energy;
pub mod experiment;
pub mod graph;
pub mod ilp;
pub mod multi;
pub mod planfile;
pub mod planner;
pub mod rdvt;
pub mod topology;
pub mod tsp;
pub mod types;

pub use energy::{lifetime, per_packet_energy, simulate_rounds, tour_budget, RadioParams, SimReport};
pub use graph::{bfs_tree, k_dom_set, mst, power_graph, steiner_tree, DomSet, Graph, HopMatrix, Tree};
pub use ilp::{brute_oracle, export_lp, IlpInstance, OracleSolution};
pub use multi::{find_clusters, mp_plan, Clustering, MultiConfig, PartitionPlanner};
pub use planner::{
    build_routing, find_cps, gp_plan, tp_plan, validate_plan, Plan, PlanConfig, PlanError,
    RoutingForest, Violation,
};
pub use rdvt::rdvt_plan;
pub use topology::{generate, DeploymentKind, DeploymentSpec, MetricClosure, Topology, TopologyError};
pub use tsp::{christofides, tour_length, MatchingMode, Tour};
pub use types::{NodeId, Point};
