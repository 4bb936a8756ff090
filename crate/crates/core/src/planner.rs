//! The GP and TP planners: caching-point selection over the dominating
//! sets, depth-bounded routing forests, the hop-bound escalation loop
//! and the plan feasibility validator.

use thiserror::Error;

use crate::graph::{bfs_parents, k_dom_set, mst, Graph, HopMatrix};
use crate::topology::{MetricClosure, Topology};
use crate::tsp::{christofides, tour_length, Tour};
use crate::types::NodeId;

/// Slack for re-checking float tour lengths against the budget.
pub const BUDGET_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("no feasible plan within k_max = {k_max}")]
    Infeasible { k_max: usize },
    #[error("node {node} is more than k hops from every caching point")]
    Uncoverable { node: NodeId },
    #[error("cluster {cluster} induces a disconnected sub-topology")]
    PartitionDisconnected { cluster: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Budget and escalation limits for a single mobile element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanConfig {
    /// Tour travel-time budget, seconds.
    pub budget: f64,
    /// Cap on the routing-depth escalation loop.
    pub k_max: usize,
    /// Mobile element speed, m/s.
    pub speed: f64,
}

impl PlanConfig {
    pub fn new(budget: f64, k_max: usize, speed: f64) -> Result<Self, PlanError> {
        let cfg = PlanConfig {
            budget,
            k_max,
            speed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            return Err(PlanError::InvalidConfig(
                "tour budget must be non-negative".into(),
            ));
        }
        if self.k_max < 1 {
            return Err(PlanError::InvalidConfig("k_max must be at least 1".into()));
        }
        if !(self.speed.is_finite() && self.speed > 0.0) {
            return Err(PlanError::InvalidConfig("speed must be positive".into()));
        }
        Ok(())
    }
}

/// Which structure the per-group forwarding trees follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForestMode {
    /// BFS shortest-path trees rooted at each caching point; depth is
    /// bounded by construction.
    #[default]
    Bfs,
    /// Per-group MSTs over the induced subgraphs; falls back to BFS for
    /// the whole forest if any group is disconnected or too deep.
    GroupMst,
}

/// Forwarding structure for nodes off the tour.
///
/// Every node is either a caching point (no parent) or assigned to one;
/// parent edges are communication-graph edges and the parent chain from
/// any node reaches a caching point within the depth bound. A chain may
/// relay through nodes of a different group; energy accounting follows
/// the parent pointers, not the group labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingForest {
    assignment: Vec<Option<NodeId>>,
    parent: Vec<Option<NodeId>>,
    depth: Vec<u32>,
}

impl RoutingForest {
    pub fn from_parts(
        assignment: Vec<Option<NodeId>>,
        parent: Vec<Option<NodeId>>,
        depth: Vec<u32>,
    ) -> Self {
        assert_eq!(assignment.len(), parent.len());
        assert_eq!(assignment.len(), depth.len());
        RoutingForest {
            assignment,
            parent,
            depth,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn is_caching_point(&self, v: NodeId) -> bool {
        self.assignment[v.0].is_none()
    }

    /// Caching point the node's data is addressed to; `None` for caching
    /// points themselves.
    pub fn assignment(&self, v: NodeId) -> Option<NodeId> {
        self.assignment[v.0]
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.0]
    }

    /// Length of the parent chain from `v` to the caching point it
    /// terminates at.
    pub fn depth(&self, v: NodeId) -> u32 {
        self.depth[v.0]
    }

    pub fn max_depth(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.parent.len()).map(NodeId)
    }
}

/// A feasible single-element collection plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// Caching points in confirmation order, sink first.
    pub caching_points: Vec<NodeId>,
    pub tour: Tour,
    pub forest: RoutingForest,
    /// Routing-depth bound the plan was accepted at.
    pub achieved_k: usize,
}

impl Plan {
    pub fn n(&self) -> usize {
        self.forest.len()
    }

    /// Total assignment cost: hop distance from each non-tour node to
    /// its caching point.
    pub fn assignment_hop_total(&self, hop: &HopMatrix) -> u64 {
        self.forest
            .node_ids()
            .filter_map(|v| self.forest.assignment(v).map(|cp| hop.get(v, cp) as u64))
            .sum()
    }
}

/// Select caching points for hop bound `k`.
///
/// Runs the greedy dominating-set partition, keeps per-group candidates
/// (nodes within `k` hops of every other group member; the head always
/// qualifies), then confirms candidates nearest to the confirmed set in
/// Euclidean distance, starting from the sink. Confirming a candidate
/// discards the rest of its group, and the sink, being at distance zero
/// from itself, covers its own group whenever it qualifies there.
pub fn find_cps(g: &Graph, hop: &HopMatrix, topo: &Topology, k: usize) -> Vec<NodeId> {
    let dom = k_dom_set(g, k);
    let sink = topo.sink();
    let mut active: Vec<(NodeId, usize)> = Vec::new();
    for (gi, group) in dom.groups.iter().enumerate() {
        for &v in &group.members {
            if group
                .members
                .iter()
                .all(|&m| (hop.get(v, m) as usize) <= k)
            {
                active.push((v, gi));
            }
        }
    }
    let mut confirmed = vec![sink];
    while !active.is_empty() {
        let (mut best_d, mut best_v, mut best_g) = (f64::INFINITY, NodeId(usize::MAX), 0);
        for &(c, gi) in &active {
            let d = confirmed
                .iter()
                .map(|&cp| topo.euclid(c, cp))
                .fold(f64::INFINITY, f64::min);
            if d < best_d || (d == best_d && c < best_v) {
                best_d = d;
                best_v = c;
                best_g = gi;
            }
        }
        if best_v != sink {
            confirmed.push(best_v);
        }
        active.retain(|&(_, gi)| gi != best_g);
    }
    confirmed
}

/// Assign every non-caching node to its hop-nearest caching point
/// (ties: Euclidean distance, then caching-point id) and give it a
/// parent on the BFS shortest-path tree rooted at that caching point.
///
/// `GroupMst` replaces the BFS parents with per-group MSTs of the
/// induced subgraphs, unless any group comes out disconnected or deeper
/// than `k`, in which case the whole forest reverts to BFS.
pub fn build_routing(
    g: &Graph,
    hop: &HopMatrix,
    topo: &Topology,
    cps: &[NodeId],
    k: usize,
    mode: ForestMode,
) -> Result<RoutingForest, PlanError> {
    let n = g.len();
    let mut is_cp = vec![false; n];
    for &cp in cps {
        is_cp[cp.0] = true;
    }

    let mut assignment: Vec<Option<NodeId>> = vec![None; n];
    for v in (0..n).map(NodeId) {
        if is_cp[v.0] {
            continue;
        }
        let mut best: Option<(u32, f64, NodeId)> = None;
        for &cp in cps {
            let h = hop.get(v, cp);
            let key = (h, topo.euclid(v, cp), cp);
            match best {
                Some((bh, bd, bc)) if (bh, bd, bc) <= (key.0, key.1, key.2) => {}
                _ => best = Some(key),
            }
        }
        let (h, _, cp) = best.expect("at least one caching point");
        if h as usize > k {
            return Err(PlanError::Uncoverable { node: v });
        }
        assignment[v.0] = Some(cp);
    }

    let bfs_forest = |assignment: &[Option<NodeId>]| -> Vec<Option<NodeId>> {
        let mut parents_by_cp: std::collections::BTreeMap<NodeId, Vec<Option<NodeId>>> =
            std::collections::BTreeMap::new();
        for &cp in cps {
            parents_by_cp.insert(cp, bfs_parents(g, cp).0);
        }
        (0..n)
            .map(|v| assignment[v].map(|cp| parents_by_cp[&cp][v].expect("graph is connected")))
            .collect()
    };

    let parent = match mode {
        ForestMode::Bfs => bfs_forest(&assignment),
        ForestMode::GroupMst => {
            group_mst_forest(g, topo, cps, &assignment, k).unwrap_or_else(|| bfs_forest(&assignment))
        }
    };

    let depth = chain_depths(&parent);
    Ok(RoutingForest {
        assignment,
        parent,
        depth,
    })
}

/// Per-group MST parents, or `None` when some group breaks the rules.
fn group_mst_forest(
    g: &Graph,
    topo: &Topology,
    cps: &[NodeId],
    assignment: &[Option<NodeId>],
    k: usize,
) -> Option<Vec<Option<NodeId>>> {
    let n = g.len();
    let mut groups: std::collections::BTreeMap<NodeId, Vec<NodeId>> =
        cps.iter().map(|&cp| (cp, vec![cp])).collect();
    for v in (0..n).map(NodeId) {
        if let Some(cp) = assignment[v.0] {
            groups.get_mut(&cp).unwrap().push(v);
        }
    }
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    for (&cp, members) in &groups {
        let weight = |a: NodeId, b: NodeId| {
            if g.has_edge(a, b) {
                topo.euclid(a, b)
            } else {
                f64::INFINITY
            }
        };
        let tree = mst(members, weight, cp).ok()?;
        if tree.max_depth() as usize > k {
            return None;
        }
        for (c, p, _) in tree.edges() {
            parent[c.0] = Some(p);
        }
    }
    Some(parent)
}

/// Chain length from each node to the first ancestor without a parent.
fn chain_depths(parent: &[Option<NodeId>]) -> Vec<u32> {
    let n = parent.len();
    let mut depth: Vec<Option<u32>> = vec![None; n];
    for start in 0..n {
        let mut chain = Vec::new();
        let mut v = start;
        while depth[v].is_none() {
            match parent[v] {
                Some(p) => {
                    chain.push(v);
                    v = p.0;
                }
                None => {
                    depth[v] = Some(0);
                    break;
                }
            }
        }
        let mut d = depth[v].unwrap();
        for &c in chain.iter().rev() {
            d += 1;
            depth[c] = Some(d);
        }
    }
    depth.into_iter().map(Option::unwrap).collect()
}

/// Shared escalation loop: raise the hop bound until the caching-point
/// tour fits the budget.
fn escalate(
    g: &Graph,
    hop: &HopMatrix,
    topo: &Topology,
    metric: &MetricClosure,
    cfg: &PlanConfig,
    mode: ForestMode,
) -> Result<Plan, PlanError> {
    cfg.validate()?;
    for k in 1..=cfg.k_max {
        let cps = find_cps(g, hop, topo, k);
        let tour = christofides(metric, &cps, topo.sink());
        if tour.length <= cfg.budget {
            let forest = build_routing(g, hop, topo, &cps, k, mode)?;
            return Ok(Plan {
                caching_points: cps,
                tour,
                forest,
                achieved_k: k,
            });
        }
    }
    Err(PlanError::Infeasible { k_max: cfg.k_max })
}

/// Graph-partitioning heuristic: dominating sets and routing over the
/// full communication graph.
pub fn gp_plan(topo: &Topology, cfg: &PlanConfig) -> Result<Plan, PlanError> {
    let g = topo.comm_graph();
    let hop = HopMatrix::compute(&g);
    let metric = topo.metric_closure(cfg.speed);
    escalate(&g, &hop, topo, &metric, cfg, ForestMode::Bfs)
}

/// Tree-partitioning heuristic: the same pipeline restricted to the
/// Euclidean MST of the communication graph; the tour itself still
/// travels the full Euclidean metric.
pub fn tp_plan(topo: &Topology, cfg: &PlanConfig) -> Result<Plan, PlanError> {
    let g = topo.comm_graph();
    let all: Vec<NodeId> = topo.node_ids().collect();
    let weight = |a: NodeId, b: NodeId| {
        if g.has_edge(a, b) {
            topo.euclid(a, b)
        } else {
            f64::INFINITY
        }
    };
    let tree = mst(&all, weight, topo.sink()).expect("topology is connected");
    let tree_g = tree.as_graph(topo.len());
    let hop = HopMatrix::compute(&tree_g);
    let metric = topo.metric_closure(cfg.speed);
    escalate(&tree_g, &hop, topo, &metric, cfg, ForestMode::Bfs)
}

/// One broken plan property; an empty violation list means feasible.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("tour does not start at the sink {expected}")]
    AnchorViolation { expected: NodeId },
    #[error("tour waypoints do not match the caching points")]
    TourMismatch,
    #[error("stored tour length {stored} differs from recomputed {computed}")]
    LengthMismatch { stored: f64, computed: f64 },
    #[error("tour length {length} exceeds budget {budget}")]
    BudgetViolation { length: f64, budget: f64 },
    #[error("node {node} is neither a caching point nor assigned to one")]
    CoverageViolation { node: NodeId },
    #[error("node {node} routes over {child}->{parent}, not a communication edge")]
    ForestEdgeViolation {
        node: NodeId,
        child: NodeId,
        parent: NodeId,
    },
    #[error("parent chain from node {node} does not reach a caching point")]
    BrokenChain { node: NodeId },
    #[error("node {node} has depth {depth}, beyond the bound {bound}")]
    DepthViolation {
        node: NodeId,
        depth: usize,
        bound: usize,
    },
}

/// Check a plan against every constraint of the problem: anchored single
/// tour over exactly the caching points, budget, full coverage, forest
/// edges on communication links and depth within `achieved_k`.
pub fn validate_plan(plan: &Plan, topo: &Topology, cfg: &PlanConfig) -> Vec<Violation> {
    let mut violations = Vec::new();
    let sink = topo.sink();
    let g = topo.comm_graph();
    let metric = topo.metric_closure(cfg.speed);

    if plan.tour.order.first() != Some(&sink) {
        violations.push(Violation::AnchorViolation { expected: sink });
    }

    let mut tour_sorted: Vec<NodeId> = plan.tour.order.clone();
    tour_sorted.sort();
    let tour_unique = tour_sorted.windows(2).all(|w| w[0] != w[1]);
    let mut cps_sorted = plan.caching_points.clone();
    cps_sorted.sort();
    if !tour_unique || tour_sorted != cps_sorted {
        violations.push(Violation::TourMismatch);
    }

    let computed = tour_length(&plan.tour.order, &metric);
    if (computed - plan.tour.length).abs() > 1e-6 {
        violations.push(Violation::LengthMismatch {
            stored: plan.tour.length,
            computed,
        });
    }
    if plan.tour.length > cfg.budget + BUDGET_EPS {
        violations.push(Violation::BudgetViolation {
            length: plan.tour.length,
            budget: cfg.budget,
        });
    }

    let forest = &plan.forest;
    let cp_set: std::collections::BTreeSet<NodeId> = plan.caching_points.iter().copied().collect();
    for v in forest.node_ids() {
        let is_cp = cp_set.contains(&v);
        if is_cp {
            if forest.assignment(v).is_some() || forest.parent(v).is_some() {
                violations.push(Violation::TourMismatch);
            }
            continue;
        }
        if forest.assignment(v).is_none() {
            violations.push(Violation::CoverageViolation { node: v });
            continue;
        }
        // walk the chain: every edge a communication link, terminating
        // at a caching point within the depth bound
        let mut cur = v;
        let mut steps = 0usize;
        loop {
            match forest.parent(cur) {
                Some(p) => {
                    if !g.has_edge(cur, p) {
                        violations.push(Violation::ForestEdgeViolation {
                            node: v,
                            child: cur,
                            parent: p,
                        });
                        break;
                    }
                    steps += 1;
                    cur = p;
                    if steps > forest.len() {
                        violations.push(Violation::BrokenChain { node: v });
                        break;
                    }
                }
                None => {
                    if !cp_set.contains(&cur) {
                        violations.push(Violation::BrokenChain { node: v });
                    } else if steps > plan.achieved_k {
                        violations.push(Violation::DepthViolation {
                            node: v,
                            depth: steps,
                            bound: plan.achieved_k,
                        });
                    }
                    break;
                }
            }
        }
    }
    violations
}
