//! The RD-VT baseline: pre-order traversal of the Euclidean spanning
//! tree, growing the tour while the budget allows.

use crate::graph::{steiner_tree, HopMatrix};
use crate::planner::{build_routing, ForestMode, Plan, PlanConfig, PlanError};
use crate::topology::Topology;
use crate::tsp::christofides;
use crate::types::NodeId;

/// Walk the spanning tree in pre-order (cheap edges first) and add each
/// node to the tour as long as the recomputed Christofides tour stays
/// within the budget; stop at the first node that does not fit.
///
/// Visited nodes become the caching points. Everything else routes to
/// its hop-nearest tour node with no depth bound; the observed maximum
/// depth is recorded as `achieved_k`.
pub fn rdvt_plan(topo: &Topology, cfg: &PlanConfig) -> Result<Plan, PlanError> {
    cfg.validate()?;
    let g = topo.comm_graph();
    let hop = HopMatrix::compute(&g);
    let metric = topo.metric_closure(cfg.speed);
    let sink = topo.sink();
    let all: Vec<NodeId> = topo.node_ids().collect();
    let tree = steiner_tree(&metric, &all, sink);

    let mut visited = vec![sink];
    let mut tour = christofides(&metric, &visited, sink);
    for &v in tree.pre_order().iter().skip(1) {
        let mut tentative = visited.clone();
        tentative.push(v);
        let candidate = christofides(&metric, &tentative, sink);
        if candidate.length <= cfg.budget {
            visited = tentative;
            tour = candidate;
        } else {
            break;
        }
    }

    let forest = build_routing(&g, &hop, topo, &visited, usize::MAX, ForestMode::Bfs)?;
    let achieved_k = forest.max_depth() as usize;
    Ok(Plan {
        caching_points: visited,
        tour,
        forest,
        achieved_k,
    })
}
