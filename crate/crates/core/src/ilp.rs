//! Integer-program export of the tour/assignment problem and an exact
//! brute-force solver for tiny instances.
//!
//! The exported model minimizes tour travel time plus a big-M-weighted
//! assignment hop count, subject to flow balance at every node, unit
//! sink degree, the travel budget, tour/assignment exclusivity and
//! coverage, MTZ subtour-elimination ordering and the per-assignment
//! hop bound. Variables: binary `y_i_j` (directed tour edges), binary
//! `x_i_j` (node `i` off the tour stores at tour node `j`), integer
//! `z_i` in `[0, n-1]` (tour positions).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{HopMatrix, UNREACHABLE};
use crate::topology::{MetricClosure, Topology};
use crate::types::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum IlpError {
    #[error("objective weight {big_m} must exceed the largest travel time {max_r}")]
    BigMTooSmall { big_m: f64, max_r: f64 },
    #[error("hop matrix contains unreachable pairs")]
    Disconnected,
    #[error("instance has {n} nodes; the exact oracle enumerates at most {limit}")]
    OracleTooLarge { n: usize, limit: usize },
    #[error("no tour within budget {budget} covers every node within {k} hops")]
    Infeasible { budget: f64, k: usize },
}

/// Largest instance the enumeration oracle accepts.
pub const ORACLE_NODE_LIMIT: usize = 9;

/// A concrete problem instance: travel times, hop counts and the two
/// constraint parameters.
#[derive(Debug, Clone)]
pub struct IlpInstance {
    n: usize,
    sink: NodeId,
    travel: MetricClosure,
    hops: HopMatrix,
    budget: f64,
    k: usize,
    big_m: f64,
}

impl IlpInstance {
    /// `big_m` defaults to `n * max_travel + 1`, which both exceeds the
    /// largest travel time and dominates any possible tour length.
    pub fn new(
        travel: MetricClosure,
        hops: HopMatrix,
        sink: NodeId,
        budget: f64,
        k: usize,
        big_m: Option<f64>,
    ) -> Result<Self, IlpError> {
        let n = travel.len();
        assert_eq!(n, hops.len(), "matrix sizes differ");
        assert!(sink.0 < n, "sink out of range");
        for i in 0..n {
            for j in 0..n {
                if i != j && hops.get(NodeId(i), NodeId(j)) == UNREACHABLE {
                    return Err(IlpError::Disconnected);
                }
            }
        }
        let max_r = travel.max_entry();
        let big_m = big_m.unwrap_or(n as f64 * max_r + 1.0);
        if big_m <= max_r {
            return Err(IlpError::BigMTooSmall { big_m, max_r });
        }
        Ok(IlpInstance {
            n,
            sink,
            travel,
            hops,
            budget,
            k,
            big_m,
        })
    }

    pub fn from_topology(
        topo: &Topology,
        speed: f64,
        budget: f64,
        k: usize,
        big_m: Option<f64>,
    ) -> Result<Self, IlpError> {
        let travel = topo.metric_closure(speed);
        let hops = HopMatrix::compute(&topo.comm_graph());
        IlpInstance::new(travel, hops, topo.sink(), budget, k, big_m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }
}

/// Render the instance in CPLEX LP text format.
///
/// Exclusivity and hop-bound constraints are emitted for every ordered
/// pair including `i = j` (the diagonal hop rows carry an explicit zero
/// coefficient since `x_i_i` is not a variable); the strict coverage
/// inequality is rewritten as `>= 1`, which is equivalent over binaries.
pub fn export_lp(inst: &IlpInstance) -> String {
    let n = inst.n;
    let s = inst.sink.0;
    let mut out = String::new();
    writeln!(out, "\\ mobile-element tour model, n={} sink={}", n, s).unwrap();
    let others = |i: usize| (0..n).filter(move |&j| j != i);

    // objective: travel cost plus big-M-weighted assignment hops
    out.push_str("Minimize\n obj:");
    let mut first = true;
    for i in 0..n {
        for j in others(i) {
            let sep = if first { " " } else { " + " };
            write!(
                out,
                "{sep}{} y_{}_{}",
                inst.travel.get(NodeId(i), NodeId(j)),
                i,
                j
            )
            .unwrap();
            first = false;
        }
    }
    for i in 0..n {
        for j in others(i) {
            let coeff = inst.big_m * inst.hops.get(NodeId(i), NodeId(j)) as f64;
            write!(out, " + {coeff} x_{i}_{j}").unwrap();
        }
    }
    out.push('\n');

    out.push_str("Subject To\n");
    // flow balance at every node
    for j in 0..n {
        write!(out, " flow_{j}:").unwrap();
        for i in others(j) {
            write!(out, " + y_{i}_{j}").unwrap();
        }
        for i in others(j) {
            write!(out, " - y_{j}_{i}").unwrap();
        }
        out.push_str(" = 0\n");
    }
    // the tour leaves and enters the sink exactly once
    write!(out, " sink_out:").unwrap();
    for i in others(s) {
        write!(out, " + y_{s}_{i}").unwrap();
    }
    out.push_str(" = 1\n");
    write!(out, " sink_in:").unwrap();
    for i in others(s) {
        write!(out, " + y_{i}_{s}").unwrap();
    }
    out.push_str(" = 1\n");
    // travel budget
    write!(out, " budget:").unwrap();
    for i in 0..n {
        for j in others(i) {
            write!(out, " + {} y_{}_{}", inst.travel.get(NodeId(i), NodeId(j)), i, j).unwrap();
        }
    }
    writeln!(out, " <= {}", inst.budget).unwrap();
    // a node on the tour stores nobody's data elsewhere
    for i in 0..n {
        for j in 0..n {
            write!(out, " excl_{i}_{j}:").unwrap();
            if i != j {
                write!(out, " + x_{i}_{j}").unwrap();
            }
            for l in others(i) {
                write!(out, " + y_{i}_{l}").unwrap();
            }
            out.push_str(" <= 1\n");
        }
    }
    // every node is on the tour or assigned to it
    for i in 0..n {
        write!(out, " cover_{i}:").unwrap();
        for j in others(i) {
            write!(out, " + y_{i}_{j}").unwrap();
        }
        for j in others(i) {
            write!(out, " + x_{i}_{j}").unwrap();
        }
        out.push_str(" >= 1\n");
    }
    // MTZ ordering
    for i in 0..n {
        for j in (0..n).filter(|&j| j != s && j != i) {
            writeln!(out, " mtz_{i}_{j}: + z_{i} - z_{j} + {n} y_{i}_{j} <= {}", n - 1).unwrap();
        }
    }
    // assignment hop bound; diagonal rows keep the row count at n^2
    for i in 0..n {
        for j in 0..n {
            let var_j = if i == j { others(i).next().unwrap() } else { j };
            let coeff = if i == j {
                0
            } else {
                inst.hops.get(NodeId(i), NodeId(j))
            };
            writeln!(out, " hop_{i}_{j}: + {coeff} x_{i}_{var_j} <= {}", inst.k).unwrap();
        }
    }

    out.push_str("Bounds\n");
    for i in 0..n {
        writeln!(out, " 0 <= z_{i} <= {}", n - 1).unwrap();
    }
    out.push_str("Binary\n");
    for i in 0..n {
        for j in others(i) {
            writeln!(out, " y_{i}_{j}").unwrap();
        }
    }
    for i in 0..n {
        for j in others(i) {
            writeln!(out, " x_{i}_{j}").unwrap();
        }
    }
    out.push_str("General\n");
    for i in 0..n {
        writeln!(out, " z_{i}").unwrap();
    }
    out.push_str("End\n");
    out
}

/// Optimal tour-and-assignment for a tiny instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Visit order, starting at the sink.
    pub tour: Vec<NodeId>,
    /// node off the tour -> hop-nearest tour node.
    pub assignment: BTreeMap<NodeId, NodeId>,
    pub assignment_hops: u64,
    pub travel_time: f64,
}

impl OracleSolution {
    /// Lexicographic objective `(assignment hops, travel time)`, which a
    /// sufficiently large big-M makes equivalent to the weighted sum.
    pub fn objective(&self) -> (u64, f64) {
        (self.assignment_hops, self.travel_time)
    }
}

/// Enumerate every sink-containing subset and every visit order; keep
/// tours within the budget, assign outside nodes to their hop-nearest
/// tour node subject to the hop bound, and minimize
/// `(assignment hops, travel time)` lexicographically.
pub fn brute_oracle(inst: &IlpInstance) -> Result<OracleSolution, IlpError> {
    let n = inst.n;
    if n > ORACLE_NODE_LIMIT {
        return Err(IlpError::OracleTooLarge {
            n,
            limit: ORACLE_NODE_LIMIT,
        });
    }
    let sink = inst.sink;
    let mut best: Option<OracleSolution> = None;
    for mask in 0u32..(1 << n) {
        if mask & (1 << sink.0) == 0 {
            continue;
        }
        let subset: Vec<NodeId> = (0..n).filter(|&v| mask & (1 << v) != 0).map(NodeId).collect();

        // hop-nearest tour node per outside node, within the bound
        let mut assignment = BTreeMap::new();
        let mut hops_total = 0u64;
        let mut coverable = true;
        for v in (0..n).map(NodeId) {
            if mask & (1 << v.0) != 0 {
                continue;
            }
            let nearest = subset
                .iter()
                .map(|&cp| (inst.hops.get(v, cp), cp))
                .min()
                .unwrap();
            if nearest.0 as usize > inst.k {
                coverable = false;
                break;
            }
            hops_total += nearest.0 as u64;
            assignment.insert(v, nearest.1);
        }
        if !coverable {
            continue;
        }
        if let Some(ref b) = best {
            if hops_total > b.assignment_hops {
                continue;
            }
        }

        let Some((travel, order)) = best_tour(&subset, sink, &inst.travel, inst.budget) else {
            continue;
        };
        let candidate = OracleSolution {
            tour: order,
            assignment,
            assignment_hops: hops_total,
            travel_time: travel,
        };
        if best
            .as_ref()
            .is_none_or(|b| candidate.objective() < b.objective())
        {
            best = Some(candidate);
        }
    }
    best.ok_or(IlpError::Infeasible {
        budget: inst.budget,
        k: inst.k,
    })
}

/// Cheapest cyclic order through `subset` starting at the sink, if any
/// fits the budget.
fn best_tour(
    subset: &[NodeId],
    sink: NodeId,
    travel: &MetricClosure,
    budget: f64,
) -> Option<(f64, Vec<NodeId>)> {
    let mut rest: Vec<NodeId> = subset.iter().copied().filter(|&v| v != sink).collect();
    let mut best: Option<(f64, Vec<NodeId>)> = None;
    permute(&mut rest, 0, &mut |perm| {
        let mut order = Vec::with_capacity(subset.len());
        order.push(sink);
        order.extend_from_slice(perm);
        let len = crate::tsp::tour_length(&order, travel);
        if best.as_ref().is_none_or(|(b, _)| len < *b) {
            best = Some((len, order));
        }
    });
    best.filter(|&(len, _)| len <= budget)
}

fn permute(items: &mut [NodeId], start: usize, visit: &mut impl FnMut(&[NodeId])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}
