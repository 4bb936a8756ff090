//! Closed-tour construction over selected waypoints.
//!
//! Christofides: MST over the waypoints, minimum-weight perfect matching
//! on the odd-degree vertices, Eulerian circuit, shortcut. The matching
//! is exact (bitmask DP) up to [`EXACT_MATCHING_LIMIT`] odd vertices and
//! greedy nearest-pair above that; the tour records which one ran.

use std::collections::BTreeMap;

use crate::graph::mst;
use crate::topology::MetricClosure;
use crate::types::NodeId;

/// Largest odd-vertex count still matched exactly.
pub const EXACT_MATCHING_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchingMode {
    Exact,
    Greedy,
}

/// A closed tour: `order` starts at the anchor and the closing edge back
/// to it is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub order: Vec<NodeId>,
    pub length: f64,
    pub matching: MatchingMode,
}

impl Tour {
    pub fn anchor(&self) -> NodeId {
        self.order[0]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Total travel time of a cyclic visit order, closing edge included.
pub fn tour_length(order: &[NodeId], metric: &MetricClosure) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for w in order.windows(2) {
        total += metric.get(w[0], w[1]);
    }
    total + metric.get(*order.last().unwrap(), order[0])
}

/// Christofides tour through `waypoints`, rotated to start at `anchor`.
///
/// One waypoint gives a zero-length tour, two an out-and-back. All
/// internal tie-breaks go to the lowest node id, so the result is a pure
/// function of its inputs.
pub fn christofides(metric: &MetricClosure, waypoints: &[NodeId], anchor: NodeId) -> Tour {
    assert!(!waypoints.is_empty(), "tour needs at least one waypoint");
    debug_assert!(waypoints.contains(&anchor), "anchor must be a waypoint");
    let mut points = waypoints.to_vec();
    points.sort();
    points.dedup();

    if points.len() == 1 {
        return Tour {
            order: vec![anchor],
            length: 0.0,
            matching: MatchingMode::Exact,
        };
    }
    if points.len() == 2 {
        let other = if points[0] == anchor { points[1] } else { points[0] };
        return Tour {
            order: vec![anchor, other],
            length: 2.0 * metric.get(anchor, other),
            matching: MatchingMode::Exact,
        };
    }

    let tree = mst(&points, |a, b| metric.get(a, b), anchor).expect("metric closure is complete");
    let mut degree: BTreeMap<NodeId, usize> = points.iter().map(|&v| (v, 0)).collect();
    let mut multigraph: BTreeMap<NodeId, BTreeMap<NodeId, usize>> = BTreeMap::new();
    let add_edge = |mg: &mut BTreeMap<NodeId, BTreeMap<NodeId, usize>>, a: NodeId, b: NodeId| {
        *mg.entry(a).or_default().entry(b).or_default() += 1;
        *mg.entry(b).or_default().entry(a).or_default() += 1;
    };
    for (c, p, _) in tree.edges() {
        *degree.get_mut(&c).unwrap() += 1;
        *degree.get_mut(&p).unwrap() += 1;
        add_edge(&mut multigraph, c, p);
    }

    let odd: Vec<NodeId> = degree
        .iter()
        .filter(|(_, &d)| d % 2 == 1)
        .map(|(&v, _)| v)
        .collect();
    debug_assert!(odd.len().is_multiple_of(2));

    let (pairs, matching) = if odd.len() <= EXACT_MATCHING_LIMIT {
        (exact_matching(&odd, metric), MatchingMode::Exact)
    } else {
        (greedy_matching(&odd, metric), MatchingMode::Greedy)
    };
    for (a, b) in pairs {
        add_edge(&mut multigraph, a, b);
    }

    let circuit = euler_circuit(&mut multigraph, anchor);

    // shortcut repeated vertices, keeping first occurrences
    let mut seen: BTreeMap<NodeId, ()> = BTreeMap::new();
    let mut order = Vec::with_capacity(points.len());
    for v in circuit {
        if seen.insert(v, ()).is_none() {
            order.push(v);
        }
    }
    debug_assert_eq!(order.len(), points.len());
    debug_assert_eq!(order[0], anchor);

    let length = tour_length(&order, metric);
    Tour {
        order,
        length,
        matching,
    }
}

/// Minimum-weight perfect matching by DP over vertex subsets.
fn exact_matching(odd: &[NodeId], metric: &MetricClosure) -> Vec<(NodeId, NodeId)> {
    let m = odd.len();
    if m == 0 {
        return Vec::new();
    }
    let full = (1usize << m) - 1;
    let mut cost = vec![f64::INFINITY; full + 1];
    let mut choice: Vec<(usize, usize)> = vec![(0, 0); full + 1];
    cost[0] = 0.0;
    for mask in 1..=full {
        if (mask as u32).count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        for j in i + 1..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let rest = mask ^ (1 << i) ^ (1 << j);
            let c = cost[rest] + metric.get(odd[i], odd[j]);
            if c < cost[mask] {
                cost[mask] = c;
                choice[mask] = (i, j);
            }
        }
    }
    let mut pairs = Vec::with_capacity(m / 2);
    let mut mask = full;
    while mask != 0 {
        let (i, j) = choice[mask];
        pairs.push((odd[i], odd[j]));
        mask ^= (1 << i) | (1 << j);
    }
    pairs
}

/// Nearest-pair greedy matching for large odd sets.
fn greedy_matching(odd: &[NodeId], metric: &MetricClosure) -> Vec<(NodeId, NodeId)> {
    let mut remaining = odd.to_vec();
    let mut pairs = Vec::with_capacity(odd.len() / 2);
    while remaining.len() > 1 {
        let mut best = (f64::INFINITY, 0usize, 1usize);
        for a in 0..remaining.len() {
            for b in a + 1..remaining.len() {
                let w = metric.get(remaining[a], remaining[b]);
                if w < best.0 {
                    best = (w, a, b);
                }
            }
        }
        let (_, a, b) = best;
        pairs.push((remaining[a], remaining[b]));
        remaining.remove(b);
        remaining.remove(a);
    }
    pairs
}

/// Hierholzer's algorithm; continues along the lowest-id available edge,
/// so the circuit is deterministic. Starts and ends at `start`.
fn euler_circuit(
    multigraph: &mut BTreeMap<NodeId, BTreeMap<NodeId, usize>>,
    start: NodeId,
) -> Vec<NodeId> {
    let mut circuit = Vec::new();
    let mut stack = vec![start];
    while let Some(&v) = stack.last() {
        let next = multigraph
            .get(&v)
            .and_then(|nbrs| nbrs.iter().find(|(_, &c)| c > 0).map(|(&u, _)| u));
        match next {
            Some(u) => {
                *multigraph.get_mut(&v).unwrap().get_mut(&u).unwrap() -= 1;
                *multigraph.get_mut(&u).unwrap().get_mut(&v).unwrap() -= 1;
                stack.push(u);
            }
            None => {
                circuit.push(stack.pop().unwrap());
            }
        }
    }
    circuit.reverse();
    circuit
}
