//! Per-round radio energy accounting and network lifetime.
//!
//! Each collection round every node originates one packet. A node whose
//! forwarding subtree holds `s` packets receives `s - 1` of them from
//! its children and transmits all `s` — caching points included, since
//! they upload their aggregate to the mobile element at the same
//! per-packet cost and receive nothing back from it. Lifetime is the
//! number of whole rounds until the first node cannot finish its round.

use crate::graph::mst;
use crate::planner::Plan;
use crate::topology::Topology;
use crate::types::NodeId;

/// Radio and battery parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub bandwidth_bps: f64,
    pub tx_power_w: f64,
    pub rx_power_w: f64,
    pub battery_j: f64,
    pub packet_bytes: u32,
}

impl RadioParams {
    /// MICAz defaults: 250 kbit/s, 21 mW transmit, 15 mW receive, 10 J
    /// battery, 100-byte packets.
    pub fn micaz() -> Self {
        RadioParams {
            bandwidth_bps: 250_000.0,
            tx_power_w: 0.021,
            rx_power_w: 0.015,
            battery_j: 10.0,
            packet_bytes: 100,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.bandwidth_bps.is_finite() && self.bandwidth_bps > 0.0) {
            return Err("bandwidth must be positive".into());
        }
        if !(self.tx_power_w.is_finite() && self.tx_power_w > 0.0) {
            return Err("tx power must be positive".into());
        }
        if !(self.rx_power_w.is_finite() && self.rx_power_w > 0.0) {
            return Err("rx power must be positive".into());
        }
        // zero battery is allowed and yields a zero lifetime
        if !(self.battery_j.is_finite() && self.battery_j >= 0.0) {
            return Err("battery must be non-negative".into());
        }
        if self.packet_bytes == 0 {
            return Err("packet size must be positive".into());
        }
        Ok(())
    }
}

/// Mobile element speed and the budget scaling fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub speed: f64,
    pub budget_fraction: f64,
}

impl Default for MobilityParams {
    /// 1 m/s and 15% of the spanning-tree length.
    fn default() -> Self {
        MobilityParams {
            speed: 1.0,
            budget_fraction: 0.15,
        }
    }
}

/// Per-packet transmit and receive energy: airtime times radio power.
pub fn per_packet_energy(r: &RadioParams) -> (f64, f64) {
    let airtime = r.packet_bytes as f64 * 8.0 / r.bandwidth_bps;
    (r.tx_power_w * airtime, r.rx_power_w * airtime)
}

/// Per-node accounting for one plan.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEnergy {
    /// Packets per round through this node, its own included.
    pub subtree_size: usize,
    pub energy_per_round: f64,
    pub rounds_survivable: u64,
}

/// Lifetime report for a plan under given radio parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub lifetime_rounds: u64,
    pub first_dead: NodeId,
    pub per_node: Vec<NodeEnergy>,
    /// Set when the round cap stopped the simulation before any death.
    pub truncated: bool,
}

/// Packets relayed through each node per round: itself plus every node
/// whose parent chain passes through it.
pub fn subtree_sizes(plan: &Plan) -> Vec<usize> {
    let n = plan.n();
    let mut size = vec![0usize; n];
    for start in 0..n {
        let mut v = NodeId(start);
        loop {
            size[v.0] += 1;
            match plan.forest.parent(v) {
                Some(p) => v = p,
                None => break,
            }
        }
    }
    size
}

fn energy_per_round(plan: &Plan, radio: &RadioParams) -> Vec<(usize, f64)> {
    let (e_tx, e_rx) = per_packet_energy(radio);
    subtree_sizes(plan)
        .into_iter()
        .map(|s| (s, s as f64 * e_tx + (s - 1) as f64 * e_rx))
        .collect()
}

/// Node processing order for death accounting: leaves first (deepest),
/// lowest id inside a level. Both lifetime computations break ties the
/// same way so their reports agree exactly.
fn death_order(plan: &Plan) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = plan.forest.node_ids().collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(plan.forest.depth(v)), v));
    order
}

/// Closed-form lifetime: each node survives
/// `floor(battery / energy_per_round)` rounds and the network lives as
/// long as its shortest-lived node.
pub fn lifetime(plan: &Plan, radio: &RadioParams) -> SimReport {
    let rates = energy_per_round(plan, radio);
    let per_node: Vec<NodeEnergy> = rates
        .iter()
        .map(|&(s, e)| NodeEnergy {
            subtree_size: s,
            energy_per_round: e,
            rounds_survivable: (radio.battery_j / e).floor() as u64,
        })
        .collect();
    let (lifetime_rounds, first_dead) = death_order(plan)
        .iter()
        .map(|&v| (per_node[v.0].rounds_survivable, v))
        .min_by_key(|&(r, _)| r)
        .expect("plan has at least one node");
    SimReport {
        lifetime_rounds,
        first_dead,
        per_node,
        truncated: false,
    }
}

/// Round-by-round cross-check of [`lifetime`]: every node pays its
/// per-round energy until it cannot afford the next round or
/// `max_rounds` elapse; the network dies with its first node.
///
/// The residual after `m` rounds is computed as
/// `battery - m * energy_per_round` in one multiplication, so the death
/// round agrees with the closed form instead of accumulating a
/// subtraction error per round.
pub fn simulate_rounds(plan: &Plan, radio: &RadioParams, max_rounds: u64) -> SimReport {
    assert!(max_rounds >= 1);
    let rates = energy_per_round(plan, radio);
    let order = death_order(plan);

    let mut per_node: Vec<NodeEnergy> = rates
        .iter()
        .map(|&(s, e)| NodeEnergy {
            subtree_size: s,
            energy_per_round: e,
            rounds_survivable: 0,
        })
        .collect();
    for &v in &order {
        let e = rates[v.0].1;
        let mut rounds = 0u64;
        while rounds < max_rounds && (rounds + 1) as f64 * e <= radio.battery_j {
            rounds += 1;
        }
        per_node[v.0].rounds_survivable = rounds;
    }
    let (lifetime_rounds, first_dead) = order
        .iter()
        .map(|&v| (per_node[v.0].rounds_survivable, v))
        .min_by_key(|&(r, _)| r)
        .expect("plan has at least one node");
    SimReport {
        lifetime_rounds,
        first_dead,
        per_node,
        truncated: lifetime_rounds >= max_rounds,
    }
}

/// Tour budget from the deployment: `budget_fraction` of the Euclidean
/// spanning-tree length, travelled at the element's speed.
pub fn tour_budget(topo: &Topology, m: &MobilityParams) -> f64 {
    assert!(m.speed > 0.0 && m.budget_fraction > 0.0);
    let g = topo.comm_graph();
    let all: Vec<NodeId> = topo.node_ids().collect();
    let weight = |a: NodeId, b: NodeId| {
        if g.has_edge(a, b) {
            topo.euclid(a, b)
        } else {
            f64::INFINITY
        }
    };
    let tree_len = mst(&all, weight, topo.sink())
        .expect("topology is connected")
        .total_weight();
    m.budget_fraction * tree_len / m.speed
}
