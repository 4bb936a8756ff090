//! Multi-mobile-element planning: hop-distance medoid clustering and
//! per-partition planning with GP or RD-VT.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, HopMatrix};
use crate::planner::{gp_plan, Plan, PlanConfig, PlanError};
use crate::rdvt::rdvt_plan;
use crate::topology::{sub_seed, Topology};
use crate::types::NodeId;

/// Configuration for a fleet of mobile elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiConfig {
    /// Number of mobile elements (= partitions).
    pub elements: usize,
    /// Per-element tour budget, seconds.
    pub budget: f64,
    pub k_max: usize,
    pub speed: f64,
    /// Seed for the clustering initialization.
    pub seed: u64,
}

/// Which single-element planner runs inside each partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionPlanner {
    Gp,
    Rdvt,
}

/// A medoid clustering over the communication graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub centers: Vec<NodeId>,
    /// Cluster index per node.
    pub membership: Vec<usize>,
}

impl Clustering {
    pub fn cluster_members(&self, index: usize) -> Vec<NodeId> {
        self.membership
            .iter()
            .enumerate()
            .filter(|&(_, &m)| m == index)
            .map(|(v, _)| NodeId(v))
            .collect()
    }

    /// Sum of hop distances from every node to its own center.
    pub fn total_cost(&self, hop: &HopMatrix) -> u64 {
        self.membership
            .iter()
            .enumerate()
            .map(|(v, &m)| hop.get(NodeId(v), self.centers[m]) as u64)
            .sum()
    }
}

fn assign(centers: &[NodeId], hop: &HopMatrix, topo: &Topology) -> Vec<usize> {
    (0..topo.len())
        .map(|v| {
            let v = NodeId(v);
            let mut best = (u32::MAX, f64::INFINITY, usize::MAX);
            for (ci, &center) in centers.iter().enumerate() {
                let key = (hop.get(v, center), topo.euclid(v, center), ci);
                if key < best {
                    best = key;
                }
            }
            best.2
        })
        .collect()
}

fn medoids(centers: &[NodeId], membership: &[usize], hop: &HopMatrix) -> Vec<NodeId> {
    (0..centers.len())
        .map(|ci| {
            let members: Vec<NodeId> = membership
                .iter()
                .enumerate()
                .filter(|&(_, &m)| m == ci)
                .map(|(v, _)| NodeId(v))
                .collect();
            let mut best = (u64::MAX, NodeId(usize::MAX));
            for &v in &members {
                let cost: u64 = members.iter().map(|&m| hop.get(v, m) as u64).sum();
                if (cost, v) < best {
                    best = (cost, v);
                }
            }
            best.1
        })
        .collect()
}

const MEDOID_ITERATION_CAP: usize = 100;

/// Medoid iteration from explicit initial centers: assign every node to
/// the hop-nearest center (ties: Euclidean distance, then cluster
/// index), recompute each center as the member closest to all other
/// members (ties: lowest id), and repeat until the centers stop changing
/// or the iteration cap is reached. Returns the cheapest configuration
/// seen, so oscillating center sets still yield a stable answer.
pub fn find_clusters_from(
    hop: &HopMatrix,
    topo: &Topology,
    initial_centers: &[NodeId],
) -> Clustering {
    assert!(!initial_centers.is_empty());
    let mut centers = initial_centers.to_vec();
    let mut best: Option<(u64, Clustering)> = None;
    for _ in 0..MEDOID_ITERATION_CAP {
        let membership = assign(&centers, hop, topo);
        let clustering = Clustering {
            centers: centers.clone(),
            membership,
        };
        let cost = clustering.total_cost(hop);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, clustering.clone()));
        }
        let next = medoids(&centers, &clustering.membership, hop);
        if next == centers {
            break;
        }
        centers = next;
    }
    best.unwrap().1
}

/// Seeded clustering: `c` distinct initial centers drawn uniformly, then
/// the medoid iteration of [`find_clusters_from`].
pub fn find_clusters(
    _g: &Graph,
    hop: &HopMatrix,
    topo: &Topology,
    c: usize,
    seed: u64,
) -> Clustering {
    assert!(c >= 1 && c <= topo.len(), "need 1 <= c <= n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = topo.len();
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..c.min(n - 1) {
        let j = i + rng.gen_range(0..n - i);
        order.swap(i, j);
    }
    let initial: Vec<NodeId> = order[..c].iter().map(|&v| NodeId(v)).collect();
    find_clusters_from(hop, topo, &initial)
}

/// One mobile element's share of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub index: usize,
    /// Cluster center in global ids; acts as the partition's sink.
    pub center: NodeId,
    /// Sorted global ids; position = local id in `topology` and `plan`.
    pub nodes: Vec<NodeId>,
    /// Induced sub-topology over `nodes`.
    pub topology: Topology,
    /// Plan in local ids.
    pub plan: Plan,
}

impl Partition {
    pub fn to_global(&self, local: NodeId) -> NodeId {
        self.nodes[local.0]
    }
}

const CLUSTER_RETRY_LIMIT: u64 = 10;

/// Partition the network into `elements` clusters and plan each with the
/// chosen heuristic, the cluster center acting as the partition sink.
///
/// Clusterings whose induced subgraphs are disconnected are retried with
/// an incremented sub-seed a few times before giving up.
pub fn mp_plan(
    topo: &Topology,
    mc: &MultiConfig,
    planner: PartitionPlanner,
) -> Result<Vec<Partition>, PlanError> {
    if mc.elements < 1 || mc.elements > topo.len() {
        return Err(PlanError::InvalidConfig(format!(
            "need 1 <= elements <= n, got {}",
            mc.elements
        )));
    }
    let cfg = PlanConfig::new(mc.budget, mc.k_max, mc.speed)?;
    let g = topo.comm_graph();
    let hop = HopMatrix::compute(&g);

    let mut last_bad_cluster = 0;
    for attempt in 0..CLUSTER_RETRY_LIMIT {
        let clustering = find_clusters(&g, &hop, topo, mc.elements, sub_seed(mc.seed, attempt));
        match build_partitions(topo, &clustering) {
            Ok(parts) => {
                let mut out = Vec::with_capacity(parts.len());
                for (index, center, nodes, sub_topo) in parts {
                    let plan = match planner {
                        PartitionPlanner::Gp => gp_plan(&sub_topo, &cfg)?,
                        PartitionPlanner::Rdvt => rdvt_plan(&sub_topo, &cfg)?,
                    };
                    out.push(Partition {
                        index,
                        center,
                        nodes,
                        topology: sub_topo,
                        plan,
                    });
                }
                return Ok(out);
            }
            Err(cluster) => last_bad_cluster = cluster,
        }
    }
    Err(PlanError::PartitionDisconnected {
        cluster: last_bad_cluster,
    })
}

type RawPartition = (usize, NodeId, Vec<NodeId>, Topology);

/// Induced sub-topologies per cluster, or the index of a cluster whose
/// subgraph is disconnected.
fn build_partitions(topo: &Topology, clustering: &Clustering) -> Result<Vec<RawPartition>, usize> {
    let mut out = Vec::with_capacity(clustering.centers.len());
    for (ci, &center) in clustering.centers.iter().enumerate() {
        let nodes = clustering.cluster_members(ci);
        let positions = nodes.iter().map(|&v| topo.position(v)).collect();
        let local_sink = nodes
            .binary_search(&center)
            .expect("center belongs to its own cluster");
        match Topology::new(positions, NodeId(local_sink), topo.comm_range()) {
            Ok(sub) => out.push((ci, center, nodes, sub)),
            Err(_) => return Err(ci),
        }
    }
    Ok(out)
}
