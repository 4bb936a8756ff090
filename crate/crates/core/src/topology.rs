//! Network deployments: generation, the unit-disk communication graph,
//! the Euclidean travel metric and the topology file format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::Graph;
use crate::types::{NodeId, Point};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("no connected deployment after {attempts} attempts; communication range too small for this density")]
    ConnectivityFailure { attempts: usize },
    #[error("invalid topology: {0}")]
    Invalid(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How node positions are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeploymentKind {
    /// i.i.d. uniform over the square.
    Uniform,
    /// The square is cut into `grid_dim`² equal cells; `dense_cells` of
    /// them hold `density_multiplier` times the density of the rest.
    Variable {
        grid_dim: usize,
        dense_cells: usize,
        density_multiplier: f64,
    },
}

/// Parameters for one random deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentSpec {
    pub kind: DeploymentKind,
    pub n: usize,
    pub area_side: f64,
    pub seed: u64,
}

impl DeploymentSpec {
    pub fn uniform(n: usize, area_side: f64, seed: u64) -> Self {
        DeploymentSpec {
            kind: DeploymentKind::Uniform,
            n,
            area_side,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.n < 2 {
            return Err(TopologyError::Invalid(format!(
                "need at least 2 nodes, got {}",
                self.n
            )));
        }
        if !(self.area_side.is_finite() && self.area_side > 0.0) {
            return Err(TopologyError::Invalid("area side must be positive".into()));
        }
        if let DeploymentKind::Variable {
            grid_dim,
            dense_cells,
            density_multiplier,
        } = self.kind
        {
            if grid_dim == 0 {
                return Err(TopologyError::Invalid("grid dimension must be positive".into()));
            }
            if dense_cells > grid_dim * grid_dim {
                return Err(TopologyError::Invalid(format!(
                    "{} dense cells do not fit a {0}x{0} grid",
                    dense_cells
                )));
            }
            if !(density_multiplier.is_finite() && density_multiplier >= 1.0) {
                return Err(TopologyError::Invalid(
                    "density multiplier must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A deployed network: positions indexed by dense node id, the sink id
/// and the shared communication range.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<Point>,
    sink: NodeId,
    comm_range: f64,
}

impl Topology {
    /// Validates coordinates, the sink id, the range and connectivity of
    /// the induced communication graph.
    pub fn new(nodes: Vec<Point>, sink: NodeId, comm_range: f64) -> Result<Self, TopologyError> {
        if nodes.is_empty() {
            return Err(TopologyError::Invalid("topology has no nodes".into()));
        }
        if nodes.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(TopologyError::Invalid("non-finite coordinate".into()));
        }
        if !(comm_range.is_finite() && comm_range > 0.0) {
            return Err(TopologyError::Invalid(
                "communication range must be positive".into(),
            ));
        }
        if sink.0 >= nodes.len() {
            return Err(TopologyError::Invalid(format!(
                "sink id {} out of range for {} nodes",
                sink,
                nodes.len()
            )));
        }
        let topo = Topology {
            nodes,
            sink,
            comm_range,
        };
        if !topo.comm_graph().is_connected() {
            return Err(TopologyError::Invalid(
                "communication graph is disconnected".into(),
            ));
        }
        Ok(topo)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn comm_range(&self) -> f64 {
        self.comm_range
    }

    pub fn position(&self, v: NodeId) -> Point {
        self.nodes[v.0]
    }

    pub fn positions(&self) -> &[Point] {
        &self.nodes
    }

    pub fn euclid(&self, i: NodeId, j: NodeId) -> f64 {
        self.nodes[i.0].dist(&self.nodes[j.0])
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    /// Undirected edge wherever two distinct nodes are within the
    /// communication range; the boundary distance counts as an edge.
    pub fn comm_graph(&self) -> Graph {
        let n = self.nodes.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.nodes[i].dist(&self.nodes[j]) <= self.comm_range {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(n, &edges)
    }

    /// Travel times between every pair at the given constant speed.
    pub fn metric_closure(&self, speed: f64) -> MetricClosure {
        assert!(speed > 0.0, "speed must be positive");
        let n = self.nodes.len();
        let mut r = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let t = self.nodes[i].dist(&self.nodes[j]) / speed;
                r[i * n + j] = t;
                r[j * n + i] = t;
            }
        }
        MetricClosure { n, r }
    }

    /// Serialize to the text format understood by [`Topology::load`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "n {} sink {} range {}",
            self.nodes.len(),
            self.sink,
            self.comm_range
        )
        .unwrap();
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(out, "{} {} {}", i, p.x, p.y).unwrap();
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TopologyError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Parse the text format: a header line
    /// `n <count> sink <id> range <meters>` followed by `<id> <x> <y>`
    /// lines. `#` starts a comment; blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Self, TopologyError> {
        let parse_err = |line: usize, msg: &str| TopologyError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut rows = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (header_ln, header) = rows
            .next()
            .ok_or_else(|| parse_err(1, "missing header line"))?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() != 6 || tok[0] != "n" || tok[2] != "sink" || tok[4] != "range" {
            return Err(parse_err(
                header_ln,
                "expected header `n <count> sink <id> range <meters>`",
            ));
        }
        let n: usize = tok[1]
            .parse()
            .map_err(|_| parse_err(header_ln, "bad node count"))?;
        let sink: usize = tok[3]
            .parse()
            .map_err(|_| parse_err(header_ln, "bad sink id"))?;
        let range: f64 = tok[5]
            .parse()
            .map_err(|_| parse_err(header_ln, "bad range"))?;

        let mut nodes: Vec<Option<Point>> = vec![None; n];
        for (ln, row) in rows {
            let tok: Vec<&str> = row.split_whitespace().collect();
            if tok.len() != 3 {
                return Err(parse_err(ln, "expected `<id> <x> <y>`"));
            }
            let id: usize = tok[0].parse().map_err(|_| parse_err(ln, "bad node id"))?;
            let x: f64 = tok[1]
                .parse()
                .map_err(|_| parse_err(ln, "bad x coordinate"))?;
            let y: f64 = tok[2]
                .parse()
                .map_err(|_| parse_err(ln, "bad y coordinate"))?;
            if !(x.is_finite() && y.is_finite()) {
                return Err(parse_err(ln, "non-finite coordinate"));
            }
            if id >= n {
                return Err(parse_err(ln, "node id out of range"));
            }
            if nodes[id].is_some() {
                return Err(parse_err(ln, "duplicate node id"));
            }
            nodes[id] = Some(Point::new(x, y));
        }
        if let Some(missing) = nodes.iter().position(Option::is_none) {
            return Err(TopologyError::Parse {
                line: 1,
                msg: format!("node {} missing from file", missing),
            });
        }
        Topology::new(
            nodes.into_iter().map(Option::unwrap).collect(),
            NodeId(sink),
            range,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TopologyError> {
        Topology::from_text(&fs::read_to_string(path)?)
    }
}

/// Symmetric matrix of travel times (seconds) between all node pairs.
/// These are Euclidean distances scaled by the mobile element's speed,
/// so the triangle inequality holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricClosure {
    n: usize,
    r: Vec<f64>,
}

impl MetricClosure {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        self.r[i.0 * self.n + j.0]
    }

    pub fn max_entry(&self) -> f64 {
        self.r.iter().copied().fold(0.0, f64::max)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Deterministic per-attempt sub-seed: `splitmix64(seed + attempt)`.
pub fn sub_seed(seed: u64, attempt: u64) -> u64 {
    splitmix64(seed.wrapping_add(attempt))
}

/// Draw node positions for `spec` using the attempt's sub-seed, without
/// any connectivity check.
pub fn generate_positions(spec: &DeploymentSpec, attempt: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(spec.seed, attempt));
    let side = spec.area_side;
    match spec.kind {
        DeploymentKind::Uniform => (0..spec.n)
            .map(|_| {
                let x = rng.gen::<f64>() * side;
                let y = rng.gen::<f64>() * side;
                Point::new(x, y)
            })
            .collect(),
        DeploymentKind::Variable {
            grid_dim,
            dense_cells,
            density_multiplier,
        } => {
            let cells = grid_dim * grid_dim;
            // Fisher-Yates prefix picks the dense cells.
            let mut order: Vec<usize> = (0..cells).collect();
            for i in 0..dense_cells.min(cells.saturating_sub(1)) {
                let j = i + rng.gen_range(0..cells - i);
                order.swap(i, j);
            }
            let cell_side = side / grid_dim as f64;
            let x = density_multiplier;
            let total_weight = dense_cells as f64 * x + (cells - dense_cells) as f64;
            (0..spec.n)
                .map(|_| {
                    let u = rng.gen::<f64>() * total_weight;
                    let cell = if u < dense_cells as f64 * x {
                        order[(u / x) as usize]
                    } else {
                        let sparse_idx = (u - dense_cells as f64 * x) as usize;
                        order[dense_cells + sparse_idx.min(cells - dense_cells - 1)]
                    };
                    let (cx, cy) = (cell % grid_dim, cell / grid_dim);
                    Point::new(
                        (cx as f64 + rng.gen::<f64>()) * cell_side,
                        (cy as f64 + rng.gen::<f64>()) * cell_side,
                    )
                })
                .collect()
        }
    }
}

const MAX_GENERATE_ATTEMPTS: u64 = 100;

/// Draw a deployment and keep it if its communication graph is
/// connected; otherwise retry with an incremented sub-seed.
///
/// The sink is the node nearest the area center (lowest id on ties).
/// Output is a pure function of `(spec, comm_range)`.
pub fn generate(spec: &DeploymentSpec, comm_range: f64) -> Result<Topology, TopologyError> {
    spec.validate()?;
    if !(comm_range.is_finite() && comm_range > 0.0) {
        return Err(TopologyError::Invalid(
            "communication range must be positive".into(),
        ));
    }
    for attempt in 0..MAX_GENERATE_ATTEMPTS {
        let nodes = generate_positions(spec, attempt);
        let center = Point::new(spec.area_side / 2.0, spec.area_side / 2.0);
        let sink = nodes
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.dist(&center).partial_cmp(&b.dist(&center)).unwrap())
            .map(|(i, _)| NodeId(i))
            .unwrap();
        let topo = Topology {
            nodes,
            sink,
            comm_range,
        };
        if topo.comm_graph().is_connected() {
            return Ok(topo);
        }
    }
    Err(TopologyError::ConnectivityFailure {
        attempts: MAX_GENERATE_ATTEMPTS as usize,
    })
}
