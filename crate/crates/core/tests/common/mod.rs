//! Shared brute-force oracles and generators for the integration suites.
#![allow(dead_code)] // each test target uses its own subset

//! Everything here is independent of the library's algorithm paths: tours
//! by permutation, dominating sets and spanning trees by enumeration.

use muleplan_core::graph::Graph;
use muleplan_core::topology::{MetricClosure, Topology};
use muleplan_core::types::{NodeId, Point};
use rand::Rng;

/// Optimal closed tour through `waypoints` by checking every
/// permutation; returns the length and an optimal order anchored first.
pub fn brute_force_tsp(
    metric: &MetricClosure,
    waypoints: &[NodeId],
    anchor: NodeId,
) -> (f64, Vec<NodeId>) {
    let mut rest: Vec<NodeId> = waypoints.iter().copied().filter(|&v| v != anchor).collect();
    let mut best_len = f64::INFINITY;
    let mut best_order = vec![anchor];
    permute(&mut rest, 0, &mut |perm| {
        let mut order = Vec::with_capacity(waypoints.len());
        order.push(anchor);
        order.extend_from_slice(perm);
        let len = muleplan_core::tsp::tour_length(&order, metric);
        if len < best_len {
            best_len = len;
            best_order = order;
        }
    });
    (best_len, best_order)
}

fn permute(items: &mut Vec<NodeId>, start: usize, visit: &mut impl FnMut(&[NodeId])) {
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

/// Size of a minimum k-hop dominating set by subset enumeration
/// (n <= ~16).
pub fn brute_min_k_domset(g: &Graph, k: usize) -> usize {
    let n = g.len();
    assert!(n <= 16, "enumeration oracle is exponential");
    let hop = muleplan_core::graph::HopMatrix::compute(g);
    let mut best = n;
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let dominated = (0..n).all(|v| {
            (0..n).any(|d| mask & (1 << d) != 0 && (hop.get(NodeId(v), NodeId(d)) as usize) <= k)
        });
        if dominated {
            best = size;
        }
    }
    best
}

/// Minimum spanning weight by enumerating every (n-1)-edge subset
/// (n <= 6).
pub fn brute_min_spanning_weight(vertices: &[NodeId], weight: impl Fn(NodeId, NodeId) -> f64) -> f64 {
    let n = vertices.len();
    assert!((2..=6).contains(&n));
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w = weight(vertices[i], vertices[j]);
            if w.is_finite() {
                edges.push((i, j, w));
            }
        }
    }
    let m = edges.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        let mut ok = true;
        let mut total = 0.0;
        for (idx, &(a, b, w)) in edges.iter().enumerate() {
            if mask & (1 << idx) == 0 {
                continue;
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                ok = false; // cycle
                break;
            }
            parent[ra] = rb;
            total += w;
        }
        if ok {
            let root = find(&mut parent, 0);
            let spanning = (0..n).all(|v| find(&mut parent, v) == root);
            if spanning {
                best = best.min(total);
            }
        }
    }
    best
}

/// Seeded connected random graph: a random spanning tree plus extra
/// edges with probability `extra_p`.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, extra_p: f64) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < extra_p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

/// Seeded random connected topology: points in a square, rejection
/// sampled until the unit-disk graph at `range` connects.
pub fn random_topology(rng: &mut impl Rng, n: usize, side: f64, range: f64) -> Topology {
    loop {
        let nodes: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side))
            .collect();
        let sink = NodeId(rng.gen_range(0..n));
        if let Ok(topo) = Topology::new(nodes, sink, range) {
            return topo;
        }
    }
}

/// Counts from a parsed LP model.
#[derive(Debug, PartialEq, Eq)]
pub struct LpStats {
    pub constraints: usize,
    pub bounds: usize,
    pub binaries: usize,
    pub generals: usize,
}

/// Minimal CPLEX-LP grammar checker: verifies section order, the
/// objective, every constraint row (`name: terms relop number`), bounds
/// and variable lists. Zero coefficients are legal.
pub fn parse_lp(text: &str) -> Result<LpStats, String> {
    #[derive(PartialEq, Clone, Copy, Debug)]
    enum Section {
        Start,
        Objective,
        Constraints,
        Bounds,
        Binary,
        General,
        End,
    }
    let ident = |s: &str| {
        !s.is_empty()
            && s.chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '(' || c == ')')
            && !s.starts_with(|c: char| c.is_ascii_digit())
    };
    let number = |s: &str| s.parse::<f64>().is_ok();
    // term sequence: [sign] [coef] var [sign [coef] var ...]
    let terms_ok = |toks: &[&str]| -> bool {
        let mut i = 0;
        let mut seen = false;
        while i < toks.len() {
            if toks[i] == "+" || toks[i] == "-" {
                i += 1;
            } else if seen {
                return false; // terms after the first need a sign
            }
            if i < toks.len() && number(toks[i]) {
                i += 1;
            }
            if i < toks.len() && ident(toks[i]) {
                i += 1;
                seen = true;
            } else {
                return false;
            }
        }
        seen
    };

    let mut section = Section::Start;
    let mut stats = LpStats {
        constraints: 0,
        bounds: 0,
        binaries: 0,
        generals: 0,
    };
    let mut objective_seen = false;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        let fail = |msg: &str| Err(format!("line {}: {}", ln + 1, msg));
        match line {
            "Minimize" | "Maximize" => {
                if section != Section::Start {
                    return fail("objective section out of order");
                }
                section = Section::Objective;
                continue;
            }
            "Subject To" => {
                if section != Section::Objective || !objective_seen {
                    return fail("constraints before an objective");
                }
                section = Section::Constraints;
                continue;
            }
            "Bounds" => {
                section = Section::Bounds;
                continue;
            }
            "Binary" => {
                section = Section::Binary;
                continue;
            }
            "General" => {
                section = Section::General;
                continue;
            }
            "End" => {
                section = Section::End;
                continue;
            }
            _ => {}
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Objective => {
                let rest: Vec<&str> = if toks[0].ends_with(':') {
                    toks[1..].to_vec()
                } else {
                    toks.clone()
                };
                if !terms_ok(&rest) {
                    return fail("bad objective terms");
                }
                objective_seen = true;
            }
            Section::Constraints => {
                if !toks[0].ends_with(':') {
                    return fail("constraint without a name");
                }
                let rel = toks
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "="))
                    .ok_or_else(|| format!("line {}: constraint without a relation", ln + 1))?;
                if !terms_ok(&toks[1..rel]) {
                    return fail("bad constraint terms");
                }
                if toks.len() != rel + 2 || !number(toks[rel + 1]) {
                    return fail("constraint must end in a number");
                }
                stats.constraints += 1;
            }
            Section::Bounds => {
                // form: num <= var <= num
                if toks.len() != 5
                    || !number(toks[0])
                    || toks[1] != "<="
                    || !ident(toks[2])
                    || toks[3] != "<="
                    || !number(toks[4])
                {
                    return fail("bad bounds row");
                }
                stats.bounds += 1;
            }
            Section::Binary => {
                if toks.len() != 1 || !ident(toks[0]) {
                    return fail("bad binary row");
                }
                stats.binaries += 1;
            }
            Section::General => {
                if toks.len() != 1 || !ident(toks[0]) {
                    return fail("bad general row");
                }
                stats.generals += 1;
            }
            Section::Start | Section::End => return fail("content outside any section"),
        }
    }
    if section != Section::End {
        return Err("missing End".into());
    }
    Ok(stats)
}
