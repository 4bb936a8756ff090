//! Hop-distance computation, power graphs, the greedy k-hop dominating set,
//! minimum spanning trees and rooted-tree utilities.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::topology::MetricClosure;
use crate::types::NodeId;

/// Sentinel hop count for unreachable pairs.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge weights separate the vertex set into disconnected components")]
    Disconnected,
}

/// Undirected graph as sorted adjacency lists over dense node ids.
///
/// Symmetric and irreflexive by construction; self-loops and duplicate
/// edges are dropped on build.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<NodeId>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i == j {
                continue;
            }
            adj[i].push(NodeId(j));
            adj[j].push(NodeId(i));
        }
        for list in &mut adj {
            list.sort();
            list.dedup();
        }
        Graph { adj }
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v.0]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v.0].len()
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.adj[i.0].binary_search(&j).is_ok()
    }

    /// Undirected edges with `i < j`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (i, list) in self.adj.iter().enumerate() {
            for &j in list {
                if i < j.0 {
                    out.push((NodeId(i), j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([NodeId(0)]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &u in self.neighbors(v) {
                if !seen[u.0] {
                    seen[u.0] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == n
    }
}

/// All-pairs hop distances over a graph, with [`UNREACHABLE`] for
/// disconnected pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopMatrix {
    n: usize,
    d: Vec<u32>,
}

impl HopMatrix {
    /// BFS from every vertex.
    pub fn compute(g: &Graph) -> Self {
        let n = g.len();
        let mut d = vec![UNREACHABLE; n * n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            let row = &mut d[s * n..(s + 1) * n];
            row[s] = 0;
            queue.clear();
            queue.push_back(NodeId(s));
            while let Some(v) = queue.pop_front() {
                let dv = row[v.0];
                for &u in g.neighbors(v) {
                    if row[u.0] == UNREACHABLE {
                        row[u.0] = dv + 1;
                        queue.push_back(u);
                    }
                }
            }
        }
        HopMatrix { n, d }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: NodeId, j: NodeId) -> u32 {
        self.d[i.0 * self.n + j.0]
    }

    pub fn reachable(&self, i: NodeId, j: NodeId) -> bool {
        self.get(i, j) != UNREACHABLE
    }

    /// Largest finite hop distance from `v`.
    pub fn eccentricity(&self, v: NodeId) -> u32 {
        (0..self.n)
            .map(|j| self.get(v, NodeId(j)))
            .filter(|&h| h != UNREACHABLE)
            .max()
            .unwrap_or(0)
    }

    pub fn diameter(&self) -> u32 {
        (0..self.n)
            .map(|v| self.eccentricity(NodeId(v)))
            .max()
            .unwrap_or(0)
    }
}

/// The k-th power graph: an edge wherever the hop distance in `g` is
/// between 1 and `k`.
pub fn power_graph(g: &Graph, k: usize) -> Graph {
    assert!(k >= 1, "power graph order must be at least 1");
    let n = g.len();
    let mut adj = vec![Vec::new(); n];
    let mut depth = vec![UNREACHABLE; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        depth.fill(UNREACHABLE);
        depth[s] = 0;
        queue.clear();
        queue.push_back(NodeId(s));
        while let Some(v) = queue.pop_front() {
            let dv = depth[v.0];
            if dv as usize == k {
                continue;
            }
            for &u in g.neighbors(v) {
                if depth[u.0] == UNREACHABLE {
                    depth[u.0] = dv + 1;
                    adj[s].push(u);
                    queue.push_back(u);
                }
            }
        }
        adj[s].sort();
    }
    Graph { adj }
}

/// One group of the dominating-set partition: the removed high-degree
/// node and everything it dominated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomGroup {
    pub head: NodeId,
    /// Sorted, includes the head.
    pub members: Vec<NodeId>,
}

/// Partition of the vertex set produced by the greedy k-hop dominating
/// set; groups are in removal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomSet {
    pub groups: Vec<DomGroup>,
}

impl DomSet {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn heads(&self) -> Vec<NodeId> {
        self.groups.iter().map(|s| s.head).collect()
    }

    /// Group index per node; panics if `n` is smaller than some member id.
    pub fn group_index(&self, n: usize) -> Vec<usize> {
        let mut idx = vec![usize::MAX; n];
        for (gi, group) in self.groups.iter().enumerate() {
            for &m in &group.members {
                idx[m.0] = gi;
            }
        }
        idx
    }
}

/// Greedy k-hop dominating set: repeatedly remove the highest-degree
/// vertex of the (remaining) power graph together with its remaining
/// neighbors; each removal forms one group.
///
/// Degree ties break on the lowest node id so the output is stable.
pub fn k_dom_set(g: &Graph, k: usize) -> DomSet {
    let gk = power_graph(g, k);
    let n = gk.len();
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|v| gk.degree(NodeId(v))).collect();
    let mut remaining = n;
    let mut groups = Vec::new();
    while remaining > 0 {
        let mut head = usize::MAX;
        let mut best = 0usize;
        for v in 0..n {
            if alive[v] && (head == usize::MAX || deg[v] > best) {
                head = v;
                best = deg[v];
            }
        }
        let head = NodeId(head);
        let mut members = vec![head];
        members.extend(gk.neighbors(head).iter().copied().filter(|u| alive[u.0]));
        members.sort();
        for &m in &members {
            alive[m.0] = false;
        }
        for &m in &members {
            for &u in gk.neighbors(m) {
                if alive[u.0] {
                    deg[u.0] -= 1;
                }
            }
        }
        remaining -= members.len();
        groups.push(DomGroup { head, members });
    }
    DomSet { groups }
}

/// A rooted tree over a subset of the topology's nodes, with edge
/// weights in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    root: NodeId,
    vertices: Vec<NodeId>,
    /// child -> (parent, edge weight)
    parent: BTreeMap<NodeId, (NodeId, f64)>,
}

impl Tree {
    pub fn singleton(root: NodeId) -> Self {
        Tree {
            root,
            vertices: vec![root],
            parent: BTreeMap::new(),
        }
    }

    /// Root an undirected edge list at `root` (BFS orientation).
    /// The edges must form a tree containing `root`.
    pub fn from_edges(root: NodeId, edges: &[(NodeId, NodeId, f64)]) -> Self {
        let mut adj: BTreeMap<NodeId, Vec<(NodeId, f64)>> = BTreeMap::new();
        adj.entry(root).or_default();
        for &(a, b, w) in edges {
            adj.entry(a).or_default().push((b, w));
            adj.entry(b).or_default().push((a, w));
        }
        let mut parent = BTreeMap::new();
        let mut queue = VecDeque::from([root]);
        let mut seen = std::collections::BTreeSet::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(u, w) in &adj[&v] {
                if seen.insert(u) {
                    parent.insert(u, (v, w));
                    queue.push_back(u);
                }
            }
        }
        let vertices: Vec<NodeId> = adj.keys().copied().collect();
        debug_assert_eq!(seen.len(), vertices.len(), "edge list is not a tree");
        Tree {
            root,
            vertices,
            parent,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Sorted vertex list.
    pub fn vertices(&self) -> &[NodeId] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn parent_of(&self, v: NodeId) -> Option<NodeId> {
        self.parent.get(&v).map(|&(p, _)| p)
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.parent.iter().map(|(&c, &(p, w))| (c, p, w))
    }

    pub fn total_weight(&self) -> f64 {
        self.parent.values().map(|&(_, w)| w).sum()
    }

    /// Children of each vertex, sorted by (edge weight, id).
    pub fn children_by_weight(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut children: BTreeMap<NodeId, Vec<(f64, NodeId)>> = BTreeMap::new();
        for v in &self.vertices {
            children.entry(*v).or_default();
        }
        for (&c, &(p, w)) in &self.parent {
            children.entry(p).or_default().push((w, c));
        }
        children
            .into_iter()
            .map(|(v, mut kids)| {
                kids.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                (v, kids.into_iter().map(|(_, c)| c).collect())
            })
            .collect()
    }

    /// Depth-first pre-order from the root, visiting children in
    /// increasing edge-weight order (ties on id).
    pub fn pre_order(&self) -> Vec<NodeId> {
        let children = self.children_by_weight();
        let mut order = Vec::with_capacity(self.vertices.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            for &c in children[&v].iter().rev() {
                stack.push(c);
            }
        }
        order
    }

    pub fn depths(&self) -> BTreeMap<NodeId, u32> {
        let mut depths = BTreeMap::from([(self.root, 0u32)]);
        // parent map iterates in id order; walk chains instead.
        for &v in &self.vertices {
            let mut chain = Vec::new();
            let mut cur = v;
            while !depths.contains_key(&cur) {
                chain.push(cur);
                cur = self.parent[&cur].0;
            }
            let mut d = depths[&cur];
            for &c in chain.iter().rev() {
                d += 1;
                depths.insert(c, d);
            }
        }
        depths
    }

    pub fn max_depth(&self) -> u32 {
        self.depths().values().copied().max().unwrap_or(0)
    }

    /// Tree edges as an adjacency structure over `n` dense ids.
    pub fn as_graph(&self, n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = self.edges().map(|(c, p, _)| (c.0, p.0)).collect();
        Graph::from_edges(n, &edges)
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Kruskal MST over a vertex subset with an arbitrary symmetric weight
/// function; `f64::INFINITY` marks absent edges.
///
/// Ties break on (weight, min endpoint id, max endpoint id) so the tree
/// is unique for a given input.
pub fn mst(
    vertices: &[NodeId],
    weight: impl Fn(NodeId, NodeId) -> f64,
    root: NodeId,
) -> Result<Tree, GraphError> {
    assert!(!vertices.is_empty(), "mst needs at least one vertex");
    debug_assert!(vertices.contains(&root));
    if vertices.len() == 1 {
        return Ok(Tree::singleton(root));
    }
    let mut sorted: Vec<NodeId> = vertices.to_vec();
    sorted.sort();
    let mut candidates = Vec::new();
    for (ai, &a) in sorted.iter().enumerate() {
        for &b in &sorted[ai + 1..] {
            let w = weight(a, b);
            if w.is_finite() {
                candidates.push((w, a, b));
            }
        }
    }
    candidates.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap()
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let index: BTreeMap<NodeId, usize> = sorted.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut dsu = Dsu::new(sorted.len());
    let mut chosen = Vec::with_capacity(sorted.len() - 1);
    for (w, a, b) in candidates {
        if dsu.union(index[&a], index[&b]) {
            chosen.push((a, b, w));
            if chosen.len() == sorted.len() - 1 {
                break;
            }
        }
    }
    if chosen.len() != sorted.len() - 1 {
        return Err(GraphError::Disconnected);
    }
    Ok(Tree::from_edges(root, &chosen))
}

/// 2-approximate Steiner tree: the MST of the travel metric restricted
/// to the terminals, rooted at `root`.
///
/// With terminals covering every node this is exactly the Euclidean MST.
pub fn steiner_tree(metric: &MetricClosure, terminals: &[NodeId], root: NodeId) -> Tree {
    mst(terminals, |a, b| metric.get(a, b), root).expect("metric closure is complete")
}

/// BFS depths and parents from `root`; the parent is the lowest-id
/// neighbor one level closer to the root. `None` depth entries are
/// unreachable.
pub fn bfs_parents(g: &Graph, root: NodeId) -> (Vec<Option<NodeId>>, Vec<Option<u32>>) {
    let n = g.len();
    let mut depth: Vec<Option<u32>> = vec![None; n];
    depth[root.0] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let dv = depth[v.0].unwrap();
        for &u in g.neighbors(v) {
            if depth[u.0].is_none() {
                depth[u.0] = Some(dv + 1);
                queue.push_back(u);
            }
        }
    }
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    for v in 0..n {
        let Some(dv) = depth[v] else { continue };
        if dv == 0 {
            continue;
        }
        // neighbor lists are sorted, so the first match has the lowest id
        parent[v] = g
            .neighbors(NodeId(v))
            .iter()
            .copied()
            .find(|u| depth[u.0] == Some(dv - 1));
    }
    (parent, depth)
}

/// Shortest-path tree over the nodes reachable from `root`, unit edge
/// weights.
pub fn bfs_tree(g: &Graph, root: NodeId) -> Tree {
    let (parent, depth) = bfs_parents(g, root);
    let edges: Vec<(NodeId, NodeId, f64)> = (0..g.len())
        .filter(|&v| depth[v].is_some())
        .filter_map(|v| parent[v].map(|p| (NodeId(v), p, 1.0)))
        .collect();
    if edges.is_empty() {
        return Tree::singleton(root);
    }
    Tree::from_edges(root, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Graph::from_edges(n, &edges)
    }

    fn star(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (0, i)).collect();
        Graph::from_edges(n, &edges)
    }

    #[test]
    fn hop_distances_on_path() {
        let h = HopMatrix::compute(&path(3));
        assert_eq!(h.get(NodeId(0), NodeId(2)), 2);
        assert_eq!(h.get(NodeId(0), NodeId(1)), 1);
        assert_eq!(h.get(NodeId(1), NodeId(1)), 0);
    }

    #[test]
    fn hop_distances_complete_and_star() {
        let complete = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let h = HopMatrix::compute(&complete);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 0 } else { 1 };
                assert_eq!(h.get(NodeId(i), NodeId(j)), expect);
            }
        }
        let h = HopMatrix::compute(&star(4));
        assert_eq!(h.get(NodeId(1), NodeId(2)), 2);
    }

    #[test]
    fn hop_distance_unreachable() {
        let g = Graph::from_edges(3, &[(0, 1)]);
        let h = HopMatrix::compute(&g);
        assert_eq!(h.get(NodeId(0), NodeId(2)), UNREACHABLE);
        assert!(!h.reachable(NodeId(1), NodeId(2)));
    }

    #[test]
    fn power_graph_k1_is_identity() {
        let g = path(5);
        assert_eq!(power_graph(&g, 1), g);
    }

    #[test]
    fn power_graph_path_k2() {
        let gk = power_graph(&path(5), 2);
        assert_eq!(gk.neighbors(NodeId(0)), &[NodeId(1), NodeId(2)]);
        assert_eq!(
            gk.neighbors(NodeId(2)),
            &[NodeId(0), NodeId(1), NodeId(3), NodeId(4)]
        );
    }

    #[test]
    fn power_graph_beyond_diameter_is_complete() {
        let gk = power_graph(&path(4), 10);
        for v in 0..4 {
            assert_eq!(gk.degree(NodeId(v)), 3);
        }
    }

    #[test]
    fn k_dom_set_star_single_group() {
        let ds = k_dom_set(&star(5), 1);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.groups[0].head, NodeId(0));
        assert_eq!(ds.groups[0].members.len(), 5);
    }

    #[test]
    fn k_dom_set_path_k1_trace() {
        // degrees in G_1: 1,2,2,2,1 -> head 1 takes {0,1,2}; head 3 takes {3,4}
        let ds = k_dom_set(&path(5), 1);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.groups[0].head, NodeId(1));
        assert_eq!(ds.groups[0].members, vec![NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(ds.groups[1].head, NodeId(3));
        assert_eq!(ds.groups[1].members, vec![NodeId(3), NodeId(4)]);
    }

    #[test]
    fn k_dom_set_path_k2_single_group() {
        // node 2 has G_2-degree 4 and swallows the whole path
        let ds = k_dom_set(&path(5), 2);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.groups[0].head, NodeId(2));
        assert_eq!(ds.groups[0].members.len(), 5);
    }

    #[test]
    fn k_dom_set_members_within_k_of_head() {
        let g = path(9);
        let h = HopMatrix::compute(&g);
        for k in 1..4 {
            let ds = k_dom_set(&g, k);
            for group in &ds.groups {
                for &m in &group.members {
                    assert!(h.get(group.head, m) <= k as u32);
                }
            }
        }
    }

    #[test]
    fn mst_collinear_points() {
        let pos = [0.0f64, 1.0, 2.0];
        let w = |a: NodeId, b: NodeId| (pos[a.0] - pos[b.0]).abs();
        let vs = [NodeId(0), NodeId(1), NodeId(2)];
        let tree = mst(&vs, w, NodeId(0)).unwrap();
        assert_eq!(tree.total_weight(), 2.0);
        assert_eq!(tree.parent_of(NodeId(1)), Some(NodeId(0)));
        assert_eq!(tree.parent_of(NodeId(2)), Some(NodeId(1)));
    }

    #[test]
    fn mst_single_vertex() {
        let tree = mst(&[NodeId(3)], |_, _| 1.0, NodeId(3)).unwrap();
        assert_eq!(tree.total_weight(), 0.0);
        assert_eq!(tree.len(), 1);
    }

    #[test]
    fn mst_disconnected_errors() {
        let w = |a: NodeId, b: NodeId| {
            if (a.0 < 2) == (b.0 < 2) {
                1.0
            } else {
                f64::INFINITY
            }
        };
        let vs: Vec<NodeId> = (0..4).map(NodeId).collect();
        assert_eq!(mst(&vs, w, NodeId(0)), Err(GraphError::Disconnected));
    }

    #[test]
    fn bfs_tree_shapes() {
        // path rooted at one end is the path itself
        let t = bfs_tree(&path(4), NodeId(0));
        assert_eq!(t.max_depth(), 3);
        assert_eq!(t.parent_of(NodeId(3)), Some(NodeId(2)));

        // star rooted at the center has depth 1 everywhere
        let t = bfs_tree(&star(5), NodeId(0));
        assert_eq!(t.max_depth(), 1);

        // 4-cycle rooted at 0: depths 0,1,2,1
        let cycle = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let t = bfs_tree(&cycle, NodeId(0));
        let depths = t.depths();
        assert_eq!(depths[&NodeId(0)], 0);
        assert_eq!(depths[&NodeId(1)], 1);
        assert_eq!(depths[&NodeId(3)], 1);
        assert_eq!(depths[&NodeId(2)], 2);
    }

    #[test]
    fn pre_order_visits_cheap_children_first() {
        let tree = Tree::from_edges(
            NodeId(0),
            &[
                (NodeId(1), NodeId(0), 5.0),
                (NodeId(2), NodeId(0), 1.0),
                (NodeId(3), NodeId(2), 2.0),
            ],
        );
        assert_eq!(
            tree.pre_order(),
            vec![NodeId(0), NodeId(2), NodeId(3), NodeId(1)]
        );
    }
}
