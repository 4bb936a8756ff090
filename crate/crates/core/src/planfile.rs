//! Plan file format: a structured text block per plan.
//!
//! ```text
//! # optional comments
//! partition 0            (multi-element files only)
//! plan algo gp n 5 sink 0 k 1 length 6 budget 100 matching exact
//! cps 0 1 3
//! tour 0 1 3
//! route 2 1 1 1          (child parent cp depth)
//! route 4 3 3 1
//! end
//! ```
//!
//! Ids are global node ids; a block's member set is its caching points
//! plus its route children.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::planner::{Plan, RoutingForest};
use crate::tsp::{MatchingMode, Tour};
use crate::types::NodeId;

#[derive(Debug, Error)]
pub enum PlanFileError {
    #[error("plan parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("inconsistent plan block: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One `child parent cp depth` row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteRow {
    pub child: NodeId,
    pub parent: NodeId,
    pub cp: NodeId,
    pub depth: u32,
}

/// A serialized plan, possibly one partition of a multi-element file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanBlock {
    pub partition: Option<usize>,
    pub algo: String,
    pub n: usize,
    pub sink: NodeId,
    pub achieved_k: usize,
    pub length: f64,
    pub budget: f64,
    pub matching: MatchingMode,
    pub cps: Vec<NodeId>,
    pub tour: Vec<NodeId>,
    pub routes: Vec<RouteRow>,
}

impl PlanBlock {
    /// Capture a plan; `mapping` translates the plan's dense local ids
    /// to global ids (identity when absent).
    pub fn from_plan(
        plan: &Plan,
        algo: &str,
        budget: f64,
        partition: Option<usize>,
        mapping: Option<&[NodeId]>,
    ) -> Self {
        let to_global = |v: NodeId| mapping.map_or(v, |m| m[v.0]);
        let routes = plan
            .forest
            .node_ids()
            .filter_map(|v| {
                let parent = plan.forest.parent(v)?;
                let cp = plan.forest.assignment(v)?;
                Some(RouteRow {
                    child: to_global(v),
                    parent: to_global(parent),
                    cp: to_global(cp),
                    depth: plan.forest.depth(v),
                })
            })
            .collect();
        PlanBlock {
            partition,
            algo: algo.to_string(),
            n: plan.n(),
            sink: to_global(plan.tour.anchor()),
            achieved_k: plan.achieved_k,
            length: plan.tour.length,
            budget,
            matching: plan.tour.matching,
            cps: plan.caching_points.iter().map(|&v| to_global(v)).collect(),
            tour: plan.tour.order.iter().map(|&v| to_global(v)).collect(),
            routes,
        }
    }

    /// Sorted member set: caching points plus route children. The index
    /// of a global id in this list is its local id in [`Self::to_plan`].
    pub fn members(&self) -> Vec<NodeId> {
        let mut members: Vec<NodeId> = self.cps.clone();
        members.extend(self.routes.iter().map(|r| r.child));
        members.sort();
        members.dedup();
        members
    }

    /// Rebuild a dense-id plan; returns the plan and the local-to-global
    /// mapping.
    pub fn to_plan(&self) -> Result<(Plan, Vec<NodeId>), PlanFileError> {
        let members = self.members();
        if members.len() != self.n {
            return Err(PlanFileError::Inconsistent(format!(
                "header says n {} but the block holds {} nodes",
                self.n,
                members.len()
            )));
        }
        let local: BTreeMap<NodeId, usize> =
            members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let to_local = |v: NodeId, what: &str| -> Result<NodeId, PlanFileError> {
            local
                .get(&v)
                .map(|&i| NodeId(i))
                .ok_or_else(|| PlanFileError::Inconsistent(format!("{what} references foreign node {v}")))
        };

        let m = members.len();
        let mut assignment = vec![None; m];
        let mut parent = vec![None; m];
        let mut depth = vec![0u32; m];
        for row in &self.routes {
            let child = to_local(row.child, "route")?;
            if assignment[child.0].is_some() {
                return Err(PlanFileError::Inconsistent(format!(
                    "node {} routed twice",
                    row.child
                )));
            }
            assignment[child.0] = Some(to_local(row.cp, "route")?);
            parent[child.0] = Some(to_local(row.parent, "route")?);
            depth[child.0] = row.depth;
        }
        let mut tour = Vec::with_capacity(self.tour.len());
        for &v in &self.tour {
            tour.push(to_local(v, "tour")?);
        }
        let mut cps = Vec::with_capacity(self.cps.len());
        for &v in &self.cps {
            cps.push(to_local(v, "cps")?);
        }
        let plan = Plan {
            caching_points: cps,
            tour: Tour {
                order: tour,
                length: self.length,
                matching: self.matching,
            },
            forest: RoutingForest::from_parts(assignment, parent, depth),
            achieved_k: self.achieved_k,
        };
        Ok((plan, members))
    }
}

fn write_block(out: &mut String, block: &PlanBlock) {
    if let Some(p) = block.partition {
        writeln!(out, "partition {p}").unwrap();
    }
    let matching = match block.matching {
        MatchingMode::Exact => "exact",
        MatchingMode::Greedy => "greedy",
    };
    writeln!(
        out,
        "plan algo {} n {} sink {} k {} length {} budget {} matching {}",
        block.algo, block.n, block.sink, block.achieved_k, block.length, block.budget, matching
    )
    .unwrap();
    let ids = |list: &[NodeId]| {
        list.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(out, "cps {}", ids(&block.cps)).unwrap();
    writeln!(out, "tour {}", ids(&block.tour)).unwrap();
    for r in &block.routes {
        writeln!(out, "route {} {} {} {}", r.child, r.parent, r.cp, r.depth).unwrap();
    }
    out.push_str("end\n");
}

pub fn to_text(blocks: &[PlanBlock]) -> String {
    let mut out = String::new();
    for block in blocks {
        write_block(&mut out, block);
    }
    out
}

pub fn write_plan_file(path: impl AsRef<Path>, blocks: &[PlanBlock]) -> Result<(), PlanFileError> {
    fs::write(path, to_text(blocks))?;
    Ok(())
}

pub fn from_text(text: &str) -> Result<Vec<PlanBlock>, PlanFileError> {
    let err = |line: usize, msg: &str| PlanFileError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut blocks = Vec::new();
    let mut pending_partition: Option<usize> = None;
    let mut current: Option<PlanBlock> = None;

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok[0] {
            "partition" => {
                if current.is_some() {
                    return Err(err(ln, "partition tag inside a plan block"));
                }
                if tok.len() != 2 {
                    return Err(err(ln, "expected `partition <index>`"));
                }
                pending_partition =
                    Some(tok[1].parse().map_err(|_| err(ln, "bad partition index"))?);
            }
            "plan" => {
                if current.is_some() {
                    return Err(err(ln, "plan block is missing its `end`"));
                }
                let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
                for pair in tok[1..].chunks(2) {
                    if pair.len() != 2 {
                        return Err(err(ln, "plan header has a dangling key"));
                    }
                    fields.insert(pair[0], pair[1]);
                }
                let get = |key: &str| -> Result<&str, PlanFileError> {
                    fields
                        .get(key)
                        .copied()
                        .ok_or_else(|| err(ln, &format!("plan header misses `{key}`")))
                };
                let matching = match get("matching")? {
                    "exact" => MatchingMode::Exact,
                    "greedy" => MatchingMode::Greedy,
                    _ => return Err(err(ln, "matching must be exact or greedy")),
                };
                current = Some(PlanBlock {
                    partition: pending_partition.take(),
                    algo: get("algo")?.to_string(),
                    n: get("n")?.parse().map_err(|_| err(ln, "bad n"))?,
                    sink: NodeId(get("sink")?.parse().map_err(|_| err(ln, "bad sink"))?),
                    achieved_k: get("k")?.parse().map_err(|_| err(ln, "bad k"))?,
                    length: get("length")?.parse().map_err(|_| err(ln, "bad length"))?,
                    budget: get("budget")?.parse().map_err(|_| err(ln, "bad budget"))?,
                    matching,
                    cps: Vec::new(),
                    tour: Vec::new(),
                    routes: Vec::new(),
                });
            }
            "cps" | "tour" => {
                let block = current.as_mut().ok_or_else(|| err(ln, "row outside a plan block"))?;
                let mut ids = Vec::with_capacity(tok.len() - 1);
                for t in &tok[1..] {
                    ids.push(NodeId(t.parse().map_err(|_| err(ln, "bad node id"))?));
                }
                if tok[0] == "cps" {
                    block.cps = ids;
                } else {
                    block.tour = ids;
                }
            }
            "route" => {
                let block = current.as_mut().ok_or_else(|| err(ln, "row outside a plan block"))?;
                if tok.len() != 5 {
                    return Err(err(ln, "expected `route <child> <parent> <cp> <depth>`"));
                }
                let num =
                    |t: &str| -> Result<usize, PlanFileError> { t.parse().map_err(|_| err(ln, "bad route field")) };
                block.routes.push(RouteRow {
                    child: NodeId(num(tok[1])?),
                    parent: NodeId(num(tok[2])?),
                    cp: NodeId(num(tok[3])?),
                    depth: num(tok[4])? as u32,
                });
            }
            "end" => {
                let block = current.take().ok_or_else(|| err(ln, "stray `end`"))?;
                if block.cps.is_empty() {
                    return Err(err(ln, "plan block has no caching points"));
                }
                blocks.push(block);
            }
            other => return Err(err(ln, &format!("unknown directive `{other}`"))),
        }
    }
    if current.is_some() {
        return Err(err(text.lines().count(), "unterminated plan block"));
    }
    if blocks.is_empty() {
        return Err(err(1, "file holds no plan blocks"));
    }
    Ok(blocks)
}

pub fn read_plan_file(path: impl AsRef<Path>) -> Result<Vec<PlanBlock>, PlanFileError> {
    from_text(&fs::read_to_string(path)?)
}
