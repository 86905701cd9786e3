//! Witness trees built backward from an execution log, and their
//! per-permutation projections (witness subdags).

use std::collections::HashMap;

use crate::engine::LogEntry;
use crate::error::{Error, Result};
use crate::events::{depends, BadEvent, DependencyMode, EventId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessNode {
    pub event: BadEvent,
    /// Log time of the resampling this node stands for.
    pub time: usize,
    /// Root has depth 0.
    pub depth: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Rooted tree; `nodes[0]` is the root and nodes are stored in the order
/// they were attached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessTree {
    nodes: Vec<WitnessNode>,
    mode: DependencyMode,
}

impl WitnessTree {
    pub fn nodes(&self) -> &[WitnessNode] {
        &self.nodes
    }

    pub fn root(&self) -> &WitnessNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mode(&self) -> DependencyMode {
        self.mode
    }

    /// Number of levels.
    pub fn height(&self) -> usize {
        self.nodes.iter().map(|n| n.depth + 1).max().unwrap_or(0)
    }

    /// Canonical form of the labelled tree, independent of child order:
    /// `id(child,child,...)`.
    pub fn signature(&self) -> String {
        fn sig(tree: &WitnessTree, i: usize) -> String {
            let mut kids: Vec<String> = tree.nodes[i]
                .children
                .iter()
                .map(|&c| sig(tree, c))
                .collect();
            kids.sort();
            format!("{}({})", tree.nodes[i].event.id(), kids.join(","))
        }
        sig(self, 0)
    }

    /// Checks the structural invariants: children depend on their parent,
    /// times decrease away from the root, and each level is independent.
    pub fn check_invariants(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                let parent = &self.nodes[p];
                if !depends(&node.event, &parent.event, self.mode) {
                    return Err(Error::Constraint(format!(
                        "node {i} does not depend on its parent"
                    )));
                }
                if node.time >= parent.time || node.depth != parent.depth + 1 {
                    return Err(Error::Constraint(format!(
                        "node {i} is out of order with its parent"
                    )));
                }
            }
            for (j, other) in self.nodes.iter().enumerate().skip(i + 1) {
                if other.depth == node.depth && depends(&node.event, &other.event, self.mode) {
                    return Err(Error::Constraint(format!(
                        "nodes {i} and {j} share a level but depend"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds the witness tree justifying the resampling at (1-based) time `t`.
///
/// Scanning backward from `t - 1`, each logged event is attached below the
/// deepest node it depends on (earliest-attached node on ties), or skipped
/// if it depends on none.
pub fn build_witness_tree(log: &[LogEntry], t: usize, mode: DependencyMode) -> Result<WitnessTree> {
    if t == 0 || t > log.len() {
        return Err(Error::OutOfRange {
            index: t,
            size: log.len(),
        });
    }
    let mut nodes = vec![WitnessNode {
        event: log[t - 1].event.clone(),
        time: t,
        depth: 0,
        parent: None,
        children: Vec::new(),
    }];
    for s in (1..t).rev() {
        let event = &log[s - 1].event;
        let mut best: Option<usize> = None;
        for (i, node) in nodes.iter().enumerate() {
            if depends(event, &node.event, mode) && best.is_none_or(|b| node.depth > nodes[b].depth)
            {
                best = Some(i);
            }
        }
        if let Some(parent) = best {
            let idx = nodes.len();
            let depth = nodes[parent].depth + 1;
            nodes[parent].children.push(idx);
            nodes.push(WitnessNode {
                event: event.clone(),
                time: s,
                depth,
                parent: Some(parent),
                children: Vec::new(),
            });
        }
    }
    Ok(WitnessTree { nodes, mode })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubdagNode {
    pub x: usize,
    pub y: usize,
    pub event_id: EventId,
    /// Index of the originating node in the witness tree.
    pub tree_node: usize,
    pub depth: usize,
}

/// Projection of a witness tree onto one permutation. Edges point from a
/// node to the next-shallower occurrence of its domain point and of its
/// range value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessSubdag {
    pub k: usize,
    pub nodes: Vec<SubdagNode>,
    pub edges: Vec<(usize, usize)>,
}

impl WitnessSubdag {
    fn successors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            out[a].push(b);
        }
        out
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(_, b)| b == v).count()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, _)| a == v).count()
    }

    /// Kahn's algorithm.
    pub fn is_acyclic(&self) -> bool {
        let succ = self.successors();
        let mut indeg: Vec<usize> = (0..self.nodes.len()).map(|v| self.in_degree(v)).collect();
        let mut stack: Vec<usize> = (0..self.nodes.len()).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &w in &succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        seen == self.nodes.len()
    }

    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let succ = self.successors();
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(&succ[v]);
        }
        false
    }

    /// Acyclic, degrees at most two, and nodes sharing a coordinate are
    /// comparable.
    pub fn check_invariants(&self) -> Result<()> {
        if !self.is_acyclic() {
            return Err(Error::Constraint("witness subdag has a cycle".into()));
        }
        for v in 0..self.nodes.len() {
            if self.in_degree(v) > 2 || self.out_degree(v) > 2 {
                return Err(Error::Constraint(format!("node {v} has degree above two")));
            }
        }
        for (i, a) in self.nodes.iter().enumerate() {
            for (j, b) in self.nodes.iter().enumerate().skip(i + 1) {
                if (a.x == b.x || a.y == b.y) && !self.reaches(i, j) && !self.reaches(j, i) {
                    return Err(Error::Constraint(format!(
                        "overlapping nodes {i} and {j} are incomparable"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Projects a witness tree onto permutation `k`.
///
/// In lopsided mode one level may hold several copies of the same triple;
/// those are ordered by event id and chained, the lower id counting as the
/// shallower copy.
pub fn project_witness_subdag(tree: &WitnessTree, k: usize) -> WitnessSubdag {
    let mut nodes = Vec::new();
    for (i, tn) in tree.nodes.iter().enumerate() {
        for t in tn.event.triples().iter().filter(|t| t.k == k) {
            nodes.push(SubdagNode {
                x: t.x,
                y: t.y,
                event_id: tn.event.id(),
                tree_node: i,
                depth: tn.depth,
            });
        }
    }
    // rank among identical triples on one level
    let mut groups: HashMap<(usize, usize, usize), Vec<usize>> = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        groups.entry((n.depth, n.x, n.y)).or_default().push(i);
    }
    let mut rank = vec![0usize; nodes.len()];
    for members in groups.values_mut() {
        members.sort_by_key(|&i| (nodes[i].event_id, nodes[i].tree_node));
        for (r, &i) in members.iter().enumerate() {
            rank[i] = r;
        }
    }
    let key = |i: usize| (nodes[i].depth, rank[i]);

    let mut edges = Vec::new();
    for v in 0..nodes.len() {
        let target = |matches: &dyn Fn(&SubdagNode) -> bool| {
            (0..nodes.len())
                .filter(|&w| w != v && key(w) < key(v) && matches(&nodes[w]))
                .max_by_key(|&w| key(w))
        };
        let wx = target(&|n| n.x == nodes[v].x);
        let wy = target(&|n| n.y == nodes[v].y);
        if let Some(w) = wx {
            edges.push((v, w));
        }
        if let Some(w) = wy {
            if Some(w) != wx {
                edges.push((v, w));
            }
        }
    }
    WitnessSubdag { k, nodes, edges }
}
