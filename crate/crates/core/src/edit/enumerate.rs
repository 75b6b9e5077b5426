//! Best-first enumeration of edit mappings in ascending edit distance.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use fixedbitset::FixedBitSet;

use super::mapping::EditMapping;
use crate::workflow::{OpId, OperatorKind, Workflow};

pub const DEFAULT_MAPPING_CAP: usize = 16;

/// Upper bound on search nodes expanded per stream.
const EXPANSION_BUDGET: usize = 200_000;

#[derive(Clone)]
struct Node {
    cost: usize,
    depth: usize,
    assign: Vec<Option<usize>>,
    used: FixedBitSet,
}

/// Lazily produced mappings: the tracked mapping first (if any), then
/// mappings by ascending operator edit distance, ties broken by the number
/// of link edits and then by the sorted id pairs.
pub struct MappingStream<'a> {
    p: &'a Workflow,
    q: &'a Workflow,
    remaining: usize,
    tracked: Option<EditMapping>,
    tracked_pending: bool,
    candidates: Vec<Vec<(usize, usize)>>,
    identical: Vec<Vec<usize>>,
    heap: BinaryHeap<Reverse<(usize, u64, usize)>>,
    nodes: Vec<Option<Node>>,
    seq: u64,
    expanded: usize,
    ready: VecDeque<EditMapping>,
    level: Vec<(usize, Vec<(OpId, OpId)>, EditMapping)>,
    level_cost: usize,
}

/// Enumerates up to `cap` mappings between `p` and `q`.
pub fn enumerate_mappings<'a>(
    p: &'a Workflow,
    q: &'a Workflow,
    cap: usize,
    tracked: Option<&EditMapping>,
) -> MappingStream<'a> {
    let mut candidates = Vec::with_capacity(p.len());
    let mut identical = Vec::with_capacity(p.len());
    for a in p.operators() {
        let mut c: Vec<(usize, usize)> = q
            .operators()
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind().compatible_with(a.kind()))
            .map(|(j, b)| (j, usize::from(b.properties != a.properties)))
            .collect();
        c.sort();
        identical.push(c.iter().filter(|(_, cost)| *cost == 0).map(|(j, _)| *j).collect());
        candidates.push(c);
    }
    let mut stream = MappingStream {
        p,
        q,
        remaining: cap,
        tracked: tracked.cloned(),
        tracked_pending: tracked.is_some(),
        candidates,
        identical,
        heap: BinaryHeap::new(),
        nodes: Vec::new(),
        seq: 0,
        expanded: 0,
        ready: VecDeque::new(),
        level: Vec::new(),
        level_cost: 0,
    };
    let root = Node { cost: 0, depth: 0, assign: Vec::new(), used: FixedBitSet::with_capacity(q.len()) };
    stream.push(root);
    stream
}

impl MappingStream<'_> {
    fn heuristic(&self, node: &Node) -> usize {
        let n = self.p.len();
        let unused_q = self.q.len() - node.used.count_ones(..);
        if node.depth == n {
            return unused_q;
        }
        let blocked = (node.depth..n)
            .filter(|&i| !self.identical[i].iter().any(|&j| !node.used.contains(j)))
            .count();
        blocked + unused_q.saturating_sub(n - node.depth)
    }

    fn push(&mut self, node: Node) {
        let f = node.cost + self.heuristic(&node);
        let slot = self.nodes.len();
        self.heap.push(Reverse((f, self.seq, slot)));
        self.seq += 1;
        self.nodes.push(Some(node));
    }

    fn to_mapping(&self, node: &Node) -> EditMapping {
        let pairs = node
            .assign
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map(|j| (self.p.op(i).id.clone(), self.q.op(j).id.clone())));
        EditMapping::new(pairs).expect("assignment is injective")
    }

    fn link_edits(&self, m: &EditMapping) -> usize {
        let mapped = self.p.links().iter().filter(|l| m.map_link(l, self.q).is_some()).count();
        (self.p.links().len() - mapped) + (self.q.links().len() - mapped)
    }

    fn flush_level(&mut self) {
        let mut level = std::mem::take(&mut self.level);
        level.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        for (_, _, m) in level {
            if Some(&m) != self.tracked.as_ref() {
                self.ready.push_back(m);
            }
        }
    }

    /// Runs the search until at least one mapping is ready or the space
    /// (or budget) is exhausted.
    fn advance(&mut self) {
        while self.ready.is_empty() {
            let Some(Reverse((f, _, slot))) = self.heap.pop() else {
                self.flush_level();
                return;
            };
            if !self.level.is_empty() && f > self.level_cost {
                self.heap.push(Reverse((f, 0, slot)));
                self.flush_level();
                continue;
            }
            let node = self.nodes[slot].take().expect("node popped once");
            let n = self.p.len();
            if node.depth == n {
                let m = self.to_mapping(&node);
                let links = self.link_edits(&m);
                let pairs: Vec<(OpId, OpId)> = m.pairs().map(|(a, b)| (a.clone(), b.clone())).collect();
                self.level_cost = f;
                self.level.push((links, pairs, m));
                continue;
            }
            self.expanded += 1;
            if self.expanded > EXPANSION_BUDGET {
                self.heap.clear();
                continue;
            }
            let i = node.depth;
            let sink_forced = self.p.op(i).kind() == OperatorKind::Sink
                && self.candidates[i].iter().any(|&(j, _)| !node.used.contains(j));
            let options: Vec<(usize, usize)> = self.candidates[i]
                .iter()
                .copied()
                .filter(|&(j, _)| !node.used.contains(j))
                .collect();
            for (j, cost) in options {
                let mut child = node.clone();
                child.depth += 1;
                child.cost += cost;
                child.used.insert(j);
                child.assign.push(Some(j));
                self.push(child);
            }
            if !sink_forced {
                let mut child = node;
                child.depth += 1;
                child.cost += 1;
                child.assign.push(None);
                self.push(child);
            }
        }
    }
}

impl Iterator for MappingStream<'_> {
    type Item = EditMapping;

    fn next(&mut self) -> Option<EditMapping> {
        if self.remaining == 0 {
            return None;
        }
        if self.tracked_pending {
            self.tracked_pending = false;
            self.remaining -= 1;
            return self.tracked.clone();
        }
        self.advance();
        let m = self.ready.pop_front()?;
        self.remaining -= 1;
        Some(m)
    }
}
