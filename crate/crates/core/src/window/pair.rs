//! A version pair under one edit mapping, indexed for window operations.

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;

use super::{Window, WindowError, WindowIds};
use crate::edit::{derive_edits, DerivedEdits, EditMapping, EditOp, MappingError, Transformation};
use crate::workflow::{
    is_weakly_connected, propagate_schemas, Link, OpId, OperatorKind, SchemaMap, TableSemantics, Workflow,
};

/// A mapped operator pair or a single unmapped operator. Windows are sets
/// of units, which makes mapping closure hold by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unit {
    pub p: Option<usize>,
    pub q: Option<usize>,
}

/// A group of edits that must be covered together: an operator edit with
/// the link edits attached to it, or a link edit between mapped operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Change {
    /// Indices into the derived transformation.
    pub edits: Vec<usize>,
    /// Units the change touches.
    pub units: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PairError {
    #[error("version pair is empty")]
    Empty,
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

#[derive(Debug, Clone)]
pub struct VersionPair {
    p: Workflow,
    q: Workflow,
    mapping: EditMapping,
    semantics: TableSemantics,
    derived: DerivedEdits,
    units: Vec<Unit>,
    p_unit: Vec<usize>,
    q_unit: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
    changes: Vec<Change>,
    p_schemas: SchemaMap,
    q_schemas: SchemaMap,
}

impl VersionPair {
    /// Indexes (P, Q) under `mapping`; results are compared under P's
    /// table semantics.
    pub fn new(p: Workflow, q: Workflow, mapping: EditMapping) -> Result<Self, PairError> {
        let semantics = p.semantics();
        Self::with_semantics(p, q, mapping, semantics)
    }

    pub fn with_semantics(
        p: Workflow,
        q: Workflow,
        mapping: EditMapping,
        semantics: TableSemantics,
    ) -> Result<Self, PairError> {
        if p.is_empty() && q.is_empty() {
            return Err(PairError::Empty);
        }
        let derived = derive_edits(&p, &q, &mapping)?;
        let mut units = Vec::new();
        let mut p_unit = vec![usize::MAX; p.len()];
        let mut q_unit = vec![usize::MAX; q.len()];
        for (i, op) in p.operators().iter().enumerate() {
            let qi = mapping.get(op.id.as_str()).and_then(|b| q.index_of(b.as_str()));
            p_unit[i] = units.len();
            if let Some(j) = qi {
                q_unit[j] = units.len();
            }
            units.push(Unit { p: Some(i), q: qi });
        }
        for j in 0..q.len() {
            if q_unit[j] == usize::MAX {
                q_unit[j] = units.len();
                units.push(Unit { p: None, q: Some(j) });
            }
        }
        let mut adjacency = vec![BTreeSet::new(); units.len()];
        for (w, map) in [(&p, &p_unit), (&q, &q_unit)] {
            for l in w.links() {
                if let (Some(a), Some(b)) = (w.index_of(l.from.op.as_str()), w.index_of(l.to.op.as_str())) {
                    let (ua, ub) = (map[a], map[b]);
                    if ua != ub {
                        adjacency[ua].insert(ub);
                        adjacency[ub].insert(ua);
                    }
                }
            }
        }
        let adjacency = adjacency.into_iter().map(|s| s.into_iter().collect()).collect();
        let p_schemas = propagate_schemas(&p);
        let q_schemas = propagate_schemas(&q);
        let mut pair = VersionPair {
            p,
            q,
            mapping,
            semantics,
            derived,
            units,
            p_unit,
            q_unit,
            adjacency,
            changes: Vec::new(),
            p_schemas,
            q_schemas,
        };
        pair.changes = pair.group_changes();
        Ok(pair)
    }

    pub fn p(&self) -> &Workflow {
        &self.p
    }

    pub fn q(&self) -> &Workflow {
        &self.q
    }

    pub fn mapping(&self) -> &EditMapping {
        &self.mapping
    }

    pub fn semantics(&self) -> TableSemantics {
        self.semantics
    }

    pub fn delta(&self) -> &Transformation {
        &self.derived.delta
    }

    pub fn changes(&self) -> &[Change] {
        &self.changes
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    pub fn unit_of_p(&self, idx: usize) -> usize {
        self.p_unit[idx]
    }

    pub fn unit_of_q(&self, idx: usize) -> usize {
        self.q_unit[idx]
    }

    pub fn unit_neighbors(&self, unit: usize) -> &[usize] {
        &self.adjacency[unit]
    }

    pub(crate) fn p_schemas(&self) -> &SchemaMap {
        &self.p_schemas
    }

    pub(crate) fn q_schemas(&self) -> &SchemaMap {
        &self.q_schemas
    }

    /// Kind of the operator(s) in a unit; P's kind for mapped pairs.
    pub fn unit_kinds(&self, unit: usize) -> Vec<OperatorKind> {
        let u = self.units[unit];
        let mut kinds = Vec::new();
        if let Some(i) = u.p {
            kinds.push(self.p.op(i).kind());
        }
        if let Some(j) = u.q {
            kinds.push(self.q.op(j).kind());
        }
        kinds
    }

    /// Units touched by edits in some change.
    pub fn changed_units(&self) -> FixedBitSet {
        let mut bits = FixedBitSet::with_capacity(self.unit_count());
        for c in &self.changes {
            for &u in &c.units {
                bits.insert(u);
            }
        }
        bits
    }

    pub fn empty_window(&self) -> Window {
        Window::empty(self.unit_count())
    }

    pub fn full_window(&self) -> Window {
        let mut w = self.empty_window();
        w.bits.insert_range(..);
        w
    }

    pub fn window_of_units(&self, units: impl IntoIterator<Item = usize>) -> Window {
        let mut w = self.empty_window();
        for u in units {
            w.bits.insert(u);
        }
        w
    }

    pub fn p_members(&self, w: &Window) -> BTreeSet<usize> {
        w.units().filter_map(|u| self.units[u].p).collect()
    }

    pub fn q_members(&self, w: &Window) -> BTreeSet<usize> {
        w.units().filter_map(|u| self.units[u].q).collect()
    }

    /// Number of operators on the larger side.
    pub fn larger_side(&self, w: &Window) -> usize {
        let p = w.units().filter(|&u| self.units[u].p.is_some()).count();
        let q = w.units().filter(|&u| self.units[u].q.is_some()).count();
        p.max(q)
    }

    /// Builds a window from operator ids of both versions.
    pub fn make_window<'a>(
        &self,
        p_ops: impl IntoIterator<Item = &'a str>,
        q_ops: impl IntoIterator<Item = &'a str>,
    ) -> Result<Window, WindowError> {
        let mut w = self.empty_window();
        let mut p_set = BTreeSet::new();
        for id in p_ops {
            let i = self.p.index_of(id).ok_or_else(|| WindowError::UnknownOperator(id.into()))?;
            p_set.insert(i);
            w.bits.insert(self.p_unit[i]);
        }
        let mut q_set = BTreeSet::new();
        for id in q_ops {
            let j = self.q.index_of(id).ok_or_else(|| WindowError::UnknownOperator(id.into()))?;
            q_set.insert(j);
            w.bits.insert(self.q_unit[j]);
        }
        for u in w.units() {
            let unit = self.units[u];
            let p_in = unit.p.is_none_or(|i| p_set.contains(&i));
            let q_in = unit.q.is_none_or(|j| q_set.contains(&j));
            if !(p_in && q_in) {
                let id = unit.p.map(|i| self.p.op(i).id.clone()).unwrap_or_else(|| self.q.op(unit.q.unwrap()).id.clone());
                return Err(WindowError::ClosureViolated(id));
            }
        }
        self.check_structure(&w)?;
        Ok(w)
    }

    /// Window invariants: some side non-empty, each non-empty side connected.
    pub fn check_structure(&self, w: &Window) -> Result<(), WindowError> {
        let (p, q) = (self.p_members(w), self.q_members(w));
        if p.is_empty() && q.is_empty() {
            return Err(WindowError::Empty);
        }
        if !p.is_empty() && !is_weakly_connected(&self.p, &p) {
            return Err(WindowError::Disconnected("P"));
        }
        if !q.is_empty() && !is_weakly_connected(&self.q, &q) {
            return Err(WindowError::Disconnected("Q"));
        }
        Ok(())
    }

    /// Units adjacent to the window whose addition keeps it well formed.
    /// A window that is itself malformed (a transient initial window)
    /// gets every adjacent unit.
    pub fn neighbors(&self, w: &Window) -> Vec<usize> {
        let mut out = BTreeSet::new();
        for u in w.units() {
            for &n in &self.adjacency[u] {
                if !w.contains_unit(n) {
                    out.insert(n);
                }
            }
        }
        if self.check_structure(w).is_err() {
            return out.into_iter().collect();
        }
        out.into_iter().filter(|&n| self.check_structure(&w.with_unit(n)).is_ok()).collect()
    }

    /// Indices of changes whose units all lie in the window.
    pub fn covered_changes(&self, w: &Window) -> Vec<usize> {
        self.changes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.units.iter().all(|&u| w.contains_unit(u)))
            .map(|(i, _)| i)
            .collect()
    }

    /// The smallest window holding every unit the change touches. It may
    /// have an empty side or be disconnected until it is expanded.
    pub fn initial_covering_window(&self, change: usize) -> Window {
        self.window_of_units(self.changes[change].units.iter().copied())
    }

    pub fn describe(&self, w: &Window) -> WindowIds {
        WindowIds {
            p_ops: self.p_members(w).into_iter().map(|i| self.p.op(i).id.clone()).collect(),
            q_ops: self.q_members(w).into_iter().map(|j| self.q.op(j).id.clone()).collect(),
        }
    }

    fn group_changes(&self) -> Vec<Change> {
        let delta = &self.derived.delta;
        let q_of_result: BTreeMap<&OpId, &OpId> = self.derived.result_ids.iter().map(|(q, r)| (r, q)).collect();
        let mut op_change: BTreeMap<usize, usize> = BTreeMap::new();
        let mut changes: Vec<Change> = Vec::new();
        for (e, edit) in delta.iter().enumerate() {
            let unit = match edit {
                EditOp::DeleteOperator(id) | EditOp::ModifyOperator { id, .. } => {
                    self.p_unit[self.p.index_of(id.as_str()).expect("P operator")]
                }
                EditOp::AddOperator(op) => {
                    let q_id = q_of_result[&op.id];
                    self.q_unit[self.q.index_of(q_id.as_str()).expect("Q operator")]
                }
                _ => continue,
            };
            op_change.insert(unit, changes.len());
            changes.push(Change { edits: vec![e], units: vec![unit] });
        }
        let unmapped = |u: usize| {
            let unit = self.units[u];
            unit.p.is_none() || unit.q.is_none()
        };
        for (e, edit) in delta.iter().enumerate() {
            let (ua, ub, feeder_in_other) = match edit {
                EditOp::RemoveLink(l) => {
                    let (a, b) = self.p_link_units(l);
                    let other = self.units[b].q.and_then(|j| self.q.feeder(j, l.to.port)).map(|(f, _)| self.q_unit[f]);
                    (a, b, other)
                }
                EditOp::AddLink(l) => {
                    let (a, b) = self.result_link_units(l, &q_of_result);
                    let other = self.units[b].p.and_then(|i| self.p.feeder(i, l.to.port)).map(|(f, _)| self.p_unit[f]);
                    (a, b, other)
                }
                _ => continue,
            };
            let owner = [ua, ub]
                .into_iter()
                .find(|&u| unmapped(u))
                .or_else(|| feeder_in_other.filter(|&f| unmapped(f)))
                .and_then(|u| op_change.get(&u).copied());
            match owner {
                Some(c) => changes[c].edits.push(e),
                None => changes.push(Change { edits: vec![e], units: vec![ua, ub] }),
            }
        }
        changes
    }

    fn p_link_units(&self, l: &Link) -> (usize, usize) {
        let a = self.p.index_of(l.from.op.as_str()).expect("P link source");
        let b = self.p.index_of(l.to.op.as_str()).expect("P link target");
        (self.p_unit[a], self.p_unit[b])
    }

    fn result_link_units(&self, l: &Link, q_of_result: &BTreeMap<&OpId, &OpId>) -> (usize, usize) {
        let a = self.q.index_of(q_of_result[&l.from.op].as_str()).expect("Q link source");
        let b = self.q.index_of(q_of_result[&l.to.op].as_str()).expect("Q link target");
        (self.q_unit[a], self.q_unit[b])
    }
}
