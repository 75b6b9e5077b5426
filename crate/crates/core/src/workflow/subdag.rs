//! Induced sub-DAGs and their completion with virtual sources and sinks.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::schema::{propagate_schemas, SchemaMap};
use super::{Link, OpId, Operator, OperatorKind, Properties, Schema, SourceProps, Workflow, WorkflowError};

/// Operators of a workflow together with all links among them.
#[derive(Debug, Clone, PartialEq)]
pub struct SubDag {
    pub operators: Vec<Operator>,
    pub links: Vec<Link>,
    /// Weak connectivity of the induced graph.
    pub connected: bool,
    members: BTreeSet<usize>,
}

impl SubDag {
    /// Indices of the member operators in the parent workflow.
    pub fn members(&self) -> &BTreeSet<usize> {
        &self.members
    }
}

/// Extracts the sub-DAG induced by `ops`.
pub fn induced_subdag<'a>(
    w: &Workflow,
    ops: impl IntoIterator<Item = &'a str>,
) -> Result<SubDag, WorkflowError> {
    let mut members = BTreeSet::new();
    for id in ops {
        let idx = w.index_of(id).ok_or_else(|| WorkflowError::UnknownOperator(id.into()))?;
        members.insert(idx);
    }
    Ok(subdag_from_indices(w, members))
}

pub(crate) fn subdag_from_indices(w: &Workflow, members: BTreeSet<usize>) -> SubDag {
    let operators = members.iter().map(|&i| w.op(i).clone()).collect();
    let links = w
        .links()
        .iter()
        .filter(|l| {
            let f = w.index_of(l.from.op.as_str());
            let t = w.index_of(l.to.op.as_str());
            matches!((f, t), (Some(f), Some(t)) if members.contains(&f) && members.contains(&t))
        })
        .cloned()
        .collect();
    let connected = is_weakly_connected(w, &members);
    SubDag { operators, links, connected, members }
}

/// Whether `members` induces a weakly connected graph (false when empty).
pub(crate) fn is_weakly_connected(w: &Workflow, members: &BTreeSet<usize>) -> bool {
    let Some(&start) = members.iter().next() else {
        return false;
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for n in w.predecessors(i).chain(w.successors(i)) {
            if members.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == members.len()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundaryError {
    #[error("schema unknown at output of `{0}`")]
    SchemaUnknown(OpId),
    #[error("boundary at `{0}` has no counterpart in the other version")]
    Unpairable(OpId),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
}

/// Names for the boundary of a completed sub-DAG. Returning `None` means
/// the boundary cannot be named, which aborts completion.
pub trait BoundaryKeys {
    /// Key of the data produced at `producer:port` entering the sub-DAG.
    fn input_key(&self, producer: &OpId, port: u32) -> Option<String>;
    /// Key of the data produced at `producer:port` leaving the sub-DAG.
    fn output_key(&self, producer: &OpId, port: u32) -> Option<String>;
    /// Key of a real sink inside the sub-DAG.
    fn sink_key(&self, sink: &OpId) -> Option<String>;
}

struct ParentKeys;

impl BoundaryKeys for ParentKeys {
    fn input_key(&self, producer: &OpId, port: u32) -> Option<String> {
        Some(format!("{producer}.{port}"))
    }

    fn output_key(&self, producer: &OpId, port: u32) -> Option<String> {
        Some(format!("{producer}.{port}"))
    }

    fn sink_key(&self, sink: &OpId) -> Option<String> {
        Some(sink.to_string())
    }
}

/// A sub-DAG completed into a stand-alone workflow.
#[derive(Debug, Clone)]
pub struct Completed {
    pub workflow: Workflow,
    /// Boundary input key to its schema; the virtual Source reads a table
    /// named by the key.
    pub inputs: BTreeMap<String, Schema>,
    /// Output key to the id of the sink that receives it.
    pub outputs: BTreeMap<String, OpId>,
}

/// Completes a sub-DAG: one virtual Source per distinct external producer
/// port feeding it, one virtual Sink per member out-port with a consumer
/// outside it, plus sinks for the `extra_outputs` member ports.
pub fn complete_subdag(
    sd: &SubDag,
    parent: &Workflow,
    keys: &dyn BoundaryKeys,
    extra_outputs: &[(OpId, u32)],
) -> Result<Completed, BoundaryError> {
    complete_with_schemas(sd, parent, &propagate_schemas(parent), keys, extra_outputs)
}

pub(crate) fn complete_with_schemas(
    sd: &SubDag,
    parent: &Workflow,
    schemas: &SchemaMap,
    keys: &dyn BoundaryKeys,
    extra_outputs: &[(OpId, u32)],
) -> Result<Completed, BoundaryError> {
    let mut operators = sd.operators.clone();
    let mut links = sd.links.clone();
    let mut inputs = BTreeMap::new();
    let mut outputs = BTreeMap::new();
    let mut sinks_added = BTreeSet::new();

    let mut add_output = |op: &OpId,
                          port: u32,
                          operators: &mut Vec<Operator>,
                          links: &mut Vec<Link>,
                          outputs: &mut BTreeMap<String, OpId>| {
        if !sinks_added.insert((op.clone(), port)) {
            return Ok(());
        }
        let key = keys.output_key(op, port).ok_or_else(|| BoundaryError::Unpairable(op.clone()))?;
        let sink = OpId(format!("out:{key}"));
        operators.push(Operator { id: sink.clone(), properties: Properties::Sink });
        links.push(Link::new(op.clone(), port, sink.clone(), 0));
        outputs.insert(key, sink);
        Ok::<_, BoundaryError>(())
    };

    for &m in sd.members() {
        let op = parent.op(m);
        for &l in parent.incoming(m) {
            let link = parent.link(l);
            let Some(from) = parent.index_of(link.from.op.as_str()) else { continue };
            if sd.members().contains(&from) {
                continue;
            }
            let key = keys
                .input_key(&link.from.op, link.from.port)
                .ok_or_else(|| BoundaryError::Unpairable(link.from.op.clone()))?;
            let src = OpId(format!("in:{key}"));
            if !inputs.contains_key(&key) {
                let schema = schemas
                    .output(from)
                    .cloned()
                    .ok_or_else(|| BoundaryError::SchemaUnknown(link.from.op.clone()))?;
                operators.push(Operator {
                    id: src.clone(),
                    properties: Properties::Source(SourceProps { table: key.clone(), schema: schema.clone() }),
                });
                inputs.insert(key, schema);
            }
            links.push(Link::new(src, 0, op.id.clone(), link.to.port));
        }
        for &l in parent.outgoing(m) {
            let link = parent.link(l);
            let Some(to) = parent.index_of(link.to.op.as_str()) else { continue };
            if !sd.members().contains(&to) {
                add_output(&op.id, link.from.port, &mut operators, &mut links, &mut outputs)?;
            }
        }
        if op.kind() == OperatorKind::Sink {
            let key = keys.sink_key(&op.id).ok_or_else(|| BoundaryError::Unpairable(op.id.clone()))?;
            outputs.insert(key, op.id.clone());
        }
    }
    for (op, port) in extra_outputs {
        add_output(op, *port, &mut operators, &mut links, &mut outputs)?;
    }

    let workflow = Workflow::new(format!("{}#sub", parent.id()), parent.semantics(), operators, links)?;
    Ok(Completed { workflow, inputs, outputs })
}

/// Completes `sd` using boundary names derived from parent operator ids.
pub fn attach_virtual_boundaries(sd: &SubDag, parent: &Workflow) -> Result<Workflow, BoundaryError> {
    if sd.members().len() == parent.len() {
        return Ok(parent.clone());
    }
    complete_subdag(sd, parent, &ParentKeys, &[]).map(|c| c.workflow)
}
