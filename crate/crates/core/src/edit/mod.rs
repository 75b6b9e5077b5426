//! Edit operations, transformations and edit mappings between versions.

mod enumerate;
mod mapping;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::workflow::{validate_workflow, Link, OpId, Operator, Properties, ValidationReport, Workflow, WorkflowError};

pub use enumerate::{enumerate_mappings, MappingStream, DEFAULT_MAPPING_CAP};
pub use mapping::{derive_edits, derive_edits_from_mapping, DerivedEdits, EditMapping, MappingError};

/// One step of a transformation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditOp {
    AddOperator(Operator),
    DeleteOperator(OpId),
    ModifyOperator { id: OpId, properties: Properties },
    AddLink(Link),
    RemoveLink(Link),
}

impl EditOp {
    pub fn is_operator_edit(&self) -> bool {
        matches!(self, EditOp::AddOperator(_) | EditOp::DeleteOperator(_) | EditOp::ModifyOperator { .. })
    }
}

impl fmt::Display for EditOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditOp::AddOperator(op) => write!(f, "add {} `{}`", op.kind(), op.id),
            EditOp::DeleteOperator(id) => write!(f, "delete `{id}`"),
            EditOp::ModifyOperator { id, properties } => write!(f, "modify `{id}` as {}", properties.kind()),
            EditOp::AddLink(l) => write!(f, "add link {l}"),
            EditOp::RemoveLink(l) => write!(f, "remove link {l}"),
        }
    }
}

/// An ordered list of edits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transformation(pub Vec<EditOp>);

impl Transformation {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, EditOp> {
        self.0.iter()
    }

    /// Number of operator-level edits; link edits are not counted.
    pub fn edit_distance(&self) -> usize {
        self.0.iter().filter(|e| e.is_operator_edit()).count()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EditError {
    #[error("unknown operator `{0}`")]
    UnknownOperator(OpId),
    #[error("operator `{0}` already exists")]
    DuplicateOperator(OpId),
    #[error("link {0} does not exist")]
    UnknownLink(Link),
    #[error("link {0} already exists")]
    DuplicateLink(Link),
    #[error("link {0} is left dangling")]
    DanglingLink(Link),
    #[error("modifying `{id}` would change its kind from {from} to {to}")]
    KindChange { id: OpId, from: crate::workflow::OperatorKind, to: crate::workflow::OperatorKind },
    #[error("result is not a valid workflow: {}", .0.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(ValidationReport),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
}

/// Applies `delta` to `v` in order and returns the resulting version.
pub fn apply_transformation(v: &Workflow, delta: &Transformation) -> Result<Workflow, EditError> {
    let mut ops: BTreeMap<OpId, Operator> = v.operators().iter().map(|o| (o.id.clone(), o.clone())).collect();
    let mut links: Vec<Link> = v.links().to_vec();
    for edit in delta.iter() {
        match edit {
            EditOp::AddOperator(op) => {
                if ops.insert(op.id.clone(), op.clone()).is_some() {
                    return Err(EditError::DuplicateOperator(op.id.clone()));
                }
            }
            EditOp::DeleteOperator(id) => {
                ops.remove(id).ok_or_else(|| EditError::UnknownOperator(id.clone()))?;
            }
            EditOp::ModifyOperator { id, properties } => {
                let op = ops.get_mut(id).ok_or_else(|| EditError::UnknownOperator(id.clone()))?;
                if !op.kind().compatible_with(properties.kind()) {
                    return Err(EditError::KindChange { id: id.clone(), from: op.kind(), to: properties.kind() });
                }
                op.properties = properties.clone();
            }
            EditOp::AddLink(l) => {
                if links.contains(l) {
                    return Err(EditError::DuplicateLink(l.clone()));
                }
                links.push(l.clone());
            }
            EditOp::RemoveLink(l) => {
                let pos = links.iter().position(|x| x == l).ok_or_else(|| EditError::UnknownLink(l.clone()))?;
                links.remove(pos);
            }
        }
    }
    if let Some(l) = links.iter().find(|l| !ops.contains_key(&l.from.op) || !ops.contains_key(&l.to.op)) {
        return Err(EditError::DanglingLink(l.clone()));
    }
    let w = Workflow::new(v.id(), v.semantics(), ops.into_values().collect(), links)?;
    let report = validate_workflow(&w);
    if !report.is_ok() {
        return Err(EditError::Invalid(report));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workflow::{col, Schema, TableSemantics};

    fn chain() -> Workflow {
        Workflow::new(
            "w",
            TableSemantics::Set,
            vec![
                Operator::new("a", Properties::source("t", Schema::ints(&["x"]))),
                Operator::new("b", Properties::Sink),
            ],
            vec![Link::simple("a", "b")],
        )
        .unwrap()
    }

    #[test]
    fn empty_delta_is_identity() {
        let w = chain();
        assert_eq!(apply_transformation(&w, &Transformation::default()).unwrap(), w);
    }

    #[test]
    fn insert_filter_into_chain() {
        let w = chain();
        let delta = Transformation(vec![
            EditOp::AddOperator(Operator::new("f", Properties::filter(col("x").gt(1)))),
            EditOp::RemoveLink(Link::simple("a", "b")),
            EditOp::AddLink(Link::simple("a", "f")),
            EditOp::AddLink(Link::simple("f", "b")),
        ]);
        let out = apply_transformation(&w, &delta).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(delta.edit_distance(), 1);
    }

    #[test]
    fn errors() {
        let w = chain();
        let unknown = Transformation(vec![EditOp::DeleteOperator("zz".into())]);
        assert_eq!(apply_transformation(&w, &unknown).unwrap_err(), EditError::UnknownOperator("zz".into()));
        let dangling = Transformation(vec![EditOp::DeleteOperator("b".into())]);
        assert!(matches!(apply_transformation(&w, &dangling).unwrap_err(), EditError::DanglingLink(_)));
        let kind = Transformation(vec![EditOp::ModifyOperator { id: "b".into(), properties: Properties::Union }]);
        assert!(matches!(apply_transformation(&w, &kind).unwrap_err(), EditError::KindChange { .. }));
    }

    #[test]
    fn edit_json_is_tagged() {
        let e = EditOp::DeleteOperator("f".into());
        assert_eq!(serde_json::to_string(&e).unwrap(), r#"{"delete_operator":"f"}"#);
        let m = EditOp::ModifyOperator { id: "f".into(), properties: Properties::filter(col("x").gt(2)) };
        let back: EditOp = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
