//! Partial injective operator correspondences and the edits they induce.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{apply_transformation, EditError, EditOp, Transformation};
use crate::workflow::{Link, OpId, OperatorKind, PortRef, Workflow};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MappingError {
    #[error("operator `{0}` is mapped more than once")]
    NotInjective(OpId),
    #[error("`{0}` is not an operator of the first version")]
    UnknownSource(OpId),
    #[error("`{0}` is not an operator of the second version")]
    UnknownTarget(OpId),
    #[error("cannot map {p_kind} `{p}` onto {q_kind} `{q}`")]
    Incompatible { p: OpId, p_kind: OperatorKind, q: OpId, q_kind: OperatorKind },
    #[error("transformation does not turn the first version into the second: {0}")]
    TransformationMismatch(String),
    #[error(transparent)]
    Edit(#[from] EditError),
}

/// Partial injective map from operators of P to operators of Q.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EditMapping {
    forward: BTreeMap<OpId, OpId>,
    backward: BTreeMap<OpId, OpId>,
}

#[derive(Serialize, Deserialize)]
struct PairRepr {
    p: OpId,
    q: OpId,
}

impl Serialize for EditMapping {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<PairRepr> = self.pairs().map(|(p, q)| PairRepr { p: p.clone(), q: q.clone() }).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for EditMapping {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs = Vec::<PairRepr>::deserialize(d)?;
        EditMapping::new(pairs.into_iter().map(|r| (r.p, r.q))).map_err(serde::de::Error::custom)
    }
}

impl EditMapping {
    pub fn new(pairs: impl IntoIterator<Item = (OpId, OpId)>) -> Result<Self, MappingError> {
        let mut m = EditMapping::default();
        for (p, q) in pairs {
            if m.forward.contains_key(&p) {
                return Err(MappingError::NotInjective(p));
            }
            if m.backward.contains_key(&q) {
                return Err(MappingError::NotInjective(q));
            }
            m.forward.insert(p.clone(), q.clone());
            m.backward.insert(q, p);
        }
        Ok(m)
    }

    /// Builds a mapping from string pairs; panics on non-injective input.
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        EditMapping::new(pairs.iter().map(|(p, q)| (OpId::from(*p), OpId::from(*q)))).expect("injective pairs")
    }

    /// Maps operators that carry the same id in both versions.
    pub fn identity(p: &Workflow, q: &Workflow) -> Self {
        let pairs = p
            .operators()
            .iter()
            .filter(|op| q.operator(op.id.as_str()).is_some_and(|o| o.kind().compatible_with(op.kind())))
            .map(|op| (op.id.clone(), op.id.clone()));
        EditMapping::new(pairs).expect("identity is injective")
    }

    pub fn get(&self, p: &str) -> Option<&OpId> {
        self.forward.get(p)
    }

    pub fn preimage(&self, q: &str) -> Option<&OpId> {
        self.backward.get(q)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&OpId, &OpId)> {
        self.forward.iter()
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Checks that the mapping is valid for the pair (P, Q).
    pub fn check(&self, p: &Workflow, q: &Workflow) -> Result<(), MappingError> {
        for (a, b) in self.pairs() {
            let pa = p.operator(a.as_str()).ok_or_else(|| MappingError::UnknownSource(a.clone()))?;
            let qb = q.operator(b.as_str()).ok_or_else(|| MappingError::UnknownTarget(b.clone()))?;
            if !pa.kind().compatible_with(qb.kind()) {
                return Err(MappingError::Incompatible { p: a.clone(), p_kind: pa.kind(), q: b.clone(), q_kind: qb.kind() });
            }
        }
        Ok(())
    }

    /// The Q link a P link corresponds to, if both endpoints are mapped and
    /// Q links the images on the same ports.
    pub fn map_link(&self, link: &Link, q: &Workflow) -> Option<Link> {
        let image = Link {
            from: PortRef { op: self.get(link.from.op.as_str())?.clone(), port: link.from.port },
            to: PortRef { op: self.get(link.to.op.as_str())?.clone(), port: link.to.port },
        };
        q.links().contains(&image).then_some(image)
    }

    /// Derived link correspondence.
    pub fn link_map(&self, p: &Workflow, q: &Workflow) -> BTreeMap<Link, Link> {
        p.links().iter().filter_map(|l| self.map_link(l, q).map(|m| (l.clone(), m))).collect()
    }

    /// Mapping induced by a transformation whose added operators carry
    /// their ids in Q: every operator of P that survives keeps its id.
    pub fn from_transformation(p: &Workflow, delta: &Transformation, q: &Workflow) -> Result<Self, MappingError> {
        let applied = apply_transformation(p, delta)?;
        if applied.operators() != q.operators() || applied.links() != q.links() {
            return Err(MappingError::TransformationMismatch(format!(
                "expected {} operators and {} links, got {} and {}",
                q.len(),
                q.links().len(),
                applied.len(),
                applied.links().len()
            )));
        }
        let added: BTreeSet<&OpId> = delta
            .iter()
            .filter_map(|e| match e {
                EditOp::AddOperator(op) => Some(&op.id),
                _ => None,
            })
            .collect();
        let deleted: BTreeSet<&OpId> = delta
            .iter()
            .filter_map(|e| match e {
                EditOp::DeleteOperator(id) => Some(id),
                _ => None,
            })
            .collect();
        let pairs = p
            .operators()
            .iter()
            .filter(|op| !deleted.contains(&op.id) && !added.contains(&op.id))
            .map(|op| (op.id.clone(), op.id.clone()));
        EditMapping::new(pairs)
    }
}

/// Edits induced by a mapping, plus the id each Q operator gets when the
/// edits are applied to P.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedEdits {
    pub delta: Transformation,
    /// Q operator id to its id in `P ⊕ delta`.
    pub result_ids: BTreeMap<OpId, OpId>,
}

/// Derives deletes, adds and modifications from a mapping. Added operators
/// keep their Q ids unless that id survives in P, in which case a fresh id
/// is chosen.
pub fn derive_edits(p: &Workflow, q: &Workflow, m: &EditMapping) -> Result<DerivedEdits, MappingError> {
    m.check(p, q)?;
    let mut result_ids = BTreeMap::new();
    let mut taken: BTreeSet<OpId> = m.pairs().map(|(a, _)| a.clone()).collect();
    for op in q.operators() {
        let id = match m.preimage(op.id.as_str()) {
            Some(a) => a.clone(),
            None => {
                let mut id = op.id.clone();
                while taken.contains(&id) {
                    id = OpId(format!("{id}'"));
                }
                taken.insert(id.clone());
                id
            }
        };
        result_ids.insert(op.id.clone(), id);
    }
    let rename = |l: &Link| Link {
        from: PortRef { op: result_ids[&l.from.op].clone(), port: l.from.port },
        to: PortRef { op: result_ids[&l.to.op].clone(), port: l.to.port },
    };

    let mut delta = Vec::new();
    let mapped_q_links: BTreeSet<Link> = m.link_map(p, q).into_values().collect();
    for l in p.links() {
        if m.map_link(l, q).is_none() {
            delta.push(EditOp::RemoveLink(l.clone()));
        }
    }
    for op in p.operators() {
        match m.get(op.id.as_str()) {
            None => delta.push(EditOp::DeleteOperator(op.id.clone())),
            Some(b) => {
                let target = q.operator(b.as_str()).expect("checked");
                if target.properties != op.properties {
                    delta.push(EditOp::ModifyOperator { id: op.id.clone(), properties: target.properties.clone() });
                }
            }
        }
    }
    for op in q.operators() {
        if m.preimage(op.id.as_str()).is_none() {
            let mut added = op.clone();
            added.id = result_ids[&op.id].clone();
            delta.push(EditOp::AddOperator(added));
        }
    }
    for l in q.links() {
        if !mapped_q_links.contains(l) {
            delta.push(EditOp::AddLink(rename(l)));
        }
    }
    Ok(DerivedEdits { delta: Transformation(delta), result_ids })
}

pub fn derive_edits_from_mapping(p: &Workflow, q: &Workflow, m: &EditMapping) -> Result<Transformation, MappingError> {
    derive_edits(p, q, m).map(|d| d.delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workflow::{col, Operator, Properties, Schema, TableSemantics};

    fn pair() -> (Workflow, Workflow) {
        let p = Workflow::new(
            "p",
            TableSemantics::Set,
            vec![
                Operator::new("s", Properties::source("t", Schema::ints(&["x"]))),
                Operator::new("f", Properties::filter(col("x").gt(5))),
                Operator::new("k", Properties::Sink),
            ],
            vec![Link::simple("s", "f"), Link::simple("f", "k")],
        )
        .unwrap();
        let q = Workflow::new(
            "q",
            TableSemantics::Set,
            vec![
                Operator::new("s", Properties::source("t", Schema::ints(&["x"]))),
                Operator::new("f", Properties::filter(col("x").gt(6))),
                Operator::new("k", Properties::Sink),
            ],
            vec![Link::simple("s", "f"), Link::simple("f", "k")],
        )
        .unwrap();
        (p, q)
    }

    #[test]
    fn identical_versions_have_no_edits() {
        let (p, _) = pair();
        let m = EditMapping::identity(&p, &p);
        assert!(derive_edits_from_mapping(&p, &p, &m).unwrap().is_empty());
    }

    #[test]
    fn modified_filter() {
        let (p, q) = pair();
        let delta = derive_edits_from_mapping(&p, &q, &EditMapping::identity(&p, &q)).unwrap();
        assert_eq!(delta.len(), 1);
        assert!(matches!(delta.0[0], EditOp::ModifyOperator { .. }));
    }

    #[test]
    fn unmapped_filter_is_deleted_and_added_without_id_clash() {
        let (p, q) = pair();
        let m = EditMapping::from_pairs(&[("s", "s"), ("k", "f")]);
        assert!(m.check(&p, &q).is_err());
        let m = EditMapping::from_pairs(&[("s", "s"), ("k", "k")]);
        let d = derive_edits(&p, &q, &m).unwrap();
        assert_eq!(d.delta.edit_distance(), 2);
        let out = apply_transformation(&p, &d.delta).unwrap();
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn non_injective_rejected() {
        assert!(EditMapping::new([("a".into(), "x".into()), ("b".into(), "x".into())]).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let m = EditMapping::from_pairs(&[("a", "b"), ("c", "d")]);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"[{"p":"a","q":"b"},{"p":"c","q":"d"}]"#);
        assert_eq!(serde_json::from_str::<EditMapping>(&json).unwrap(), m);
    }
}
