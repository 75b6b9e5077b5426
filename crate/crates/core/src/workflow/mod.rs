//! Dataflow DAG model: operators, ports, links and workflows.
//!
//! A [`Workflow`] is immutable once built. Structural problems such as
//! cycles or unknown columns are reported by [`validate_workflow`] rather
//! than rejected at construction, so malformed inputs can be diagnosed.

mod eval;
mod predicate;
mod schema;
mod subdag;
mod validate;
mod value;

use std::collections::HashMap;
use std::fmt;

use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

pub use eval::{evaluate, evaluate_subdag, EvalOptions, ExecError, ReplicateOrder};
pub use predicate::{col, lit, CmpOp, EvalError, Expr, Predicate};
pub use schema::{output_schema, propagate_schemas, SchemaMap};
pub use subdag::{attach_virtual_boundaries, complete_subdag, induced_subdag, BoundaryError, BoundaryKeys, Completed, SubDag};
pub(crate) use subdag::{complete_with_schemas, is_weakly_connected, subdag_from_indices};
pub use validate::{validate_workflow, ValidationReport, Violation, ViolationRule};
pub use value::{ArityError, Column, ColumnType, Row, Schema, Table, TableSemantics, Value};

/// Operator identifier, unique within one workflow version.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpId(pub String);

impl OpId {
    pub fn new(s: impl Into<String>) -> Self {
        OpId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for OpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for OpId {
    fn from(s: &str) -> Self {
        OpId(s.to_string())
    }
}

impl From<String> for OpId {
    fn from(s: String) -> Self {
        OpId(s)
    }
}

impl std::borrow::Borrow<str> for OpId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorKind {
    Source,
    Sink,
    Filter,
    Project,
    Join,
    LeftOuterJoin,
    Aggregate,
    Union,
    Replicate,
    Sort,
    Unnest,
    Udf,
    Classifier,
    DictionaryMatcher,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 14] = [
        Self::Source,
        Self::Sink,
        Self::Filter,
        Self::Project,
        Self::Join,
        Self::LeftOuterJoin,
        Self::Aggregate,
        Self::Union,
        Self::Replicate,
        Self::Sort,
        Self::Unnest,
        Self::Udf,
        Self::Classifier,
        Self::DictionaryMatcher,
    ];

    /// Operators whose semantics are known only through an opaque token.
    pub fn is_opaque(self) -> bool {
        matches!(self, Self::Udf | Self::Classifier | Self::DictionaryMatcher)
    }

    /// Kinds that may be mapped onto each other by an edit mapping. A
    /// mapped pair of different kinds within one class is a modification
    /// that retypes the operator.
    pub fn compatibility_class(self) -> u8 {
        match self {
            Self::Source => 0,
            Self::Sink => 1,
            Self::Filter | Self::Project | Self::Aggregate | Self::Sort => 2,
            Self::Join | Self::LeftOuterJoin | Self::Union => 3,
            Self::Replicate => 4,
            Self::Unnest => 5,
            Self::Udf => 6,
            Self::Classifier => 7,
            Self::DictionaryMatcher => 8,
        }
    }

    pub fn compatible_with(self, other: OperatorKind) -> bool {
        self.compatibility_class() == other.compatibility_class()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Source => "Source",
            Self::Sink => "Sink",
            Self::Filter => "Filter",
            Self::Project => "Project",
            Self::Join => "Join",
            Self::LeftOuterJoin => "LeftOuterJoin",
            Self::Aggregate => "Aggregate",
            Self::Union => "Union",
            Self::Replicate => "Replicate",
            Self::Sort => "Sort",
            Self::Unnest => "Unnest",
            Self::Udf => "Udf",
            Self::Classifier => "Classifier",
            Self::DictionaryMatcher => "DictionaryMatcher",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceProps {
    pub table: String,
    pub schema: Schema,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FilterProps {
    pub predicate: Predicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProjectProps {
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JoinKey {
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JoinProps {
    pub keys: Vec<JoinKey>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFunc {
    Count,
    Sum,
    Min,
    Max,
    Avg,
}

impl AggFunc {
    /// Functions whose result depends on how many times a row occurs.
    pub fn is_cardinality_sensitive(self) -> bool {
        matches!(self, Self::Count | Self::Sum | Self::Avg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AggregateSpec {
    pub func: AggFunc,
    /// Input column; `None` only for `count(*)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    pub alias: String,
}

impl AggregateSpec {
    pub fn new(func: AggFunc, column: Option<&str>, alias: &str) -> Self {
        AggregateSpec { func, column: column.map(String::from), alias: alias.to_string() }
    }

    pub fn count(alias: &str) -> Self {
        Self::new(AggFunc::Count, None, alias)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AggregateProps {
    pub group_by: Vec<String>,
    pub aggregates: Vec<AggregateSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReplicateProps {
    pub outputs: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SortKey {
    pub column: String,
    #[serde(default)]
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SortProps {
    pub keys: Vec<SortKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnnestProps {
    pub column: String,
    pub delimiter: String,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpaqueProps {
    /// Semantic token; two opaque operators agree only if tokens match.
    pub token: String,
    #[serde(default = "one")]
    pub inputs: u32,
    /// Declared output schema, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<Schema>,
}

/// Kind-specific operator configuration. The variant determines the kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Properties {
    Source(SourceProps),
    Sink,
    Filter(FilterProps),
    Project(ProjectProps),
    Join(JoinProps),
    LeftOuterJoin(JoinProps),
    Aggregate(AggregateProps),
    Union,
    Replicate(ReplicateProps),
    Sort(SortProps),
    Unnest(UnnestProps),
    Udf(OpaqueProps),
    Classifier(OpaqueProps),
    DictionaryMatcher(OpaqueProps),
}

impl Properties {
    pub fn kind(&self) -> OperatorKind {
        match self {
            Properties::Source(_) => OperatorKind::Source,
            Properties::Sink => OperatorKind::Sink,
            Properties::Filter(_) => OperatorKind::Filter,
            Properties::Project(_) => OperatorKind::Project,
            Properties::Join(_) => OperatorKind::Join,
            Properties::LeftOuterJoin(_) => OperatorKind::LeftOuterJoin,
            Properties::Aggregate(_) => OperatorKind::Aggregate,
            Properties::Union => OperatorKind::Union,
            Properties::Replicate(_) => OperatorKind::Replicate,
            Properties::Sort(_) => OperatorKind::Sort,
            Properties::Unnest(_) => OperatorKind::Unnest,
            Properties::Udf(_) => OperatorKind::Udf,
            Properties::Classifier(_) => OperatorKind::Classifier,
            Properties::DictionaryMatcher(_) => OperatorKind::DictionaryMatcher,
        }
    }

    pub fn in_ports(&self) -> u32 {
        match self {
            Properties::Source(_) => 0,
            Properties::Join(_) | Properties::LeftOuterJoin(_) | Properties::Union => 2,
            Properties::Udf(o) | Properties::Classifier(o) | Properties::DictionaryMatcher(o) => o.inputs,
            _ => 1,
        }
    }

    pub fn out_ports(&self) -> u32 {
        match self {
            Properties::Sink => 0,
            Properties::Replicate(r) => r.outputs,
            _ => 1,
        }
    }

    pub fn opaque(&self) -> Option<&OpaqueProps> {
        match self {
            Properties::Udf(o) | Properties::Classifier(o) | Properties::DictionaryMatcher(o) => Some(o),
            _ => None,
        }
    }

    pub fn filter(predicate: Predicate) -> Self {
        Properties::Filter(FilterProps { predicate })
    }

    pub fn project(columns: &[&str]) -> Self {
        Properties::Project(ProjectProps { columns: columns.iter().map(|c| c.to_string()).collect() })
    }

    pub fn join(keys: &[(&str, &str)]) -> Self {
        Properties::Join(JoinProps { keys: join_keys(keys) })
    }

    pub fn left_outer_join(keys: &[(&str, &str)]) -> Self {
        Properties::LeftOuterJoin(JoinProps { keys: join_keys(keys) })
    }

    pub fn source(table: &str, schema: Schema) -> Self {
        Properties::Source(SourceProps { table: table.to_string(), schema })
    }

    pub fn sort(columns: &[(&str, bool)]) -> Self {
        Properties::Sort(SortProps {
            keys: columns
                .iter()
                .map(|(c, d)| SortKey { column: c.to_string(), descending: *d })
                .collect(),
        })
    }

    pub fn aggregate(group_by: &[&str], aggregates: Vec<AggregateSpec>) -> Self {
        Properties::Aggregate(AggregateProps {
            group_by: group_by.iter().map(|c| c.to_string()).collect(),
            aggregates,
        })
    }

    /// JSON body of the property bag, without the kind tag.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::to_value;
        let v = match self {
            Properties::Source(p) => to_value(p),
            Properties::Sink | Properties::Union => return serde_json::json!({}),
            Properties::Filter(p) => to_value(p),
            Properties::Project(p) => to_value(p),
            Properties::Join(p) | Properties::LeftOuterJoin(p) => to_value(p),
            Properties::Aggregate(p) => to_value(p),
            Properties::Replicate(p) => to_value(p),
            Properties::Sort(p) => to_value(p),
            Properties::Unnest(p) => to_value(p),
            Properties::Udf(p) | Properties::Classifier(p) | Properties::DictionaryMatcher(p) => to_value(p),
        };
        v.expect("property bags serialize")
    }

    pub fn from_json(kind: OperatorKind, value: serde_json::Value) -> Result<Self, serde_json::Error> {
        use serde_json::from_value;
        let value = if value.is_null() { serde_json::json!({}) } else { value };
        Ok(match kind {
            OperatorKind::Source => Properties::Source(from_value(value)?),
            OperatorKind::Sink => Properties::Sink,
            OperatorKind::Filter => Properties::Filter(from_value(value)?),
            OperatorKind::Project => Properties::Project(from_value(value)?),
            OperatorKind::Join => Properties::Join(from_value(value)?),
            OperatorKind::LeftOuterJoin => Properties::LeftOuterJoin(from_value(value)?),
            OperatorKind::Aggregate => Properties::Aggregate(from_value(value)?),
            OperatorKind::Union => Properties::Union,
            OperatorKind::Replicate => Properties::Replicate(from_value(value)?),
            OperatorKind::Sort => Properties::Sort(from_value(value)?),
            OperatorKind::Unnest => Properties::Unnest(from_value(value)?),
            OperatorKind::Udf => Properties::Udf(from_value(value)?),
            OperatorKind::Classifier => Properties::Classifier(from_value(value)?),
            OperatorKind::DictionaryMatcher => Properties::DictionaryMatcher(from_value(value)?),
        })
    }
}

fn join_keys(keys: &[(&str, &str)]) -> Vec<JoinKey> {
    keys.iter()
        .map(|(l, r)| JoinKey { left: l.to_string(), right: r.to_string() })
        .collect()
}

impl Serialize for Properties {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Tagged<'a> {
            kind: OperatorKind,
            properties: &'a serde_json::Value,
        }
        Tagged { kind: self.kind(), properties: &self.to_json() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Properties {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Tagged {
            kind: OperatorKind,
            #[serde(default)]
            properties: serde_json::Value,
        }
        let t = Tagged::deserialize(d)?;
        Properties::from_json(t.kind, t.properties).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Operator {
    pub id: OpId,
    pub properties: Properties,
}

impl Operator {
    pub fn new(id: impl Into<OpId>, properties: Properties) -> Self {
        Operator { id: id.into(), properties }
    }

    pub fn kind(&self) -> OperatorKind {
        self.properties.kind()
    }
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    id: OpId,
    kind: OperatorKind,
    #[serde(default)]
    properties: serde_json::Value,
    #[serde(default)]
    out_ports: Option<Vec<u32>>,
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        OperatorRepr {
            id: self.id.clone(),
            kind: self.kind(),
            properties: self.properties.to_json(),
            out_ports: Some((0..self.properties.out_ports()).collect()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = OperatorRepr::deserialize(d)?;
        let properties = Properties::from_json(repr.kind, repr.properties).map_err(D::Error::custom)?;
        if let Some(ports) = repr.out_ports {
            let expected: Vec<u32> = (0..properties.out_ports()).collect();
            if ports != expected {
                return Err(D::Error::custom(format!(
                    "operator `{}`: out_ports {ports:?} do not match its kind ({expected:?})",
                    repr.id
                )));
            }
        }
        Ok(Operator { id: repr.id, properties })
    }
}

/// One end of a link: an operator and a port index on it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PortRef {
    pub op: OpId,
    pub port: u32,
}

/// A directed edge from an output port to an input port.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub from: PortRef,
    pub to: PortRef,
}

impl Link {
    pub fn new(from: impl Into<OpId>, from_port: u32, to: impl Into<OpId>, to_port: u32) -> Self {
        Link {
            from: PortRef { op: from.into(), port: from_port },
            to: PortRef { op: to.into(), port: to_port },
        }
    }

    /// Link between port 0 of both ends.
    pub fn simple(from: impl Into<OpId>, to: impl Into<OpId>) -> Self {
        Link::new(from, 0, to, 0)
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}->{}:{}", self.from.op, self.from.port, self.to.op, self.to.port)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkflowError {
    #[error("duplicate operator id `{0}`")]
    DuplicateOperator(OpId),
    #[error("unknown operator id `{0}`")]
    UnknownOperator(OpId),
    #[error("workflow contains a cycle through `{0}`")]
    Cycle(OpId),
}

/// An immutable dataflow version.
#[derive(Debug, Clone)]
pub struct Workflow {
    id: String,
    semantics: TableSemantics,
    operators: Vec<Operator>,
    links: Vec<Link>,
    index: HashMap<OpId, usize>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
}

impl PartialEq for Workflow {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.semantics == other.semantics
            && self.operators == other.operators
            && self.links == other.links
    }
}

impl Eq for Workflow {}

impl Workflow {
    /// Builds a workflow. Operators and links are stored sorted so equal
    /// graphs compare equal regardless of input order.
    pub fn new(
        id: impl Into<String>,
        semantics: TableSemantics,
        mut operators: Vec<Operator>,
        mut links: Vec<Link>,
    ) -> Result<Self, WorkflowError> {
        operators.sort();
        links.sort();
        links.dedup();
        let mut index = HashMap::with_capacity(operators.len());
        for (i, op) in operators.iter().enumerate() {
            if index.insert(op.id.clone(), i).is_some() {
                return Err(WorkflowError::DuplicateOperator(op.id.clone()));
            }
        }
        let mut incoming = vec![Vec::new(); operators.len()];
        let mut outgoing = vec![Vec::new(); operators.len()];
        for (li, link) in links.iter().enumerate() {
            if let Some(&t) = index.get(&link.to.op) {
                incoming[t].push(li);
            }
            if let Some(&f) = index.get(&link.from.op) {
                outgoing[f].push(li);
            }
        }
        for list in &mut incoming {
            list.sort_by_key(|&l| (links[l].to.port, l));
        }
        for list in &mut outgoing {
            list.sort_by_key(|&l| (links[l].from.port, l));
        }
        Ok(Workflow { id: id.into(), semantics, operators, links, index, incoming, outgoing })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn semantics(&self) -> TableSemantics {
        self.semantics
    }

    pub fn with_semantics(&self, semantics: TableSemantics) -> Workflow {
        let mut w = self.clone();
        w.semantics = semantics;
        w
    }

    pub fn with_id(&self, id: impl Into<String>) -> Workflow {
        let mut w = self.clone();
        w.id = id.into();
        w
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn operator(&self, id: &str) -> Option<&Operator> {
        self.index_of(id).map(|i| &self.operators[i])
    }

    pub fn op(&self, idx: usize) -> &Operator {
        &self.operators[idx]
    }

    /// Indices of links entering operator `idx`, ordered by in-port.
    pub fn incoming(&self, idx: usize) -> &[usize] {
        &self.incoming[idx]
    }

    /// Indices of links leaving operator `idx`, ordered by out-port.
    pub fn outgoing(&self, idx: usize) -> &[usize] {
        &self.outgoing[idx]
    }

    pub fn link(&self, idx: usize) -> &Link {
        &self.links[idx]
    }

    /// Producer feeding `in_port` of operator `idx`, as (operator index, out-port).
    pub fn feeder(&self, idx: usize, in_port: u32) -> Option<(usize, u32)> {
        self.incoming[idx]
            .iter()
            .map(|&l| &self.links[l])
            .find(|l| l.to.port == in_port)
            .and_then(|l| self.index_of(l.from.op.as_str()).map(|f| (f, l.from.port)))
    }

    /// Upstream operator indices of `idx` (one per incoming link).
    pub fn predecessors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        self.incoming[idx].iter().filter_map(|&l| self.index_of(self.links[l].from.op.as_str()))
    }

    pub fn successors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        self.outgoing[idx].iter().filter_map(|&l| self.index_of(self.links[l].to.op.as_str()))
    }

    pub fn sinks(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.operators[i].kind() == OperatorKind::Sink).collect()
    }

    pub fn sources(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.operators[i].kind() == OperatorKind::Source).collect()
    }

    fn graph(&self, reverse_ties: bool) -> DiGraph<usize, ()> {
        let mut g = DiGraph::new();
        let order: Vec<usize> = if reverse_ties {
            (0..self.len()).rev().collect()
        } else {
            (0..self.len()).collect()
        };
        let mut nodes = vec![petgraph::graph::NodeIndex::new(0); self.len()];
        for &i in &order {
            nodes[i] = g.add_node(i);
        }
        for link in &self.links {
            if let (Some(f), Some(t)) = (self.index_of(link.from.op.as_str()), self.index_of(link.to.op.as_str())) {
                g.add_edge(nodes[f], nodes[t], ());
            }
        }
        g
    }

    /// A topological order of operator indices. `reverse_ties` picks a
    /// different (still valid) order for determinism checks.
    pub fn topo_order_with(&self, reverse_ties: bool) -> Result<Vec<usize>, WorkflowError> {
        let g = self.graph(reverse_ties);
        petgraph::algo::toposort(&g, None)
            .map(|order| order.into_iter().map(|n| g[n]).collect())
            .map_err(|cycle| WorkflowError::Cycle(self.operators[g[cycle.node_id()]].id.clone()))
    }

    pub fn topo_order(&self) -> Result<Vec<usize>, WorkflowError> {
        self.topo_order_with(false)
    }

    pub fn is_acyclic(&self) -> bool {
        !petgraph::algo::is_cyclic_directed(&self.graph(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Workflow {
        Workflow::new(
            "w",
            TableSemantics::Set,
            vec![
                Operator::new("src", Properties::source("people", Schema::ints(&["age"]))),
                Operator::new("f", Properties::filter(col("age").gt(24))),
                Operator::new("sink", Properties::Sink),
            ],
            vec![Link::simple("src", "f"), Link::simple("f", "sink")],
        )
        .unwrap()
    }

    #[test]
    fn topological_order_respects_links() {
        let w = chain();
        for rev in [false, true] {
            let order = w.topo_order_with(rev).unwrap();
            let pos = |id: &str| order.iter().position(|&i| w.op(i).id.as_str() == id).unwrap();
            assert!(pos("src") < pos("f") && pos("f") < pos("sink"));
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = Workflow::new(
            "w",
            TableSemantics::Set,
            vec![Operator::new("a", Properties::Sink), Operator::new("a", Properties::Sink)],
            vec![],
        )
        .unwrap_err();
        assert_eq!(err, WorkflowError::DuplicateOperator("a".into()));
    }

    #[test]
    fn properties_roundtrip_through_json() {
        let props = vec![
            Properties::filter(col("a").lt(3)),
            Properties::Sink,
            Properties::join(&[("a", "b")]),
            Properties::Udf(OpaqueProps { token: "t".into(), inputs: 1, schema: None }),
        ];
        for p in props {
            let json = serde_json::to_string(&p).unwrap();
            let back: Properties = serde_json::from_str(&json).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn kinds_and_ports() {
        assert_eq!(Properties::Union.in_ports(), 2);
        assert_eq!(Properties::Sink.out_ports(), 0);
        assert_eq!(Properties::Replicate(ReplicateProps { outputs: 3 }).out_ports(), 3);
        assert!(OperatorKind::Project.compatible_with(OperatorKind::Aggregate));
        assert!(!OperatorKind::Udf.compatible_with(OperatorKind::Classifier));
    }
}
