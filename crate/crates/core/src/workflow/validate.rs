//! Structural and schema validation of workflows.

use std::fmt;

use serde::Serialize;

use super::schema::propagate_schemas;
use super::{OperatorKind, Workflow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationRule {
    Cycle,
    DanglingLink,
    PortOutOfRange,
    DuplicateInput,
    MissingInput,
    MissingOutput,
    UnknownColumn,
    SchemaMismatch,
    MalformedProperties,
}

impl ViolationRule {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cycle => "cycle",
            Self::DanglingLink => "dangling link",
            Self::PortOutOfRange => "port out of range",
            Self::DuplicateInput => "duplicate input",
            Self::MissingInput => "missing input",
            Self::MissingOutput => "missing output",
            Self::UnknownColumn => "unknown column",
            Self::SchemaMismatch => "schema mismatch",
            Self::MalformedProperties => "malformed properties",
        }
    }
}

impl fmt::Display for ViolationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub rule: ViolationRule,
    /// Operator id or rendered link the violation is about.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at `{}`: {}", self.rule, self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: ViolationRule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

/// Checks every workflow invariant and lists each violation found.
pub fn validate_workflow(w: &Workflow) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |rule, subject: String, message: String| out.push(Violation { rule, subject, message });

    for link in w.links() {
        let (from, to) = (w.operator(link.from.op.as_str()), w.operator(link.to.op.as_str()));
        match (from, to) {
            (Some(f), Some(t)) => {
                if link.from.port >= f.properties.out_ports() {
                    push(ViolationRule::PortOutOfRange, link.to_string(), format!("`{}` has no out-port {}", f.id, link.from.port));
                }
                if link.to.port >= t.properties.in_ports() {
                    push(ViolationRule::PortOutOfRange, link.to_string(), format!("`{}` has no in-port {}", t.id, link.to.port));
                }
            }
            _ => push(ViolationRule::DanglingLink, link.to_string(), "link endpoint is not an operator".into()),
        }
    }

    for (idx, op) in w.operators().iter().enumerate() {
        let props = &op.properties;
        let malformed = match props {
            super::Properties::Replicate(r) => r.outputs == 0,
            super::Properties::Udf(o) | super::Properties::Classifier(o) | super::Properties::DictionaryMatcher(o) => {
                o.inputs == 0 || o.token.is_empty()
            }
            super::Properties::Project(p) => p.columns.is_empty(),
            super::Properties::Sort(s) => s.keys.is_empty(),
            _ => false,
        };
        if malformed {
            push(ViolationRule::MalformedProperties, op.id.to_string(), format!("ill-formed {} properties", op.kind()));
        }
        for port in 0..props.in_ports() {
            let feeds = w.incoming(idx).iter().filter(|&&l| w.link(l).to.port == port).count();
            if feeds == 0 {
                push(ViolationRule::MissingInput, op.id.to_string(), format!("in-port {port} has no incoming link"));
            } else if feeds > 1 {
                push(ViolationRule::DuplicateInput, op.id.to_string(), format!("in-port {port} has {feeds} incoming links"));
            }
        }
        if op.kind() != OperatorKind::Sink && w.outgoing(idx).is_empty() {
            push(ViolationRule::MissingOutput, op.id.to_string(), "operator has no outgoing link".into());
        }
    }

    if let Err(super::WorkflowError::Cycle(id)) = w.topo_order() {
        push(ViolationRule::Cycle, id.to_string(), "links form a cycle".into());
    }

    for (idx, msg) in propagate_schemas(w).errors {
        let rule = if msg.starts_with("unknown column") {
            ViolationRule::UnknownColumn
        } else {
            ViolationRule::SchemaMismatch
        };
        push(rule, w.op(idx).id.to_string(), msg);
    }

    out.sort();
    ValidationReport { violations: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workflow::{col, Link, Operator, Properties, Schema, TableSemantics};

    fn src() -> Operator {
        Operator::new("src", Properties::source("people", Schema::ints(&["age"])))
    }

    #[test]
    fn chain_is_ok() {
        let w = Workflow::new(
            "w",
            TableSemantics::Set,
            vec![src(), Operator::new("f", Properties::filter(col("age").gt(24))), Operator::new("k", Properties::Sink)],
            vec![Link::simple("src", "f"), Link::simple("f", "k")],
        )
        .unwrap();
        assert!(validate_workflow(&w).is_ok());
    }

    #[test]
    fn cycle_is_reported() {
        let w = Workflow::new(
            "w",
            TableSemantics::Set,
            vec![
                Operator::new("a", Properties::filter(col("age").gt(1))),
                Operator::new("b", Properties::filter(col("age").gt(2))),
            ],
            vec![Link::simple("a", "b"), Link::simple("b", "a")],
        )
        .unwrap();
        assert!(validate_workflow(&w).has(ViolationRule::Cycle));
    }

    #[test]
    fn unknown_column_is_reported() {
        let w = Workflow::new(
            "w",
            TableSemantics::Set,
            vec![
                Operator::new("src", Properties::source("t", Schema::ints(&["x"]))),
                Operator::new("f", Properties::filter(col("age").gt(24))),
                Operator::new("k", Properties::Sink),
            ],
            vec![Link::simple("src", "f"), Link::simple("f", "k")],
        )
        .unwrap();
        let report = validate_workflow(&w);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, ViolationRule::UnknownColumn);
        assert_eq!(report.violations[0].subject, "f");
    }

    #[test]
    fn missing_links_are_reported() {
        let w = Workflow::new(
            "w",
            TableSemantics::Set,
            vec![src(), Operator::new("j", Properties::join(&[("age", "b")])), Operator::new("k", Properties::Sink)],
            vec![Link::simple("src", "j"), Link::simple("j", "k")],
        )
        .unwrap();
        let report = validate_workflow(&w);
        assert!(report.has(ViolationRule::MissingInput));
    }
}
