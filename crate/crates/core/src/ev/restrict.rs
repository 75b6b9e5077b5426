//! Restriction rules evaluated on the two sides of a window.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::window::{VersionPair, Window};
use crate::workflow::{OpId, OperatorKind, Properties, TableSemantics, Workflow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Results must be compared under a supported table semantics.
    Semantics,
    /// Only whitelisted operator kinds.
    OperatorWhitelist,
    /// Filter predicates must be linear.
    LinearPredicates,
    /// Both sides need the same number of outer joins.
    OuterJoinCount,
    /// Both sides need the same number of aggregates.
    AggregateCount,
    /// A cardinality-sensitive aggregate may only sit on select/project/join
    /// inputs, each input scanned once.
    AggregateInput,
    /// Opaque operators cannot be reasoned about.
    OpaqueOperator,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Semantics => "semantics",
            Rule::OperatorWhitelist => "operator-whitelist",
            Rule::LinearPredicates => "linear-predicates",
            Rule::OuterJoinCount => "outer-join-count",
            Rule::AggregateCount => "aggregate-count",
            Rule::AggregateInput => "aggregate-input",
            Rule::OpaqueOperator => "opaque-operator",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleViolation {
    pub rule: Rule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<OpId>,
    pub message: String,
    /// Growing the window cannot repair this violation.
    pub permanent: bool,
}

impl RuleViolation {
    pub fn new(rule: Rule, operator: Option<OpId>, message: impl Into<String>) -> Self {
        let permanent = !matches!(rule, Rule::OuterJoinCount | Rule::AggregateCount);
        RuleViolation { rule, operator, message: message.into(), permanent }
    }
}

impl fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.operator {
            Some(op) => write!(f, "{} at `{op}`: {}", self.rule, self.message),
            None => write!(f, "{}: {}", self.rule, self.message),
        }
    }
}

/// One side of a window: a version and the member operator indices.
#[derive(Debug, Clone)]
pub struct SideView<'a> {
    pub workflow: &'a Workflow,
    pub members: BTreeSet<usize>,
}

impl SideView<'_> {
    pub fn operators(&self) -> impl Iterator<Item = (usize, &crate::workflow::Operator)> + '_ {
        self.members.iter().map(|&i| (i, self.workflow.op(i)))
    }

    pub fn count(&self, kind: OperatorKind) -> usize {
        self.operators().filter(|(_, o)| o.kind() == kind).count()
    }

    /// Member ancestors of `idx`, excluding `idx`.
    pub fn ancestors(&self, idx: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![idx];
        while let Some(i) = stack.pop() {
            for p in self.workflow.predecessors(i) {
                if self.members.contains(&p) && seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// Whether some data source reaches `idx` along more than one path
    /// inside `scope ∪ {idx}`, counting boundary inputs by producer port.
    pub fn scans_twice(&self, idx: usize, scope: &BTreeSet<usize>) -> bool {
        let mut external: BTreeMap<(usize, u32), usize> = BTreeMap::new();
        let mut consumers: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in scope.iter().chain(std::iter::once(&idx)) {
            let op = self.workflow.op(i);
            for port in 0..op.properties.in_ports() {
                if let Some((f, out)) = self.workflow.feeder(i, port) {
                    if scope.contains(&f) {
                        *consumers.entry(f).or_default() += 1;
                    } else {
                        *external.entry((f, out)).or_default() += 1;
                    }
                }
            }
        }
        external.values().chain(consumers.values()).any(|&n| n > 1)
    }
}

/// Both sides of a window.
#[derive(Debug, Clone)]
pub struct WindowSides<'a> {
    pub p: SideView<'a>,
    pub q: SideView<'a>,
    pub semantics: TableSemantics,
}

impl<'a> WindowSides<'a> {
    pub fn new(pair: &'a VersionPair, w: &Window) -> Self {
        WindowSides {
            p: SideView { workflow: pair.p(), members: pair.p_members(w) },
            q: SideView { workflow: pair.q(), members: pair.q_members(w) },
            semantics: pair.semantics(),
        }
    }

    pub fn both(&self) -> [&SideView<'a>; 2] {
        [&self.p, &self.q]
    }
}

/// The select/project/join, outer-join and aggregate profile.
pub(crate) fn spja_violations(sides: &WindowSides<'_>, count_rules: bool) -> Vec<RuleViolation> {
    let whitelist = super::spja_kinds();
    let mut out = Vec::new();
    for side in sides.both() {
        for (idx, op) in side.operators() {
            if !whitelist.contains(&op.kind()) {
                out.push(RuleViolation::new(Rule::OperatorWhitelist, Some(op.id.clone()), format!("{} is not supported", op.kind())));
                continue;
            }
            if let Properties::Filter(f) = &op.properties {
                if !f.predicate.is_linear() {
                    out.push(RuleViolation::new(Rule::LinearPredicates, Some(op.id.clone()), format!("{} is not linear", f.predicate)));
                }
            }
            if let Properties::Aggregate(a) = &op.properties {
                if a.aggregates.iter().any(|s| s.func.is_cardinality_sensitive()) {
                    let anc = side.ancestors(idx);
                    let bad = anc.iter().map(|&i| side.workflow.op(i)).find(|o| {
                        !matches!(o.kind(), OperatorKind::Source | OperatorKind::Filter | OperatorKind::Project | OperatorKind::Join)
                    });
                    if let Some(b) = bad {
                        out.push(RuleViolation::new(
                            Rule::AggregateInput,
                            Some(op.id.clone()),
                            format!("fed by {} `{}`", b.kind(), b.id),
                        ));
                    } else if side.scans_twice(idx, &anc) {
                        out.push(RuleViolation::new(Rule::AggregateInput, Some(op.id.clone()), "an input is scanned twice"));
                    }
                }
            }
        }
    }
    if count_rules {
        for (kind, rule) in [(OperatorKind::LeftOuterJoin, Rule::OuterJoinCount), (OperatorKind::Aggregate, Rule::AggregateCount)] {
            let (a, b) = (sides.p.count(kind), sides.q.count(kind));
            if a != b {
                out.push(RuleViolation::new(rule, None, format!("{a} vs {b}")));
            }
        }
    }
    out
}

pub(crate) fn opaque_violations(sides: &WindowSides<'_>) -> Vec<RuleViolation> {
    sides
        .both()
        .into_iter()
        .flat_map(|s| s.operators())
        .filter(|(_, o)| o.kind().is_opaque())
        .map(|(_, o)| RuleViolation::new(Rule::OpaqueOperator, Some(o.id.clone()), format!("{} is opaque", o.kind())))
        .collect()
}
