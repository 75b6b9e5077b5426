//! Column-level summaries of whole versions, used to spot inequivalent
//! pairs before any search.

use serde::Serialize;

use crate::workflow::{Properties, TableSemantics, Workflow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Exact,
    /// Some operator on the way to the sink has no transfer rule.
    Abstain,
}

/// Output columns and sort order of a version's sink.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolicSummary {
    pub projected: Vec<String>,
    /// Sort keys in order; descending keys carry a ` desc` suffix.
    pub sorted_by: Vec<String>,
    pub confidence: Confidence,
}

impl SymbolicSummary {
    fn abstain() -> Self {
        SymbolicSummary { projected: Vec::new(), sorted_by: Vec::new(), confidence: Confidence::Abstain }
    }

    pub fn is_exact(&self) -> bool {
        self.confidence == Confidence::Exact
    }
}

/// Which part of the summaries tells the versions apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryField {
    Projected,
    SortedBy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolicDifference {
    pub field: SummaryField,
    pub p: SymbolicSummary,
    pub q: SymbolicSummary,
}

/// Pushes column lists and sort keys from the sources to the sink.
pub fn summarize_version(w: &Workflow) -> SymbolicSummary {
    let sinks = w.sinks();
    let (Ok(order), [sink]) = (w.topo_order(), sinks.as_slice()) else {
        return SymbolicSummary::abstain();
    };
    let mut at: Vec<Option<SymbolicSummary>> = vec![None; w.len()];
    for idx in order {
        let props = &w.op(idx).properties;
        let upstream: Vec<SymbolicSummary> = (0..props.in_ports())
            .map(|p| w.feeder(idx, p).and_then(|(f, _)| at[f].clone()).unwrap_or_else(SymbolicSummary::abstain))
            .collect();
        let summary = if upstream.iter().any(|s| !s.is_exact()) {
            SymbolicSummary::abstain()
        } else {
            transfer(props, upstream)
        };
        at[idx] = Some(summary);
    }
    at[*sink].take().unwrap_or_else(SymbolicSummary::abstain)
}

fn transfer(props: &Properties, mut upstream: Vec<SymbolicSummary>) -> SymbolicSummary {
    let exact = |projected: Vec<String>, sorted_by: Vec<String>| SymbolicSummary { projected, sorted_by, confidence: Confidence::Exact };
    match props {
        Properties::Source(s) => exact(s.schema.names(), Vec::new()),
        Properties::Sink | Properties::Filter(_) | Properties::Replicate(_) | Properties::Union => upstream.swap_remove(0),
        Properties::Project(p) => {
            let input = upstream.swap_remove(0);
            let sorted_by = input.sorted_by.into_iter().take_while(|k| p.columns.contains(&key_column(k))).collect();
            exact(p.columns.clone(), sorted_by)
        }
        Properties::Sort(s) => {
            let input = upstream.swap_remove(0);
            let keys = s.keys.iter().map(|k| if k.descending { format!("{} desc", k.column) } else { k.column.clone() }).collect();
            exact(input.projected, keys)
        }
        Properties::Join(_) | Properties::LeftOuterJoin(_) => {
            let right = upstream.pop().expect("two inputs");
            let left = upstream.pop().expect("two inputs");
            exact([left.projected, right.projected].concat(), Vec::new())
        }
        Properties::Aggregate(a) => {
            let mut cols = a.group_by.clone();
            cols.extend(a.aggregates.iter().map(|s| s.alias.clone()));
            exact(cols, Vec::new())
        }
        Properties::Unnest(_) | Properties::Udf(_) | Properties::Classifier(_) | Properties::DictionaryMatcher(_) => {
            SymbolicSummary::abstain()
        }
    }
}

fn key_column(key: &str) -> String {
    key.strip_suffix(" desc").unwrap_or(key).to_string()
}

/// Compares the summaries of two versions. A difference is only a
/// candidate refutation; the caller confirms it on concrete inputs.
/// Sort order counts only under ordered-bag semantics and only when both
/// versions sort; an unsorted output has no defined order.
pub fn quick_inequivalence(p: &Workflow, q: &Workflow, semantics: TableSemantics) -> Option<SymbolicDifference> {
    let (sp, sq) = (summarize_version(p), summarize_version(q));
    if !sp.is_exact() || !sq.is_exact() {
        return None;
    }
    let field = if sp.projected != sq.projected {
        SummaryField::Projected
    } else if semantics == TableSemantics::OrderedBag
        && !sp.sorted_by.is_empty()
        && !sq.sorted_by.is_empty()
        && sp.sorted_by != sq.sorted_by
    {
        SummaryField::SortedBy
    } else {
        return None;
    };
    Some(SymbolicDifference { field, p: sp, q: sq })
}
