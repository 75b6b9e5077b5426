//! Local rewrites of a workflow: equivalence-preserving rules and
//! semantic edits.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::edit::EditOp;
use crate::workflow::{
    col, propagate_schemas, AggFunc, CmpOp, ColumnType, Expr, Link, OpId, Operator, Predicate, Properties, Value, Workflow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RewriteRule {
    EmptyProject,
    PushFilterPastJoin,
    PushProjectPastFilter,
    PushFilterPastAgg,
    SwapAdjacentFilters,
    FilterSplitMerge,
    TightenFilterConstant,
    ChangeAggFunction,
    AddFilterCondition,
}

impl RewriteRule {
    pub const ALL: [RewriteRule; 9] = [
        RewriteRule::EmptyProject,
        RewriteRule::PushFilterPastJoin,
        RewriteRule::PushProjectPastFilter,
        RewriteRule::PushFilterPastAgg,
        RewriteRule::SwapAdjacentFilters,
        RewriteRule::FilterSplitMerge,
        RewriteRule::TightenFilterConstant,
        RewriteRule::ChangeAggFunction,
        RewriteRule::AddFilterCondition,
    ];

    pub const EQUIVALENT: [RewriteRule; 6] = [
        RewriteRule::EmptyProject,
        RewriteRule::PushFilterPastJoin,
        RewriteRule::PushProjectPastFilter,
        RewriteRule::PushFilterPastAgg,
        RewriteRule::SwapAdjacentFilters,
        RewriteRule::FilterSplitMerge,
    ];

    pub const SEMANTIC: [RewriteRule; 3] =
        [RewriteRule::TightenFilterConstant, RewriteRule::ChangeAggFunction, RewriteRule::AddFilterCondition];

    pub fn name(self) -> &'static str {
        match self {
            RewriteRule::EmptyProject => "emptyProject",
            RewriteRule::PushFilterPastJoin => "pushFilterPastJoin",
            RewriteRule::PushProjectPastFilter => "pushProjectPastFilter",
            RewriteRule::PushFilterPastAgg => "pushFilterPastAgg",
            RewriteRule::SwapAdjacentFilters => "swapAdjacentFilters",
            RewriteRule::FilterSplitMerge => "filterSplitMerge",
            RewriteRule::TightenFilterConstant => "tightenFilterConstant",
            RewriteRule::ChangeAggFunction => "changeAggFunction",
            RewriteRule::AddFilterCondition => "addFilterCondition",
        }
    }

    pub fn preserves_equivalence(self) -> bool {
        !RewriteRule::SEMANTIC.contains(&self)
    }

    /// Operators at which the rule applies.
    pub fn locations(self, w: &Workflow) -> Vec<usize> {
        (0..w.len()).filter(|&i| self.site(w, i).is_some()).collect()
    }

    fn site(self, w: &Workflow, at: usize) -> Option<Site> {
        let props = &w.op(at).properties;
        match self {
            RewriteRule::EmptyProject => {
                if matches!(props, Properties::Sink) || w.outgoing(at).len() != 1 {
                    return None;
                }
                let schemas = propagate_schemas(w);
                let columns = schemas.output(at)?.names();
                let out = w.link(w.outgoing(at)[0]).clone();
                Some(Site::Insert { out, columns })
            }
            RewriteRule::PushFilterPastJoin => {
                let Properties::Filter(f) = props else { return None };
                let (join, _) = w.feeder(at, 0)?;
                if !matches!(w.op(join).properties, Properties::Join(_)) || w.outgoing(join).len() != 1 {
                    return None;
                }
                let schemas = propagate_schemas(w);
                let needed = f.predicate.columns();
                let side = (0..2u32).find(|&s| {
                    let Some((x, _)) = w.feeder(join, s) else { return false };
                    schemas.output(x).is_some_and(|sc| needed.iter().all(|c| sc.index_of(c).is_some()))
                })?;
                chain_swap(w, join, at, side)
            }
            RewriteRule::PushProjectPastFilter => {
                let Properties::Project(p) = props else { return None };
                let (filter, _) = w.feeder(at, 0)?;
                let Properties::Filter(f) = &w.op(filter).properties else { return None };
                if !f.predicate.columns().iter().all(|c| p.columns.iter().any(|k| k == c)) {
                    return None;
                }
                chain_swap(w, filter, at, 0)
            }
            RewriteRule::PushFilterPastAgg => {
                let Properties::Filter(f) = props else { return None };
                let (agg, _) = w.feeder(at, 0)?;
                let Properties::Aggregate(a) = &w.op(agg).properties else { return None };
                if !f.predicate.columns().iter().all(|c| a.group_by.iter().any(|g| g == c)) {
                    return None;
                }
                chain_swap(w, agg, at, 0)
            }
            RewriteRule::SwapAdjacentFilters => {
                if !matches!(props, Properties::Filter(_)) {
                    return None;
                }
                let (first, _) = w.feeder(at, 0)?;
                if !matches!(w.op(first).properties, Properties::Filter(_)) {
                    return None;
                }
                chain_swap(w, first, at, 0)
            }
            RewriteRule::FilterSplitMerge => {
                let Properties::Filter(f) = props else { return None };
                if let Predicate::And(parts) = &f.predicate {
                    if parts.len() >= 2 && w.outgoing(at).len() == 1 {
                        return Some(Site::Split { parts: parts.clone(), out: w.link(w.outgoing(at)[0]).clone() });
                    }
                }
                let (up, _) = w.feeder(at, 0)?;
                let Properties::Filter(g) = &w.op(up).properties else { return None };
                if w.outgoing(up).len() != 1 || w.outgoing(at).len() != 1 {
                    return None;
                }
                Some(Site::Merge {
                    upper: up,
                    predicate: g.predicate.clone().and(f.predicate.clone()),
                    out: w.link(w.outgoing(at)[0]).clone(),
                })
            }
            RewriteRule::TightenFilterConstant => {
                let Properties::Filter(f) = props else { return None };
                tighten(&f.predicate, 1).map(|_| Site::Modify)
            }
            RewriteRule::ChangeAggFunction => {
                let Properties::Aggregate(a) = props else { return None };
                a.aggregates.iter().any(|s| s.column.is_some()).then_some(Site::Modify)
            }
            RewriteRule::AddFilterCondition => {
                if !matches!(props, Properties::Filter(_)) {
                    return None;
                }
                let schemas = propagate_schemas(w);
                let input = schemas.output(at)?;
                input.columns.iter().any(|c| c.ty == ColumnType::Int).then_some(Site::Modify)
            }
        }
    }

    /// Edits that apply the rule at `at`, plus the operators they move or
    /// reconfigure.
    pub(crate) fn apply(self, w: &Workflow, at: usize, fresh: &str, rng: &mut ChaCha8Rng) -> Option<Application> {
        let site = self.site(w, at)?;
        let id = w.op(at).id.clone();
        let mut edits = Vec::new();
        let mut core = vec![id.clone()];
        match site {
            Site::Insert { out, columns } => {
                let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
                let new = Operator::new(fresh, Properties::project(&cols));
                edits.push(EditOp::RemoveLink(out.clone()));
                edits.push(EditOp::AddOperator(new));
                edits.push(EditOp::AddLink(Link::new(out.from.op.clone(), out.from.port, fresh, 0)));
                edits.push(EditOp::AddLink(Link::new(fresh, 0, out.to.op.clone(), out.to.port)));
                core.push(OpId::new(fresh));
            }
            Site::Swap { upper, feed, out } => {
                // upper -> at becomes at -> upper, keeping upper's other inputs.
                let up = w.op(upper).id.clone();
                let (x, xport, side) = feed;
                edits.push(EditOp::RemoveLink(Link::new(x.clone(), xport, up.clone(), side)));
                edits.push(EditOp::RemoveLink(Link::new(up.clone(), 0, id.clone(), 0)));
                edits.push(EditOp::RemoveLink(out.clone()));
                edits.push(EditOp::AddLink(Link::new(x, xport, id.clone(), 0)));
                edits.push(EditOp::AddLink(Link::new(id.clone(), 0, up.clone(), side)));
                edits.push(EditOp::AddLink(Link::new(up.clone(), 0, out.to.op.clone(), out.to.port)));
                // A join keeps its place when filters move past it.
                if w.op(upper).properties.in_ports() == 1 {
                    core.push(up);
                }
            }
            Site::Split { parts, out } => {
                let cut = rng.gen_range(1..parts.len());
                let keep = conjunction(parts[..cut].to_vec());
                let rest = conjunction(parts[cut..].to_vec());
                edits.push(EditOp::RemoveLink(out.clone()));
                edits.push(EditOp::ModifyOperator { id: id.clone(), properties: Properties::filter(keep) });
                edits.push(EditOp::AddOperator(Operator::new(fresh, Properties::filter(rest))));
                edits.push(EditOp::AddLink(Link::new(id.clone(), 0, fresh, 0)));
                edits.push(EditOp::AddLink(Link::new(fresh, 0, out.to.op.clone(), out.to.port)));
                core.push(OpId::new(fresh));
            }
            Site::Merge { upper, predicate, out } => {
                let up = w.op(upper).id.clone();
                edits.push(EditOp::RemoveLink(Link::new(up.clone(), 0, id.clone(), 0)));
                edits.push(EditOp::RemoveLink(out.clone()));
                edits.push(EditOp::DeleteOperator(id.clone()));
                edits.push(EditOp::ModifyOperator { id: up.clone(), properties: Properties::filter(predicate) });
                edits.push(EditOp::AddLink(Link::new(up.clone(), 0, out.to.op.clone(), out.to.port)));
                core.push(up);
            }
            Site::Modify => {
                let properties = self.modified(w, at, rng)?;
                edits.push(EditOp::ModifyOperator { id: id.clone(), properties });
            }
        }
        Some(Application { edits, core })
    }

    fn modified(self, w: &Workflow, at: usize, rng: &mut ChaCha8Rng) -> Option<Properties> {
        match (&w.op(at).properties, self) {
            (Properties::Filter(f), RewriteRule::TightenFilterConstant) => {
                tighten(&f.predicate, rng.gen_range(1..=3)).map(Properties::filter)
            }
            (Properties::Filter(f), RewriteRule::AddFilterCondition) => {
                let schemas = propagate_schemas(w);
                let ints: Vec<String> = schemas
                    .output(at)?
                    .columns
                    .iter()
                    .filter(|c| c.ty == ColumnType::Int)
                    .map(|c| c.name.clone())
                    .collect();
                let c = &ints[rng.gen_range(0..ints.len())];
                let k = rng.gen_range(0..8i64);
                Some(Properties::filter(f.predicate.clone().and(col(c).gt(k))))
            }
            (Properties::Aggregate(a), RewriteRule::ChangeAggFunction) => {
                let mut a = a.clone();
                let candidates: Vec<usize> = (0..a.aggregates.len()).filter(|&i| a.aggregates[i].column.is_some()).collect();
                let i = candidates[rng.gen_range(0..candidates.len())];
                a.aggregates[i].func = match a.aggregates[i].func {
                    AggFunc::Sum => AggFunc::Max,
                    AggFunc::Max => AggFunc::Min,
                    AggFunc::Min => AggFunc::Max,
                    AggFunc::Count => AggFunc::Sum,
                    AggFunc::Avg => AggFunc::Max,
                };
                Some(Properties::Aggregate(a))
            }
            _ => None,
        }
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RewriteRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RewriteRule::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Application {
    pub edits: Vec<EditOp>,
    /// Operators whose configuration or position changes.
    pub core: Vec<OpId>,
}

enum Site {
    Insert { out: Link, columns: Vec<String> },
    /// Exchange `upper` with its single consumer; `feed` is what arrives at
    /// `upper` on the in-port being exchanged.
    Swap { upper: usize, feed: (OpId, u32, u32), out: Link },
    Split { parts: Vec<Predicate>, out: Link },
    Merge { upper: usize, predicate: Predicate, out: Link },
    Modify,
}

/// `upper` feeds only `lower` (a single-input operator) and `lower` has one
/// consumer: the two can trade places on in-port `side` of `upper`.
fn chain_swap(w: &Workflow, upper: usize, lower: usize, side: u32) -> Option<Site> {
    if w.outgoing(upper).len() != 1 || w.outgoing(lower).len() != 1 || w.incoming(lower).len() != 1 {
        return None;
    }
    let (x, xport) = w.feeder(upper, side)?;
    Some(Site::Swap {
        upper,
        feed: (w.op(x).id.clone(), xport, side),
        out: w.link(w.outgoing(lower)[0]).clone(),
    })
}

fn conjunction(mut parts: Vec<Predicate>) -> Predicate {
    if parts.len() == 1 {
        parts.pop().expect("one part")
    } else {
        Predicate::And(parts)
    }
}

/// Moves the first integer bound of the predicate inward by `by`.
fn tighten(p: &Predicate, by: i64) -> Option<Predicate> {
    match p {
        Predicate::Cmp { op, lhs, rhs: Expr::Lit(Value::Int(k)) } if lhs.references_column() => {
            let k = match op {
                CmpOp::Gt | CmpOp::Ge => k + by,
                CmpOp::Lt | CmpOp::Le => k - by,
                _ => return None,
            };
            Some(Predicate::Cmp { op: *op, lhs: lhs.clone(), rhs: Expr::Lit(Value::Int(k)) })
        }
        Predicate::And(parts) => {
            let i = parts.iter().position(|q| tighten(q, by).is_some())?;
            let mut parts = parts.clone();
            parts[i] = tighten(&parts[i], by)?;
            Some(Predicate::And(parts))
        }
        _ => None,
    }
}
