//! Normal forms for select/project/join, outer-join and aggregate queries.
//!
//! Filters are fused into a CNF of sign-normalized linear literals, inner
//! joins are flattened into sorted input sets and identity projections
//! vanish. Two sub-DAGs with equal normal forms at every output are
//! equivalent under set semantics; anything else is Unknown.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::restrict::{spja_violations, RuleViolation, WindowSides};
use super::{EvEngine, EvVerdict};
use crate::window::WindowQuery;
use crate::workflow::{AggregateSpec, CmpOp, Expr, OpId, Predicate, Properties, Value, Workflow};

/// Above this many clauses a predicate is kept as one opaque literal.
const MAX_CLAUSES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LinearOp {
    Eq,
    Ne,
    Lt,
    Le,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Literal {
    /// `Σ coeff·column op rhs`.
    Linear { terms: Vec<(String, i128)>, op: LinearOp, rhs: i128 },
    /// A comparison kept verbatim.
    Raw { text: String, columns: BTreeSet<String> },
}

impl Literal {
    fn columns(&self) -> BTreeSet<&str> {
        match self {
            Literal::Linear { terms, .. } => terms.iter().map(|(c, _)| c.as_str()).collect(),
            Literal::Raw { columns, .. } => columns.iter().map(String::as_str).collect(),
        }
    }
}

pub type Clause = BTreeSet<Literal>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalForm {
    Scan { table: String, columns: Vec<String> },
    Spj { inputs: Vec<CanonicalForm>, predicate: BTreeSet<Clause>, output: Vec<String> },
    Aggregate { input: Box<CanonicalForm>, group_by: Vec<String>, aggregates: Vec<AggregateSpec> },
    OuterJoin { left: Box<CanonicalForm>, right: Box<CanonicalForm>, keys: Vec<(String, String)> },
}

impl CanonicalForm {
    pub fn columns(&self) -> Vec<String> {
        match self {
            CanonicalForm::Scan { columns, .. } => columns.clone(),
            CanonicalForm::Spj { output, .. } => output.clone(),
            CanonicalForm::Aggregate { group_by, aggregates, .. } => {
                group_by.iter().cloned().chain(aggregates.iter().map(|a| a.alias.clone())).collect()
            }
            CanonicalForm::OuterJoin { left, right, .. } => {
                let mut c = left.columns();
                c.extend(right.columns());
                c
            }
        }
    }

    /// Every column name visible inside the form before projection.
    fn scope(&self) -> BTreeSet<String> {
        match self {
            CanonicalForm::Spj { inputs, .. } => inputs.iter().flat_map(|i| i.columns()).collect(),
            other => other.columns().into_iter().collect(),
        }
    }
}

/// Builds the normal form of every sink of `w`. Errors name the first
/// operator outside the supported profile.
pub fn canonicalize_spja(w: &Workflow) -> Result<BTreeMap<OpId, CanonicalForm>, String> {
    let mut memo = BTreeMap::new();
    w.sinks().into_iter().map(|s| Ok((w.op(s).id.clone(), build(w, s, &mut memo)?))).collect()
}

fn build(w: &Workflow, idx: usize, memo: &mut BTreeMap<usize, CanonicalForm>) -> Result<CanonicalForm, String> {
    if let Some(f) = memo.get(&idx) {
        return Ok(f.clone());
    }
    let op = w.op(idx);
    let input = |port: u32, memo: &mut BTreeMap<usize, CanonicalForm>| {
        let (f, _) = w.feeder(idx, port).ok_or_else(|| format!("`{}` has no input {port}", op.id))?;
        build(w, f, memo)
    };
    let form = match &op.properties {
        Properties::Source(s) => CanonicalForm::Scan { table: s.table.clone(), columns: s.schema.names() },
        Properties::Sink => input(0, memo)?,
        Properties::Filter(f) => filter_over(input(0, memo)?, to_cnf(&f.predicate)),
        Properties::Project(p) => spj(vec![input(0, memo)?], BTreeSet::new(), p.columns.clone()),
        Properties::Join(j) => {
            let (l, r) = (input(0, memo)?, input(1, memo)?);
            let predicate = j
                .keys
                .iter()
                .filter_map(|k| literal(CmpOp::Eq, &Expr::Col(k.left.clone()), &Expr::Col(k.right.clone())).ok())
                .map(|l| BTreeSet::from([l]))
                .collect();
            let mut output = l.columns();
            output.extend(r.columns());
            spj(vec![l, r], predicate, output)
        }
        Properties::LeftOuterJoin(j) => CanonicalForm::OuterJoin {
            left: Box::new(input(0, memo)?),
            right: Box::new(input(1, memo)?),
            keys: j.keys.iter().map(|k| (k.left.clone(), k.right.clone())).collect(),
        },
        Properties::Aggregate(a) => CanonicalForm::Aggregate {
            input: Box::new(input(0, memo)?),
            group_by: a.group_by.clone(),
            aggregates: a.aggregates.clone(),
        },
        _ => return Err(format!("{} `{}` is outside the supported profile", op.kind(), op.id)),
    };
    memo.insert(idx, form.clone());
    Ok(form)
}

/// Applies a filter, moving clauses over grouping keys below an aggregate.
fn filter_over(input: CanonicalForm, cnf: BTreeSet<Clause>) -> CanonicalForm {
    let input = match input {
        CanonicalForm::Aggregate { input: inner, group_by, aggregates } if !group_by.is_empty() => {
            let keys: BTreeSet<&str> = group_by.iter().map(String::as_str).collect();
            let (pushed, kept): (BTreeSet<Clause>, BTreeSet<Clause>) = cnf.into_iter().partition(|c| {
                let cols: BTreeSet<&str> = c.iter().flat_map(|l| l.columns()).collect();
                !cols.is_empty() && cols.is_subset(&keys)
            });
            let inner = if pushed.is_empty() {
                *inner
            } else {
                let cols = inner.columns();
                spj(vec![*inner], pushed, cols)
            };
            let agg = CanonicalForm::Aggregate { input: Box::new(inner), group_by, aggregates };
            let cols = agg.columns();
            return spj(vec![agg], kept, cols);
        }
        other => other,
    };
    let cols = input.columns();
    spj(vec![input], cnf, cols)
}

fn spj(inputs: Vec<CanonicalForm>, mut predicate: BTreeSet<Clause>, output: Vec<String>) -> CanonicalForm {
    let scopes: Vec<BTreeSet<String>> = inputs.iter().map(CanonicalForm::scope).collect();
    let mut flat = Vec::new();
    for (i, input) in inputs.into_iter().enumerate() {
        match input {
            CanonicalForm::Spj { inputs: inner, predicate: p, output: inner_out } => {
                let visible: BTreeSet<&String> = inner_out.iter().collect();
                let clash = scopes[i].iter().filter(|c| !visible.contains(c)).any(|hidden| {
                    scopes.iter().enumerate().any(|(j, s)| j != i && s.contains(hidden))
                });
                if clash {
                    flat.push(CanonicalForm::Spj { inputs: inner, predicate: p, output: inner_out });
                } else {
                    flat.extend(inner);
                    predicate.extend(p);
                }
            }
            other => flat.push(other),
        }
    }
    flat.sort();
    let predicate = simplify(predicate);
    if flat.len() == 1 && predicate.is_empty() && flat[0].columns() == output {
        return flat.pop().expect("one input");
    }
    CanonicalForm::Spj { inputs: flat, predicate, output }
}

/// Drops subsumed single-literal upper bounds and collapses contradictions.
fn simplify(cnf: BTreeSet<Clause>) -> BTreeSet<Clause> {
    if cnf.iter().any(|c| c.is_empty()) {
        return BTreeSet::from([Clause::new()]);
    }
    let mut tightest: BTreeMap<Vec<(String, i128)>, (i128, LinearOp)> = BTreeMap::new();
    let mut out = BTreeSet::new();
    for clause in cnf {
        if clause.len() == 1 {
            if let Some(Literal::Linear { terms, op: op @ (LinearOp::Lt | LinearOp::Le), rhs }) = clause.first() {
                let entry = tightest.entry(terms.clone()).or_insert((*rhs, *op));
                let tighter = (*rhs, *op != LinearOp::Lt) < (entry.0, entry.1 != LinearOp::Lt);
                if tighter {
                    *entry = (*rhs, *op);
                }
                continue;
            }
        }
        out.insert(clause);
    }
    for (terms, (rhs, op)) in tightest {
        out.insert(BTreeSet::from([Literal::Linear { terms, op, rhs }]));
    }
    out
}

fn nnf(p: &Predicate, negate: bool) -> Predicate {
    match p {
        Predicate::Cmp { op, lhs, rhs } => {
            Predicate::Cmp { op: if negate { op.negated() } else { *op }, lhs: lhs.clone(), rhs: rhs.clone() }
        }
        Predicate::And(ps) if negate => Predicate::Or(ps.iter().map(|x| nnf(x, true)).collect()),
        Predicate::Or(ps) if negate => Predicate::And(ps.iter().map(|x| nnf(x, true)).collect()),
        Predicate::And(ps) => Predicate::And(ps.iter().map(|x| nnf(x, false)).collect()),
        Predicate::Or(ps) => Predicate::Or(ps.iter().map(|x| nnf(x, false)).collect()),
        Predicate::Not(inner) => nnf(inner, !negate),
        Predicate::Const(b) => Predicate::Const(*b != negate),
    }
}

/// CNF of a negation-free predicate; `None` when it grows too large.
fn cnf_of(p: &Predicate) -> Option<BTreeSet<Clause>> {
    match p {
        Predicate::Const(true) => Some(BTreeSet::new()),
        Predicate::Const(false) => Some(BTreeSet::from([Clause::new()])),
        Predicate::Cmp { op, lhs, rhs } => Some(match literal(*op, lhs, rhs) {
            Ok(l) => BTreeSet::from([BTreeSet::from([l])]),
            Err(true) => BTreeSet::new(),
            Err(false) => BTreeSet::from([Clause::new()]),
        }),
        Predicate::And(ps) => {
            let mut out = BTreeSet::new();
            for x in ps {
                out.extend(cnf_of(x)?);
                if out.len() > MAX_CLAUSES {
                    return None;
                }
            }
            Some(out)
        }
        Predicate::Or(ps) => {
            let mut acc: BTreeSet<Clause> = BTreeSet::from([Clause::new()]);
            for x in ps {
                let part = cnf_of(x)?;
                let mut next = BTreeSet::new();
                for a in &acc {
                    for b in &part {
                        next.insert(a.union(b).cloned().collect::<Clause>());
                    }
                }
                if next.len() > MAX_CLAUSES {
                    return None;
                }
                acc = next;
            }
            Some(acc)
        }
        Predicate::Not(_) => None,
    }
}

fn to_cnf(p: &Predicate) -> BTreeSet<Clause> {
    let n = nnf(p, false);
    cnf_of(&n).unwrap_or_else(|| {
        let columns = p.columns().into_iter().map(String::from).collect();
        BTreeSet::from([BTreeSet::from([Literal::Raw { text: n.to_string(), columns }])])
    })
}

type Linear = (BTreeMap<String, i128>, i128);

fn linearize(e: &Expr) -> Option<Linear> {
    Some(match e {
        Expr::Col(c) => (BTreeMap::from([(c.clone(), 1)]), 0),
        Expr::Lit(Value::Int(k)) => (BTreeMap::new(), i128::from(*k)),
        Expr::Lit(_) => return None,
        Expr::Add(a, b) => combine(linearize(a)?, linearize(b)?, 1)?,
        Expr::Sub(a, b) => combine(linearize(a)?, linearize(b)?, -1)?,
        Expr::Neg(a) => scale(linearize(a)?, -1)?,
        Expr::Mul(a, b) => {
            let (la, lb) = (linearize(a)?, linearize(b)?);
            match (la.0.is_empty(), lb.0.is_empty()) {
                (true, _) => scale(lb, la.1)?,
                (_, true) => scale(la, lb.1)?,
                _ => return None,
            }
        }
    })
}

fn scale((terms, k): Linear, by: i128) -> Option<Linear> {
    let mut out = BTreeMap::new();
    for (c, v) in terms {
        out.insert(c, v.checked_mul(by)?);
    }
    Some((out, k.checked_mul(by)?))
}

fn combine(a: Linear, b: Linear, sign: i128) -> Option<Linear> {
    let (mut terms, k) = a;
    for (c, v) in b.0 {
        let e = terms.entry(c).or_insert(0);
        *e = e.checked_add(v.checked_mul(sign)?)?;
    }
    Some((terms, k.checked_add(b.1.checked_mul(sign)?)?))
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// Normalizes `lhs op rhs`. `Err(b)` is a comparison of constants with
/// truth value `b`.
fn literal(op: CmpOp, lhs: &Expr, rhs: &Expr) -> Result<Literal, bool> {
    let raw = || {
        let p = Predicate::Cmp { op, lhs: lhs.clone(), rhs: rhs.clone() };
        let columns = p.columns().into_iter().map(String::from).collect();
        Literal::Raw { text: p.to_string(), columns }
    };
    let mut cols = BTreeSet::new();
    lhs.collect_columns(&mut cols);
    rhs.collect_columns(&mut cols);
    let Some((terms, k)) = linearize(lhs).zip(linearize(rhs)).and_then(|(l, r)| combine(l, r, -1)) else {
        return Ok(raw());
    };
    let terms: BTreeMap<String, i128> = terms.into_iter().filter(|(_, v)| *v != 0).collect();
    if terms.len() != cols.len() {
        if cols.is_empty() {
            return Err(op.holds(k.cmp(&0)));
        }
        return Ok(raw());
    }
    let (mut terms, mut rhs_k): (Vec<(String, i128)>, i128) = (terms.into_iter().collect(), -k);
    let lin_op = match op {
        CmpOp::Eq => LinearOp::Eq,
        CmpOp::Ne => LinearOp::Ne,
        CmpOp::Lt => LinearOp::Lt,
        CmpOp::Le => LinearOp::Le,
        CmpOp::Gt | CmpOp::Ge => {
            for t in &mut terms {
                t.1 = -t.1;
            }
            rhs_k = -rhs_k;
            if op == CmpOp::Gt { LinearOp::Lt } else { LinearOp::Le }
        }
    };
    if matches!(lin_op, LinearOp::Eq | LinearOp::Ne) && terms[0].1 < 0 {
        for t in &mut terms {
            t.1 = -t.1;
        }
        rhs_k = -rhs_k;
    }
    let g = terms.iter().fold(0, |g, t| gcd(g, t.1));
    if g > 1 && rhs_k % g == 0 {
        for t in &mut terms {
            t.1 /= g;
        }
        rhs_k /= g;
    }
    Ok(Literal::Linear { terms, op: lin_op, rhs: rhs_k })
}

/// Engine of the canonical verifiers.
#[derive(Debug, Clone)]
pub struct CanonicalEngine {
    count_rules: bool,
}

impl CanonicalEngine {
    pub fn strict() -> Self {
        CanonicalEngine { count_rules: true }
    }

    pub fn relaxed() -> Self {
        CanonicalEngine { count_rules: false }
    }
}

impl EvEngine for CanonicalEngine {
    fn violations(&self, sides: &WindowSides<'_>) -> Vec<RuleViolation> {
        spja_violations(sides, self.count_rules)
    }

    fn verify(&self, query: &WindowQuery) -> EvVerdict {
        let (Ok(p), Ok(q)) = (canonicalize_spja(&query.p.workflow), canonicalize_spja(&query.q.workflow)) else {
            return EvVerdict::unknown();
        };
        for key in query.output_keys() {
            let pf = query.p.outputs.get(key).and_then(|s| p.get(s));
            let qf = query.q.outputs.get(key).and_then(|s| q.get(s));
            match (pf, qf) {
                (Some(a), Some(b)) if a == b => {}
                _ => return EvVerdict::unknown(),
            }
        }
        EvVerdict::equivalent()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workflow::{col, Link, Operator, Schema, TableSemantics};

    fn chain(props: Vec<Properties>) -> Workflow {
        let mut ops = vec![Operator::new("s", Properties::source("t", Schema::ints(&["a", "b"])))];
        let mut links = Vec::new();
        let mut prev = "s".to_string();
        for (i, p) in props.into_iter().enumerate() {
            let id = format!("o{i}");
            ops.push(Operator::new(id.as_str(), p));
            links.push(Link::simple(prev.as_str(), id.as_str()));
            prev = id;
        }
        ops.push(Operator::new("k", Properties::Sink));
        links.push(Link::simple(prev.as_str(), "k"));
        Workflow::new("w", TableSemantics::Set, ops, links).unwrap()
    }

    fn form(w: &Workflow) -> CanonicalForm {
        canonicalize_spja(w).unwrap().into_values().next().unwrap()
    }

    #[test]
    fn filters_fuse() {
        let two = chain(vec![Properties::filter(col("a").gt(1)), Properties::filter(col("b").lt(2))]);
        let one = chain(vec![Properties::filter(col("a").gt(1).and(col("b").lt(2)))]);
        assert_eq!(form(&two), form(&one));
        match form(&one) {
            CanonicalForm::Spj { predicate, .. } => assert_eq!(predicate.len(), 2),
            f => panic!("{f:?}"),
        }
    }

    #[test]
    fn identity_project_vanishes() {
        let with = chain(vec![Properties::project(&["a", "b"]), Properties::filter(col("a").gt(1))]);
        let without = chain(vec![Properties::filter(col("a").gt(1))]);
        assert_eq!(form(&with), form(&without));
        let reorder = chain(vec![Properties::project(&["b", "a"])]);
        assert_ne!(form(&reorder), form(&chain(vec![])));
    }

    #[test]
    fn linear_literals_normalize() {
        let a = chain(vec![Properties::filter(col("a").add(crate::workflow::lit(1)).gt(3))]);
        let b = chain(vec![Properties::filter(crate::workflow::lit(2).lt(col("a")))]);
        assert_eq!(form(&a), form(&b));
        let c = chain(vec![Properties::filter(col("a").gt(3))]);
        assert_ne!(form(&a), form(&c));
    }

    #[test]
    fn tighter_bound_subsumes() {
        let a = chain(vec![Properties::filter(col("a").gt(5)), Properties::filter(col("a").gt(7))]);
        let b = chain(vec![Properties::filter(col("a").gt(7))]);
        assert_eq!(form(&a), form(&b));
    }

    #[test]
    fn negation_is_pushed_into_comparisons() {
        let a = chain(vec![Properties::filter(col("a").lt(3).not())]);
        let b = chain(vec![Properties::filter(col("a").ge(3))]);
        assert_eq!(form(&a), form(&b));
    }

    #[test]
    fn self_cancelling_terms_stay_raw() {
        let a = chain(vec![Properties::filter(col("a").sub(col("a")).eq(0))]);
        match form(&a) {
            CanonicalForm::Spj { predicate, .. } => {
                assert!(matches!(predicate.first().unwrap().first().unwrap(), Literal::Raw { .. }))
            }
            f => panic!("{f:?}"),
        }
    }

    #[test]
    fn sort_is_unsupported() {
        assert!(canonicalize_spja(&chain(vec![Properties::sort(&[("a", false)])])).is_err());
    }
}
