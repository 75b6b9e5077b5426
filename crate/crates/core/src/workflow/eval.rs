//! Reference interpreter for executable workflows.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::value::{Row, Table, TableSemantics, Value};
use super::{AggFunc, AggregateProps, JoinProps, OpId, Properties, Schema, Workflow, WorkflowError};

/// Order in which a Replicate emits rows on its non-primary out-ports.
/// Only observable under ordered-bag semantics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplicateOrder {
    #[default]
    Preserve,
    Reverse,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub semantics: TableSemantics,
    pub replicate_order: ReplicateOrder,
    /// Evaluate in an alternative topological order.
    pub reverse_ties: bool,
}

impl EvalOptions {
    pub fn new(semantics: TableSemantics) -> Self {
        EvalOptions { semantics, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("operator `{0}` is not executable")]
    NotExecutable(OpId),
    #[error("type error at `{op}`: {message}")]
    Type { op: OpId, message: String },
    #[error("no input table for source `{0}`")]
    MissingInput(String),
    #[error("input table for `{0}` does not match the source schema")]
    InputMismatch(String),
    #[error("in-port {port} of `{op}` is not connected")]
    Unconnected { op: OpId, port: u32 },
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
}

/// Executes `w` over `inputs` (keyed by source table name) and returns the
/// table received by every Sink, keyed by sink id.
pub fn evaluate(
    w: &Workflow,
    inputs: &BTreeMap<String, Table>,
    opts: &EvalOptions,
) -> Result<BTreeMap<OpId, Table>, ExecError> {
    let order = w.topo_order_with(opts.reverse_ties)?;
    let mut produced: Vec<Option<Vec<Table>>> = vec![None; w.len()];
    let mut sinks = BTreeMap::new();
    for idx in order {
        let op = w.op(idx);
        let mut args = Vec::new();
        for port in 0..op.properties.in_ports() {
            let (f, out) = w.feeder(idx, port).ok_or_else(|| ExecError::Unconnected { op: op.id.clone(), port })?;
            let table = produced[f].as_ref().and_then(|t| t.get(out as usize)).expect("topological order");
            args.push(table);
        }
        let type_err = |message: String| ExecError::Type { op: op.id.clone(), message };
        let mut out = match &op.properties {
            Properties::Source(s) => {
                let t = inputs.get(&s.table).ok_or_else(|| ExecError::MissingInput(s.table.clone()))?;
                if t.schema.names() != s.schema.names() || t.rows.iter().any(|r| r.len() != s.schema.len()) {
                    return Err(ExecError::InputMismatch(s.table.clone()));
                }
                Table { schema: s.schema.clone(), rows: t.rows.clone() }
            }
            Properties::Sink => args[0].clone(),
            Properties::Filter(f) => {
                let t = args[0];
                let mut rows = Vec::new();
                for r in &t.rows {
                    if f.predicate.eval(r, &t.schema).map_err(|e| type_err(e.to_string()))? == Some(true) {
                        rows.push(r.clone());
                    }
                }
                Table { schema: t.schema.clone(), rows }
            }
            Properties::Project(p) => {
                let t = args[0];
                let idxs: Vec<usize> = p
                    .columns
                    .iter()
                    .map(|c| t.schema.index_of(c).ok_or_else(|| type_err(format!("unknown column `{c}`"))))
                    .collect::<Result<_, _>>()?;
                Table {
                    schema: Schema::new(idxs.iter().map(|&i| t.schema.columns[i].clone()).collect()),
                    rows: t.rows.iter().map(|r| idxs.iter().map(|&i| r[i].clone()).collect()).collect(),
                }
            }
            Properties::Join(j) => join(args[0], args[1], j, false).map_err(type_err)?,
            Properties::LeftOuterJoin(j) => join(args[0], args[1], j, true).map_err(type_err)?,
            Properties::Aggregate(a) => aggregate(args[0], a).map_err(type_err)?,
            Properties::Union => {
                let mut rows = args[0].rows.clone();
                rows.extend(args[1].rows.iter().cloned());
                Table { schema: args[0].schema.clone(), rows }
            }
            Properties::Replicate(r) => {
                let t = args[0];
                let mut outs = Vec::with_capacity(r.outputs as usize);
                for port in 0..r.outputs {
                    let mut copy = t.clone();
                    if port > 0 && opts.replicate_order == ReplicateOrder::Reverse {
                        copy.rows.reverse();
                    }
                    if opts.semantics == TableSemantics::Set {
                        copy.dedup();
                    }
                    outs.push(copy);
                }
                produced[idx] = Some(outs);
                continue;
            }
            Properties::Sort(s) => {
                let t = args[0];
                let keys: Vec<(usize, bool)> = s
                    .keys
                    .iter()
                    .map(|k| t.schema.index_of(&k.column).map(|i| (i, k.descending)))
                    .collect::<Option<_>>()
                    .ok_or_else(|| type_err("unknown sort column".into()))?;
                let mut rows = t.rows.clone();
                rows.sort_by(|a, b| {
                    keys.iter()
                        .map(|&(i, desc)| {
                            let o = a[i].sort_cmp(&b[i]);
                            if desc { o.reverse() } else { o }
                        })
                        .find(|o| *o != Ordering::Equal)
                        .unwrap_or(Ordering::Equal)
                });
                Table { schema: t.schema.clone(), rows }
            }
            Properties::Unnest(u) => {
                let t = args[0];
                let i = t.schema.index_of(&u.column).ok_or_else(|| type_err(format!("unknown column `{}`", u.column)))?;
                let mut rows = Vec::new();
                for r in &t.rows {
                    match &r[i] {
                        Value::Null => {}
                        Value::Str(s) => {
                            let pieces: Vec<&str> = if u.delimiter.is_empty() { vec![s.as_str()] } else { s.split(u.delimiter.as_str()).collect() };
                            for piece in pieces {
                                let mut row = r.clone();
                                row[i] = Value::Str(piece.to_string());
                                rows.push(row);
                            }
                        }
                        other => return Err(type_err(format!("cannot unnest {other}"))),
                    }
                }
                Table { schema: t.schema.clone(), rows }
            }
            Properties::Udf(_) | Properties::Classifier(_) | Properties::DictionaryMatcher(_) => {
                return Err(ExecError::NotExecutable(op.id.clone()))
            }
        };
        if opts.semantics == TableSemantics::Set {
            out.dedup();
        }
        if matches!(op.properties, Properties::Sink) {
            sinks.insert(op.id.clone(), out.clone());
        }
        produced[idx] = Some(vec![out]);
    }
    Ok(sinks)
}

/// Executes a completed sub-DAG with default options under `semantics`.
pub fn evaluate_subdag(
    w: &Workflow,
    inputs: &BTreeMap<String, Table>,
    semantics: TableSemantics,
) -> Result<BTreeMap<OpId, Table>, ExecError> {
    evaluate(w, inputs, &EvalOptions::new(semantics))
}

fn join(left: &Table, right: &Table, j: &JoinProps, outer: bool) -> Result<Table, String> {
    let keys: Vec<(usize, usize)> = j
        .keys
        .iter()
        .map(|k| match (left.schema.index_of(&k.left), right.schema.index_of(&k.right)) {
            (Some(l), Some(r)) => Ok((l, r)),
            _ => Err(format!("unknown join key {} = {}", k.left, k.right)),
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for l in &left.rows {
        let mut matched = false;
        for r in &right.rows {
            let mut all = true;
            for &(li, ri) in &keys {
                if l[li].sql_cmp(&r[ri])? != Some(Ordering::Equal) {
                    all = false;
                    break;
                }
            }
            if all {
                matched = true;
                rows.push(l.iter().chain(r.iter()).cloned().collect());
            }
        }
        if outer && !matched {
            let mut row = l.clone();
            row.extend(std::iter::repeat_n(Value::Null, right.schema.len()));
            rows.push(row);
        }
    }
    Ok(Table { schema: left.schema.concat(&right.schema), rows })
}

fn aggregate(t: &Table, a: &AggregateProps) -> Result<Table, String> {
    let schema = super::output_schema(&Properties::Aggregate(a.clone()), &[Some(t.schema.clone())])?
        .expect("input schema known");
    let group_idx: Vec<usize> = a.group_by.iter().map(|g| t.schema.index_of(g).unwrap()).collect();
    let mut groups: Vec<(Row, Vec<&Row>)> = Vec::new();
    let mut position: HashMap<Row, usize> = HashMap::new();
    for r in &t.rows {
        let key: Row = group_idx.iter().map(|&i| r[i].clone()).collect();
        let slot = *position.entry(key.clone()).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(r);
    }
    if groups.is_empty() && a.group_by.is_empty() {
        groups.push((Vec::new(), Vec::new()));
    }
    let mut rows = Vec::with_capacity(groups.len());
    for (key, members) in groups {
        let mut row = key;
        for spec in &a.aggregates {
            let col = spec.column.as_ref().map(|c| t.schema.index_of(c).unwrap());
            let values: Vec<&Value> = match col {
                Some(i) => members.iter().map(|r| &r[i]).filter(|v| !v.is_null()).collect(),
                None => Vec::new(),
            };
            let v = match spec.func {
                AggFunc::Count => Value::Int(if col.is_some() { values.len() } else { members.len() } as i64),
                AggFunc::Min => values.iter().min_by(|a, b| a.sort_cmp(b)).map(|v| (*v).clone()).unwrap_or(Value::Null),
                AggFunc::Max => values.iter().max_by(|a, b| a.sort_cmp(b)).map(|v| (*v).clone()).unwrap_or(Value::Null),
                AggFunc::Sum => sum(&values)?,
                AggFunc::Avg => match (sum(&values)?).as_f64() {
                    Some(s) => Value::Float(s / values.len() as f64),
                    None => Value::Null,
                },
            };
            row.push(v);
        }
        rows.push(row);
    }
    Ok(Table { schema, rows })
}

fn sum(values: &[&Value]) -> Result<Value, String> {
    if values.is_empty() {
        return Ok(Value::Null);
    }
    if values.iter().all(|v| matches!(v, Value::Int(_))) {
        let mut acc: i64 = 0;
        for v in values {
            if let Value::Int(i) = v {
                acc = acc.checked_add(*i).ok_or("integer overflow in sum")?;
            }
        }
        return Ok(Value::Int(acc));
    }
    let mut acc = 0.0;
    for v in values {
        acc += v.as_f64().ok_or_else(|| format!("cannot sum {v}"))?;
    }
    Ok(Value::Float(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workflow::{col, AggregateSpec, Link, OpaqueProps, Operator};

    fn pipeline(mid: Vec<Operator>, schema: Schema) -> Workflow {
        let mut ops = vec![Operator::new("src", Properties::source("t", schema)), Operator::new("k", Properties::Sink)];
        let mut links = Vec::new();
        let mut prev = "src".to_string();
        for op in &mid {
            links.push(Link::simple(prev.as_str(), op.id.clone()));
            prev = op.id.to_string();
        }
        links.push(Link::simple(prev.as_str(), "k"));
        ops.extend(mid);
        Workflow::new("w", TableSemantics::Bag, ops, links).unwrap()
    }

    fn ages(vals: &[i64]) -> BTreeMap<String, Table> {
        let t = Table::new(Schema::ints(&["age"]), vals.iter().map(|v| vec![Value::Int(*v)]).collect()).unwrap();
        BTreeMap::from([("t".to_string(), t)])
    }

    fn run(w: &Workflow, inputs: &BTreeMap<String, Table>, s: TableSemantics) -> Table {
        evaluate_subdag(w, inputs, s).unwrap().remove(&OpId::from("k")).unwrap()
    }

    #[test]
    fn filter_keeps_matching_rows() {
        let w = pipeline(vec![Operator::new("f", Properties::filter(col("age").gt(24)))], Schema::ints(&["age"]));
        let out = run(&w, &ages(&[20, 30]), TableSemantics::Bag);
        assert_eq!(out.rows, vec![vec![Value::Int(30)]]);
    }

    #[test]
    fn empty_project_is_identity() {
        let w = pipeline(vec![Operator::new("p", Properties::project(&["age"]))], Schema::ints(&["age"]));
        let inputs = ages(&[3, 1, 3]);
        assert_eq!(run(&w, &inputs, TableSemantics::OrderedBag), inputs["t"]);
    }

    #[test]
    fn count_by_group() {
        let agg = Properties::aggregate(&["age"], vec![AggregateSpec { func: AggFunc::Count, column: None, alias: "n".into() }]);
        let w = pipeline(vec![Operator::new("a", agg)], Schema::ints(&["age"]));
        let out = run(&w, &ages(&[25, 25, 30]), TableSemantics::Bag);
        assert_eq!(out.rows, vec![vec![Value::Int(25), Value::Int(2)], vec![Value::Int(30), Value::Int(1)]]);
        let set = run(&w, &ages(&[25, 25, 30]), TableSemantics::Set);
        assert_eq!(set.rows[0], vec![Value::Int(25), Value::Int(1)]);
    }

    #[test]
    fn global_aggregate_on_empty_input() {
        let agg = Properties::aggregate(
            &[],
            vec![
                AggregateSpec { func: AggFunc::Count, column: None, alias: "n".into() },
                AggregateSpec { func: AggFunc::Sum, column: Some("age".into()), alias: "s".into() },
            ],
        );
        let w = pipeline(vec![Operator::new("a", agg)], Schema::ints(&["age"]));
        let out = run(&w, &ages(&[]), TableSemantics::Bag);
        assert_eq!(out.rows, vec![vec![Value::Int(0), Value::Null]]);
    }

    #[test]
    fn outer_join_pads_with_nulls() {
        let w = Workflow::new(
            "w",
            TableSemantics::Bag,
            vec![
                Operator::new("l", Properties::source("l", Schema::ints(&["a"]))),
                Operator::new("r", Properties::source("r", Schema::ints(&["b"]))),
                Operator::new("j", Properties::left_outer_join(&[("a", "b")])),
                Operator::new("k", Properties::Sink),
            ],
            vec![Link::new("l", 0, "j", 0), Link::new("r", 0, "j", 1), Link::simple("j", "k")],
        )
        .unwrap();
        let inputs = BTreeMap::from([
            ("l".to_string(), Table::new(Schema::ints(&["a"]), vec![vec![1.into()], vec![Value::Null]]).unwrap()),
            ("r".to_string(), Table::new(Schema::ints(&["b"]), vec![vec![1.into()], vec![Value::Null]]).unwrap()),
        ]);
        let out = run(&w, &inputs, TableSemantics::Bag);
        assert_eq!(out.rows, vec![vec![1.into(), 1.into()], vec![Value::Null, Value::Null]]);
    }

    #[test]
    fn opaque_operator_is_not_executable() {
        let udf = Properties::Udf(OpaqueProps { token: "x".into(), inputs: 1, schema: Some(Schema::ints(&["age"])) });
        let w = pipeline(vec![Operator::new("u", udf)], Schema::ints(&["age"]));
        assert_eq!(evaluate_subdag(&w, &ages(&[1]), TableSemantics::Set).unwrap_err(), ExecError::NotExecutable("u".into()));
    }

    #[test]
    fn sort_orders_nulls_first() {
        let w = pipeline(vec![Operator::new("s", Properties::sort(&[("age", false)]))], Schema::ints(&["age"]));
        let t = Table::new(Schema::ints(&["age"]), vec![vec![3.into()], vec![Value::Null], vec![1.into()]]).unwrap();
        let out = run(&w, &BTreeMap::from([("t".to_string(), t)]), TableSemantics::OrderedBag);
        assert_eq!(out.rows, vec![vec![Value::Null], vec![1.into()], vec![3.into()]]);
    }
}
