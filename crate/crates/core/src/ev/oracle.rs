//! Execution oracle: runs both sides of a window on small random inputs.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::restrict::{opaque_violations, RuleViolation, WindowSides};
use super::{structural_forms, Counterexample, EvEngine, EvVerdict};
use crate::window::WindowQuery;
use crate::workflow::{evaluate, ColumnType, EvalOptions, Properties, Schema, Table, TableSemantics, Value, Workflow};

pub const DEFAULT_INSTANCES: usize = 32;

const MAX_ROWS: usize = 8;
/// Whole versions stack more filters than windows, so they get larger inputs.
const WHOLE_VERSION_ROWS: usize = 48;

#[derive(Debug, Clone)]
pub struct OracleEngine {
    instances: usize,
    seed: u64,
}

impl OracleEngine {
    pub fn new(instances: usize, seed: u64) -> Self {
        OracleEngine { instances, seed }
    }
}

impl EvEngine for OracleEngine {
    fn violations(&self, sides: &WindowSides<'_>) -> Vec<RuleViolation> {
        opaque_violations(sides)
    }

    fn verify(&self, query: &WindowQuery) -> EvVerdict {
        oracle_verify(query, self.instances, self.seed)
    }
}

/// Constants used by filters, each with its neighbours, grouped by type.
fn boundary_values(ws: &[&Workflow]) -> Vec<Value> {
    let mut out = BTreeSet::new();
    for w in ws {
        for op in w.operators() {
            if let Properties::Filter(f) = &op.properties {
                for c in f.predicate.constants() {
                    match c {
                        Value::Int(k) => {
                            out.extend([k.saturating_sub(1), k, k.saturating_add(1)].map(Value::Int));
                        }
                        Value::Float(x) => {
                            out.extend([x - 1.0, x, x + 1.0].map(Value::Float));
                        }
                        other => {
                            out.insert(other);
                        }
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

struct Domain {
    common: Vec<Value>,
    boundary: Vec<Value>,
}

impl Domain {
    fn new(ty: ColumnType, constants: &[Value]) -> Self {
        let (common, base): (Vec<Value>, Vec<Value>) = match ty {
            ColumnType::Int => (vec![0.into(), 1.into()], (-1..=3).map(|k: i64| k.into()).collect()),
            ColumnType::Float => (vec![0.0.into(), 1.0.into()], [-1.0, 0.0, 0.5, 1.0, 2.5].map(Value::from).to_vec()),
            ColumnType::Str => (vec!["a".into(), "b".into()], vec!["a".into(), "b".into(), "".into(), "a,b".into()]),
            ColumnType::Bool => (vec![true.into(), false.into()], vec![true.into(), false.into()]),
            ColumnType::Null => (vec![Value::Null], vec![Value::Null]),
        };
        let mut boundary = base;
        boundary.extend(constants.iter().filter(|c| c.column_type() == ty || (ty == ColumnType::Float && c.column_type() == ColumnType::Int)).map(|c| match (ty, c) {
            (ColumnType::Float, Value::Int(k)) => Value::Float(*k as f64),
            _ => c.clone(),
        }));
        Domain { common, boundary }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Value {
        let roll: f64 = rng.gen();
        if roll < 0.08 {
            Value::Null
        } else if roll < 0.45 {
            self.common.choose(rng).cloned().unwrap_or(Value::Null)
        } else {
            self.boundary.choose(rng).cloned().unwrap_or(Value::Null)
        }
    }
}

fn random_table(schema: &Schema, constants: &[Value], max_rows: usize, rng: &mut ChaCha8Rng) -> Table {
    let domains: Vec<Domain> = schema.columns.iter().map(|c| Domain::new(c.ty, constants)).collect();
    let rows = if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=max_rows) };
    let rows = (0..rows).map(|_| domains.iter().map(|d| d.sample(rng)).collect()).collect();
    Table::new(schema.clone(), rows).expect("rows match schema")
}

/// Samples `instances` inputs from `seed` and compares every output of the
/// two sides. A mismatch refutes equivalence with a witness; agreement
/// only proves it when both sides are structurally identical.
pub fn oracle_verify(query: &WindowQuery, instances: usize, seed: u64) -> EvVerdict {
    let tables = query.input_tables();
    let constants = boundary_values(&[&query.p.workflow, &query.q.workflow]);
    let semantics = query.semantics;
    let opts = EvalOptions::new(semantics);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let inputs: BTreeMap<String, Table> =
            tables.iter().map(|(name, schema)| (name.clone(), random_table(schema, &constants, MAX_ROWS, &mut rng))).collect();
        let (Ok(p_out), Ok(q_out)) = (evaluate(&query.p.workflow, &inputs, &opts), evaluate(&query.q.workflow, &inputs, &opts))
        else {
            return EvVerdict::unknown();
        };
        for key in query.output_keys() {
            let p = query.p.outputs.get(key).and_then(|s| p_out.get(s));
            let q = query.q.outputs.get(key).and_then(|s| q_out.get(s));
            let (Some(p), Some(q)) = (p, q) else { return EvVerdict::unknown() };
            if !p.same_result(q, semantics) {
                return EvVerdict::refuted(Counterexample {
                    inputs: inputs.clone(),
                    output: key.clone(),
                    p_result: p.clone(),
                    q_result: q.clone(),
                });
            }
        }
    }
    if structural_forms(&query.p.workflow, &query.p.outputs) == structural_forms(&query.q.workflow, &query.q.outputs) {
        EvVerdict::equivalent()
    } else {
        EvVerdict::unknown()
    }
}

/// Samples inputs for two complete versions until their sinks disagree.
pub fn find_counterexample(p: &Workflow, q: &Workflow, semantics: TableSemantics, instances: usize, seed: u64) -> Option<Counterexample> {
    let mut tables: BTreeMap<String, Schema> = BTreeMap::new();
    for w in [p, q] {
        for s in w.sources() {
            if let Properties::Source(src) = &w.op(s).properties {
                tables.entry(src.table.clone()).or_insert_with(|| src.schema.clone());
            }
        }
    }
    let constants = boundary_values(&[p, q]);
    let opts = EvalOptions::new(semantics);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let inputs: BTreeMap<String, Table> =
            tables.iter().map(|(name, schema)| (name.clone(), random_table(schema, &constants, WHOLE_VERSION_ROWS, &mut rng))).collect();
        let (Ok(a), Ok(b)) = (evaluate(p, &inputs, &opts), evaluate(q, &inputs, &opts)) else { return None };
        let (Some((key, x)), Some((_, y))) = (a.iter().next(), b.iter().next()) else { return None };
        if !x.same_result(y, semantics) {
            return Some(Counterexample { inputs, output: key.to_string(), p_result: x.clone(), q_result: y.clone() });
        }
    }
    None
}

/// Runs both full versions on a counterexample's inputs and reports whether
/// their sinks still disagree.
pub fn replay_differs(p: &Workflow, q: &Workflow, inputs: &BTreeMap<String, Table>, semantics: TableSemantics) -> bool {
    let opts = EvalOptions::new(semantics);
    match (evaluate(p, inputs, &opts), evaluate(q, inputs, &opts)) {
        (Ok(a), Ok(b)) => {
            let a: Vec<&Table> = a.values().collect();
            let b: Vec<&Table> = b.values().collect();
            a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| !x.same_result(y, semantics))
        }
        _ => false,
    }
}
