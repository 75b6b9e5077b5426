//! Schema propagation along links.

use std::collections::HashSet;

use super::value::{Column, ColumnType, Schema};
use super::{AggFunc, Properties, Workflow};

/// Output schema per operator (all out-ports of an operator share it; for
/// a Sink it is the schema of the result it receives). `None` means the
/// schema could not be derived, e.g. below an opaque operator without a
/// declared schema.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaMap {
    outputs: Vec<Option<Schema>>,
    pub errors: Vec<(usize, String)>,
}

impl SchemaMap {
    pub fn output(&self, op: usize) -> Option<&Schema> {
        self.outputs.get(op).and_then(Option::as_ref)
    }

    /// Schemas arriving at each in-port of `op`.
    pub fn inputs(&self, w: &Workflow, op: usize) -> Vec<Option<Schema>> {
        (0..w.op(op).properties.in_ports())
            .map(|p| w.feeder(op, p).and_then(|(f, _)| self.output(f).cloned()))
            .collect()
    }
}

/// Derives the output schema of an operator from its input schemas.
pub fn output_schema(props: &Properties, inputs: &[Option<Schema>]) -> Result<Option<Schema>, String> {
    if let Properties::Source(s) = props {
        return Ok(Some(s.schema.clone()));
    }
    if let Some(o) = props.opaque() {
        return Ok(o.schema.clone());
    }
    if inputs.len() < props.in_ports() as usize || inputs.iter().any(Option::is_none) {
        return Ok(None);
    }
    let inputs: Vec<&Schema> = inputs.iter().map(|s| s.as_ref().unwrap()).collect();
    let input = inputs[0];
    let need = |s: &Schema, c: &str| -> Result<ColumnType, String> {
        s.column(c).map(|c| c.ty).ok_or_else(|| format!("unknown column `{c}`"))
    };
    let out = match props {
        Properties::Sink | Properties::Replicate(_) => input.clone(),
        Properties::Filter(f) => {
            f.predicate.check(input).map_err(|e| e.to_string())?;
            input.clone()
        }
        Properties::Project(p) => {
            let mut seen = HashSet::new();
            let mut cols = Vec::with_capacity(p.columns.len());
            for c in &p.columns {
                if !seen.insert(c) {
                    return Err(format!("column `{c}` projected twice"));
                }
                cols.push(Column::new(c.clone(), need(input, c)?));
            }
            Schema::new(cols)
        }
        Properties::Join(j) | Properties::LeftOuterJoin(j) => {
            let right = inputs[1];
            if let Some(c) = input.columns.iter().find(|c| right.index_of(&c.name).is_some()) {
                return Err(format!("join inputs share column `{}`", c.name));
            }
            if j.keys.is_empty() {
                return Err("join without keys".into());
            }
            for k in &j.keys {
                let (l, r) = (need(input, &k.left)?, need(right, &k.right)?);
                if l != r && !(l.is_numeric() && r.is_numeric()) {
                    return Err(format!("join key type mismatch `{}` vs `{}`", k.left, k.right));
                }
            }
            input.concat(right)
        }
        Properties::Aggregate(a) => {
            let mut cols = Vec::new();
            let mut seen = HashSet::new();
            for g in &a.group_by {
                if !seen.insert(g.clone()) {
                    return Err(format!("duplicate output column `{g}`"));
                }
                cols.push(Column::new(g.clone(), need(input, g)?));
            }
            for spec in &a.aggregates {
                let ty = match (&spec.column, spec.func) {
                    (None, AggFunc::Count) => ColumnType::Int,
                    (None, f) => return Err(format!("{f:?} needs an input column")),
                    (Some(c), f) => {
                        let t = need(input, c)?;
                        match f {
                            AggFunc::Count => ColumnType::Int,
                            AggFunc::Avg if t.is_numeric() => ColumnType::Float,
                            AggFunc::Sum if t.is_numeric() => t,
                            AggFunc::Min | AggFunc::Max => t,
                            _ => return Err(format!("{f:?} over non-numeric column `{c}`")),
                        }
                    }
                };
                if !seen.insert(spec.alias.clone()) {
                    return Err(format!("duplicate output column `{}`", spec.alias));
                }
                cols.push(Column::new(spec.alias.clone(), ty));
            }
            Schema::new(cols)
        }
        Properties::Union => {
            if input != inputs[1] {
                return Err(format!("union inputs differ: {input} vs {}", inputs[1]));
            }
            input.clone()
        }
        Properties::Sort(s) => {
            for k in &s.keys {
                need(input, &k.column)?;
            }
            input.clone()
        }
        Properties::Unnest(u) => {
            if need(input, &u.column)? != ColumnType::Str {
                return Err(format!("unnest column `{}` is not a string", u.column));
            }
            input.clone()
        }
        Properties::Source(_) | Properties::Udf(_) | Properties::Classifier(_) | Properties::DictionaryMatcher(_) => {
            unreachable!("handled above")
        }
    };
    Ok(Some(out))
}

/// Propagates schemas through the workflow in topological order. On a
/// cyclic graph, operators on the cycle get no schema.
pub fn propagate_schemas(w: &Workflow) -> SchemaMap {
    let mut map = SchemaMap { outputs: vec![None; w.len()], errors: Vec::new() };
    let order = w.topo_order().unwrap_or_else(|_| acyclic_prefix(w));
    for idx in order {
        let inputs = map.inputs(w, idx);
        match output_schema(&w.op(idx).properties, &inputs) {
            Ok(s) => map.outputs[idx] = s,
            Err(e) => map.errors.push((idx, e)),
        }
    }
    map
}

/// Operators reachable in topological order when the graph has a cycle.
fn acyclic_prefix(w: &Workflow) -> Vec<usize> {
    let mut indeg: Vec<usize> = (0..w.len()).map(|i| w.predecessors(i).count()).collect();
    let mut ready: Vec<usize> = (0..w.len()).filter(|&i| indeg[i] == 0).collect();
    let mut out = Vec::new();
    while let Some(i) = ready.pop() {
        out.push(i);
        for s in w.successors(i).collect::<Vec<_>>() {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    out
}
