//! Completion of both sides of a window with shared boundary keys.

use std::collections::{BTreeMap, BTreeSet};

use super::{VersionPair, Window};
use crate::workflow::{
    complete_with_schemas, subdag_from_indices, BoundaryError, BoundaryKeys, Completed, OpId, Schema, TableSemantics,
};

/// Prefix of the tables read by virtual sources.
pub const VIRTUAL_PREFIX: &str = "@";

/// Both sides of a window as stand-alone workflows whose boundary tables
/// and outputs are named alike.
#[derive(Debug, Clone)]
pub struct WindowQuery {
    pub p: Completed,
    pub q: Completed,
    pub semantics: TableSemantics,
}

impl WindowQuery {
    /// Every output key of either side.
    pub fn output_keys(&self) -> BTreeSet<&String> {
        self.p.outputs.keys().chain(self.q.outputs.keys()).collect()
    }

    /// Input tables of either side with their schemas.
    pub fn input_tables(&self) -> BTreeMap<String, Schema> {
        let mut out = self.q.inputs.clone();
        out.extend(self.p.inputs.iter().map(|(k, v)| (k.clone(), v.clone())));
        for w in [&self.p.workflow, &self.q.workflow] {
            for &s in &w.sources() {
                if let crate::workflow::Properties::Source(src) = &w.op(s).properties {
                    out.entry(src.table.clone()).or_insert_with(|| src.schema.clone());
                }
            }
        }
        out
    }
}

/// Names boundary data by the P operator producing it.
struct SideKeys<'a> {
    pair: &'a VersionPair,
    is_p: bool,
}

impl SideKeys<'_> {
    fn p_id(&self, producer: &OpId) -> Option<OpId> {
        if self.is_p {
            self.pair.mapping().get(producer.as_str()).map(|_| producer.clone())
        } else {
            self.pair.mapping().preimage(producer.as_str()).cloned()
        }
    }
}

impl BoundaryKeys for SideKeys<'_> {
    fn input_key(&self, producer: &OpId, port: u32) -> Option<String> {
        self.p_id(producer).map(|id| format!("{VIRTUAL_PREFIX}{id}.{port}"))
    }

    fn output_key(&self, producer: &OpId, port: u32) -> Option<String> {
        self.input_key(producer, port)
    }

    fn sink_key(&self, sink: &OpId) -> Option<String> {
        self.p_id(sink).map(|id| id.to_string())
    }
}

impl VersionPair {
    /// Member ports of one side that feed operators outside the window,
    /// keyed by the P id of the producer.
    fn crossing_outputs(&self, w: &Window, is_p: bool) -> Result<BTreeMap<(OpId, u32), OpId>, BoundaryError> {
        let (wf, members) = if is_p { (self.p(), self.p_members(w)) } else { (self.q(), self.q_members(w)) };
        let keys = SideKeys { pair: self, is_p };
        let mut out = BTreeMap::new();
        for &m in &members {
            for &l in wf.outgoing(m) {
                let link = wf.link(l);
                let to = wf.index_of(link.to.op.as_str()).expect("link target");
                if !members.contains(&to) {
                    let key = keys.p_id(&link.from.op).ok_or_else(|| BoundaryError::Unpairable(link.from.op.clone()))?;
                    out.insert((key, link.from.port), link.from.op.clone());
                }
            }
        }
        Ok(out)
    }

    /// Completes both sides of `w`. Data crossing the boundary is keyed by
    /// its P producer and port; when a producer has no counterpart the
    /// window cannot be compared and `Unpairable` is returned.
    pub fn complete(&self, w: &Window) -> Result<WindowQuery, BoundaryError> {
        let p_out = self.crossing_outputs(w, true)?;
        let q_out = self.crossing_outputs(w, false)?;
        let p_extra: Vec<(OpId, u32)> =
            q_out.keys().filter(|k| !p_out.contains_key(k)).map(|(id, port)| (id.clone(), *port)).collect();
        let q_extra: Vec<(OpId, u32)> = p_out
            .keys()
            .filter(|k| !q_out.contains_key(k))
            .map(|(id, port)| (self.mapping().get(id.as_str()).expect("mapped producer").clone(), *port))
            .collect();
        let p_sd = subdag_from_indices(self.p(), self.p_members(w));
        let q_sd = subdag_from_indices(self.q(), self.q_members(w));
        let p = complete_with_schemas(&p_sd, self.p(), self.p_schemas(), &SideKeys { pair: self, is_p: true }, &p_extra)?;
        let q =
            complete_with_schemas(&q_sd, self.q(), self.q_schemas(), &SideKeys { pair: self, is_p: false }, &q_extra)?;
        for (key, schema) in &p.inputs {
            if q.inputs.get(key).is_some_and(|s| s != schema) {
                let id = key.trim_start_matches(VIRTUAL_PREFIX).rsplit_once('.').map_or(key.as_str(), |(a, _)| a);
                return Err(BoundaryError::Unpairable(OpId::from(id)));
            }
        }
        Ok(WindowQuery { p, q, semantics: self.semantics() })
    }
}
