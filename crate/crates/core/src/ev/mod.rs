//! Equivalence verifiers: restriction profiles, verdicts and the built-in
//! canonicalizing and execution-oracle verifiers.

mod canonical;
mod oracle;
mod restrict;
mod set;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::window::{VersionPair, Window, WindowError, WindowQuery};
use crate::workflow::{BoundaryError, OperatorKind, Table, TableSemantics, Workflow};

pub use canonical::{canonicalize_spja, CanonicalEngine, CanonicalForm};
pub use oracle::{find_counterexample, oracle_verify, replay_differs, OracleEngine, DEFAULT_INSTANCES};
pub use restrict::{Rule, RuleViolation, SideView, WindowSides};
pub use set::{Dispatch, EmptyEvSet, EvSet, WindowStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An input instance on which two sub-DAGs disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Source tables by table name.
    pub inputs: BTreeMap<String, Table>,
    /// Output key whose results differ.
    pub output: String,
    pub p_result: Table,
    pub q_result: Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvVerdict {
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

impl EvVerdict {
    pub fn unknown() -> Self {
        EvVerdict { verdict: Verdict::Unknown, counterexample: None }
    }

    pub fn equivalent() -> Self {
        EvVerdict { verdict: Verdict::True, counterexample: None }
    }

    pub fn refuted(c: Counterexample) -> Self {
        EvVerdict { verdict: Verdict::False, counterexample: Some(c) }
    }
}

/// The verifier behind an [`EvDescriptor`].
pub trait EvEngine: Send + Sync {
    /// Restriction violations of a window; empty means the window is
    /// within the verifier's profile.
    fn violations(&self, sides: &WindowSides<'_>) -> Vec<RuleViolation>;

    /// Decides equivalence of a completed window.
    fn verify(&self, query: &WindowQuery) -> EvVerdict;
}

/// A named verifier and what it promises.
#[derive(Clone)]
pub struct EvDescriptor {
    pub name: String,
    pub semantics: Vec<TableSemantics>,
    /// Every super-window of an invalid window is invalid.
    pub restriction_monotonic: bool,
    pub can_prove_inequivalence: bool,
    /// Proves equivalence beyond structurally identical sides; only such
    /// verifiers bound how far a window may grow.
    pub can_prove_equivalence: bool,
    /// The verifier may be queried on windows outside its profile.
    pub relaxed_restrictions: bool,
    engine: Arc<dyn EvEngine>,
}

impl fmt::Debug for EvDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvDescriptor")
            .field("name", &self.name)
            .field("semantics", &self.semantics)
            .field("restriction_monotonic", &self.restriction_monotonic)
            .field("can_prove_inequivalence", &self.can_prove_inequivalence)
            .field("can_prove_equivalence", &self.can_prove_equivalence)
            .field("relaxed_restrictions", &self.relaxed_restrictions)
            .finish()
    }
}

impl EvDescriptor {
    /// A monotonic, non-refuting verifier over all table semantics.
    pub fn new(name: impl Into<String>, engine: Arc<dyn EvEngine>) -> Self {
        EvDescriptor {
            name: name.into(),
            semantics: TableSemantics::ALL.to_vec(),
            restriction_monotonic: true,
            can_prove_inequivalence: false,
            can_prove_equivalence: true,
            relaxed_restrictions: false,
            engine,
        }
    }

    pub fn with_semantics(mut self, semantics: &[TableSemantics]) -> Self {
        self.semantics = semantics.to_vec();
        self
    }

    pub fn monotonic(mut self, yes: bool) -> Self {
        self.restriction_monotonic = yes;
        self
    }

    pub fn proves_inequivalence(mut self, yes: bool) -> Self {
        self.can_prove_inequivalence = yes;
        self
    }

    pub fn proves_equivalence(mut self, yes: bool) -> Self {
        self.can_prove_equivalence = yes;
        self
    }

    pub fn relaxed(mut self, yes: bool) -> Self {
        self.relaxed_restrictions = yes;
        self
    }

    pub fn engine(&self) -> &dyn EvEngine {
        self.engine.as_ref()
    }
}

pub const CANONICAL: &str = "canonical";
pub const CANONICAL_RELAXED: &str = "canonical-relaxed";
pub const ORACLE: &str = "oracle";

/// The canonicalizing SPJ/outer-join/aggregate verifier. Its count rules
/// can be restored by growing a window, so it is not monotonic.
pub fn canonical_ev() -> EvDescriptor {
    EvDescriptor::new(CANONICAL, Arc::new(CanonicalEngine::strict()))
        .with_semantics(&[TableSemantics::Set])
        .monotonic(false)
}

/// Canonical verifier without the count rules; it may be asked about any
/// window within its operator profile and answers Unknown when the
/// normal forms differ.
pub fn canonical_relaxed_ev() -> EvDescriptor {
    EvDescriptor::new(CANONICAL_RELAXED, Arc::new(CanonicalEngine::relaxed()))
        .with_semantics(&[TableSemantics::Set])
        .relaxed(true)
}

/// Sampling oracle that refutes with a witness; it never sees inside
/// opaque operators.
pub fn oracle_ev(instances: usize, seed: u64) -> EvDescriptor {
    EvDescriptor::new(ORACLE, Arc::new(OracleEngine::new(instances, seed))).proves_inequivalence(true).proves_equivalence(false)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown verifier `{0}` (expected canonical, canonical-relaxed or oracle)")]
pub struct UnknownEv(pub String);

pub fn ev_by_name(name: &str, instances: usize, seed: u64) -> Result<EvDescriptor, UnknownEv> {
    match name {
        CANONICAL => Ok(canonical_ev()),
        CANONICAL_RELAXED => Ok(canonical_relaxed_ev()),
        ORACLE => Ok(oracle_ev(instances, seed)),
        other => Err(UnknownEv(other.to_string())),
    }
}

/// Outcome of checking a window against a verifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictionCheck {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structural: Option<String>,
    pub violations: Vec<RuleViolation>,
    /// No growth of the window can make it valid.
    pub dead: bool,
}

/// Whether `w` satisfies the window invariants, has two non-empty sides
/// and lies within the verifier's restrictions.
pub fn is_valid_window(ev: &EvDescriptor, pair: &VersionPair, w: &Window) -> RestrictionCheck {
    let mut structural = pair.check_structure(w).err();
    let sides = WindowSides::new(pair, w);
    if structural.is_none() && (sides.p.members.is_empty() || sides.q.members.is_empty()) {
        structural = Some(WindowError::Empty);
    }
    let violations = restriction_violations(ev, pair, &sides);
    let dead = violations.iter().any(|v| ev.restriction_monotonic || v.permanent);
    RestrictionCheck {
        valid: structural.is_none() && violations.is_empty(),
        structural: structural.map(|e| e.to_string()),
        violations,
        dead,
    }
}

pub(crate) fn restriction_violations(ev: &EvDescriptor, pair: &VersionPair, sides: &WindowSides<'_>) -> Vec<RuleViolation> {
    let mut violations = Vec::new();
    if !ev.semantics.contains(&pair.semantics()) {
        violations.push(RuleViolation::new(Rule::Semantics, None, format!("{} semantics", pair.semantics().name())));
    }
    violations.extend(ev.engine.violations(sides));
    violations
}

/// Completes the window and asks the verifier. A boundary that cannot be
/// paired yields Unknown without consulting the verifier (`Ok(None)`).
pub fn verify_window(ev: &EvDescriptor, pair: &VersionPair, w: &Window) -> Result<Option<EvVerdict>, BoundaryError> {
    match pair.complete(w) {
        Ok(query) => {
            let mut verdict = ev.engine.verify(&query);
            if verdict.verdict == Verdict::False && !ev.can_prove_inequivalence {
                verdict = EvVerdict::unknown();
            }
            Ok(Some(verdict))
        }
        Err(BoundaryError::Unpairable(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Deterministic structural rendering of everything feeding each sink;
/// equal renderings mean the sub-DAGs compute the same thing.
pub(crate) fn structural_forms(w: &Workflow, outputs: &BTreeMap<String, crate::workflow::OpId>) -> BTreeMap<String, String> {
    fn render(w: &Workflow, idx: usize, memo: &mut BTreeMap<usize, String>) -> String {
        if let Some(s) = memo.get(&idx) {
            return s.clone();
        }
        let op = w.op(idx);
        let args: Vec<String> = (0..op.properties.in_ports())
            .map(|p| match w.feeder(idx, p) {
                Some((f, port)) => format!("{}#{port}", render(w, f, memo)),
                None => "?".to_string(),
            })
            .collect();
        let head = match op.kind() {
            OperatorKind::Sink => String::new(),
            _ => serde_json::to_string(&op.properties).expect("properties serialize"),
        };
        let s = format!("{head}({})", args.join(","));
        memo.insert(idx, s.clone());
        s
    }
    let mut memo = BTreeMap::new();
    outputs
        .iter()
        .filter_map(|(k, sink)| w.index_of(sink.as_str()).map(|i| (k.clone(), render(w, i, &mut memo))))
        .collect()
}

/// Kinds the canonical verifier understands.
pub(crate) fn spja_kinds() -> BTreeSet<OperatorKind> {
    use OperatorKind::*;
    [Source, Sink, Filter, Project, Join, LeftOuterJoin, Aggregate].into_iter().collect()
}
