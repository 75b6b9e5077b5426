//! The verification pipeline: symbolic shortcut, then a segmented
//! decomposition search for each candidate edit mapping.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::accel::{quick_inequivalence, segment_pair, verify_with_segments, SegmentReport, SegmentationMethod, SymbolicDifference};
use crate::decompose::{verify_pair, SearchOptions, SearchReport, StopReason, VerifiedWindow, Witness};
use crate::edit::{enumerate_mappings, EditMapping, MappingError, Transformation, DEFAULT_MAPPING_CAP};
use crate::ev::{ev_by_name, find_counterexample, Counterexample, Dispatch, EmptyEvSet, EvSet, UnknownEv, Verdict, DEFAULT_INSTANCES};
use crate::window::{PairError, VersionPair, Window};
use crate::workflow::{validate_workflow, TableSemantics, Violation, Workflow};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// Verifier names in the order they are consulted.
    pub evs: Vec<String>,
    pub mapping_cap: usize,
    pub segmentation: SegmentationMethod,
    pub pruning: bool,
    pub ranking: bool,
    pub symbolic: bool,
    pub non_monotonic: bool,
    pub backtracking: bool,
    pub memoize: bool,
    pub oracle_instances: usize,
    pub seed: u64,
    /// Result comparison semantics; P's declared semantics when unset.
    pub semantics: Option<TableSemantics>,
    pub budget: Duration,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            evs: vec![crate::ev::CANONICAL.to_string()],
            mapping_cap: DEFAULT_MAPPING_CAP,
            segmentation: SegmentationMethod::Boundary,
            pruning: true,
            ranking: true,
            symbolic: true,
            non_monotonic: true,
            backtracking: true,
            memoize: true,
            oracle_instances: DEFAULT_INSTANCES,
            seed: 0,
            semantics: None,
            budget: Duration::from_secs(60),
        }
    }
}

impl VerifyConfig {
    /// Every accelerator enabled.
    pub fn plus() -> Self {
        Self::default()
    }

    /// Plain decomposition search: no segmentation, pruning, ranking or
    /// symbolic shortcut.
    pub fn baseline() -> Self {
        VerifyConfig { segmentation: SegmentationMethod::Off, pruning: false, ranking: false, symbolic: false, ..Self::default() }
    }

    pub fn with_evs(mut self, evs: &[&str]) -> Self {
        self.evs = evs.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn search_options(&self, deadline: Option<Instant>) -> SearchOptions {
        SearchOptions {
            non_monotonic: self.non_monotonic,
            backtracking: self.backtracking,
            memoize: self.memoize,
            pruning: self.pruning,
            ranking: self.ranking,
            deadline,
        }
    }

    pub fn ev_set(&self) -> Result<EvSet, VerifyError> {
        let evs = self.evs.iter().map(|n| ev_by_name(n, self.oracle_instances, self.seed)).collect::<Result<Vec<_>, _>>()?;
        Ok(EvSet::new(evs)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("version {version} has {sinks} sinks; exactly one is required")]
    SinkCount { version: &'static str, sinks: usize },
    #[error("version {version} is not a valid workflow: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidWorkflow { version: &'static str, violations: Vec<Violation> },
    #[error(transparent)]
    UnknownEv(#[from] UnknownEv),
    #[error(transparent)]
    NoEv(#[from] EmptyEvSet),
    #[error("time budget must be positive")]
    ZeroBudget,
    #[error("tracked edits do not describe the pair: {0}")]
    Tracked(#[from] MappingError),
    #[error(transparent)]
    Pair(#[from] PairError),
}

/// What the version-control system recorded about how Q was made from P.
#[derive(Debug, Clone)]
pub enum Tracked {
    Mapping(EditMapping),
    Edits(Transformation),
}

/// Search outcome under one edit mapping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingReport {
    pub tracked: bool,
    pub mapping: EditMapping,
    pub changes: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentReport>,
    #[serde(flatten)]
    pub search: SearchReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultWitness {
    /// Covering windows proven equivalent under the mapping at
    /// `mapping_index`.
    Decomposition { mapping_index: usize, windows: Vec<VerifiedWindow> },
    Counterexample(Counterexample),
    /// The versions' output columns or order differ; `counterexample`
    /// shows it on concrete inputs.
    Symbolic { difference: SymbolicDifference, counterexample: Counterexample },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyResult {
    pub verdict: Verdict,
    pub reason: StopReason,
    pub mappings_tried: usize,
    pub decompositions_explored: usize,
    pub ev_calls: usize,
    pub mappings: Vec<MappingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ResultWitness>,
    pub elapsed_ms: u64,
}

/// Asks the verifiers a window satisfies, in order, until one answers.
pub fn dispatch_multi_ev(pair: &VersionPair, w: &Window, evs: &EvSet) -> Dispatch {
    let status = evs.status(pair, w);
    evs.dispatch(pair, w, &status)
}

fn check_version(w: &Workflow, version: &'static str) -> Result<(), VerifyError> {
    let report = validate_workflow(w);
    if !report.is_ok() {
        return Err(VerifyError::InvalidWorkflow { version, violations: report.violations });
    }
    let sinks = w.sinks().len();
    if sinks != 1 {
        return Err(VerifyError::SinkCount { version, sinks });
    }
    Ok(())
}

/// Decides whether P and Q produce the same sink result on every input.
pub fn verify(p: &Workflow, q: &Workflow, tracked: Option<&Tracked>, cfg: &VerifyConfig) -> Result<VerifyResult, VerifyError> {
    let start = Instant::now();
    check_version(p, "P")?;
    check_version(q, "Q")?;
    if cfg.budget.is_zero() {
        return Err(VerifyError::ZeroBudget);
    }
    let evs = cfg.ev_set()?;
    let semantics = cfg.semantics.unwrap_or(p.semantics());
    let tracked = match tracked {
        Some(Tracked::Mapping(m)) => Some(m.clone()),
        Some(Tracked::Edits(delta)) => Some(EditMapping::from_transformation(p, delta, q)?),
        None => None,
    };
    if let Some(m) = &tracked {
        m.check(p, q)?;
    }
    let mut result = VerifyResult {
        verdict: Verdict::Unknown,
        reason: StopReason::Exhausted,
        mappings_tried: 0,
        decompositions_explored: 0,
        ev_calls: 0,
        mappings: Vec::new(),
        witness: None,
        elapsed_ms: 0,
    };

    if cfg.symbolic {
        if let Some(difference) = quick_inequivalence(p, q, semantics) {
            if let Some(counterexample) = find_counterexample(p, q, semantics, cfg.oracle_instances, cfg.seed) {
                result.verdict = Verdict::False;
                result.reason = StopReason::Decided;
                result.witness = Some(ResultWitness::Symbolic { difference, counterexample });
                result.elapsed_ms = start.elapsed().as_millis() as u64;
                return Ok(result);
            }
        }
    }

    let deadline = start + cfg.budget;
    let cap = cfg.mapping_cap.max(1);
    let mut last_pair = None;
    let mut unfinished: Vec<(usize, VersionPair)> = Vec::new();
    for (index, mapping) in enumerate_mappings(p, q, cap, tracked.as_ref()).enumerate() {
        let now = Instant::now();
        if now >= deadline {
            break;
        }
        // A recorded mapping is the likeliest; it gets half the budget.
        let parts = if index == 0 && tracked.is_some() { 2 } else { (cap - index).max(1) };
        let share = (deadline - now) / parts as u32;
        let pair = VersionPair::with_semantics(p.clone(), q.clone(), mapping.clone(), semantics)?;
        let (search, segments) = search_mapping(&pair, &evs, cfg, now + share);
        result.mappings_tried += 1;
        result.decompositions_explored += search.decompositions_explored;
        result.ev_calls += search.ev_calls;
        let decided = search.verdict != Verdict::Unknown;
        if decided {
            result.decide(index, &search);
        } else if search.reason == StopReason::Timeout {
            unfinished.push((index, pair.clone()));
        }
        result.mappings.push(MappingReport { tracked: index == 0 && tracked.is_some(), mapping, changes: pair.changes().len(), segments, search });
        last_pair = Some(pair);
        if decided {
            break;
        }
    }
    // Mappings cut short resume, from scratch, with the time others left.
    let mut left = unfinished.len();
    for (index, pair) in unfinished {
        let now = Instant::now();
        if result.verdict != Verdict::Unknown || now >= deadline {
            break;
        }
        let share = (deadline - now) / left as u32;
        left -= 1;
        let (mut search, segments) = search_mapping(&pair, &evs, cfg, now + share);
        result.decompositions_explored += search.decompositions_explored;
        result.ev_calls += search.ev_calls;
        if search.verdict != Verdict::Unknown {
            result.decide(index, &search);
        }
        let report = &mut result.mappings[index];
        search.absorb(&report.search);
        report.search = search;
        report.segments = segments;
    }
    if result.verdict == Verdict::Unknown {
        let cut_short = Instant::now() >= deadline || result.mappings.iter().any(|m| m.search.reason == StopReason::Timeout);
        result.reason = if cut_short { StopReason::Timeout } else { StopReason::Exhausted };
    }
    if result.verdict == Verdict::Unknown {
        if let (Some(pair), Some(refuters)) = (&last_pair, evs.refuters()) {
            let d = dispatch_multi_ev(pair, &pair.full_window(), &refuters);
            result.ev_calls += d.calls;
            if d.verdict.verdict == Verdict::False {
                result.verdict = Verdict::False;
                result.reason = StopReason::Decided;
                result.witness = d.verdict.counterexample.map(ResultWitness::Counterexample);
            }
        }
    }
    result.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(result)
}

fn search_mapping(pair: &VersionPair, evs: &EvSet, cfg: &VerifyConfig, deadline: Instant) -> (SearchReport, Vec<SegmentReport>) {
    let opts = cfg.search_options(Some(deadline));
    if cfg.segmentation == SegmentationMethod::Off || pair.changes().is_empty() {
        return (verify_pair(pair, evs, &opts), Vec::new());
    }
    let segs = segment_pair(pair, evs, cfg.segmentation, &opts);
    let r = verify_with_segments(pair, evs, &opts, segs);
    (r.search, r.segments)
}

impl VerifyResult {
    fn decide(&mut self, mapping_index: usize, search: &SearchReport) {
        self.verdict = search.verdict;
        self.reason = StopReason::Decided;
        self.witness = match search.witness.clone() {
            Some(Witness::Decomposition(windows)) => Some(ResultWitness::Decomposition { mapping_index, windows }),
            Some(Witness::Counterexample(c)) => Some(ResultWitness::Counterexample(c)),
            None => None,
        };
    }
}
