//! Search accelerators: splitting a pair into independently verifiable
//! segments, segment and decomposition ranking, and a symbolic check that
//! spots inequivalent versions without running any verifier.

mod symbolic;

use serde::{Deserialize, Serialize};

use crate::decompose::{find_mcws, search_scope, SearchOptions, SearchReport, StopReason, Witness};
use crate::ev::{EvSet, Verdict};
use crate::window::{VersionPair, Window, WindowIds};

pub use crate::decompose::{Decomposition, DecompositionScore};
pub use symbolic::{quick_inequivalence, summarize_version, Confidence, SummaryField, SymbolicDifference, SymbolicSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentationMethod {
    Off,
    /// Split at unchanged operators no verifier supports.
    #[default]
    Boundary,
    /// Unions of each change's maximal covering windows.
    McwUnion,
}

impl SegmentationMethod {
    pub fn name(self) -> &'static str {
        match self {
            SegmentationMethod::Off => "off",
            SegmentationMethod::Boundary => "boundary",
            SegmentationMethod::McwUnion => "mcw-union",
        }
    }
}

impl std::str::FromStr for SegmentationMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(SegmentationMethod::Off),
            "boundary" => Ok(SegmentationMethod::Boundary),
            "mcw-union" => Ok(SegmentationMethod::McwUnion),
            other => Err(format!("unknown segmentation `{other}` (expected off, boundary or mcw-union)")),
        }
    }
}

/// A region of the pair that no valid covering window leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub window: Window,
    /// Indices of the changes inside.
    pub changes: Vec<usize>,
    /// False when some change inside has no valid covering window at all.
    pub verifiable: bool,
}

impl Segment {
    pub fn score(&self, pair: &VersionPair) -> usize {
        rank_segment(pair.larger_side(&self.window), self.changes.len())
    }
}

/// Operators on the larger side plus number of changes; smaller segments
/// are verified first.
pub fn rank_segment(operators: usize, changes: usize) -> usize {
    operators + changes
}

/// Exploration priority of a decomposition; higher is explored first.
pub fn rank_decomposition(d: &Decomposition) -> DecompositionScore {
    d.score()
}

fn changes_within(pair: &VersionPair, w: &Window) -> Vec<usize> {
    pair.changes().iter().enumerate().filter(|(_, c)| c.units.iter().all(|&u| w.contains_unit(u))).map(|(i, _)| i).collect()
}

/// Unchanged units that every verifier rejects for good act as walls;
/// each connected region between walls that holds a change is a segment.
pub fn segmentation_by_unsupported_ops(pair: &VersionPair, evs: &EvSet) -> Vec<Segment> {
    let changed = pair.changed_units();
    let n = pair.unit_count();
    let wall: Vec<bool> = (0..n).map(|u| !changed.contains(u) && evs.status(pair, &pair.window_of_units([u])).dead).collect();
    let mut component = vec![usize::MAX; n];
    let mut segments = Vec::new();
    for start in 0..n {
        if wall[start] || component[start] != usize::MAX {
            continue;
        }
        let id = start;
        let mut stack = vec![start];
        let mut units = Vec::new();
        component[start] = id;
        while let Some(u) = stack.pop() {
            units.push(u);
            for &v in pair.unit_neighbors(u) {
                if !wall[v] && component[v] == usize::MAX {
                    component[v] = id;
                    stack.push(v);
                }
            }
        }
        if units.iter().any(|&u| changed.contains(u)) {
            let window = pair.window_of_units(units);
            let changes = changes_within(pair, &window);
            segments.push(Segment { window, changes, verifiable: true });
        }
    }
    segments
}

/// Each change's maximal covering windows are united, and overlapping
/// unions are merged until the regions are disjoint.
pub fn segmentation_by_mcw_union(pair: &VersionPair, evs: &EvSet, opts: &SearchOptions) -> Vec<Segment> {
    let mut regions: Vec<(Window, bool)> = Vec::new();
    for change in 0..pair.changes().len() {
        let mcws = find_mcws(pair, change, evs, opts);
        let region = match mcws.split_first() {
            Some((first, rest)) => (rest.iter().fold(first.clone(), |acc, w| acc.union(w)), true),
            None => (pair.initial_covering_window(change), false),
        };
        regions.push(region);
    }
    let mut merged: Vec<(Window, bool)> = Vec::new();
    for (mut w, mut ok) in regions {
        loop {
            let Some(i) = merged.iter().position(|(m, _)| m.overlaps(&w)) else { break };
            let (m, mok) = merged.swap_remove(i);
            w = w.union(&m);
            ok &= mok;
        }
        merged.push((w, ok));
    }
    merged.sort();
    merged
        .into_iter()
        .map(|(window, verifiable)| Segment { changes: changes_within(pair, &window), window, verifiable })
        .collect()
}

pub fn segment_pair(pair: &VersionPair, evs: &EvSet, method: SegmentationMethod, opts: &SearchOptions) -> Vec<Segment> {
    match method {
        SegmentationMethod::Off => {
            let window = pair.full_window();
            vec![Segment { changes: changes_within(pair, &window), window, verifiable: true }]
        }
        SegmentationMethod::Boundary => segmentation_by_unsupported_ops(pair, evs),
        SegmentationMethod::McwUnion => segmentation_by_mcw_union(pair, evs, opts),
    }
}

/// How one segment fared.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    pub segment: WindowIds,
    pub score: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentedReport {
    #[serde(flatten)]
    pub search: SearchReport,
    /// Segments in the order they were verified; ones never reached are
    /// left out.
    pub segments: Vec<SegmentReport>,
}

/// Verifies segments smallest first and stops at the first one that is
/// not proven equivalent. The pair is equivalent when every segment is.
pub fn verify_with_segments(pair: &VersionPair, evs: &EvSet, opts: &SearchOptions, segments: Vec<Segment>) -> SegmentedReport {
    let mut ranked: Vec<(usize, Segment)> = segments.into_iter().map(|s| (s.score(pair), s)).collect();
    ranked.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.window.cmp(&b.1.window)));
    let mut total = SearchReport::new(Verdict::True, StopReason::Decided);
    let mut proof = Vec::new();
    let mut reports = Vec::new();
    for (score, seg) in ranked {
        let r = if seg.verifiable {
            search_scope(pair, evs, opts, seg.window.clone())
        } else {
            SearchReport::new(Verdict::Unknown, StopReason::Exhausted)
        };
        total.absorb(&r);
        reports.push(SegmentReport { segment: pair.describe(&seg.window), score, verdict: r.verdict });
        match (r.verdict, r.witness) {
            (Verdict::True, Some(Witness::Decomposition(ws))) => proof.extend(ws),
            (Verdict::True, _) => {}
            (verdict, witness) => {
                total.verdict = verdict;
                total.reason = r.reason;
                total.witness = witness;
                return SegmentedReport { search: total, segments: reports };
            }
        }
    }
    total.witness = Some(Witness::Decomposition(proof));
    SegmentedReport { search: total, segments: reports }
}


#[cfg(test)]
mod tests;
