//! Decompositions of a version pair into disjoint windows and the searches
//! over them: single-change window maximization and the multi-change
//! decomposition search.

mod search;
mod single;

use std::cmp::Ordering;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::ev::{Counterexample, Verdict};
use crate::window::{VersionPair, Window, WindowIds};

pub(crate) use search::search_scope;
pub use search::{verify_pair, verify_pair_baseline, Expansion};
pub use single::{find_mcws, verify_single_edit};

/// Knobs of one decomposition search.
#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Keep expanding through unions a non-monotonic verifier rejects and
    /// decide maximality by looking for a valid super-window.
    pub non_monotonic: bool,
    /// When a maximal window is Unknown, retry the smaller windows it grew
    /// from (relaxed verifiers only).
    pub backtracking: bool,
    /// Explore each decomposition once and cache window verdicts.
    pub memoize: bool,
    /// Verify windows as soon as they become maximal and drop
    /// decompositions holding a refuted one.
    pub pruning: bool,
    /// Best-first exploration by decomposition score instead of FIFO.
    pub ranking: bool,
    pub deadline: Option<Instant>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            non_monotonic: true,
            backtracking: true,
            memoize: true,
            pruning: false,
            ranking: false,
            deadline: None,
        }
    }
}

/// Why a search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// A verdict other than Unknown was reached.
    Decided,
    /// Every reachable decomposition was explored.
    Exhausted,
    Timeout,
}

/// A covering window together with the verifier that proved it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifiedWindow {
    #[serde(flatten)]
    pub window: WindowIds,
    pub ev: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// Covering windows of an equivalent decomposition.
    Decomposition(Vec<VerifiedWindow>),
    Counterexample(Counterexample),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub verdict: Verdict,
    pub reason: StopReason,
    pub decompositions_explored: usize,
    pub ev_calls: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// A maximal window had an empty side and could not be verified.
    pub empty_side_windows: bool,
}

impl SearchReport {
    pub(crate) fn new(verdict: Verdict, reason: StopReason) -> Self {
        SearchReport {
            verdict,
            reason,
            decompositions_explored: 0,
            ev_calls: 0,
            witness: None,
            empty_side_windows: false,
        }
    }

    /// Adds the counters of `other` to this report.
    pub fn absorb(&mut self, other: &SearchReport) {
        self.decompositions_explored += other.decompositions_explored;
        self.ev_calls += other.ev_calls;
        self.empty_side_windows |= other.empty_side_windows;
    }
}

/// A window of a decomposition that holds at least one change.
#[derive(Debug, Clone)]
pub struct CoveringWindow {
    pub window: Window,
    pub maximal: bool,
    /// Smaller windows covering the same changes that this one grew from.
    pub(crate) history: Arc<[Window]>,
}

/// Disjoint windows covering a scope of the pair: the covering windows
/// plus one singleton window per remaining unit.
#[derive(Debug, Clone)]
pub struct Decomposition {
    scope: Window,
    covering: Vec<CoveringWindow>,
}

impl Decomposition {
    /// Every unit its own window, except that the units of changes that
    /// share a unit are grouped so each change lies in one window.
    pub(crate) fn initial_in(pair: &VersionPair, scope: &Window) -> Self {
        let mut groups: Vec<Window> = Vec::new();
        for change in pair.changes() {
            if !change.units.iter().all(|&u| scope.contains_unit(u)) {
                continue;
            }
            let mut w = pair.window_of_units(change.units.iter().copied());
            let (touching, rest): (Vec<Window>, Vec<Window>) = groups.into_iter().partition(|g| g.overlaps(&w));
            for g in touching {
                w = w.union(&g);
            }
            groups = rest;
            groups.push(w);
        }
        groups.sort();
        let covering = groups.into_iter().map(|window| CoveringWindow { window, maximal: false, history: Arc::from([]) }).collect();
        Decomposition { scope: scope.clone(), covering }
    }

    pub fn scope(&self) -> &Window {
        &self.scope
    }

    pub fn covering(&self) -> &[CoveringWindow] {
        &self.covering
    }

    /// Units sitting in singleton non-covering windows.
    pub fn unmerged_units(&self) -> Vec<usize> {
        self.scope.units().filter(|&u| !self.covering.iter().any(|c| c.window.contains_unit(u))).collect()
    }

    pub fn window_count(&self) -> usize {
        self.covering.len() + self.unmerged_units().len()
    }

    /// All windows: covering ones first, then singletons.
    pub fn windows(&self, pair: &VersionPair) -> Vec<Window> {
        let mut out: Vec<Window> = self.covering.iter().map(|c| c.window.clone()).collect();
        out.extend(self.unmerged_units().into_iter().map(|u| pair.window_of_units([u])));
        out
    }

    pub fn all_maximal(&self) -> bool {
        self.covering.iter().all(|c| c.maximal)
    }

    /// Identity for deduplication: the sorted covering windows and their
    /// maximality marks.
    pub(crate) fn key(&self) -> Vec<(Window, bool)> {
        self.covering.iter().map(|c| (c.window.clone(), c.maximal)).collect()
    }

    pub fn score(&self) -> DecompositionScore {
        let covering_units = self.covering.iter().map(|c| c.window.len()).sum::<usize>();
        DecompositionScore {
            covering_units,
            covering_windows: self.covering.len(),
            unmerged: self.scope.len() - covering_units,
        }
    }

    pub fn describe(&self, pair: &VersionPair) -> Vec<WindowIds> {
        self.covering.iter().map(|c| pair.describe(&c.window)).collect()
    }

    /// Disjoint windows whose union is the scope, every change of the scope
    /// inside exactly one covering window.
    pub fn is_well_formed(&self, pair: &VersionPair) -> bool {
        let mut seen = pair.empty_window();
        for c in &self.covering {
            if c.window.overlaps(&seen) || !c.window.is_within(&self.scope) {
                return false;
            }
            seen = seen.union(&c.window);
        }
        pair.changes().iter().filter(|ch| ch.units.iter().all(|&u| self.scope.contains_unit(u))).all(|ch| {
            self.covering.iter().filter(|c| ch.units.iter().all(|&u| c.window.contains_unit(u))).count() == 1
        })
    }

    /// Replaces covering window `j` (and covering window `k`, if given) by
    /// `merged`.
    pub(crate) fn merge(&self, j: usize, k: Option<usize>, merged: Window) -> Decomposition {
        let history: Arc<[Window]> = match k {
            None => self.covering[j].history.iter().chain([&self.covering[j].window]).cloned().collect(),
            Some(_) => Arc::from([]),
        };
        let mut covering: Vec<CoveringWindow> =
            self.covering.iter().enumerate().filter(|&(i, _)| i != j && Some(i) != k).map(|(_, c)| c.clone()).collect();
        covering.push(CoveringWindow { window: merged, maximal: false, history });
        covering.sort_by(|a, b| a.window.cmp(&b.window));
        Decomposition { scope: self.scope.clone(), covering }
    }

    /// Neighbors of covering window `j`: adjacent covering windows by index
    /// and adjacent singleton units, each with the union it would form.
    pub(crate) fn neighbor_unions(&self, pair: &VersionPair, j: usize) -> Vec<(Option<usize>, Window)> {
        let wj = &self.covering[j].window;
        let mut owner = vec![None; pair.unit_count()];
        for (i, c) in self.covering.iter().enumerate() {
            for u in c.window.units() {
                owner[u] = Some(i);
            }
        }
        let mut out: Vec<(Option<usize>, Window)> = Vec::new();
        let mut seen_cover = Vec::new();
        let mut seen_unit = Vec::new();
        for u in wj.units() {
            for &n in pair.unit_neighbors(u) {
                if wj.contains_unit(n) || !self.scope.contains_unit(n) {
                    continue;
                }
                match owner[n] {
                    Some(k) if !seen_cover.contains(&k) => {
                        seen_cover.push(k);
                        out.push((Some(k), wj.union(&self.covering[k].window)));
                    }
                    Some(_) => {}
                    None if !seen_unit.contains(&n) => {
                        seen_unit.push(n);
                        out.push((None, wj.with_unit(n)));
                    }
                    None => {}
                }
            }
        }
        out
    }
}

/// The decomposition in which every unit is its own window, apart from
/// units grouped by a shared change.
pub fn initial_decomposition(pair: &VersionPair) -> Decomposition {
    Decomposition::initial_in(pair, &pair.full_window())
}

/// Average covering-window size minus the number of unmerged singleton
/// windows; higher means closer to a maximal decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecompositionScore {
    pub covering_units: usize,
    pub covering_windows: usize,
    pub unmerged: usize,
}

impl DecompositionScore {
    /// `(numerator, denominator)` of the score.
    fn fraction(&self) -> (i128, i128) {
        if self.covering_windows == 0 {
            return (-(self.unmerged as i128), 1);
        }
        let n = self.covering_windows as i128;
        (self.covering_units as i128 - self.unmerged as i128 * n, n)
    }

    pub fn value(&self) -> f64 {
        let (a, b) = self.fraction();
        a as f64 / b as f64
    }

    /// The score when it is a whole number.
    pub fn as_integer(&self) -> Option<i64> {
        let (a, b) = self.fraction();
        (a % b == 0).then(|| (a / b) as i64)
    }

    /// Exact comparison of score values.
    pub fn compare(&self, other: &Self) -> Ordering {
        let (a, b) = self.fraction();
        let (c, d) = other.fraction();
        (a * d).cmp(&(c * b))
    }
}
