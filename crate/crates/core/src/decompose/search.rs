//! The decomposition search and the expansion machinery it shares with the
//! single-change search.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::time::Instant;

use rustc_hash::{FxHashMap, FxHashSet};

use super::{Decomposition, DecompositionScore, SearchOptions, SearchReport, StopReason, VerifiedWindow, Witness};
use crate::ev::{Dispatch, EvSet, Verdict, WindowStatus};
use crate::window::{VersionPair, Window};

/// Super-windows examined when deciding whether a window can still grow
/// into a valid one.
const MAXIMALITY_BUDGET: usize = 2048;

/// What to do with a window after looking at its neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expansion {
    /// Merge candidates: neighbor index (covering window) or `None`
    /// (singleton), with the resulting union.
    Candidates(Vec<(Option<usize>, Window)>),
    /// No further growth can produce a valid window containing it.
    Maximal,
    /// Invalid, and no valid window contains it.
    Dead,
}

pub(crate) struct Engine<'a> {
    pub pair: &'a VersionPair,
    pub evs: &'a EvSet,
    pub opts: &'a SearchOptions,
    pub scope: Window,
    status: FxHashMap<Window, WindowStatus>,
    verdicts: FxHashMap<Window, Dispatch>,
    reachable: FxHashMap<Window, bool>,
    pub ev_calls: usize,
    pub explored: usize,
    pub empty_side: bool,
}

impl<'a> Engine<'a> {
    pub fn new(pair: &'a VersionPair, evs: &'a EvSet, opts: &'a SearchOptions, scope: Window) -> Self {
        Engine {
            pair,
            evs,
            opts,
            scope,
            status: FxHashMap::default(),
            verdicts: FxHashMap::default(),
            reachable: FxHashMap::default(),
            ev_calls: 0,
            explored: 0,
            empty_side: false,
        }
    }

    fn non_monotonic(&self) -> bool {
        self.opts.non_monotonic && !self.evs.monotonic()
    }

    pub fn timed_out(&self) -> bool {
        self.opts.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub fn status(&mut self, w: &Window) -> WindowStatus {
        if let Some(s) = self.status.get(w) {
            return s.clone();
        }
        let s = self.evs.status(self.pair, w);
        if self.opts.memoize {
            self.status.insert(w.clone(), s.clone());
        }
        s
    }

    /// Verifies a window with every verifier it satisfies.
    pub fn verify(&mut self, w: &Window) -> Dispatch {
        if let Some(d) = self.verdicts.get(w) {
            return d.clone();
        }
        let status = self.status(w);
        if status.admissible() && !status.two_sided {
            self.empty_side = true;
        }
        let d = self.evs.dispatch(self.pair, w, &status);
        self.ev_calls += d.calls;
        if self.opts.memoize {
            self.verdicts.insert(w.clone(), d.clone());
        }
        d
    }

    /// Verifies a maximal covering window, falling back to the windows it
    /// grew from when it is Unknown and either a relaxed verifier is in
    /// use or several verifiers disagree on how far a window may grow.
    pub fn verify_with_history(&mut self, w: &Window, history: &[Window]) -> (Window, Dispatch) {
        let d = self.verify(w);
        let retry = self.evs.relaxed() || self.evs.provers().count() > 1;
        if d.verdict.verdict != Verdict::Unknown || !self.opts.backtracking || !retry {
            return (w.clone(), d);
        }
        let mut chain: Vec<&Window> = history.iter().collect();
        chain.sort_by_key(|h| Reverse(h.len()));
        for h in chain {
            if self.status(h).verifiable() {
                let dh = self.verify(h);
                if dh.verdict.verdict != Verdict::Unknown {
                    return (h.clone(), dh);
                }
            }
        }
        (w.clone(), d)
    }

    /// Whether some valid window strictly contains `w` within the scope,
    /// growing one unit at a time through windows that are not dead.
    fn has_valid_superwindow(&mut self, w: &Window) -> bool {
        if let Some(&r) = self.reachable.get(w) {
            return r;
        }
        let mut seen: FxHashSet<Window> = FxHashSet::from_iter([w.clone()]);
        let mut queue = VecDeque::from([w.clone()]);
        let mut found = false;
        'bfs: while let Some(x) = queue.pop_front() {
            for n in self.pair.neighbors(&x) {
                if !self.scope.contains_unit(n) {
                    continue;
                }
                let y = x.with_unit(n);
                if !seen.insert(y.clone()) {
                    continue;
                }
                let st = self.status(&y);
                if st.admissible() {
                    found = true;
                    break 'bfs;
                }
                if !st.dead {
                    queue.push_back(y);
                }
                if seen.len() > MAXIMALITY_BUDGET {
                    found = true;
                    break 'bfs;
                }
            }
        }
        self.reachable.insert(w.clone(), found);
        found
    }

    /// With several verifiers, a window can be as large as one of them
    /// allows while another still lets it grow. Such a window is worth
    /// verifying at its current size as well.
    pub fn maximal_for_some_ev(&mut self, w: &Window, unions: &[(Option<usize>, Window)]) -> bool {
        if self.evs.provers().count() < 2 {
            return false;
        }
        let st = self.status(w);
        if !st.verifiable() {
            return false;
        }
        let grown: Vec<WindowStatus> = unions.iter().map(|(_, u)| self.status(u)).collect();
        (0..st.valid_for.len()).any(|e| st.proving[e] && st.valid_for[e] && grown.iter().all(|g| !(g.connected && g.valid_for[e])))
    }

    /// Decides how a window grows given the unions with its neighbors.
    pub fn expand(&mut self, w: &Window, unions: Vec<(Option<usize>, Window)>) -> Expansion {
        let non_monotonic = self.non_monotonic();
        let mut valid = Vec::new();
        let mut passable = Vec::new();
        for (k, u) in unions {
            let st = self.status(&u);
            if !st.connected {
                continue;
            }
            if st.admissible() {
                valid.push((k, u));
            } else if non_monotonic && !st.dead {
                passable.push((k, u));
            }
        }
        if !non_monotonic {
            return if valid.is_empty() { Expansion::Maximal } else { Expansion::Candidates(valid) };
        }
        if !valid.is_empty() {
            valid.extend(passable);
            return Expansion::Candidates(valid);
        }
        if self.status(w).admissible() {
            if passable.is_empty() || !self.has_valid_superwindow(w) {
                Expansion::Maximal
            } else {
                Expansion::Candidates(passable)
            }
        } else if passable.is_empty() || !self.has_valid_superwindow(w) {
            Expansion::Dead
        } else {
            Expansion::Candidates(passable)
        }
    }

    pub fn report(&self, verdict: Verdict, reason: StopReason) -> SearchReport {
        SearchReport {
            verdict,
            reason,
            decompositions_explored: self.explored,
            ev_calls: self.ev_calls,
            witness: None,
            empty_side_windows: self.empty_side,
        }
    }

    fn is_whole_pair(&self, w: &Window) -> bool {
        w.len() == self.pair.unit_count()
    }

    /// Reports Unknown unless the scope is the whole pair and a refuting
    /// verifier shows the versions differ.
    pub fn give_up(&mut self, reason: StopReason) -> SearchReport {
        if self.is_whole_pair(&self.scope) {
            if let Some(refuters) = self.evs.refuters() {
                let w = self.pair.full_window();
                let d = refuters.dispatch(self.pair, &w, &refuters.status(self.pair, &w));
                self.ev_calls += d.calls;
                if d.verdict.verdict == Verdict::False {
                    return refutation(self, d);
                }
            }
        }
        self.report(Verdict::Unknown, reason)
    }
}

struct Ranked {
    score: DecompositionScore,
    seq: u64,
    item: Decomposition,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.compare(&other.score).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

enum Frontier {
    Fifo(VecDeque<Decomposition>),
    Best(BinaryHeap<Ranked>, u64),
}

impl Frontier {
    fn new(ranking: bool) -> Self {
        if ranking {
            Frontier::Best(BinaryHeap::new(), 0)
        } else {
            Frontier::Fifo(VecDeque::new())
        }
    }

    fn push(&mut self, d: Decomposition) {
        match self {
            Frontier::Fifo(q) => q.push_back(d),
            Frontier::Best(h, seq) => {
                *seq += 1;
                h.push(Ranked { score: d.score(), seq: *seq, item: d });
            }
        }
    }

    fn pop(&mut self) -> Option<Decomposition> {
        match self {
            Frontier::Fifo(q) => q.pop_front(),
            Frontier::Best(h, _) => h.pop().map(|r| r.item),
        }
    }
}

/// Searches decompositions of `scope` for one whose covering windows are
/// all verified equivalent.
pub(crate) fn search_scope(pair: &VersionPair, evs: &EvSet, opts: &SearchOptions, scope: Window) -> SearchReport {
    let mut eng = Engine::new(pair, evs, opts, scope);
    let init = Decomposition::initial_in(pair, &eng.scope);
    if init.covering.is_empty() {
        return eng.report(Verdict::True, StopReason::Decided);
    }
    let mut frontier = Frontier::new(opts.ranking);
    let mut seen: FxHashSet<Vec<(Window, bool)>> = FxHashSet::default();
    let mut refuted: FxHashSet<Window> = FxHashSet::default();
    seen.insert(init.key());
    frontier.push(init);

    while let Some(mut theta) = frontier.pop() {
        if eng.timed_out() {
            return eng.give_up(StopReason::Timeout);
        }
        if theta.covering.iter().any(|c| refuted.contains(&c.window)) {
            continue;
        }
        eng.explored += 1;
        let mut merges: Vec<(usize, Option<usize>, Window)> = Vec::new();
        let mut settle: Vec<usize> = Vec::new();
        let mut discard = false;
        for j in 0..theta.covering.len() {
            if theta.covering[j].maximal {
                continue;
            }
            let wj = theta.covering[j].window.clone();
            let unions = theta.neighbor_unions(pair, j);
            let settle_here = eng.maximal_for_some_ev(&wj, &unions);
            match eng.expand(&wj, unions) {
                super::Expansion::Candidates(list) => {
                    merges.extend(list.into_iter().map(|(k, u)| (j, k, u)));
                    if settle_here {
                        settle.push(j);
                    }
                }
                super::Expansion::Maximal => {
                    theta.covering[j].maximal = true;
                    if opts.pruning {
                        let d = eng.verify(&wj);
                        if d.verdict.verdict == Verdict::False {
                            if eng.is_whole_pair(&wj) {
                                return refutation(&eng, d);
                            }
                            refuted.insert(wj);
                            discard = true;
                            break;
                        }
                    }
                }
                super::Expansion::Dead => {
                    discard = true;
                    break;
                }
            }
        }
        if discard {
            continue;
        }
        for (j, k, u) in merges {
            let next = theta.merge(j, k, u);
            if !opts.memoize || seen.insert(next.key()) {
                frontier.push(next);
            }
        }
        for j in settle {
            let mut next = theta.clone();
            next.covering[j].maximal = true;
            if !opts.memoize || seen.insert(next.key()) {
                frontier.push(next);
            }
        }
        if theta.all_maximal() {
            let mut proof = Vec::new();
            let mut all_true = true;
            for c in &theta.covering {
                let (used, d) = eng.verify_with_history(&c.window, &c.history);
                match d.verdict.verdict {
                    Verdict::True => proof.push(VerifiedWindow {
                        window: pair.describe(&used),
                        ev: d.by.clone().unwrap_or_default(),
                    }),
                    Verdict::False if theta.covering.len() == 1 && eng.is_whole_pair(&used) => {
                        return refutation(&eng, d);
                    }
                    _ => {
                        all_true = false;
                        break;
                    }
                }
            }
            if all_true {
                let mut report = eng.report(Verdict::True, StopReason::Decided);
                report.witness = Some(Witness::Decomposition(proof));
                return report;
            }
        }
    }
    eng.give_up(StopReason::Exhausted)
}

fn refutation(eng: &Engine<'_>, d: Dispatch) -> SearchReport {
    let mut report = eng.report(Verdict::False, StopReason::Decided);
    report.witness = d.verdict.counterexample.map(Witness::Counterexample);
    report
}

/// The decomposition search over the whole pair with the given options.
pub fn verify_pair(pair: &VersionPair, evs: &EvSet, opts: &SearchOptions) -> SearchReport {
    if pair.changes().is_empty() {
        let mut r = SearchReport::new(Verdict::True, StopReason::Decided);
        r.witness = Some(Witness::Decomposition(Vec::new()));
        return r;
    }
    search_scope(pair, evs, opts, pair.full_window())
}

/// The unoptimized search: FIFO order, no pruning.
pub fn verify_pair_baseline(pair: &VersionPair, evs: &EvSet, opts: &SearchOptions) -> SearchReport {
    let opts = SearchOptions { pruning: false, ranking: false, ..opts.clone() };
    verify_pair(pair, evs, &opts)
}
