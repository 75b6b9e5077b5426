//! Window maximization for a single change.

use std::collections::VecDeque;

use rustc_hash::FxHashSet;

use super::search::Engine;
use super::{Expansion, SearchOptions, SearchReport, StopReason, VerifiedWindow, Witness};
use crate::ev::{EvSet, Verdict};
use crate::window::{VersionPair, Window};

/// Explores windows grown from the change's initial covering window and
/// calls `on_maximal` for each maximal one in exploration order; stops
/// early when it returns `Some`.
fn explore<T>(
    eng: &mut Engine<'_>,
    change: usize,
    mut on_maximal: impl FnMut(&mut Engine<'_>, &Window) -> Option<T>,
) -> Result<Option<T>, StopReason> {
    let start = eng.pair.initial_covering_window(change);
    let mut seen: FxHashSet<Window> = FxHashSet::from_iter([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(w) = queue.pop_front() {
        if eng.timed_out() {
            return Err(StopReason::Timeout);
        }
        eng.explored += 1;
        let unions: Vec<(Option<usize>, Window)> = eng
            .pair
            .neighbors(&w)
            .into_iter()
            .filter(|&n| eng.scope.contains_unit(n))
            .map(|n| (None, w.with_unit(n)))
            .collect();
        if eng.maximal_for_some_ev(&w, &unions) {
            if let Some(t) = on_maximal(eng, &w) {
                return Ok(Some(t));
            }
        }
        match eng.expand(&w, unions) {
            Expansion::Candidates(list) => {
                for (_, u) in list {
                    if !eng.opts.memoize || seen.insert(u.clone()) {
                        queue.push_back(u);
                    }
                }
            }
            Expansion::Maximal => {
                if let Some(t) = on_maximal(eng, &w) {
                    return Ok(Some(t));
                }
            }
            Expansion::Dead => {}
        }
    }
    Ok(None)
}

/// Maximizes windows around one change and asks the verifiers about each
/// maximal window: True on the first equivalent one, False only when the
/// maximal window is the whole pair and is refuted.
pub fn verify_single_edit(pair: &VersionPair, change: usize, evs: &EvSet, opts: &SearchOptions) -> SearchReport {
    let mut eng = Engine::new(pair, evs, opts, pair.full_window());
    let whole = pair.unit_count();
    let outcome = explore(&mut eng, change, |eng, w| {
        let d = eng.verify(w);
        match d.verdict.verdict {
            Verdict::True => {
                Some((Verdict::True, Witness::Decomposition(vec![VerifiedWindow { window: eng.pair.describe(w), ev: d.by.unwrap_or_default() }])))
            }
            Verdict::False if w.len() == whole => d.verdict.counterexample.map(|c| (Verdict::False, Witness::Counterexample(c))),
            _ => None,
        }
    });
    match outcome {
        Ok(Some((verdict, witness))) => {
            let mut r = eng.report(verdict, StopReason::Decided);
            r.witness = Some(witness);
            r
        }
        Ok(None) => eng.give_up(StopReason::Exhausted),
        Err(reason) => eng.give_up(reason),
    }
}

/// The maximal covering windows of one change: valid windows covering it
/// that no other valid covering window properly contains.
pub fn find_mcws(pair: &VersionPair, change: usize, evs: &EvSet, opts: &SearchOptions) -> Vec<Window> {
    let mut eng = Engine::new(pair, evs, opts, pair.full_window());
    let mut found: Vec<Window> = Vec::new();
    // Deadline expiry leaves whatever was found so far.
    let _ = explore(&mut eng, change, |eng, w| {
        if eng.status(w).verifiable() && !found.contains(w) {
            found.push(w.clone());
        }
        None::<()>
    });
    let mut mcws: Vec<Window> =
        found.iter().filter(|w| !found.iter().any(|o| o != *w && w.is_within(o))).cloned().collect();
    mcws.sort();
    mcws
}
