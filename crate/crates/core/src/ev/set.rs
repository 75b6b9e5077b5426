//! An ordered set of verifiers consulted together.

use serde::Serialize;

use super::{restriction_violations, verify_window, EvDescriptor, EvVerdict, Verdict, WindowSides};
use crate::window::{VersionPair, Window};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("at least one verifier is required")]
pub struct EmptyEvSet;

/// Verifiers in the order they are consulted.
#[derive(Debug, Clone)]
pub struct EvSet {
    evs: Vec<EvDescriptor>,
}

/// Restriction status of a window with respect to every verifier of a set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowStatus {
    /// Both sides are connected.
    pub connected: bool,
    /// Neither side is empty.
    pub two_sided: bool,
    /// Per verifier: no restriction is violated.
    pub valid_for: Vec<bool>,
    /// Per verifier: it can prove equivalence, so its restrictions bound
    /// window growth.
    pub proving: Vec<bool>,
    /// No proving verifier can ever accept a window containing this one.
    pub dead: bool,
}

impl WindowStatus {
    /// Structurally sound and within some proving verifier's restrictions;
    /// one side may still be empty.
    pub fn admissible(&self) -> bool {
        self.connected && self.valid_for.iter().zip(&self.proving).any(|(&v, &p)| v && p)
    }

    /// Admissible with both sides present, so it can be sent to a verifier.
    pub fn verifiable(&self) -> bool {
        self.admissible() && self.two_sided
    }
}

/// Outcome of asking the verifiers of a set about one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dispatch {
    pub verdict: EvVerdict,
    /// The verifier whose answer was taken.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub by: Option<String>,
    /// Verifier invocations made.
    pub calls: usize,
}

impl EvSet {
    pub fn new(evs: Vec<EvDescriptor>) -> Result<Self, EmptyEvSet> {
        if evs.is_empty() {
            return Err(EmptyEvSet);
        }
        Ok(EvSet { evs })
    }

    pub fn single(ev: EvDescriptor) -> Self {
        EvSet { evs: vec![ev] }
    }

    pub fn evs(&self) -> &[EvDescriptor] {
        &self.evs
    }

    /// Verifiers that can prove equivalence.
    pub fn provers(&self) -> impl Iterator<Item = &EvDescriptor> {
        self.evs.iter().filter(|e| e.can_prove_equivalence)
    }

    /// Verifiers that only refute, kept for a last attempt on the whole pair.
    pub fn refuters(&self) -> Option<EvSet> {
        let evs: Vec<EvDescriptor> = self.evs.iter().filter(|e| e.can_prove_inequivalence && !e.can_prove_equivalence).cloned().collect();
        EvSet::new(evs).ok()
    }

    /// Whether every proving verifier is restriction monotonic.
    pub fn monotonic(&self) -> bool {
        self.provers().all(|e| e.restriction_monotonic)
    }

    /// Whether some proving verifier accepts windows under relaxed
    /// restrictions.
    pub fn relaxed(&self) -> bool {
        self.provers().any(|e| e.relaxed_restrictions)
    }

    pub fn status(&self, pair: &VersionPair, w: &Window) -> WindowStatus {
        let structure = pair.check_structure(w);
        let sides = WindowSides::new(pair, w);
        let mut valid_for = Vec::with_capacity(self.evs.len());
        let mut dead = true;
        for ev in &self.evs {
            let violations = restriction_violations(ev, pair, &sides);
            if ev.can_prove_equivalence {
                dead &= violations.iter().any(|v| ev.restriction_monotonic || v.permanent);
            }
            valid_for.push(violations.is_empty());
        }
        WindowStatus {
            connected: structure.is_ok(),
            two_sided: !sides.p.members.is_empty() && !sides.q.members.is_empty(),
            valid_for,
            proving: self.evs.iter().map(|e| e.can_prove_equivalence).collect(),
            dead,
        }
    }

    /// Asks, in order, each verifier whose restrictions the window meets;
    /// the first answer other than Unknown wins.
    pub fn dispatch(&self, pair: &VersionPair, w: &Window, status: &WindowStatus) -> Dispatch {
        let mut calls = 0;
        if status.connected && status.two_sided {
            for (ev, _) in self.evs.iter().zip(&status.valid_for).filter(|(_, &ok)| ok) {
                if let Ok(Some(verdict)) = verify_window(ev, pair, w) {
                    calls += 1;
                    if verdict.verdict != Verdict::Unknown {
                        return Dispatch { verdict, by: Some(ev.name.clone()), calls };
                    }
                }
            }
        }
        Dispatch { verdict: EvVerdict::unknown(), by: None, calls }
    }
}
