//! Windows: mapping-closed pairs of connected sub-DAGs of two versions.

mod complete;
mod pair;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::workflow::OpId;

pub use complete::{WindowQuery, VIRTUAL_PREFIX};
pub use pair::{Change, PairError, Unit, VersionPair};
pub use crate::decompose::find_mcws;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WindowError {
    #[error("window is empty")]
    Empty,
    #[error("unknown operator `{0}`")]
    UnknownOperator(OpId),
    #[error("window is not closed under the mapping at `{0}`")]
    ClosureViolated(OpId),
    #[error("{0} side of the window is not connected")]
    Disconnected(&'static str),
}

/// A set of units of a [`VersionPair`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Window {
    bits: FixedBitSet,
}

impl Window {
    pub(crate) fn empty(units: usize) -> Self {
        Window { bits: FixedBitSet::with_capacity(units) }
    }

    pub fn units(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains_unit(&self, unit: usize) -> bool {
        self.bits.contains(unit)
    }

    /// Whether every unit of `self` is in `other`.
    pub fn is_within(&self, other: &Window) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        !self.bits.is_disjoint(&other.bits)
    }

    pub fn union(&self, other: &Window) -> Window {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        Window { bits }
    }

    pub fn with_unit(&self, unit: usize) -> Window {
        let mut bits = self.bits.clone();
        bits.insert(unit);
        Window { bits }
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }
}

/// `w1 ⊆ w2`.
pub fn contains(w1: &Window, w2: &Window) -> bool {
    w1.is_within(w2)
}

pub fn overlaps(w1: &Window, w2: &Window) -> bool {
    w1.overlaps(w2)
}

/// Operator ids on each side of a window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowIds {
    pub p_ops: Vec<OpId>,
    pub q_ops: Vec<OpId>,
}
