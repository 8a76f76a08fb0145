//! Transition labeling and observation handling: projection of runs onto
//! the observable transitions, prefix views, and the order-dropped multiset
//! view.

use std::collections::{BTreeMap, BTreeSet};

use crate::net::{NetError, NetSystem, TransitionId};

/// Partition of a net's transitions into observable and unobservable, with
/// the fault transitions singled out. Faults are always unobservable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeling {
    observable: BTreeSet<TransitionId>,
    fault: BTreeSet<TransitionId>,
}

impl Labeling {
    pub fn new(
        observable: BTreeSet<TransitionId>,
        fault: BTreeSet<TransitionId>,
    ) -> Result<Self, NetError> {
        if let Some(&t) = fault.intersection(&observable).next() {
            return Err(NetError::FaultNotUnobservable {
                transition: format!("#{}", t.index()),
            });
        }
        Ok(Self { observable, fault })
    }

    pub fn is_observable(&self, t: TransitionId) -> bool {
        self.observable.contains(&t)
    }

    pub fn is_fault(&self, t: TransitionId) -> bool {
        self.fault.contains(&t)
    }

    pub fn observable(&self) -> &BTreeSet<TransitionId> {
        &self.observable
    }

    pub fn fault(&self) -> &BTreeSet<TransitionId> {
        &self.fault
    }
}

/// An ordered list of observable transition firings, as seen from outside
/// the system.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Observation {
    events: Vec<TransitionId>,
}

impl Observation {
    /// Builds an observation, rejecting events that are not observable
    /// transitions of `net`.
    pub fn new(net: &NetSystem, events: Vec<TransitionId>) -> Result<Self, NetError> {
        for &t in &events {
            if t.index() >= net.transition_count() {
                return Err(NetError::UnknownTransition { index: t.index() });
            }
            if !net.labeling().is_observable(t) {
                return Err(NetError::NotObservable {
                    transition: net.transition_name(t).to_owned(),
                });
            }
        }
        Ok(Self { events })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[TransitionId] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// All prefixes from the empty observation up to the full one;
    /// `prefixes()[i]` holds the first `i` events.
    pub fn prefixes(&self) -> Vec<Observation> {
        (0..=self.events.len())
            .map(|i| Observation {
                events: self.events[..i].to_vec(),
            })
            .collect()
    }

    /// Forgets the order of events, keeping their counts.
    pub fn to_multiset(&self) -> ObservationMultiset {
        let mut counts = BTreeMap::new();
        for &t in &self.events {
            *counts.entry(t).or_insert(0usize) += 1;
        }
        ObservationMultiset { counts }
    }
}

/// The order-dropped view of an observation: event counts only.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObservationMultiset {
    counts: BTreeMap<TransitionId, usize>,
}

impl ObservationMultiset {
    pub fn counts(&self) -> &BTreeMap<TransitionId, usize> {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Removes the unobservable transitions from a firing sequence, keeping the
/// order of what remains.
pub fn project(labeling: &Labeling, s: &[TransitionId]) -> Observation {
    Observation {
        events: s
            .iter()
            .copied()
            .filter(|&t| labeling.is_observable(t))
            .collect(),
    }
}
