//! Enumeration of the firing sequences ("explanations") consistent with an
//! observation, under two semantics:
//!
//! * ordered — the projection of the explanation equals the observation,
//!   event for event;
//! * multiset — only the event counts of the projection must match, the
//!   order is dropped.
//!
//! Explanations end at their last observable firing (trailing unobservable
//! suffixes are cut), so the empty observation has exactly one explanation,
//! the empty sequence.
//!
//! Termination between observable firings is structural: on nets whose
//! unobservable subnet is acyclic, every unobservable firing strictly
//! decreases a well-founded measure over token positions, so unobservable
//! segments are finite. [`SearchBudget`] is an engineering guard on top of
//! that, never a semantics knob: exceeding it is a hard error, not a
//! silently truncated answer.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::net::{FiringSequence, Marking, NetSystem, TransitionId};
use crate::observation::{Observation, ObservationMultiset};

/// A firing sequence consistent with some observation, tagged with whether
/// it contains a fault transition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Explanation {
    pub sequence: FiringSequence,
    pub contains_fault: bool,
}

/// Caps on the explanation search. Both limits are strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    max_unobs_segment: usize,
    max_explanations: usize,
}

impl SearchBudget {
    pub fn new(max_unobs_segment: usize, max_explanations: usize) -> Result<Self, ExplainError> {
        if max_unobs_segment == 0 {
            return Err(ExplainError::InvalidBudget("max_unobs_segment"));
        }
        if max_explanations == 0 {
            return Err(ExplainError::InvalidBudget("max_explanations"));
        }
        Ok(Self {
            max_unobs_segment,
            max_explanations,
        })
    }

    /// Generous desk-scale default: segments of ten unobservable firings
    /// per place, at most 100000 explanations.
    pub fn default_for(net: &NetSystem) -> Self {
        Self {
            max_unobs_segment: 10 * net.place_count().max(1),
            max_explanations: 100_000,
        }
    }

    pub fn max_unobs_segment(&self) -> usize {
        self.max_unobs_segment
    }

    pub fn max_explanations(&self) -> usize {
        self.max_explanations
    }
}

/// Which budget cap was hit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetDimension {
    UnobservableSegment,
    ExplanationCount,
}

impl fmt::Display for BudgetDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetDimension::UnobservableSegment => write!(f, "max_unobs_segment"),
            BudgetDimension::ExplanationCount => write!(f, "max_explanations"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExplainError {
    #[error("the unobservable subnet is cyclic; explanation search requires it to be acyclic")]
    CyclicUnobservableSubnet,
    #[error("search budget exhausted: {dimension} = {limit} hit before the search completed")]
    BudgetExhausted {
        dimension: BudgetDimension,
        limit: usize,
    },
    #[error("invalid budget: {0} must be positive")]
    InvalidBudget(&'static str),
}

fn ensure_acyclic(net: &NetSystem) -> Result<(), ExplainError> {
    if net.check_structure().acyclic_unobservable {
        Ok(())
    } else {
        Err(ExplainError::CyclicUnobservableSubnet)
    }
}

fn unobservable_transitions(net: &NetSystem) -> Vec<TransitionId> {
    net.transitions()
        .filter(|&t| !net.labeling().is_observable(t))
        .collect()
}

/// All fireable sequences whose projection equals `o`, ending at their last
/// observable firing. The result is sorted lexicographically by transition
/// index; an observation no run can produce yields an empty set.
pub fn explain_ordered(
    net: &NetSystem,
    o: &Observation,
    budget: &SearchBudget,
) -> Result<BTreeSet<Explanation>, ExplainError> {
    ensure_acyclic(net)?;
    let unobs = unobservable_transitions(net);
    let mut out = BTreeSet::new();
    let mut prefix = Vec::new();
    ordered_dfs(
        net,
        &unobs,
        budget,
        o.events(),
        0,
        net.initial().clone(),
        &mut prefix,
        0,
        &mut out,
    )?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn ordered_dfs(
    net: &NetSystem,
    unobs: &[TransitionId],
    budget: &SearchBudget,
    events: &[TransitionId],
    pos: usize,
    marking: Marking,
    prefix: &mut FiringSequence,
    unobs_run: usize,
    out: &mut BTreeSet<Explanation>,
) -> Result<(), ExplainError> {
    if pos == events.len() {
        // Explanations stop at the last observable firing.
        if out.len() == budget.max_explanations {
            return Err(ExplainError::BudgetExhausted {
                dimension: BudgetDimension::ExplanationCount,
                limit: budget.max_explanations,
            });
        }
        let contains_fault = prefix.iter().any(|&t| net.labeling().is_fault(t));
        out.insert(Explanation {
            sequence: prefix.clone(),
            contains_fault,
        });
        return Ok(());
    }

    let next_obs = events[pos];
    if net.enabled_unchecked(&marking, next_obs) {
        let fired = net.fire_unchecked(&marking, next_obs);
        prefix.push(next_obs);
        ordered_dfs(net, unobs, budget, events, pos + 1, fired, prefix, 0, out)?;
        prefix.pop();
    }

    for &t in unobs {
        if net.enabled_unchecked(&marking, t) {
            if unobs_run == budget.max_unobs_segment {
                return Err(ExplainError::BudgetExhausted {
                    dimension: BudgetDimension::UnobservableSegment,
                    limit: budget.max_unobs_segment,
                });
            }
            let fired = net.fire_unchecked(&marking, t);
            prefix.push(t);
            ordered_dfs(
                net,
                unobs,
                budget,
                events,
                pos,
                fired,
                prefix,
                unobs_run + 1,
                out,
            )?;
            prefix.pop();
        }
    }
    Ok(())
}

/// All fireable sequences whose projection has exactly the event counts of
/// `ms` (order dropped), ending at their last observable firing. Equivalent
/// to the union of [`explain_ordered`] over all distinct orderings of `ms`.
pub fn explain_multiset(
    net: &NetSystem,
    ms: &ObservationMultiset,
    budget: &SearchBudget,
) -> Result<BTreeSet<Explanation>, ExplainError> {
    ensure_acyclic(net)?;
    let keys: Vec<TransitionId> = ms.counts().keys().copied().collect();
    let remaining: Vec<usize> = ms.counts().values().copied().collect();
    let mut search = MultisetSearch {
        net,
        unobs: unobservable_transitions(net),
        keys,
        budget: *budget,
        memo: HashMap::new(),
    };
    let suffixes = search.suffixes(net.initial().clone(), remaining, 0)?;
    let mut out = BTreeSet::new();
    for seq in suffixes.iter() {
        let contains_fault = seq.iter().any(|&t| net.labeling().is_fault(t));
        out.insert(Explanation {
            sequence: seq.clone(),
            contains_fault,
        });
    }
    Ok(out)
}

/// Depth-first search with memoization on (marking, consumed-count vector).
/// The consecutive-unobservable counter is part of the key so that budget
/// overflow detection stays sound; entries with a zero counter (right after
/// an observable firing) carry almost all of the reuse.
struct MultisetSearch<'a> {
    net: &'a NetSystem,
    unobs: Vec<TransitionId>,
    keys: Vec<TransitionId>,
    budget: SearchBudget,
    memo: HashMap<(Marking, Vec<usize>, usize), Rc<Vec<FiringSequence>>>,
}

impl MultisetSearch<'_> {
    fn suffixes(
        &mut self,
        marking: Marking,
        remaining: Vec<usize>,
        unobs_run: usize,
    ) -> Result<Rc<Vec<FiringSequence>>, ExplainError> {
        let key = (marking, remaining, unobs_run);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let (marking, remaining, unobs_run) = key.clone();

        let mut acc: Vec<FiringSequence> = Vec::new();
        if remaining.iter().all(|&c| c == 0) {
            acc.push(Vec::new());
        } else {
            for i in 0..self.keys.len() {
                let t = self.keys[i];
                if remaining[i] == 0 || !self.net.enabled_unchecked(&marking, t) {
                    continue;
                }
                let fired = self.net.fire_unchecked(&marking, t);
                let mut next_remaining = remaining.clone();
                next_remaining[i] -= 1;
                let tails = self.suffixes(fired, next_remaining, 0)?;
                self.extend(&mut acc, t, &tails)?;
            }
            for i in 0..self.unobs.len() {
                let t = self.unobs[i];
                if !self.net.enabled_unchecked(&marking, t) {
                    continue;
                }
                if unobs_run == self.budget.max_unobs_segment() {
                    return Err(ExplainError::BudgetExhausted {
                        dimension: BudgetDimension::UnobservableSegment,
                        limit: self.budget.max_unobs_segment(),
                    });
                }
                let fired = self.net.fire_unchecked(&marking, t);
                let tails = self.suffixes(fired, remaining.clone(), unobs_run + 1)?;
                self.extend(&mut acc, t, &tails)?;
            }
        }

        let entry = Rc::new(acc);
        self.memo
            .insert((marking, remaining, unobs_run), entry.clone());
        Ok(entry)
    }

    fn extend(
        &self,
        acc: &mut Vec<FiringSequence>,
        head: TransitionId,
        tails: &[FiringSequence],
    ) -> Result<(), ExplainError> {
        for tail in tails {
            if acc.len() == self.budget.max_explanations() {
                return Err(ExplainError::BudgetExhausted {
                    dimension: BudgetDimension::ExplanationCount,
                    limit: self.budget.max_explanations(),
                });
            }
            let mut seq = Vec::with_capacity(1 + tail.len());
            seq.push(head);
            seq.extend_from_slice(tail);
            acc.push(seq);
        }
        Ok(())
    }
}

/// Brute-force enumeration of every fireable sequence of length at most
/// `max_len` from the initial marking, the empty run included. This is the
/// independent oracle the search-based operations are tested against.
pub fn enumerate_runs(net: &NetSystem, max_len: usize) -> BTreeSet<FiringSequence> {
    let mut out = BTreeSet::new();
    let mut prefix = Vec::new();
    enumerate_dfs(net, max_len, net.initial().clone(), &mut prefix, &mut out);
    out
}

fn enumerate_dfs(
    net: &NetSystem,
    max_len: usize,
    marking: Marking,
    prefix: &mut FiringSequence,
    out: &mut BTreeSet<FiringSequence>,
) {
    out.insert(prefix.clone());
    if prefix.len() == max_len {
        return;
    }
    for t in net.transitions() {
        if net.enabled_unchecked(&marking, t) {
            let fired = net.fire_unchecked(&marking, t);
            prefix.push(t);
            enumerate_dfs(net, max_len, fired, prefix, out);
            prefix.pop();
        }
    }
}
