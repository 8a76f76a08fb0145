//! Ordinary Petri-net structure, marking arithmetic, and token-game firing
//! semantics.
//!
//! Nets here are ordinary (all arc weights 1): a transition consumes one
//! token from each input place and produces one token in each output place.
//! `NetSystem` is immutable after construction; markings are value-like and
//! freely copyable.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::observation::Labeling;

/// Handle to a place of a specific [`NetSystem`]. Only valid for the net
/// that issued it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId(pub(crate) u32);

impl PlaceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Handle to a transition of a specific [`NetSystem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub(crate) u32);

impl TransitionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An ordered list of transitions; runs and explanations are firing
/// sequences fireable from the initial marking.
pub type FiringSequence = Vec<TransitionId>;

/// Input and output places of a transition. Both are sets (weight-1 arcs);
/// `pre` is never empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pre: Vec<PlaceId>,
    post: Vec<PlaceId>,
}

impl Transition {
    pub fn pre(&self) -> &[PlaceId] {
        &self.pre
    }

    pub fn post(&self) -> &[PlaceId] {
        &self.post
    }
}

/// Token counts per place, stored sparsely: places absent from the map hold
/// zero tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking {
    counts: BTreeMap<PlaceId, u64>,
}

impl Marking {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, place: PlaceId) -> u64 {
        self.counts.get(&place).copied().unwrap_or(0)
    }

    /// Sets the token count of a place; zero entries are dropped so that
    /// equal markings compare equal regardless of construction path.
    pub fn set(&mut self, place: PlaceId, count: u64) {
        if count == 0 {
            self.counts.remove(&place);
        } else {
            self.counts.insert(place, count);
        }
    }

    pub fn add(&mut self, place: PlaceId, delta: u64) {
        let next = self.count(place) + delta;
        self.set(place, next);
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Iterates over places with a strictly positive count.
    pub fn tokens(&self) -> impl Iterator<Item = (PlaceId, u64)> + '_ {
        self.counts.iter().map(|(&p, &c)| (p, c))
    }

    /// Pointwise comparison: every count of `self` is at most the count in
    /// `other`.
    pub fn le(&self, other: &Marking) -> bool {
        self.tokens().all(|(p, c)| c <= other.count(p))
    }
}

impl FromIterator<(PlaceId, u64)> for Marking {
    fn from_iter<I: IntoIterator<Item = (PlaceId, u64)>>(iter: I) -> Self {
        let mut m = Marking::new();
        for (p, c) in iter {
            m.add(p, c);
        }
        m
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("unknown transition id #{index}")]
    UnknownTransition { index: usize },
    #[error("unknown place id #{index}")]
    UnknownPlace { index: usize },
    #[error("transition {transition} is not enabled")]
    NotEnabled { transition: String },
    #[error("step {step}: transition {transition} is not enabled")]
    StepDisabled {
        step: usize,
        transition: String,
        at: Marking,
    },
    #[error("duplicate place name {name:?}")]
    DuplicatePlaceName { name: String },
    #[error("duplicate transition name {name:?}")]
    DuplicateTransitionName { name: String },
    #[error("transition {transition} has an empty pre-set")]
    EmptyPre { transition: String },
    #[error("transition {transition} is labeled fault but not unobservable")]
    FaultNotUnobservable { transition: String },
    #[error("transition {transition} is not observable")]
    NotObservable { transition: String },
}

/// Label attached to a transition at construction time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransitionKind {
    Observable,
    Unobservable,
    /// Fault transitions are unobservable by definition.
    Fault,
}

/// Incremental construction of a [`NetSystem`]; `build` runs the structural
/// validation.
#[derive(Default)]
pub struct NetBuilder {
    places: Vec<String>,
    transitions: Vec<(String, Vec<PlaceId>, Vec<PlaceId>, TransitionKind)>,
    initial: Vec<(PlaceId, u64)>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, name: &str) -> PlaceId {
        let id = PlaceId(self.places.len() as u32);
        self.places.push(name.to_owned());
        id
    }

    pub fn transition(
        &mut self,
        name: &str,
        kind: TransitionKind,
        pre: &[PlaceId],
        post: &[PlaceId],
    ) -> TransitionId {
        let id = TransitionId(self.transitions.len() as u32);
        self.transitions
            .push((name.to_owned(), pre.to_vec(), post.to_vec(), kind));
        id
    }

    pub fn initial_tokens(&mut self, place: PlaceId, count: u64) -> &mut Self {
        self.initial.push((place, count));
        self
    }

    pub fn build(self) -> Result<NetSystem, NetError> {
        let mut place_lookup = BTreeMap::new();
        for (i, name) in self.places.iter().enumerate() {
            if place_lookup
                .insert(name.clone(), PlaceId(i as u32))
                .is_some()
            {
                return Err(NetError::DuplicatePlaceName { name: name.clone() });
            }
        }

        let place_count = self.places.len();
        let check_place = |p: PlaceId| {
            if p.index() < place_count {
                Ok(p)
            } else {
                Err(NetError::UnknownPlace { index: p.index() })
            }
        };

        let mut transition_lookup = BTreeMap::new();
        let mut transitions = Vec::with_capacity(self.transitions.len());
        let mut transition_names = Vec::with_capacity(self.transitions.len());
        let mut observable = BTreeSet::new();
        let mut fault = BTreeSet::new();
        for (i, (name, pre, post, kind)) in self.transitions.into_iter().enumerate() {
            let id = TransitionId(i as u32);
            if transition_lookup.insert(name.clone(), id).is_some() {
                return Err(NetError::DuplicateTransitionName { name });
            }
            if pre.is_empty() {
                return Err(NetError::EmptyPre { transition: name });
            }
            let mut pre: Vec<PlaceId> =
                pre.into_iter().map(check_place).collect::<Result<_, _>>()?;
            let mut post: Vec<PlaceId> = post
                .into_iter()
                .map(check_place)
                .collect::<Result<_, _>>()?;
            pre.sort_unstable();
            pre.dedup();
            post.sort_unstable();
            post.dedup();
            match kind {
                TransitionKind::Observable => {
                    observable.insert(id);
                }
                TransitionKind::Unobservable => {}
                TransitionKind::Fault => {
                    fault.insert(id);
                }
            }
            transitions.push(Transition { pre, post });
            transition_names.push(name);
        }

        let mut initial = Marking::new();
        for (p, c) in self.initial {
            check_place(p)?;
            initial.add(p, c);
        }

        let labeling = Labeling::new(observable, fault).map_err(|e| match e {
            NetError::FaultNotUnobservable { transition } => {
                let idx: usize = transition.trim_start_matches('#').parse().unwrap_or(0);
                NetError::FaultNotUnobservable {
                    transition: transition_names.get(idx).cloned().unwrap_or(transition),
                }
            }
            other => other,
        })?;

        Ok(NetSystem {
            place_names: self.places,
            transition_names,
            transitions,
            initial,
            labeling,
            place_lookup,
            transition_lookup,
        })
    }
}

/// A Petri net together with its initial marking and transition labeling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetSystem {
    place_names: Vec<String>,
    transition_names: Vec<String>,
    transitions: Vec<Transition>,
    initial: Marking,
    labeling: Labeling,
    place_lookup: BTreeMap<String, PlaceId>,
    transition_lookup: BTreeMap<String, TransitionId>,
}

impl NetSystem {
    pub fn builder() -> NetBuilder {
        NetBuilder::new()
    }

    pub fn place_count(&self) -> usize {
        self.place_names.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn places(&self) -> impl Iterator<Item = PlaceId> + '_ {
        (0..self.place_names.len() as u32).map(PlaceId)
    }

    pub fn transitions(&self) -> impl Iterator<Item = TransitionId> + '_ {
        (0..self.transitions.len() as u32).map(TransitionId)
    }

    /// Panics if `id` did not come from this net.
    pub fn place_name(&self, id: PlaceId) -> &str {
        &self.place_names[id.index()]
    }

    /// Panics if `id` did not come from this net.
    pub fn transition_name(&self, id: TransitionId) -> &str {
        &self.transition_names[id.index()]
    }

    pub fn transition(&self, id: TransitionId) -> &Transition {
        &self.transitions[id.index()]
    }

    pub fn place_id(&self, name: &str) -> Option<PlaceId> {
        self.place_lookup.get(name).copied()
    }

    pub fn transition_id(&self, name: &str) -> Option<TransitionId> {
        self.transition_lookup.get(name).copied()
    }

    pub fn initial(&self) -> &Marking {
        &self.initial
    }

    pub fn labeling(&self) -> &Labeling {
        &self.labeling
    }

    fn checked(&self, t: TransitionId) -> Result<&Transition, NetError> {
        self.transitions
            .get(t.index())
            .ok_or(NetError::UnknownTransition { index: t.index() })
    }

    pub(crate) fn enabled_unchecked(&self, m: &Marking, t: TransitionId) -> bool {
        self.transitions[t.index()]
            .pre
            .iter()
            .all(|&p| m.count(p) >= 1)
    }

    pub(crate) fn fire_unchecked(&self, m: &Marking, t: TransitionId) -> Marking {
        let tr = &self.transitions[t.index()];
        let mut next = m.clone();
        for &p in &tr.pre {
            let c = next.count(p);
            debug_assert!(c >= 1, "fire_unchecked on a disabled transition");
            next.set(p, c - 1);
        }
        for &p in &tr.post {
            next.add(p, 1);
        }
        next
    }

    /// True iff every input place of `t` holds at least one token in `m`.
    pub fn is_enabled(&self, m: &Marking, t: TransitionId) -> Result<bool, NetError> {
        self.checked(t)?;
        Ok(self.enabled_unchecked(m, t))
    }

    /// Fires `t` in `m`, producing the successor marking. The input marking
    /// is untouched; firing a disabled transition is a hard error.
    pub fn fire(&self, m: &Marking, t: TransitionId) -> Result<Marking, NetError> {
        self.checked(t)?;
        if !self.enabled_unchecked(m, t) {
            return Err(NetError::NotEnabled {
                transition: self.transition_name(t).to_owned(),
            });
        }
        Ok(self.fire_unchecked(m, t))
    }

    /// Folds [`fire`](Self::fire) over `s`; on failure the error identifies
    /// the first disabled step and the marking it was attempted in.
    pub fn fire_sequence(&self, m: &Marking, s: &[TransitionId]) -> Result<Marking, NetError> {
        let mut current = m.clone();
        for (step, &t) in s.iter().enumerate() {
            self.checked(t)?;
            if !self.enabled_unchecked(&current, t) {
                return Err(NetError::StepDisabled {
                    step,
                    transition: self.transition_name(t).to_owned(),
                    at: current,
                });
            }
            current = self.fire_unchecked(&current, t);
        }
        Ok(current)
    }

    /// All transitions enabled in `m`.
    pub fn enabled_set(&self, m: &Marking) -> BTreeSet<TransitionId> {
        self.transitions()
            .filter(|&t| self.enabled_unchecked(m, t))
            .collect()
    }

    /// Validates the structural assumptions diagnosis relies on: the subnet
    /// of unobservable transitions must be acyclic and at least one fault
    /// transition should exist. Findings are reported, never raised.
    pub fn check_structure(&self) -> StructureReport {
        let cycle_witness = self.find_unobservable_cycle();
        let fault_count = self.labeling.fault().len();
        let mut findings = Vec::new();
        if fault_count == 0 {
            findings.push(
                "net declares no fault transition; diagnosis operations will reject it".to_owned(),
            );
        }
        StructureReport {
            acyclic_unobservable: cycle_witness.is_none(),
            cycle_witness,
            fault_count,
            findings,
        }
    }

    /// Cycle search over the directed graph of places and unobservable
    /// transitions (arcs restricted to unobservable pre/post edges).
    /// Returns a witness path, alternating place and transition names with
    /// the first node repeated at the end.
    fn find_unobservable_cycle(&self) -> Option<Vec<String>> {
        // Node numbering: places first, then transitions offset by place count.
        let p_count = self.place_count();
        let node_count = p_count + self.transition_count();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); node_count];
        for t in self.transitions() {
            if self.labeling.is_observable(t) {
                continue;
            }
            let tn = p_count + t.index();
            for &p in self.transition(t).pre() {
                succ[p.index()].push(tn);
            }
            for &p in self.transition(t).post() {
                succ[tn].push(p.index());
            }
        }

        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let mut color = vec![WHITE; node_count];
        let mut path: Vec<usize> = Vec::new();

        // Iterative DFS; stack entries are (node, next-successor-index).
        for start in 0..node_count {
            if color[start] != WHITE {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            color[start] = GRAY;
            path.push(start);
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if *next < succ[node].len() {
                    let child = succ[node][*next];
                    *next += 1;
                    match color[child] {
                        WHITE => {
                            color[child] = GRAY;
                            path.push(child);
                            stack.push((child, 0));
                        }
                        GRAY => {
                            // Found a cycle: close the loop from child.
                            let from = path.iter().position(|&n| n == child).expect("on path");
                            let mut cycle: Vec<usize> = path[from..].to_vec();
                            cycle.push(child);
                            // Rotate so the witness starts at a place.
                            if let Some(k) = cycle.iter().position(|&n| n < p_count) {
                                cycle.pop();
                                cycle.rotate_left(k);
                                cycle.push(cycle[0]);
                            }
                            let names = cycle
                                .into_iter()
                                .map(|n| {
                                    if n < p_count {
                                        self.place_names[n].clone()
                                    } else {
                                        self.transition_names[n - p_count].clone()
                                    }
                                })
                                .collect();
                            return Some(names);
                        }
                        _ => {}
                    }
                } else {
                    color[node] = BLACK;
                    path.pop();
                    stack.pop();
                }
            }
        }
        None
    }

    /// Renders a firing sequence or observation as `[a,b,c]` using this
    /// net's transition names.
    pub fn format_sequence(&self, s: &[TransitionId]) -> String {
        let names: Vec<&str> = s.iter().map(|&t| self.transition_name(t)).collect();
        format!("[{}]", names.join(","))
    }

    /// Renders a marking as `{p1:1,p2:1}` using this net's place names.
    pub fn format_marking(&self, m: &Marking) -> String {
        let parts: Vec<String> = m
            .tokens()
            .map(|(p, c)| format!("{}:{}", self.place_name(p), c))
            .collect();
        format!("{{{}}}", parts.join(","))
    }
}

/// Outcome of [`NetSystem::check_structure`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureReport {
    pub acyclic_unobservable: bool,
    /// Alternating place/transition names, first node repeated at the end.
    pub cycle_witness: Option<Vec<String>>,
    pub fault_count: usize,
    pub findings: Vec<String>,
}
