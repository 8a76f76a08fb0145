//! Shared test utilities: a deterministic random-net generator and the
//! brute-force oracles the search-based operations are checked against.
//!
//! The oracles work purely on `enumerate_runs` plus filtering and never go
//! through the explanation search, so the two sides of every comparison
//! stay independent.

// Each test binary uses its own subset of these helpers.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use pndiag_core::net::{
    FiringSequence, NetBuilder, NetSystem, PlaceId, TransitionId, TransitionKind,
};
use pndiag_core::observation::project;

/// Caps used by the corpus: net sizes per the acceptance grid, plus a run
/// explosion guard so enumeration stays within the suite's time budget.
pub const MAX_PLACES: usize = 8;
pub const MAX_TRANSITIONS: usize = 8;
pub const ORACLE_RUN_LEN: usize = 8;
pub const MAX_OBS_LEN: usize = 4;
const MAX_RUNS: usize = 20_000;

/// Generates a random net system with 2..=8 places, 1..=8 transitions,
/// exactly one fault transition, and an unobservable subnet that is acyclic
/// by construction (unobservable arcs only point from lower-indexed to
/// higher-indexed places). Nets whose length-8 run count explodes are
/// rejected and regenerated.
pub fn random_net(rng: &mut ChaCha8Rng) -> NetSystem {
    loop {
        let net = candidate_net(rng);
        if run_count_within(&net, ORACLE_RUN_LEN, MAX_RUNS) {
            return net;
        }
    }
}

fn candidate_net(rng: &mut ChaCha8Rng) -> NetSystem {
    let place_count = rng.random_range(2..=MAX_PLACES);
    let transition_count = rng.random_range(1..=MAX_TRANSITIONS);

    let mut b = NetBuilder::new();
    let places: Vec<PlaceId> = (0..place_count)
        .map(|i| b.place(&format!("p{i}")))
        .collect();

    let fault_slot = rng.random_range(0..transition_count);
    for i in 0..transition_count {
        let kind = if i == fault_slot {
            TransitionKind::Fault
        } else if transition_count > 1 && i == (fault_slot + 1) % transition_count {
            // Guarantee at least one observable transition.
            TransitionKind::Observable
        } else if rng.random_bool(0.7) {
            TransitionKind::Observable
        } else {
            TransitionKind::Unobservable
        };

        let (pre, post) = match kind {
            TransitionKind::Observable => {
                let pre = pick_places(rng, &places, 1, 2);
                let post = pick_places(rng, &places, 0, 2);
                (pre, post)
            }
            _ => {
                // Unobservable arcs only go forward through the place
                // ordering, which keeps the unobservable subnet acyclic.
                let cutoff = rng.random_range(0..place_count - 1);
                let pre = pick_places(rng, &places[..=cutoff], 1, 2);
                let post = pick_places(rng, &places[cutoff + 1..], 0, 2);
                (pre, post)
            }
        };
        let name = format!("t{i}");
        b.transition(&name, kind, &pre, &post);
    }

    for _ in 0..rng.random_range(2..=4) {
        let p = places[rng.random_range(0..place_count)];
        b.initial_tokens(p, 1);
    }

    b.build().expect("generated nets are structurally valid")
}

fn pick_places(rng: &mut ChaCha8Rng, from: &[PlaceId], min: usize, max: usize) -> Vec<PlaceId> {
    if from.is_empty() {
        return Vec::new();
    }
    let count = rng.random_range(min..=max.min(from.len()));
    let mut out = BTreeSet::new();
    while out.len() < count {
        out.insert(from[rng.random_range(0..from.len())]);
    }
    out.into_iter().collect()
}

/// Counts fireable sequences up to `max_len`, aborting early once `cap` is
/// exceeded.
fn run_count_within(net: &NetSystem, max_len: usize, cap: usize) -> bool {
    fn dfs(
        net: &NetSystem,
        m: pndiag_core::net::Marking,
        depth: usize,
        max_len: usize,
        count: &mut usize,
        cap: usize,
    ) -> bool {
        *count += 1;
        if *count > cap {
            return false;
        }
        if depth == max_len {
            return true;
        }
        for t in net.transitions() {
            if net.is_enabled(&m, t).unwrap() {
                let fired = net.fire(&m, t).unwrap();
                if !dfs(net, fired, depth + 1, max_len, count, cap) {
                    return false;
                }
            }
        }
        true
    }
    let mut count = 0;
    dfs(net, net.initial().clone(), 0, max_len, &mut count, cap)
}

/// The observation an explanation must end on: its last transition is
/// observable, or it is empty.
pub fn ends_observable(net: &NetSystem, run: &[TransitionId]) -> bool {
    run.last().is_none_or(|&t| net.labeling().is_observable(t))
}

/// Oracle for the ordered semantics: filter the brute-force run set.
pub fn oracle_ordered(
    net: &NetSystem,
    runs: &BTreeSet<FiringSequence>,
    events: &[TransitionId],
) -> BTreeSet<FiringSequence> {
    runs.iter()
        .filter(|r| ends_observable(net, r) && project(net.labeling(), r).events() == events)
        .cloned()
        .collect()
}

/// Oracle for the multiset semantics: same filter, order dropped.
pub fn oracle_multiset(
    net: &NetSystem,
    runs: &BTreeSet<FiringSequence>,
    events: &[TransitionId],
) -> BTreeSet<FiringSequence> {
    let target = count_events(events);
    runs.iter()
        .filter(|r| {
            ends_observable(net, r) && count_events(project(net.labeling(), r).events()) == target
        })
        .cloned()
        .collect()
}

fn count_events(events: &[TransitionId]) -> BTreeMap<TransitionId, usize> {
    let mut counts = BTreeMap::new();
    for &t in events {
        *counts.entry(t).or_insert(0usize) += 1;
    }
    counts
}

/// Every distinct observation of length at most `max_obs_len` that the runs
/// in `runs` produce, sorted.
pub fn observations_from_runs(
    net: &NetSystem,
    runs: &BTreeSet<FiringSequence>,
    max_obs_len: usize,
) -> BTreeSet<Vec<TransitionId>> {
    runs.iter()
        .map(|r| project(net.labeling(), r).events().to_vec())
        .filter(|o| o.len() <= max_obs_len)
        .collect()
}

/// The subset of `observations` that is not a proper prefix of another
/// element; diagnosing these covers every prefix verdict of the whole set.
pub fn maximal_observations(observations: &BTreeSet<Vec<TransitionId>>) -> Vec<Vec<TransitionId>> {
    observations
        .iter()
        .filter(|o| {
            !observations
                .iter()
                .any(|other| other.len() > o.len() && other.starts_with(o))
        })
        .cloned()
        .collect()
}
