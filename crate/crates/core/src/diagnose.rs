//! Diagnosis verdicts under the exact (ordered) and efficient
//! (order-dropping, prefix-incremental) semantics, plus a bounded
//! precision and diagnosability analysis that confronts the two.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::explain::{explain_multiset, explain_ordered, ExplainError, Explanation, SearchBudget};
use crate::net::{FiringSequence, Marking, NetSystem, TransitionId};
use crate::observation::Observation;

/// Three-valued diagnosis verdict, with a fourth value for observations no
/// run of the model can produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    NoFault,
    FaultPossible,
    FaultCertain,
    NoExplanation,
}

impl Verdict {
    pub fn from_explanations(set: &BTreeSet<Explanation>) -> Verdict {
        if set.is_empty() {
            return Verdict::NoExplanation;
        }
        let faulty = set.iter().filter(|e| e.contains_fault).count();
        if faulty == 0 {
            Verdict::NoFault
        } else if faulty == set.len() {
            Verdict::FaultCertain
        } else {
            Verdict::FaultPossible
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NoFault => "NO_FAULT",
            Verdict::FaultPossible => "FAULT_POSSIBLE",
            Verdict::FaultCertain => "FAULT_CERTAIN",
            Verdict::NoExplanation => "NO_EXPLANATION",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which semantics produced a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Efficient,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "EXACT",
            Mode::Efficient => "EFFICIENT",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Explanation-set summary and verdict for one observation prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixDiagnosis {
    pub index: usize,
    pub explanation_count: usize,
    pub faulty_count: usize,
    pub verdict: Verdict,
}

/// Per-prefix verdicts for a whole observation. `per_prefix` always has
/// `|o| + 1` entries, the empty prefix included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagnosisTrace {
    pub mode: Mode,
    pub per_prefix: Vec<PrefixDiagnosis>,
    pub final_verdict: Verdict,
    /// Set when a prefix reached FAULT_CERTAIN but a later prefix did not.
    /// Impossible for observations produced by actual runs; indicates a
    /// corrupted or injected observation.
    pub anomalous: bool,
}

impl DiagnosisTrace {
    pub fn first_certain_prefix(&self) -> Option<usize> {
        self.per_prefix
            .iter()
            .find(|p| p.verdict == Verdict::FaultCertain)
            .map(|p| p.index)
    }

    fn assemble(mode: Mode, per_prefix: Vec<PrefixDiagnosis>) -> DiagnosisTrace {
        let last = per_prefix
            .last()
            .expect("at least the empty prefix")
            .verdict;
        let certain = per_prefix
            .iter()
            .any(|p| p.verdict == Verdict::FaultCertain);
        // Fault detection latches across prefixes in efficient mode; the
        // exact final verdict is the full observation's verdict.
        let final_verdict = match mode {
            Mode::Exact => last,
            Mode::Efficient => {
                if certain {
                    Verdict::FaultCertain
                } else {
                    last
                }
            }
        };
        let anomalous = per_prefix.iter().enumerate().any(|(i, p)| {
            p.verdict == Verdict::FaultCertain
                && per_prefix[i..]
                    .iter()
                    .any(|q| q.verdict != Verdict::FaultCertain)
        });
        DiagnosisTrace {
            mode,
            per_prefix,
            final_verdict,
            anomalous,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagnoseError {
    #[error("net declares no fault transition; diagnosis is meaningless without one")]
    NoFaultTransition,
    #[error("bound must be positive")]
    InvalidBound,
    #[error(transparent)]
    Explain(#[from] ExplainError),
}

fn ensure_fault_declared(net: &NetSystem) -> Result<(), DiagnoseError> {
    if net.labeling().fault().is_empty() {
        Err(DiagnoseError::NoFaultTransition)
    } else {
        Ok(())
    }
}

fn summarize(index: usize, set: &BTreeSet<Explanation>) -> PrefixDiagnosis {
    PrefixDiagnosis {
        index,
        explanation_count: set.len(),
        faulty_count: set.iter().filter(|e| e.contains_fault).count(),
        verdict: Verdict::from_explanations(set),
    }
}

/// Exact diagnosis: each prefix is explained under the ordered semantics.
pub fn diagnose_exact(
    net: &NetSystem,
    o: &Observation,
    budget: &SearchBudget,
) -> Result<DiagnosisTrace, DiagnoseError> {
    ensure_fault_declared(net)?;
    let mut per_prefix = Vec::with_capacity(o.len() + 1);
    for (i, prefix) in o.prefixes().iter().enumerate() {
        let set = explain_ordered(net, prefix, budget)?;
        per_prefix.push(summarize(i, &set));
    }
    Ok(DiagnosisTrace::assemble(Mode::Exact, per_prefix))
}

/// Efficient diagnosis: each prefix is explained under the order-dropped
/// multiset semantics, and fault detection latches across prefixes.
pub fn diagnose_efficient(
    net: &NetSystem,
    o: &Observation,
    budget: &SearchBudget,
) -> Result<DiagnosisTrace, DiagnoseError> {
    ensure_fault_declared(net)?;
    let mut per_prefix = Vec::with_capacity(o.len() + 1);
    for (i, prefix) in o.prefixes().iter().enumerate() {
        let set = explain_multiset(net, &prefix.to_multiset(), budget)?;
        per_prefix.push(summarize(i, &set));
    }
    Ok(DiagnosisTrace::assemble(Mode::Efficient, per_prefix))
}

/// Side-by-side differential view of the two semantics on one observation.
pub fn compare(
    net: &NetSystem,
    o: &Observation,
    budget: &SearchBudget,
) -> Result<(DiagnosisTrace, DiagnosisTrace), DiagnoseError> {
    Ok((
        diagnose_exact(net, o, budget)?,
        diagnose_efficient(net, o, budget)?,
    ))
}

/// An observation prefix where the exact diagnoser is certain of the fault
/// but the efficient one is not, together with a faulty run producing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImprecisionWitness {
    pub run: FiringSequence,
    pub observation: Vec<TransitionId>,
    pub exact: Verdict,
    pub efficient: Verdict,
}

/// Result of the bounded precision and diagnosability analysis.
///
/// Detection delay is measured in observable events between the fault
/// firing and the first prefix on which the exact diagnoser reaches
/// FAULT_CERTAIN, maximized over all faulty runs explored; it is `None`
/// when no faulty run exists or when the net is not diagnosable within the
/// bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecisionReport {
    pub bound: usize,
    pub imprecise_witnesses: Vec<ImprecisionWitness>,
    pub diagnosable_within_bound: bool,
    pub detection_delay: Option<usize>,
}

/// Per-observation evaluation used by the breadth-first sweep.
struct ObsEval {
    exact_verdict: Verdict,
    efficient_verdict: Verdict,
    witness_run: Option<FiringSequence>,
    /// Observables that can extend this observation consistently.
    extensions: BTreeSet<TransitionId>,
    /// Faulty explanations of the full observation.
    faulty_runs: Vec<FiringSequence>,
    /// Runs compatible with this observation (explanations possibly
    /// extended by trailing unobservables) that contain the fault and can
    /// reach a marking from which no observable is ever fireable again: the
    /// observation stays frozen, so detection must already have happened.
    has_dead_faulty_run: bool,
    /// Faulty explanations with an observation-dead continuation; these end
    /// within the bound and contribute to the detection delay.
    dead_faulty_runs: Vec<FiringSequence>,
}

fn evaluate_observation(
    net: &NetSystem,
    events: &[TransitionId],
    budget: &SearchBudget,
) -> Result<ObsEval, DiagnoseError> {
    let o = Observation::new(net, events.to_vec()).expect("events are observable");
    let exact_set = explain_ordered(net, &o, budget)?;
    let efficient_set = explain_multiset(net, &o.to_multiset(), budget)?;
    let exact_verdict = Verdict::from_explanations(&exact_set);
    let efficient_verdict = Verdict::from_explanations(&efficient_set);

    let mut extensions = BTreeSet::new();
    let mut faulty_runs = Vec::new();
    let mut has_dead_faulty_run = false;
    let mut dead_faulty_runs = Vec::new();
    for e in &exact_set {
        let end = net
            .fire_sequence(net.initial(), &e.sequence)
            .expect("explanations are fireable");
        extensions.extend(observable_continuations(net, &end, budget)?);
        if e.contains_fault {
            faulty_runs.push(e.sequence.clone());
        }
        if dead_faulty_extension_exists(net, &end, e.contains_fault, 0, budget)? {
            has_dead_faulty_run = true;
            if e.contains_fault {
                dead_faulty_runs.push(e.sequence.clone());
            }
        }
    }

    let witness_run =
        if exact_verdict == Verdict::FaultCertain && efficient_verdict != Verdict::FaultCertain {
            Some(exact_set.iter().next().expect("nonempty").sequence.clone())
        } else {
            None
        };

    Ok(ObsEval {
        exact_verdict,
        efficient_verdict,
        witness_run,
        extensions,
        faulty_runs,
        has_dead_faulty_run,
        dead_faulty_runs,
    })
}

fn segment_guard(depth: usize, budget: &SearchBudget) -> Result<(), ExplainError> {
    if depth == budget.max_unobs_segment() {
        Err(ExplainError::BudgetExhausted {
            dimension: crate::explain::BudgetDimension::UnobservableSegment,
            limit: budget.max_unobs_segment(),
        })
    } else {
        Ok(())
    }
}

/// Observable transitions reachable from `m` after at most one unobservable
/// segment, i.e. the possible next observed events.
fn observable_continuations(
    net: &NetSystem,
    m: &Marking,
    budget: &SearchBudget,
) -> Result<BTreeSet<TransitionId>, ExplainError> {
    fn walk(
        net: &NetSystem,
        m: &Marking,
        depth: usize,
        budget: &SearchBudget,
        out: &mut BTreeSet<TransitionId>,
    ) -> Result<(), ExplainError> {
        for t in net.transitions() {
            if !net.enabled_unchecked(m, t) {
                continue;
            }
            if net.labeling().is_observable(t) {
                out.insert(t);
            } else {
                segment_guard(depth, budget)?;
                let fired = net.fire_unchecked(m, t);
                walk(net, &fired, depth + 1, budget, out)?;
            }
        }
        Ok(())
    }
    let mut out = BTreeSet::new();
    walk(net, m, 0, budget, &mut out)?;
    Ok(out)
}

/// True iff some unobservable continuation from `m` (possibly empty)
/// contains a fault — or `have_fault` already holds — and ends in a marking
/// from which no observable transition is reachable through unobservable
/// firings. Such a continuation freezes the observation forever.
fn dead_faulty_extension_exists(
    net: &NetSystem,
    m: &Marking,
    have_fault: bool,
    depth: usize,
    budget: &SearchBudget,
) -> Result<bool, ExplainError> {
    if have_fault && observable_continuations(net, m, budget)?.is_empty() {
        return Ok(true);
    }
    for t in net.transitions() {
        if net.labeling().is_observable(t) || !net.enabled_unchecked(m, t) {
            continue;
        }
        segment_guard(depth, budget)?;
        let fired = net.fire_unchecked(m, t);
        let fault = have_fault || net.labeling().is_fault(t);
        if dead_faulty_extension_exists(net, &fired, fault, depth + 1, budget)? {
            return Ok(true);
        }
    }
    Ok(false)
}

fn observables_before_first_fault(net: &NetSystem, run: &[TransitionId]) -> usize {
    let mut seen = 0;
    for &t in run {
        if net.labeling().is_fault(t) {
            return seen;
        }
        if net.labeling().is_observable(t) {
            seen += 1;
        }
    }
    seen
}

/// Explores every observation the net can produce up to length `bound`,
/// runs both diagnosers on each, and reports:
///
/// * every observation where the exact diagnoser is certain of the fault
///   and the efficient one is not (imprecision witnesses);
/// * whether every faulty run is detected by the exact diagnoser within
///   the bound, and with what maximum delay.
///
/// `jobs` > 1 fans the per-observation work of each exploration level out
/// to that many threads; the report is identical either way.
pub fn precision_check(
    net: &NetSystem,
    bound: usize,
    budget: &SearchBudget,
    jobs: usize,
) -> Result<PrecisionReport, DiagnoseError> {
    if bound == 0 {
        return Err(DiagnoseError::InvalidBound);
    }
    ensure_fault_declared(net)?;
    if !net.check_structure().acyclic_unobservable {
        return Err(DiagnoseError::Explain(
            ExplainError::CyclicUnobservableSubnet,
        ));
    }

    let mut level = vec![Node {
        events: Vec::new(),
        first_certain: None,
    }];
    let mut witnesses = Vec::new();
    let mut diagnosable = true;
    let mut max_delay: Option<usize> = None;

    for depth in 0..=bound {
        let evals = evaluate_level(net, &level, budget, jobs)?;
        let mut next_level = Vec::new();
        for (node, eval) in level.iter().zip(evals) {
            let first_certain = node
                .first_certain
                .or_else(|| (eval.exact_verdict == Verdict::FaultCertain).then_some(depth));

            if let Some(run) = eval.witness_run {
                witnesses.push(ImprecisionWitness {
                    run,
                    observation: node.events.clone(),
                    exact: eval.exact_verdict,
                    efficient: eval.efficient_verdict,
                });
            }

            // A faulty run is terminal when the bound is reached or when
            // its observation can stop growing for good; either way
            // detection must already have happened.
            match first_certain {
                None => {
                    let undetected_terminal = eval.has_dead_faulty_run
                        || (depth == bound && !eval.faulty_runs.is_empty());
                    if undetected_terminal {
                        diagnosable = false;
                    }
                }
                Some(i) => {
                    let terminal: &[FiringSequence] = if depth == bound {
                        &eval.faulty_runs
                    } else {
                        &eval.dead_faulty_runs
                    };
                    for run in terminal {
                        let delay = i - observables_before_first_fault(net, run);
                        max_delay = Some(max_delay.map_or(delay, |d| d.max(delay)));
                    }
                }
            }

            if depth < bound {
                for t in &eval.extensions {
                    let mut events = node.events.clone();
                    events.push(*t);
                    next_level.push(Node {
                        events,
                        first_certain,
                    });
                }
            }
        }
        next_level.sort_by(|a, b| a.events.cmp(&b.events));
        level = next_level;
    }

    witnesses.sort_by(|a, b| {
        (a.observation.len(), &a.observation).cmp(&(b.observation.len(), &b.observation))
    });

    Ok(PrecisionReport {
        bound,
        imprecise_witnesses: witnesses,
        diagnosable_within_bound: diagnosable,
        detection_delay: if diagnosable { max_delay } else { None },
    })
}

/// A distinct observation in the breadth-first sweep; `first_certain` is
/// inherited along the prefix tree so detection at an earlier prefix is
/// remembered.
struct Node {
    events: Vec<TransitionId>,
    first_certain: Option<usize>,
}

fn evaluate_level(
    net: &NetSystem,
    level: &[Node],
    budget: &SearchBudget,
    jobs: usize,
) -> Result<Vec<ObsEval>, DiagnoseError> {
    if jobs <= 1 || level.len() <= 1 {
        return level
            .iter()
            .map(|n| evaluate_observation(net, &n.events, budget))
            .collect();
    }
    let chunk = level.len().div_ceil(jobs);
    let results: Vec<Result<Vec<ObsEval>, DiagnoseError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = level
            .chunks(chunk)
            .map(|nodes| {
                scope.spawn(move || {
                    nodes
                        .iter()
                        .map(|n| evaluate_observation(net, &n.events, budget))
                        .collect::<Result<Vec<_>, _>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker thread panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(level.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
