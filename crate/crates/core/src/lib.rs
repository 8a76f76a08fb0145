//! Fault diagnosis for labeled Petri nets.
//!
//! A net's transitions are partitioned into observable and unobservable
//! ones, with one or more unobservable transitions marked as faults. Given
//! the sequence of observed firings, diagnosis asks whether a fault
//! certainly, possibly, or certainly-not occurred. Two semantics are
//! implemented and can be run side by side:
//!
//! * **exact** — explanations must reproduce the observation in order;
//! * **efficient** — the observation is diagnosed prefix by prefix and each
//!   prefix's explanations only have to match the *multiset* of observed
//!   events, with fault detection latching across prefixes.
//!
//! The efficient semantics trades precision for incrementality: its verdict
//! can stay FAULT_POSSIBLE forever on nets the exact diagnoser decides.
//! [`diagnose::precision_check`] searches a bounded observation space for
//! exactly those divergences and for faulty runs that escape detection.

pub mod diagnose;
pub mod explain;
pub mod fixture;
pub mod format;
pub mod net;
pub mod observation;

pub use diagnose::{
    compare, diagnose_efficient, diagnose_exact, precision_check, DiagnoseError, DiagnosisTrace,
    ImprecisionWitness, Mode, PrecisionReport, PrefixDiagnosis, Verdict,
};
pub use explain::{
    enumerate_runs, explain_multiset, explain_ordered, BudgetDimension, ExplainError, Explanation,
    SearchBudget,
};
pub use fixture::{fig1, FIG1_JSON};
pub use format::{parse_net, serialize_net, NetDocument, ParseError};
pub use net::{
    FiringSequence, Marking, NetBuilder, NetError, NetSystem, PlaceId, StructureReport, Transition,
    TransitionId, TransitionKind,
};
pub use observation::{project, Labeling, Observation, ObservationMultiset};
