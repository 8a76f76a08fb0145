//! The bundled example net (`fixtures/fig1.net.json`): ten places p0–p9,
//! unobservable transitions f (the fault), u_1 and u_2, observable
//! transitions A, B, C, D, E, and one token in each of p1, p2, p3.
//!
//! Its three maximal runs differ only in the initial unobservable choice,
//! and the faulty one is the only run in which A is observed before B and D
//! is observed — which is what makes it the standard differential test for
//! the two diagnosis semantics.

use crate::format::parse_net;
use crate::net::NetSystem;

/// Canonical text of the bundled net.
pub const FIG1_JSON: &str = include_str!("../../../fixtures/fig1.net.json");

/// Parses the bundled net.
pub fn fig1() -> NetSystem {
    parse_net(FIG1_JSON).expect("bundled fixture is valid")
}
