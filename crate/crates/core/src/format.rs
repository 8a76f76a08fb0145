//! The `.net.json` net-system file format: a minimal JSON document listing
//! places, transitions with their labeling, and the initial marking.
//!
//! Serialization is canonical — stable field order, places and transitions
//! in declared order, marking keys sorted, zero counts dropped — so that
//! `parse` followed by `serialize` is the identity on canonical files and
//! equal nets always serialize to equal strings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::{NetBuilder, NetError, NetSystem, TransitionKind};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceDoc {
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionDoc {
    pub name: String,
    pub pre: Vec<String>,
    pub post: Vec<String>,
    pub observable: bool,
    pub fault: bool,
}

/// On-disk description of a net system (schema version "1").
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDocument {
    pub schema_version: String,
    pub places: Vec<PlaceDoc>,
    pub transitions: Vec<TransitionDoc>,
    /// Counts are validated to be nonnegative; stored signed so that a
    /// negative count is reported as a semantic error, not a syntax error.
    pub initial_marking: BTreeMap<String, i64>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("[{code}] {message}")]
    Semantic { code: &'static str, message: String },
}

impl ParseError {
    /// Stable machine-readable code; "syntax" for malformed JSON.
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "syntax",
            ParseError::Semantic { code, .. } => code,
        }
    }

    fn semantic(code: &'static str, message: String) -> Self {
        ParseError::Semantic { code, message }
    }
}

pub mod codes {
    pub const UNSUPPORTED_SCHEMA_VERSION: &str = "unsupported-schema-version";
    pub const DUPLICATE_PLACE: &str = "duplicate-place";
    pub const DUPLICATE_TRANSITION: &str = "duplicate-transition";
    pub const UNKNOWN_PLACE: &str = "unknown-place";
    pub const OBSERVABLE_FAULT: &str = "observable-fault";
    pub const NEGATIVE_COUNT: &str = "negative-count";
    pub const EMPTY_PRE: &str = "empty-pre";
}

/// Parses and validates a net-system document. Every semantic error carries
/// a distinct code (see [`codes`]).
pub fn parse_net(text: &str) -> Result<NetSystem, ParseError> {
    let doc: NetDocument = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    net_from_document(&doc)
}

/// Builds the validated net from an already-decoded document.
pub fn net_from_document(doc: &NetDocument) -> Result<NetSystem, ParseError> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ParseError::semantic(
            codes::UNSUPPORTED_SCHEMA_VERSION,
            format!(
                "schema_version {:?} is not supported (expected {:?})",
                doc.schema_version, SCHEMA_VERSION
            ),
        ));
    }

    let mut builder = NetBuilder::new();
    let mut place_ids = BTreeMap::new();
    for place in &doc.places {
        if place_ids.contains_key(place.name.as_str()) {
            return Err(ParseError::semantic(
                codes::DUPLICATE_PLACE,
                format!("place {:?} is declared twice", place.name),
            ));
        }
        place_ids.insert(place.name.as_str(), builder.place(&place.name));
    }

    let resolve = |context: &str, name: &str| {
        place_ids.get(name).copied().ok_or_else(|| {
            ParseError::semantic(
                codes::UNKNOWN_PLACE,
                format!("{context} references undeclared place {name:?}"),
            )
        })
    };

    let mut seen_transitions = std::collections::BTreeSet::new();
    for t in &doc.transitions {
        if !seen_transitions.insert(t.name.as_str()) {
            return Err(ParseError::semantic(
                codes::DUPLICATE_TRANSITION,
                format!("transition {:?} is declared twice", t.name),
            ));
        }
        if t.fault && t.observable {
            return Err(ParseError::semantic(
                codes::OBSERVABLE_FAULT,
                format!(
                    "transition {:?}: fault transitions must be unobservable",
                    t.name
                ),
            ));
        }
        if t.pre.is_empty() {
            return Err(ParseError::semantic(
                codes::EMPTY_PRE,
                format!("transition {:?} has an empty pre-set", t.name),
            ));
        }
        let context = format!("transition {:?}", t.name);
        let pre: Vec<_> = t
            .pre
            .iter()
            .map(|n| resolve(&context, n))
            .collect::<Result<_, _>>()?;
        let post: Vec<_> = t
            .post
            .iter()
            .map(|n| resolve(&context, n))
            .collect::<Result<_, _>>()?;
        let kind = if t.fault {
            TransitionKind::Fault
        } else if t.observable {
            TransitionKind::Observable
        } else {
            TransitionKind::Unobservable
        };
        builder.transition(&t.name, kind, &pre, &post);
    }

    for (name, &count) in &doc.initial_marking {
        if count < 0 {
            return Err(ParseError::semantic(
                codes::NEGATIVE_COUNT,
                format!("initial marking of {name:?} is negative ({count})"),
            ));
        }
        let id = resolve("initial marking", name)?;
        builder.initial_tokens(id, count as u64);
    }

    builder.build().map_err(|e| match e {
        NetError::DuplicatePlaceName { name } => ParseError::semantic(
            codes::DUPLICATE_PLACE,
            format!("place {name:?} is declared twice"),
        ),
        NetError::DuplicateTransitionName { name } => ParseError::semantic(
            codes::DUPLICATE_TRANSITION,
            format!("transition {name:?} is declared twice"),
        ),
        NetError::EmptyPre { transition } => ParseError::semantic(
            codes::EMPTY_PRE,
            format!("transition {transition:?} has an empty pre-set"),
        ),
        other => ParseError::semantic("invalid-net", other.to_string()),
    })
}

/// Extracts the canonical document from a net.
pub fn document_from_net(net: &NetSystem) -> NetDocument {
    let places = net
        .places()
        .map(|p| PlaceDoc {
            name: net.place_name(p).to_owned(),
        })
        .collect();
    let transitions = net
        .transitions()
        .map(|t| {
            let tr = net.transition(t);
            TransitionDoc {
                name: net.transition_name(t).to_owned(),
                pre: tr
                    .pre()
                    .iter()
                    .map(|&p| net.place_name(p).to_owned())
                    .collect(),
                post: tr
                    .post()
                    .iter()
                    .map(|&p| net.place_name(p).to_owned())
                    .collect(),
                observable: net.labeling().is_observable(t),
                fault: net.labeling().is_fault(t),
            }
        })
        .collect();
    let initial_marking = net
        .initial()
        .tokens()
        .map(|(p, c)| (net.place_name(p).to_owned(), c as i64))
        .collect();
    NetDocument {
        schema_version: SCHEMA_VERSION.to_owned(),
        places,
        transitions,
        initial_marking,
    }
}

/// Canonical text form; `parse_net(serialize_net(net)) == net` always, and
/// structurally equal nets serialize identically.
pub fn serialize_net(net: &NetSystem) -> String {
    let doc = document_from_net(net);
    let mut text = serde_json::to_string_pretty(&doc).expect("documents always serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::{fig1, FIG1_JSON};

    #[test]
    fn the_fixture_parses_to_the_published_structure() {
        let net = parse_net(FIG1_JSON).unwrap();
        assert_eq!(net.place_count(), 10);
        assert_eq!(net.transition_count(), 8);
        let p = |n: &str| net.place_id(n).unwrap();
        assert_eq!(net.initial().count(p("p1")), 1);
        assert_eq!(net.initial().count(p("p2")), 1);
        assert_eq!(net.initial().count(p("p3")), 1);
        assert_eq!(net.initial().total(), 3);
        let report = net.check_structure();
        assert!(report.acyclic_unobservable);
        assert_eq!(report.fault_count, 1);
    }

    #[test]
    fn fixture_serialization_is_byte_identical_and_single_fault() {
        let net = fig1();
        let text = serialize_net(&net);
        assert_eq!(text, FIG1_JSON);
        let doc = document_from_net(&net);
        assert_eq!(doc.transitions.iter().filter(|t| t.fault).count(), 1);
        assert_eq!(doc.transitions.iter().find(|t| t.fault).unwrap().name, "f");
    }

    #[test]
    fn equal_nets_serialize_equally_and_round_trip() {
        let net = fig1();
        let text = serialize_net(&net);
        let reparsed = parse_net(&text).unwrap();
        assert_eq!(reparsed, net);
        assert_eq!(serialize_net(&reparsed), text);
    }

    #[test]
    fn construction_order_does_not_leak_into_the_canonical_form() {
        use crate::net::{NetBuilder, TransitionKind};
        let build = |flip: bool| {
            let mut b = NetBuilder::new();
            let p = b.place("p");
            let q = b.place("q");
            let pre = if flip { [q, p] } else { [p, q] };
            b.transition("t", TransitionKind::Observable, &pre, &[]);
            if flip {
                b.initial_tokens(q, 1);
                b.initial_tokens(p, 2);
            } else {
                b.initial_tokens(p, 1);
                b.initial_tokens(p, 1);
                b.initial_tokens(q, 1);
            }
            b.build().unwrap()
        };
        assert_eq!(serialize_net(&build(false)), serialize_net(&build(true)));
    }

    #[test]
    fn minimal_document_is_valid() {
        let text = r#"{
            "schema_version": "1",
            "places": [{"name": "p"}],
            "transitions": [],
            "initial_marking": {}
        }"#;
        let net = parse_net(text).unwrap();
        assert_eq!(net.place_count(), 1);
        assert_eq!(net.transition_count(), 0);
        assert!(net.initial().is_empty());
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = parse_net("{\n  \"schema_version\": }").unwrap_err();
        match err {
            ParseError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(err.code(), "syntax");
    }

    #[test]
    fn semantic_errors_have_distinct_codes() {
        let observable_fault = FIG1_JSON.replacen(
            "\"name\": \"f\",\n      \"pre\": [\n        \"p1\"\n      ],\n      \"post\": [\n        \"p4\",\n        \"p6\"\n      ],\n      \"observable\": false",
            "\"name\": \"f\",\n      \"pre\": [\n        \"p1\"\n      ],\n      \"post\": [\n        \"p4\",\n        \"p6\"\n      ],\n      \"observable\": true",
            1,
        );
        let err = parse_net(&observable_fault).unwrap_err();
        assert_eq!(err.code(), codes::OBSERVABLE_FAULT);

        let unknown_place = FIG1_JSON.replacen(
            "\"p1\"\n      ],\n      \"post\"",
            "\"p99\"\n      ],\n      \"post\"",
            1,
        );
        let err = parse_net(&unknown_place).unwrap_err();
        assert_eq!(err.code(), codes::UNKNOWN_PLACE);

        let negative = FIG1_JSON.replace("\"p1\": 1", "\"p1\": -1");
        let err = parse_net(&negative).unwrap_err();
        assert_eq!(err.code(), codes::NEGATIVE_COUNT);

        let bad_version =
            FIG1_JSON.replace("\"schema_version\": \"1\"", "\"schema_version\": \"2\"");
        let err = parse_net(&bad_version).unwrap_err();
        assert_eq!(err.code(), codes::UNSUPPORTED_SCHEMA_VERSION);

        let dup_place = FIG1_JSON.replacen("\"name\": \"p0\"", "\"name\": \"p1\"", 1);
        let err = parse_net(&dup_place).unwrap_err();
        assert_eq!(err.code(), codes::DUPLICATE_PLACE);

        let dup_transition = FIG1_JSON.replacen("\"name\": \"u_1\"", "\"name\": \"f\"", 1);
        let err = parse_net(&dup_transition).unwrap_err();
        assert_eq!(err.code(), codes::DUPLICATE_TRANSITION);

        let empty_pre = FIG1_JSON.replacen("\"pre\": [\n        \"p0\"\n      ]", "\"pre\": []", 1);
        let err = parse_net(&empty_pre).unwrap_err();
        assert_eq!(err.code(), codes::EMPTY_PRE);
    }

    #[test]
    fn zero_counts_are_accepted_and_canonicalized_away() {
        let text = r#"{
            "schema_version": "1",
            "places": [{"name": "p"}, {"name": "q"}],
            "transitions": [{"name": "t", "pre": ["p"], "post": ["q"], "observable": true, "fault": false}],
            "initial_marking": {"p": 1, "q": 0}
        }"#;
        let net = parse_net(text).unwrap();
        let canonical = serialize_net(&net);
        assert!(!canonical.contains("\"q\": 0"));
        assert_eq!(parse_net(&canonical).unwrap(), net);
    }
}
