//! Structural checking of causal pathway diagrams.
//!
//! [`check`] looks for four kinds of problems (missing required components,
//! elements cut off from the pathway, connections in the wrong order, and
//! pathways that do not run from a strategy to a distal outcome) plus an
//! empty-label warning. [`report`] turns the findings into user-facing text.

pub mod grammar;
mod paths;
mod report;

pub use report::{report, CONFIRMATION, MISSING_INTRO};

use std::collections::{BTreeSet, HashMap};

use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::model::{ConnectionKind, Diagram, Element, ElementId, ElementKind, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    MissingRequiredElement,
    DisconnectedElement,
    InvalidOrder,
    InvalidEndpoints,
    EmptyLabel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub severity: Severity,
    /// Element or connection ids; empty for a missing component.
    pub subjects: Vec<String>,
    pub message: String,
    /// The missing kind, for [`DiagnosticCode::MissingRequiredElement`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ElementKind>,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    fn sort_key(&self) -> (DiagnosticCode, &[String], usize) {
        (self.code, &self.subjects, self.kind.map_or(0, |k| k as usize))
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}

fn describe(e: &Element) -> String {
    if e.label.trim().is_empty() {
        format!("{} ({})", e.kind, e.id)
    } else {
        format!("{} \"{}\"", e.kind, e.label.trim())
    }
}

/// Runs every structural check. Output is ordered by code, then by subject
/// ids; identical diagrams always produce identical lists.
pub fn check(diagram: &Diagram) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let by_id: HashMap<&ElementId, &Element> = diagram.elements().iter().map(|e| (&e.id, e)).collect();

    for kind in grammar::REQUIRED {
        if !diagram.elements().iter().any(|e| e.kind == kind) {
            out.push(Diagnostic {
                code: DiagnosticCode::MissingRequiredElement,
                severity: Severity::Error,
                subjects: vec![],
                message: format!("missing required component: {kind}"),
                kind: Some(kind),
            });
        }
    }

    check_disconnected(diagram, &mut out);
    check_order(diagram, &by_id, &mut out);
    check_endpoints(diagram, &by_id, &mut out);

    for e in diagram.elements() {
        if e.label.trim().is_empty() {
            out.push(Diagnostic {
                code: DiagnosticCode::EmptyLabel,
                severity: Severity::Warning,
                subjects: vec![e.id.to_string()],
                message: format!("{} {} has no content yet", e.kind, e.id),
                kind: None,
            });
        }
    }

    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    out
}

fn check_disconnected(diagram: &Diagram, out: &mut Vec<Diagnostic>) {
    let mut causal: BTreeSet<&ElementId> = BTreeSet::new();
    let mut any: BTreeSet<&ElementId> = BTreeSet::new();
    for c in diagram.connections() {
        any.insert(&c.source);
        if let Target::Element(t) = &c.target {
            any.insert(t);
        }
        if c.kind == ConnectionKind::Causal {
            causal.insert(&c.source);
            if let Target::Element(t) = &c.target {
                causal.insert(t);
            }
        }
    }
    for e in diagram.elements() {
        let connected = if e.kind.is_stem() { causal.contains(&e.id) } else { any.contains(&e.id) };
        if !connected {
            out.push(Diagnostic {
                code: DiagnosticCode::DisconnectedElement,
                severity: Severity::Error,
                subjects: vec![e.id.to_string()],
                message: format!("{} is not connected to the CPD pathway", describe(e)),
                kind: None,
            });
        }
    }
}

fn check_order(diagram: &Diagram, by_id: &HashMap<&ElementId, &Element>, out: &mut Vec<Diagnostic>) {
    for c in diagram.connections() {
        let source = by_id[&c.source];
        let problem = match (c.kind, &c.target) {
            (ConnectionKind::Causal, Target::Element(t)) => {
                let target = by_id[t];
                (!grammar::allows(source.kind, target.kind)).then(|| {
                    format!(
                        "{} -> {} is connected in the wrong order",
                        describe(source),
                        describe(target)
                    )
                })
            }
            // rejected by the model
            (ConnectionKind::Causal, Target::Connection(_)) => None,
            (ConnectionKind::Annotates, target) => {
                if !source.kind.is_annotation() {
                    Some(format!(
                        "{} cannot annotate the pathway; only moderators and preconditions can",
                        describe(source)
                    ))
                } else {
                    match target {
                        Target::Element(t) => {
                            let target = by_id[t];
                            (!target.kind.is_stem()).then(|| {
                                format!(
                                    "{} annotates {}, which is not part of the pathway",
                                    describe(source),
                                    describe(target)
                                )
                            })
                        }
                        Target::Connection(t) => {
                            let annotated = diagram.connection(t).map(|a| a.kind);
                            (annotated != Some(ConnectionKind::Causal)).then(|| {
                                format!("{} annotates a connection that is not causal", describe(source))
                            })
                        }
                    }
                }
            }
        };
        if let Some(message) = problem {
            out.push(Diagnostic {
                code: DiagnosticCode::InvalidOrder,
                severity: Severity::Error,
                subjects: vec![c.id.to_string()],
                message,
                kind: None,
            });
        }
    }
}

fn check_endpoints(diagram: &Diagram, by_id: &HashMap<&ElementId, &Element>, out: &mut Vec<Diagnostic>) {
    let mut graph: DiGraph<&ElementId, ()> = DiGraph::new();
    let mut index = HashMap::new();
    // element order keeps node numbering deterministic
    let on_path: BTreeSet<&ElementId> = diagram
        .connections()
        .iter()
        .filter(|c| c.kind == ConnectionKind::Causal)
        .flat_map(|c| [Some(&c.source), c.target_element()])
        .flatten()
        .collect();
    for e in diagram.elements() {
        if on_path.contains(&e.id) {
            index.insert(&e.id, graph.add_node(&e.id));
        }
    }
    let mut seen = BTreeSet::new();
    for c in diagram.connections() {
        if c.kind != ConnectionKind::Causal {
            continue;
        }
        let Some(t) = c.target_element() else { continue };
        if seen.insert((&c.source, t)) {
            graph.add_edge(index[&c.source], index[t], ());
        }
    }

    let roles = paths::endpoint_roles(&graph);
    for node in graph.node_indices() {
        let e = by_id[graph[node]];
        let role = roles[node.index()];
        let bad_start = role.starts && e.kind != ElementKind::Strategy;
        let bad_end = role.ends && e.kind != ElementKind::DistalOutcome;
        let message = match (bad_start, bad_end) {
            (false, false) => continue,
            (true, false) => format!(
                "the CPD pathway starts at {} instead of an implementation strategy",
                describe(e)
            ),
            (false, true) => format!("the CPD pathway ends at {} instead of a distal outcome", describe(e)),
            (true, true) => format!(
                "the CPD pathway both starts and ends at {}; it should start with an implementation strategy and end with a distal outcome",
                describe(e)
            ),
        };
        out.push(Diagnostic {
            code: DiagnosticCode::InvalidEndpoints,
            severity: Severity::Error,
            subjects: vec![e.id.to_string()],
            message,
            kind: None,
        });
    }
}
