//! Causal pathway diagram (CPD) authoring toolkit.
//!
//! - [`model`]: element kinds, shapes, diagrams and the `.cpd.json` format
//! - [`validator`]: structural checks with ordered diagnostics
//! - [`glossary`]: element definitions used by tooltips, help and prompts
//! - [`llm`]: chat-completion gateway (OpenAI-compatible client and seeded mock)
//! - [`recommend`]: backward-mapping wizard, brainstorming and prompt building
//! - [`layout`]: left-to-right layered layout, DOT and SVG export
//! - [`store`]: file-backed persistence for diagrams and wizard sessions

pub mod fixtures;
pub mod glossary;
pub mod layout;
pub mod llm;
pub mod model;
pub mod recommend;
pub mod store;

pub use model::{
    new_element, shape_of, Connection, ConnectionId, ConnectionKind, Diagram, DiagramId, Element, ElementId,
    ElementKind, Point, Shape, Target,
};
pub mod validator;
pub use validator::{check, report, Diagnostic, DiagnosticCode, Severity};
