//! Causal pathway diagram domain types.
//!
//! A [`Diagram`] holds elements (strategy, mechanism, barrier, outcomes and the
//! two annotation kinds) plus typed connections between them. Values are
//! immutable snapshots: every mutating helper consumes the diagram and returns
//! a new, re-validated one.
//!
//! ```text
//! Diagram
//! ├── elements:    Vec<Element>     (insertion order is preserved)
//! ├── connections: Vec<Connection>  (causal or annotates)
//! └── extra:       unknown top-level fields, kept for round-trips
//! ```

mod format;
mod ids;

pub use format::{deserialize, from_value, serialize, FormatError};
pub use ids::{ConnectionId, DiagramId, ElementId};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, DurationRound, TimeDelta, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

// ============================================================================
// Kinds and shapes
// ============================================================================

/// The closed set of CPD component kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Strategy,
    Mechanism,
    Barrier,
    Moderator,
    Precondition,
    ProximalOutcome,
    IntermediateOutcome,
    DistalOutcome,
}

impl ElementKind {
    /// All kinds, in canonical order. Layout and diagnostics break ties by
    /// this order.
    pub const ALL: [ElementKind; 8] = [
        ElementKind::Strategy,
        ElementKind::Mechanism,
        ElementKind::Barrier,
        ElementKind::Moderator,
        ElementKind::Precondition,
        ElementKind::ProximalOutcome,
        ElementKind::IntermediateOutcome,
        ElementKind::DistalOutcome,
    ];

    /// The six kinds that make up the causal stem.
    pub const STEM: [ElementKind; 6] = [
        ElementKind::Strategy,
        ElementKind::Mechanism,
        ElementKind::Barrier,
        ElementKind::ProximalOutcome,
        ElementKind::IntermediateOutcome,
        ElementKind::DistalOutcome,
    ];

    pub fn is_stem(self) -> bool {
        !self.is_annotation()
    }

    /// Moderators and preconditions sit outside the stem and annotate it.
    pub fn is_annotation(self) -> bool {
        matches!(self, ElementKind::Moderator | ElementKind::Precondition)
    }

    pub fn is_outcome(self) -> bool {
        matches!(
            self,
            ElementKind::ProximalOutcome | ElementKind::IntermediateOutcome | ElementKind::DistalOutcome
        )
    }

    /// Snake-case name used in the file format and the HTTP API.
    pub fn key(self) -> &'static str {
        match self {
            ElementKind::Strategy => "strategy",
            ElementKind::Mechanism => "mechanism",
            ElementKind::Barrier => "barrier",
            ElementKind::Moderator => "moderator",
            ElementKind::Precondition => "precondition",
            ElementKind::ProximalOutcome => "proximal_outcome",
            ElementKind::IntermediateOutcome => "intermediate_outcome",
            ElementKind::DistalOutcome => "distal_outcome",
        }
    }

    /// Lower-case human name, e.g. `distal outcome`.
    pub fn display_name(self) -> &'static str {
        match self {
            ElementKind::Strategy => "strategy",
            ElementKind::Mechanism => "mechanism",
            ElementKind::Barrier => "barrier",
            ElementKind::Moderator => "moderator",
            ElementKind::Precondition => "precondition",
            ElementKind::ProximalOutcome => "proximal outcome",
            ElementKind::IntermediateOutcome => "intermediate outcome",
            ElementKind::DistalOutcome => "distal outcome",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown element kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for ElementKind {
    type Err = UnknownKind;

    /// Accepts the snake-case key, the display name, or either with dashes.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        ElementKind::ALL
            .into_iter()
            .find(|k| k.key() == norm)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// Outline used when drawing an element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    RoundedRectangle,
    Diamond,
    Octagon,
    Rectangle,
    IsoscelesTrapezoid,
    Circle,
}

/// Fixed kind → shape mapping. All three outcome kinds share [`Shape::Circle`].
pub fn shape_of(kind: ElementKind) -> Shape {
    match kind {
        ElementKind::Strategy => Shape::RoundedRectangle,
        ElementKind::Mechanism => Shape::Diamond,
        ElementKind::Barrier => Shape::Octagon,
        ElementKind::Moderator => Shape::Rectangle,
        ElementKind::Precondition => Shape::IsoscelesTrapezoid,
        ElementKind::ProximalOutcome | ElementKind::IntermediateOutcome | ElementKind::DistalOutcome => {
            Shape::Circle
        }
    }
}

// ============================================================================
// Elements and connections
// ============================================================================

/// A point in board units.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub id: ElementId,
    pub kind: ElementKind,
    pub label: String,
    pub note: Option<String>,
    pub position: Option<Point>,
}

impl Element {
    pub fn shape(&self) -> Shape {
        shape_of(self.kind)
    }
}

/// Creates an element with a fresh id. An empty label is legal: elements exist
/// on the board before their content is typed in.
pub fn new_element(kind: ElementKind, label: impl Into<String>, position: Option<Point>) -> Element {
    Element {
        id: ElementId::generate(),
        kind,
        label: label.into(),
        note: None,
        position,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    Causal,
    Annotates,
}

/// What a connection points at.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    Element(ElementId),
    Connection(ConnectionId),
}

impl Target {
    pub fn as_str(&self) -> &str {
        match self {
            Target::Element(id) => id.as_str(),
            Target::Connection(id) => id.as_str(),
        }
    }

    pub fn element(&self) -> Option<&ElementId> {
        match self {
            Target::Element(id) => Some(id),
            Target::Connection(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    pub id: ConnectionId,
    pub source: ElementId,
    pub target: Target,
    pub kind: ConnectionKind,
}

impl Connection {
    pub fn causal(source: &ElementId, target: &ElementId) -> Self {
        Self {
            id: ConnectionId::generate(),
            source: source.clone(),
            target: Target::Element(target.clone()),
            kind: ConnectionKind::Causal,
        }
    }

    pub fn annotates(source: &ElementId, target: Target) -> Self {
        Self {
            id: ConnectionId::generate(),
            source: source.clone(),
            target,
            kind: ConnectionKind::Annotates,
        }
    }

    /// Target element id, for causal connections.
    pub fn target_element(&self) -> Option<&ElementId> {
        self.target.element()
    }
}

// ============================================================================
// Diagram
// ============================================================================

/// Structural violation of the diagram invariants. `field` is a JSON-style
/// path such as `connections[2].target`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}: {message}")]
pub struct ModelError {
    pub field: String,
    pub message: String,
}

impl ModelError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagram {
    id: DiagramId,
    title: String,
    created: DateTime<Utc>,
    modified: DateTime<Utc>,
    elements: Vec<Element>,
    connections: Vec<Connection>,
    extra: serde_json::Map<String, serde_json::Value>,
}

pub(crate) fn now_millis() -> DateTime<Utc> {
    truncate_millis(Utc::now())
}

pub(crate) fn truncate_millis(t: DateTime<Utc>) -> DateTime<Utc> {
    t.duration_trunc(TimeDelta::milliseconds(1)).unwrap_or(t)
}

impl Diagram {
    /// An empty diagram with a fresh id.
    pub fn new(title: impl Into<String>) -> Self {
        let now = now_millis();
        Self {
            id: DiagramId::generate(),
            title: title.into(),
            created: now,
            modified: now,
            elements: Vec::new(),
            connections: Vec::new(),
            extra: Default::default(),
        }
    }

    /// Builds a diagram from parts, checking every structural invariant.
    pub fn from_parts(
        id: DiagramId,
        title: impl Into<String>,
        created: DateTime<Utc>,
        modified: DateTime<Utc>,
        elements: Vec<Element>,
        connections: Vec<Connection>,
    ) -> Result<Self, ModelError> {
        let d = Self {
            id,
            title: title.into(),
            created: truncate_millis(created),
            modified: truncate_millis(modified),
            elements,
            connections,
            extra: Default::default(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn id(&self) -> &DiagramId {
        &self.id
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn created(&self) -> DateTime<Utc> {
        self.created
    }

    pub fn modified(&self) -> DateTime<Utc> {
        self.modified
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    /// Unknown top-level fields carried through from the source document.
    pub fn extra(&self) -> &serde_json::Map<String, serde_json::Value> {
        &self.extra
    }

    pub fn element(&self, id: &ElementId) -> Option<&Element> {
        self.elements.iter().find(|e| &e.id == id)
    }

    pub fn connection(&self, id: &ConnectionId) -> Option<&Connection> {
        self.connections.iter().find(|c| &c.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty() && self.connections.is_empty()
    }

    pub fn with_id(mut self, id: DiagramId) -> Self {
        self.id = id;
        self
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn with_timestamps(mut self, created: DateTime<Utc>, modified: DateTime<Utc>) -> Self {
        self.created = truncate_millis(created);
        self.modified = truncate_millis(modified);
        self
    }

    /// Marks the diagram as modified now.
    pub fn touched(mut self) -> Self {
        self.modified = now_millis().max(self.created);
        self
    }

    pub fn with_extra(mut self, extra: serde_json::Map<String, serde_json::Value>) -> Self {
        self.extra = extra;
        self
    }

    pub fn add_element(mut self, element: Element) -> Result<Self, ModelError> {
        self.elements.push(element);
        self.validate()?;
        Ok(self)
    }

    pub fn add_connection(mut self, connection: Connection) -> Result<Self, ModelError> {
        self.connections.push(connection);
        self.validate()?;
        Ok(self)
    }

    /// Replaces element positions. Ids not present in `positions` keep
    /// their current position.
    pub fn with_positions(mut self, positions: &HashMap<ElementId, Point>) -> Self {
        for e in &mut self.elements {
            if let Some(p) = positions.get(&e.id) {
                e.position = Some(*p);
            }
        }
        self
    }

    /// Appends every element and connection of `other`. Ids must not collide.
    pub fn merge(mut self, other: &Diagram) -> Result<Self, ModelError> {
        self.elements.extend(other.elements.iter().cloned());
        self.connections.extend(other.connections.iter().cloned());
        self.validate()?;
        Ok(self)
    }

    /// Checks the structural invariants: unique ids, resolvable endpoints,
    /// no self-loops, causal connections between elements only, finite
    /// positions. Kind-level grammar is the checker's business, not ours.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut ids: HashSet<&str> = HashSet::new();
        let mut element_ids: HashSet<&ElementId> = HashSet::new();
        for (i, e) in self.elements.iter().enumerate() {
            if e.id.as_str().is_empty() {
                return Err(ModelError::new(format!("elements[{i}].id"), "id must not be empty"));
            }
            if !ids.insert(e.id.as_str()) {
                return Err(ModelError::new(
                    format!("elements[{i}].id"),
                    format!("duplicate id `{}`", e.id),
                ));
            }
            element_ids.insert(&e.id);
            if let Some(p) = e.position {
                if !p.x.is_finite() || !p.y.is_finite() {
                    return Err(ModelError::new(
                        format!("elements[{i}].position"),
                        "coordinates must be finite",
                    ));
                }
            }
        }
        let mut connection_ids: HashSet<&ConnectionId> = HashSet::new();
        for (i, c) in self.connections.iter().enumerate() {
            if c.id.as_str().is_empty() {
                return Err(ModelError::new(format!("connections[{i}].id"), "id must not be empty"));
            }
            if !ids.insert(c.id.as_str()) {
                return Err(ModelError::new(
                    format!("connections[{i}].id"),
                    format!("duplicate id `{}`", c.id),
                ));
            }
            connection_ids.insert(&c.id);
        }
        for (i, c) in self.connections.iter().enumerate() {
            if !element_ids.contains(&c.source) {
                return Err(ModelError::new(
                    format!("connections[{i}].source"),
                    format!("dangling endpoint `{}`", c.source),
                ));
            }
            match &c.target {
                Target::Element(t) => {
                    if !element_ids.contains(t) {
                        return Err(ModelError::new(
                            format!("connections[{i}].target"),
                            format!("dangling endpoint `{t}`"),
                        ));
                    }
                    if *t == c.source {
                        return Err(ModelError::new(
                            format!("connections[{i}].target"),
                            format!("self-loop on `{t}`"),
                        ));
                    }
                }
                Target::Connection(t) => {
                    if c.kind == ConnectionKind::Causal {
                        return Err(ModelError::new(
                            format!("connections[{i}].target_type"),
                            "causal connections must target an element",
                        ));
                    }
                    if *t == c.id {
                        return Err(ModelError::new(
                            format!("connections[{i}].target"),
                            format!("self-loop on `{t}`"),
                        ));
                    }
                    if !connection_ids.contains(t) {
                        return Err(ModelError::new(
                            format!("connections[{i}].target"),
                            format!("dangling endpoint `{t}`"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}
