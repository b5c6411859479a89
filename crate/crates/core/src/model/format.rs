//! The `.cpd.json` document format.
//!
//! Top-level fields: `id`, `title`, `created`, `modified` (ISO-8601),
//! `elements`, `connections`. Unknown top-level fields survive a round trip;
//! unknown fields inside elements or connections are rejected.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{
    truncate_millis, Connection, ConnectionId, ConnectionKind, Diagram, DiagramId, Element, ElementId,
    ElementKind, Point, Target,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    /// The input is not well-formed JSON.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    /// Well-formed JSON that is not a valid diagram.
    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },
}

impl FormatError {
    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        FormatError::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn is_parse(&self) -> bool {
        matches!(self, FormatError::Parse { .. })
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            FormatError::Schema { field, .. } => Some(field),
            FormatError::Parse { .. } => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    id: String,
    kind: ElementKind,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    position: Option<Point>,
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum TargetType {
    Element,
    Connection,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConnection {
    id: String,
    source: String,
    target: String,
    target_type: TargetType,
    kind: ConnectionKind,
}

const KNOWN_FIELDS: [&str; 6] = ["id", "title", "created", "modified", "elements", "connections"];

fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Renders a diagram as a pretty-printed JSON document with a trailing newline.
pub fn serialize(diagram: &Diagram) -> String {
    let mut out = Map::new();
    out.insert("id".into(), Value::String(diagram.id().to_string()));
    out.insert("title".into(), Value::String(diagram.title().to_string()));
    out.insert("created".into(), Value::String(timestamp(diagram.created())));
    out.insert("modified".into(), Value::String(timestamp(diagram.modified())));
    let elements = diagram
        .elements()
        .iter()
        .map(|e| {
            serde_json::to_value(RawElement {
                id: e.id.to_string(),
                kind: e.kind,
                label: e.label.clone(),
                note: e.note.clone(),
                position: e.position,
            })
            .expect("element serializes")
        })
        .collect();
    out.insert("elements".into(), Value::Array(elements));
    let connections = diagram
        .connections()
        .iter()
        .map(|c| {
            let target_type = match c.target {
                Target::Element(_) => TargetType::Element,
                Target::Connection(_) => TargetType::Connection,
            };
            serde_json::to_value(RawConnection {
                id: c.id.to_string(),
                source: c.source.to_string(),
                target: c.target.as_str().to_string(),
                target_type,
                kind: c.kind,
            })
            .expect("connection serializes")
        })
        .collect();
    out.insert("connections".into(), Value::Array(connections));
    for (k, v) in diagram.extra() {
        out.insert(k.clone(), v.clone());
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(out)).expect("diagram serializes");
    text.push('\n');
    text
}

/// Parses and validates a diagram document. Never returns a diagram that
/// violates the model invariants.
pub fn deserialize(text: &str) -> Result<Diagram, FormatError> {
    let value: Value = serde_json::from_str(text).map_err(|e| FormatError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_value(value)
}

/// Same as [`deserialize`] for an already-parsed JSON value.
pub fn from_value(value: Value) -> Result<Diagram, FormatError> {
    let Value::Object(mut top) = value else {
        return Err(FormatError::schema("$", "expected a JSON object"));
    };

    let id: String = take(&mut top, "id")?;
    let title: String = take(&mut top, "title")?;
    let created = take_timestamp(&mut top, "created")?;
    let modified = take_timestamp(&mut top, "modified")?;
    let raw_elements: Vec<RawElement> = take(&mut top, "elements")?;
    let raw_connections: Vec<RawConnection> = take(&mut top, "connections")?;
    debug_assert!(KNOWN_FIELDS.iter().all(|k| !top.contains_key(*k)));

    let elements = raw_elements
        .into_iter()
        .map(|r| Element {
            id: ElementId::from(r.id),
            kind: r.kind,
            label: r.label,
            note: r.note,
            position: r.position,
        })
        .collect();
    let connections = raw_connections
        .into_iter()
        .map(|r| Connection {
            id: ConnectionId::from(r.id),
            source: ElementId::from(r.source),
            target: match r.target_type {
                TargetType::Element => Target::Element(ElementId::from(r.target)),
                TargetType::Connection => Target::Connection(ConnectionId::from(r.target)),
            },
            kind: r.kind,
        })
        .collect();

    if id.is_empty() {
        return Err(FormatError::schema("id", "id must not be empty"));
    }
    let diagram = Diagram::from_parts(DiagramId::from(id), title, created, modified, elements, connections)
        .map_err(|e| FormatError::schema(e.field, e.message))?;
    Ok(diagram.with_extra(top))
}

fn take<T: DeserializeOwned>(top: &mut Map<String, Value>, field: &str) -> Result<T, FormatError> {
    let value = top
        .shift_remove(field)
        .ok_or_else(|| FormatError::schema(field, "missing required field"))?;
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { field.to_string() } else { format!("{field}{}", join_path(&path)) };
        FormatError::schema(field, e.into_inner().to_string())
    })
}

// serde_path_to_error renders `[0].kind`; prefix segments that start with a
// name need a dot.
fn join_path(path: &str) -> String {
    if path.starts_with('[') {
        path.to_string()
    } else {
        format!(".{path}")
    }
}

fn take_timestamp(top: &mut Map<String, Value>, field: &str) -> Result<DateTime<Utc>, FormatError> {
    let raw: String = take(top, field)?;
    DateTime::parse_from_rfc3339(&raw)
        .map(|t| truncate_millis(t.with_timezone(&Utc)))
        .map_err(|e| FormatError::schema(field, format!("invalid ISO-8601 timestamp: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "id": "d1", "title": "t",
        "created": "2024-05-01T10:00:00Z", "modified": "2024-05-01T10:00:00.123456Z",
        "elements": [
            {"id": "s", "kind": "strategy", "label": "Run ad campaign"},
            {"id": "m", "kind": "mechanism", "label": "", "position": {"x": 1.5, "y": -2}}
        ],
        "connections": [
            {"id": "c", "source": "s", "target": "m", "target_type": "element", "kind": "causal"}
        ],
        "board_color": "yellow"
    }"#;

    #[test]
    fn parses_and_preserves_unknown_top_level() {
        let d = deserialize(MINIMAL).unwrap();
        assert_eq!(d.elements().len(), 2);
        assert_eq!(d.extra()["board_color"], "yellow");
        let again = deserialize(&serialize(&d)).unwrap();
        assert_eq!(again, d);
        assert!(serialize(&d).contains("\"board_color\""));
        // sub-millisecond precision is dropped
        assert_eq!(timestamp(d.modified()), "2024-05-01T10:00:00.123Z");
    }

    #[test]
    fn misspelled_kind_is_schema_error() {
        let text = MINIMAL.replace("\"mechanism\"", "\"mechansim\"");
        let err = deserialize(&text).unwrap_err();
        assert_eq!(err.field(), Some("elements[1].kind"), "{err}");
    }

    #[test]
    fn unknown_element_field_rejected() {
        let text = MINIMAL.replace("\"label\": \"\"", "\"label\": \"\", \"color\": \"red\"");
        let err = deserialize(&text).unwrap_err();
        assert!(matches!(err, FormatError::Schema { .. }), "{err}");
        assert!(err.to_string().contains("color"));
    }

    #[test]
    fn malformed_json_has_position() {
        let err = deserialize("{\n  \"id\": \"x\",\n  oops\n}").unwrap_err();
        match err {
            FormatError::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn dangling_endpoint_names_field() {
        let text = MINIMAL.replace("\"target\": \"m\"", "\"target\": \"nope\"");
        let err = deserialize(&text).unwrap_err();
        assert_eq!(err.field(), Some("connections[0].target"));
    }
}
