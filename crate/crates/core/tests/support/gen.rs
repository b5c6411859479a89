//! Random diagram generators.

use chrono::DateTime;
use cpd_core::{Connection, ConnectionId, ConnectionKind, Diagram, DiagramId, Element, ElementId, ElementKind, Point, Target};
use proptest::prelude::*;
use serde_json::{Map, Value};

pub fn kind() -> impl Strategy<Value = ElementKind> {
    proptest::sample::select(ElementKind::ALL.to_vec())
}

pub fn stem_kind() -> impl Strategy<Value = ElementKind> {
    proptest::sample::select(ElementKind::STEM.to_vec())
}

fn coordinate() -> impl Strategy<Value = f64> {
    prop_oneof![
        -5000.0..5000.0f64,
        proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL,
    ]
}

fn element_spec() -> impl Strategy<Value = (ElementKind, String, Option<String>, Option<(f64, f64)>)> {
    (
        kind(),
        "\\PC{0,40}",
        proptest::option::of("\\PC{0,60}"),
        proptest::option::of((coordinate(), coordinate())),
    )
}

fn json_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(Value::from),
        "\\PC{0,12}".prop_map(Value::String),
    ];
    leaf.prop_recursive(2, 8, 4, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
            proptest::collection::btree_map("[a-z]{1,5}", inner, 0..3)
                .prop_map(|m| Value::Object(m.into_iter().collect::<Map<_, _>>())),
        ]
    })
}

/// Structurally valid diagrams of any kinds and connection shapes, with
/// unknown top-level fields.
pub fn diagram() -> impl Strategy<Value = Diagram> {
    (
        "[A-Za-z0-9_-]{1,16}",
        "\\PC{0,30}",
        0i64..4_102_444_800_000,
        0i64..100_000_000,
        proptest::collection::vec(element_spec(), 0..9),
        proptest::collection::vec((any::<bool>(), any::<usize>(), any::<usize>(), any::<bool>()), 0..12),
        proptest::collection::btree_map("x_[a-z]{1,6}", json_value(), 0..3),
    )
        .prop_map(|(id, title, created, delta, specs, links, extra)| {
            let elements: Vec<Element> = specs
                .into_iter()
                .enumerate()
                .map(|(i, (kind, label, note, pos))| Element {
                    id: ElementId::from(format!("{id}-e{i}")),
                    kind,
                    label,
                    note,
                    position: pos.map(|(x, y)| Point::new(x, y)),
                })
                .collect();
            let mut connections: Vec<Connection> = Vec::new();
            if !elements.is_empty() {
                for (causal, s, t, to_connection) in links {
                    let source = elements[s % elements.len()].id.clone();
                    let cid = ConnectionId::from(format!("{id}-c{}", connections.len()));
                    let (kind, target) = if causal || !to_connection || connections.is_empty() {
                        let target = elements[t % elements.len()].id.clone();
                        if target == source {
                            continue;
                        }
                        let kind = if causal { ConnectionKind::Causal } else { ConnectionKind::Annotates };
                        (kind, Target::Element(target))
                    } else {
                        let target = connections[t % connections.len()].id.clone();
                        (ConnectionKind::Annotates, Target::Connection(target))
                    };
                    connections.push(Connection {
                        id: cid,
                        source,
                        target,
                        kind,
                    });
                }
            }
            let created = DateTime::from_timestamp_millis(created).unwrap();
            let modified = DateTime::from_timestamp_millis(created.timestamp_millis() + delta).unwrap();
            Diagram::from_parts(DiagramId::from(id), title, created, modified, elements, connections)
                .expect("generator builds valid diagrams")
                .with_extra(extra.into_iter().collect())
        })
}

/// Diagrams over stem kinds plus annotations, for checker comparisons.
pub fn checker_diagram() -> impl Strategy<Value = Diagram> {
    (
        proptest::collection::vec(prop_oneof![4 => stem_kind(), 1 => kind()], 0..7),
        proptest::collection::vec((any::<bool>(), any::<usize>(), any::<usize>(), 0u8..4), 0..10),
    )
        .prop_map(|(kinds, links)| {
            let elements: Vec<Element> = kinds
                .iter()
                .enumerate()
                .map(|(i, k)| Element {
                    id: ElementId::from(format!("e{i}")),
                    kind: *k,
                    label: format!("{} {i}", k.display_name()),
                    note: None,
                    position: None,
                })
                .collect();
            let mut connections: Vec<Connection> = Vec::new();
            if !elements.is_empty() {
                for (_, s, t, mode) in links {
                    let source = elements[s % elements.len()].id.clone();
                    let id = ConnectionId::from(format!("c{}", connections.len()));
                    let (kind, target) = match mode {
                        0 | 1 => (ConnectionKind::Causal, Target::Element(elements[t % elements.len()].id.clone())),
                        2 => (ConnectionKind::Annotates, Target::Element(elements[t % elements.len()].id.clone())),
                        _ if !connections.is_empty() => (
                            ConnectionKind::Annotates,
                            Target::Connection(connections[t % connections.len()].id.clone()),
                        ),
                        _ => continue,
                    };
                    if target.element() == Some(&source) {
                        continue;
                    }
                    connections.push(Connection { id, source, target, kind });
                }
            }
            let created = DateTime::from_timestamp_millis(0).unwrap();
            Diagram::from_parts(DiagramId::from("gen"), "gen", created, created, elements, connections).unwrap()
        })
}
