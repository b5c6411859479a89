use std::fmt::Write;

use crate::model::{shape_of, ConnectionKind, Diagram, ElementId, Shape, Target};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn node_attrs(shape: Shape) -> &'static str {
    match shape {
        Shape::RoundedRectangle => "shape=box, style=rounded",
        Shape::Diamond => "shape=diamond",
        Shape::Octagon => "shape=octagon",
        Shape::Rectangle => "shape=box",
        Shape::IsoscelesTrapezoid => "shape=trapezium",
        Shape::Circle => "shape=circle",
    }
}

/// Follows annotation targets until an element is reached. Connections that
/// annotate other connections are walked at most once each.
fn resolve<'a>(diagram: &'a Diagram, target: &'a Target) -> Option<&'a ElementId> {
    let mut current = target;
    for _ in 0..=diagram.connections().len() {
        match current {
            Target::Element(id) => return Some(id),
            Target::Connection(id) => current = &diagram.connection(id)?.target,
        }
    }
    None
}

/// Graphviz source for the diagram. Annotations are dashed edges; one that
/// annotates a connection points at that connection's head.
pub fn to_dot(diagram: &Diagram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(diagram.title()));
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [fontname=\"Helvetica\"];\n");
    for e in diagram.elements() {
        let _ = writeln!(
            out,
            "  {} [label={}, {}];",
            quote(e.id.as_str()),
            quote(&e.label),
            node_attrs(shape_of(e.kind))
        );
    }
    for c in diagram.connections() {
        let Some(head) = resolve(diagram, &c.target) else {
            continue;
        };
        let attrs = match c.kind {
            ConnectionKind::Causal => String::new(),
            ConnectionKind::Annotates => " [style=dashed, arrowhead=open]".to_string(),
        };
        let _ = writeln!(out, "  {} -> {}{};", quote(c.source.as_str()), quote(head.as_str()), attrs);
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::physical_activity;

    #[test]
    fn fig1_dot() {
        let dot = to_dot(&physical_activity());
        assert!(dot.starts_with("digraph \"") && dot.ends_with("}\n"));
        assert!(dot.contains("\"strategy\" [label=\"Display poster with positive messaging\", shape=box, style=rounded];"));
        assert!(dot.contains("\"barrier\" [label=\"Concerns about not being able to walk up all the stairs\", shape=octagon];"));
        assert!(dot.contains("\"strategy\" -> \"mechanism\";"));
        assert!(dot.contains("\"moderator\" -> \"mechanism\" [style=dashed, arrowhead=open];"));
        assert_eq!(dot.matches(" -> ").count(), 6);
    }

    #[test]
    fn quotes_are_escaped() {
        assert_eq!(quote("say \"hi\"\\\n"), r#""say \"hi\"\\\n""#);
    }
}
