use std::collections::HashMap;
use std::fmt::Write;

use super::{layout, LayoutConfig, BOX_HEIGHT, BOX_WIDTH};
use crate::model::{shape_of, ConnectionId, ConnectionKind, Diagram, ElementId, Point, Shape, Target};

const MARGIN: f64 = 40.0;
const WRAP: usize = 22;
const MAX_LINES: usize = 3;
const LINE_HEIGHT: f64 = 16.0;

fn num(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    // avoid "-0"
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if c.is_control() => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Greedy word wrap to at most three lines; overflow ends in an ellipsis.
pub(crate) fn wrap_label(label: &str) -> Vec<String> {
    let mut lines: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut truncated = false;
    for word in label.split_whitespace() {
        let mut word: String = word.to_string();
        loop {
            let sep = usize::from(!current.is_empty());
            if current.chars().count() + sep + word.chars().count() <= WRAP {
                if sep == 1 {
                    current.push(' ');
                }
                current.push_str(&word);
                break;
            }
            if !current.is_empty() {
                lines.push(std::mem::take(&mut current));
                continue;
            }
            // single word longer than a line
            let head: String = word.chars().take(WRAP).collect();
            lines.push(head);
            word = word.chars().skip(WRAP).collect();
            if word.is_empty() {
                break;
            }
        }
        if lines.len() >= MAX_LINES {
            truncated = true;
            break;
        }
    }
    if !current.is_empty() {
        lines.push(current);
    }
    if lines.len() > MAX_LINES {
        truncated = true;
        lines.truncate(MAX_LINES);
    }
    if truncated {
        let last = lines.last_mut().expect("three lines");
        let mut kept: String = last.chars().take(WRAP - 1).collect();
        kept = kept.trim_end().to_string();
        kept.push('\u{2026}');
        *last = kept;
    }
    lines
}

fn outline(shape: Shape) -> String {
    let (hw, hh) = (BOX_WIDTH / 2.0, BOX_HEIGHT / 2.0);
    let poly = |pts: &[(f64, f64)]| {
        let pts: Vec<String> = pts.iter().map(|(x, y)| format!("{},{}", num(*x), num(*y))).collect();
        format!(r#"<polygon points="{}"/>"#, pts.join(" "))
    };
    match shape {
        Shape::RoundedRectangle | Shape::Rectangle => {
            let rx = if shape == Shape::RoundedRectangle { 16.0 } else { 0.0 };
            format!(
                r#"<rect x="{}" y="{}" width="{}" height="{}" rx="{}"/>"#,
                num(-hw),
                num(-hh),
                num(BOX_WIDTH),
                num(BOX_HEIGHT),
                num(rx)
            )
        }
        Shape::Diamond => poly(&[(0.0, -hh), (hw, 0.0), (0.0, hh), (-hw, 0.0)]),
        Shape::Octagon => {
            let c = 20.0;
            poly(&[
                (-hw + c, -hh),
                (hw - c, -hh),
                (hw, -hh + c),
                (hw, hh - c),
                (hw - c, hh),
                (-hw + c, hh),
                (-hw, hh - c),
                (-hw, -hh + c),
            ])
        }
        Shape::IsoscelesTrapezoid => poly(&[(-hw + 20.0, -hh), (hw - 20.0, -hh), (hw, hh), (-hw, hh)]),
        Shape::Circle => format!(r#"<ellipse cx="0" cy="0" rx="{}" ry="{}"/>"#, num(hw), num(hh)),
    }
}

/// Where the segment from the box centre `from` towards `to` leaves the box.
fn box_exit(from: Point, to: Point) -> Point {
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    if dx == 0.0 && dy == 0.0 {
        return from;
    }
    let tx = if dx == 0.0 { f64::INFINITY } else { (BOX_WIDTH / 2.0) / dx.abs() };
    let ty = if dy == 0.0 { f64::INFINITY } else { (BOX_HEIGHT / 2.0) / dy.abs() };
    let t = tx.min(ty).min(1.0);
    Point::new(from.x + dx * t, from.y + dy * t)
}

/// Standalone SVG 1.1 rendering. Elements without a position trigger a
/// default layout of the whole diagram first.
pub fn to_svg(diagram: &Diagram) -> String {
    let placed;
    let diagram = if diagram.elements().iter().any(|e| e.position.is_none()) {
        placed = layout(diagram, Point::default(), &LayoutConfig::default());
        &placed
    } else {
        diagram
    };
    let pos: HashMap<&ElementId, Point> = diagram
        .elements()
        .iter()
        .map(|e| (&e.id, e.position.expect("positioned")))
        .collect();

    let (mut min_x, mut min_y, mut max_x, mut max_y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (i, p) in pos.values().enumerate() {
        if i == 0 {
            (min_x, min_y, max_x, max_y) = (p.x, p.y, p.x, p.y);
        }
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    let vx = min_x - BOX_WIDTH / 2.0 - MARGIN;
    let vy = min_y - BOX_HEIGHT / 2.0 - MARGIN;
    let vw = max_x - min_x + BOX_WIDTH + 2.0 * MARGIN;
    let vh = max_y - min_y + BOX_HEIGHT + 2.0 * MARGIN;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="{} {} {} {}">"#,
        num(vw),
        num(vh),
        num(vx),
        num(vy),
        num(vw),
        num(vh)
    );
    let _ = writeln!(out, "<title>{}</title>", escape(diagram.title()));
    out.push_str(concat!(
        "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" ",
        "markerWidth=\"8\" markerHeight=\"8\" orient=\"auto\">",
        "<path d=\"M0,0 L10,5 L0,10 z\"/></marker></defs>\n"
    ));
    out.push_str(
        "<style>.element polygon,.element rect,.element ellipse{fill:#fff;stroke:#333;stroke-width:1.5}\
         .element text{font-family:Helvetica,Arial,sans-serif;font-size:13px}\
         .connection{stroke:#333;stroke-width:1.5;fill:none}\
         .connection.annotates{stroke-dasharray:6 4}</style>\n",
    );

    // annotated connections are drawn to their midpoint
    let midpoint = |id: &ConnectionId| -> Option<Point> {
        let c = diagram.connection(id)?;
        let a = pos.get(&c.source)?;
        let b = pos.get(c.target_element()?)?;
        Some(Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0))
    };
    out.push_str("<g class=\"connections\">\n");
    for c in diagram.connections() {
        let Some(&from) = pos.get(&c.source) else { continue };
        let (to, end) = match &c.target {
            Target::Element(t) => {
                let Some(&to) = pos.get(t) else { continue };
                (to, box_exit(to, from))
            }
            Target::Connection(t) => {
                let Some(m) = midpoint(t) else { continue };
                (m, m)
            }
        };
        let start = box_exit(from, to);
        let class = match c.kind {
            ConnectionKind::Causal => "connection causal",
            ConnectionKind::Annotates => "connection annotates",
        };
        let _ = writeln!(
            out,
            r#"<line class="{class}" data-id="{}" x1="{}" y1="{}" x2="{}" y2="{}" marker-end="url(#arrow)"/>"#,
            escape(c.id.as_str()),
            num(start.x),
            num(start.y),
            num(end.x),
            num(end.y)
        );
    }
    out.push_str("</g>\n<g class=\"elements\">\n");
    for e in diagram.elements() {
        let p = pos[&e.id];
        let _ = writeln!(
            out,
            r#"<g class="element" data-id="{}" data-kind="{}" transform="translate({},{})">"#,
            escape(e.id.as_str()),
            e.kind.key(),
            num(p.x),
            num(p.y)
        );
        let _ = writeln!(out, "{}", outline(shape_of(e.kind)));
        let lines = wrap_label(&e.label);
        let top = -(lines.len() as f64 - 1.0) * LINE_HEIGHT / 2.0 + 4.0;
        for (i, line) in lines.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="0" y="{}" text-anchor="middle">{}</text>"#,
                num(top + i as f64 * LINE_HEIGHT),
                escape(line)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</g>\n</svg>\n");
    out
}
