//! Brute-force reference checker. Shares nothing with the library beyond
//! the data model: the successor table is restated here and endpoints come
//! from enumerating every simple causal path.

use std::collections::BTreeSet;

use cpd_core::{ConnectionKind, Diagram, DiagnosticCode, ElementKind, Target};

use ElementKind::*;

pub const ALLOWED: [(ElementKind, ElementKind); 9] = [
    (Strategy, Mechanism),
    (Mechanism, Barrier),
    (Mechanism, ProximalOutcome),
    (Barrier, ProximalOutcome),
    (Barrier, Mechanism),
    (ProximalOutcome, IntermediateOutcome),
    (ProximalOutcome, DistalOutcome),
    (IntermediateOutcome, IntermediateOutcome),
    (IntermediateOutcome, DistalOutcome),
];

pub const REQUIRED: [ElementKind; 5] = [Strategy, Mechanism, Barrier, ProximalOutcome, DistalOutcome];

fn is_stem(k: ElementKind) -> bool {
    !matches!(k, Moderator | Precondition)
}

/// (code, subject ids, missing kind) triples the checker should report,
/// Error severity only, sorted.
pub fn expected(d: &Diagram) -> Vec<(DiagnosticCode, Vec<String>, Option<ElementKind>)> {
    let mut out = Vec::new();
    let kind_of = |id: &str| d.elements().iter().find(|e| e.id.as_str() == id).unwrap().kind;

    for k in REQUIRED {
        if !d.elements().iter().any(|e| e.kind == k) {
            out.push((DiagnosticCode::MissingRequiredElement, vec![], Some(k)));
        }
    }

    for e in d.elements() {
        let touches = |c: &cpd_core::Connection| {
            c.source == e.id || matches!(&c.target, Target::Element(t) if *t == e.id)
        };
        let connected = if is_stem(e.kind) {
            d.connections().iter().any(|c| c.kind == ConnectionKind::Causal && touches(c))
        } else {
            d.connections().iter().any(touches)
        };
        if !connected {
            out.push((DiagnosticCode::DisconnectedElement, vec![e.id.to_string()], None));
        }
    }

    for c in d.connections() {
        let sk = kind_of(c.source.as_str());
        let bad = match (c.kind, &c.target) {
            (ConnectionKind::Causal, Target::Element(t)) => !ALLOWED.contains(&(sk, kind_of(t.as_str()))),
            (ConnectionKind::Causal, Target::Connection(_)) => false,
            (ConnectionKind::Annotates, Target::Element(t)) => is_stem(sk) || !is_stem(kind_of(t.as_str())),
            (ConnectionKind::Annotates, Target::Connection(t)) => {
                is_stem(sk) || d.connection(t).unwrap().kind != ConnectionKind::Causal
            }
        };
        if bad {
            out.push((DiagnosticCode::InvalidOrder, vec![c.id.to_string()], None));
        }
    }

    // causal graph over element indices
    let ids: Vec<&str> = d.elements().iter().map(|e| e.id.as_str()).collect();
    let pos = |id: &str| ids.iter().position(|x| *x == id).unwrap();
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for c in d.connections() {
        if let (ConnectionKind::Causal, Target::Element(t)) = (c.kind, &c.target) {
            edges.insert((pos(c.source.as_str()), pos(t.as_str())));
        }
    }
    let n = ids.len();
    let succ = |v: usize| edges.iter().filter(move |(a, _)| *a == v).map(|(_, b)| *b);
    let pred = |v: usize| edges.iter().filter(move |(_, b)| *b == v).map(|(a, _)| *a);

    let mut starts = BTreeSet::new();
    let mut ends = BTreeSet::new();
    let mut stack: Vec<Vec<usize>> = (0..n)
        .filter(|v| edges.iter().any(|(a, b)| a == v || b == v))
        .map(|v| vec![v])
        .collect();
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        let mut extended = false;
        for w in succ(last) {
            if !path.contains(&w) {
                let mut next = path.clone();
                next.push(w);
                stack.push(next);
                extended = true;
            }
        }
        if extended {
            continue;
        }
        let first = path[0];
        if pred(first).all(|p| path.contains(&p)) {
            starts.insert(first);
            ends.insert(last);
        }
    }
    for (v, id) in ids.iter().enumerate() {
        let k = d.elements()[v].kind;
        if (starts.contains(&v) && k != Strategy) || (ends.contains(&v) && k != DistalOutcome) {
            out.push((DiagnosticCode::InvalidEndpoints, vec![id.to_string()], None));
        }
    }

    out.sort();
    out
}

/// The same triples taken from the library's output.
pub fn actual(d: &Diagram) -> Vec<(DiagnosticCode, Vec<String>, Option<ElementKind>)> {
    let mut got: Vec<_> = cpd_core::check(d)
        .into_iter()
        .filter(|x| x.is_error())
        .map(|x| (x.code, x.subjects, x.kind))
        .collect();
    got.sort();
    got
}
