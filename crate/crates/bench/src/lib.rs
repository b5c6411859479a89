//! Synthetic diagrams for the benchmarks.

use cpd_core::{new_element, Connection, Diagram, ElementKind, Target};

const STEM: [ElementKind; 5] = [
    ElementKind::Strategy,
    ElementKind::Mechanism,
    ElementKind::Barrier,
    ElementKind::ProximalOutcome,
    ElementKind::DistalOutcome,
];

/// `n` parallel five-element pathways, each with a moderator on its first link.
pub fn pathways(n: usize) -> Diagram {
    let base = Diagram::new(format!("{n} pathways"));
    let mut elements = Vec::new();
    let mut connections = Vec::new();
    for i in 0..n {
        let stem: Vec<_> = STEM
            .iter()
            .map(|&k| new_element(k, format!("{} {i}", k.display_name()), None))
            .collect();
        for pair in stem.windows(2) {
            connections.push(Connection::causal(&pair[0].id, &pair[1].id));
        }
        let first = connections[connections.len() - 4].id.clone();
        let moderator = new_element(ElementKind::Moderator, format!("Moderator {i}"), None);
        connections.push(Connection::annotates(&moderator.id, Target::Connection(first)));
        elements.extend(stem);
        elements.push(moderator);
    }
    Diagram::from_parts(base.id().clone(), base.title(), base.created(), base.modified(), elements, connections)
        .expect("generated diagram is valid")
}
