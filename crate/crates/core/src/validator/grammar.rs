use crate::model::ElementKind::{self, *};

/// Stem successor relation. `Barrier -> Mechanism` is allowed alongside the
/// left-to-right `Mechanism -> Barrier`; the only self-successor is
/// `IntermediateOutcome`.
pub fn successors(kind: ElementKind) -> &'static [ElementKind] {
    match kind {
        Strategy => &[Mechanism],
        Mechanism => &[Barrier, ProximalOutcome],
        Barrier => &[ProximalOutcome, Mechanism],
        ProximalOutcome => &[IntermediateOutcome, DistalOutcome],
        IntermediateOutcome => &[IntermediateOutcome, DistalOutcome],
        DistalOutcome | Moderator | Precondition => &[],
    }
}

pub fn allows(source: ElementKind, target: ElementKind) -> bool {
    successors(source).contains(&target)
}

/// Kinds that may precede `kind` on the stem.
pub fn predecessors(kind: ElementKind) -> Vec<ElementKind> {
    ElementKind::STEM
        .into_iter()
        .filter(|k| allows(*k, kind))
        .collect()
}

/// Kinds a complete pathway must contain: the five the wizard collects.
pub const REQUIRED: [ElementKind; 5] = [Strategy, Mechanism, Barrier, ProximalOutcome, DistalOutcome];
