//! Element definitions for tooltips, the help panel and prompt preambles.
//!
//! Definitions live in a versioned TOML file (`data/glossary.toml`) bundled
//! into the binary; a different file can be loaded with [`Glossary::from_path`].

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ElementKind;

const BUNDLED: &str = include_str!("../data/glossary.toml");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlossaryEntry {
    pub kind: ElementKind,
    pub definition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guidance: Option<String>,
}

#[derive(Debug, Error)]
pub enum GlossaryError {
    #[error("cannot read glossary file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid glossary file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("glossary has no entry for `{0}`")]
    Missing(&'static str),
    #[error("glossary entry for `{0}` has an empty definition")]
    Empty(&'static str),
}

#[derive(Deserialize)]
struct RawEntry {
    definition: String,
    guidance: Option<String>,
}

#[derive(Deserialize)]
struct RawGlossary {
    version: u32,
    #[serde(flatten)]
    entries: BTreeMap<ElementKind, RawEntry>,
}

/// One entry per element kind, in [`ElementKind::ALL`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Glossary {
    version: u32,
    entries: Vec<GlossaryEntry>,
}

impl Glossary {
    pub fn parse(text: &str) -> Result<Self, GlossaryError> {
        let mut raw: RawGlossary = toml::from_str(text)?;
        let mut entries = Vec::with_capacity(ElementKind::ALL.len());
        for kind in ElementKind::ALL {
            let e = raw.entries.remove(&kind).ok_or(GlossaryError::Missing(kind.key()))?;
            if e.definition.trim().is_empty() {
                return Err(GlossaryError::Empty(kind.key()));
            }
            entries.push(GlossaryEntry {
                kind,
                definition: e.definition.trim().to_string(),
                guidance: e.guidance.map(|g| g.trim().to_string()).filter(|g| !g.is_empty()),
            });
        }
        Ok(Self {
            version: raw.version,
            entries,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, GlossaryError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The definitions compiled into the crate.
    pub fn bundled() -> &'static Glossary {
        static CELL: OnceLock<Glossary> = OnceLock::new();
        CELL.get_or_init(|| Glossary::parse(BUNDLED).expect("bundled glossary is valid"))
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn define(&self, kind: ElementKind) -> &GlossaryEntry {
        &self.entries[kind as usize]
    }

    pub fn entries(&self) -> &[GlossaryEntry] {
        &self.entries
    }

    /// All definitions as a block of text, one line per kind. Prepended to
    /// every suggestion prompt.
    pub fn preamble(&self) -> String {
        let mut out = String::from("Definitions of the elements of a causal pathway diagram (CPD):\n");
        for e in &self.entries {
            out.push_str("- ");
            out.push_str(e.kind.display_name());
            out.push_str(": ");
            out.push_str(&e.definition);
            out.push('\n');
        }
        out
    }
}

/// Looks a kind up in the bundled glossary.
pub fn define(kind: ElementKind) -> GlossaryEntry {
    Glossary::bundled().define(kind).clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn strategy_definition_is_verbatim() {
        assert!(define(ElementKind::Strategy)
            .definition
            .starts_with("Strategy is an element that the diagram is intended to unpack."));
    }

    #[test]
    fn barrier_mentions_the_obstacle() {
        let b = define(ElementKind::Barrier);
        assert!(b.definition.contains("obstacle"));
        assert!(b.definition.contains("desired outcome"));
        assert_eq!(
            b.guidance.as_deref(),
            Some("What is the obstacle that is getting in the way of achieving the desired outcome?")
        );
    }

    #[test]
    fn total_and_distinct() {
        let defs: HashSet<String> = ElementKind::ALL.iter().map(|k| define(*k).definition).collect();
        assert_eq!(defs.len(), 8);
        assert!(defs.iter().all(|d| !d.is_empty()));
        for k in ElementKind::ALL {
            assert_eq!(define(k).kind, k);
        }
    }

    #[test]
    fn missing_kind_rejected() {
        let text = BUNDLED.replace("[moderator]", "[not_a_kind]");
        assert!(Glossary::parse(&text).is_err());
        let text = BUNDLED.split("[moderator]").next().unwrap();
        assert!(matches!(Glossary::parse(text), Err(GlossaryError::Missing("moderator"))));
    }

    #[test]
    fn override_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.toml");
        let text = BUNDLED.replace("A mechanism is the process", "A mechanism, in our words, is the process");
        std::fs::write(&path, text).unwrap();
        let g = Glossary::from_path(&path).unwrap();
        assert!(g.define(ElementKind::Mechanism).definition.contains("in our words"));
    }

    #[test]
    fn preamble_lists_all_kinds() {
        let p = Glossary::bundled().preamble();
        assert_eq!(p.lines().count(), 9);
        assert!(p.contains("- distal outcome: "));
    }
}
