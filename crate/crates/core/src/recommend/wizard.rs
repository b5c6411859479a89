//! Backward-mapping wizard.
//!
//! The wizard starts from the distal outcome and works back through the
//! barrier, proximal outcome and strategy to the mechanism. Each accepted
//! entry advances exactly one step; a completed session materializes into a
//! five-element stem that passes the checker.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{prompt, Prompt, RecommendError, SuggestionRequest, SUGGESTION_COUNT};
use crate::glossary::Glossary;
use crate::layout::{layout, LayoutConfig};
use crate::model::{new_element, now_millis, Connection, Diagram, DiagramId, ElementKind, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WizardStep {
    DistalOutcome,
    Barrier,
    ProximalOutcome,
    Strategy,
    Mechanism,
    Done,
}

impl WizardStep {
    pub const ORDER: [WizardStep; 6] = [
        WizardStep::DistalOutcome,
        WizardStep::Barrier,
        WizardStep::ProximalOutcome,
        WizardStep::Strategy,
        WizardStep::Mechanism,
        WizardStep::Done,
    ];

    /// The element kind collected at this step; `None` once done.
    pub fn kind(self) -> Option<ElementKind> {
        match self {
            WizardStep::DistalOutcome => Some(ElementKind::DistalOutcome),
            WizardStep::Barrier => Some(ElementKind::Barrier),
            WizardStep::ProximalOutcome => Some(ElementKind::ProximalOutcome),
            WizardStep::Strategy => Some(ElementKind::Strategy),
            WizardStep::Mechanism => Some(ElementKind::Mechanism),
            WizardStep::Done => None,
        }
    }

    pub fn next(self) -> WizardStep {
        let i = Self::ORDER.iter().position(|s| *s == self).expect("listed");
        Self::ORDER[(i + 1).min(Self::ORDER.len() - 1)]
    }

    fn index(self) -> usize {
        Self::ORDER.iter().position(|s| *s == self).expect("listed")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WizardEntry {
    pub kind: ElementKind,
    pub label: String,
}

/// Wizard state. Fields are read-only; transitions consume the session and
/// return the next one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSession")]
pub struct WizardSession {
    id: String,
    step: WizardStep,
    entries: Vec<WizardEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distal_hint: Option<String>,
    pending_suggestions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_board: Option<DiagramId>,
    created: DateTime<Utc>,
    modified: DateTime<Utc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSession {
    id: String,
    step: WizardStep,
    entries: Vec<WizardEntry>,
    #[serde(default)]
    distal_hint: Option<String>,
    #[serde(default)]
    pending_suggestions: Vec<String>,
    #[serde(default)]
    target_board: Option<DiagramId>,
    created: DateTime<Utc>,
    modified: DateTime<Utc>,
}

impl TryFrom<RawSession> for WizardSession {
    type Error = String;

    fn try_from(raw: RawSession) -> Result<Self, String> {
        if raw.id.is_empty() {
            return Err("session id must not be empty".into());
        }
        if raw.entries.len() != raw.step.index() {
            return Err(format!(
                "step `{:?}` needs exactly {} entries, found {}",
                raw.step,
                raw.step.index(),
                raw.entries.len()
            ));
        }
        for (entry, step) in raw.entries.iter().zip(WizardStep::ORDER) {
            if Some(entry.kind) != step.kind() {
                return Err(format!("entry for {} is out of order", entry.kind));
            }
            if entry.label.trim().is_empty() {
                return Err(format!("entry for {} has an empty label", entry.kind));
            }
        }
        if raw.pending_suggestions.len() > SUGGESTION_COUNT {
            return Err(format!("at most {SUGGESTION_COUNT} pending suggestions"));
        }
        if raw.step == WizardStep::Done && !raw.pending_suggestions.is_empty() {
            return Err("a completed session has no pending suggestions".into());
        }
        Ok(WizardSession {
            id: raw.id,
            step: raw.step,
            entries: raw.entries,
            distal_hint: raw.distal_hint,
            pending_suggestions: raw.pending_suggestions,
            target_board: raw.target_board,
            created: raw.created,
            modified: raw.modified,
        })
    }
}

/// A fresh session at the distal-outcome step. The hint pre-fills the input
/// box; it is not an accepted entry.
pub fn start_session(distal_hint: Option<String>) -> WizardSession {
    let now = now_millis();
    WizardSession {
        id: uuid::Uuid::new_v4().to_string(),
        step: WizardStep::DistalOutcome,
        entries: Vec::new(),
        distal_hint: distal_hint.filter(|h| !h.trim().is_empty()),
        pending_suggestions: Vec::new(),
        target_board: None,
        created: now,
        modified: now,
    }
}

impl WizardSession {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn step(&self) -> WizardStep {
        self.step
    }

    /// Accepted entries in acceptance order.
    pub fn entries(&self) -> &[WizardEntry] {
        &self.entries
    }

    pub fn entry(&self, kind: ElementKind) -> Option<&str> {
        self.entries.iter().find(|e| e.kind == kind).map(|e| e.label.as_str())
    }

    pub fn distal_hint(&self) -> Option<&str> {
        self.distal_hint.as_deref()
    }

    pub fn pending_suggestions(&self) -> &[String] {
        &self.pending_suggestions
    }

    pub fn target_board(&self) -> Option<&DiagramId> {
        self.target_board.as_ref()
    }

    pub fn created(&self) -> DateTime<Utc> {
        self.created
    }

    pub fn modified(&self) -> DateTime<Utc> {
        self.modified
    }

    pub fn is_done(&self) -> bool {
        self.step == WizardStep::Done
    }

    /// Records `label` for the current step and moves to the next one.
    pub fn accept_entry(mut self, label: &str) -> Result<Self, RecommendError> {
        let kind = self.step.kind().ok_or(RecommendError::SessionComplete)?;
        let label = label.trim();
        if label.is_empty() {
            return Err(RecommendError::EmptyLabel);
        }
        self.entries.push(WizardEntry {
            kind,
            label: label.to_string(),
        });
        self.step = self.step.next();
        self.pending_suggestions.clear();
        self.modified = now_millis().max(self.created);
        Ok(self)
    }

    /// The request for the current step's suggestions.
    pub fn suggestion_request(&self) -> Result<SuggestionRequest, RecommendError> {
        let kind = self.step.kind().ok_or(RecommendError::SessionComplete)?;
        Ok(SuggestionRequest::wizard(
            kind,
            self.entries.iter().map(|e| (e.kind, e.label.clone())),
        ))
    }

    /// Stores suggestions for the current step (at most five are kept).
    pub fn with_suggestions(mut self, candidates: Vec<String>) -> Result<Self, RecommendError> {
        if self.is_done() {
            return Err(RecommendError::SessionComplete);
        }
        self.pending_suggestions = candidates.into_iter().take(SUGGESTION_COUNT).collect();
        self.modified = now_millis().max(self.created);
        Ok(self)
    }

    pub fn with_target_board(mut self, board: DiagramId) -> Self {
        self.target_board = Some(board);
        self.modified = now_millis().max(self.created);
        self
    }
}

pub fn build_wizard_prompt(session: &WizardSession) -> Result<Prompt, RecommendError> {
    build_wizard_prompt_with(Glossary::bundled(), session)
}

pub fn build_wizard_prompt_with(glossary: &Glossary, session: &WizardSession) -> Result<Prompt, RecommendError> {
    prompt::render(glossary, &session.suggestion_request()?)
}

/// Turns a completed session into a laid-out diagram:
/// strategy → mechanism → barrier → proximal outcome → distal outcome.
pub fn materialize(session: &WizardSession, anchor: Point) -> Result<Diagram, RecommendError> {
    if !session.is_done() {
        return Err(RecommendError::SessionIncomplete(format!("{:?}", session.step)));
    }
    const STEM: [ElementKind; 5] = [
        ElementKind::Strategy,
        ElementKind::Mechanism,
        ElementKind::Barrier,
        ElementKind::ProximalOutcome,
        ElementKind::DistalOutcome,
    ];
    let elements: Vec<_> = STEM
        .iter()
        .map(|k| new_element(*k, session.entry(*k).expect("done session has every entry"), None))
        .collect();
    let title = format!("Pathway to: {}", session.entry(ElementKind::DistalOutcome).unwrap_or_default());
    let mut diagram = Diagram::new(title);
    for e in &elements {
        diagram = diagram.add_element(e.clone()).expect("fresh ids");
    }
    for pair in elements.windows(2) {
        diagram = diagram
            .add_connection(Connection::causal(&pair[0].id, &pair[1].id))
            .expect("fresh ids");
    }
    Ok(layout(&diagram, anchor, &LayoutConfig::default()))
}
