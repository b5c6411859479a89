//! Suggestion engine: the backward-mapping wizard and brainstorming.
//!
//! Both features build a prompt from the glossary preamble and the user's
//! context, ask a [`Gateway`] for a completion, and parse up to five
//! candidates out of it.

mod parse;
mod prompt;
mod wizard;

pub use parse::parse_candidates;
pub use prompt::{Prompt, ANSWER_FORMAT};
pub use wizard::{
    build_wizard_prompt, build_wizard_prompt_with, materialize, start_session, WizardEntry, WizardSession,
    WizardStep,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glossary::Glossary;
use crate::llm::{CompletionRequest, Gateway, GatewayError};
use crate::model::ElementKind;

/// Candidates requested per call.
pub const SUGGESTION_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecommendError {
    #[error("label must not be empty")]
    EmptyLabel,
    #[error("the wizard session is already complete")]
    SessionComplete,
    #[error("the wizard session is not complete yet (next step: {0})")]
    SessionIncomplete(String),
    #[error("brainstorming needs a preceding or following component")]
    NoContext,
    #[error("invalid suggestion request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no candidates could be read from the model output")]
    UnparsableOutput { raw: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionMode {
    WizardNext,
    Brainstorm,
}

/// How a context entry relates to the element being suggested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// An entry accepted earlier in the wizard.
    Previous,
    Preceding,
    Following,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextItem {
    pub kind: ElementKind,
    pub label: String,
    pub relation: Relation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionRequest {
    pub mode: SuggestionMode,
    pub target_kind: ElementKind,
    pub context: Vec<ContextItem>,
    pub count: usize,
}

impl SuggestionRequest {
    pub fn wizard(target_kind: ElementKind, previous: impl IntoIterator<Item = (ElementKind, String)>) -> Self {
        Self {
            mode: SuggestionMode::WizardNext,
            target_kind,
            context: previous
                .into_iter()
                .map(|(kind, label)| ContextItem {
                    kind,
                    label,
                    relation: Relation::Previous,
                })
                .collect(),
            count: SUGGESTION_COUNT,
        }
    }

    pub fn brainstorm(
        target_kind: ElementKind,
        preceding: Option<(ElementKind, String)>,
        following: Option<(ElementKind, String)>,
    ) -> Self {
        let preceding = preceding.map(|(kind, label)| ContextItem {
            kind,
            label,
            relation: Relation::Preceding,
        });
        let following = following.map(|(kind, label)| ContextItem {
            kind,
            label,
            relation: Relation::Following,
        });
        Self {
            mode: SuggestionMode::Brainstorm,
            target_kind,
            context: preceding.into_iter().chain(following).collect(),
            count: SUGGESTION_COUNT,
        }
    }

    pub fn validate(&self) -> Result<(), RecommendError> {
        if self.count != SUGGESTION_COUNT {
            return Err(RecommendError::InvalidRequest(format!(
                "count is fixed at {SUGGESTION_COUNT}"
            )));
        }
        if self.context.iter().any(|c| c.label.trim().is_empty()) {
            return Err(RecommendError::InvalidRequest("context labels must not be empty".into()));
        }
        match self.mode {
            SuggestionMode::WizardNext => {
                if !self.target_kind.is_stem() {
                    return Err(RecommendError::InvalidRequest(format!(
                        "the wizard does not collect {}",
                        self.target_kind
                    )));
                }
                if self.context.iter().any(|c| c.relation != Relation::Previous) {
                    return Err(RecommendError::InvalidRequest(
                        "wizard context holds previous entries only".into(),
                    ));
                }
            }
            SuggestionMode::Brainstorm => {
                let count = |r: Relation| self.context.iter().filter(|c| c.relation == r).count();
                if count(Relation::Previous) > 0 || count(Relation::Preceding) > 1 || count(Relation::Following) > 1 {
                    return Err(RecommendError::InvalidRequest(
                        "brainstorm context is at most one preceding and one following component".into(),
                    ));
                }
                if self.context.is_empty() {
                    return Err(RecommendError::NoContext);
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub backend: String,
    pub request_id: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionResult {
    /// One to five trimmed, distinct candidates.
    pub candidates: Vec<String>,
    /// Unparsed model output.
    pub raw: String,
    pub provenance: Provenance,
}

/// Renders the brainstorming prompt with the bundled glossary.
pub fn build_brainstorm_prompt(request: &SuggestionRequest) -> Result<Prompt, RecommendError> {
    build_brainstorm_prompt_with(Glossary::bundled(), request)
}

pub fn build_brainstorm_prompt_with(glossary: &Glossary, request: &SuggestionRequest) -> Result<Prompt, RecommendError> {
    if request.mode != SuggestionMode::Brainstorm {
        return Err(RecommendError::InvalidRequest("not a brainstorm request".into()));
    }
    prompt::render(glossary, request)
}

/// Asks the gateway once and parses its answer.
pub fn suggest(request: &SuggestionRequest, gateway: &dyn Gateway) -> Result<SuggestionResult, RecommendError> {
    suggest_with(Glossary::bundled(), request, gateway)
}

pub fn suggest_with(
    glossary: &Glossary,
    request: &SuggestionRequest,
    gateway: &dyn Gateway,
) -> Result<SuggestionResult, RecommendError> {
    let prompt = prompt::render(glossary, request)?;
    let completion = CompletionRequest::new(prompt.system, prompt.user);
    let response = gateway.complete(&completion)?;
    let candidates = parse_candidates(&response.text);
    if candidates.is_empty() {
        return Err(RecommendError::UnparsableOutput { raw: response.text });
    }
    Ok(SuggestionResult {
        candidates,
        raw: response.text,
        provenance: Provenance {
            backend: gateway.backend_id(),
            request_id: completion.request_id,
        },
    })
}
