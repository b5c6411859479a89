//! Prompt rendering for the wizard and brainstorming.
//!
//! Every prompt is the glossary preamble (sent as the system message)
//! followed by the instruction and one `- element: content` bullet per
//! context entry (sent as the user message).

use super::{ContextItem, RecommendError, Relation, SuggestionMode, SuggestionRequest, SUGGESTION_COUNT};
use crate::glossary::Glossary;
use crate::model::ElementKind;

/// Fixed suffix asking for a list we can parse.
pub const ANSWER_FORMAT: &str = "Answer with a numbered list, one candidate per line, no explanations.";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl Prompt {
    /// The full prompt as one text: preamble, blank line, instruction.
    pub fn text(&self) -> String {
        format!("{}\n{}", self.system, self.user)
    }
}

fn join_names(kinds: &[ElementKind]) -> String {
    let names: Vec<&str> = kinds.iter().map(|k| k.display_name()).collect();
    match names.as_slice() {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn bullet(item: &ContextItem) -> String {
    // one bullet per line, whatever the user typed
    let content = item.label.split_whitespace().collect::<Vec<_>>().join(" ");
    format!("- {}: {content}\n", item.kind.display_name())
}

pub(crate) fn render(glossary: &Glossary, request: &SuggestionRequest) -> Result<Prompt, RecommendError> {
    request.validate()?;
    let target = request.target_kind.display_name();
    let kinds: Vec<ElementKind> = request.context.iter().map(|c| c.kind).collect();
    let mut user = match request.mode {
        SuggestionMode::WizardNext if kinds.is_empty() => {
            format!("Recommend {SUGGESTION_COUNT} possible {target}:\n")
        }
        SuggestionMode::WizardNext => format!(
            "Based on the {} the user have input, recommend {SUGGESTION_COUNT} possible {target}:\n",
            join_names(&kinds)
        ),
        SuggestionMode::Brainstorm => {
            let preceding = request.context.iter().find(|c| c.relation == Relation::Preceding);
            let following = request.context.iter().find(|c| c.relation == Relation::Following);
            let names: Vec<ElementKind> = preceding.iter().chain(following.iter()).map(|c| c.kind).collect();
            if names.is_empty() {
                return Err(RecommendError::NoContext);
            }
            format!(
                "Based on the {} the user has input, recommend {SUGGESTION_COUNT} possible {target}:\n",
                join_names(&names)
            )
        }
    };
    for item in ordered_context(request) {
        user.push_str(&bullet(item));
    }
    user.push('\n');
    user.push_str(ANSWER_FORMAT);
    user.push('\n');
    Ok(Prompt {
        system: glossary.preamble(),
        user,
    })
}

/// Wizard context keeps acceptance order; brainstorm context puts the
/// preceding neighbour first.
fn ordered_context(request: &SuggestionRequest) -> Vec<&ContextItem> {
    match request.mode {
        SuggestionMode::WizardNext => request.context.iter().collect(),
        SuggestionMode::Brainstorm => {
            let mut items: Vec<&ContextItem> = request.context.iter().collect();
            items.sort_by_key(|c| c.relation != Relation::Preceding);
            items
        }
    }
}
