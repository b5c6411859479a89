use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{CompletionRequest, CompletionResponse, Gateway, GatewayError};
use crate::model::ElementKind;

const PHRASES: &str = include_str!("../../data/phrases.toml");
const PICK: usize = 5;

fn phrase_bank() -> &'static BTreeMap<ElementKind, Vec<String>> {
    static BANK: OnceLock<BTreeMap<ElementKind, Vec<String>>> = OnceLock::new();
    BANK.get_or_init(|| toml::from_str(PHRASES).expect("bundled phrase bank is valid"))
}

/// Deterministic offline backend.
///
/// Reads the target kind (`recommend 5 possible <kind>:`) and the `- kind:
/// label` context bullets out of the user prompt, hashes them with the seed,
/// and answers with five phrases from a per-kind bank as a numbered list.
#[derive(Clone, Debug)]
pub struct MockGateway {
    seed: u64,
}

impl MockGateway {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The phrases the mock would answer with for this target and context.
    pub fn pick(&self, target: ElementKind, context_labels: &[&str]) -> Vec<String> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(target.key().as_bytes());
        for label in context_labels {
            hasher.update([0u8]);
            hasher.update(label.as_bytes());
        }
        let digest: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(digest);
        let bank = &phrase_bank()[&target];
        index::sample(&mut rng, bank.len(), PICK)
            .into_iter()
            .map(|i| bank[i].clone())
            .collect()
    }
}

/// Pulls the target kind and context labels out of a rendered prompt.
pub(crate) fn read_prompt(user: &str) -> Option<(ElementKind, Vec<&str>)> {
    const MARKER: &str = "recommend 5 possible ";
    let mut lines = user.lines();
    let target = lines.by_ref().find_map(|line| {
        let lower = line.to_ascii_lowercase();
        let at = lower.find(MARKER)?;
        let rest = &line[at + MARKER.len()..];
        rest.trim_end().strip_suffix(':')?.parse::<ElementKind>().ok()
    })?;
    let labels = lines
        .filter_map(|line| {
            let (kind, label) = line.trim_start().strip_prefix("- ")?.split_once(": ")?;
            kind.parse::<ElementKind>().ok()?;
            Some(label.trim())
        })
        .collect();
    Some((target, labels))
}

impl Gateway for MockGateway {
    fn backend_id(&self) -> String {
        format!("mock:{}", self.seed)
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        let started = Instant::now();
        let (target, labels) = read_prompt(&request.user).ok_or_else(|| GatewayError::Api {
            status: 400,
            body: "mock backend found no `recommend 5 possible <element>:` line in the prompt".into(),
        })?;
        let text = self
            .pick(target, &labels)
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{}. {p}", i + 1))
            .collect::<Vec<_>>()
            .join("\n");
        Ok(CompletionResponse {
            text,
            model: self.backend_id(),
            prompt_tokens: None,
            completion_tokens: None,
            latency: started.elapsed(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bank_has_enough_phrases() {
        for kind in ElementKind::ALL {
            let phrases = &phrase_bank()[&kind];
            assert!(phrases.len() >= 20, "{kind}: {}", phrases.len());
            let mut unique = phrases.clone();
            unique.sort();
            unique.dedup();
            assert_eq!(unique.len(), phrases.len(), "{kind} has duplicates");
        }
    }

    #[test]
    fn reads_prompt_parts() {
        let user = "Based on the distal outcome the user have input, recommend 5 possible barrier:\n- distal outcome: Increased physical activity\n\nAnswer with a numbered list.";
        let (kind, labels) = read_prompt(user).unwrap();
        assert_eq!(kind, ElementKind::Barrier);
        assert_eq!(labels, vec!["Increased physical activity"]);
    }

    #[test]
    fn deterministic_per_seed() {
        let user = "Based on the distal outcome the user have input, recommend 5 possible barrier:\n- distal outcome: Increased physical activity";
        let req = CompletionRequest::new("", user);
        let a = MockGateway::new(42).complete(&req).unwrap().text;
        let b = MockGateway::new(42).complete(&req).unwrap().text;
        let c = MockGateway::new(43).complete(&req).unwrap().text;
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.lines().count(), 5);
        assert!(a.starts_with("1. "));
    }

    #[test]
    fn no_target_is_an_error() {
        let req = CompletionRequest::new("", "hello");
        assert!(matches!(MockGateway::new(1).complete(&req), Err(GatewayError::Api { .. })));
    }
}
