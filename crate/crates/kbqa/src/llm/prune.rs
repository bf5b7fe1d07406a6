//! Entity-entry pruning: a separate few-shot prompt picks the claims that
//! could matter for the question, and the entry is filtered down to them.
//!
//! The model output is only ever used to *select* among existing claims, so
//! the pruned entry is a sub-entry of the input by construction. Any failure
//! falls back to the unpruned entry.

use serde_json::Value;

use super::{LlmGateway, LlmRequest};
use crate::kb::{entry_edges_json, EntityEntry};

/// Runs the pruning prompt on an entry. Claims whose rendered key appears in
/// the returned JSON object are kept; when the model echoes a claim as an
/// object keyed by value text, only the echoed values survive.
pub fn prune_entry(question: &str, entry: &EntityEntry, gateway: &LlmGateway) -> EntityEntry {
    if entry.claims.is_empty() {
        return entry.clone();
    }
    let request = LlmRequest::prune(question, &entry.heading(), &entry_edges_json(entry));
    let raw = match gateway.complete(&request) {
        Ok(raw) => raw,
        Err(_) => return entry.clone(),
    };
    match apply_selection(entry, &raw) {
        Some(pruned) => pruned,
        None => entry.clone(),
    }
}

/// Interprets the model output as a claim selection. `None` means the output
/// was unusable and the caller should keep the original entry.
fn apply_selection(entry: &EntityEntry, raw: &str) -> Option<EntityEntry> {
    let selected = extract_json_object(raw)?;

    let mut pruned = entry.clone();
    pruned.claims = entry
        .claims
        .iter()
        .filter_map(|claim| {
            let echoed = selected.get(&claim.key())?;
            let mut kept = claim.clone();
            if let Value::Object(by_value) = echoed {
                // value-level selection: keep only the echoed value texts,
                // unless none of the keys correspond to actual values
                let narrowed: Vec<_> = claim
                    .values
                    .iter()
                    .filter(|v| by_value.contains_key(&v.value.display_text()))
                    .cloned()
                    .collect();
                if !narrowed.is_empty() {
                    kept.values = narrowed;
                }
            }
            Some(kept)
        })
        .collect();
    Some(pruned)
}

/// Pulls the first JSON object out of the raw text, tolerating code fences
/// and trailing commas (the prompt's own few-shot output contains one).
fn extract_json_object(raw: &str) -> Option<serde_json::Map<String, Value>> {
    let start = raw.find('{')?;
    let end = raw.rfind('}')?;
    if end <= start {
        return None;
    }
    let mut body = raw[start..=end].to_string();
    // strip "..." ellipsis lines and trailing commas before } closers
    body = body
        .lines()
        .filter(|line| {
            let t = line.trim().trim_end_matches(',');
            t != "..." && t != "…"
        })
        .collect::<Vec<_>>()
        .join("\n");
    let without_trailing_commas = regex::Regex::new(r",\s*([}\]])")
        .expect("static regex")
        .replace_all(&body, "$1")
        .into_owned();
    match serde_json::from_str::<Value>(&without_trailing_commas) {
        Ok(Value::Object(map)) => Some(map),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{EntityId, PropertyId};
    use crate::kb::{Claim, ClaimValue, ValueNode};
    use crate::llm::{LlmGateway, ReplayProvider};
    use std::sync::Arc;

    fn entry() -> EntityEntry {
        let claim = |pid: &str, label: &str, value: &str| Claim {
            property: PropertyId::new(pid).unwrap(),
            label: Some(label.to_string()),
            values: vec![ClaimValue {
                value: ValueNode::Literal { value: value.to_string() },
                qualifiers: vec![],
            }],
        };
        EntityEntry {
            subject: EntityId::new("Q649593").unwrap(),
            label: Some("Barack Obama Sr.".into()),
            description: Some("economist".into()),
            claims: vec![
                claim("P19", "place of birth", "Nyang'oma Kogelo"),
                claim("P69", "educated at", "Harvard University"),
                claim("P8687", "social media followers", "3134158"),
            ],
        }
    }

    fn gateway_with(response: &str) -> LlmGateway {
        LlmGateway::new(
            Arc::new(ReplayProvider::from_responses(vec![response.to_string()])),
            None,
        )
    }

    #[test]
    fn keeps_only_selected_claims() {
        let gateway = gateway_with(
            r#"{
  "place of birth (P19)": "Nyang'oma Kogelo",
  "educated at (P69)": "Harvard University"
}"#,
        );
        let pruned = prune_entry("where did he attend school?", &entry(), &gateway);
        let keys: Vec<String> = pruned.claims.iter().map(Claim::key).collect();
        assert_eq!(keys, vec!["place of birth (P19)", "educated at (P69)"]);
    }

    #[test]
    fn output_is_always_a_subset() {
        // even when the model invents claims, none of them survive
        let gateway = gateway_with(
            r#"{
  "educated at (P69)": "Harvard University",
  "secret fabricated claim (P999999)": "nonsense"
}"#,
        );
        let input = entry();
        let pruned = prune_entry("q", &input, &gateway);
        assert_eq!(pruned.claims.len(), 1);
        for claim in &pruned.claims {
            assert!(input.claims.iter().any(|c| c == claim), "novel claim appeared");
        }
    }

    #[test]
    fn malformed_output_returns_entry_unchanged() {
        let gateway = gateway_with("I would keep the education claims, probably.");
        let input = entry();
        assert_eq!(prune_entry("q", &input, &gateway), input);
    }

    #[test]
    fn provider_error_returns_entry_unchanged() {
        // an exhausted replay provider errors on the first call
        let gateway =
            LlmGateway::new(Arc::new(ReplayProvider::from_responses(vec![])), None);
        let input = entry();
        assert_eq!(prune_entry("q", &input, &gateway), input);
    }

    #[test]
    fn empty_selection_yields_empty_claims() {
        let gateway = gateway_with("{}");
        let pruned = prune_entry("q", &entry(), &gateway);
        assert!(pruned.claims.is_empty());
    }

    #[test]
    fn tolerates_fences_and_trailing_commas() {
        let gateway = gateway_with(
            "```json\n{\n  \"place of birth (P19)\": \"Nyang'oma Kogelo\",\n}\n```",
        );
        let pruned = prune_entry("q", &entry(), &gateway);
        assert_eq!(pruned.claims.len(), 1);
    }

    #[test]
    fn value_level_narrowing() {
        let mut input = entry();
        input.claims[2].values.push(ClaimValue {
            value: ValueNode::Literal { value: "3276596".into() },
            qualifiers: vec![],
        });
        let gateway = gateway_with(
            r#"{"social media followers (P8687)": {"3276596": {}}}"#,
        );
        let pruned = prune_entry("q", &input, &gateway);
        assert_eq!(pruned.claims.len(), 1);
        assert_eq!(pruned.claims[0].values.len(), 1);
        assert_eq!(
            pruned.claims[0].values[0].value,
            ValueNode::Literal { value: "3276596".into() }
        );
    }
}
