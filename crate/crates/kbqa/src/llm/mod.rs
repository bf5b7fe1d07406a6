//! Provider-agnostic chat completion: the two prompt templates, request
//! validation, call budgeting, and transcript record/replay.

mod parse;
mod provider;
mod prune;

pub use parse::{parse_agent_output, ParseError, ParsedAgentOutput};
pub use provider::{
    ChatProvider, OpenAiProvider, ProviderError, RecordingProvider, ReplayProvider,
    TranscriptRecord,
};
pub use prune::prune_entry;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use crate::agent::AgentState;

/// The policy prompt: high-level instructions, the question, and the full
/// interleaved action history.
pub const POLICY_TEMPLATE: &str = include_str!("../../assets/prompts/policy.txt");

/// The two-shot pruning prompt applied to entity entries.
pub const PRUNE_TEMPLATE: &str = include_str!("../../assets/prompts/prune.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateId {
    Policy,
    Prune,
}

impl TemplateId {
    pub fn text(self) -> &'static str {
        match self {
            TemplateId::Policy => POLICY_TEMPLATE,
            TemplateId::Prune => PRUNE_TEMPLATE,
        }
    }

    fn required_slots(self) -> &'static [&'static str] {
        match self {
            TemplateId::Policy => &["question", "action_history"],
            TemplateId::Prune => &["question", "entity_and_description", "outgoing_edges"],
        }
    }
}

/// Decoding settings for one call.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub nucleus_p: f64,
    pub max_output_tokens: u32,
}

/// Policy calls sample with temperature 1.0 and nucleus 0.9 to encourage
/// exploration; everything else decodes greedily.
pub const POLICY_SAMPLING: SamplingParams =
    SamplingParams { temperature: 1.0, nucleus_p: 0.9, max_output_tokens: 2048 };
pub const PRUNE_SAMPLING: SamplingParams =
    SamplingParams { temperature: 0.0, nucleus_p: 1.0, max_output_tokens: 4096 };

/// A fully specified completion request: template, slot bindings, sampling.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LlmRequest {
    pub template: TemplateId,
    pub variables: BTreeMap<String, String>,
    pub sampling: SamplingParams,
}

impl LlmRequest {
    pub fn policy(question: &str, action_history: &str) -> Self {
        let mut variables = BTreeMap::new();
        variables.insert("question".to_string(), question.to_string());
        variables.insert("action_history".to_string(), action_history.to_string());
        Self { template: TemplateId::Policy, variables, sampling: POLICY_SAMPLING }
    }

    pub fn prune(question: &str, entity_and_description: &str, outgoing_edges: &str) -> Self {
        let mut variables = BTreeMap::new();
        variables.insert("question".to_string(), question.to_string());
        variables
            .insert("entity_and_description".to_string(), entity_and_description.to_string());
        variables.insert("outgoing_edges".to_string(), outgoing_edges.to_string());
        Self { template: TemplateId::Prune, variables, sampling: PRUNE_SAMPLING }
    }

    /// Checks that every slot the template mentions is bound.
    pub fn validate(&self) -> Result<(), GatewayError> {
        for slot in self.template.required_slots() {
            if !self.variables.contains_key(*slot) {
                return Err(GatewayError::UnboundSlot((*slot).to_string()));
            }
        }
        Ok(())
    }

    /// Instantiates the template.
    pub fn render(&self) -> Result<String, GatewayError> {
        self.validate()?;
        let mut text = self.template.text().to_string();
        for (name, value) in &self.variables {
            text = text.replace(&format!("{{{{ {name} }}}}"), value);
        }
        Ok(text)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("template slot {{{{ {0} }}}} is not bound")]
    UnboundSlot(String),
    #[error("llm call budget of {0} exhausted")]
    BudgetExceeded(u32),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// The single network boundary for model calls: renders requests, enforces
/// the call budget, and delegates to the configured provider.
pub struct LlmGateway {
    provider: Arc<dyn ChatProvider>,
    budget: Option<u32>,
    used: AtomicU32,
}

impl LlmGateway {
    pub fn new(provider: Arc<dyn ChatProvider>, budget: Option<u32>) -> Self {
        Self { provider, budget, used: AtomicU32::new(0) }
    }

    /// Renders and sends one request, returning the raw model text.
    pub fn complete(&self, request: &LlmRequest) -> Result<String, GatewayError> {
        let prompt = request.render()?;
        if let Some(budget) = self.budget {
            // the increment must be atomic: concurrent callers share the cap
            let before = self.used.fetch_add(1, Ordering::SeqCst);
            if before >= budget {
                return Err(GatewayError::BudgetExceeded(budget));
            }
        } else {
            self.used.fetch_add(1, Ordering::SeqCst);
        }
        Ok(self.provider.complete(&prompt, &request.sampling)?)
    }

    pub fn calls_used(&self) -> u32 {
        self.used.load(Ordering::SeqCst)
    }
}

/// Instantiates the policy prompt for a question and the current state. The
/// rendering is deterministic and includes every past thought, action, and
/// observation in execution order.
pub fn render_policy_prompt(question: &str, state: &AgentState) -> String {
    LlmRequest::policy(question, &state.render_history())
        .render()
        .expect("policy slots are always bound")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{Action, AgentState, Step};

    #[test]
    fn policy_template_carries_the_instructions() {
        assert!(POLICY_TEMPLATE.contains("Do NOT repeat the same action"));
        assert!(POLICY_TEMPLATE.contains("stop(): Marks the last executed SPARQL query"));
        // nine numbered instructions
        for i in 1..=9 {
            assert!(POLICY_TEMPLATE.contains(&format!("\n{i}. ")), "instruction {i} missing");
        }
    }

    #[test]
    fn unbound_slot_is_rejected_before_any_call() {
        let mut request = LlmRequest::policy("q", "");
        request.variables.remove("question");
        assert!(matches!(request.validate(), Err(GatewayError::UnboundSlot(s)) if s == "question"));
    }

    #[test]
    fn empty_state_renders_question_and_no_steps() {
        let prompt = render_policy_prompt("Who advised Euler?", &AgentState::default());
        assert!(prompt.contains("Question: Who advised Euler?"));
        assert!(!prompt.contains("Thought:"));
        assert!(prompt.trim_end().ends_with("Output one \"Thought\" and one \"Action\":"));
    }

    #[test]
    fn steps_render_in_order_before_the_cue() {
        let mut state = AgentState::default();
        state.push(Step {
            thought: "look up Euler".into(),
            action: Action::SearchWikidata { query: "Leonhard Euler".into() },
            observation: "Entities:\n- Leonhard Euler (Q7604)".into(),
            payload: None,
        });
        state.push(Step {
            thought: "check advisor property".into(),
            action: Action::GetPropertyExamples {
                id: crate::ids::PropertyId::new("P184").unwrap(),
            },
            observation: "Examples of P184: ...".into(),
            payload: None,
        });
        let prompt = render_policy_prompt("q", &state);
        let first = prompt.find("search_wikidata(Leonhard Euler)").unwrap();
        let second = prompt.find("get_property_examples(P184)").unwrap();
        let cue = prompt.find("Output one \"Thought\" and one \"Action\":").unwrap();
        assert!(first < second && second < cue);
    }

    #[test]
    fn budget_is_enforced() {
        let provider = Arc::new(ReplayProvider::from_responses(vec![
            "a".to_string(),
            "b".to_string(),
        ]));
        let gateway = LlmGateway::new(provider, Some(1));
        let request = LlmRequest::policy("q", "");
        assert!(gateway.complete(&request).is_ok());
        assert!(matches!(
            gateway.complete(&request),
            Err(GatewayError::BudgetExceeded(1))
        ));
    }

    #[test]
    fn distinct_histories_render_distinct_prompts() {
        let mut s1 = AgentState::default();
        s1.push(Step {
            thought: "t".into(),
            action: Action::SearchWikidata { query: "a".into() },
            observation: "o".into(),
            payload: None,
        });
        let mut s2 = AgentState::default();
        s2.push(Step {
            thought: "t".into(),
            action: Action::SearchWikidata { query: "b".into() },
            observation: "o".into(),
            payload: None,
        });
        assert_ne!(render_policy_prompt("q", &s1), render_policy_prompt("q", &s2));
    }
}
