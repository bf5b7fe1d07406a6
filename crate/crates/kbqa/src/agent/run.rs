//! The agent loop: obtain a thought and an action from the policy, execute
//! it, append the observation, and enforce the stop and reset rules.

use super::{
    Action, AgentConfig, AgentError, AgentOutcome, AgentState, ResetReason, RunEvent, Step,
    StopReason,
};
use crate::kb::{render_observation, KnowledgeBase, Observation, SparqlResponse};
use crate::llm::{parse_agent_output, prune_entry, LlmGateway, LlmRequest};

/// Verdict on an incoming stop() call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCheck {
    Accept,
    /// The last query returned nothing (or no query ran); start over.
    ResetToBeginning,
}

/// A stop is only valid on top of a SPARQL execution whose response is a
/// non-empty table or a boolean.
pub fn validate_stop(state: &AgentState) -> StopCheck {
    match state.last_sparql() {
        Some((_, response)) if response.has_results() => StopCheck::Accept,
        _ => StopCheck::ResetToBeginning,
    }
}

/// Detects a repetition cycle: the incoming action repeats the immediately
/// preceding step's (action, argument) pair. Returns the index of the pair's
/// first occurrence, the point the state is rolled back to.
pub fn detect_repetition(state: &AgentState, next: &Action) -> Option<usize> {
    let last = state.steps.last()?;
    if !last.action.same_call(next) {
        return None;
    }
    state.steps.iter().position(|step| step.action.same_call(next))
}

/// Returns the prefix of `state` strictly before `to_index`.
pub fn reset_state(state: &AgentState, to_index: usize) -> Result<AgentState, AgentError> {
    if to_index > state.steps.len() {
        return Err(AgentError::IndexOutOfRange { index: to_index, len: state.steps.len() });
    }
    Ok(AgentState { steps: state.steps[..to_index].to_vec() })
}

/// Executes one action against the knowledge base. Every outcome, including
/// query failures, becomes an observation; entity entries are pruned with
/// the question before rendering.
pub fn apply_action(
    action: &Action,
    question: &str,
    kb: &dyn KnowledgeBase,
    gateway: &LlmGateway,
) -> (String, Option<Observation>) {
    let payload = match action {
        Action::SearchWikidata { query } => match kb.search_items(query) {
            Ok(result) => Observation::Search(result),
            Err(e) => return (format!("Error: {e}"), None),
        },
        Action::GetWikidataEntry { id } => match kb.fetch_entity_entry(id) {
            Ok(entry) => Observation::Entry(prune_entry(question, &entry, gateway)),
            Err(e) => return (format!("Error: {e}"), None),
        },
        Action::GetPropertyExamples { id } => match kb.fetch_property_examples(id) {
            Ok(examples) => Observation::Examples { property: id.to_string(), examples },
            Err(e) => return (format!("Error: {e}"), None),
        },
        Action::ExecuteSparql { query } => Observation::Sparql(kb.run_sparql(query)),
        Action::Stop => return (String::new(), None),
    };
    (render_observation(&payload), Some(payload))
}

/// Runs the full loop for one question.
///
/// Each parsed policy action counts against the budget. The loop ends when
/// a stop() is accepted, when `max_steps` actions have been taken, or when
/// the reset budget is exhausted; in the latter two cases the best query so
/// far (the last execution with non-empty results) is reported.
pub fn run_agent(
    question: &str,
    config: &AgentConfig,
    kb: &dyn KnowledgeBase,
    gateway: &LlmGateway,
) -> Result<AgentOutcome, AgentError> {
    if question.trim().is_empty() {
        return Err(AgentError::EmptyQuestion);
    }

    let mut state = AgentState::default();
    let mut journal: Vec<RunEvent> = Vec::new();
    let mut actions_taken = 0usize;
    let mut resets = 0usize;
    // survives resets: the answer to report if the run is cut off
    let mut best_so_far: Option<(String, SparqlResponse)> = None;

    let stop_reason = loop {
        if actions_taken >= config.max_steps {
            break StopReason::BudgetExhausted;
        }

        // policy call, retrying unparseable outputs
        let parsed = {
            let mut failures = 0;
            loop {
                let request = LlmRequest::policy(question, &state.render_history());
                let raw = gateway.complete(&request)?;
                match parse_agent_output(&raw) {
                    Ok(parsed) => break parsed,
                    Err(_) => {
                        failures += 1;
                        if failures >= config.parse_retry_limit {
                            return Err(AgentError::PolicyFailure(failures));
                        }
                    }
                }
            }
        };
        actions_taken += 1;

        if let Some(first_index) = detect_repetition(&state, &parsed.action) {
            resets += 1;
            if resets > config.max_resets {
                break StopReason::ResetLimit;
            }
            journal.push(RunEvent::Reset {
                to_index: first_index,
                reason: ResetReason::Repetition,
            });
            state = reset_state(&state, first_index).expect("repetition index is in range");
            continue;
        }

        if parsed.action == Action::Stop {
            match validate_stop(&state) {
                StopCheck::Accept => {
                    let step = Step {
                        thought: parsed.thought,
                        action: Action::Stop,
                        observation: String::new(),
                        payload: None,
                    };
                    journal.push(RunEvent::Step(step.clone()));
                    state.push(step);
                    break StopReason::Stopped;
                }
                StopCheck::ResetToBeginning => {
                    resets += 1;
                    if resets > config.max_resets {
                        break StopReason::ResetLimit;
                    }
                    journal.push(RunEvent::Reset {
                        to_index: 0,
                        reason: ResetReason::StopWithoutResults,
                    });
                    state = AgentState::default();
                    continue;
                }
            }
        }

        let (observation, payload) = apply_action(&parsed.action, question, kb, gateway);
        if let (Action::ExecuteSparql { query }, Some(Observation::Sparql(response))) =
            (&parsed.action, &payload)
        {
            if response.has_results() {
                best_so_far = Some((query.clone(), response.clone()));
            }
        }
        let step = Step {
            thought: parsed.thought,
            action: parsed.action,
            observation,
            payload,
        };
        journal.push(RunEvent::Step(step.clone()));
        state.push(step);
    };

    let (final_sparql, final_result) = match stop_reason {
        StopReason::Stopped => match state.last_sparql() {
            Some((query, response)) => (Some(query.to_string()), Some(response.clone())),
            None => (None, None),
        },
        StopReason::BudgetExhausted | StopReason::ResetLimit => match best_so_far {
            Some((query, response)) => (Some(query), Some(response)),
            None => (None, None),
        },
    };

    Ok(AgentOutcome {
        question: question.to_string(),
        stop_reason,
        final_sparql,
        final_result,
        trace: state,
        journal,
        actions_taken,
        resets,
    })
}
