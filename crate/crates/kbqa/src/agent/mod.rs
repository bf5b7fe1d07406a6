//! The exploration agent: state, actions, and the run loop with its stop and
//! reset rules.

mod run;

pub use run::{apply_action, detect_repetition, reset_state, run_agent, validate_stop, StopCheck};

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::ids::{EntityId, PropertyId};
use crate::kb::{Observation, SparqlResponse};

/// The five tool actions available to the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    SearchWikidata { query: String },
    GetWikidataEntry { id: EntityId },
    GetPropertyExamples { id: PropertyId },
    ExecuteSparql { query: String },
    Stop,
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::SearchWikidata { .. } => "search_wikidata",
            Action::GetWikidataEntry { .. } => "get_wikidata_entry",
            Action::GetPropertyExamples { .. } => "get_property_examples",
            Action::ExecuteSparql { .. } => "execute_sparql",
            Action::Stop => "stop",
        }
    }

    /// Argument normalized for repetition comparison: SPARQL text compares
    /// with collapsed whitespace (a reformatted query is the same
    /// exploration step), everything else exactly.
    pub fn comparable_argument(&self) -> String {
        match self {
            Action::SearchWikidata { query } => query.clone(),
            Action::GetWikidataEntry { id } => id.to_string(),
            Action::GetPropertyExamples { id } => id.to_string(),
            Action::ExecuteSparql { query } => {
                query.split_whitespace().collect::<Vec<_>>().join(" ")
            }
            Action::Stop => String::new(),
        }
    }

    /// Two actions repeat each other when name and normalized argument agree.
    pub fn same_call(&self, other: &Action) -> bool {
        self.name() == other.name() && self.comparable_argument() == other.comparable_argument()
    }
}

/// Canonical rendering, matching what the policy is asked to produce.
impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::SearchWikidata { query } => write!(f, "search_wikidata({query})"),
            Action::GetWikidataEntry { id } => write!(f, "get_wikidata_entry({id})"),
            Action::GetPropertyExamples { id } => write!(f, "get_property_examples({id})"),
            Action::ExecuteSparql { query } => write!(f, "execute_sparql({query})"),
            Action::Stop => write!(f, "stop()"),
        }
    }
}

/// One executed round: the policy's thought, its action, and what the action
/// returned. `payload` keeps the structured result the observation text was
/// rendered from (absent for `stop`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub thought: String,
    pub action: Action,
    pub observation: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub payload: Option<Observation>,
}

/// The agent's entire memory: the ordered list of executed steps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub steps: Vec<Step>,
}

impl AgentState {
    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The interleaved `Thought / Action / Observation` blocks fed back into
    /// the policy prompt.
    pub fn render_history(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            if !out.is_empty() {
                out.push_str("\n\n");
            }
            out.push_str(&format!(
                "Thought: {}\nAction: {}\nObservation: {}",
                step.thought, step.action, step.observation
            ));
        }
        out
    }

    /// The most recent SPARQL execution, if any.
    pub fn last_sparql(&self) -> Option<(&str, &SparqlResponse)> {
        self.steps.iter().rev().find_map(|step| match (&step.action, &step.payload) {
            (Action::ExecuteSparql { query }, Some(Observation::Sparql(response))) => {
                Some((query.as_str(), response))
            }
            _ => None,
        })
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The policy called stop() with a valid final result.
    Stopped,
    /// The action budget ran out.
    BudgetExhausted,
    /// Too many state resets.
    ResetLimit,
}

/// Loop limits and retry caps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Hard cap on actions per run.
    pub max_steps: usize,
    /// How many resets are tolerated before the run is cut off.
    pub max_resets: usize,
    /// How many consecutive unparseable policy outputs are retried before
    /// the run fails.
    pub parse_retry_limit: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self { max_steps: 30, max_resets: 3, parse_retry_limit: 3 }
    }
}

/// Everything recorded about one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub question: String,
    pub stop_reason: StopReason,
    /// The query marked as the final answer, when one exists.
    pub final_sparql: Option<String>,
    /// The result of that query's last execution.
    pub final_result: Option<SparqlResponse>,
    /// The surviving state at the end of the run.
    pub trace: AgentState,
    /// Full journal including steps dropped by resets.
    pub journal: Vec<RunEvent>,
    pub actions_taken: usize,
    pub resets: usize,
}

/// One entry of the run journal: an executed step or a reset marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum RunEvent {
    Step(Step),
    Reset { to_index: usize, reason: ResetReason },
}

/// The on-disk trace format: one JSON document per run, carrying the
/// question, the loop configuration, the ordered steps and resets, and the
/// outcome. This is also the fixture format replay tests consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: AgentConfig,
    pub outcome: AgentOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetReason {
    /// The policy repeated an (action, argument) pair.
    Repetition,
    /// stop() arrived while the last query had no results.
    StopWithoutResults,
}

/// Failures that abort a run (everything else becomes an observation).
#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("policy failure: {0} consecutive unparseable outputs")]
    PolicyFailure(usize),
    #[error(transparent)]
    Gateway(#[from] crate::llm::GatewayError),
    #[error("question must not be empty")]
    EmptyQuestion,
    #[error("reset index {index} out of range for {len} steps")]
    IndexOutOfRange { index: usize, len: usize },
}
