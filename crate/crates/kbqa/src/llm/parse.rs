//! Parsing raw policy output into a thought and exactly one action.
//!
//! The grammar is deliberately tolerant: markdown emphasis around the
//! markers, code fences around the action or its argument, quoted arguments,
//! and multi-line SPARQL all parse. SPARQL argument text is preserved
//! verbatim apart from outer trimming.

use serde::{Deserialize, Serialize};

use crate::agent::Action;
use crate::ids::{EntityId, PropertyId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedAgentOutput {
    pub thought: String,
    pub action: Action,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("no recognizable action in model output")]
    NoAction,
    #[error("action {name} is missing its argument")]
    MissingArgument { name: String },
    #[error("invalid argument for {name}: {message}")]
    BadArgument { name: String, message: String },
}

const ACTION_NAMES: [&str; 5] = [
    "search_wikidata",
    "get_wikidata_entry",
    "get_property_examples",
    "execute_sparql",
    "stop",
];

/// Extracts the thought and the single action from raw model text.
pub fn parse_agent_output(raw: &str) -> Result<ParsedAgentOutput, ParseError> {
    let thought_pos = find_marker(raw, "thought");
    let action_pos = match find_marker_from(raw, "action", thought_pos.map_or(0, |(_, e)| e)) {
        Some(p) => p,
        None => find_marker(raw, "action").ok_or(ParseError::NoAction)?,
    };

    let thought = match thought_pos {
        Some((_, end)) if end <= action_pos.0 => raw[end..action_pos.0].trim(),
        _ => raw[..action_pos.0].trim(),
    };
    let thought = thought.trim_matches('*').trim().to_string();

    let action_text = strip_fences(raw[action_pos.1..].trim());
    let action = parse_action(&action_text)?;
    Ok(ParsedAgentOutput { thought, action })
}

/// Finds `marker:` case-insensitively, tolerating `**marker**:`; returns
/// (start of marker, end of the colon).
fn find_marker(text: &str, marker: &str) -> Option<(usize, usize)> {
    find_marker_from(text, marker, 0)
}

fn find_marker_from(text: &str, marker: &str, from: usize) -> Option<(usize, usize)> {
    let lower = text.to_lowercase();
    let mut search_at = from;
    while let Some(rel) = lower[search_at..].find(marker) {
        let start = search_at + rel;
        let after = &text[start + marker.len()..];
        let trimmed = after.trim_start_matches(['*', ' ', '\t']);
        if let Some(rest) = trimmed.strip_prefix(':') {
            let colon_end = text.len() - rest.len();
            return Some((start, colon_end));
        }
        search_at = start + marker.len();
    }
    None
}

/// Removes a wrapping markdown code fence, keeping inner text verbatim.
fn strip_fences(text: &str) -> String {
    let trimmed = text.trim();
    if !trimmed.starts_with("```") {
        return trimmed.to_string();
    }
    let without_open = match trimmed.find('\n') {
        Some(nl) => &trimmed[nl + 1..],
        None => trimmed.trim_start_matches('`'),
    };
    without_open.trim_end().trim_end_matches("```").trim().to_string()
}

fn parse_action(text: &str) -> Result<Action, ParseError> {
    let cleaned = text.trim_start_matches(['`', ' ', '\n']);
    let lower = cleaned.to_lowercase();
    let name = ACTION_NAMES
        .iter()
        .filter_map(|name| lower.find(name).map(|pos| (pos, *name)))
        .min_by_key(|(pos, _)| *pos)
        .map(|(_, name)| name)
        .ok_or(ParseError::NoAction)?;

    let after_name = &cleaned[lower.find(name).expect("just found") + name.len()..];
    let argument = extract_argument(after_name);

    build_action(name, argument)
}

/// The argument is whatever sits between the opening parenthesis and the
/// *last* closing one, so SPARQL with inner parentheses survives. Without
/// parentheses, the rest of the text (fences stripped) is the argument.
fn extract_argument(after_name: &str) -> Option<String> {
    let trimmed = after_name.trim_start();
    if let Some(inner) = trimmed.strip_prefix('(') {
        let close = inner.rfind(')')?;
        return Some(inner[..close].trim().to_string());
    }
    let leftover = strip_fences(trimmed);
    if leftover.is_empty() {
        None
    } else {
        Some(leftover)
    }
}

fn unquote(argument: &str) -> &str {
    let t = argument.trim();
    for quote in ['"', '\'', '`'] {
        if t.len() >= 2 && t.starts_with(quote) && t.ends_with(quote) {
            return &t[1..t.len() - 1];
        }
    }
    t
}

fn build_action(name: &str, argument: Option<String>) -> Result<Action, ParseError> {
    if name == "stop" {
        return Ok(Action::Stop);
    }
    let argument = argument
        .filter(|a| !a.is_empty())
        .ok_or_else(|| ParseError::MissingArgument { name: name.to_string() })?;
    match name {
        "search_wikidata" => {
            Ok(Action::SearchWikidata { query: unquote(&argument).to_string() })
        }
        "get_wikidata_entry" => {
            let id = unquote(&argument);
            let id = id.strip_prefix("wd:").unwrap_or(id);
            EntityId::new(id)
                .map(|id| Action::GetWikidataEntry { id })
                .map_err(|e| ParseError::BadArgument { name: name.into(), message: e.to_string() })
        }
        "get_property_examples" => {
            let id = unquote(&argument);
            let id = id.strip_prefix("wdt:").or_else(|| id.strip_prefix("wd:")).unwrap_or(id);
            PropertyId::new(id)
                .map(|id| Action::GetPropertyExamples { id })
                .map_err(|e| ParseError::BadArgument { name: name.into(), message: e.to_string() })
        }
        "execute_sparql" => {
            // fences inside the parentheses still wrap the query itself
            let query = strip_fences(&argument);
            let query = unquote_multiline(&query);
            Ok(Action::ExecuteSparql { query })
        }
        _ => unreachable!("name comes from ACTION_NAMES"),
    }
}

/// Quotes are only stripped from a SPARQL argument when they wrap the whole
/// text; quotes inside the query body stay untouched.
fn unquote_multiline(query: &str) -> String {
    let t = query.trim();
    if t.len() >= 2 && t.starts_with('"') && t.ends_with('"') && !t[1..t.len() - 1].contains('"') {
        t[1..t.len() - 1].to_string()
    } else {
        t.to_string()
    }
}
