//! Domain types for the knowledge base access layer.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

use crate::ids::{EntityId, PropertyId};

/// Search results are truncated to keep observations small: at most 8
/// entities and 4 properties per query.
pub const MAX_SEARCH_ENTITIES: usize = 8;
pub const MAX_SEARCH_PROPERTIES: usize = 4;

/// One hit from the entity-search API.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit<Id> {
    pub id: Id,
    pub label: String,
    #[serde(default)]
    pub description: String,
}

/// Item and property matches for one search string, service order preserved.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub entities: Vec<SearchHit<EntityId>>,
    pub properties: Vec<SearchHit<PropertyId>>,
}

impl SearchResult {
    /// Enforces the observation limits, dropping hits past the cap.
    pub fn truncate(&mut self) {
        self.entities.truncate(MAX_SEARCH_ENTITIES);
        self.properties.truncate(MAX_SEARCH_PROPERTIES);
    }
}

/// A claim or qualifier value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ValueNode {
    Entity {
        id: EntityId,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        label: Option<String>,
    },
    Literal {
        value: String,
    },
    Quantity {
        amount: String,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        unit: Option<String>,
    },
    Time {
        value: String,
    },
}

impl ValueNode {
    /// Human-readable form: entities render as `label (QID)` with the bare
    /// identifier as fallback.
    pub fn display_text(&self) -> String {
        match self {
            ValueNode::Entity { id, label } => match label {
                Some(l) => format!("{l} ({id})"),
                None => id.to_string(),
            },
            ValueNode::Literal { value } => value.clone(),
            ValueNode::Quantity { amount, unit } => match unit {
                Some(u) => format!("{amount} {u}"),
                None => amount.clone(),
            },
            ValueNode::Time { value } => value.clone(),
        }
    }
}

/// A qualifier attached to one claim value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qualifier {
    pub property: PropertyId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
    pub value: ValueNode,
}

/// One value of a claim, with its qualifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimValue {
    pub value: ValueNode,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub qualifiers: Vec<Qualifier>,
}

/// All values of one property on an entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub property: PropertyId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
    pub values: Vec<ClaimValue>,
}

impl Claim {
    /// The key used when rendering the entry, e.g. `doctoral advisor (P184)`.
    pub fn key(&self) -> String {
        match &self.label {
            Some(l) => format!("{l} ({})", self.property),
            None => self.property.to_string(),
        }
    }
}

/// The outgoing edges of one entity: its direct claims with qualifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityEntry {
    pub subject: EntityId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub description: Option<String>,
    pub claims: Vec<Claim>,
}

impl EntityEntry {
    /// Heading in the `label (QID, description)` form used when the entry is
    /// shown to the model.
    pub fn heading(&self) -> String {
        let label = self.label.as_deref().unwrap_or(self.subject.as_str());
        match self.description.as_deref() {
            Some(d) if !d.is_empty() => format!("{label} ({}, {d})", self.subject),
            _ => format!("{label} ({})", self.subject),
        }
    }
}

/// One usage example of a property: subject entity and object value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyExample {
    pub subject: EntityId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subject_label: Option<String>,
    pub object: ValueNode,
}

/// A single binding cell as returned by the SPARQL endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparqlCell {
    #[serde(rename = "type")]
    pub binding_type: BindingType,
    pub value: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub datatype: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BindingType {
    Uri,
    Literal,
    Bnode,
}

/// A SELECT result: variable names plus one row per solution. Cells are
/// `None` where a variable is unbound in that solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparqlTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<SparqlCell>>>,
}

/// Error categories a query execution can surface. These become
/// observations, never process failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SparqlErrorKind {
    Syntax,
    Timeout,
    Network,
    TooLarge,
}

impl fmt::Display for SparqlErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SparqlErrorKind::Syntax => "syntax",
            SparqlErrorKind::Timeout => "timeout",
            SparqlErrorKind::Network => "network",
            SparqlErrorKind::TooLarge => "too-large",
        };
        f.write_str(s)
    }
}

/// Outcome of a SPARQL execution: a table (SELECT), a boolean (ASK), or a
/// service-side failure the agent can observe and recover from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SparqlResponse {
    Table(SparqlTable),
    Boolean { value: bool },
    Error { error: SparqlErrorKind, message: String },
}

impl SparqlResponse {
    pub fn error(kind: SparqlErrorKind, message: impl Into<String>) -> Self {
        SparqlResponse::Error { error: kind, message: message.into() }
    }

    /// True for a non-empty table or any boolean: the shapes accepted as a
    /// final answer.
    pub fn has_results(&self) -> bool {
        match self {
            SparqlResponse::Table(t) => !t.rows.is_empty(),
            SparqlResponse::Boolean { .. } => true,
            SparqlResponse::Error { .. } => false,
        }
    }
}

/// Configuration for the live client.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientConfig {
    pub sparql_endpoint_url: String,
    pub api_endpoint_url: String,
    /// Per-request timeout. The public query service kills queries at 60 s,
    /// so anything beyond that only wastes the caller's time.
    #[serde(with = "duration_secs")]
    pub request_timeout: Duration,
    pub user_agent: String,
    pub max_retries: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cache_dir: Option<PathBuf>,
    /// Minimum spacing between outgoing requests, shared by all users of the
    /// client.
    #[serde(with = "duration_millis")]
    pub min_request_interval: Duration,
    /// Responses larger than this are reported as `too-large`.
    pub max_response_bytes: u64,
    /// When set, cache misses are errors instead of network calls.
    #[serde(default)]
    pub offline: bool,
}

pub const MAX_SPARQL_TIMEOUT: Duration = Duration::from_secs(60);
pub const DEFAULT_MAX_RESPONSE_BYTES: u64 = 10 * 1024 * 1024;

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            sparql_endpoint_url: "https://query.wikidata.org/sparql".to_string(),
            api_endpoint_url: "https://www.wikidata.org/w/api.php".to_string(),
            request_timeout: MAX_SPARQL_TIMEOUT,
            user_agent: concat!(
                "kbqa/",
                env!("CARGO_PKG_VERSION"),
                " (https://github.com/kbqa/kbqa)"
            )
            .to_string(),
            max_retries: 3,
            cache_dir: None,
            min_request_interval: Duration::from_millis(100),
            max_response_bytes: DEFAULT_MAX_RESPONSE_BYTES,
            offline: false,
        }
    }
}

impl ClientConfig {
    /// Applies `KBQA_SPARQL_ENDPOINT` / `KBQA_API_ENDPOINT` overrides.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(url) = std::env::var("KBQA_SPARQL_ENDPOINT") {
            self.sparql_endpoint_url = url;
        }
        if let Ok(url) = std::env::var("KBQA_API_ENDPOINT") {
            self.api_endpoint_url = url;
        }
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.request_timeout > MAX_SPARQL_TIMEOUT {
            return Err(format!(
                "request_timeout {}s exceeds the query service cap of {}s",
                self.request_timeout.as_secs(),
                MAX_SPARQL_TIMEOUT.as_secs()
            ));
        }
        Ok(())
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_secs())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs(u64::deserialize(d)?))
    }
}

mod duration_millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}
