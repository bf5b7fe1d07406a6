//! In-memory knowledge base backed by canned responses: the fixture format
//! for replay-mode runs and offline tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::{EntityEntry, PropertyExample, SearchResult, SparqlErrorKind, SparqlResponse};
use super::{KbError, KnowledgeBase};
use crate::ids::{EntityId, PropertyId};

fn normalize_query(query: &str) -> String {
    query.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Canned responses keyed by argument. SPARQL lookups are whitespace
/// insensitive; a reformatted query still hits its fixture.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MemoryKb {
    #[serde(default)]
    pub searches: BTreeMap<String, SearchResult>,
    #[serde(default)]
    pub entries: BTreeMap<String, EntityEntry>,
    #[serde(default)]
    pub examples: BTreeMap<String, Vec<PropertyExample>>,
    #[serde(default)]
    pub sparql: BTreeMap<String, SparqlResponse>,
}

impl MemoryKb {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut kb: MemoryKb = serde_json::from_str(text)?;
        kb.sparql = kb
            .sparql
            .into_iter()
            .map(|(k, v)| (normalize_query(&k), v))
            .collect();
        Ok(kb)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, KbError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| KbError::Decode(e.to_string()))
    }

    pub fn with_sparql(mut self, query: &str, response: SparqlResponse) -> Self {
        self.sparql.insert(normalize_query(query), response);
        self
    }
}

impl KnowledgeBase for MemoryKb {
    fn search_items(&self, query: &str) -> Result<SearchResult, KbError> {
        let query = query.trim();
        if query.is_empty() {
            return Err(KbError::EmptyQuery);
        }
        let mut result = self.searches.get(query).cloned().unwrap_or_default();
        result.truncate();
        Ok(result)
    }

    fn fetch_entity_entry(&self, id: &EntityId) -> Result<EntityEntry, KbError> {
        self.entries
            .get(id.as_str())
            .cloned()
            .ok_or_else(|| KbError::UnknownEntity(id.clone()))
    }

    fn fetch_property_examples(
        &self,
        id: &PropertyId,
    ) -> Result<Vec<PropertyExample>, KbError> {
        self.examples
            .get(id.as_str())
            .cloned()
            .ok_or_else(|| KbError::UnknownProperty(id.clone()))
    }

    fn run_sparql(&self, query: &str) -> SparqlResponse {
        match self.sparql.get(&normalize_query(query)) {
            Some(response) => response.clone(),
            None => SparqlResponse::error(
                SparqlErrorKind::Network,
                "no canned response for this query",
            ),
        }
    }
}
