//! Access layer for the live Wikidata services: entity/property text search,
//! entity entries with qualifiers, property usage examples, and SPARQL
//! execution, each renderable as a human-readable observation.

mod cache;
mod client;
mod memory;
mod render;
mod types;
mod wire;

pub use client::{WikidataClient, PROPERTY_EXAMPLE_COUNT};
pub use memory::MemoryKb;
pub use render::{entry_edges_json, render_observation, rendered_data_rows, Observation};
pub use types::{
    BindingType, Claim, ClaimValue, ClientConfig, EntityEntry, PropertyExample, Qualifier,
    SearchHit, SearchResult, SparqlCell, SparqlErrorKind, SparqlResponse, SparqlTable, ValueNode,
    DEFAULT_MAX_RESPONSE_BYTES, MAX_SEARCH_ENTITIES, MAX_SEARCH_PROPERTIES, MAX_SPARQL_TIMEOUT,
};

use crate::ids::{EntityId, PropertyId};

/// Errors surfaced by the knowledge base operations. Note that
/// [`KnowledgeBase::run_sparql`] never returns these: query failures are
/// encoded in the response itself so the agent can observe them.
#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("search query is empty")]
    EmptyQuery,
    #[error(transparent)]
    InvalidId(#[from] crate::ids::IdError),
    #[error("no entity with id {0}")]
    UnknownEntity(EntityId),
    #[error("no usage found for property {0}")]
    UnknownProperty(PropertyId),
    #[error("network failure after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },
    #[error("unexpected response from the service: {0}")]
    Decode(String),
    #[error("response cache: {0}")]
    Cache(#[from] std::io::Error),
    #[error("offline mode: no cached response for this request")]
    OfflineMiss,
}

/// The four remote operations the agent can perform. Implemented by the live
/// [`WikidataClient`] and by in-memory fakes in tests.
pub trait KnowledgeBase: Send + Sync {
    fn search_items(&self, query: &str) -> Result<SearchResult, KbError>;
    fn fetch_entity_entry(&self, id: &EntityId) -> Result<EntityEntry, KbError>;
    fn fetch_property_examples(&self, id: &PropertyId)
        -> Result<Vec<PropertyExample>, KbError>;
    fn run_sparql(&self, query: &str) -> SparqlResponse;
}
