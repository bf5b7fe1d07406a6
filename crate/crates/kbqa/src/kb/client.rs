//! Live client for the action API and the SPARQL query service.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::cache::ResponseCache;
use super::types::{
    ClientConfig, EntityEntry, PropertyExample, SearchHit, SearchResult, SparqlErrorKind,
    SparqlResponse, ValueNode, MAX_SEARCH_ENTITIES, MAX_SEARCH_PROPERTIES,
};
use super::{wire, KbError, KnowledgeBase};
use crate::eval::LabelLookup;
use crate::ids::{EntityId, PropertyId};

/// How many usage pairs `fetch_property_examples` asks for.
pub const PROPERTY_EXAMPLE_COUNT: usize = 5;

const LABEL_BATCH: usize = 50;

/// Enforces a minimum spacing between outgoing requests across all threads
/// sharing the client.
struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Instant>,
}

impl RateLimiter {
    fn new(interval: Duration) -> Self {
        Self { interval, next_slot: Mutex::new(Instant::now()) }
    }

    fn acquire(&self) {
        if self.interval.is_zero() {
            return;
        }
        let wait_until = {
            let mut next = self.next_slot.lock().expect("rate limiter lock");
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + self.interval;
            slot
        };
        let now = Instant::now();
        if wait_until > now {
            std::thread::sleep(wait_until - now);
        }
    }
}

enum FetchError {
    /// Connection-level failure; `timed_out` distinguishes client timeouts.
    Transport { timed_out: bool, message: String },
    /// Non-success HTTP status with the (truncated) body.
    Status { code: u16, body: String },
    TooLarge { limit: u64 },
}

impl FetchError {
    fn message(&self) -> String {
        match self {
            FetchError::Transport { message, .. } => message.clone(),
            FetchError::Status { code, body } => format!("HTTP {code}: {body}"),
            FetchError::TooLarge { limit } => {
                format!("response exceeded the {limit}-byte cap")
            }
        }
    }
}

struct Inner {
    http: reqwest::blocking::Client,
    config: ClientConfig,
    cache: ResponseCache,
    limiter: RateLimiter,
}

/// Thread-safe Wikidata client. Cloning is cheap and clones share the rate
/// limiter and cache.
#[derive(Clone)]
pub struct WikidataClient {
    inner: Arc<Inner>,
}

impl WikidataClient {
    pub fn new(config: ClientConfig) -> Result<Self, KbError> {
        config.validate().map_err(KbError::Decode)?;
        let http = reqwest::blocking::Client::builder()
            .user_agent(config.user_agent.clone())
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| KbError::Network { attempts: 0, message: e.to_string() })?;
        let cache = ResponseCache::new(config.cache_dir.clone())?;
        let limiter = RateLimiter::new(config.min_request_interval);
        Ok(Self { inner: Arc::new(Inner { http, config, cache, limiter }) })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.inner.config
    }

    /// Sends one request with the shared rate limit and the response-size
    /// guard; no retries at this level.
    fn send_once(&self, request: reqwest::blocking::RequestBuilder) -> Result<String, FetchError> {
        self.inner.limiter.acquire();
        let response = request.send().map_err(|e| FetchError::Transport {
            timed_out: e.is_timeout(),
            message: e.to_string(),
        })?;
        let status = response.status();
        let limit = self.inner.config.max_response_bytes;
        let mut body = String::new();
        response
            .take(limit + 1)
            .read_to_string(&mut body)
            .map_err(|e| FetchError::Transport { timed_out: false, message: e.to_string() })?;
        if body.len() as u64 > limit {
            return Err(FetchError::TooLarge { limit });
        }
        if !status.is_success() {
            body.truncate(2000);
            return Err(FetchError::Status { code: status.as_u16(), body });
        }
        Ok(body)
    }

    /// Retries transient failures (transport errors, throttling, 5xx) with a
    /// linear backoff. Non-retriable statuses surface immediately.
    fn send_with_retries(
        &self,
        build: impl Fn() -> reqwest::blocking::RequestBuilder,
    ) -> Result<String, (FetchError, u32)> {
        let max_retries = self.inner.config.max_retries;
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.send_once(build()) {
                Ok(body) => return Ok(body),
                Err(err) => {
                    let retriable = match &err {
                        FetchError::Transport { timed_out, .. } => !timed_out,
                        FetchError::Status { code, .. } => {
                            matches!(code, 429 | 500 | 502 | 503 | 504)
                        }
                        FetchError::TooLarge { .. } => false,
                    };
                    if !retriable || attempt > max_retries {
                        return Err((err, attempt));
                    }
                    std::thread::sleep(Duration::from_millis(100 * u64::from(attempt)));
                }
            }
        }
    }

    /// Cached GET against the action API.
    fn api_get(&self, op: &str, arg: &str, params: &[(&str, &str)]) -> Result<String, KbError> {
        if let Some(body) = self.inner.cache.get(op, arg) {
            return Ok(body);
        }
        if self.inner.config.offline {
            return Err(KbError::OfflineMiss);
        }
        let url = self.inner.config.api_endpoint_url.clone();
        let params: Vec<(String, String)> =
            params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let body = self
            .send_with_retries(|| self.inner.http.get(&url).query(&params))
            .map_err(|(err, attempts)| KbError::Network { attempts, message: err.message() })?;
        self.inner.cache.put(op, arg, &body)?;
        Ok(body)
    }

    /// Resolves English labels for a set of QIDs/PIDs, going through the
    /// per-id cache and batching the misses.
    fn resolve_labels(&self, ids: &BTreeSet<String>) -> Result<HashMap<String, String>, KbError> {
        let mut labels = HashMap::new();
        let mut misses = Vec::new();
        for id in ids {
            match self.inner.cache.get("label", id) {
                Some(body) => {
                    if let Ok(Some(label)) = serde_json::from_str::<Option<String>>(&body) {
                        labels.insert(id.clone(), label);
                    }
                }
                None => misses.push(id.clone()),
            }
        }
        if misses.is_empty() {
            return Ok(labels);
        }
        if self.inner.config.offline {
            return Err(KbError::OfflineMiss);
        }
        for chunk in misses.chunks(LABEL_BATCH) {
            let joined = chunk.join("|");
            let url = self.inner.config.api_endpoint_url.clone();
            let body = self
                .send_with_retries(|| {
                    self.inner.http.get(&url).query(&[
                        ("action", "wbgetentities"),
                        ("ids", joined.as_str()),
                        ("props", "labels"),
                        ("languages", "en"),
                        ("format", "json"),
                    ])
                })
                .map_err(|(err, attempts)| KbError::Network { attempts, message: err.message() })?;
            let batch = wire::parse_labels_body(&body)?;
            for id in chunk {
                let label = batch.get(id).cloned();
                self.inner
                    .cache
                    .put("label", id, &serde_json::to_string(&label).expect("label json"))?;
                if let Some(l) = label {
                    labels.insert(id.clone(), l);
                }
            }
        }
        Ok(labels)
    }

    fn search_namespace(&self, query: &str, kind: &str, limit: usize) -> Result<String, KbError> {
        let op = format!("search-{kind}");
        let limit_str = limit.to_string();
        self.api_get(
            &op,
            query,
            &[
                ("action", "wbsearchentities"),
                ("search", query),
                ("language", "en"),
                ("uselang", "en"),
                ("type", kind),
                ("limit", limit_str.as_str()),
                ("format", "json"),
            ],
        )
    }
}

impl KnowledgeBase for WikidataClient {
    /// Text search over both the item and the property namespace, truncated
    /// to at most 8 entities and 4 properties.
    fn search_items(&self, query: &str) -> Result<SearchResult, KbError> {
        let query = query.trim();
        if query.is_empty() {
            return Err(KbError::EmptyQuery);
        }

        let item_body = self.search_namespace(query, "item", MAX_SEARCH_ENTITIES)?;
        let property_body = self.search_namespace(query, "property", MAX_SEARCH_PROPERTIES)?;

        let mut result = SearchResult::default();
        for (id, label, description) in wire::parse_search_body(&item_body)? {
            if let Ok(id) = EntityId::new(id) {
                result.entities.push(SearchHit { id, label, description });
            }
        }
        for (id, label, description) in wire::parse_search_body(&property_body)? {
            if let Ok(id) = PropertyId::new(id) {
                result.properties.push(SearchHit { id, label, description });
            }
        }
        result.truncate();
        Ok(result)
    }

    /// All direct claims of the entity, with qualifiers, labels resolved to
    /// English (identifier fallback).
    fn fetch_entity_entry(&self, id: &EntityId) -> Result<EntityEntry, KbError> {
        let body = self.api_get(
            "entity",
            id.as_str(),
            &[
                ("action", "wbgetentities"),
                ("ids", id.as_str()),
                ("props", "labels|descriptions|claims"),
                ("languages", "en"),
                ("format", "json"),
            ],
        )?;
        let Some(raw) = wire::parse_entity_body(&body, id)? else {
            return Err(KbError::UnknownEntity(id.clone()));
        };
        let mut entry = raw.entry;
        let labels = self.resolve_labels(&raw.ids_to_resolve)?;
        wire::apply_labels(&mut entry, &labels);
        Ok(entry)
    }

    /// A handful of subject/object pairs showing how a property is used,
    /// fetched with a bounded query.
    fn fetch_property_examples(
        &self,
        id: &PropertyId,
    ) -> Result<Vec<PropertyExample>, KbError> {
        // the label lookup doubles as the existence check
        let mut wanted = BTreeSet::new();
        wanted.insert(id.to_string());
        let known = self.resolve_labels(&wanted)?;
        if !known.contains_key(id.as_str()) && !self.property_exists(id)? {
            return Err(KbError::UnknownProperty(id.clone()));
        }

        let query =
            format!("SELECT ?s ?o WHERE {{ ?s wdt:{id} ?o }} LIMIT {PROPERTY_EXAMPLE_COUNT}");
        let table = match self.run_sparql(&query) {
            SparqlResponse::Table(t) => t,
            SparqlResponse::Boolean { .. } => {
                return Err(KbError::Decode("unexpected boolean from example query".into()))
            }
            SparqlResponse::Error { error, message } => {
                return Err(KbError::Network { attempts: 0, message: format!("{error}: {message}") })
            }
        };

        let mut examples = Vec::new();
        let mut to_resolve = BTreeSet::new();
        for row in &table.rows {
            let [Some(subject), Some(object)] = &row[..] else { continue };
            let Some(subject_id) = entity_from_uri(&subject.value) else { continue };
            to_resolve.insert(subject_id.to_string());
            let object = match entity_from_uri(&object.value) {
                Some(obj_id) => {
                    to_resolve.insert(obj_id.to_string());
                    ValueNode::Entity { id: obj_id, label: None }
                }
                None => ValueNode::Literal { value: object.value.clone() },
            };
            examples.push(PropertyExample { subject: subject_id, subject_label: None, object });
        }
        let labels = self.resolve_labels(&to_resolve)?;
        for example in &mut examples {
            example.subject_label = labels.get(example.subject.as_str()).cloned();
            if let ValueNode::Entity { id, label } = &mut example.object {
                *label = labels.get(id.as_str()).cloned();
            }
        }
        Ok(examples)
    }

    /// Executes a query. Every failure mode is encoded in the response so
    /// the caller can show it to the agent.
    fn run_sparql(&self, query: &str) -> SparqlResponse {
        let trimmed = query.trim();
        if trimmed.is_empty() {
            return SparqlResponse::error(SparqlErrorKind::Syntax, "empty query");
        }
        if let Some(body) = self.inner.cache.get("sparql", trimmed) {
            if let Ok(parsed) = wire::parse_sparql_body(&body) {
                return parsed;
            }
        }
        if self.inner.config.offline {
            return SparqlResponse::error(
                SparqlErrorKind::Network,
                "offline mode: query result not cached",
            );
        }

        let url = self.inner.config.sparql_endpoint_url.clone();
        let sent = self.send_with_retries(|| {
            self.inner
                .http
                .post(&url)
                .header(reqwest::header::ACCEPT, "application/sparql-results+json")
                .form(&[("query", trimmed.to_string()), ("format", "json".to_string())])
        });
        let body = match sent {
            Ok(body) => body,
            Err((err, _attempts)) => return sparql_failure(&err),
        };
        match wire::parse_sparql_body(&body) {
            Ok(parsed) => {
                if self.inner.cache.put("sparql", trimmed, &body).is_err() {
                    // cache write failures must not break query execution
                }
                parsed
            }
            Err(e) => SparqlResponse::error(SparqlErrorKind::Network, e.to_string()),
        }
    }
}

fn sparql_failure(err: &FetchError) -> SparqlResponse {
    match err {
        FetchError::Transport { timed_out: true, message } => {
            SparqlResponse::error(SparqlErrorKind::Timeout, message.clone())
        }
        FetchError::Transport { timed_out: false, message } => {
            SparqlResponse::error(SparqlErrorKind::Network, message.clone())
        }
        FetchError::TooLarge { .. } => {
            SparqlResponse::error(SparqlErrorKind::TooLarge, err.message())
        }
        FetchError::Status { code, body } => {
            let lower = body.to_lowercase();
            if *code == 400 {
                SparqlResponse::error(SparqlErrorKind::Syntax, body.clone())
            } else if lower.contains("timeout") {
                SparqlResponse::error(SparqlErrorKind::Timeout, body.clone())
            } else {
                SparqlResponse::error(SparqlErrorKind::Network, err.message())
            }
        }
    }
}

impl WikidataClient {
    fn property_exists(&self, id: &PropertyId) -> Result<bool, KbError> {
        // a property can exist without an English label; ask the API directly
        let body = self.api_get(
            "property-check",
            id.as_str(),
            &[
                ("action", "wbgetentities"),
                ("ids", id.as_str()),
                ("props", "info"),
                ("format", "json"),
            ],
        )?;
        let value: serde_json::Value =
            serde_json::from_str(&body).map_err(|e| KbError::Decode(e.to_string()))?;
        let Some(entities) = value.get("entities").and_then(|e| e.as_object()) else {
            return Ok(false);
        };
        Ok(entities
            .get(id.as_str())
            .map(|entity| entity.get("missing").is_none())
            .unwrap_or(false))
    }
}

fn entity_from_uri(uri: &str) -> Option<EntityId> {
    EntityId::new(uri.strip_prefix("http://www.wikidata.org/entity/")?).ok()
}

impl LabelLookup for WikidataClient {
    fn entity_label(&self, id: &EntityId) -> Option<String> {
        let mut wanted = BTreeSet::new();
        wanted.insert(id.to_string());
        self.resolve_labels(&wanted).ok()?.remove(id.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_limiter_spaces_out_calls() {
        let limiter = RateLimiter::new(Duration::from_millis(30));
        let start = Instant::now();
        limiter.acquire();
        limiter.acquire();
        limiter.acquire();
        // three acquisitions need at least two full intervals
        assert!(start.elapsed() >= Duration::from_millis(60));
    }

    #[test]
    fn zero_interval_never_sleeps() {
        let limiter = RateLimiter::new(Duration::ZERO);
        let start = Instant::now();
        for _ in 0..100 {
            limiter.acquire();
        }
        assert!(start.elapsed() < Duration::from_millis(50));
    }

    #[test]
    fn entity_uri_parsing() {
        assert_eq!(
            entity_from_uri("http://www.wikidata.org/entity/Q7604").unwrap().as_str(),
            "Q7604"
        );
        assert!(entity_from_uri("http://example.org/Q7604").is_none());
        assert!(entity_from_uri("http://www.wikidata.org/entity/P184").is_none());
    }
}
