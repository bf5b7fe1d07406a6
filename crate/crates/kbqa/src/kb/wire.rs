//! Parsers for the JSON payloads of the action API and the query service.

use std::collections::{BTreeSet, HashMap};

use serde::Deserialize;
use serde_json::Value;

use super::types::{
    BindingType, Claim, ClaimValue, EntityEntry, Qualifier, SparqlCell, SparqlResponse,
    SparqlTable, ValueNode,
};
use super::KbError;
use crate::ids::{EntityId, PropertyId};

fn decode_err(context: &str, err: impl std::fmt::Display) -> KbError {
    KbError::Decode(format!("{context}: {err}"))
}

// --- wbsearchentities ------------------------------------------------------

#[derive(Deserialize)]
struct SearchEnvelope {
    #[serde(default)]
    search: Vec<WireSearchHit>,
    error: Option<ApiError>,
}

#[derive(Deserialize)]
struct WireSearchHit {
    id: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    description: Option<String>,
}

#[derive(Deserialize)]
struct ApiError {
    code: String,
    info: String,
}

/// Returns `(id, label, description)` triples in service order.
pub fn parse_search_body(body: &str) -> Result<Vec<(String, String, String)>, KbError> {
    let envelope: SearchEnvelope =
        serde_json::from_str(body).map_err(|e| decode_err("search response", e))?;
    if let Some(err) = envelope.error {
        return Err(KbError::Decode(format!("api error {}: {}", err.code, err.info)));
    }
    Ok(envelope
        .search
        .into_iter()
        .map(|hit| {
            let label = hit.label.unwrap_or_else(|| hit.id.clone());
            (hit.id, label, hit.description.unwrap_or_default())
        })
        .collect())
}

// --- wbgetentities ---------------------------------------------------------

#[derive(Deserialize)]
struct EntitiesEnvelope {
    #[serde(default)]
    entities: serde_json::Map<String, Value>,
    error: Option<ApiError>,
}

#[derive(Deserialize)]
struct WireSnak {
    snaktype: String,
    #[serde(default)]
    datavalue: Option<WireDataValue>,
}

#[derive(Deserialize)]
struct WireDataValue {
    #[serde(rename = "type")]
    value_type: String,
    value: Value,
}

#[derive(Deserialize)]
struct WireStatement {
    mainsnak: WireSnak,
    #[serde(default)]
    qualifiers: Option<serde_json::Map<String, Value>>,
}

/// An entity entry whose labels are still unresolved, plus every id whose
/// English label should be fetched before rendering.
pub struct RawEntry {
    pub entry: EntityEntry,
    pub ids_to_resolve: BTreeSet<String>,
}

fn entities_envelope(body: &str) -> Result<serde_json::Map<String, Value>, KbError> {
    let envelope: EntitiesEnvelope =
        serde_json::from_str(body).map_err(|e| decode_err("entities response", e))?;
    if let Some(err) = envelope.error {
        return Err(KbError::Decode(format!("api error {}: {}", err.code, err.info)));
    }
    Ok(envelope.entities)
}

/// Parses a one-entity `wbgetentities` response. `Ok(None)` means the service
/// reported the entity as missing.
pub fn parse_entity_body(body: &str, id: &EntityId) -> Result<Option<RawEntry>, KbError> {
    let entities = entities_envelope(body)?;
    let Some(entity) = entities.get(id.as_str()).or_else(|| entities.values().next()) else {
        return Ok(None);
    };
    if entity.get("missing").is_some() {
        return Ok(None);
    }

    let mut ids_to_resolve = BTreeSet::new();
    let label = english_term(entity, "labels");
    let description = english_term(entity, "descriptions");

    let mut claims = Vec::new();
    if let Some(Value::Object(claim_map)) = entity.get("claims") {
        for (pid_str, statements) in claim_map {
            let Ok(property) = PropertyId::new(pid_str.as_str()) else {
                continue;
            };
            ids_to_resolve.insert(pid_str.clone());
            let statements: Vec<WireStatement> = serde_json::from_value(statements.clone())
                .map_err(|e| decode_err("claim statements", e))?;
            let mut values = Vec::new();
            for statement in &statements {
                let Some(value) = snak_value(&statement.mainsnak, &mut ids_to_resolve) else {
                    continue;
                };
                let mut qualifiers = Vec::new();
                if let Some(qual_map) = &statement.qualifiers {
                    for (qpid_str, snaks) in qual_map {
                        let Ok(qprop) = PropertyId::new(qpid_str.as_str()) else {
                            continue;
                        };
                        ids_to_resolve.insert(qpid_str.clone());
                        let snaks: Vec<WireSnak> = serde_json::from_value(snaks.clone())
                            .map_err(|e| decode_err("qualifier snaks", e))?;
                        for snak in &snaks {
                            if let Some(qvalue) = snak_value(snak, &mut ids_to_resolve) {
                                qualifiers.push(Qualifier {
                                    property: qprop.clone(),
                                    label: None,
                                    value: qvalue,
                                });
                            }
                        }
                    }
                }
                values.push(ClaimValue { value, qualifiers });
            }
            if !values.is_empty() {
                claims.push(Claim { property, label: None, values });
            }
        }
    }

    Ok(Some(RawEntry {
        entry: EntityEntry { subject: id.clone(), label, description, claims },
        ids_to_resolve,
    }))
}

fn english_term(entity: &Value, field: &str) -> Option<String> {
    entity
        .get(field)?
        .get("en")?
        .get("value")?
        .as_str()
        .map(str::to_string)
}

/// Maps one snak to a claim value. Entity references keep their label slot
/// empty; the id is added to the resolution set instead.
fn snak_value(snak: &WireSnak, ids_to_resolve: &mut BTreeSet<String>) -> Option<ValueNode> {
    match snak.snaktype.as_str() {
        "novalue" => return Some(ValueNode::Literal { value: "no value".into() }),
        "somevalue" => return Some(ValueNode::Literal { value: "unknown value".into() }),
        _ => {}
    }
    let dv = snak.datavalue.as_ref()?;
    match dv.value_type.as_str() {
        "wikibase-entityid" => {
            let id = dv.value.get("id")?.as_str()?;
            match EntityId::new(id) {
                Ok(entity_id) => {
                    ids_to_resolve.insert(id.to_string());
                    Some(ValueNode::Entity { id: entity_id, label: None })
                }
                // properties, lexemes, forms: keep the raw identifier
                Err(_) => Some(ValueNode::Literal { value: id.to_string() }),
            }
        }
        "string" => Some(ValueNode::Literal { value: dv.value.as_str()?.to_string() }),
        "monolingualtext" => {
            Some(ValueNode::Literal { value: dv.value.get("text")?.as_str()?.to_string() })
        }
        "time" => {
            let time = dv.value.get("time")?.as_str()?;
            let precision = dv.value.get("precision").and_then(Value::as_u64).unwrap_or(11);
            Some(ValueNode::Time { value: format_time(time, precision) })
        }
        "quantity" => {
            let amount = dv.value.get("amount")?.as_str()?;
            let unit = dv.value.get("unit").and_then(Value::as_str).unwrap_or("1");
            let unit = unit.rsplit('/').next().filter(|u| u.starts_with('Q')).map(|u| {
                ids_to_resolve.insert(u.to_string());
                u.to_string()
            });
            Some(ValueNode::Quantity {
                amount: amount.trim_start_matches('+').to_string(),
                unit,
            })
        }
        "globecoordinate" => {
            let lat = dv.value.get("latitude").and_then(Value::as_f64)?;
            let lon = dv.value.get("longitude").and_then(Value::as_f64)?;
            Some(ValueNode::Literal { value: format!("{lat}, {lon}") })
        }
        _ => None,
    }
}

/// Renders a Wikidata timestamp (`+1707-04-15T00:00:00Z`) at its stated
/// precision: 11 = day, 10 = month, 9 = year, coarser values fall back to the
/// year.
fn format_time(time: &str, precision: u64) -> String {
    let negative = time.starts_with('-');
    let trimmed = time.trim_start_matches(['+', '-']);
    let date_part = trimmed.split('T').next().unwrap_or(trimmed);
    let mut parts = date_part.split('-');
    let year = parts.next().unwrap_or("0").trim_start_matches('0');
    let year = if year.is_empty() { "0" } else { year };
    let sign = if negative { "-" } else { "" };
    let month = parts.next().unwrap_or("01");
    let day = parts.next().unwrap_or("01");
    match precision {
        11.. => format!("{sign}{year}-{month}-{day}"),
        10 => format!("{sign}{year}-{month}"),
        _ => format!("{sign}{year}"),
    }
}

/// Extracts `id -> English label` pairs from a `wbgetentities` labels call.
pub fn parse_labels_body(body: &str) -> Result<HashMap<String, String>, KbError> {
    let entities = entities_envelope(body)?;
    let mut labels = HashMap::new();
    for (id, entity) in &entities {
        if let Some(label) = english_term(entity, "labels") {
            labels.insert(id.clone(), label);
        }
    }
    Ok(labels)
}

/// Patches resolved labels into an entry produced by [`parse_entity_body`].
pub fn apply_labels(entry: &mut EntityEntry, labels: &HashMap<String, String>) {
    let patch_value = |value: &mut ValueNode| match value {
        ValueNode::Entity { id, label } => {
            if label.is_none() {
                *label = labels.get(id.as_str()).cloned();
            }
        }
        ValueNode::Quantity { unit: Some(u), .. } => {
            if let Some(resolved) = labels.get(u.as_str()) {
                *u = resolved.clone();
            }
        }
        _ => {}
    };
    for claim in &mut entry.claims {
        if claim.label.is_none() {
            claim.label = labels.get(claim.property.as_str()).cloned();
        }
        for value in &mut claim.values {
            patch_value(&mut value.value);
            for qualifier in &mut value.qualifiers {
                if qualifier.label.is_none() {
                    qualifier.label = labels.get(qualifier.property.as_str()).cloned();
                }
                patch_value(&mut qualifier.value);
            }
        }
    }
}

// --- SPARQL results --------------------------------------------------------

#[derive(Deserialize)]
struct SparqlEnvelope {
    #[serde(default)]
    head: SparqlHead,
    #[serde(default)]
    boolean: Option<bool>,
    #[serde(default)]
    results: Option<SparqlResults>,
}

#[derive(Deserialize, Default)]
struct SparqlHead {
    #[serde(default)]
    vars: Vec<String>,
}

#[derive(Deserialize)]
struct SparqlResults {
    #[serde(default)]
    bindings: Vec<serde_json::Map<String, Value>>,
}

#[derive(Deserialize)]
struct WireBinding {
    #[serde(rename = "type")]
    binding_type: String,
    value: String,
    #[serde(default)]
    datatype: Option<String>,
}

/// Parses a successful (HTTP 200) query service response body.
pub fn parse_sparql_body(body: &str) -> Result<SparqlResponse, KbError> {
    let envelope: SparqlEnvelope =
        serde_json::from_str(body).map_err(|e| decode_err("sparql response", e))?;
    if let Some(value) = envelope.boolean {
        return Ok(SparqlResponse::Boolean { value });
    }
    let Some(results) = envelope.results else {
        return Err(KbError::Decode("sparql response has neither boolean nor results".into()));
    };
    let columns = envelope.head.vars;
    let mut rows = Vec::with_capacity(results.bindings.len());
    for binding in &results.bindings {
        let mut row = Vec::with_capacity(columns.len());
        for var in &columns {
            row.push(match binding.get(var) {
                Some(v) => {
                    let b: WireBinding = serde_json::from_value(v.clone())
                        .map_err(|e| decode_err("sparql binding", e))?;
                    let binding_type = match b.binding_type.as_str() {
                        "uri" => BindingType::Uri,
                        "bnode" => BindingType::Bnode,
                        // "literal" and legacy "typed-literal"
                        _ => BindingType::Literal,
                    };
                    Some(SparqlCell { binding_type, value: b.value, datatype: b.datatype })
                }
                None => None,
            });
        }
        rows.push(row);
    }
    Ok(SparqlResponse::Table(SparqlTable { columns, rows }))
}
