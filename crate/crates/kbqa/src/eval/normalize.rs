//! Turning raw SPARQL responses into comparable result tables.

use std::collections::HashMap;

use super::cell::{CanonicalNumber, DateValue, ResultCell};
use super::score::ResultTable;
use crate::ids::EntityId;
use crate::kb::{BindingType, SparqlCell, SparqlResponse};

/// Whether entity bindings are compared by identifier or by English label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoringMode {
    #[default]
    Id,
    Label,
}

impl std::str::FromStr for ScoringMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "id" => Ok(ScoringMode::Id),
            "label" => Ok(ScoringMode::Label),
            other => Err(format!("unknown scoring mode {other:?} (expected id or label)")),
        }
    }
}

/// Source of English labels for label-mode normalization.
pub trait LabelLookup {
    fn entity_label(&self, id: &EntityId) -> Option<String>;
}

/// Lookup that never resolves anything; ids fall through unchanged.
pub struct NoLabels;

impl LabelLookup for NoLabels {
    fn entity_label(&self, _id: &EntityId) -> Option<String> {
        None
    }
}

impl LabelLookup for HashMap<EntityId, String> {
    fn entity_label(&self, id: &EntityId) -> Option<String> {
        self.get(id).cloned()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NormalizeError {
    #[error("cannot normalize an error response ({0})")]
    ErrorResponse(String),
    #[error("unresolvable binding: malformed entity URI {0:?}")]
    UnresolvableBinding(String),
}

const ENTITY_URI_PREFIX: &str = "http://www.wikidata.org/entity/";

/// Maps endpoint bindings to comparable cells and deduplicates identical
/// rows. Entity URIs become [`ResultCell::Entity`] in id mode, or literal
/// cells holding their English label (identifier fallback) in label mode.
pub fn normalize_results(
    raw: &SparqlResponse,
    mode: ScoringMode,
    labels: &dyn LabelLookup,
) -> Result<ResultTable, NormalizeError> {
    let table = match raw {
        SparqlResponse::Error { error, message } => {
            return Err(NormalizeError::ErrorResponse(format!("{error}: {message}")))
        }
        SparqlResponse::Boolean { value } => return Ok(ResultTable::Boolean(*value)),
        SparqlResponse::Table(t) => t,
    };

    let mut rows = Vec::with_capacity(table.rows.len());
    for raw_row in &table.rows {
        let mut row = Vec::with_capacity(raw_row.len());
        for cell in raw_row {
            row.push(match cell {
                Some(c) => normalize_cell(c, mode, labels)?,
                // unbound OPTIONAL variable
                None => ResultCell::literal(""),
            });
        }
        rows.push(row);
    }

    // DISTINCT-style dedup so serialization differences don't change scores
    let mut seen = std::collections::BTreeSet::new();
    rows.retain(|row| seen.insert(row.clone()));

    Ok(ResultTable::Rows { columns: table.columns.clone(), rows })
}

fn normalize_cell(
    cell: &SparqlCell,
    mode: ScoringMode,
    labels: &dyn LabelLookup,
) -> Result<ResultCell, NormalizeError> {
    match cell.binding_type {
        BindingType::Uri => {
            if let Some(suffix) = cell.value.strip_prefix(ENTITY_URI_PREFIX) {
                if let Ok(id) = EntityId::new(suffix) {
                    return Ok(match mode {
                        ScoringMode::Id => ResultCell::Entity(id),
                        ScoringMode::Label => match labels.entity_label(&id) {
                            Some(label) => ResultCell::literal(&label),
                            None => ResultCell::literal(id.as_str()),
                        },
                    });
                }
                if suffix.contains('/') || suffix.starts_with('P') || suffix.starts_with('L') {
                    // statement, property, and lexeme URIs are opaque values
                    return Ok(ResultCell::literal(&cell.value));
                }
                return Err(NormalizeError::UnresolvableBinding(cell.value.clone()));
            }
            Ok(ResultCell::literal(&cell.value))
        }
        BindingType::Bnode => Ok(ResultCell::literal(&cell.value)),
        BindingType::Literal => Ok(normalize_literal(cell)),
    }
}

fn local_datatype(datatype: &str) -> &str {
    datatype.rsplit(['#', '/']).next().unwrap_or(datatype)
}

fn normalize_literal(cell: &SparqlCell) -> ResultCell {
    let Some(datatype) = cell.datatype.as_deref() else {
        return ResultCell::literal(&cell.value);
    };
    match local_datatype(datatype) {
        "integer" | "decimal" | "double" | "float" | "long" | "int" | "short" | "byte"
        | "nonNegativeInteger" | "positiveInteger" | "negativeInteger" | "nonPositiveInteger"
        | "unsignedLong" | "unsignedInt" | "unsignedShort" | "unsignedByte" => {
            match CanonicalNumber::parse(&cell.value) {
                Some(n) => ResultCell::Number(n),
                None => ResultCell::literal(&cell.value),
            }
        }
        "dateTime" | "date" | "gYear" | "gYearMonth" => match DateValue::parse(&cell.value) {
            Some(d) => ResultCell::Date(d),
            None => ResultCell::literal(&cell.value),
        },
        "boolean" => match cell.value.as_str() {
            "true" | "1" => ResultCell::Boolean(true),
            "false" | "0" => ResultCell::Boolean(false),
            _ => ResultCell::literal(&cell.value),
        },
        _ => ResultCell::literal(&cell.value),
    }
}
