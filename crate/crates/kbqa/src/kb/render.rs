//! Deterministic text renderings of action results: what the agent actually
//! reads. Identical payloads always produce byte-identical strings.

use serde_json::{Map, Value};

use super::types::{
    ClaimValue, EntityEntry, PropertyExample, SearchResult, SparqlResponse, SparqlTable,
    MAX_SEARCH_ENTITIES, MAX_SEARCH_PROPERTIES,
};

/// How many leading/trailing rows of a large SPARQL table are shown.
const TABLE_HEAD_ROWS: usize = 5;
const TABLE_TAIL_ROWS: usize = 5;

/// A structured action result, ready to be rendered into an observation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "payload", rename_all = "snake_case")]
pub enum Observation {
    Search(SearchResult),
    Entry(EntityEntry),
    Examples { property: String, examples: Vec<PropertyExample> },
    Sparql(SparqlResponse),
}

/// Renders any payload to the text shown to the agent.
pub fn render_observation(payload: &Observation) -> String {
    match payload {
        Observation::Search(r) => render_search(r),
        Observation::Entry(e) => render_entry(e),
        Observation::Examples { property, examples } => render_examples(property, examples),
        Observation::Sparql(r) => render_sparql(r),
    }
}

fn render_search(result: &SearchResult) -> String {
    let mut out = String::new();
    out.push_str("Entities:");
    if result.entities.is_empty() {
        out.push_str(" none");
    }
    for hit in result.entities.iter().take(MAX_SEARCH_ENTITIES) {
        out.push_str("\n- ");
        out.push_str(&hit.label);
        out.push_str(&format!(" ({})", hit.id));
        if !hit.description.is_empty() {
            out.push_str(": ");
            out.push_str(&hit.description);
        }
    }
    out.push_str("\nProperties:");
    if result.properties.is_empty() {
        out.push_str(" none");
    }
    for hit in result.properties.iter().take(MAX_SEARCH_PROPERTIES) {
        out.push_str("\n- ");
        out.push_str(&hit.label);
        out.push_str(&format!(" ({})", hit.id));
        if !hit.description.is_empty() {
            out.push_str(": ");
            out.push_str(&hit.description);
        }
    }
    out
}

/// Entries render as a JSON object in the `"label (PID)": value` style:
/// single plain values inline as strings, values carrying qualifiers as
/// nested objects keyed by the value text.
fn render_entry(entry: &EntityEntry) -> String {
    format!("Wikidata entry for {}:\n{}", entry.heading(), entry_edges_json(entry))
}

/// Just the claims object of an entry, pretty-printed; this is the text the
/// pruning prompt sees and the shape its output is matched against.
pub fn entry_edges_json(entry: &EntityEntry) -> String {
    let mut claims = Map::new();
    for claim in &entry.claims {
        claims.insert(claim.key(), render_claim_values(&claim.values));
    }
    serde_json::to_string_pretty(&Value::Object(claims)).expect("json rendering")
}

fn render_claim_values(values: &[ClaimValue]) -> Value {
    let any_qualifiers = values.iter().any(|v| !v.qualifiers.is_empty());
    if !any_qualifiers {
        let texts: Vec<Value> = values
            .iter()
            .map(|v| Value::String(v.value.display_text()))
            .collect();
        return match <[Value; 1]>::try_from(texts) {
            Ok([single]) => single,
            Err(texts) => Value::Array(texts),
        };
    }
    let mut obj = Map::new();
    for v in values {
        let mut inner = Map::new();
        if !v.qualifiers.is_empty() {
            let quals: Vec<Value> = v
                .qualifiers
                .iter()
                .map(|q| {
                    let key = match &q.label {
                        Some(l) => format!("{l} ({})", q.property),
                        None => q.property.to_string(),
                    };
                    let mut m = Map::new();
                    m.insert(key, Value::String(q.value.display_text()));
                    Value::Object(m)
                })
                .collect();
            inner.insert("Qualifiers".to_string(), Value::Array(quals));
        }
        obj.insert(v.value.display_text(), Value::Object(inner));
    }
    Value::Object(obj)
}

fn render_examples(property: &str, examples: &[PropertyExample]) -> String {
    if examples.is_empty() {
        return format!("No usage examples found for {property}.");
    }
    let mut out = format!("Examples of {property}:");
    for ex in examples {
        let subject = match &ex.subject_label {
            Some(l) => format!("{l} ({})", ex.subject),
            None => ex.subject.to_string(),
        };
        out.push_str(&format!("\n- {subject} -> {}", ex.object.display_text()));
    }
    out
}

fn render_sparql(response: &SparqlResponse) -> String {
    match response {
        SparqlResponse::Boolean { value } => value.to_string(),
        SparqlResponse::Error { error, message } => format!("SPARQL error ({error}): {message}"),
        SparqlResponse::Table(t) => render_table(t),
    }
}

fn render_table(table: &SparqlTable) -> String {
    let mut out = table.columns.join(" | ");
    out.push_str("\n--");
    let total = table.rows.len();
    if total > TABLE_HEAD_ROWS + TABLE_TAIL_ROWS {
        for row in &table.rows[..TABLE_HEAD_ROWS] {
            out.push('\n');
            out.push_str(&render_row(row));
        }
        out.push_str("\n...");
        for row in &table.rows[total - TABLE_TAIL_ROWS..] {
            out.push('\n');
            out.push_str(&render_row(row));
        }
    } else {
        for row in &table.rows {
            out.push('\n');
            out.push_str(&render_row(row));
        }
    }
    out.push_str(&format!("\n({total} rows)"));
    out
}

fn render_row(row: &[Option<super::types::SparqlCell>]) -> String {
    row.iter()
        .map(|cell| match cell {
            Some(c) => shorten_uri(&c.value),
            None => String::new(),
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

/// Entity URIs collapse to their identifier so rows stay readable.
fn shorten_uri(value: &str) -> String {
    match value.strip_prefix("http://www.wikidata.org/entity/") {
        Some(id) if !id.contains('/') => id.to_string(),
        _ => value.to_string(),
    }
}

/// Counts the data rows in a rendered table observation: the lines between
/// the header separator and the trailing row-count line, minus any elision
/// marker. Exposed for tests of the truncation contract.
pub fn rendered_data_rows(rendered: &str) -> usize {
    rendered
        .lines()
        .skip_while(|l| *l != "--")
        .skip(1)
        .filter(|l| *l != "..." && !(l.starts_with('(') && l.ends_with(" rows)")))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{EntityId, PropertyId};
    use crate::kb::types::{BindingType, Claim, Qualifier, SearchHit, SparqlCell, ValueNode};

    fn cell(v: &str) -> Option<SparqlCell> {
        Some(SparqlCell {
            binding_type: BindingType::Literal,
            value: v.to_string(),
            datatype: None,
        })
    }

    fn table_with_rows(n: usize) -> SparqlTable {
        SparqlTable {
            columns: vec!["x".into(), "y".into()],
            rows: (0..n).map(|i| vec![cell(&format!("a{i}")), cell(&format!("b{i}"))]).collect(),
        }
    }

    #[test]
    fn large_tables_show_first_and_last_five_rows() {
        let rendered = render_observation(&Observation::Sparql(SparqlResponse::Table(
            table_with_rows(12),
        )));
        assert_eq!(rendered_data_rows(&rendered), 10);
        assert!(rendered.contains("12 rows"));
        assert!(rendered.contains("..."));
        assert!(rendered.contains("a0 | b0"));
        assert!(rendered.contains("a11 | b11"));
        assert!(!rendered.contains("a5 | b5"));
    }

    #[test]
    fn ten_row_table_is_not_elided() {
        let rendered = render_observation(&Observation::Sparql(SparqlResponse::Table(
            table_with_rows(10),
        )));
        assert_eq!(rendered_data_rows(&rendered), 10);
        assert!(!rendered.contains("\n...\n"));
        assert!(rendered.contains("(10 rows)"));
    }

    #[test]
    fn boolean_renders_as_single_line() {
        let rendered =
            render_observation(&Observation::Sparql(SparqlResponse::Boolean { value: true }));
        assert_eq!(rendered, "true");
    }

    #[test]
    fn error_rendering_carries_kind_and_message() {
        let rendered = render_observation(&Observation::Sparql(SparqlResponse::error(
            crate::kb::SparqlErrorKind::Syntax,
            "MalformedQueryException: unexpected end of query",
        )));
        assert_eq!(
            rendered,
            "SPARQL error (syntax): MalformedQueryException: unexpected end of query"
        );
    }

    #[test]
    fn entry_renders_in_labeled_json_style() {
        let entry = EntityEntry {
            subject: EntityId::new("Q649593").unwrap(),
            label: Some("Barack Obama Sr.".into()),
            description: Some("economist".into()),
            claims: vec![
                Claim {
                    property: PropertyId::new("P19").unwrap(),
                    label: Some("place of birth".into()),
                    values: vec![ClaimValue {
                        value: ValueNode::Entity {
                            id: EntityId::new("Q1027168").unwrap(),
                            label: Some("Nyang'oma Kogelo".into()),
                        },
                        qualifiers: vec![Qualifier {
                            property: PropertyId::new("P17").unwrap(),
                            label: Some("country".into()),
                            value: ValueNode::Literal { value: "Kenya Colony".into() },
                        }],
                    }],
                },
                Claim {
                    property: PropertyId::new("P20").unwrap(),
                    label: Some("place of death".into()),
                    values: vec![ClaimValue {
                        value: ValueNode::Entity {
                            id: EntityId::new("Q3870").unwrap(),
                            label: Some("Nairobi".into()),
                        },
                        qualifiers: vec![],
                    }],
                },
            ],
        };
        let rendered = render_observation(&Observation::Entry(entry));
        assert!(rendered.starts_with("Wikidata entry for Barack Obama Sr. (Q649593, economist):"));
        assert!(rendered.contains("\"place of birth (P19)\""));
        assert!(rendered.contains("\"Nyang'oma Kogelo (Q1027168)\""));
        assert!(rendered.contains("\"Qualifiers\""));
        assert!(rendered.contains("\"country (P17)\": \"Kenya Colony\""));
        assert!(rendered.contains("\"place of death (P20)\": \"Nairobi (Q3870)\""));
    }

    #[test]
    fn search_rendering_lists_hits() {
        let result = SearchResult {
            entities: vec![SearchHit {
                id: EntityId::new("Q6973052").unwrap(),
                label: "National Heritage List for England".into(),
                description: "heritage register".into(),
            }],
            properties: vec![SearchHit {
                id: PropertyId::new("P1216").unwrap(),
                label: "National Heritage List for England number".into(),
                description: "identifier".into(),
            }],
        };
        let rendered = render_observation(&Observation::Search(result));
        assert!(rendered.contains("- National Heritage List for England (Q6973052): heritage register"));
        assert!(rendered.contains("- National Heritage List for England number (P1216): identifier"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let obs = Observation::Sparql(SparqlResponse::Table(table_with_rows(12)));
        assert_eq!(render_observation(&obs), render_observation(&obs));
    }
}
