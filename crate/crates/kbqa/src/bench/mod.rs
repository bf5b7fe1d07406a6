//! Benchmark harness: dataset loading, gold-result materialization,
//! end-to-end agent runs with scoring, and report emission.

mod report;
mod run;

pub use report::{ActionStats, Report, RunRecord};
pub use run::{evaluate_predictions, run_benchmark, BenchEnv, Prediction, ReplayEnv, RunMode};

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::{normalize_results, LabelLookup, ResultTable, ScoringMode};
use crate::kb::{KnowledgeBase, SparqlResponse};

/// Which dataset family a file belongs to; QALD files get format-specific
/// parsing, the rest share the native record shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetSource {
    SpinachDev,
    SpinachTest,
    Qald,
    Wwq,
    Custom,
}

impl std::str::FromStr for DatasetSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spinach-dev" => Ok(Self::SpinachDev),
            "spinach-test" => Ok(Self::SpinachTest),
            "qald" => Ok(Self::Qald),
            "wwq" => Ok(Self::Wwq),
            "custom" => Ok(Self::Custom),
            other => Err(format!("unknown dataset source {other:?}")),
        }
    }
}

/// One benchmark example: a question and its gold query, optionally with a
/// pre-materialized gold table (used by offline fixtures).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetExample {
    pub id: String,
    pub question: String,
    pub gold_sparql: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gold_results: Option<ResultTable>,
    pub source: DatasetSource,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("schema error in record {index}: {message}")]
    Schema { index: usize, message: String },
    #[error("dataset file: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("gold execution failed for {id}: {kind}: {message}")]
    Gold { id: String, kind: String, message: String },
    #[error("replay transcript missing for example {0}")]
    MissingTranscript(String),
    #[error("{0}")]
    Other(String),
}

/// Native record shape: one JSON object per example.
#[derive(Deserialize)]
struct NativeRecord {
    id: serde_json::Value,
    question: String,
    sparql: String,
    #[serde(default)]
    gold_results: Option<ResultTable>,
}

/// Loads a dataset file. Native files are a JSON array of
/// `{id, question, sparql}` records (or one record per line); QALD files use
/// the challenge's `questions` structure, taking the English string.
pub fn load_dataset(path: &Path, source: DatasetSource) -> Result<Vec<DatasetExample>, BenchError> {
    let text = std::fs::read_to_string(path)?;
    let examples = match source {
        DatasetSource::Qald => parse_qald(&text)?,
        _ => parse_native(&text, source)?,
    };
    if examples.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    let mut seen = HashSet::new();
    for (index, example) in examples.iter().enumerate() {
        if !seen.insert(example.id.clone()) {
            return Err(BenchError::Schema {
                index,
                message: format!("duplicate id {:?}", example.id),
            });
        }
        if example.gold_sparql.trim().is_empty() {
            return Err(BenchError::Schema { index, message: "empty gold sparql".into() });
        }
    }
    Ok(examples)
}

fn parse_native(text: &str, source: DatasetSource) -> Result<Vec<DatasetExample>, BenchError> {
    let records: Vec<serde_json::Value> = match serde_json::from_str::<serde_json::Value>(text) {
        Ok(serde_json::Value::Array(items)) => items,
        Ok(single @ serde_json::Value::Object(_)) => vec![single],
        _ => {
            // JSON lines
            let mut items = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                items.push(serde_json::from_str(line).map_err(|e| BenchError::Schema {
                    index: lineno,
                    message: e.to_string(),
                })?);
            }
            items
        }
    };
    records
        .into_iter()
        .enumerate()
        .map(|(index, value)| {
            let record: NativeRecord =
                serde_json::from_value(value).map_err(|e| BenchError::Schema {
                    index,
                    message: e.to_string(),
                })?;
            let id = match record.id {
                serde_json::Value::String(s) => s,
                serde_json::Value::Number(n) => n.to_string(),
                other => {
                    return Err(BenchError::Schema {
                        index,
                        message: format!("id must be a string or number, got {other}"),
                    })
                }
            };
            Ok(DatasetExample {
                id,
                question: record.question,
                gold_sparql: record.sparql,
                gold_results: record.gold_results,
                source,
            })
        })
        .collect()
}

fn parse_qald(text: &str) -> Result<Vec<DatasetExample>, BenchError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| BenchError::Schema { index: 0, message: e.to_string() })?;
    let questions = value
        .get("questions")
        .and_then(|q| q.as_array())
        .ok_or_else(|| BenchError::Schema {
            index: 0,
            message: "QALD file has no questions array".into(),
        })?;
    let mut examples = Vec::new();
    for (index, q) in questions.iter().enumerate() {
        let id = q
            .get("id")
            .map(|v| match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .ok_or_else(|| BenchError::Schema { index, message: "missing id".into() })?;
        let question = q
            .get("question")
            .and_then(|variants| variants.as_array())
            .and_then(|variants| {
                variants.iter().find(|v| v.get("language").and_then(|l| l.as_str()) == Some("en"))
            })
            .and_then(|v| v.get("string"))
            .and_then(|s| s.as_str())
            .ok_or_else(|| BenchError::Schema {
                index,
                message: "no English question string".into(),
            })?
            .to_string();
        let sparql = q
            .get("query")
            .and_then(|query| query.get("sparql"))
            .and_then(|s| s.as_str())
            .ok_or_else(|| BenchError::Schema { index, message: "missing query.sparql".into() })?
            .to_string();
        examples.push(DatasetExample {
            id,
            question,
            gold_sparql: sparql,
            gold_results: None,
            source: DatasetSource::Qald,
        });
    }
    Ok(examples)
}

/// Disk cache of executed gold queries, keyed by the digest of
/// (scoring mode, query text). A cached gold result is never re-executed.
pub struct GoldStore {
    dir: Option<PathBuf>,
    mode: ScoringMode,
}

#[derive(Serialize, Deserialize)]
struct GoldRecord {
    snapshot_unix_ms: u64,
    table: ResultTable,
}

impl GoldStore {
    pub fn new(dir: Option<PathBuf>, mode: ScoringMode) -> std::io::Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self { dir, mode })
    }

    fn path_for(&self, sparql: &str) -> Option<PathBuf> {
        let dir = self.dir.as_ref()?;
        let mut hasher = Sha256::new();
        hasher.update(format!("{:?}", self.mode).as_bytes());
        hasher.update([0]);
        hasher.update(sparql.trim().as_bytes());
        Some(dir.join(format!("{}.json", hex::encode(hasher.finalize()))))
    }

    /// The normalized gold table for an example: inline results if the
    /// dataset carries them, the disk cache next, live execution last.
    /// Executions that error or come back empty are loud failures - they
    /// mean the dataset has drifted.
    pub fn materialize(
        &self,
        example: &DatasetExample,
        kb: &dyn KnowledgeBase,
        labels: &dyn LabelLookup,
    ) -> Result<ResultTable, BenchError> {
        if let Some(table) = &example.gold_results {
            return Ok(table.clone());
        }
        if let Some(path) = self.path_for(&example.gold_sparql) {
            if let Ok(text) = std::fs::read_to_string(&path) {
                if let Ok(record) = serde_json::from_str::<GoldRecord>(&text) {
                    return Ok(record.table);
                }
            }
        }

        let response = kb.run_sparql(&example.gold_sparql);
        let table = match &response {
            SparqlResponse::Error { error, message } => {
                return Err(BenchError::Gold {
                    id: example.id.clone(),
                    kind: error.to_string(),
                    message: message.clone(),
                })
            }
            ok => normalize_results(ok, self.mode, labels).map_err(|e| BenchError::Gold {
                id: example.id.clone(),
                kind: "normalize".into(),
                message: e.to_string(),
            })?,
        };
        if table.is_empty() {
            return Err(BenchError::Gold {
                id: example.id.clone(),
                kind: "empty".into(),
                message: "gold query returned no results".into(),
            });
        }
        if let Some(path) = self.path_for(&example.gold_sparql) {
            let record = GoldRecord {
                snapshot_unix_ms: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_millis() as u64)
                    .unwrap_or(0),
                table: table.clone(),
            };
            std::fs::write(&path, serde_json::to_string(&record).expect("gold json"))?;
        }
        Ok(table)
    }

    /// When the gold table was snapshotted, if it went through the disk
    /// cache. Inline gold results have no snapshot.
    pub fn snapshot_ms(&self, sparql: &str) -> Option<u64> {
        let path = self.path_for(sparql)?;
        let text = std::fs::read_to_string(path).ok()?;
        let record: GoldRecord = serde_json::from_str(&text).ok()?;
        Some(record.snapshot_unix_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::NoLabels;
    use crate::kb::{MemoryKb, SparqlErrorKind, SparqlTable};

    fn write_temp(contents: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.json");
        std::fs::write(&path, contents).unwrap();
        (dir, path)
    }

    #[test]
    fn loads_native_array() {
        let (_dir, path) = write_temp(
            r#"[{"id": "e1", "question": "q1", "sparql": "SELECT ?x WHERE { ?x ?p ?o }"},
                {"id": "e2", "question": "q2", "sparql": "ASK WHERE { ?x ?p ?o }"}]"#,
        );
        let examples = load_dataset(&path, DatasetSource::SpinachDev).unwrap();
        assert_eq!(examples.len(), 2);
        assert_eq!(examples[0].id, "e1");
        assert_eq!(examples[1].source, DatasetSource::SpinachDev);
    }

    #[test]
    fn loads_json_lines() {
        let (_dir, path) = write_temp(
            "{\"id\": 1, \"question\": \"q\", \"sparql\": \"SELECT ?x WHERE {}\"}\n{\"id\": 2, \"question\": \"q\", \"sparql\": \"SELECT ?y WHERE {}\"}\n",
        );
        let examples = load_dataset(&path, DatasetSource::Custom).unwrap();
        assert_eq!(examples.len(), 2);
        assert_eq!(examples[0].id, "1");
    }

    #[test]
    fn duplicate_ids_are_a_schema_error() {
        let (_dir, path) = write_temp(
            r#"[{"id": "e1", "question": "q", "sparql": "SELECT ?x WHERE {}"},
                {"id": "e1", "question": "q", "sparql": "SELECT ?y WHERE {}"}]"#,
        );
        let err = load_dataset(&path, DatasetSource::Custom).unwrap_err();
        assert!(matches!(err, BenchError::Schema { index: 1, .. }));
    }

    #[test]
    fn qald_format_maps_to_the_same_shape() {
        let (_dir, path) = write_temp(
            r#"{"questions": [{
                "id": 42,
                "question": [
                    {"language": "de", "string": "Wer?"},
                    {"language": "en", "string": "Who?"}
                ],
                "query": {"sparql": "SELECT ?x WHERE { ?x ?p ?o }"}
            }]}"#,
        );
        let examples = load_dataset(&path, DatasetSource::Qald).unwrap();
        assert_eq!(examples.len(), 1);
        assert_eq!(examples[0].id, "42");
        assert_eq!(examples[0].question, "Who?");
    }

    #[test]
    fn gold_store_caches_and_never_reexecutes() {
        let dir = tempfile::tempdir().unwrap();
        let store = GoldStore::new(Some(dir.path().to_path_buf()), ScoringMode::Id).unwrap();
        let example = DatasetExample {
            id: "e1".into(),
            question: "q".into(),
            gold_sparql: "SELECT ?x WHERE { ?x ?p ?o }".into(),
            gold_results: None,
            source: DatasetSource::Custom,
        };
        let kb = MemoryKb::default().with_sparql(
            &example.gold_sparql,
            SparqlResponse::Table(SparqlTable {
                columns: vec!["x".into()],
                rows: vec![vec![Some(crate::kb::SparqlCell {
                    binding_type: crate::kb::BindingType::Literal,
                    value: "v".into(),
                    datatype: None,
                })]],
            }),
        );
        let first = store.materialize(&example, &kb, &NoLabels).unwrap();
        // an empty kb would fail if the query were re-executed
        let empty = MemoryKb::default();
        let second = store.materialize(&example, &empty, &NoLabels).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn gold_errors_surface_loudly() {
        let store = GoldStore::new(None, ScoringMode::Id).unwrap();
        let example = DatasetExample {
            id: "e1".into(),
            question: "q".into(),
            gold_sparql: "SELECT ?x WHERE { ?x ?p ?o }".into(),
            gold_results: None,
            source: DatasetSource::Custom,
        };
        // timeout
        let kb = MemoryKb::default().with_sparql(
            &example.gold_sparql,
            SparqlResponse::error(SparqlErrorKind::Timeout, "killed"),
        );
        let err = store.materialize(&example, &kb, &NoLabels).unwrap_err();
        assert!(matches!(err, BenchError::Gold { ref kind, .. } if kind == "timeout"));

        // empty result
        let kb = MemoryKb::default().with_sparql(
            &example.gold_sparql,
            SparqlResponse::Table(SparqlTable { columns: vec!["x".into()], rows: vec![] }),
        );
        let err = store.materialize(&example, &kb, &NoLabels).unwrap_err();
        assert!(matches!(err, BenchError::Gold { ref kind, .. } if kind == "empty"));
    }
}
