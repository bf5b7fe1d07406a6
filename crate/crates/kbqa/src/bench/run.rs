//! Executing a benchmark: per-example agent runs in a bounded worker pool,
//! scoring, checkpointing, and offline prediction scoring.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::report::{Report, RunRecord};
use super::{BenchError, DatasetExample, GoldStore};
use crate::agent::{run_agent, AgentConfig};
use crate::eval::{normalize_results, row_major_scores, LabelLookup, ResultTable, ScoringMode};
use crate::kb::{KnowledgeBase, MemoryKb, SparqlResponse};
use crate::llm::{ChatProvider, LlmGateway, ReplayProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Live,
    Replay,
}

impl RunMode {
    fn label(self) -> &'static str {
        match self {
            RunMode::Live => "live",
            RunMode::Replay => "replay",
        }
    }
}

/// What a benchmark run needs per example: a knowledge base, a label source,
/// and a policy provider.
pub trait BenchEnv: Sync {
    fn kb(&self) -> &dyn KnowledgeBase;
    fn labels(&self) -> &dyn LabelLookup;
    fn provider(&self, example: &DatasetExample) -> Result<Arc<dyn ChatProvider>, BenchError>;
    fn llm_budget(&self) -> Option<u32> {
        None
    }
}

/// Replay environment: canned knowledge base responses plus one transcript
/// file per example (`<dir>/<id>.jsonl`).
pub struct ReplayEnv {
    pub kb: MemoryKb,
    pub transcript_dir: PathBuf,
}

impl ReplayEnv {
    fn transcript_path(&self, id: &str) -> PathBuf {
        self.transcript_dir.join(format!("{id}.jsonl"))
    }
}

impl BenchEnv for ReplayEnv {
    fn kb(&self) -> &dyn KnowledgeBase {
        &self.kb
    }

    fn labels(&self) -> &dyn LabelLookup {
        &crate::eval::NoLabels
    }

    fn provider(&self, example: &DatasetExample) -> Result<Arc<dyn ChatProvider>, BenchError> {
        let path = self.transcript_path(&example.id);
        let provider = ReplayProvider::from_file(&path)
            .map_err(|_| BenchError::MissingTranscript(example.id.clone()))?;
        Ok(Arc::new(provider))
    }
}

/// Runs the agent over every example and scores the answers.
///
/// Interrupted runs resume from the checkpoint file: records already present
/// there are reused verbatim and their examples are skipped.
#[allow(clippy::too_many_arguments)]
pub fn run_benchmark(
    examples: &[DatasetExample],
    env: &dyn BenchEnv,
    agent_config: &AgentConfig,
    gold: &GoldStore,
    mode: RunMode,
    scoring: ScoringMode,
    parallelism: usize,
    checkpoint: Option<&Path>,
) -> Result<Report, BenchError> {
    if examples.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    if mode == RunMode::Replay {
        // fail before any work if a transcript is missing
        for example in examples {
            env.provider(example)?;
        }
    }

    let mut done: HashMap<String, RunRecord> = HashMap::new();
    if let Some(path) = checkpoint {
        if let Ok(text) = std::fs::read_to_string(path) {
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let record: RunRecord = serde_json::from_str(line)
                    .map_err(|e| BenchError::Other(format!("corrupt checkpoint: {e}")))?;
                done.insert(record.id.clone(), record);
            }
        }
    }

    let pending: Vec<&DatasetExample> =
        examples.iter().filter(|e| !done.contains_key(&e.id)).collect();
    let checkpoint_file = match checkpoint {
        Some(path) => {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            Some(Mutex::new(
                std::fs::OpenOptions::new().create(true).append(true).open(path)?,
            ))
        }
        None => None,
    };

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<RunRecord>> = Mutex::new(Vec::with_capacity(pending.len()));
    let workers = parallelism.max(1).min(pending.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                let Some(example) = pending.get(index) else { break };
                let record = run_one(example, env, agent_config, gold, mode, scoring);
                if let Some(file) = &checkpoint_file {
                    let mut file = file.lock().expect("checkpoint lock");
                    let line = serde_json::to_string(&record).expect("record json");
                    let _ = writeln!(file, "{line}");
                    let _ = file.flush();
                }
                results.lock().expect("results lock").push(record);
            });
        }
    });

    let mut records: Vec<RunRecord> = done.into_values().collect();
    records.extend(results.into_inner().expect("results lock"));
    Ok(Report::from_records(records, mode.label(), scoring))
}

fn run_one(
    example: &DatasetExample,
    env: &dyn BenchEnv,
    agent_config: &AgentConfig,
    gold: &GoldStore,
    mode: RunMode,
    scoring: ScoringMode,
) -> RunRecord {
    let started = Instant::now();
    let mut record = RunRecord {
        id: example.id.clone(),
        eval: None,
        stop_reason: None,
        excluded: None,
        error: None,
        final_sparql: None,
        gold_digest: None,
        pred_digest: None,
        actions: 0,
        llm_calls: 0,
        duration_ms: 0,
        gold_snapshot_ms: None,
    };

    let gold_table = match gold.materialize(example, env.kb(), env.labels()) {
        Ok(table) => table,
        Err(e) => {
            record.excluded = Some(e.to_string());
            return record;
        }
    };
    record.gold_snapshot_ms = gold.snapshot_ms(&example.gold_sparql);
    record.gold_digest = Some(table_digest(&gold_table));

    let provider = match env.provider(example) {
        Ok(p) => p,
        Err(e) => {
            record.excluded = Some(e.to_string());
            return record;
        }
    };
    let gateway = LlmGateway::new(provider, env.llm_budget());

    match run_agent(&example.question, agent_config, env.kb(), &gateway) {
        Ok(outcome) => {
            let pred = match &outcome.final_result {
                Some(response @ (SparqlResponse::Table(_) | SparqlResponse::Boolean { .. })) => {
                    normalize_results(response, scoring, env.labels())
                        .unwrap_or_else(|_| empty_table())
                }
                _ => empty_table(),
            };
            record.pred_digest = Some(table_digest(&pred));
            record.eval = Some(row_major_scores(&gold_table, &pred));
            record.stop_reason = Some(outcome.stop_reason);
            record.final_sparql = outcome.final_sparql;
            record.actions = outcome.actions_taken;
        }
        Err(e) => {
            record.error = Some(e.to_string());
            let empty = empty_table();
            record.pred_digest = Some(table_digest(&empty));
            record.eval = Some(row_major_scores(&gold_table, &empty));
        }
    }
    record.llm_calls = gateway.calls_used();
    if mode == RunMode::Live {
        record.duration_ms = started.elapsed().as_millis() as u64;
    }
    record
}

fn empty_table() -> ResultTable {
    ResultTable::Rows { columns: vec![], rows: vec![] }
}

/// Digest of a normalized table, for the per-example evaluation record.
fn table_digest(table: &ResultTable) -> String {
    use sha2::{Digest, Sha256};
    let json = serde_json::to_string(table).expect("table json");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// A stored prediction: either a query to execute or a pre-normalized table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sparql: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub table: Option<ResultTable>,
}

/// Scores stored predictions against gold, without running the agent.
pub fn evaluate_predictions(
    examples: &[DatasetExample],
    predictions: &[Prediction],
    kb: &dyn KnowledgeBase,
    labels: &dyn LabelLookup,
    gold: &GoldStore,
    scoring: ScoringMode,
) -> Result<Report, BenchError> {
    if examples.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    let by_id: HashMap<&str, &Prediction> =
        predictions.iter().map(|p| (p.id.as_str(), p)).collect();

    let mut records = Vec::new();
    for example in examples {
        let mut record = RunRecord {
            id: example.id.clone(),
            eval: None,
            stop_reason: None,
            excluded: None,
            error: None,
            final_sparql: None,
            gold_digest: None,
            pred_digest: None,
            actions: 0,
            llm_calls: 0,
            duration_ms: 0,
            gold_snapshot_ms: None,
        };
        let gold_table = match gold.materialize(example, kb, labels) {
            Ok(table) => table,
            Err(e) => {
                record.excluded = Some(e.to_string());
                records.push(record);
                continue;
            }
        };
        record.gold_snapshot_ms = gold.snapshot_ms(&example.gold_sparql);
        record.gold_digest = Some(table_digest(&gold_table));
        let pred_table = match by_id.get(example.id.as_str()) {
            Some(Prediction { table: Some(table), .. }) => table.clone(),
            Some(Prediction { sparql: Some(query), .. }) => {
                record.final_sparql = Some(query.clone());
                match kb.run_sparql(query) {
                    ok @ (SparqlResponse::Table(_) | SparqlResponse::Boolean { .. }) => {
                        normalize_results(&ok, scoring, labels).unwrap_or_else(|_| empty_table())
                    }
                    SparqlResponse::Error { message, .. } => {
                        record.error = Some(message);
                        empty_table()
                    }
                }
            }
            _ => {
                record.error = Some("no prediction".into());
                empty_table()
            }
        };
        record.pred_digest = Some(table_digest(&pred_table));
        record.eval = Some(row_major_scores(&gold_table, &pred_table));
        records.push(record);
    }
    Ok(Report::from_records(records, "evaluate", scoring))
}
