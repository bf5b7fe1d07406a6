//! Benchmark records and the aggregated report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agent::StopReason;
use crate::eval::EvalOutcome;
use crate::Score;

/// Per-example result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    /// Scores; absent when the example was excluded (gold failure).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eval: Option<EvalOutcome>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stop_reason: Option<StopReason>,
    /// Why this example was excluded from scoring, if it was.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub excluded: Option<String>,
    /// A run-level failure (e.g. repeated unparseable policy output); the
    /// example still scores 0.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_sparql: Option<String>,
    /// Digests of the normalized gold/predicted tables that were scored.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gold_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pred_digest: Option<String>,
    pub actions: usize,
    pub llm_calls: u32,
    /// Wall clock; forced to 0 in replay mode so reports stay byte-stable.
    pub duration_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gold_snapshot_ms: Option<u64>,
}

/// Median and quartiles of the per-example action counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionStats {
    pub median: Score,
    pub q1: Score,
    pub q3: Score,
}

fn median_of(sorted: &[usize]) -> Score {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n.is_multiple_of(2) {
        (sorted[n / 2 - 1] + sorted[n / 2]) as Score / 2.0
    } else {
        sorted[n / 2] as Score
    }
}

impl ActionStats {
    pub fn from_counts(mut counts: Vec<usize>) -> Option<Self> {
        if counts.is_empty() {
            return None;
        }
        counts.sort_unstable();
        let n = counts.len();
        let median = median_of(&counts);
        let (lower, upper) = if n.is_multiple_of(2) {
            (&counts[..n / 2], &counts[n / 2..])
        } else {
            (&counts[..n / 2], &counts[n / 2 + 1..])
        };
        Some(Self { median, q1: median_of(lower), q3: median_of(upper) })
    }
}

/// The full benchmark report: per-example records plus macro aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: String,
    pub scoring: crate::eval::ScoringMode,
    pub records: Vec<RunRecord>,
    /// Means of per-example em/f1 over the scored (non-excluded) records.
    pub macro_em: Score,
    pub macro_f1: Score,
    pub scored: usize,
    pub excluded: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub action_stats: Option<ActionStats>,
    pub stop_reasons: BTreeMap<String, usize>,
}

impl Report {
    pub fn from_records(
        mut records: Vec<RunRecord>,
        mode: &str,
        scoring: crate::eval::ScoringMode,
    ) -> Self {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let evals: Vec<(EvalOutcome, usize)> = records
            .iter()
            .filter_map(|r| r.eval.map(|e| (e, r.actions)))
            .collect();
        let n = evals.len() as Score;
        let (macro_em, macro_f1) = if evals.is_empty() {
            (0.0, 0.0)
        } else {
            (
                evals.iter().map(|(e, _)| e.em as Score).sum::<Score>() / n,
                evals.iter().map(|(e, _)| e.f1).sum::<Score>() / n,
            )
        };
        let action_stats =
            ActionStats::from_counts(evals.iter().map(|(_, actions)| *actions).collect());
        let mut stop_reasons = BTreeMap::new();
        for record in &records {
            let key = match (&record.stop_reason, &record.error, &record.excluded) {
                (_, _, Some(_)) => "excluded".to_string(),
                (_, Some(_), _) => "policy_failure".to_string(),
                (Some(reason), _, _) => {
                    serde_json::to_value(reason).expect("enum").as_str().unwrap().to_string()
                }
                (None, None, None) => "unknown".to_string(),
            };
            *stop_reasons.entry(key).or_insert(0) += 1;
        }
        let excluded = records.iter().filter(|r| r.excluded.is_some()).count();
        Self {
            mode: mode.to_string(),
            scoring,
            records,
            macro_em,
            macro_f1,
            scored: evals.len(),
            excluded,
            action_stats,
            stop_reasons,
        }
    }

    /// Aligned text summary for the terminal.
    pub fn text_summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "examples: {} scored, {} excluded\n",
            self.scored, self.excluded
        ));
        out.push_str(&format!(
            "macro EM: {:.4}\nmacro F1: {:.4}\n",
            self.macro_em, self.macro_f1
        ));
        if let Some(stats) = &self.action_stats {
            out.push_str(&format!(
                "actions: median {}, quartiles [{}, {}]\n",
                stats.median, stats.q1, stats.q3
            ));
        }
        out.push_str("outcomes:\n");
        for (reason, count) in &self.stop_reasons {
            out.push_str(&format!("  {reason:<18} {count}\n"));
        }
        out
    }
}
