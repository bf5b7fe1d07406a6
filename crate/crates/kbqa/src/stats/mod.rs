//! Per-query SPARQL complexity statistics: atomic clause count, projections,
//! relations, unique subjects/predicates/objects, and literals.

mod lexer;
mod parser;

use serde::{Deserialize, Serialize};

use crate::Score;

/// The seven complexity counts for one query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStats {
    pub clauses: usize,
    pub projections: usize,
    pub relations: usize,
    pub subjects: usize,
    pub predicates: usize,
    pub objects: usize,
    pub literals: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("unsupported syntax: {message}")]
    UnsupportedSyntax { message: String },
}

/// Analyzes one query. Queries outside the supported grammar subset
/// (CONSTRUCT, GRAPH, collections, ...) are reported as errors rather than
/// silently miscounted.
pub fn analyze_query(query: &str) -> Result<QueryStats, StatsError> {
    parser::analyze(query)
}

/// Per-metric arithmetic means over the successfully analyzed queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsMeans {
    pub clauses: Score,
    pub projections: Score,
    pub relations: Score,
    pub subjects: Score,
    pub predicates: Score,
    pub objects: Score,
    pub literals: Score,
}

impl StatsMeans {
    pub fn as_array(&self) -> [Score; 7] {
        [
            self.clauses,
            self.projections,
            self.relations,
            self.subjects,
            self.predicates,
            self.objects,
            self.literals,
        ]
    }
}

/// Aggregate over a query set, with the queries that failed analysis listed
/// rather than dropped silently.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsSummary {
    pub means: StatsMeans,
    pub analyzed: usize,
    pub excluded: usize,
    pub failures: Vec<StatsFailure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsFailure {
    pub index: usize,
    pub message: String,
}

/// Analyzes every query and averages the per-metric counts over the ones
/// that parse. Panics on an empty input set: a mean over nothing is a bug in
/// the caller.
pub fn aggregate_stats<'a, I>(queries: I) -> StatsSummary
where
    I: IntoIterator<Item = &'a str>,
{
    let mut sums = [0usize; 7];
    let mut analyzed = 0usize;
    let mut failures = Vec::new();
    let mut total = 0usize;
    for (index, query) in queries.into_iter().enumerate() {
        total += 1;
        match analyze_query(query) {
            Ok(stats) => {
                analyzed += 1;
                for (slot, value) in sums.iter_mut().zip([
                    stats.clauses,
                    stats.projections,
                    stats.relations,
                    stats.subjects,
                    stats.predicates,
                    stats.objects,
                    stats.literals,
                ]) {
                    *slot += value;
                }
            }
            Err(StatsError::UnsupportedSyntax { message }) => {
                failures.push(StatsFailure { index, message });
            }
        }
    }
    assert!(total > 0, "aggregate_stats needs at least one query");
    let denom = analyzed.max(1) as Score;
    let mean = |sum: usize| sum as Score / denom;
    StatsSummary {
        means: StatsMeans {
            clauses: mean(sums[0]),
            projections: mean(sums[1]),
            relations: mean(sums[2]),
            subjects: mean(sums[3]),
            predicates: mean(sums[4]),
            objects: mean(sums[5]),
            literals: mean(sums[6]),
        },
        analyzed,
        excluded: failures.len(),
        failures,
    }
}

impl StatsSummary {
    /// Aligned text rendering of the means row.
    pub fn text_table(&self) -> String {
        let headers =
            ["clauses", "projs", "rels", "subjs", "preds", "objs", "lits"];
        let values = self.means.as_array();
        let cells: Vec<String> = values.iter().map(|v| format!("{v:.2}")).collect();
        let widths: Vec<usize> =
            headers.iter().zip(&cells).map(|(h, c)| h.len().max(c.len())).collect();
        let head_row: Vec<String> = headers
            .iter()
            .zip(&widths)
            .map(|(h, w)| format!("{h:>w$}", w = w))
            .collect();
        let value_row: Vec<String> =
            cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}", w = w)).collect();
        format!(
            "{}\n{}\n(analyzed {} queries, {} excluded as unsupported)",
            head_row.join("  "),
            value_row.join("  "),
            self.analyzed,
            self.excluded
        )
    }
}
