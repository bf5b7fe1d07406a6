//! Answer-table scoring: set-based EM/F1 for flat lists and the row-major
//! generalization for result matrices.
//!
//! All score arithmetic happens on exact rationals; conversion to floating
//! point is the final step, so the matching layer never compares rounded
//! values.

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::assignment::{max_weight_matching, MatchEdge};
use super::cell::ResultCell;
use crate::Score;

type Exact = Ratio<i128>;

/// A normalized answer: either a rectangular matrix of cells (one row per
/// result, one column per projection) or a single boolean.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResultTable {
    Boolean(bool),
    Rows {
        columns: Vec<String>,
        rows: Vec<Vec<ResultCell>>,
    },
}

impl ResultTable {
    /// Builds a table, checking rectangularity against `columns`.
    pub fn table(columns: Vec<String>, rows: Vec<Vec<ResultCell>>) -> Self {
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(
                row.len(),
                columns.len(),
                "row {i} has {} cells, expected {}",
                row.len(),
                columns.len()
            );
        }
        ResultTable::Rows { columns, rows }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            ResultTable::Boolean(_) => false,
            ResultTable::Rows { rows, .. } => rows.is_empty(),
        }
    }

    pub fn row_count(&self) -> usize {
        match self {
            ResultTable::Boolean(_) => 0,
            ResultTable::Rows { rows, .. } => rows.len(),
        }
    }
}

/// True/false-positive/negative accumulators with the derived F1 and EM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    #[serde(rename = "tp")]
    pub true_pos: Score,
    #[serde(rename = "fp")]
    pub false_pos: Score,
    #[serde(rename = "fn")]
    pub false_neg: Score,
    pub f1: Score,
    pub em: u8,
}

impl EvalOutcome {
    fn from_exact(tp: Exact, fp: Exact, fn_: Exact) -> Self {
        debug_assert!(!tp.is_negative() && !fp.is_negative() && !fn_.is_negative());
        let denom = tp + tp + fp + fn_;
        let f1 = if denom.is_zero() {
            // vacuous agreement: nothing expected, nothing returned
            Exact::one()
        } else {
            (tp + tp) / denom
        };
        Self {
            true_pos: tp.to_f64().unwrap(),
            false_pos: fp.to_f64().unwrap(),
            false_neg: fn_.to_f64().unwrap(),
            f1: f1.to_f64().unwrap(),
            em: u8::from(f1.is_one()),
        }
    }

    fn mismatch(fp: usize, fn_: usize) -> Self {
        Self {
            true_pos: 0.0,
            false_pos: fp as Score,
            false_neg: fn_ as Score,
            f1: 0.0,
            em: 0,
        }
    }
}

/// Set-based EM/F1 between two flat answer lists (the single-projection
/// metric): tp = |gold ∩ pred|, fp = |pred − gold|, fn = |gold − pred|.
pub fn scalar_f1(gold: &[ResultCell], pred: &[ResultCell]) -> EvalOutcome {
    let g: BTreeSet<&ResultCell> = gold.iter().collect();
    let p: BTreeSet<&ResultCell> = pred.iter().collect();
    let tp = g.intersection(&p).count();
    let fp = p.difference(&g).count();
    let fn_ = g.difference(&p).count();
    let denom = (2 * tp + fp + fn_) as Score;
    let f1 = if denom > 0.0 { 2.0 * tp as Score / denom } else { 1.0 };
    EvalOutcome {
        true_pos: tp as Score,
        false_pos: fp as Score,
        false_neg: fn_ as Score,
        f1,
        em: u8::from(f1 == 1.0),
    }
}

fn row_set(row: &[ResultCell]) -> BTreeSet<&ResultCell> {
    row.iter().collect()
}

fn recall_exact(gold_row: &BTreeSet<&ResultCell>, pred_row: &BTreeSet<&ResultCell>) -> Exact {
    let hits = gold_row.intersection(pred_row).count() as i128;
    Ratio::new(hits, gold_row.len() as i128)
}

/// Recall of a predicted row against a gold row: the fraction of the gold
/// row's distinct cells that appear in the predicted row. Extra predicted
/// cells are not penalized.
pub fn row_recall(gold_row: &[ResultCell], pred_row: &[ResultCell]) -> Score {
    assert!(!gold_row.is_empty() && !pred_row.is_empty(), "rows must be non-empty");
    recall_exact(&row_set(gold_row), &row_set(pred_row))
        .to_f64()
        .unwrap()
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Maximum-cumulative-recall matching between gold rows and pred rows.
///
/// Rows pairs with zero recall are never matched. Among matchings with equal
/// cumulative recall, the one pairing more rows is chosen (it yields the
/// fewest false positives); this is folded into the integer weights so the
/// optimization stays exact.
fn assign_rows(gold_rows: &[Vec<ResultCell>], pred_rows: &[Vec<ResultCell>]) -> Vec<(usize, usize)> {
    let gold_sets: Vec<_> = gold_rows.iter().map(|r| row_set(r)).collect();
    let pred_sets: Vec<_> = pred_rows.iter().map(|r| row_set(r)).collect();

    let mut denom_lcm: i128 = 1;
    for g in &gold_sets {
        let d = g.len() as i128;
        if d > 0 {
            denom_lcm = denom_lcm / gcd(denom_lcm, d) * d;
        }
    }

    let cardinality_bonus = (gold_rows.len().min(pred_rows.len()) as i128) + 1;
    let mut edges = Vec::new();
    for (i, g) in gold_sets.iter().enumerate() {
        if g.is_empty() {
            continue;
        }
        for (j, p) in pred_sets.iter().enumerate() {
            let hits = g.intersection(p).count() as i128;
            if hits > 0 {
                let scaled = hits * (denom_lcm / g.len() as i128);
                edges.push(MatchEdge {
                    left: i,
                    right: j,
                    weight: scaled * cardinality_bonus + 1,
                });
            }
        }
    }
    max_weight_matching(gold_rows.len(), pred_rows.len(), &edges).pairs
}

/// Maximum-cumulative-recall matching between the rows of two tables,
/// returned as (gold row index, pred row index) pairs.
pub fn best_assignment(gold: &ResultTable, pred: &ResultTable) -> Vec<(usize, usize)> {
    match (gold, pred) {
        (
            ResultTable::Rows { rows: gold_rows, .. },
            ResultTable::Rows { rows: pred_rows, .. },
        ) => assign_rows(gold_rows, pred_rows),
        _ => Vec::new(),
    }
}

fn dedup_rows(rows: &[Vec<ResultCell>]) -> Vec<Vec<ResultCell>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for row in rows {
        if seen.insert(row) {
            out.push(row.clone());
        }
    }
    out
}

/// Row-major EM/F1 between a gold table and a predicted table.
///
/// Duplicate rows collapse first. Each matched pair contributes its recall to
/// tp and the shortfall to fn; unmatched gold rows count 1 fn each, unmatched
/// pred rows 1 fp each. A boolean is only comparable to a boolean. On
/// single-column tables this reduces exactly to [`scalar_f1`].
pub fn row_major_scores(gold: &ResultTable, pred: &ResultTable) -> EvalOutcome {
    match (gold, pred) {
        (ResultTable::Boolean(g), ResultTable::Boolean(p)) => {
            if g == p {
                EvalOutcome {
                    true_pos: 1.0,
                    false_pos: 0.0,
                    false_neg: 0.0,
                    f1: 1.0,
                    em: 1,
                }
            } else {
                EvalOutcome::mismatch(1, 1)
            }
        }
        (ResultTable::Boolean(_), ResultTable::Rows { rows, .. }) => {
            EvalOutcome::mismatch(rows.len().max(1), 1)
        }
        (ResultTable::Rows { rows, .. }, ResultTable::Boolean(_)) => {
            EvalOutcome::mismatch(1, rows.len().max(1))
        }
        (
            ResultTable::Rows { rows: gold_rows, .. },
            ResultTable::Rows { rows: pred_rows, .. },
        ) => {
            let gold_rows = dedup_rows(gold_rows);
            let pred_rows = dedup_rows(pred_rows);
            let pairs = assign_rows(&gold_rows, &pred_rows);

            let mut tp = Exact::zero();
            for &(i, j) in &pairs {
                tp += recall_exact(&row_set(&gold_rows[i]), &row_set(&pred_rows[j]));
            }
            let matched = pairs.len() as i128;
            let fn_ = Exact::from_integer(gold_rows.len() as i128) - tp;
            let fp = Exact::from_integer(pred_rows.len() as i128 - matched);
            EvalOutcome::from_exact(tp, fp, fn_)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::EntityId;

    fn ent(s: &str) -> ResultCell {
        ResultCell::Entity(EntityId::new(s).unwrap())
    }

    fn lit(s: &str) -> ResultCell {
        ResultCell::literal(s)
    }

    fn table(rows: Vec<Vec<ResultCell>>) -> ResultTable {
        let width = rows.first().map_or(1, Vec::len);
        let columns = (0..width).map(|i| format!("c{i}")).collect();
        ResultTable::table(columns, rows)
    }

    #[test]
    fn scalar_f1_set_arithmetic() {
        // gold {A,B}, pred {A,C}: tp=1, fp=1, fn=1
        let out = scalar_f1(&[lit("a"), lit("b")], &[lit("a"), lit("c")]);
        assert_eq!(
            (out.true_pos, out.false_pos, out.false_neg, out.f1, out.em),
            (1.0, 1.0, 1.0, 0.5, 0)
        );
    }

    #[test]
    fn scalar_f1_identity() {
        let cells = [ent("Q1"), lit("x"), ResultCell::number(3.0)];
        let out = scalar_f1(&cells, &cells);
        assert_eq!((out.f1, out.em), (1.0, 1));
    }

    #[test]
    fn scalar_f1_boolean_rule() {
        let out = scalar_f1(&[ResultCell::Boolean(true)], &[ResultCell::Boolean(false)]);
        assert_eq!((out.f1, out.em), (0.0, 0));
        let out = scalar_f1(&[ResultCell::Boolean(true)], &[ResultCell::Boolean(true)]);
        assert_eq!((out.f1, out.em), (1.0, 1));
    }

    #[test]
    fn row_recall_examples() {
        assert_eq!(row_recall(&[lit("a"), lit("b")], &[lit("a"), lit("b")]), 1.0);
        // extra predicted columns are not penalized
        assert_eq!(row_recall(&[lit("a")], &[lit("a"), lit("x")]), 1.0);
        assert_eq!(row_recall(&[lit("a"), lit("b")], &[lit("a")]), 0.5);
    }

    #[test]
    fn assignment_prefers_cross_pairing() {
        let gold = table(vec![vec![lit("a")], vec![lit("b")]]);
        let pred = table(vec![vec![lit("b")], vec![lit("a")]]);
        assert_eq!(best_assignment(&gold, &pred), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn assignment_skips_zero_recall() {
        let gold = table(vec![vec![lit("a")]]);
        let pred = table(vec![vec![lit("z")]]);
        assert!(best_assignment(&gold, &pred).is_empty());
    }

    #[test]
    fn assignment_takes_the_higher_recall_row() {
        // gold [[A,B],[A,C]], pred [[A,C]]: match gold row 1 at recall 1.0,
        // not row 0 at 0.5
        let gold = table(vec![vec![lit("a"), lit("b")], vec![lit("a"), lit("c")]]);
        let pred = table(vec![vec![lit("a"), lit("c")]]);
        assert_eq!(best_assignment(&gold, &pred), vec![(1, 0)]);
    }

    #[test]
    fn row_major_worked_examples() {
        // two rows, one recalled fully, one missed entirely
        let gold = table(vec![vec![lit("a"), lit("b")], vec![lit("c"), lit("d")]]);
        let pred = table(vec![vec![lit("a"), lit("b")], vec![lit("e"), lit("f")]]);
        let out = row_major_scores(&gold, &pred);
        assert_eq!(
            (out.true_pos, out.false_neg, out.false_pos, out.f1, out.em),
            (1.0, 1.0, 1.0, 0.5, 0)
        );

        // identity
        let t = table(vec![vec![lit("a"), lit("b")], vec![lit("c"), lit("d")]]);
        let out = row_major_scores(&t, &t);
        assert_eq!((out.f1, out.em), (1.0, 1));

        // partial recall of a single gold row
        let gold = table(vec![vec![lit("a"), lit("b")]]);
        let pred = table(vec![vec![lit("a")]]);
        let out = row_major_scores(&gold, &pred);
        assert_eq!(
            (out.true_pos, out.false_neg, out.false_pos),
            (0.5, 0.5, 0.0)
        );
        assert_eq!(out.f1, 2.0 / 3.0);

        // extra columns are not penalized
        let gold = table(vec![vec![lit("a")]]);
        let pred = table(vec![vec![lit("a"), lit("x")]]);
        let out = row_major_scores(&gold, &pred);
        assert_eq!((out.f1, out.em), (1.0, 1));
    }

    #[test]
    fn row_major_single_column_reduces_to_scalar() {
        let gold = table(vec![vec![lit("a")], vec![lit("b")]]);
        let pred = table(vec![vec![lit("a")], vec![lit("c")]]);
        let rm = row_major_scores(&gold, &pred);
        let sc = scalar_f1(&[lit("a"), lit("b")], &[lit("a"), lit("c")]);
        assert_eq!(rm, sc);
        assert_eq!(rm.f1, 0.5);
    }

    #[test]
    fn row_major_boolean_cases() {
        let t = ResultTable::Boolean(true);
        let f = ResultTable::Boolean(false);
        assert_eq!((row_major_scores(&t, &t).f1, row_major_scores(&t, &t).em), (1.0, 1));
        assert_eq!(row_major_scores(&t, &f).f1, 0.0);
        // type mismatch scores zero
        let rows = table(vec![vec![lit("true")]]);
        assert_eq!(row_major_scores(&t, &rows).f1, 0.0);
        assert_eq!(row_major_scores(&rows, &t).f1, 0.0);
    }

    #[test]
    fn row_major_empty_tables() {
        let empty = ResultTable::table(vec!["x".into()], vec![]);
        let full = table(vec![vec![lit("a")]]);
        assert_eq!(row_major_scores(&empty, &empty).f1, 1.0);
        assert_eq!(row_major_scores(&full, &empty).f1, 0.0);
        assert_eq!(row_major_scores(&empty, &full).f1, 0.0);
    }

    #[test]
    fn duplicate_rows_collapse_before_scoring() {
        let gold = table(vec![vec![lit("a")], vec![lit("a")]]);
        let pred = table(vec![vec![lit("a")]]);
        let out = row_major_scores(&gold, &pred);
        assert_eq!((out.f1, out.em), (1.0, 1));
    }

    #[test]
    fn outcome_serialization_uses_short_keys() {
        let out = scalar_f1(&[lit("a")], &[lit("a")]);
        let json = serde_json::to_value(out).unwrap();
        assert_eq!(json["tp"], 1.0);
        assert_eq!(json["fn"], 0.0);
        assert_eq!(json["em"], 1);
    }
}
