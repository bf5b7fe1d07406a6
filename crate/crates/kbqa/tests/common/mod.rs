//! Shared test helpers: the brute-force row-major scoring oracle, random
//! table generation, and a canned-response HTTP server.

#![allow(dead_code)]

pub mod http;

use kbqa::eval::{EvalOutcome, ResultCell, ResultTable};
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::Rng;
use std::collections::BTreeSet;

type Exact = Ratio<i128>;

/// Brute-force maximizer over all injective row matchings: maximizes
/// cumulative recall, breaking ties toward more matched pairs. Fully
/// independent of the library's assignment path.
pub fn brute_force_row_major(gold: &ResultTable, pred: &ResultTable) -> EvalOutcome {
    let (gold_rows, pred_rows) = match (gold, pred) {
        (ResultTable::Rows { rows: g, .. }, ResultTable::Rows { rows: p, .. }) => (g, p),
        _ => panic!("oracle only handles row tables"),
    };
    let gold_rows = dedup(gold_rows);
    let pred_rows = dedup(pred_rows);

    let gold_sets: Vec<BTreeSet<&ResultCell>> =
        gold_rows.iter().map(|r| r.iter().collect()).collect();
    let pred_sets: Vec<BTreeSet<&ResultCell>> =
        pred_rows.iter().map(|r| r.iter().collect()).collect();

    let recall = |i: usize, j: usize| -> Exact {
        let hits = gold_sets[i].intersection(&pred_sets[j]).count() as i128;
        Ratio::new(hits, gold_sets[i].len().max(1) as i128)
    };

    fn explore(
        i: usize,
        used: &mut Vec<bool>,
        recall: &dyn Fn(usize, usize) -> Exact,
        n_gold: usize,
        best: &mut (Exact, usize),
        current: (Exact, usize),
    ) {
        if i == n_gold {
            if current.0 > best.0 || (current.0 == best.0 && current.1 > best.1) {
                *best = current;
            }
            return;
        }
        // leave gold row i unmatched
        explore(i + 1, used, recall, n_gold, best, current);
        for j in 0..used.len() {
            if !used[j] {
                let r = recall(i, j);
                if r > Exact::zero() {
                    used[j] = true;
                    explore(
                        i + 1,
                        used,
                        recall,
                        n_gold,
                        best,
                        (current.0 + r, current.1 + 1),
                    );
                    used[j] = false;
                }
            }
        }
    }

    let mut best = (Exact::zero(), 0usize);
    let mut used = vec![false; pred_sets.len()];
    explore(0, &mut used, &recall, gold_sets.len(), &mut best, (Exact::zero(), 0));

    let (total_recall, matched) = best;
    let tp = total_recall;
    let fp = Exact::from_integer(pred_rows.len() as i128 - matched as i128);
    let fn_ = Exact::from_integer(gold_rows.len() as i128) - tp;
    let denom = tp + tp + fp + fn_;
    let f1 = if denom.is_zero() { Exact::one() } else { (tp + tp) / denom };
    EvalOutcome {
        true_pos: tp.to_f64().unwrap(),
        false_pos: fp.to_f64().unwrap(),
        false_neg: fn_.to_f64().unwrap(),
        f1: f1.to_f64().unwrap(),
        em: u8::from(f1.is_one()),
    }
}

fn dedup(rows: &[Vec<ResultCell>]) -> Vec<Vec<ResultCell>> {
    let mut seen = BTreeSet::new();
    rows.iter().filter(|r| seen.insert((*r).clone())).cloned().collect()
}

/// A cell from a tiny alphabet (`c0`..`c{alphabet-1}`).
pub fn cell_from(symbol: u8) -> ResultCell {
    ResultCell::literal(&format!("c{symbol}"))
}

/// Random table with at most `max_rows` rows and exactly `cols` columns over
/// a `alphabet`-symbol cell alphabet.
pub fn random_table(rng: &mut StdRng, max_rows: usize, cols: usize, alphabet: u8) -> ResultTable {
    let rows = rng.random_range(0..=max_rows);
    let rows: Vec<Vec<ResultCell>> = (0..rows)
        .map(|_| (0..cols).map(|_| cell_from(rng.random_range(0..alphabet))).collect())
        .collect();
    ResultTable::table((0..cols).map(|i| format!("v{i}")).collect(), rows)
}

/// Bitwise-exact comparison of two outcomes.
pub fn outcomes_equal(a: &EvalOutcome, b: &EvalOutcome) -> bool {
    a.true_pos == b.true_pos
        && a.false_pos == b.false_pos
        && a.false_neg == b.false_neg
        && a.f1 == b.f1
        && a.em == b.em
}
