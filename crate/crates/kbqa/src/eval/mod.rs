//! Answer-table evaluation: normalization, set-based EM/F1, and the
//! row-major generalization over result matrices.

pub mod assignment;
mod cell;
mod normalize;
mod score;

pub use cell::{canonical_text, CanonicalNumber, DateValue, ResultCell};
pub use normalize::{normalize_results, LabelLookup, NoLabels, NormalizeError, ScoringMode};
pub use score::{best_assignment, row_major_scores, row_recall, scalar_f1, EvalOutcome, ResultTable};
