//! Confusion matrices, classification metrics and per-category corpus statistics.

mod confusion;
mod metrics;
mod stats;

use rayon::prelude::*;

pub use confusion::ConfusionMatrix;
pub use metrics::{class_metrics, metrics, ClassMetrics, Metrics};
pub use stats::{category_stats, CategoryRow, CategoryStats, UNCATEGORIZED};

use crate::embed::{EmbeddingTable, EncodedSentence};
use crate::error::Result;
use crate::models::Model;
use crate::nn::Real;

/// Records scored per parallel work item.
pub const EVAL_CHUNK: usize = 256;

/// Scores `records` with a frozen model, fanning chunks out across threads and
/// merging the per-chunk confusion matrices.
pub fn evaluate<F: Real>(
    model: &Model<F>,
    records: &[EncodedSentence],
    embeddings: &EmbeddingTable,
) -> Result<ConfusionMatrix> {
    let classes = model.spec().num_classes;
    let partials: Vec<ConfusionMatrix> = records
        .par_chunks(EVAL_CHUNK)
        .map(|chunk| {
            let preds = model.predict(chunk, embeddings)?;
            let truth: Vec<usize> = chunk.iter().map(|r| r.label).collect();
            let labels: Vec<usize> = preds.iter().map(|p| p.label).collect();
            ConfusionMatrix::from_pairs(classes, &truth, &labels)
        })
        .collect::<Result<_>>()?;
    let mut total = ConfusionMatrix::new(classes);
    for p in &partials {
        total.merge(p);
    }
    Ok(total)
}
