use serde::{Deserialize, Serialize};

use crate::aid::{predict, Classifier};
use crate::aid::train::label_indices;
use crate::corpus::Utterance;
use crate::curriculum::{bucket_of, validate_boundaries, WordRange};
use crate::error::{Error, Result};
use crate::numkit::{argmax, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketAccuracy {
    pub range: WordRange,
    pub label: String,
    pub n: usize,
    /// Percent correct; absent when no test utterance falls in the bucket.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<String>,
    pub n: usize,
    /// Percent correct over all test utterances.
    pub accuracy: f64,
    /// Row-normalised percentages, `[true][predicted]`; all-zero rows for
    /// classes with no test utterances.
    pub confusion: Vec<Vec<f64>>,
    /// Test utterances per true class.
    pub support: Vec<usize>,
    /// In ascending word-count order.
    pub buckets: Vec<BucketAccuracy>,
}

/// Accuracy, confusion matrix and per-length-bucket accuracy on `test`.
pub fn evaluate<T: Real, C: Classifier<T> + ?Sized>(
    model: &C,
    test: &[Utterance],
    boundaries: &[WordRange],
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty test set"));
    }
    validate_boundaries(boundaries)?;
    let classes = model.classes().to_vec();
    let truth = label_indices(test, &classes)?;
    let k = classes.len();
    let mut counts = vec![vec![0usize; k]; k];
    let mut bucket_n = vec![0usize; boundaries.len()];
    let mut bucket_ok = vec![0usize; boundaries.len()];
    let mut correct = 0usize;
    for (u, &y) in test.iter().zip(&truth) {
        let pred = argmax(&predict(model, u)?);
        counts[y][pred] += 1;
        let hit = pred == y;
        correct += hit as usize;
        let b = bucket_of(boundaries, u.n_words)
            .ok_or_else(|| Error::invalid(format!("{} has {} words, outside every bucket", u.utt_id, u.n_words)))?;
        bucket_n[b] += 1;
        bucket_ok[b] += hit as usize;
    }
    let support: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
    let confusion = counts
        .iter()
        .zip(&support)
        .map(|(row, &n)| {
            row.iter()
                .map(|&c| if n == 0 { 0.0 } else { 100.0 * c as f64 / n as f64 })
                .collect()
        })
        .collect();
    let buckets = boundaries
        .iter()
        .enumerate()
        .rev()
        .map(|(b, r)| BucketAccuracy {
            range: *r,
            label: r.label(),
            n: bucket_n[b],
            accuracy: (bucket_n[b] > 0).then(|| 100.0 * bucket_ok[b] as f64 / bucket_n[b] as f64),
        })
        .collect();
    Ok(EvalReport {
        classes,
        n: test.len(),
        accuracy: 100.0 * correct as f64 / test.len() as f64,
        confusion,
        support,
        buckets,
    })
}
