//! Length-based curriculum: utterances are bucketed by word count, longest
//! first, and epoch `i` trains on buckets `1..=i`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive word-count range; `max == None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(u32, Option<u32>)", into = "(u32, Option<u32>)")]
pub struct WordRange {
    pub min: u32,
    pub max: Option<u32>,
}

impl From<(u32, Option<u32>)> for WordRange {
    fn from((min, max): (u32, Option<u32>)) -> Self {
        Self { min, max }
    }
}

impl From<WordRange> for (u32, Option<u32>) {
    fn from(r: WordRange) -> Self {
        (r.min, r.max)
    }
}

impl WordRange {
    pub const fn new(min: u32, max: Option<u32>) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, n: u32) -> bool {
        n >= self.min && self.max.is_none_or(|m| n <= m)
    }

    pub fn label(&self) -> String {
        match self.max {
            Some(m) => format!("{}-{}", self.min, m),
            None => format!("{}+", self.min),
        }
    }
}

/// `[21+, 11-20, 3-10, 1-2]`.
pub fn default_boundaries() -> Vec<WordRange> {
    vec![
        WordRange::new(21, None),
        WordRange::new(11, Some(20)),
        WordRange::new(3, Some(10)),
        WordRange::new(1, Some(2)),
    ]
}

/// Checks that `ranges`, in descending order, partition `[1, ∞)`.
pub fn validate_boundaries(ranges: &[WordRange]) -> Result<()> {
    let first = ranges
        .first()
        .ok_or_else(|| Error::invalid("curriculum needs at least one word range"))?;
    if first.max.is_some() {
        return Err(Error::invalid(format!(
            "first word range {} must be unbounded",
            first.label()
        )));
    }
    for w in ranges.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        match lo.max {
            Some(m) if m >= lo.min && m + 1 == hi.min => {}
            _ => {
                return Err(Error::invalid(format!(
                    "word ranges {} and {} overlap or leave a gap",
                    hi.label(),
                    lo.label()
                )))
            }
        }
    }
    let last = ranges[ranges.len() - 1];
    if last.min != 1 {
        return Err(Error::invalid(format!(
            "last word range {} must start at 1",
            last.label()
        )));
    }
    Ok(())
}

/// Subset index (0-based) holding utterances of `n_words`.
pub fn bucket_of(ranges: &[WordRange], n_words: u32) -> Option<usize> {
    ranges.iter().position(|r| r.contains(n_words))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurriculumPlan {
    boundaries: Vec<WordRange>,
    /// 0-based subset index per utterance, in input order.
    assignment: Vec<usize>,
}

/// Assigns every utterance (given by word count) to its subset.
pub fn assign_buckets(
    word_counts: impl IntoIterator<Item = u32>,
    boundaries: &[WordRange],
) -> Result<CurriculumPlan> {
    validate_boundaries(boundaries)?;
    let assignment = word_counts
        .into_iter()
        .map(|n| {
            bucket_of(boundaries, n)
                .ok_or_else(|| Error::invalid(format!("n_words {n} outside every range")))
        })
        .collect::<Result<_>>()?;
    Ok(CurriculumPlan {
        boundaries: boundaries.to_vec(),
        assignment,
    })
}

impl CurriculumPlan {
    /// A single-subset plan, i.e. ordinary epoch training.
    pub fn flat(n_items: usize) -> Self {
        Self {
            boundaries: vec![WordRange::new(1, None)],
            assignment: vec![0; n_items],
        }
    }

    pub fn n_subsets(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self) -> &[WordRange] {
        &self.boundaries
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// 1-based subset number of item `i`.
    pub fn subset_of(&self, i: usize) -> usize {
        self.assignment[i] + 1
    }

    /// Indices trained in `epoch` (1-based): subsets `1..=min(epoch, N)`,
    /// shuffled with `seed ^ epoch`. Epoch 0 is treated as epoch 1.
    pub fn epoch_subset(&self, epoch: usize, seed: u64) -> Vec<usize> {
        let epoch = epoch.max(1);
        let limit = epoch.min(self.n_subsets());
        let mut idx: Vec<usize> = (0..self.assignment.len())
            .filter(|&i| self.assignment[i] < limit)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ epoch as u64);
        idx.shuffle(&mut rng);
        idx
    }
}
