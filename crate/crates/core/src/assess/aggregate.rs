use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::assess::{pearson, pearson_pvalue, ScoreKind, ScoreRow};
use crate::error::{Error, Result};

/// Box-plot summary of one speaker's utterance scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerSummary {
    pub speaker_id: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Lowest score within 1.5 IQR of the box, never above `q1`.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
    /// 10th, 20th, ..., 90th percentiles.
    pub deciles: Vec<f64>,
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(speaker_id: &str, values: &[f64]) -> Result<SpeakerSummary> {
    if values.is_empty() {
        return Err(Error::invalid(format!("speaker {speaker_id} has no scores")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    let q1 = quantile(&v, 0.25);
    let q3 = quantile(&v, 0.75);
    let fence = 1.5 * (q3 - q1);
    let (lo_fence, hi_fence) = (q1 - fence, q3 + fence);
    let inside: Vec<f64> = v.iter().copied().filter(|x| (lo_fence..=hi_fence).contains(x)).collect();
    Ok(SpeakerSummary {
        speaker_id: speaker_id.to_string(),
        n,
        mean: v.iter().sum::<f64>() / n as f64,
        median,
        q1,
        q3,
        whisker_low: inside.first().map_or(q1, |&x| x.min(q1)),
        whisker_high: inside.last().map_or(q3, |&x| x.max(q3)),
        outliers: v.iter().copied().filter(|x| !(lo_fence..=hi_fence).contains(x)).collect(),
        deciles: (1..10).map(|k| quantile(&v, k as f64 / 10.0)).collect(),
    })
}

fn group(rows: &[ScoreRow], kind: ScoreKind) -> BTreeMap<&str, Vec<f64>> {
    let mut by: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind == kind) {
        by.entry(&r.speaker_id).or_default().push(r.value);
    }
    by
}

/// One summary per speaker with rows of `kind`, sorted by speaker id.
pub fn speaker_aggregate(rows: &[ScoreRow], kind: ScoreKind) -> Vec<SpeakerSummary> {
    group(rows, kind)
        .into_iter()
        .map(|(s, v)| summarize(s, &v).expect("groups are non-empty"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSpeaker {
    /// 1 is the least accented speaker.
    pub rank: usize,
    pub speaker_id: String,
    pub median: f64,
}

/// Orders speakers from least to most accented by median score; ties go to
/// the lexicographically smaller speaker id.
pub fn rank_speakers(summaries: &[SpeakerSummary], kind: ScoreKind) -> Vec<RankedSpeaker> {
    let mut s: Vec<&SpeakerSummary> = summaries.iter().collect();
    s.sort_by(|a, b| {
        let by_median = if kind.higher_is_better() {
            b.median.total_cmp(&a.median)
        } else {
            a.median.total_cmp(&b.median)
        };
        by_median.then_with(|| a.speaker_id.cmp(&b.speaker_id))
    });
    s.into_iter()
        .enumerate()
        .map(|(i, x)| RankedSpeaker {
            rank: i + 1,
            speaker_id: x.speaker_id.clone(),
            median: x.median,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    #[default]
    Median,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrelationFilter {
    pub statistic: Statistic,
    /// Only utterances with at least this many words contribute.
    pub min_words: Option<u32>,
    /// Utterance scores that survived the filter, both tables together.
    pub utterances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p: f64,
    pub n: usize,
    pub filter: CorrelationFilter,
}

/// Per-speaker statistic of `kind` scores, optionally dropping utterances
/// below `min_words` (looked up in `word_counts`). Returns the values and the
/// number of contributing utterances.
pub fn speaker_statistic(
    rows: &[ScoreRow],
    kind: ScoreKind,
    statistic: Statistic,
    min_words: Option<(u32, &BTreeMap<String, u32>)>,
) -> Result<(BTreeMap<String, f64>, usize)> {
    let mut kept = Vec::with_capacity(rows.len());
    for r in rows.iter().filter(|r| r.kind == kind) {
        if let Some((min, counts)) = min_words {
            let n = counts
                .get(&r.utt_id)
                .ok_or_else(|| Error::invalid(format!("no word count for utterance {}", r.utt_id)))?;
            if *n < min {
                continue;
            }
        }
        kept.push(r.clone());
    }
    let out = speaker_aggregate(&kept, kind)
        .into_iter()
        .map(|s| {
            let v = match statistic {
                Statistic::Median => s.median,
                Statistic::Mean => s.mean,
            };
            (s.speaker_id, v)
        })
        .collect();
    Ok((out, kept.len()))
}

/// Pearson correlation over speakers present in both maps.
pub fn correlate_speakers(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Result<(f64, f64, usize)> {
    let shared: BTreeSet<&String> = a.keys().filter(|k| b.contains_key(*k)).collect();
    if shared.len() < 3 {
        return Err(Error::invalid(format!(
            "correlation needs at least 3 shared speakers, found {}",
            shared.len()
        )));
    }
    let x: Vec<f64> = shared.iter().map(|k| a[*k]).collect();
    let y: Vec<f64> = shared.iter().map(|k| b[*k]).collect();
    let r = pearson(&x, &y)?;
    Ok((r, pearson_pvalue(r, x.len())?, x.len()))
}

/// Joins two score tables on speaker and correlates their per-speaker
/// statistics. Each table contributes rows of its own single kind.
pub fn correlate_scores(
    a: &[ScoreRow],
    b: &[ScoreRow],
    statistic: Statistic,
    min_words: Option<(u32, &BTreeMap<String, u32>)>,
) -> Result<CorrelationResult> {
    let kind_of = |rows: &[ScoreRow]| -> Result<ScoreKind> {
        let kinds: BTreeSet<ScoreKind> = rows.iter().map(|r| r.kind).collect();
        match kinds.len() {
            1 => Ok(*kinds.first().expect("one kind")),
            0 => Err(Error::invalid("score table is empty")),
            _ => Err(Error::invalid("score table mixes score kinds")),
        }
    };
    let (sa, na) = speaker_statistic(a, kind_of(a)?, statistic, min_words)?;
    let (sb, nb) = speaker_statistic(b, kind_of(b)?, statistic, min_words)?;
    let (r, p, n) = correlate_speakers(&sa, &sb)?;
    Ok(CorrelationResult {
        r,
        p,
        n,
        filter: CorrelationFilter {
            statistic,
            min_words: min_words.map(|(m, _)| m),
            utterances: na + nb,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(utt: &str, spk: &str, kind: ScoreKind, value: f64) -> ScoreRow {
        ScoreRow {
            utt_id: utt.into(),
            speaker_id: spk.into(),
            kind,
            value,
        }
    }

    #[test]
    fn medians_and_box() {
        assert_eq!(summarize("a", &[3.0, 1.0, 2.0]).unwrap().median, 2.0);
        assert_eq!(summarize("a", &[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
        let s = summarize("a", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 100.0]).unwrap();
        assert_eq!((s.q1, s.q3), (3.0, 7.0));
        assert_eq!((s.whisker_low, s.whisker_high), (1.0, 8.0));
        assert_eq!(s.outliers, vec![100.0]);
        assert_eq!(s.deciles.len(), 9);
        let one = summarize("b", &[0.5]).unwrap();
        assert_eq!((one.q1, one.median, one.q3, one.whisker_low), (0.5, 0.5, 0.5, 0.5));
        assert!(summarize("c", &[]).is_err());
    }

    #[test]
    fn ranking_rules() {
        let aid = vec![summarize("A", &[-0.1]).unwrap(), summarize("B", &[-0.9]).unwrap()];
        let r = rank_speakers(&aid, ScoreKind::AidLogSoftmax);
        assert_eq!((r[0].speaker_id.as_str(), r[0].rank), ("A", 1));
        let cer = vec![summarize("B", &[0.3]).unwrap(), summarize("A", &[0.1]).unwrap()];
        assert_eq!(rank_speakers(&cer, ScoreKind::Cer)[0].speaker_id, "A");
        let tie = vec![summarize("z", &[0.2]).unwrap(), summarize("m", &[0.2]).unwrap()];
        let r = rank_speakers(&tie, ScoreKind::Cer);
        assert_eq!(r[0].speaker_id, "m");
        assert_eq!(rank_speakers(&tie, ScoreKind::AidLogSoftmax)[0].speaker_id, "m");
    }

    #[test]
    fn identical_tables_correlate_perfectly() {
        let rows: Vec<ScoreRow> = (0..12)
            .map(|i| row(&format!("u{i}"), &format!("s{}", i % 4), ScoreKind::Cer, (i * i % 7) as f64 / 10.0))
            .collect();
        let c = correlate_scores(&rows, &rows, Statistic::Median, None).unwrap();
        assert!((c.r - 1.0).abs() < 1e-12);
        assert_eq!(c.n, 4);
        assert_eq!(c.p, 0.0);
        let few: Vec<ScoreRow> = rows.iter().filter(|r| r.speaker_id < "s2".to_string()).cloned().collect();
        assert!(correlate_scores(&few, &few, Statistic::Median, None).is_err());
    }

    #[test]
    fn word_filter_changes_contributing_count() {
        let mut counts = BTreeMap::new();
        let rows: Vec<ScoreRow> = (0..16)
            .map(|i| {
                counts.insert(format!("u{i}"), if i % 3 == 0 { 5 } else { 30 });
                row(&format!("u{i}"), &format!("s{}", i % 4), ScoreKind::Cer, i as f64 / 20.0)
            })
            .collect();
        let all = correlate_scores(&rows, &rows, Statistic::Median, None).unwrap();
        let long = correlate_scores(&rows, &rows, Statistic::Median, Some((21, &counts))).unwrap();
        assert_eq!(all.filter.utterances, 32);
        assert_eq!(long.filter.utterances, 20);
        assert_eq!(long.filter.min_words, Some(21));
        let json = serde_json::to_value(&long).unwrap();
        for k in ["r", "p", "n", "filter"] {
            assert!(json.get(k).is_some());
        }
    }

    proptest! {
        #[test]
        fn aggregation_is_order_invariant(
            values in proptest::collection::vec((0usize..5, 0.0f64..2.0), 1..40),
            seed in 0u64..1000,
        ) {
            let rows: Vec<ScoreRow> = values
                .iter()
                .enumerate()
                .map(|(i, (s, v))| row(&format!("u{i}"), &format!("spk{s}"), ScoreKind::Cer, *v))
                .collect();
            let mut shuffled = rows.clone();
            let k = seed as usize % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let a = speaker_aggregate(&rows, ScoreKind::Cer);
            let b = speaker_aggregate(&shuffled, ScoreKind::Cer);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(rank_speakers(&a, ScoreKind::Cer), rank_speakers(&b, ScoreKind::Cer));
            for s in &a {
                prop_assert!(s.whisker_low <= s.q1 + 1e-12 && s.q3 <= s.whisker_high + 1e-12);
            }
        }
    }
}
