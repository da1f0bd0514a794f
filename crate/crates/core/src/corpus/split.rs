use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Utterance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Split {
    pub train: Vec<Utterance>,
    pub dev: Vec<Utterance>,
    pub test: Vec<Utterance>,
}

/// Largest-remainder apportionment of `n` items over `ratios`.
fn apportion(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, q) in counts.iter_mut().zip(&quotas) {
        *c = q.floor() as usize;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if ratios[k] > 0.0 {
            counts[k] += 1;
            left -= 1;
        }
    }
    counts
}

/// Speaker-disjoint train/dev/test split, stratified by accent. Speakers of
/// each accent are sorted by id, shuffled with `seed`, then apportioned.
pub fn split_dataset(utts: &[Utterance], ratios: [f64; 3], seed: u64) -> Result<Split> {
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::invalid(format!("split ratios must be non-negative, got {ratios:?}")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("split ratios sum to {total}, expected 1")));
    }

    let mut by_accent: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for u in utts {
        let spk = by_accent.entry(u.accent.as_str()).or_default();
        if !spk.contains(&u.speaker_id.as_str()) {
            spk.push(&u.speaker_id);
        }
    }
    let n_speakers: usize = by_accent.values().map(Vec::len).sum();
    let n_splits = ratios.iter().filter(|&&r| r > 0.0).count();
    if n_speakers < n_splits {
        return Err(Error::invalid(format!(
            "{n_speakers} speakers cannot fill {n_splits} non-empty splits"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment: BTreeMap<&str, usize> = BTreeMap::new();
    for speakers in by_accent.values_mut() {
        speakers.sort_unstable();
        speakers.shuffle(&mut rng);
        let counts = apportion(speakers.len(), &ratios);
        let mut it = speakers.iter();
        for (k, &c) in counts.iter().enumerate() {
            for s in it.by_ref().take(c) {
                assignment.insert(s, k);
            }
        }
    }

    let mut split = Split::default();
    for u in utts {
        let bucket = match assignment[u.speaker_id.as_str()] {
            0 => &mut split.train,
            1 => &mut split.dev,
            _ => &mut split.test,
        };
        bucket.push(u.clone());
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EmbeddingSet;
    use std::collections::BTreeSet;

    fn corpus(n_spk: usize, per: usize) -> Vec<Utterance> {
        let mut v = Vec::new();
        for s in 0..n_spk {
            for u in 0..per {
                v.push(Utterance {
                    utt_id: format!("s{s}-u{u}"),
                    speaker_id: format!("s{s}"),
                    accent: if s % 2 == 0 { "en-US" } else { "en-IN" }.into(),
                    n_words: 3,
                    transcript: None,
                    features: None,
                    embeddings: EmbeddingSet {
                        lid: Some(vec![0.0]),
                        ..Default::default()
                    },
                    human_score: None,
                    severity: None,
                });
            }
        }
        v
    }

    fn speakers(v: &[Utterance]) -> BTreeSet<String> {
        v.iter().map(|u| u.speaker_id.clone()).collect()
    }

    #[test]
    fn all_train() {
        let c = corpus(6, 3);
        let s = split_dataset(&c, [1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(s.train, c);
        assert!(s.dev.is_empty() && s.test.is_empty());
    }

    #[test]
    fn deterministic_and_speaker_partitioned() {
        let c = corpus(20, 4);
        let a = split_dataset(&c, [0.6, 0.2, 0.2], 9).unwrap();
        assert_eq!(a, split_dataset(&c, [0.6, 0.2, 0.2], 9).unwrap());
        let (tr, dv, te) = (speakers(&a.train), speakers(&a.dev), speakers(&a.test));
        assert!(tr.is_disjoint(&dv) && tr.is_disjoint(&te) && dv.is_disjoint(&te));
        assert_eq!(a.train.len() + a.dev.len() + a.test.len(), c.len());
        assert_eq!(tr.len(), 12);
        assert_ne!(a, split_dataset(&c, [0.6, 0.2, 0.2], 10).unwrap());
    }

    #[test]
    fn rejects_bad_ratios_and_too_few_speakers() {
        let c = corpus(2, 2);
        assert!(split_dataset(&c, [0.5, 0.25, 0.25], 0).is_err());
        assert!(split_dataset(&c, [0.5, 0.6, 0.0], 0).is_err());
        assert!(split_dataset(&c, [0.5, 0.5, 0.0], 0).is_ok());
    }
}
