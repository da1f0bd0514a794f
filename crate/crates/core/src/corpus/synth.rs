//! Deterministic synthetic corpus.
//!
//! Two random structures are involved. The *world* (character templates,
//! per-accent class directions and frame shifts) is drawn from
//! `template_seed`; the *sample* (speakers, utterances, noise) from the
//! generation seed. Corpora generated with different seeds therefore share
//! a world, so a model trained on one transfers to another.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{speakers_of, write_manifest, EmbeddingSet, ManifestHeader, SpeakerRecord, Stream, Utterance};
use crate::ctc::{SymbolTable, DEFAULT_ALPHABET};
use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// How strongly each embedding stream displaces an accent's class mean away
/// from the reference accent (which sits at the origin).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccentProfile {
    pub label: String,
    /// Reference (native) accent: severity 0, class mean at the origin.
    #[serde(default)]
    pub reference: bool,
    #[serde(default)]
    pub lid: f64,
    #[serde(default)]
    pub sid: f64,
    #[serde(default)]
    pub aid: f64,
}

impl AccentProfile {
    fn weight(&self, s: Stream) -> f64 {
        match s {
            Stream::Lid => self.lid,
            Stream::Sid => self.sid,
            Stream::Aid => self.aid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSeparation {
    pub lid: f64,
    pub sid: f64,
    pub aid: f64,
}

impl StreamSeparation {
    fn get(&self, s: Stream) -> f64 {
        match s {
            Stream::Lid => self.lid,
            Stream::Sid => self.sid,
            Stream::Aid => self.aid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub accents: Vec<AccentProfile>,
    pub speakers_per_accent: usize,
    pub utterances_per_speaker: usize,
    /// Inclusive word-count ranges; a range is picked uniformly, then a count
    /// uniformly inside it.
    pub word_buckets: Vec<(u32, u32)>,
    pub d_lid: usize,
    pub d_sid: usize,
    pub d_aid: usize,
    pub feat_dim: usize,
    /// Distance of a full-severity class mean from the origin, per stream.
    pub separation: StreamSeparation,
    /// Severity of non-reference speakers is uniform on this range.
    pub severity_range: (f64, f64),
    /// Embedding noise std is `noise_scale * n_words^(-length_noise_exponent)`.
    pub noise_scale: f64,
    pub length_noise_exponent: f64,
    pub frame_noise: f64,
    /// Scale of the per-accent, per-character frame displacement.
    pub accent_shift: f64,
    pub frames_per_char: usize,
    /// Half-width of the uniform noise on the pseudo-human score.
    pub human_noise: f64,
    pub template_seed: u64,
    pub with_embeddings: bool,
    pub with_features: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            accents: vec![
                AccentProfile {
                    label: "en-US".into(),
                    reference: true,
                    lid: 0.0,
                    sid: 0.0,
                    aid: 0.0,
                },
                AccentProfile {
                    label: "en-AU".into(),
                    reference: false,
                    lid: 0.25,
                    sid: 1.0,
                    aid: 0.6,
                },
                AccentProfile {
                    label: "en-IN".into(),
                    reference: false,
                    lid: 1.0,
                    sid: 0.25,
                    aid: 0.6,
                },
            ],
            speakers_per_accent: 30,
            utterances_per_speaker: 40,
            word_buckets: vec![(1, 2), (3, 10), (11, 20), (21, 40)],
            d_lid: 192,
            d_sid: 192,
            d_aid: 192,
            feat_dim: 80,
            separation: StreamSeparation {
                lid: 3.0,
                sid: 3.0,
                aid: 3.0,
            },
            severity_range: (0.5, 1.0),
            noise_scale: 1.0,
            length_noise_exponent: 0.5,
            frame_noise: 0.3,
            accent_shift: 1.0,
            frames_per_char: 2,
            human_noise: 0.5,
            template_seed: 7,
            with_embeddings: true,
            with_features: true,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.accents.is_empty() {
            return bad("synthetic corpus needs at least one accent".into());
        }
        let scales = [
            ("noise_scale", self.noise_scale),
            ("length_noise_exponent", self.length_noise_exponent),
            ("frame_noise", self.frame_noise),
            ("accent_shift", self.accent_shift),
            ("human_noise", self.human_noise),
            ("separation.lid", self.separation.lid),
            ("separation.sid", self.separation.sid),
            ("separation.aid", self.separation.aid),
        ];
        for (name, v) in scales {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        for a in &self.accents {
            if [a.lid, a.sid, a.aid].iter().any(|w| !w.is_finite()) {
                return bad(format!("accent {} has non-finite stream weights", a.label));
            }
        }
        let (lo, hi) = self.severity_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return bad(format!("severity_range must satisfy 0 <= lo <= hi <= 1, got {lo}..{hi}"));
        }
        if self.word_buckets.is_empty() || self.word_buckets.iter().any(|&(a, b)| a == 0 || a > b) {
            return bad(format!("invalid word_buckets {:?}", self.word_buckets));
        }
        if self.frames_per_char == 0 || self.feat_dim == 0 {
            return bad("frames_per_char and feat_dim must be >= 1".into());
        }
        if self.d_lid == 0 || self.d_sid == 0 || self.d_aid == 0 {
            return bad("embedding dims must be >= 1".into());
        }
        Ok(())
    }

    pub fn header(&self) -> ManifestHeader {
        ManifestHeader {
            d_lid: self.d_lid,
            d_sid: self.d_sid,
            d_aid: self.d_aid,
            feat_dim: self.feat_dim,
            ..ManifestHeader::default()
        }
    }

    fn dim(&self, s: Stream) -> usize {
        match s {
            Stream::Lid => self.d_lid,
            Stream::Sid => self.d_sid,
            Stream::Aid => self.d_aid,
        }
    }

    /// Embedding noise standard deviation for an utterance of `n_words`.
    pub fn embedding_noise(&self, n_words: u32) -> f64 {
        self.noise_scale * (n_words.max(1) as f64).powf(-self.length_noise_exponent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub header: ManifestHeader,
    pub utterances: Vec<Utterance>,
    pub speakers: Vec<SpeakerRecord>,
}

/// Fixed random structure shared by all corpora with the same template seed.
struct World {
    /// `|S| × feat_dim`, row 0 (blank) unused.
    templates: Matrix<f64>,
    /// `directions[accent][stream]`, unit vectors.
    directions: Vec<[Vec<f64>; 3]>,
    /// `shifts[accent]` is `|S| × feat_dim`.
    shifts: Vec<Matrix<f64>>,
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, n);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

impl World {
    fn new(cfg: &SynthConfig, n_symbols: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.template_seed);
        let templates =
            Matrix::from_vec(n_symbols, cfg.feat_dim, gaussian_vec(&mut rng, n_symbols * cfg.feat_dim))
                .expect("shape");
        let directions = cfg
            .accents
            .iter()
            .map(|_| Stream::ALL.map(|s| unit_vec(&mut rng, cfg.dim(s))))
            .collect();
        let shifts = cfg
            .accents
            .iter()
            .map(|_| {
                // each accent emphasises its own subset of feature dimensions
                let mask: Vec<f64> = (0..cfg.feat_dim)
                    .map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.2 })
                    .collect();
                let data = (0..n_symbols * cfg.feat_dim)
                    .map(|i| cfg.accent_shift * mask[i % cfg.feat_dim] * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                Matrix::from_vec(n_symbols, cfg.feat_dim, data).expect("shape")
            })
            .collect();
        Self {
            templates,
            directions,
            shifts,
        }
    }
}

fn random_transcript(rng: &mut ChaCha8Rng, n_words: u32) -> String {
    let mut out = String::new();
    for w in 0..n_words {
        if w > 0 {
            out.push(' ');
        }
        let len = rng.random_range(2..=6);
        let mut prev = None;
        for _ in 0..len {
            // no doubled letters, so every character is separable without a blank
            let c = loop {
                let c = (b'a' + rng.random_range(0..26u8)) as char;
                if Some(c) != prev {
                    break c;
                }
            };
            out.push(c);
            prev = Some(c);
        }
    }
    out
}

/// Generates the corpus in memory. Matrix values are rounded to `f32` so
/// that writing and re-reading the corpus is lossless.
pub fn synthesize(cfg: &SynthConfig, seed: u64) -> Result<SynthCorpus> {
    cfg.validate()?;
    let symbols = SymbolTable::from_alphabet(DEFAULT_ALPHABET)?;
    let world = World::new(cfg, symbols.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = |x: f64| x as f32 as f64;

    let mut utterances = Vec::with_capacity(
        cfg.accents.len() * cfg.speakers_per_accent * cfg.utterances_per_speaker,
    );
    for (ai, accent) in cfg.accents.iter().enumerate() {
        for s in 0..cfg.speakers_per_accent {
            let speaker_id = format!("{}-s{s:03}", accent.label);
            let severity = if accent.reference {
                0.0
            } else {
                let (lo, hi) = cfg.severity_range;
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..=hi)
                }
            };
            let jitter = if cfg.human_noise > 0.0 {
                rng.random_range(-cfg.human_noise..=cfg.human_noise)
            } else {
                0.0
            };
            let human = (9.0 - 8.0 * severity + jitter).clamp(1.0, 9.0);

            for u in 0..cfg.utterances_per_speaker {
                let (lo, hi) = cfg.word_buckets[rng.random_range(0..cfg.word_buckets.len())];
                let n_words = rng.random_range(lo..=hi);
                let transcript = random_transcript(&mut rng, n_words);

                let mut embeddings = EmbeddingSet::default();
                if cfg.with_embeddings {
                    let sigma = cfg.embedding_noise(n_words);
                    for (k, stream) in Stream::ALL.into_iter().enumerate() {
                        let scale = severity * cfg.separation.get(stream) * accent.weight(stream);
                        let v = world.directions[ai][k]
                            .iter()
                            .map(|&d| q(scale * d + sigma * rng.sample::<f64, _>(StandardNormal)))
                            .collect();
                        embeddings.set(stream, v);
                    }
                }

                let features = if cfg.with_features {
                    let idx = symbols.encode(&transcript)?;
                    let rows = idx.len() * cfg.frames_per_char;
                    let mut m = Matrix::zeros(rows, cfg.feat_dim);
                    let mut r = 0;
                    for &c in &idx {
                        for _ in 0..cfg.frames_per_char {
                            let tpl = world.templates.row(c);
                            let shift = world.shifts[ai].row(c);
                            for (d, v) in m.row_mut(r).iter_mut().enumerate() {
                                let noise = cfg.frame_noise * rng.sample::<f64, _>(StandardNormal);
                                *v = q(tpl[d] + severity * shift[d] + noise);
                            }
                            r += 1;
                        }
                    }
                    Some(m)
                } else {
                    None
                };

                utterances.push(Utterance {
                    utt_id: format!("{speaker_id}-u{u:03}"),
                    speaker_id: speaker_id.clone(),
                    accent: accent.label.clone(),
                    n_words,
                    transcript: Some(transcript),
                    features,
                    embeddings,
                    human_score: Some(human),
                    severity: Some(severity),
                });
            }
        }
    }
    if !cfg.with_embeddings && !cfg.with_features {
        return Err(Error::invalid("synthetic corpus needs embeddings or features"));
    }
    let speakers = speakers_of(&utterances);
    Ok(SynthCorpus {
        header: cfg.header(),
        utterances,
        speakers,
    })
}

/// Generates the corpus and writes `manifest.jsonl` plus matrix files under `out`.
pub fn generate_synthetic_corpus(cfg: &SynthConfig, seed: u64, out: &Path) -> Result<(SynthCorpus, PathBuf)> {
    let corpus = synthesize(cfg, seed)?;
    let path = write_manifest(out, &corpus.header, &corpus.utterances)?;
    Ok((corpus, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_manifest;

    fn small() -> SynthConfig {
        SynthConfig {
            speakers_per_accent: 3,
            utterances_per_speaker: 4,
            d_lid: 8,
            d_sid: 8,
            d_aid: 8,
            feat_dim: 6,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_manifest_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (_, pa) = generate_synthetic_corpus(&small(), 5, a.path()).unwrap();
        let (_, pb) = generate_synthetic_corpus(&small(), 5, b.path()).unwrap();
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
        let f = "data/en-IN-s001-u002.feat.emb";
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }

    #[test]
    fn written_corpus_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus, p) = generate_synthetic_corpus(&small(), 3, dir.path()).unwrap();
        let ds = load_manifest(&p).unwrap().load_dataset().unwrap();
        assert_eq!(ds.utterances, corpus.utterances);
        assert_eq!(ds.speakers, corpus.speakers);
        assert_eq!(ds.header, corpus.header);
    }

    #[test]
    fn severity_zero_frames_are_templates_plus_noise() {
        let cfg = SynthConfig {
            frame_noise: 0.0,
            ..small()
        };
        let c = synthesize(&cfg, 1).unwrap();
        let world = World::new(&cfg, 33);
        let table = SymbolTable::default();
        for u in c.utterances.iter().filter(|u| u.accent == "en-US") {
            assert_eq!(u.severity, Some(0.0));
            let idx = table.encode(u.transcript.as_deref().unwrap()).unwrap();
            let f = u.features.as_ref().unwrap();
            for (r, row) in f.row_iter().enumerate() {
                let tpl = world.templates.row(idx[r / cfg.frames_per_char]);
                for (a, b) in row.iter().zip(tpl) {
                    assert_eq!(*a, *b as f32 as f64);
                }
            }
        }
    }

    #[test]
    fn human_scores_in_range_and_tied_to_severity() {
        let c = synthesize(&small(), 2).unwrap();
        for s in &c.speakers {
            let h = s.human_score.unwrap();
            let sev = s.severity.unwrap();
            assert!((1.0..=9.0).contains(&h));
            assert!((h - (9.0 - 8.0 * sev)).abs() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn embedding_noise_non_increasing_in_length() {
        let cfg = SynthConfig::default();
        let mut prev = f64::INFINITY;
        for n in 1..300 {
            let s = cfg.embedding_noise(n);
            assert!(s <= prev);
            prev = s;
        }
    }

    #[test]
    fn transcripts_have_requested_word_counts() {
        let c = synthesize(&small(), 4).unwrap();
        for u in &c.utterances {
            let t = u.transcript.as_deref().unwrap();
            assert_eq!(t.split(' ').count() as u32, u.n_words);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = small();
        cfg.noise_scale = -1.0;
        assert!(synthesize(&cfg, 0).is_err());
        let mut cfg = small();
        cfg.severity_range = (0.8, 0.2);
        assert!(synthesize(&cfg, 0).is_err());
    }

    /// Nearest-class-mean classifier on one stream, the oracle for the
    /// separation construction.
    #[test]
    fn separated_streams_are_nearly_perfectly_classifiable() {
        let mut cfg = SynthConfig {
            speakers_per_accent: 20,
            utterances_per_speaker: 25,
            word_buckets: vec![(20, 40)],
            d_lid: 16,
            d_sid: 16,
            d_aid: 16,
            with_features: false,
            severity_range: (1.0, 1.0),
            separation: StreamSeparation {
                lid: 4.0,
                sid: 4.0,
                aid: 4.0,
            },
            ..SynthConfig::default()
        };
        for a in &mut cfg.accents {
            if !a.reference {
                a.lid = 1.0;
                a.sid = 1.0;
                a.aid = 1.0;
            }
        }
        let c = synthesize(&cfg, 8).unwrap();
        assert!(c.utterances.len() >= 1000);
        let labels: Vec<&str> = cfg.accents.iter().map(|a| a.label.as_str()).collect();
        for stream in Stream::ALL {
            let mut means = vec![vec![0.0; 16]; labels.len()];
            let mut counts = vec![0.0; labels.len()];
            for u in &c.utterances {
                let k = labels.iter().position(|l| *l == u.accent).unwrap();
                for (m, v) in means[k].iter_mut().zip(u.embeddings.get(stream).unwrap()) {
                    *m += v;
                }
                counts[k] += 1.0;
            }
            for (m, n) in means.iter_mut().zip(&counts) {
                m.iter_mut().for_each(|v| *v /= n);
            }
            let correct = c
                .utterances
                .iter()
                .filter(|u| {
                    let e = u.embeddings.get(stream).unwrap();
                    let best = (0..labels.len())
                        .min_by(|&a, &b| {
                            let da: f64 = e.iter().zip(&means[a]).map(|(x, y)| (x - y).powi(2)).sum();
                            let db: f64 = e.iter().zip(&means[b]).map(|(x, y)| (x - y).powi(2)).sum();
                            da.total_cmp(&db)
                        })
                        .unwrap();
                    labels[best] == u.accent
                })
                .count();
            let acc = correct as f64 / c.utterances.len() as f64;
            assert!(acc >= 0.99, "{stream:?} accuracy {acc}");
        }
    }
}
