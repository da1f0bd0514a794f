//! Data model, manifest and matrix file I/O, feature normalisation, speaker
//! splits and the synthetic corpus generator.

mod manifest;
mod matrix_io;
mod normalize;
mod split;
mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Matrix;

pub use manifest::{
    load_manifest, write_manifest, Dataset, Manifest, ManifestEntry, ManifestHeader,
};
pub use matrix_io::{
    decode_matrix, encode_matrix, quantize_f32, read_embedding_matrix, read_matrix_shape,
    write_embedding_matrix, MAGIC,
};
pub use normalize::mean_normalize;
pub use split::{split_dataset, Split};
pub use synth::{generate_synthetic_corpus, synthesize, AccentProfile, StreamSeparation, SynthConfig, SynthCorpus};

/// Pre-trained embedding streams fused by the multi-embedding classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    Lid,
    Sid,
    Aid,
}

impl Stream {
    /// Canonical concatenation order.
    pub const ALL: [Stream; 3] = [Stream::Lid, Stream::Sid, Stream::Aid];

    pub fn name(self) -> &'static str {
        match self {
            Stream::Lid => "lid",
            Stream::Sid => "sid",
            Stream::Aid => "aid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lid" => Ok(Stream::Lid),
            "sid" => Ok(Stream::Sid),
            "aid" => Ok(Stream::Aid),
            other => Err(Error::invalid(format!("unknown stream {other:?}"))),
        }
    }
}

/// Per-utterance embedding vectors; any stream may be absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingSet {
    pub lid: Option<Vec<f64>>,
    pub sid: Option<Vec<f64>>,
    pub aid: Option<Vec<f64>>,
}

impl EmbeddingSet {
    pub fn get(&self, stream: Stream) -> Option<&[f64]> {
        match stream {
            Stream::Lid => self.lid.as_deref(),
            Stream::Sid => self.sid.as_deref(),
            Stream::Aid => self.aid.as_deref(),
        }
    }

    pub fn set(&mut self, stream: Stream, v: Vec<f64>) {
        match stream {
            Stream::Lid => self.lid = Some(v),
            Stream::Sid => self.sid = Some(v),
            Stream::Aid => self.aid = Some(v),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lid.is_none() && self.sid.is_none() && self.aid.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub utt_id: String,
    pub speaker_id: String,
    pub accent: String,
    pub n_words: u32,
    pub transcript: Option<String>,
    /// `frames × feat_dim`.
    pub features: Option<Matrix<f64>>,
    pub embeddings: EmbeddingSet,
    /// Listener score on the 1-9 scale, repeated on each of the speaker's lines.
    pub human_score: Option<f64>,
    /// Generator ground truth, synthetic corpora only.
    pub severity: Option<f64>,
}

impl Utterance {
    pub fn features(&self) -> Result<&Matrix<f64>> {
        self.features
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("utterance {} has no features", self.utt_id)))
    }

    pub fn embedding(&self, stream: Stream) -> Result<&[f64]> {
        self.embeddings.get(stream).ok_or_else(|| {
            Error::invalid(format!(
                "utterance {} is missing the {} embedding",
                self.utt_id,
                stream.name()
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerRecord {
    pub speaker_id: String,
    pub accent: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub severity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub human_score: Option<f64>,
}

/// One record per speaker, in first-appearance order.
pub fn speakers_of(utts: &[Utterance]) -> Vec<SpeakerRecord> {
    let mut seen = std::collections::BTreeSet::new();
    utts.iter()
        .filter(|u| seen.insert(u.speaker_id.clone()))
        .map(|u| SpeakerRecord {
            speaker_id: u.speaker_id.clone(),
            accent: u.accent.clone(),
            severity: u.severity,
            human_score: u.human_score,
        })
        .collect()
}
