//! Accent identification: the frame encoder, the multi-embedding fusion
//! classifier, their training loops, prediction, evaluation and embedding
//! export.

mod encoder;
mod eval;
mod export;
mod fusion;
mod train;

use std::path::Path;

pub use encoder::{stats_pool, EncoderGrads, FrameEncoder};
pub use eval::{evaluate, BucketAccuracy, EvalReport};
pub use export::export_embeddings;
pub use fusion::{canonical_streams, FusionModel};
pub use train::{plan_for, resolve_classes, train_e2e_aid, train_fusion, TrainConfig, TrainEpoch, TrainOutcome};

use crate::archive;
use crate::corpus::Utterance;
use crate::error::{Error, Result};
use crate::numkit::{softmax, Real};

/// Label given to every non-reference accent by [`relabel_binary`].
pub const ACCENTED_LABEL: &str = "accented";

/// A trained accent classifier over a fixed, ordered class list.
pub trait Classifier<T: Real> {
    fn classes(&self) -> &[String];
    fn logits(&self, utt: &Utterance) -> Result<Vec<T>>;

    fn class_index(&self, label: &str) -> Option<usize> {
        self.classes().iter().position(|c| c == label)
    }
}

/// Probability distribution over the model's classes.
pub fn predict<T: Real, C: Classifier<T> + ?Sized>(model: &C, utt: &Utterance) -> Result<Vec<T>> {
    softmax(&model.logits(utt)?)
}

pub(crate) fn class_label<T: Real, C: Classifier<T> + ?Sized>(model: &C, utt: &Utterance) -> Result<usize> {
    model.class_index(&utt.accent).ok_or_else(|| {
        Error::invalid(format!(
            "utterance {} has accent {:?}, not a model class",
            utt.utt_id, utt.accent
        ))
    })
}

/// Copies `utts` with every accent other than `reference` renamed to
/// [`ACCENTED_LABEL`], for training the two-class accentedness model.
pub fn relabel_binary(utts: &[Utterance], reference: &str) -> Vec<Utterance> {
    utts.iter()
        .map(|u| {
            let mut u = u.clone();
            if u.accent != reference {
                u.accent = ACCENTED_LABEL.into();
            }
            u
        })
        .collect()
}

/// Either kind of archived AID model.
#[derive(Debug, Clone, PartialEq)]
pub enum AidModel {
    Encoder(FrameEncoder<f64>),
    Fusion(FusionModel<f64>),
}

impl AidModel {
    pub fn load(dir: &Path) -> Result<Self> {
        match archive::archive_kind(dir)?.as_str() {
            encoder::ENCODER_KIND => Ok(Self::Encoder(FrameEncoder::load(dir)?)),
            fusion::FUSION_KIND => Ok(Self::Fusion(FusionModel::load(dir)?)),
            other => Err(Error::invalid(format!("{} holds a {other} model, not an AID model", dir.display()))),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        match self {
            Self::Encoder(m) => m.save(dir),
            Self::Fusion(m) => m.save(dir),
        }
    }
}

impl Classifier<f64> for AidModel {
    fn classes(&self) -> &[String] {
        match self {
            Self::Encoder(m) => m.classes(),
            Self::Fusion(m) => m.classes(),
        }
    }

    fn logits(&self, utt: &Utterance) -> Result<Vec<f64>> {
        match self {
            Self::Encoder(m) => m.logits(utt),
            Self::Fusion(m) => m.logits(utt),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EmbeddingSet, Stream};
    use crate::numkit::Parameters;

    #[test]
    fn zero_weight_model_is_uniform() {
        let mut m = FusionModel::<f64>::new(&[Stream::Lid], &[2], 3, vec!["a".into(), "b".into(), "c".into()], None, 0)
            .unwrap();
        let n = m.net.param_count();
        m.net.set_flat_params(&vec![0.0; n]).unwrap();
        let u = Utterance {
            utt_id: "u".into(),
            speaker_id: "s".into(),
            accent: "a".into(),
            n_words: 1,
            transcript: None,
            features: None,
            embeddings: EmbeddingSet {
                lid: Some(vec![0.4, -1.0]),
                ..EmbeddingSet::default()
            },
            human_score: None,
            severity: None,
        };
        let p = predict(&m, &u).unwrap();
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn archive_dispatch() {
        let dir = tempfile::tempdir().unwrap();
        let enc = FrameEncoder::<f64>::new(3, 4, 2, vec!["a".into(), "b".into()], 1).unwrap();
        let fusion = FusionModel::new(&[Stream::Lid, Stream::Aid], &[2, 0], 3, vec!["a".into(), "b".into()], Some(enc), 5)
            .unwrap();
        AidModel::Fusion(fusion.clone()).save(dir.path()).unwrap();
        match AidModel::load(dir.path()).unwrap() {
            AidModel::Fusion(m) => {
                assert_eq!(m.streams(), fusion.streams());
                assert_eq!(m.dims(), &[2, 2]);
                assert!(m.aid_encoder().is_some());
            }
            other => panic!("loaded {other:?}"),
        }
    }
}
