use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aid::encoder::{prepare_features, FrameEncoder, ENCODER_KIND};
use crate::aid::{class_label, Classifier};
use crate::archive::{self, NetSpec};
use crate::corpus::{Stream, Utterance};
use crate::error::{Error, Result};
use crate::numkit::{cross_entropy_with_grad, DenseGrads, DenseNet, Real};

/// Multi-embedding classifier: the requested stream embeddings concatenated
/// in canonical order and fed through two ReLU layers and a linear head.
///
/// When an AID encoder is attached, the AID stream is computed from the
/// utterance features by that (frozen) encoder instead of being read from
/// the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel<T> {
    classes: Vec<String>,
    streams: Vec<Stream>,
    dims: Vec<usize>,
    pub net: DenseNet<T>,
    aid_encoder: Option<FrameEncoder<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FusionHeader {
    kind: String,
    classes: Vec<String>,
    streams: Vec<Stream>,
    dims: Vec<usize>,
    net: NetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aid_encoder: Option<String>,
}

pub(crate) const FUSION_KIND: &str = "fusion";
const ENCODER_SUBDIR: &str = "aid_encoder";

/// Sorts into canonical order and rejects an empty or repeated selection.
pub fn canonical_streams(streams: &[Stream]) -> Result<Vec<Stream>> {
    let mut s = streams.to_vec();
    s.sort();
    s.dedup();
    if s.is_empty() {
        return Err(Error::invalid("at least one embedding stream is required"));
    }
    if s.len() != streams.len() {
        return Err(Error::invalid("embedding streams listed more than once"));
    }
    Ok(s)
}

impl<T: Real> FusionModel<T> {
    /// `dims` gives the embedding length of each stream in `streams`
    /// (canonical order); the AID entry is ignored when an encoder is given.
    pub fn new(
        streams: &[Stream],
        dims: &[usize],
        hidden: usize,
        classes: Vec<String>,
        aid_encoder: Option<FrameEncoder<T>>,
        seed: u64,
    ) -> Result<Self> {
        if streams.len() != dims.len() {
            return Err(Error::dims("fusion stream dims", streams.len(), dims.len()));
        }
        let mut pairs: Vec<(Stream, usize)> = streams.iter().copied().zip(dims.iter().copied()).collect();
        pairs.sort();
        let streams = canonical_streams(streams)?;
        let mut dims: Vec<usize> = pairs.into_iter().map(|(_, d)| d).collect();
        if classes.len() < 2 {
            return Err(Error::invalid("an accent classifier needs at least two classes"));
        }
        if let Some(enc) = &aid_encoder {
            let k = streams
                .iter()
                .position(|&s| s == Stream::Aid)
                .ok_or_else(|| Error::invalid("an AID encoder was given but the aid stream is not selected"))?;
            dims[k] = enc.d_aid();
        }
        if dims.contains(&0) {
            return Err(Error::invalid("embedding dimensions must be positive"));
        }
        let input: usize = dims.iter().sum();
        let net = DenseNet::mlp(&[input, hidden, hidden, classes.len()], seed)?;
        Ok(Self {
            classes,
            streams,
            dims,
            net,
            aid_encoder,
        })
    }

    pub fn streams(&self) -> &[Stream] {
        &self.streams
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.net.in_dim()
    }

    pub fn aid_encoder(&self) -> Option<&FrameEncoder<T>> {
        self.aid_encoder.as_ref()
    }

    /// The embedding of one stream for `utt`, as the model consumes it.
    pub fn stream_vector(&self, utt: &Utterance, stream: Stream) -> Result<Vec<T>> {
        let k = self
            .streams
            .iter()
            .position(|&s| s == stream)
            .ok_or_else(|| Error::invalid(format!("model does not use the {} stream", stream.name())))?;
        let v: Vec<T> = match (&self.aid_encoder, stream) {
            (Some(enc), Stream::Aid) => enc.embed(&prepare_features(utt)?)?,
            _ => utt.embedding(stream)?.iter().map(|&x| T::lit(x)).collect(),
        };
        if v.len() != self.dims[k] {
            return Err(Error::dims(
                format!("{} embedding of {}", stream.name(), utt.utt_id),
                self.dims[k],
                v.len(),
            ));
        }
        Ok(v)
    }

    /// Concatenated input vector.
    pub fn input(&self, utt: &Utterance) -> Result<Vec<T>> {
        let mut x = Vec::with_capacity(self.input_dim());
        for &s in &self.streams {
            x.extend(self.stream_vector(utt, s)?);
        }
        Ok(x)
    }

    /// Activations of the last hidden layer, used for embedding plots.
    pub fn fused_embedding(&self, utt: &Utterance) -> Result<Vec<T>> {
        let mut h = self.input(utt)?;
        let layers = self.net.layers();
        for l in &layers[..layers.len() - 1] {
            h = l.apply(&h);
        }
        Ok(h)
    }

    /// Summed cross-entropy over `batch` and its gradient with respect to
    /// the fusion layers only.
    pub fn loss_and_grad(&self, batch: &[Utterance]) -> Result<(T, DenseGrads<T>)> {
        let mut grads = DenseGrads::zeros_like(&self.net);
        let mut total = T::zero();
        for utt in batch {
            let (logits, cache) = self.net.forward(&self.input(utt)?)?;
            let (loss, g) = cross_entropy_with_grad(&logits, class_label(self, utt)?)?;
            self.net.backward_into(&cache, &g, &mut grads)?;
            total += loss;
        }
        Ok((total, grads))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let aid_encoder = match &self.aid_encoder {
            Some(enc) => {
                enc.save(&dir.join(ENCODER_SUBDIR))?;
                Some(ENCODER_SUBDIR.to_string())
            }
            None => None,
        };
        let header = FusionHeader {
            kind: FUSION_KIND.into(),
            classes: self.classes.clone(),
            streams: self.streams.clone(),
            dims: self.dims.clone(),
            net: archive::save_net(dir, "fusion", &self.net)?,
            aid_encoder,
        };
        archive::write_header(dir, &header)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let h: FusionHeader = archive::read_header(dir)?;
        if h.kind != FUSION_KIND {
            return Err(Error::invalid(format!("{} holds a {} model, not fusion", dir.display(), h.kind)));
        }
        let aid_encoder = match &h.aid_encoder {
            Some(sub) => {
                let sub = dir.join(sub);
                if archive::archive_kind(&sub)? != ENCODER_KIND {
                    return Err(Error::invalid(format!("{} is not an encoder archive", sub.display())));
                }
                Some(FrameEncoder::load(&sub)?)
            }
            None => None,
        };
        let net: DenseNet<T> = archive::load_net(dir, &h.net)?;
        let streams = canonical_streams(&h.streams)?;
        if streams != h.streams || h.dims.len() != streams.len() {
            return Err(Error::Format {
                path: dir.to_path_buf(),
                msg: "stream list is not canonical or does not match dims".into(),
            });
        }
        if net.in_dim() != h.dims.iter().sum::<usize>() || net.out_dim() != h.classes.len() {
            return Err(Error::dims("fusion network", h.dims.iter().sum::<usize>(), net.in_dim()));
        }
        Ok(Self {
            classes: h.classes,
            streams,
            dims: h.dims,
            net,
            aid_encoder,
        })
    }
}

impl<T: Real> Classifier<T> for FusionModel<T> {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn logits(&self, utt: &Utterance) -> Result<Vec<T>> {
        self.net.infer(&self.input(utt)?)
    }
}
