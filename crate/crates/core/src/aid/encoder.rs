use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aid::{class_label, Classifier};
use crate::archive::{self, NetSpec};
use crate::corpus::{mean_normalize, Utterance};
use crate::error::{Error, Result};
use crate::numkit::{cross_entropy_with_grad, Activation, DenseGrads, DenseNet, ForwardCache, Matrix, Parameters, Real};

/// Frame-level accent encoder: a per-frame network, mean and standard
/// deviation pooling over time, a linear projection to the embedding and a
/// linear classification head.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEncoder<T> {
    classes: Vec<String>,
    frame: DenseNet<T>,
    proj: DenseNet<T>,
    head: DenseNet<T>,
}

/// Gradients for the three networks of a [`FrameEncoder`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGrads<T> {
    pub frame: DenseGrads<T>,
    pub proj: DenseGrads<T>,
    pub head: DenseGrads<T>,
}

pub(crate) struct EncoderCache<T> {
    frames: Vec<ForwardCache<T>>,
    hidden: Vec<Vec<T>>,
    mean: Vec<T>,
    std: Vec<T>,
    proj: ForwardCache<T>,
    head: ForwardCache<T>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EncoderHeader {
    kind: String,
    classes: Vec<String>,
    feat_dim: usize,
    hidden: usize,
    d_aid: usize,
    frame: NetSpec,
    proj: NetSpec,
    head: NetSpec,
}

pub(crate) const ENCODER_KIND: &str = "encoder";

/// Per-channel mean and population standard deviation over rows.
pub fn stats_pool<T: Real>(rows: &[Vec<T>]) -> Result<(Vec<T>, Vec<T>)> {
    let first = rows.first().ok_or_else(|| Error::invalid("cannot pool zero frames"))?;
    let n = T::from_usize_lossy(rows.len());
    let mut mean = vec![T::zero(); first.len()];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![T::zero(); first.len()];
    for r in rows {
        for ((s, &v), &m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    Ok((mean, var.into_iter().map(|s| (s / n).sqrt()).collect()))
}

impl<T: Real> FrameEncoder<T> {
    pub fn new(feat_dim: usize, hidden: usize, d_aid: usize, classes: Vec<String>, seed: u64) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::invalid("an accent classifier needs at least two classes"));
        }
        let relu = Activation::Relu;
        let id = Activation::Identity;
        Ok(Self {
            frame: DenseNet::glorot(&[feat_dim, hidden, hidden], &[relu, relu], seed)?,
            proj: DenseNet::glorot(&[2 * hidden, d_aid], &[id], seed.wrapping_add(1))?,
            head: DenseNet::glorot(&[d_aid, classes.len()], &[id], seed.wrapping_add(2))?,
            classes,
        })
    }

    pub fn feat_dim(&self) -> usize {
        self.frame.in_dim()
    }

    pub fn hidden(&self) -> usize {
        self.frame.out_dim()
    }

    pub fn d_aid(&self) -> usize {
        self.proj.out_dim()
    }

    pub fn nets(&self) -> [&DenseNet<T>; 3] {
        [&self.frame, &self.proj, &self.head]
    }

    fn frame_outputs(&self, features: &Matrix<T>) -> Result<Vec<Vec<T>>> {
        if features.rows() == 0 {
            return Err(Error::invalid("cannot encode an utterance with no frames"));
        }
        features.row_iter().map(|f| self.frame.infer(f)).collect()
    }

    /// Fixed-length embedding for mean-normalised features.
    pub fn embed(&self, features: &Matrix<T>) -> Result<Vec<T>> {
        let (mut mean, std) = stats_pool(&self.frame_outputs(features)?)?;
        mean.extend(std);
        self.proj.infer(&mean)
    }

    pub fn embed_utterance(&self, utt: &Utterance) -> Result<Vec<T>> {
        self.embed(&prepare_features(utt)?)
    }

    pub fn logits_from_features(&self, features: &Matrix<T>) -> Result<Vec<T>> {
        self.head.infer(&self.embed(features)?)
    }

    pub(crate) fn forward(&self, features: &Matrix<T>) -> Result<(Vec<T>, EncoderCache<T>)> {
        if features.rows() == 0 {
            return Err(Error::invalid("cannot encode an utterance with no frames"));
        }
        let mut frames = Vec::with_capacity(features.rows());
        let mut hidden = Vec::with_capacity(features.rows());
        for f in features.row_iter() {
            let (h, c) = self.frame.forward(f)?;
            hidden.push(h);
            frames.push(c);
        }
        let (mean, std) = stats_pool(&hidden)?;
        let pooled: Vec<T> = mean.iter().chain(&std).copied().collect();
        let (emb, proj) = self.proj.forward(&pooled)?;
        let (logits, head) = self.head.forward(&emb)?;
        Ok((
            logits,
            EncoderCache {
                frames,
                hidden,
                mean,
                std,
                proj,
                head,
            },
        ))
    }

    pub(crate) fn backward_into(
        &self,
        cache: &EncoderCache<T>,
        grad_logits: &[T],
        grads: &mut EncoderGrads<T>,
    ) -> Result<()> {
        let g_emb = self.head.backward_into(&cache.head, grad_logits, &mut grads.head)?;
        let g_pool = self.proj.backward_into(&cache.proj, &g_emb, &mut grads.proj)?;
        let h = self.hidden();
        let (g_mean, g_std) = g_pool.split_at(h);
        let n = T::from_usize_lossy(cache.hidden.len());
        let mut g_frame = vec![T::zero(); h];
        for (row, fc) in cache.hidden.iter().zip(&cache.frames) {
            for c in 0..h {
                let mut g = g_mean[c] / n;
                if cache.std[c] > T::zero() {
                    g += g_std[c] * (row[c] - cache.mean[c]) / (n * cache.std[c]);
                }
                g_frame[c] = g;
            }
            self.frame.backward_into(fc, &g_frame, &mut grads.frame)?;
        }
        Ok(())
    }

    /// Summed cross-entropy over `batch` and its gradient.
    pub fn loss_and_grad(&self, batch: &[Utterance]) -> Result<(T, EncoderGrads<T>)> {
        let mut grads = self.zero_grads();
        let mut total = T::zero();
        for utt in batch {
            let (logits, cache) = self.forward(&prepare_features(utt)?)?;
            let (loss, g) = cross_entropy_with_grad(&logits, class_label(self, utt)?)?;
            self.backward_into(&cache, &g, &mut grads)?;
            total += loss;
        }
        Ok((total, grads))
    }

    pub fn zero_grads(&self) -> EncoderGrads<T> {
        EncoderGrads {
            frame: DenseGrads::zeros_like(&self.frame),
            proj: DenseGrads::zeros_like(&self.proj),
            head: DenseGrads::zeros_like(&self.head),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let header = EncoderHeader {
            kind: ENCODER_KIND.into(),
            classes: self.classes.clone(),
            feat_dim: self.feat_dim(),
            hidden: self.hidden(),
            d_aid: self.d_aid(),
            frame: archive::save_net(dir, "frame", &self.frame)?,
            proj: archive::save_net(dir, "proj", &self.proj)?,
            head: archive::save_net(dir, "head", &self.head)?,
        };
        archive::write_header(dir, &header)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let h: EncoderHeader = archive::read_header(dir)?;
        if h.kind != ENCODER_KIND {
            return Err(Error::invalid(format!("{} holds a {} model, not an encoder", dir.display(), h.kind)));
        }
        let enc = Self {
            frame: archive::load_net(dir, &h.frame)?,
            proj: archive::load_net(dir, &h.proj)?,
            head: archive::load_net(dir, &h.head)?,
            classes: h.classes,
        };
        if enc.feat_dim() != h.feat_dim
            || enc.proj.in_dim() != 2 * enc.hidden()
            || enc.head.in_dim() != enc.d_aid()
            || enc.head.out_dim() != enc.classes.len()
        {
            return Err(Error::Format {
                path: dir.to_path_buf(),
                msg: "encoder networks do not chain".into(),
            });
        }
        Ok(enc)
    }
}

pub(crate) fn prepare_features<T: Real>(utt: &Utterance) -> Result<Matrix<T>> {
    Ok(mean_normalize(utt.features()?)?.cast())
}

impl<T: Real> Classifier<T> for FrameEncoder<T> {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn logits(&self, utt: &Utterance) -> Result<Vec<T>> {
        self.logits_from_features(&prepare_features(utt)?)
    }
}

impl<T: Real> Parameters<T> for FrameEncoder<T> {
    fn param_slices(&self) -> Vec<&[T]> {
        let mut v = self.frame.param_slices();
        v.extend(self.proj.param_slices());
        v.extend(self.head.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut v = self.frame.param_slices_mut();
        v.extend(self.proj.param_slices_mut());
        v.extend(self.head.param_slices_mut());
        v
    }
}

impl<T: Real> Parameters<T> for EncoderGrads<T> {
    fn param_slices(&self) -> Vec<&[T]> {
        let mut v = self.frame.param_slices();
        v.extend(self.proj.param_slices());
        v.extend(self.head.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut v = self.frame.param_slices_mut();
        v.extend(self.proj.param_slices_mut());
        v.extend(self.head.param_slices_mut());
        v
    }
}

impl<T: Real> EncoderGrads<T> {
    pub fn scale(&mut self, s: T) {
        self.frame.scale(s);
        self.proj.scale(s);
        self.head.scale(s);
    }
}
