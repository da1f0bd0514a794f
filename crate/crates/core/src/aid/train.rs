use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::aid::encoder::{prepare_features, EncoderGrads, FrameEncoder};
use crate::aid::fusion::FusionModel;
use crate::corpus::{Stream, Utterance};
use crate::curriculum::{assign_buckets, CurriculumPlan, WordRange};
use crate::error::{Error, Result};
use crate::numkit::{
    argmax, cross_entropy_with_grad, AdamConfig, AdamState, DenseGrads, LrSchedule, Matrix, Parameters, Real,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub schedule: LrSchedule,
    pub adam: AdamConfig,
    pub seed: u64,
    pub fusion_hidden: usize,
    pub encoder_hidden: usize,
    pub d_aid: usize,
    /// Fixed class order; sorted train labels when absent.
    pub classes: Option<Vec<String>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            schedule: LrSchedule::default(),
            adam: AdamConfig::default(),
            seed: 0,
            fusion_hidden: 256,
            encoder_hidden: 128,
            d_aid: 192,
            classes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainEpoch {
    pub epoch: usize,
    /// Utterances drawn this epoch (fewer than the train set in early curriculum epochs).
    pub n_items: usize,
    pub train_loss: f64,
    /// Percent correct on dev, or on the epoch's items when there is no dev set.
    pub dev_accuracy: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    pub model: M,
    pub history: Vec<TrainEpoch>,
    pub best_epoch: usize,
}

/// Curriculum plan for `utts` by word count.
pub fn plan_for(utts: &[Utterance], boundaries: &[WordRange]) -> Result<CurriculumPlan> {
    assign_buckets(utts.iter().map(|u| u.n_words), boundaries)
}

/// Class list for training: the configured order, or the sorted distinct
/// train labels. Every class must occur in `train`.
pub fn resolve_classes(train: &[Utterance], configured: Option<&[String]>) -> Result<Vec<String>> {
    let present: BTreeSet<&str> = train.iter().map(|u| u.accent.as_str()).collect();
    let classes: Vec<String> = match configured {
        Some(c) => {
            if let Some(missing) = c.iter().find(|c| !present.contains(c.as_str())) {
                return Err(Error::invalid(format!("class {missing:?} has no train utterances")));
            }
            if c.iter().collect::<BTreeSet<_>>().len() != c.len() {
                return Err(Error::invalid("class list has duplicates"));
            }
            c.to_vec()
        }
        None => present.iter().map(|s| s.to_string()).collect(),
    };
    if classes.len() < 2 {
        return Err(Error::invalid(format!(
            "training needs at least two classes, found {}",
            classes.len()
        )));
    }
    Ok(classes)
}

pub(crate) fn label_indices(utts: &[Utterance], classes: &[String]) -> Result<Vec<usize>> {
    utts.iter()
        .map(|u| {
            classes.iter().position(|c| *c == u.accent).ok_or_else(|| {
                Error::invalid(format!("utterance {} has label {:?}, not among {:?}", u.utt_id, u.accent, classes))
            })
        })
        .collect()
}

/// What the shared training loop needs from a model.
trait Learner<T: Real>: Clone {
    type Input;
    type Grads: Parameters<T>;

    fn zero_grads(&self) -> Self::Grads;
    fn scale_grads(grads: &mut Self::Grads, s: T);
    fn accumulate(&self, x: &Self::Input, label: usize, grads: &mut Self::Grads) -> Result<T>;
    fn logits_of(&self, x: &Self::Input) -> Result<Vec<T>>;
    fn apply(&mut self, adam: &mut AdamState<T>, grads: &Self::Grads, lr: f64) -> Result<()>;
}

impl<T: Real> Learner<T> for FrameEncoder<T> {
    type Input = Matrix<T>;
    type Grads = EncoderGrads<T>;

    fn zero_grads(&self) -> Self::Grads {
        FrameEncoder::zero_grads(self)
    }

    fn scale_grads(grads: &mut Self::Grads, s: T) {
        grads.scale(s);
    }

    fn accumulate(&self, x: &Matrix<T>, label: usize, grads: &mut Self::Grads) -> Result<T> {
        let (logits, cache) = self.forward(x)?;
        let (loss, g) = cross_entropy_with_grad(&logits, label)?;
        self.backward_into(&cache, &g, grads)?;
        Ok(loss)
    }

    fn logits_of(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        self.logits_from_features(x)
    }

    fn apply(&mut self, adam: &mut AdamState<T>, grads: &Self::Grads, lr: f64) -> Result<()> {
        adam.step(self, grads, lr)
    }
}

impl<T: Real> Learner<T> for FusionModel<T> {
    type Input = Vec<T>;
    type Grads = DenseGrads<T>;

    fn zero_grads(&self) -> Self::Grads {
        DenseGrads::zeros_like(&self.net)
    }

    fn scale_grads(grads: &mut Self::Grads, s: T) {
        grads.scale(s);
    }

    fn accumulate(&self, x: &Vec<T>, label: usize, grads: &mut Self::Grads) -> Result<T> {
        let (logits, cache) = self.net.forward(x)?;
        let (loss, g) = cross_entropy_with_grad(&logits, label)?;
        self.net.backward_into(&cache, &g, grads)?;
        Ok(loss)
    }

    fn logits_of(&self, x: &Vec<T>) -> Result<Vec<T>> {
        self.net.infer(x)
    }

    // Only the fusion layers are handed to the optimiser; an attached
    // encoder is never touched.
    fn apply(&mut self, adam: &mut AdamState<T>, grads: &Self::Grads, lr: f64) -> Result<()> {
        adam.step(&mut self.net, grads, lr)
    }
}

fn accuracy<T: Real, M: Learner<T>>(model: &M, xs: &[&M::Input], ys: &[usize]) -> Result<f64> {
    if xs.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (x, &y) in xs.iter().zip(ys) {
        if argmax(&model.logits_of(x)?) == y {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / xs.len() as f64)
}

fn fit<T: Real, M: Learner<T>>(
    mut model: M,
    train: (&[M::Input], &[usize]),
    dev: (&[M::Input], &[usize]),
    plan: Option<&CurriculumPlan>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<M>> {
    let (xs, ys) = train;
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::invalid("epochs and batch_size must be >= 1"));
    }
    let flat;
    let plan = match plan {
        Some(p) => {
            if p.len() != xs.len() {
                return Err(Error::dims("curriculum plan", xs.len(), p.len()));
            }
            p
        }
        None => {
            flat = CurriculumPlan::flat(xs.len());
            &flat
        }
    };
    let batches_per_epoch = xs.len().div_ceil(cfg.batch_size);
    let mut adam = AdamState::new(cfg.adam);
    let mut grads = model.zero_grads();
    let mut batch_index = 0usize;
    let mut best: Option<(f64, usize, M)> = None;
    let mut history = Vec::with_capacity(cfg.epochs);
    let dev_x: Vec<&M::Input> = dev.0.iter().collect();

    for epoch in 1..=cfg.epochs {
        let order = plan.epoch_subset(epoch, cfg.seed);
        let mut total = 0.0;
        let mut lr = cfg.schedule.lr(batch_index, batches_per_epoch);
        for batch in order.chunks(cfg.batch_size) {
            lr = cfg.schedule.lr(batch_index, batches_per_epoch);
            batch_index += 1;
            M::scale_grads(&mut grads, T::zero());
            for &i in batch {
                total += model.accumulate(&xs[i], ys[i], &mut grads)?.as_f64();
            }
            M::scale_grads(&mut grads, T::one() / T::from_usize_lossy(batch.len()));
            model.apply(&mut adam, &grads, lr)?;
        }
        let dev_accuracy = if dev_x.is_empty() {
            let seen: Vec<&M::Input> = order.iter().map(|&i| &xs[i]).collect();
            let labels: Vec<usize> = order.iter().map(|&i| ys[i]).collect();
            accuracy(&model, &seen, &labels)?
        } else {
            accuracy(&model, &dev_x, dev.1)?
        };
        let train_loss = if order.is_empty() { 0.0 } else { total / order.len() as f64 };
        log::debug!("epoch {epoch}: {} items, loss {train_loss:.4}, dev acc {dev_accuracy:.2}%", order.len());
        history.push(TrainEpoch {
            epoch,
            n_items: order.len(),
            train_loss,
            dev_accuracy,
            learning_rate: lr,
        });
        if best.as_ref().is_none_or(|(a, _, _)| dev_accuracy > *a) {
            best = Some((dev_accuracy, epoch, model.clone()));
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
    })
}

/// Trains the frame encoder end to end with cross-entropy on its head.
pub fn train_e2e_aid<T: Real>(
    train: &[Utterance],
    dev: &[Utterance],
    plan: Option<&CurriculumPlan>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<FrameEncoder<T>>> {
    let classes = resolve_classes(train, cfg.classes.as_deref())?;
    let ys = label_indices(train, &classes)?;
    let dev_ys = label_indices(dev, &classes)?;
    let xs: Vec<Matrix<T>> = train.iter().map(prepare_features).collect::<Result<_>>()?;
    let dev_xs: Vec<Matrix<T>> = dev.iter().map(prepare_features).collect::<Result<_>>()?;
    let feat_dim = xs[0].cols();
    if let Some(u) = train.iter().chain(dev).find(|u| u.features.as_ref().is_some_and(|f| f.cols() != feat_dim)) {
        return Err(Error::dims(format!("features of {}", u.utt_id), feat_dim, u.features()?.cols()));
    }
    let model = FrameEncoder::new(feat_dim, cfg.encoder_hidden, cfg.d_aid, classes, cfg.seed)?;
    fit(model, (&xs, &ys), (&dev_xs, &dev_ys), plan, cfg)
}

/// Trains the fusion layers over the requested streams. With `aid_encoder`
/// the AID stream comes from that encoder, which stays frozen.
pub fn train_fusion<T: Real>(
    train: &[Utterance],
    dev: &[Utterance],
    streams: &[Stream],
    aid_encoder: Option<FrameEncoder<T>>,
    plan: Option<&CurriculumPlan>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<FusionModel<T>>> {
    let first = train
        .first()
        .ok_or_else(|| Error::invalid("training needs at least one utterance"))?;
    let classes = resolve_classes(train, cfg.classes.as_deref())?;
    let ys = label_indices(train, &classes)?;
    let dev_ys = label_indices(dev, &classes)?;
    let dims: Vec<usize> = streams
        .iter()
        .map(|&s| match (&aid_encoder, s) {
            (Some(enc), Stream::Aid) => Ok(enc.d_aid()),
            _ => first.embedding(s).map(<[f64]>::len),
        })
        .collect::<Result<_>>()?;
    let model = FusionModel::new(streams, &dims, cfg.fusion_hidden, classes, aid_encoder, cfg.seed)?;
    let xs: Vec<Vec<T>> = train.iter().map(|u| model.input(u)).collect::<Result<_>>()?;
    let dev_xs: Vec<Vec<T>> = dev.iter().map(|u| model.input(u)).collect::<Result<_>>()?;
    fit(model, (&xs, &ys), (&dev_xs, &dev_ys), plan, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aid::{predict, Classifier};
    use crate::corpus::EmbeddingSet;
    use crate::numkit::{finite_diff_check, log_softmax, LrMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labelled(id: usize, accent: &str, lid: Vec<f64>, features: Option<Matrix<f64>>) -> Utterance {
        Utterance {
            utt_id: format!("u{id}"),
            speaker_id: format!("s{}", id % 7),
            accent: accent.into(),
            n_words: (id % 30) as u32 + 1,
            transcript: None,
            features,
            embeddings: EmbeddingSet {
                lid: Some(lid),
                sid: None,
                aid: None,
            },
            human_score: None,
            severity: None,
        }
    }

    /// Two Gaussian clusters 4σ apart along the first axis.
    fn clusters(n: usize, seed: u64) -> Vec<Utterance> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let y = i % 2;
                let centre = if y == 0 { -2.0 } else { 2.0 };
                let lid: Vec<f64> = (0..4)
                    .map(|k| if k == 0 { centre } else { 0.0 } + rng.random_range(-0.9..0.9))
                    .collect();
                labelled(i, ["x", "y"][y], lid, None)
            })
            .collect()
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            epochs: 10,
            batch_size: 16,
            fusion_hidden: 16,
            encoder_hidden: 8,
            d_aid: 6,
            schedule: LrSchedule {
                mode: LrMode::Constant,
                ..LrSchedule::default()
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn single_stream_on_separable_clusters() {
        let train = clusters(200, 1);
        let test = clusters(100, 2);
        let out = train_fusion::<f64>(&train, &[], &[Stream::Lid], None, None, &cfg()).unwrap();
        let correct = test
            .iter()
            .filter(|u| {
                let p = predict(&out.model, u).unwrap();
                out.model.classes()[argmax(&p)] == u.accent
            })
            .count();
        assert!(correct >= 95, "{correct}/100");
    }

    #[test]
    fn encoder_separates_toy_features() {
        // class x: first channel alternates sign, class y: constant frames;
        // the pooled standard deviation separates them exactly.
        let train: Vec<Utterance> = (0..40)
            .map(|i| {
                let y = i % 2;
                let rows: Vec<Vec<f64>> = (0..6)
                    .map(|t| {
                        let v = if y == 0 { if t % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 };
                        vec![v, -v, 0.5 * v]
                    })
                    .collect();
                labelled(i, ["x", "y"][y], vec![0.0], Some(Matrix::from_rows(&rows).unwrap()))
            })
            .collect();
        let c = TrainConfig {
            batch_size: 4,
            ..cfg()
        };
        let out = train_e2e_aid::<f64>(&train, &[], None, &c).unwrap();
        let last = out.history.iter().map(|h| h.dev_accuracy).fold(0.0, f64::max);
        assert_eq!(last, 100.0);
        let a = train_e2e_aid::<f64>(&train, &[], None, &c).unwrap();
        assert_eq!(a.model, out.model);
    }

    #[test]
    fn class_absent_from_train_rejected() {
        let train = clusters(10, 1);
        let c = TrainConfig {
            classes: Some(vec!["x".into(), "y".into(), "z".into()]),
            ..cfg()
        };
        let err = train_fusion::<f64>(&train, &[], &[Stream::Lid], None, None, &c).unwrap_err();
        assert!(err.to_string().contains("\"z\""), "{err}");
        let one: Vec<Utterance> = train.into_iter().filter(|u| u.accent == "x").collect();
        assert!(train_fusion::<f64>(&one, &[], &[Stream::Lid], None, None, &cfg()).is_err());
    }

    #[test]
    fn frozen_encoder_is_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let train: Vec<Utterance> = (0..20)
            .map(|i| {
                let f = Matrix::from_vec(3, 2, (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
                labelled(i, ["x", "y"][i % 2], vec![i as f64 % 2.0, 0.3], Some(f))
            })
            .collect();
        let enc = FrameEncoder::<f64>::new(2, 4, 3, vec!["x".into(), "y".into()], 8).unwrap();
        let before: Vec<u64> = enc.flat_params().iter().map(|v| v.to_bits()).collect();
        let out = train_fusion(&train, &[], &[Stream::Lid, Stream::Aid], Some(enc), None, &cfg()).unwrap();
        let after: Vec<u64> = out.model.aid_encoder().unwrap().flat_params().iter().map(|v| v.to_bits()).collect();
        assert_eq!(before, after);
        assert_eq!(out.model.input_dim(), 2 + 3);
    }

    #[test]
    fn fusion_gradients_match_finite_differences() {
        let data = clusters(6, 3);
        let model = FusionModel::<f64>::new(&[Stream::Lid], &[4], 5, vec!["x".into(), "y".into()], None, 2).unwrap();
        let xs: Vec<Vec<f64>> = data.iter().map(|u| model.input(u).unwrap()).collect();
        let ys = label_indices(&data, model.classes()).unwrap();
        let mut grads = Learner::zero_grads(&model);
        for (x, &y) in xs.iter().zip(&ys) {
            model.accumulate(x, y, &mut grads).unwrap();
        }
        let mut probe = model.net.clone();
        let err = finite_diff_check(
            |p| {
                probe.set_flat_params(p).unwrap();
                xs.iter()
                    .zip(&ys)
                    .map(|(x, &y)| -log_softmax(&probe.infer(x).unwrap()).unwrap()[y])
                    .sum()
            },
            &model.net.flat_params(),
            &grads.flat_params(),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn plan_length_checked() {
        let train = clusters(10, 1);
        let plan = CurriculumPlan::flat(3);
        assert!(train_fusion::<f64>(&train, &[], &[Stream::Lid], None, Some(&plan), &cfg()).is_err());
    }
}
