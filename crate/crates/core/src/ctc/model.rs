use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::{self, NetSpec};
use crate::corpus::{mean_normalize, Utterance};
use crate::ctc::{ctc_backward_grad, ctc_forward_loss, greedy_decode, is_feasible, SymbolTable};
use crate::error::{Error, Result};
use crate::numkit::{log_softmax, AdamConfig, AdamState, DenseGrads, DenseNet, Matrix, Real};

/// Frame-wise acoustic model: `feat_dim → hidden → hidden → |S|`, each frame
/// scored independently, log-softmax per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CtcModel<T> {
    pub symbols: SymbolTable,
    pub net: DenseNet<T>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CtcHeader {
    kind: String,
    symbols: String,
    feat_dim: usize,
    net: NetSpec,
}

const KIND: &str = "ctc";

impl<T: Real> CtcModel<T> {
    pub fn new(symbols: SymbolTable, feat_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        let net = DenseNet::mlp(&[feat_dim, hidden, hidden, symbols.len()], seed)?;
        Ok(Self { symbols, net })
    }

    pub fn feat_dim(&self) -> usize {
        self.net.in_dim()
    }

    /// Per-frame log-probabilities for already-normalised features.
    pub fn frame_log_probs(&self, features: &Matrix<T>) -> Result<Matrix<T>> {
        let rows = features
            .row_iter()
            .map(|f| log_softmax(&self.net.infer(f)?))
            .collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Ok(Matrix::zeros(0, self.symbols.len()));
        }
        Matrix::from_rows(&rows)
    }

    /// Mean-normalises the utterance's features and scores them.
    pub fn utterance_log_probs(&self, utt: &Utterance) -> Result<Matrix<T>> {
        self.frame_log_probs(&prepare_features(utt)?)
    }

    pub fn transcribe(&self, utt: &Utterance) -> Result<String> {
        Ok(greedy_decode(&self.utterance_log_probs(utt)?, &self.symbols))
    }

    /// CTC loss of one utterance, adding its parameter gradient into `grads`.
    pub fn accumulate_grad(
        &self,
        features: &Matrix<T>,
        target: &[usize],
        grads: &mut DenseGrads<T>,
    ) -> Result<T> {
        let mut caches = Vec::with_capacity(features.rows());
        let mut rows = Vec::with_capacity(features.rows());
        for f in features.row_iter() {
            let (logits, cache) = self.net.forward(f)?;
            rows.push(log_softmax(&logits)?);
            caches.push(cache);
        }
        let lp = Matrix::from_rows(&rows)?;
        let (loss, grad) = ctc_backward_grad(&lp, target)?;
        for (t, cache) in caches.iter().enumerate() {
            self.net.backward_into(cache, grad.row(t), grads)?;
        }
        Ok(loss)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let net = archive::save_net(dir, "frame", &self.net)?;
        archive::write_header(
            dir,
            &CtcHeader {
                kind: KIND.into(),
                symbols: self.symbols.alphabet(),
                feat_dim: self.feat_dim(),
                net,
            },
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let h: CtcHeader = archive::read_header(dir)?;
        if h.kind != KIND {
            return Err(Error::invalid(format!("{} holds a {} model, not ctc", dir.display(), h.kind)));
        }
        let net: DenseNet<T> = archive::load_net(dir, &h.net)?;
        let symbols = SymbolTable::from_alphabet(&h.symbols)?;
        if net.out_dim() != symbols.len() || net.in_dim() != h.feat_dim {
            return Err(Error::dims("ctc output layer", symbols.len(), net.out_dim()));
        }
        Ok(Self { symbols, net })
    }
}

fn prepare_features<T: Real>(utt: &Utterance) -> Result<Matrix<T>> {
    Ok(mean_normalize(utt.features()?)?.cast())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CtcTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epochs without dev-loss improvement before the rate is cut.
    pub patience: usize,
    pub lr_factor: f64,
    pub hidden: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for CtcTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 16,
            learning_rate: 1e-3,
            patience: 3,
            lr_factor: 0.5,
            hidden: 128,
            adam: AdamConfig {
                weight_decay: 0.0,
                ..AdamConfig::default()
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtcEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    /// Mean dev loss over feasible utterances; the train loss when there is no dev set.
    pub dev_loss: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct CtcTrainOutcome<T> {
    pub model: CtcModel<T>,
    pub history: Vec<CtcEpoch>,
    pub best_epoch: usize,
}

struct Prepared<T> {
    features: Matrix<T>,
    target: Vec<usize>,
}

fn prepare<T: Real>(utts: &[Utterance], symbols: &SymbolTable) -> Result<Vec<Prepared<T>>> {
    utts.iter()
        .map(|u| {
            let text = u
                .transcript
                .as_deref()
                .ok_or_else(|| Error::invalid(format!("{} has no transcript", u.utt_id)))?;
            let target = symbols
                .encode(text)
                .map_err(|e| Error::invalid(format!("{}: {e}", u.utt_id)))?;
            Ok(Prepared {
                features: prepare_features(u)?,
                target,
            })
        })
        .collect()
}

fn mean_loss<T: Real>(model: &CtcModel<T>, data: &[Prepared<T>]) -> Result<Option<f64>> {
    let mut total = 0.0;
    let mut n = 0usize;
    for d in data {
        if !is_feasible(&d.target, d.features.rows()) {
            continue;
        }
        total += ctc_forward_loss(&model.frame_log_probs(&d.features)?, &d.target)?.as_f64();
        n += 1;
    }
    Ok((n > 0).then(|| total / n as f64))
}

/// Trains the acoustic model on `train` with Adam and plateau-halving of the
/// learning rate; returns the checkpoint with the lowest dev loss (earliest on
/// ties). Utterances whose target cannot fit their frame count are skipped.
pub fn train_ctc<T: Real>(
    train: &[Utterance],
    dev: &[Utterance],
    symbols: &SymbolTable,
    cfg: &CtcTrainConfig,
) -> Result<CtcTrainOutcome<T>> {
    let first = train
        .first()
        .ok_or_else(|| Error::invalid("train_ctc needs at least one utterance"))?;
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::invalid("epochs and batch_size must be >= 1"));
    }
    let feat_dim = first.features()?.cols();
    let train_data: Vec<Prepared<T>> = prepare(train, symbols)?;
    let dev_data: Vec<Prepared<T>> = prepare(dev, symbols)?;
    if let Some(bad) = train_data.iter().chain(&dev_data).find(|d| d.features.cols() != feat_dim) {
        return Err(Error::dims("ctc feature width", feat_dim, bad.features.cols()));
    }
    let usable: Vec<usize> = (0..train_data.len())
        .filter(|&i| is_feasible(&train_data[i].target, train_data[i].features.rows()))
        .collect();
    if usable.is_empty() {
        return Err(Error::invalid("no train utterance has a feasible CTC target"));
    }

    let mut model = CtcModel::<T>::new(symbols.clone(), feat_dim, cfg.hidden, cfg.seed)?;
    let mut adam = AdamState::new(cfg.adam);
    let mut grads = DenseGrads::zeros_like(&model.net);
    let mut lr = cfg.learning_rate;
    let mut best: Option<(f64, usize, CtcModel<T>)> = None;
    let mut plateau_best = f64::INFINITY;
    let mut bad_epochs = 0;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let mut order = usable.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ epoch as u64));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.fill_zero();
            for &i in batch {
                let d = &train_data[i];
                epoch_loss += model.accumulate_grad(&d.features, &d.target, &mut grads)?.as_f64();
            }
            grads.scale(T::one() / T::from_usize_lossy(batch.len()));
            adam.step(&mut model.net, &grads, lr)?;
        }
        let train_loss = epoch_loss / order.len() as f64;
        let dev_loss = mean_loss(&model, &dev_data)?.unwrap_or(train_loss);
        history.push(CtcEpoch {
            epoch,
            train_loss,
            dev_loss,
            learning_rate: lr,
        });
        log::debug!("ctc epoch {epoch}: train {train_loss:.4} dev {dev_loss:.4} lr {lr:.2e}");

        if best.as_ref().is_none_or(|(b, _, _)| dev_loss < *b) {
            best = Some((dev_loss, epoch, model.clone()));
        }
        if dev_loss < plateau_best * (1.0 - 1e-4) {
            plateau_best = dev_loss;
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
            if bad_epochs >= cfg.patience {
                lr *= cfg.lr_factor;
                bad_epochs = 0;
            }
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch ran");
    Ok(CtcTrainOutcome {
        model,
        history,
        best_epoch,
    })
}
