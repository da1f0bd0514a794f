use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aid::Classifier;
use crate::assess::cer;
use crate::corpus::Utterance;
use crate::ctc::CtcModel;
use crate::error::{Error, Result};
use crate::numkit::log_softmax;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// Log-probability of the reference (native) class; higher is less accented.
    AidLogSoftmax,
    /// Character error rate of a native-trained recogniser; lower is less accented.
    Cer,
}

impl ScoreKind {
    pub fn name(self) -> &'static str {
        match self {
            ScoreKind::AidLogSoftmax => "aid_log_softmax",
            ScoreKind::Cer => "cer",
        }
    }

    /// Whether larger values mean a less accented speaker.
    pub fn higher_is_better(self) -> bool {
        matches!(self, ScoreKind::AidLogSoftmax)
    }

    fn check(self, value: f64) -> Result<()> {
        let ok = value.is_finite()
            && match self {
                ScoreKind::AidLogSoftmax => value <= 0.0,
                ScoreKind::Cer => value >= 0.0,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("{value} is not a valid {} score", self.name())))
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub utt_id: String,
    pub speaker_id: String,
    pub kind: ScoreKind,
    pub value: f64,
}

impl ScoreRow {
    pub fn new(utt: &Utterance, kind: ScoreKind, value: f64) -> Result<Self> {
        kind.check(value)?;
        Ok(Self {
            utt_id: utt.utt_id.clone(),
            speaker_id: utt.speaker_id.clone(),
            kind,
            value,
        })
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

/// Writes rows as CSV with header `utt_id,speaker_id,kind,value`.
pub fn write_scores(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    if rows.is_empty() {
        w.write_record(["utt_id", "speaker_id", "kind", "value"])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header != vec!["utt_id", "speaker_id", "kind", "value"] {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.deserialize::<ScoreRow>().enumerate() {
        let row = rec.map_err(|e| csv_error(path, e))?;
        row.kind.check(row.value).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            line: i + 2,
            msg: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Log-softmax of the `reference` class from a two-class model's logits.
pub fn reference_log_softmax(logits: &[f64], reference: usize) -> Result<f64> {
    if logits.len() != 2 {
        return Err(Error::invalid(format!(
            "accentedness scoring needs a two-class model, got {} classes",
            logits.len()
        )));
    }
    if reference >= 2 {
        return Err(Error::invalid(format!("reference index {reference} out of range")));
    }
    Ok(log_softmax(logits)?[reference])
}

/// Log-probability the binary model assigns to `reference` (e.g. `en-US`).
pub fn aid_accentedness_score<C: Classifier<f64> + ?Sized>(model: &C, reference: &str, utt: &Utterance) -> Result<f64> {
    let classes = model.classes();
    if classes.len() != 2 {
        return Err(Error::invalid(format!(
            "accentedness scoring needs a two-class model, got classes {classes:?}"
        )));
    }
    let idx = model
        .class_index(reference)
        .ok_or_else(|| Error::invalid(format!("model classes {classes:?} do not include {reference:?}")))?;
    reference_log_softmax(&model.logits(utt)?, idx)
}

pub fn score_aid<C: Classifier<f64> + ?Sized>(model: &C, reference: &str, utts: &[Utterance]) -> Result<Vec<ScoreRow>> {
    utts.iter()
        .map(|u| ScoreRow::new(u, ScoreKind::AidLogSoftmax, aid_accentedness_score(model, reference, u)?))
        .collect()
}

fn reference_text(u: &Utterance) -> Result<&str> {
    u.transcript
        .as_deref()
        .ok_or_else(|| Error::invalid(format!("utterance {} has no reference transcript", u.utt_id)))
}

/// Greedy-decodes every utterance and scores its CER. Returns the rows and
/// the hypotheses, in input order.
pub fn score_asr(model: &CtcModel<f64>, utts: &[Utterance]) -> Result<(Vec<ScoreRow>, Vec<String>)> {
    let mut rows = Vec::with_capacity(utts.len());
    let mut hyps = Vec::with_capacity(utts.len());
    for u in utts {
        let hyp = model.transcribe(u)?;
        rows.push(ScoreRow::new(u, ScoreKind::Cer, cer(&hyp, reference_text(u)?)?)?);
        hyps.push(hyp);
    }
    Ok((rows, hyps))
}

/// CER of externally produced hypotheses, looked up by utterance id.
pub fn score_hypotheses(
    utts: &[Utterance],
    hyps: &std::collections::BTreeMap<String, String>,
) -> Result<Vec<ScoreRow>> {
    utts.iter()
        .map(|u| {
            let hyp = hyps
                .get(&u.utt_id)
                .ok_or_else(|| Error::invalid(format!("no hypothesis for utterance {}", u.utt_id)))?;
            ScoreRow::new(u, ScoreKind::Cer, cer(hyp, reference_text(u)?)?)
        })
        .collect()
}
