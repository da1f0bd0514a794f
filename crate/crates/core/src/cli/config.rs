use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aid::TrainConfig;
use crate::assess::Statistic;
use crate::corpus::{Stream, SynthConfig};
use crate::ctc::CtcTrainConfig;
use crate::curriculum::{default_boundaries, WordRange};
use crate::error::{Error, Result};

pub const SEED_ENV: &str = "ACCENTLAB_SEED";
pub const RESOLVED_CONFIG: &str = "config.resolved.json";

/// Which part of the seeded speaker split a command reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    All,
    Train,
    Dev,
    Test,
}

/// Per-speaker value from the manifest to correlate a score table against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Against {
    Human,
    Severity,
}

/// Everything a run needs; written back as `config.resolved.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub manifest: Option<PathBuf>,
    /// Native accent label: the positive class of the binary model and the
    /// training accent of the recogniser.
    pub reference_accent: String,
    /// Train/dev/test speaker fractions.
    pub split: [f64; 3],
    pub subset: Option<Subset>,
    pub synth: SynthConfig,
    pub aid: TrainConfig,
    pub streams: Vec<Stream>,
    pub curriculum: bool,
    pub boundaries: Vec<WordRange>,
    /// Train the two-class reference-vs-accented model.
    pub binary: bool,
    /// Whether the binary model also uses the curriculum.
    pub binary_curriculum: bool,
    pub aid_encoder: Option<PathBuf>,
    pub ctc: CtcTrainConfig,
    /// Accents the recogniser trains on; the reference accent when absent.
    pub ctc_accents: Option<Vec<String>>,
    pub model: Option<PathBuf>,
    pub hypotheses: Option<PathBuf>,
    pub scores: Vec<PathBuf>,
    pub against: Option<Against>,
    pub statistic: Statistic,
    pub min_words: Option<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            manifest: None,
            reference_accent: "en-US".into(),
            split: [0.7, 0.15, 0.15],
            subset: None,
            synth: SynthConfig::default(),
            aid: TrainConfig::default(),
            streams: Stream::ALL.to_vec(),
            curriculum: true,
            boundaries: default_boundaries(),
            binary: false,
            binary_curriculum: true,
            aid_encoder: None,
            ctc: CtcTrainConfig::default(),
            ctc_accents: None,
            model: None,
            hypotheses: None,
            scores: Vec::new(),
            against: None,
            statistic: Statistic::Median,
            min_words: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }

    /// Seed precedence: flag, then `ACCENTLAB_SEED`, then the config file.
    pub fn resolve_seed(&mut self, flag: Option<u64>, env: Option<&str>) -> Result<()> {
        if let Some(s) = flag {
            self.seed = s;
        } else if let Some(v) = env {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
        }
        self.aid.seed = self.seed;
        self.ctc.seed = self.seed;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }
}
