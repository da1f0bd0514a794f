//! The `accentlab` command line: one subcommand per pipeline stage, a single
//! JSON config with flag overrides, and seeded, byte-reproducible outputs.

mod config;
mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub use config::{Against, RunConfig, Subset, RESOLVED_CONFIG, SEED_ENV};
pub use report::{export_report, write_box_csv, write_json, write_scatter_csv};

use crate::aid::{
    evaluate, plan_for, relabel_binary, train_e2e_aid, train_fusion, AidModel, Classifier, FrameEncoder,
    ACCENTED_LABEL,
};
use crate::assess::{
    correlate_scores, correlate_speakers, read_scores, score_aid, score_asr, score_hypotheses, speaker_statistic,
    write_scores, CorrelationFilter, CorrelationResult, ScoreKind, ScoreRow, Statistic,
};
use crate::corpus::{generate_synthetic_corpus, load_manifest, split_dataset, Dataset, Stream, Utterance};
use crate::ctc::{train_ctc, CtcModel};
use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "accentlab", version, about = "Accent identification and accentedness assessment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; nothing is written outside it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct TrainFlags {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_lr: Option<f64>,
    /// Train on all utterances from the first epoch.
    #[arg(long)]
    no_curriculum: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus (manifest plus matrix files).
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Train the frame-level accent encoder end to end.
    TrainAid {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Train the multi-embedding fusion classifier.
    TrainFusion {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
        /// Comma-separated subset of lid,sid,aid.
        #[arg(long, value_delimiter = ',', value_parser = parse_stream)]
        streams: Option<Vec<Stream>>,
        /// Frozen encoder archive supplying the aid stream.
        #[arg(long)]
        aid_encoder: Option<PathBuf>,
        /// Two classes: the reference accent against all others.
        #[arg(long)]
        binary: bool,
        #[arg(long)]
        reference: Option<String>,
    },
    /// Train the CTC character recogniser on reference-accent speech.
    TrainCtc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
    },
    /// Accuracy, confusion matrix and length-bucket table of an AID model.
    EvalAid {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum)]
        subset: Option<Subset>,
    },
    /// Per-utterance reference-class log-softmax from a binary AID model.
    ScoreAid {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        reference: Option<String>,
        #[arg(long, value_enum)]
        subset: Option<Subset>,
    },
    /// Per-utterance CER from a CTC model or a hypotheses file.
    ScoreAsr {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Tab-separated `utt_id<TAB>hypothesis` lines.
        #[arg(long)]
        hypotheses: Option<PathBuf>,
        #[arg(long, value_enum)]
        subset: Option<Subset>,
    },
    /// Pearson correlation of per-speaker score statistics.
    Correlate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scores: Vec<PathBuf>,
        #[arg(long, value_enum)]
        against: Option<Against>,
        #[arg(long)]
        min_words: Option<u32>,
        #[arg(long, value_parser = parse_statistic)]
        statistic: Option<Statistic>,
    },
    /// Box statistics, scatter table and correlation for plotting.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scores: Vec<PathBuf>,
    },
}

fn parse_stream(s: &str) -> Result<Stream, String> {
    Stream::parse(s).map_err(|e| e.to_string())
}

fn parse_statistic(s: &str) -> Result<Statistic, String> {
    match s {
        "median" => Ok(Statistic::Median),
        "mean" => Ok(Statistic::Mean),
        _ => Err(format!("unknown statistic {s:?}, expected median or mean")),
    }
}

enum Failure {
    /// Bad arguments, config or missing inputs; exit 1.
    Usage(String),
    /// The stage itself failed; exit 2.
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on usage or validation errors, 2 when
/// the stage fails at run time.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{}", e.render().ansi());
            return 1;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn base_config(common: &Common) -> Outcome<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).or_else(|e| usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(m) = &common.manifest {
        cfg.manifest = Some(m.clone());
    }
    let env = std::env::var(SEED_ENV).ok();
    cfg.resolve_seed(common.seed, env.as_deref())
        .or_else(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn apply_train_flags(cfg: &mut RunConfig, t: &TrainFlags) {
    if let Some(e) = t.epochs {
        cfg.aid.epochs = e;
    }
    if let Some(b) = t.batch_size {
        cfg.aid.batch_size = b;
    }
    if let Some(lr) = t.max_lr {
        cfg.aid.schedule.max_lr = lr;
    }
    if t.no_curriculum {
        cfg.curriculum = false;
        cfg.binary_curriculum = false;
    }
}

fn require_file(what: &str, p: &Option<PathBuf>) -> Outcome<PathBuf> {
    match p {
        None => usage(format!("{what} is required")),
        Some(p) if !p.exists() => usage(format!("{what} {} does not exist", p.display())),
        Some(p) => Ok(p.clone()),
    }
}

fn execute(command: Command) -> Outcome {
    let (common, mut cfg) = match &command {
        Command::Synth { common }
        | Command::TrainAid { common, .. }
        | Command::TrainFusion { common, .. }
        | Command::TrainCtc { common, .. }
        | Command::EvalAid { common, .. }
        | Command::ScoreAid { common, .. }
        | Command::ScoreAsr { common, .. }
        | Command::Correlate { common, .. }
        | Command::Export { common, .. } => (common.clone(), base_config(common)?),
    };
    let name = match &command {
        Command::Synth { .. } => "synth",
        Command::TrainAid { .. } => "train-aid",
        Command::TrainFusion { .. } => "train-fusion",
        Command::TrainCtc { .. } => "train-ctc",
        Command::EvalAid { .. } => "eval-aid",
        Command::ScoreAid { .. } => "score-aid",
        Command::ScoreAsr { .. } => "score-asr",
        Command::Correlate { .. } => "correlate",
        Command::Export { .. } => "export",
    };

    match &command {
        Command::Synth { .. } => {
            cfg.synth.validate().or_else(|e| usage(e.to_string()))?;
        }
        Command::TrainAid { train, .. } => {
            apply_train_flags(&mut cfg, train);
            require_file("--manifest", &cfg.manifest)?;
        }
        Command::TrainFusion {
            train,
            streams,
            aid_encoder,
            binary,
            reference,
            ..
        } => {
            apply_train_flags(&mut cfg, train);
            if let Some(s) = streams {
                cfg.streams = s.clone();
            }
            if aid_encoder.is_some() {
                cfg.aid_encoder = aid_encoder.clone();
            }
            if let Some(r) = reference {
                cfg.reference_accent = r.clone();
            }
            cfg.binary |= *binary;
            require_file("--manifest", &cfg.manifest)?;
            if cfg.aid_encoder.is_some() {
                require_file("--aid-encoder", &cfg.aid_encoder)?;
            }
            crate::aid::canonical_streams(&cfg.streams).or_else(|e| usage(e.to_string()))?;
        }
        Command::TrainCtc { epochs, hidden, .. } => {
            if let Some(e) = epochs {
                cfg.ctc.epochs = *e;
            }
            if let Some(h) = hidden {
                cfg.ctc.hidden = *h;
            }
            require_file("--manifest", &cfg.manifest)?;
        }
        Command::EvalAid { model, subset, .. } => {
            override_opt(&mut cfg.model, model);
            override_opt(&mut cfg.subset, subset);
            require_file("--model", &cfg.model)?;
            require_file("--manifest", &cfg.manifest)?;
        }
        Command::ScoreAid {
            model,
            reference,
            subset,
            ..
        } => {
            override_opt(&mut cfg.model, model);
            override_opt(&mut cfg.subset, subset);
            if let Some(r) = reference {
                cfg.reference_accent = r.clone();
            }
            require_file("--model", &cfg.model)?;
            require_file("--manifest", &cfg.manifest)?;
        }
        Command::ScoreAsr {
            model,
            hypotheses,
            subset,
            ..
        } => {
            override_opt(&mut cfg.model, model);
            override_opt(&mut cfg.hypotheses, hypotheses);
            override_opt(&mut cfg.subset, subset);
            if cfg.model.is_none() && cfg.hypotheses.is_none() {
                return usage("score-asr needs a trained CTC model (--model) or a hypotheses file (--hypotheses)");
            }
            if cfg.hypotheses.is_some() {
                require_file("--hypotheses", &cfg.hypotheses)?;
            } else {
                require_file("--model", &cfg.model)?;
            }
            require_file("--manifest", &cfg.manifest)?;
        }
        Command::Correlate {
            scores,
            against,
            min_words,
            statistic,
            ..
        } => {
            if !scores.is_empty() {
                cfg.scores = scores.clone();
            }
            override_opt(&mut cfg.against, against);
            override_opt(&mut cfg.min_words, min_words);
            if let Some(s) = statistic {
                cfg.statistic = *s;
            }
            missing_inputs(&cfg.scores)?;
            match (cfg.scores.len(), cfg.against) {
                (2, None) | (1, Some(_)) => {}
                _ => return usage("correlate takes two --scores tables, or one with --against human|severity"),
            }
            if cfg.against.is_some() || cfg.min_words.is_some() {
                require_file("--manifest", &cfg.manifest)?;
            }
        }
        Command::Export { scores, .. } => {
            if !scores.is_empty() {
                cfg.scores = scores.clone();
            }
            missing_inputs(&cfg.scores)?;
            if cfg.manifest.is_some() {
                require_file("--manifest", &cfg.manifest)?;
            }
        }
    }

    let out = common.out.as_path();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let resolved = out.join(RESOLVED_CONFIG);
    fs::write(&resolved, cfg.to_json()).map_err(|e| Error::io(&resolved, e))?;
    log::info!("{name}: seed {}, writing to {}", cfg.seed, out.display());

    match command {
        Command::Synth { .. } => run_synth(&cfg, out),
        Command::TrainAid { .. } => run_train_aid(&cfg, out),
        Command::TrainFusion { .. } => run_train_fusion(&cfg, out),
        Command::TrainCtc { .. } => run_train_ctc(&cfg, out),
        Command::EvalAid { .. } => run_eval_aid(&cfg, out),
        Command::ScoreAid { .. } => run_score_aid(&cfg, out),
        Command::ScoreAsr { .. } => run_score_asr(&cfg, out),
        Command::Correlate { .. } => run_correlate(&cfg, out),
        Command::Export { .. } => run_export(&cfg, out),
    }
}

fn override_opt<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

fn missing_inputs(paths: &[PathBuf]) -> Outcome {
    if paths.is_empty() {
        return usage("no --scores tables given");
    }
    let missing: Vec<String> = paths
        .iter()
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        usage(format!("missing inputs: {}", missing.join(", ")))
    }
}

fn dataset(cfg: &RunConfig) -> Outcome<Dataset> {
    let path = cfg.manifest.as_ref().expect("validated");
    Ok(load_manifest(path)?.load_dataset()?)
}

fn subset(cfg: &RunConfig, utts: &[Utterance], default: Subset) -> Outcome<Vec<Utterance>> {
    let which = cfg.subset.unwrap_or(default);
    if which == Subset::All {
        return Ok(utts.to_vec());
    }
    let split = split_dataset(utts, cfg.split, cfg.seed)?;
    Ok(match which {
        Subset::Train => split.train,
        Subset::Dev => split.dev,
        _ => split.test,
    })
}

fn write_split(out: &Path, split: &crate::corpus::Split) -> Outcome {
    let ids = |v: &[Utterance]| v.iter().map(|u| u.utt_id.clone()).collect::<Vec<_>>();
    let value = BTreeMap::from([("train", ids(&split.train)), ("dev", ids(&split.dev)), ("test", ids(&split.test))]);
    Ok(write_json(&out.join("split.json"), &value)?)
}

fn run_synth(cfg: &RunConfig, out: &Path) -> Outcome {
    let (corpus, manifest) = generate_synthetic_corpus(&cfg.synth, cfg.seed, out)?;
    log::info!(
        "wrote {} utterances from {} speakers to {}",
        corpus.utterances.len(),
        corpus.speakers.len(),
        manifest.display()
    );
    Ok(())
}

fn run_train_aid(cfg: &RunConfig, out: &Path) -> Outcome {
    let ds = dataset(cfg)?;
    let split = split_dataset(&ds.utterances, cfg.split, cfg.seed)?;
    let plan = if cfg.curriculum {
        Some(plan_for(&split.train, &cfg.boundaries)?)
    } else {
        None
    };
    let trained = train_e2e_aid::<f64>(&split.train, &split.dev, plan.as_ref(), &cfg.aid)?;
    log::info!("best epoch {} of {}", trained.best_epoch, trained.history.len());
    let model = AidModel::Encoder(trained.model);
    finish_aid_training(cfg, out, &model, &trained.history, &split)
}

fn finish_aid_training(
    cfg: &RunConfig,
    out: &Path,
    model: &AidModel,
    history: &[crate::aid::TrainEpoch],
    split: &crate::corpus::Split,
) -> Outcome {
    model.save(&out.join("model"))?;
    write_json(&out.join("history.json"), &history)?;
    write_split(out, split)?;
    if !split.test.is_empty() {
        let report = evaluate(model, &split.test, &cfg.boundaries)?;
        log::info!("test accuracy {:.2}%", report.accuracy);
        write_json(&out.join("eval.json"), &report)?;
    }
    Ok(())
}

fn run_train_fusion(cfg: &RunConfig, out: &Path) -> Outcome {
    let ds = dataset(cfg)?;
    let mut split = split_dataset(&ds.utterances, cfg.split, cfg.seed)?;
    let mut aid = cfg.aid.clone();
    let use_curriculum = if cfg.binary {
        for part in [&mut split.train, &mut split.dev, &mut split.test] {
            *part = relabel_binary(part, &cfg.reference_accent);
        }
        if aid.classes.is_none() {
            aid.classes = Some(vec![cfg.reference_accent.clone(), ACCENTED_LABEL.to_string()]);
        }
        cfg.binary_curriculum
    } else {
        cfg.curriculum
    };
    let plan = if use_curriculum {
        Some(plan_for(&split.train, &cfg.boundaries)?)
    } else {
        None
    };
    let encoder = match &cfg.aid_encoder {
        Some(p) => Some(FrameEncoder::<f64>::load(p)?),
        None => None,
    };
    let trained = train_fusion(&split.train, &split.dev, &cfg.streams, encoder, plan.as_ref(), &aid)?;
    log::info!("best epoch {} of {}", trained.best_epoch, trained.history.len());
    let model = AidModel::Fusion(trained.model);
    finish_aid_training(cfg, out, &model, &trained.history, &split)
}

fn run_train_ctc(cfg: &RunConfig, out: &Path) -> Outcome {
    let ds = dataset(cfg)?;
    let split = split_dataset(&ds.utterances, cfg.split, cfg.seed)?;
    let accents = cfg
        .ctc_accents
        .clone()
        .unwrap_or_else(|| vec![cfg.reference_accent.clone()]);
    let keep = |v: &[Utterance]| -> Vec<Utterance> {
        v.iter().filter(|u| accents.contains(&u.accent)).cloned().collect()
    };
    let (train, dev) = (keep(&split.train), keep(&split.dev));
    if train.is_empty() {
        return Err(Failure::Runtime(Error::invalid(format!(
            "no train utterances with accents {accents:?}"
        ))));
    }
    let symbols = ds.header.symbol_table()?;
    let trained = train_ctc::<f64>(&train, &dev, &symbols, &cfg.ctc)?;
    log::info!("best epoch {} of {}", trained.best_epoch, trained.history.len());
    trained.model.save(&out.join("model"))?;
    write_json(&out.join("history.json"), &trained.history)?;
    write_split(out, &split)
}

fn run_eval_aid(cfg: &RunConfig, out: &Path) -> Outcome {
    let model = AidModel::load(cfg.model.as_ref().expect("validated"))?;
    let ds = dataset(cfg)?;
    let mut test = subset(cfg, &ds.utterances, Subset::Test)?;
    if model.classes().contains(&ACCENTED_LABEL.to_string()) {
        test = relabel_binary(&test, &cfg.reference_accent);
    }
    let report = evaluate(&model, &test, &cfg.boundaries)?;
    log::info!("accuracy {:.2}% on {} utterances", report.accuracy, report.n);
    Ok(write_json(&out.join("eval.json"), &report)?)
}

fn run_score_aid(cfg: &RunConfig, out: &Path) -> Outcome {
    let model = AidModel::load(cfg.model.as_ref().expect("validated"))?;
    let ds = dataset(cfg)?;
    let utts = subset(cfg, &ds.utterances, Subset::All)?;
    let rows = score_aid(&model, &cfg.reference_accent, &utts)?;
    Ok(write_scores(&out.join("scores.csv"), &rows)?)
}

fn read_hypotheses(path: &Path) -> Outcome<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, hyp) = line.split_once('\t').ok_or_else(|| Error::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected utt_id<TAB>hypothesis".into(),
        })?;
        if map.insert(id.to_string(), hyp.to_string()).is_some() {
            return Err(Failure::Runtime(Error::Manifest {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("duplicate utterance {id}"),
            }));
        }
    }
    Ok(map)
}

fn run_score_asr(cfg: &RunConfig, out: &Path) -> Outcome {
    let ds = dataset(cfg)?;
    let utts = subset(cfg, &ds.utterances, Subset::All)?;
    let rows = if let Some(h) = &cfg.hypotheses {
        score_hypotheses(&utts, &read_hypotheses(h)?)?
    } else {
        let model = CtcModel::<f64>::load(cfg.model.as_ref().expect("validated"))?;
        let (rows, hyps) = score_asr(&model, &utts)?;
        let mut text = String::new();
        for (u, h) in utts.iter().zip(&hyps) {
            text.push_str(&format!("{}\t{}\n", u.utt_id, h));
        }
        let p = out.join("hypotheses.tsv");
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        rows
    };
    Ok(write_scores(&out.join("scores.csv"), &rows)?)
}

fn single_kind(rows: &[ScoreRow], path: &Path) -> Outcome<ScoreKind> {
    let mut kinds: Vec<ScoreKind> = rows.iter().map(|r| r.kind).collect();
    kinds.sort();
    kinds.dedup();
    match kinds.as_slice() {
        [k] => Ok(*k),
        [] => usage(format!("{} has no scores", path.display())),
        _ => usage(format!("{} mixes score kinds", path.display())),
    }
}

fn run_correlate(cfg: &RunConfig, out: &Path) -> Outcome {
    let tables: Vec<Vec<ScoreRow>> = cfg.scores.iter().map(|p| read_scores(p)).collect::<Result<_, _>>()?;
    let ds = match &cfg.manifest {
        Some(_) => Some(dataset(cfg)?),
        None => None,
    };
    let counts: Option<BTreeMap<String, u32>> = ds
        .as_ref()
        .map(|d| d.utterances.iter().map(|u| (u.utt_id.clone(), u.n_words)).collect());
    let filter = match (cfg.min_words, &counts) {
        (Some(m), Some(c)) => Some((m, c)),
        _ => None,
    };
    let result = match cfg.against {
        None => correlate_scores(&tables[0], &tables[1], cfg.statistic, filter)?,
        Some(against) => {
            let kind = single_kind(&tables[0], &cfg.scores[0])?;
            let (stat, used) = speaker_statistic(&tables[0], kind, cfg.statistic, filter)?;
            let ds = ds.expect("validated");
            let values: BTreeMap<String, f64> = ds
                .speakers
                .iter()
                .filter_map(|s| {
                    let v = match against {
                        Against::Human => s.human_score,
                        Against::Severity => s.severity,
                    };
                    v.map(|v| (s.speaker_id.clone(), v))
                })
                .collect();
            let (r, p, n) = correlate_speakers(&stat, &values)?;
            CorrelationResult {
                r,
                p,
                n,
                filter: CorrelationFilter {
                    statistic: cfg.statistic,
                    min_words: cfg.min_words,
                    utterances: used,
                },
            }
        }
    };
    log::info!("r = {:.4}, p = {:.3e}, n = {}", result.r, result.p, result.n);
    Ok(write_json(&out.join("correlation.json"), &result)?)
}

fn run_export(cfg: &RunConfig, out: &Path) -> Outcome {
    let mut rows = Vec::new();
    for p in &cfg.scores {
        rows.extend(read_scores(p)?);
    }
    let human: BTreeMap<String, f64> = match &cfg.manifest {
        Some(_) => dataset(cfg)?
            .speakers
            .iter()
            .filter_map(|s| s.human_score.map(|h| (s.speaker_id.clone(), h)))
            .collect(),
        None => BTreeMap::new(),
    };
    let files = export_report(&rows, &human, out)?;
    log::info!("wrote {} report files", files.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_subcommand_and_flag_exit_one() {
        assert_eq!(run_command(["accentlab", "frobnicate"]), 1);
        assert_eq!(run_command(["accentlab", "synth", "--out", "x", "--bogus"]), 1);
        assert_eq!(run_command(["accentlab", "--help"]), 0);
    }
}
