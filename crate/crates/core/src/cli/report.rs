use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::assess::{correlate_scores, rank_speakers, speaker_aggregate, ScoreKind, ScoreRow, Statistic};
use crate::error::{Error, Result};

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

/// Box statistics per speaker, one row per speaker in rank order.
pub fn write_box_csv(path: &Path, rows: &[ScoreRow], kind: ScoreKind) -> Result<()> {
    let summaries = speaker_aggregate(rows, kind);
    let by_id: BTreeMap<&str, _> = summaries.iter().map(|s| (s.speaker_id.as_str(), s)).collect();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec![
        "rank", "speaker_id", "n", "mean", "median", "q1", "q3", "whisker_low", "whisker_high", "outliers",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    header.extend((1..10).map(|k| format!("p{}", k * 10)));
    w.write_record(&header).map_err(csv_err(path))?;
    for r in rank_speakers(&summaries, kind) {
        let s = by_id[r.speaker_id.as_str()];
        let mut rec = vec![
            r.rank.to_string(),
            s.speaker_id.clone(),
            s.n.to_string(),
            s.mean.to_string(),
            s.median.to_string(),
            s.q1.to_string(),
            s.q3.to_string(),
            s.whisker_low.to_string(),
            s.whisker_high.to_string(),
            join(&s.outliers),
        ];
        rec.extend(s.deciles.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `speaker_id,aid_median,cer_median,human_score`, one row per speaker seen in
/// any table, empty cells where a value is unavailable.
pub fn write_scatter_csv(path: &Path, rows: &[ScoreRow], human: &BTreeMap<String, f64>) -> Result<()> {
    let median = |kind| -> BTreeMap<String, f64> {
        speaker_aggregate(rows, kind)
            .into_iter()
            .map(|s| (s.speaker_id, s.median))
            .collect()
    };
    let aid = median(ScoreKind::AidLogSoftmax);
    let cer = median(ScoreKind::Cer);
    let speakers: BTreeSet<&String> = aid.keys().chain(cer.keys()).collect();
    let cell = |m: &BTreeMap<String, f64>, s: &String| m.get(s).map(f64::to_string).unwrap_or_default();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["speaker_id", "aid_median", "cer_median", "human_score"])
        .map_err(csv_err(path))?;
    for s in speakers {
        w.write_record([s.clone(), cell(&aid, s), cell(&cer, s), cell(human, s)])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `box_{kind}.csv` for each score kind present, `scatter.csv`, and
/// `correlation.json` (AID against CER medians) when both kinds are present
/// for at least three speakers. Returns the files written.
pub fn export_report(rows: &[ScoreRow], human: &BTreeMap<String, f64>, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let kinds: BTreeSet<ScoreKind> = rows.iter().map(|r| r.kind).collect();
    if kinds.is_empty() {
        return Err(Error::invalid("no scores to export"));
    }
    let mut written = Vec::new();
    for &k in &kinds {
        let p = out.join(format!("box_{}.csv", k.name()));
        write_box_csv(&p, rows, k)?;
        written.push(p);
    }
    let p = out.join("scatter.csv");
    write_scatter_csv(&p, rows, human)?;
    written.push(p);
    if kinds.len() == 2 {
        let (aid, cer): (Vec<ScoreRow>, Vec<ScoreRow>) =
            rows.iter().cloned().partition(|r| r.kind == ScoreKind::AidLogSoftmax);
        match correlate_scores(&aid, &cer, Statistic::Median, None) {
            Ok(c) => {
                let p = out.join("correlation.json");
                write_json(&p, &c)?;
                written.push(p);
            }
            Err(e) => log::warn!("skipping correlation: {e}"),
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<ScoreRow> {
        let mut v = Vec::new();
        for s in 0..4 {
            for u in 0..5 {
                let x = (s * 5 + u) as f64 / 40.0;
                v.push(ScoreRow {
                    utt_id: format!("s{s}-u{u}"),
                    speaker_id: format!("s{s}"),
                    kind: ScoreKind::Cer,
                    value: x,
                });
                v.push(ScoreRow {
                    utt_id: format!("s{s}-u{u}"),
                    speaker_id: format!("s{s}"),
                    kind: ScoreKind::AidLogSoftmax,
                    value: -x * x,
                });
            }
        }
        v
    }

    #[test]
    fn report_files() {
        let dir = tempfile::tempdir().unwrap();
        let human: BTreeMap<String, f64> = [("s1".to_string(), 7.5)].into();
        let files = export_report(&rows(), &human, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        let box_cer = std::fs::read_to_string(dir.path().join("box_cer.csv")).unwrap();
        assert_eq!(box_cer.lines().count(), 1 + 4);
        assert!(box_cer.lines().nth(1).unwrap().starts_with("1,s0,5,"));
        let scatter = std::fs::read_to_string(dir.path().join("scatter.csv")).unwrap();
        let mut lines = scatter.lines();
        assert_eq!(lines.next().unwrap(), "speaker_id,aid_median,cer_median,human_score");
        let x = 7.0 / 40.0;
        assert_eq!(lines.nth(1).unwrap(), format!("s1,{},{x},7.5", -x * x));
        assert!(lines.next().unwrap().ends_with(','));
        let again = tempfile::tempdir().unwrap();
        export_report(&rows(), &human, again.path()).unwrap();
        for f in &files {
            let name = f.file_name().unwrap();
            assert_eq!(std::fs::read(f).unwrap(), std::fs::read(again.path().join(name)).unwrap());
        }
    }
}
