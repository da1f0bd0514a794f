//! JSON Lines manifest. Line 1 is a [`ManifestHeader`]; every following line
//! is a [`ManifestEntry`] whose file references are relative to the
//! manifest's directory.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{
    read_embedding_matrix, read_matrix_shape, speakers_of, write_embedding_matrix, EmbeddingSet,
    SpeakerRecord, Stream, Utterance,
};
use crate::ctc::{SymbolTable, DEFAULT_ALPHABET};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub version: u32,
    pub d_lid: usize,
    pub d_sid: usize,
    pub d_aid: usize,
    pub feat_dim: usize,
    pub symbols: String,
}

impl Default for ManifestHeader {
    fn default() -> Self {
        Self {
            version: MANIFEST_VERSION,
            d_lid: 192,
            d_sid: 192,
            d_aid: 192,
            feat_dim: 80,
            symbols: DEFAULT_ALPHABET.to_string(),
        }
    }
}

impl ManifestHeader {
    pub fn dim(&self, stream: Stream) -> usize {
        match stream {
            Stream::Lid => self.d_lid,
            Stream::Sid => self.d_sid,
            Stream::Aid => self.d_aid,
        }
    }

    pub fn symbol_table(&self) -> Result<SymbolTable> {
        SymbolTable::from_alphabet(&self.symbols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub utt_id: String,
    pub speaker_id: String,
    pub accent: String,
    pub n_words: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<f64>,
}

impl ManifestEntry {
    fn stream_path(&self, stream: Stream) -> Option<&str> {
        match stream {
            Stream::Lid => self.lid.as_deref(),
            Stream::Sid => self.sid.as_deref(),
            Stream::Aid => self.aid.as_deref(),
        }
    }
}

/// A validated manifest. Matrix payloads are only read by
/// [`Manifest::load_dataset`]; validation touches file headers alone.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub path: PathBuf,
    pub header: ManifestHeader,
    /// `(line number, entry)`, 1-based line numbers.
    pub entries: Vec<(usize, ManifestEntry)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: ManifestHeader,
    pub utterances: Vec<Utterance>,
    pub speakers: Vec<SpeakerRecord>,
}

fn line_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Parses and validates a manifest. A zero-byte file is an empty dataset
/// with the default header.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().unwrap_or(Path::new("."));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let header = match lines.by_ref().find(|(_, l)| !l.trim().is_empty()) {
        None => ManifestHeader::default(),
        Some((n, l)) => {
            let h: ManifestHeader = serde_json::from_str(l)
                .map_err(|e| line_err(path, n, format!("bad header: {e}")))?;
            if h.version != MANIFEST_VERSION {
                return Err(line_err(path, n, format!("unsupported version {}", h.version)));
            }
            h
        }
    };
    let symbols = header
        .symbol_table()
        .map_err(|e| line_err(path, 1, e.to_string()))?;

    let mut seen = BTreeSet::new();
    let mut entries = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let e: ManifestEntry =
            serde_json::from_str(line).map_err(|err| line_err(path, n, err.to_string()))?;
        if !seen.insert(e.utt_id.clone()) {
            return Err(line_err(path, n, format!("duplicate utt_id {}", e.utt_id)));
        }
        if e.n_words == 0 {
            return Err(line_err(path, n, format!("{}: n_words must be >= 1", e.utt_id)));
        }
        if let Some(t) = &e.transcript {
            symbols
                .encode(t)
                .map_err(|err| line_err(path, n, format!("{}: {err}", e.utt_id)))?;
        }
        if let Some(h) = e.human_score {
            if !(1.0..=9.0).contains(&h) {
                return Err(line_err(path, n, format!("{}: human_score {h} outside [1, 9]", e.utt_id)));
            }
        }
        let has_embedding = Stream::ALL.iter().any(|&s| e.stream_path(s).is_some());
        if e.features.is_none() && !has_embedding {
            return Err(line_err(path, n, format!("{}: neither features nor embeddings", e.utt_id)));
        }
        for s in Stream::ALL {
            if let Some(p) = e.stream_path(s) {
                let (rows, cols) = read_matrix_shape(root.join(p))
                    .map_err(|err| line_err(path, n, format!("{}: {err}", e.utt_id)))?;
                let want = header.dim(s);
                if rows != 1 || cols != want {
                    return Err(line_err(
                        path,
                        n,
                        format!(
                            "{}: {} embedding is {rows}x{cols}, header declares 1x{want}",
                            e.utt_id,
                            s.name()
                        ),
                    ));
                }
            }
        }
        if let Some(p) = &e.features {
            let (rows, cols) = read_matrix_shape(root.join(p))
                .map_err(|err| line_err(path, n, format!("{}: {err}", e.utt_id)))?;
            if rows == 0 || cols != header.feat_dim {
                return Err(line_err(
                    path,
                    n,
                    format!(
                        "{}: features are {rows}x{cols}, header declares feat_dim {}",
                        e.utt_id, header.feat_dim
                    ),
                ));
            }
        }
        entries.push((n, e));
    }
    Ok(Manifest {
        path: path.to_path_buf(),
        header,
        entries,
    })
}

impl Manifest {
    fn root(&self) -> &Path {
        self.path.parent().unwrap_or(Path::new("."))
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.root().join(rel)
    }

    /// Reads every referenced matrix.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let utterances = self
            .entries
            .iter()
            .map(|(n, e)| self.load_entry(*n, e))
            .collect::<Result<Vec<_>>>()?;
        let speakers = speakers_of(&utterances);
        Ok(Dataset {
            header: self.header.clone(),
            utterances,
            speakers,
        })
    }

    fn load_entry(&self, line: usize, e: &ManifestEntry) -> Result<Utterance> {
        let wrap = |err: Error| line_err(&self.path, line, format!("{}: {err}", e.utt_id));
        let mut embeddings = EmbeddingSet::default();
        for s in Stream::ALL {
            if let Some(p) = e.stream_path(s) {
                let m = read_embedding_matrix(self.resolve(p)).map_err(wrap)?;
                embeddings.set(s, m.into_vec());
            }
        }
        let features = match &e.features {
            Some(p) => Some(read_embedding_matrix(self.resolve(p)).map_err(wrap)?),
            None => None,
        };
        Ok(Utterance {
            utt_id: e.utt_id.clone(),
            speaker_id: e.speaker_id.clone(),
            accent: e.accent.clone(),
            n_words: e.n_words,
            transcript: e.transcript.as_deref().map(crate::ctc::normalize_text),
            features,
            embeddings,
            human_score: e.human_score,
            severity: e.severity,
        })
    }
}

fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!("utt_id {id:?} is not filename-safe")))
    }
}

/// Writes `manifest.jsonl` plus one `EMB1` file per matrix under `dir/data/`.
/// Returns the manifest path.
pub fn write_manifest(dir: &Path, header: &ManifestHeader, utts: &[Utterance]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest_path = dir.join("manifest.jsonl");
    let file = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(&manifest_path, e);
    writeln!(w, "{}", to_line(header)?).map_err(io)?;
    let mut seen = BTreeSet::new();
    for u in utts {
        check_id(&u.utt_id)?;
        if !seen.insert(u.utt_id.as_str()) {
            return Err(Error::invalid(format!("duplicate utt_id {}", u.utt_id)));
        }
        let mut entry = ManifestEntry {
            utt_id: u.utt_id.clone(),
            speaker_id: u.speaker_id.clone(),
            accent: u.accent.clone(),
            n_words: u.n_words,
            transcript: u.transcript.clone(),
            features: None,
            lid: None,
            sid: None,
            aid: None,
            human_score: u.human_score,
            severity: u.severity,
        };
        for s in Stream::ALL {
            if let Some(v) = u.embeddings.get(s) {
                if v.len() != header.dim(s) {
                    return Err(Error::invalid(format!(
                        "{}: {} embedding has {} dims, header declares {}",
                        u.utt_id,
                        s.name(),
                        v.len(),
                        header.dim(s)
                    )));
                }
                let rel = format!("data/{}.{}.emb", u.utt_id, s.name());
                let m = crate::numkit::Matrix::from_vec(1, v.len(), v.to_vec())?;
                write_embedding_matrix(dir.join(&rel), &m)?;
                match s {
                    Stream::Lid => entry.lid = Some(rel),
                    Stream::Sid => entry.sid = Some(rel),
                    Stream::Aid => entry.aid = Some(rel),
                }
            }
        }
        if let Some(f) = &u.features {
            if f.cols() != header.feat_dim {
                return Err(Error::dims("feature width", header.feat_dim, f.cols()));
            }
            let rel = format!("data/{}.feat.emb", u.utt_id);
            write_embedding_matrix(dir.join(&rel), f)?;
            entry.features = Some(rel);
        }
        writeln!(w, "{}", to_line(&entry)?).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(manifest_path)
}

fn to_line<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Matrix;

    fn utt(id: &str, dims: usize) -> Utterance {
        Utterance {
            utt_id: id.into(),
            speaker_id: "spk1".into(),
            accent: "en-US".into(),
            n_words: 2,
            transcript: Some("hi there".into()),
            features: Some(Matrix::from_vec(2, 3, vec![0.5, 1.0, -1.0, 2.0, 0.25, 0.0]).unwrap()),
            embeddings: EmbeddingSet {
                lid: Some(vec![0.5; dims]),
                sid: Some(vec![-0.5; dims]),
                aid: None,
            },
            human_score: Some(7.5),
            severity: Some(0.0),
        }
    }

    fn header(d: usize) -> ManifestHeader {
        ManifestHeader {
            d_lid: d,
            d_sid: d,
            d_aid: d,
            feat_dim: 3,
            ..ManifestHeader::default()
        }
    }

    #[test]
    fn empty_manifest_is_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        fs::write(&p, "").unwrap();
        let ds = load_manifest(&p).unwrap().load_dataset().unwrap();
        assert!(ds.utterances.is_empty());
        let p2 = write_manifest(&dir.path().join("h"), &header(4), &[]).unwrap();
        let ds = load_manifest(&p2).unwrap().load_dataset().unwrap();
        assert!(ds.utterances.is_empty());
        assert_eq!(ds.header, header(4));
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let utts = vec![utt("a1", 4), utt("a2", 4)];
        let p = write_manifest(dir.path(), &header(4), &utts).unwrap();
        let ds = load_manifest(&p).unwrap().load_dataset().unwrap();
        assert_eq!(ds.utterances, utts);
        assert_eq!(ds.speakers.len(), 1);
        assert_eq!(ds.speakers[0].human_score, Some(7.5));
    }

    #[test]
    fn wrong_embedding_length_names_utterance() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(dir.path(), &header(4), &[utt("good", 4)]).unwrap();
        let bad = dir.path().join("data/good.lid.emb");
        write_embedding_matrix(&bad, &Matrix::<f64>::zeros(1, 5)).unwrap();
        let err = load_manifest(&p).unwrap_err().to_string();
        assert!(err.contains("good") && err.contains(":2:"), "{err}");
    }

    #[test]
    fn duplicate_and_missing_rejected_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(dir.path(), &header(4), &[utt("x", 4)]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let dup_line = text.lines().nth(1).unwrap().to_string();
        fs::write(&p, format!("{text}{dup_line}\n")).unwrap();
        let err = load_manifest(&p).unwrap_err().to_string();
        assert!(err.contains(":3:") && err.contains("duplicate"), "{err}");

        let p = write_manifest(dir.path(), &header(4), &[utt("y", 4)]).unwrap();
        fs::remove_file(dir.path().join("data/y.sid.emb")).unwrap();
        let err = load_manifest(&p).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("y"), "{err}");
    }

    #[test]
    fn out_of_alphabet_transcript_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut u = utt("z", 4);
        u.transcript = Some("caf\u{e9}".into());
        let p = write_manifest(dir.path(), &header(4), &[u]).unwrap();
        assert!(load_manifest(&p).is_err());
    }
}
