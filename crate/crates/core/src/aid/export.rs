use std::fs;
use std::path::Path;

use crate::aid::FusionModel;
use crate::corpus::{write_embedding_matrix, Utterance};
use crate::error::{Error, Result};
use crate::numkit::{Matrix, Real};

/// Writes one `EMB1` file per model stream (`{stream}.emb`), the last hidden
/// layer as `fused.emb`, and `labels.csv` with one row per utterance in the
/// same order.
pub fn export_embeddings<T: Real>(model: &FusionModel<T>, utts: &[Utterance], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, rows: Vec<Vec<T>>, width: usize| -> Result<()> {
        let m = if rows.is_empty() {
            Matrix::zeros(0, width)
        } else {
            Matrix::from_rows(&rows)?
        };
        write_embedding_matrix(dir.join(format!("{name}.emb")), &m)
    };
    for (&s, &d) in model.streams().iter().zip(model.dims()) {
        let rows = utts.iter().map(|u| model.stream_vector(u, s)).collect::<Result<_>>()?;
        write(s.name(), rows, d)?;
    }
    let hidden = model.net.layers()[model.net.layers().len() - 1].in_dim();
    let rows = utts.iter().map(|u| model.fused_embedding(u)).collect::<Result<_>>()?;
    write("fused", rows, hidden)?;

    let path = dir.join("labels.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| Error::invalid(format!("{}: {e}", path.display()));
    w.write_record(["row", "utt_id", "speaker_id", "accent"]).map_err(csv_err)?;
    for (i, u) in utts.iter().enumerate() {
        w.write_record([i.to_string().as_str(), &u.utt_id, &u.speaker_id, &u.accent])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}
