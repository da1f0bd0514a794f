//! Model archives: a directory holding `model.json` plus one `EMB1` file per
//! weight matrix and bias vector. Parameters are stored in single precision.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{read_embedding_matrix, write_embedding_matrix};
use crate::error::{Error, Result};
use crate::numkit::{Activation, DenseLayer, DenseNet, Matrix, Real};

pub const HEADER_FILE: &str = "model.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub rows: usize,
    pub cols: usize,
    pub activation: Activation,
    pub weight: String,
    pub bias: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub seed: u64,
    pub layers: Vec<LayerSpec>,
}

pub fn save_net<T: Real>(dir: &Path, name: &str, net: &DenseNet<T>) -> Result<NetSpec> {
    let layers = net
        .layers()
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let weight = format!("{name}.{k}.weight.emb");
            let bias = format!("{name}.{k}.bias.emb");
            write_embedding_matrix(dir.join(&weight), &l.weight)?;
            let b = Matrix::from_vec(1, l.bias.len(), l.bias.clone())?;
            write_embedding_matrix(dir.join(&bias), &b)?;
            Ok(LayerSpec {
                rows: l.out_dim(),
                cols: l.in_dim(),
                activation: l.activation,
                weight,
                bias,
            })
        })
        .collect::<Result<_>>()?;
    Ok(NetSpec {
        seed: net.seed(),
        layers,
    })
}

pub fn load_net<T: Real>(dir: &Path, spec: &NetSpec) -> Result<DenseNet<T>> {
    let layers = spec
        .layers
        .iter()
        .map(|l| {
            let w = read_embedding_matrix(dir.join(&l.weight))?;
            let b = read_embedding_matrix(dir.join(&l.bias))?;
            if (w.rows(), w.cols()) != (l.rows, l.cols) {
                return Err(Error::Format {
                    path: dir.join(&l.weight),
                    msg: format!("expected {}x{}, found {}x{}", l.rows, l.cols, w.rows(), w.cols()),
                });
            }
            if b.rows() * b.cols() != l.rows {
                return Err(Error::dims("archived bias", l.rows, b.rows() * b.cols()));
            }
            Ok(DenseLayer {
                weight: w.cast(),
                bias: b.as_slice().iter().map(|&v| T::lit(v)).collect(),
                activation: l.activation,
            })
        })
        .collect::<Result<_>>()?;
    DenseNet::new(layers, spec.seed)
}

pub fn write_header<H: Serialize>(dir: &Path, header: &H) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(HEADER_FILE);
    let text = serde_json::to_string_pretty(header).map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_header<H: DeserializeOwned>(dir: &Path) -> Result<H> {
    let path = dir.join(HEADER_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path,
        msg: e.to_string(),
    })
}

/// The `kind` field of an archive header, for dispatching on model type.
pub fn archive_kind(dir: &Path) -> Result<String> {
    #[derive(Deserialize)]
    struct Kind {
        kind: String,
    }
    Ok(read_header::<Kind>(dir)?.kind)
}
