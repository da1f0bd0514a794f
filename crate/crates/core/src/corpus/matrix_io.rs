//! `EMB1` matrix files: 4-byte magic, `rows: u32 LE`, `cols: u32 LE`, then
//! `rows * cols` little-endian `f32` values in row-major order.

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Real};

pub const MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: usize = 12;

pub fn encode_matrix<T: Real>(m: &Matrix<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for &v in m.as_slice() {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    out
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<(usize, usize)> {
    let bad = |msg: &str| Error::Format {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad("truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("bad magic, expected EMB1"));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    Ok((rows, cols))
}

pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<Matrix<f64>> {
    let (rows, cols) = parse_header(bytes, path)?;
    let payload = &bytes[HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            msg: format!("declared shape {rows}x{cols} overflows"),
        })?;
    if payload.len() != expected {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!(
                "truncated or oversized payload: {rows}x{cols} needs {expected} bytes, found {}",
                payload.len()
            ),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Matrix::from_vec(rows, cols, data)
}

/// Reads an `EMB1` file, promoting values to `f64`.
pub fn read_embedding_matrix(path: impl AsRef<Path>) -> Result<Matrix<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes, path)
}

/// Reads only the `(rows, cols)` header of an `EMB1` file.
pub fn read_matrix_shape(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    let path = path.as_ref();
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = [0u8; HEADER_LEN];
    let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
    parse_header(&buf[..n], path)
}

pub fn write_embedding_matrix<T: Real>(path: impl AsRef<Path>, m: &Matrix<T>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}

/// Rounds every entry to `f32` precision, matching what a file round-trip keeps.
pub fn quantize_f32(m: &Matrix<f64>) -> Matrix<f64> {
    m.map(|v| v as f32 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_value() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("one.emb");
        write_embedding_matrix(&p, &Matrix::from_vec(1, 1, vec![0.5]).unwrap()).unwrap();
        let m = read_embedding_matrix(&p).unwrap();
        assert_eq!(m, Matrix::from_vec(1, 1, vec![0.5]).unwrap());
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"EMB1");
        assert_eq!(&bytes[4..12], &[1, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&bytes[12..], &0.5f32.to_le_bytes());
    }

    #[test]
    fn random_round_trip_is_bit_exact_at_f32() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..7 * 192).map(|_| rng.random_range(-4.0..4.0)).collect();
        let m = Matrix::from_vec(7, 192, data).unwrap();
        let bytes = encode_matrix(&m);
        let back = decode_matrix(&bytes, Path::new("mem")).unwrap();
        for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
            assert_eq!((*a as f32).to_bits(), (*b as f32).to_bits());
        }
        assert_eq!(back, quantize_f32(&m));
    }

    #[test]
    fn truncated_and_bad_magic_rejected() {
        let m = Matrix::from_vec(3, 2, vec![1.0; 6]).unwrap();
        let mut bytes = encode_matrix(&m);
        bytes.truncate(HEADER_LEN + 2 * 2 * 4);
        let err = decode_matrix(&bytes, Path::new("x.emb")).unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");
        let mut bad = encode_matrix(&m);
        bad[0] = b'X';
        assert!(decode_matrix(&bad, Path::new("x.emb")).is_err());
        assert!(decode_matrix(b"EMB", Path::new("x.emb")).is_err());
    }
}
