//! CMX1 binary matrix format.
//!
//! Layout: the 8-byte magic `CMXv0001`, `rows` and `cols` as little-endian
//! `u64`, then `rows * cols` entries in row-major order, each stored as two
//! little-endian `f64` (real part, imaginary part).

use std::path::Path;

use super::{ComplexMatrix, C64};
use crate::{persist, Error, Result};

pub const CMX_MAGIC: &[u8; 8] = b"CMXv0001";
const HEADER_LEN: usize = 24;

pub fn encode_cmx(m: &ComplexMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * m.as_slice().len());
    out.extend_from_slice(CMX_MAGIC);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for z in m.as_slice() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode_cmx(bytes: &[u8]) -> std::result::Result<ComplexMatrix, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if &bytes[..8] != CMX_MAGIC {
        return Err("bad magic, expected CMXv0001".into());
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let rows = usize::try_from(word(8)).map_err(|_| "row count overflows usize".to_string())?;
    let cols = usize::try_from(word(16)).map_err(|_| "column count overflows usize".to_string())?;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| format!("shape {rows}x{cols} too large"))?;
    if bytes.len() != expected {
        return Err(format!(
            "payload length {} does not match shape {rows}x{cols}",
            bytes.len() - HEADER_LEN
        ));
    }
    let float = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let data = (0..rows * cols)
        .map(|k| {
            let at = HEADER_LEN + 16 * k;
            C64::new(float(at), float(at + 8))
        })
        .collect();
    ComplexMatrix::new(rows, cols, data).map_err(|e| e.to_string())
}

pub fn write_cmx(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    persist::write_atomic(path.as_ref(), &encode_cmx(m))
}

pub fn read_cmx(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cmx(&bytes).map_err(|message| Error::Format { path: path.to_path_buf(), message })
}
