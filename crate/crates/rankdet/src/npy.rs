//! Minimal NPY v1.0 reader/writer for little-endian float arrays.
//!
//! Supported subset: magic `\x93NUMPY`, version (1, 0), a padded
//! ASCII header dict with `descr` of `<f8` (or `<f4`, promoted to
//! f64 on load), `fortran_order: False`, and a 1-D, 2-D, or 3-D
//! shape. 3-D arrays are stacks of equally shaped matrices. Writing
//! always emits `<f8` C-order with the header padded to a multiple of
//! 64 bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const MAGIC: &[u8; 6] = b"\x93NUMPY";

/// A single matrix or a stacked batch, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum NpyArray {
    /// 2-D array `(rows, cols)`; 1-D input `(n,)` loads as `1 x n`.
    Single(Matrix),
    /// 3-D array `(batch, rows, cols)`. May be empty (batch of 0);
    /// the row/col dims are kept alongside.
    Batch {
        rows: usize,
        cols: usize,
        items: Vec<Matrix>,
    },
}

impl NpyArray {
    pub fn into_matrices(self) -> Vec<Matrix> {
        match self {
            NpyArray::Single(m) => vec![m],
            NpyArray::Batch { items, .. } => items,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            NpyArray::Single(_) => 1,
            NpyArray::Batch { items, .. } => items.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: message.into(),
    }
}

/// Parses NPY bytes under the supported subset.
pub fn parse_npy(bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 {
        return Err(format_err(0, "file shorter than the 10-byte preamble"));
    }
    if &bytes[..6] != MAGIC {
        return Err(format_err(0, "bad magic; expected \\x93NUMPY"));
    }
    if bytes[6] != 1 || bytes[7] != 0 {
        return Err(format_err(
            6,
            format!("unsupported version ({}, {}); only (1, 0)", bytes[6], bytes[7]),
        ));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = 10 + header_len;
    if bytes.len() < data_start {
        return Err(format_err(10, "declared header runs past end of file"));
    }
    let header = std::str::from_utf8(&bytes[10..data_start])
        .map_err(|_| format_err(10, "header is not ASCII"))?;

    let descr = extract_str_field(header, "descr").ok_or_else(|| {
        format_err(10, "header missing 'descr'")
    })?;
    let item_size = match descr.as_str() {
        "<f8" => 8,
        "<f4" => 4,
        other => {
            return Err(format_err(
                10,
                format!("unsupported descr '{other}'; need '<f8' or '<f4'"),
            ))
        }
    };
    match extract_bool_field(header, "fortran_order") {
        Some(false) => {}
        Some(true) => {
            return Err(format_err(10, "fortran_order True is not supported"));
        }
        None => return Err(format_err(10, "header missing 'fortran_order'")),
    }
    let shape = extract_shape(header).ok_or_else(|| format_err(10, "header missing 'shape'"))?;

    let (batch, rows, cols) = match shape.as_slice() {
        [n] => (None, 1, *n),
        [r, c] => (None, *r, *c),
        [b, r, c] => (Some(*b), *r, *c),
        other => {
            return Err(format_err(
                10,
                format!("unsupported rank {} shape", other.len()),
            ))
        }
    };
    let per_matrix = rows
        .checked_mul(cols)
        .ok_or_else(|| format_err(10, "shape overflow"))?;
    let total = per_matrix
        .checked_mul(batch.unwrap_or(1))
        .ok_or_else(|| format_err(10, "shape overflow"))?;
    let expected_bytes = total * item_size;
    let payload = &bytes[data_start..];
    if payload.len() != expected_bytes {
        return Err(format_err(
            data_start,
            format!(
                "payload is {} bytes, shape needs {expected_bytes}",
                payload.len()
            ),
        ));
    }

    let mut values = Vec::with_capacity(total);
    for i in 0..total {
        let off = i * item_size;
        let v = if item_size == 8 {
            f64::from_le_bytes(payload[off..off + 8].try_into().unwrap())
        } else {
            f32::from_le_bytes(payload[off..off + 4].try_into().unwrap()) as f64
        };
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite payload value {v} at element {i}"
            )));
        }
        values.push(v);
    }

    match batch {
        None => {
            if rows == 0 || cols == 0 {
                return Err(format_err(10, "2-D arrays must be nonempty"));
            }
            Ok(NpyArray::Single(Matrix::from_vec(rows, cols, values)?))
        }
        Some(b) => {
            let mut items = Vec::with_capacity(b);
            if b > 0 && (rows == 0 || cols == 0) {
                return Err(format_err(10, "batch items must be nonempty"));
            }
            for k in 0..b {
                let slice = values[k * per_matrix..(k + 1) * per_matrix].to_vec();
                items.push(Matrix::from_vec(rows, cols, slice)?);
            }
            Ok(NpyArray::Batch { rows, cols, items })
        }
    }
}

/// Reads an NPY file from disk.
pub fn read_npy(path: impl AsRef<Path>) -> Result<NpyArray> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_npy(&bytes)
}

/// Serializes to NPY v1.0 `<f8` C-order bytes with the header padded
/// with spaces to a multiple of 64, ending in a newline.
pub fn to_npy_bytes(array: &NpyArray) -> Vec<u8> {
    let (shape_str, data): (String, Vec<&Matrix>) = match array {
        NpyArray::Single(m) => (format!("({}, {})", m.rows(), m.cols()), vec![m]),
        NpyArray::Batch { rows, cols, items } => (
            format!("({}, {}, {})", items.len(), rows, cols),
            items.iter().collect(),
        ),
    };
    let mut header = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': {shape_str}, }}"
    );
    // Pad so the total preamble (magic + version + length + header) is
    // a multiple of 64, with a trailing newline.
    let base = 10 + header.len() + 1;
    let padding = (64 - base % 64) % 64;
    header.extend(std::iter::repeat(' ').take(padding));
    header.push('\n');

    let mut out = Vec::with_capacity(10 + header.len());
    out.extend_from_slice(MAGIC);
    out.push(1);
    out.push(0);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for m in data {
        for &v in m.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Writes an NPY file to disk.
pub fn write_npy(array: &NpyArray, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_npy_bytes(array)).map_err(|e| Error::io(path.display().to_string(), e))
}

fn extract_str_field(header: &str, key: &str) -> Option<String> {
    let pat = format!("'{key}':");
    let idx = header.find(&pat)? + pat.len();
    let rest = header[idx..].trim_start();
    let rest = rest.strip_prefix('\'')?;
    let end = rest.find('\'')?;
    Some(rest[..end].to_string())
}

fn extract_bool_field(header: &str, key: &str) -> Option<bool> {
    let pat = format!("'{key}':");
    let idx = header.find(&pat)? + pat.len();
    let rest = header[idx..].trim_start();
    if rest.starts_with("False") {
        Some(false)
    } else if rest.starts_with("True") {
        Some(true)
    } else {
        None
    }
}

fn extract_shape(header: &str) -> Option<Vec<usize>> {
    let pat = "'shape':";
    let idx = header.find(pat)? + pat.len();
    let rest = header[idx..].trim_start();
    let rest = rest.strip_prefix('(')?;
    let end = rest.find(')')?;
    let inner = &rest[..end];
    let mut dims = Vec::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        dims.push(part.parse::<usize>().ok()?);
    }
    if dims.is_empty() {
        return None;
    }
    Some(dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_single() {
        let m = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let bytes = to_npy_bytes(&NpyArray::Single(m.clone()));
        assert_eq!(bytes.len() % 64, 6 * 8);
        let parsed = parse_npy(&bytes).unwrap();
        assert_eq!(parsed, NpyArray::Single(m));
    }

    #[test]
    fn hand_built_2x2_file() {
        // Assembled directly from the format rules.
        let header = {
            let mut h =
                String::from("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }");
            let base = 10 + h.len() + 1;
            let pad = (64 - base % 64) % 64;
            h.extend(std::iter::repeat(' ').take(pad));
            h.push('\n');
            h
        };
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"\x93NUMPY");
        bytes.push(1);
        bytes.push(0);
        bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
        bytes.extend_from_slice(header.as_bytes());
        for v in [1.0f64, 2.0, 3.0, 4.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let parsed = parse_npy(&bytes).unwrap();
        let expect = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(parsed, NpyArray::Single(expect));
    }

    #[test]
    fn f4_is_promoted() {
        let header = {
            let mut h =
                String::from("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 2), }");
            let base = 10 + h.len() + 1;
            let pad = (64 - base % 64) % 64;
            h.extend(std::iter::repeat(' ').take(pad));
            h.push('\n');
            h
        };
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"\x93NUMPY");
        bytes.push(1);
        bytes.push(0);
        bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
        bytes.extend_from_slice(header.as_bytes());
        for v in [1.5f32, -2.25] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let parsed = parse_npy(&bytes).unwrap();
        let expect = Matrix::from_vec(1, 2, vec![1.5, -2.25]).unwrap();
        assert_eq!(parsed, NpyArray::Single(expect));
    }

    #[test]
    fn batch_round_trip_and_empty_batch() {
        let items = vec![
            Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            Matrix::from_vec(2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap(),
            Matrix::from_vec(2, 2, vec![9.0, 10.0, 11.0, 12.0]).unwrap(),
        ];
        let batch = NpyArray::Batch {
            rows: 2,
            cols: 2,
            items,
        };
        let bytes = to_npy_bytes(&batch);
        assert!(std::str::from_utf8(&bytes[10..bytes.len() - 96])
            .unwrap()
            .contains("(3, 2, 2)"));
        assert_eq!(parse_npy(&bytes).unwrap(), batch);

        let empty = NpyArray::Batch {
            rows: 4,
            cols: 6,
            items: vec![],
        };
        let bytes = to_npy_bytes(&empty);
        let parsed = parse_npy(&bytes).unwrap();
        assert_eq!(parsed.len(), 0);
    }

    #[test]
    fn error_paths() {
        let m = Matrix::from_vec(1, 1, vec![0.0]).unwrap();
        let good = to_npy_bytes(&NpyArray::Single(m));
        // Truncated payload.
        let truncated = &good[..good.len() - 4];
        assert!(matches!(parse_npy(truncated), Err(Error::Format { .. })));
        // Bad magic.
        let mut bad = good.clone();
        bad[0] = 0x00;
        assert!(matches!(parse_npy(&bad), Err(Error::Format { offset: 0, .. })));
        // Bad version.
        let mut bad = good.clone();
        bad[6] = 2;
        assert!(matches!(parse_npy(&bad), Err(Error::Format { offset: 6, .. })));
        // fortran_order True.
        let header = {
            let mut h =
                String::from("{'descr': '<f8', 'fortran_order': True, 'shape': (1, 1), }");
            let base = 10 + h.len() + 1;
            let pad = (64 - base % 64) % 64;
            h.extend(std::iter::repeat(' ').take(pad));
            h.push('\n');
            h
        };
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"\x93NUMPY");
        bytes.push(1);
        bytes.push(0);
        bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
        bytes.extend_from_slice(header.as_bytes());
        bytes.extend_from_slice(&0f64.to_le_bytes());
        assert!(matches!(parse_npy(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_npy("/nonexistent/path.npy"),
            Err(Error::Io { .. })
        ));
    }
}
