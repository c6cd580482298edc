//! Embedding and similarity matrices, label lists, and their on-disk formats.
//!
//! Container layout (all integers little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `NEGL` (`4E 45 47 4C`)            |
//! | 4      | 1    | version, currently `1`                  |
//! | 5      | 1    | kind: `0` embeddings, `1` similarities  |
//! | 6      | 1    | dtype: `1` (f32)                        |
//! | 7      | 1    | reserved, `0`                           |
//! | 8      | 4    | rows (u32)                              |
//! | 12     | 4    | dims (u32)                              |
//! | 16     | ...  | `rows * dims` f32 values, row-major     |
//!
//! Label files are UTF-8, one label per line, each line terminated by `\n`.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"NEGL";
pub const FORMAT_VERSION: u8 = 1;
pub const DTYPE_F32: u8 = 1;
pub const HEADER_LEN: usize = 16;

/// Allowed deviation of an embedding row norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-4;
/// Slack on the `[-1, 1]` range of similarity values.
pub const RANGE_SLACK: f32 = 1e-6;

const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("bad magic bytes {0:02X?}, expected \"NEGL\"")]
    BadMagic([u8; 4]),
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown matrix kind byte {0}")]
    BadKind(u8),
    #[error("unsupported dtype byte {0}, only f32 (1) is supported")]
    BadDtype(u8),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("matrix shape {rows}x{dims} is empty")]
    EmptyShape { rows: usize, dims: usize },
    #[error("data length {len} does not match shape {rows}x{dims}")]
    ShapeMismatch {
        rows: usize,
        dims: usize,
        len: usize,
    },
    #[error("shape {rows}x{dims} does not fit the u32 header fields")]
    ShapeOverflow { rows: usize, dims: usize },
    #[error("embedding row {row} has norm {norm}, expected 1")]
    NormViolation { row: usize, norm: f64 },
    #[error("similarity value {value} at ({row}, {col}) is outside [-1, 1]")]
    RangeViolation { row: usize, col: usize, value: f32 },
    #[error("row {0} is the zero vector and cannot be normalized")]
    ZeroRow(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("expected a {expected:?} matrix, got {found:?}")]
    KindMismatch {
        expected: MatrixKind,
        found: MatrixKind,
    },
    #[error("label file is empty")]
    EmptyFile,
    #[error("label file has an empty line at line {0}")]
    EmptyLine(usize),
    #[error("label file starts with a byte-order mark")]
    ByteOrderMark,
    #[error("label file is not valid UTF-8")]
    InvalidUtf8,
    #[error("label {0:?} contains a line feed")]
    LabelHasNewline(String),
}

impl StoreError {
    fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, StoreError::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, StoreError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixKind {
    Embeddings,
    Similarities,
}

impl MatrixKind {
    pub fn to_byte(self) -> u8 {
        match self {
            MatrixKind::Embeddings => 0,
            MatrixKind::Similarities => 1,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(MatrixKind::Embeddings),
            1 => Ok(MatrixKind::Similarities),
            other => Err(StoreError::BadKind(other)),
        }
    }
}

/// Dense row-major f32 matrix with a declared kind.
///
/// Instances are always valid: constructors check the shape and the
/// kind-specific invariant (unit rows for embeddings, `[-1, 1]` values for
/// similarities).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    kind: MatrixKind,
    rows: usize,
    dims: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn new(kind: MatrixKind, rows: usize, dims: usize, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || dims == 0 {
            return Err(StoreError::EmptyShape { rows, dims });
        }
        if rows > u32::MAX as usize || dims > u32::MAX as usize {
            return Err(StoreError::ShapeOverflow { rows, dims });
        }
        if rows.checked_mul(dims) != Some(data.len()) {
            return Err(StoreError::ShapeMismatch {
                rows,
                dims,
                len: data.len(),
            });
        }
        let m = Matrix {
            kind,
            rows,
            dims,
            data,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn embeddings(rows: usize, dims: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(MatrixKind::Embeddings, rows, dims, data)
    }

    pub fn similarities(rows: usize, dims: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(MatrixKind::Similarities, rows, dims, data)
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            MatrixKind::Embeddings => {
                for (i, row) in self.data.chunks_exact(self.dims).enumerate() {
                    let norm = l2_norm(row);
                    if !((1.0 - NORM_TOLERANCE)..=(1.0 + NORM_TOLERANCE)).contains(&norm) {
                        return Err(StoreError::NormViolation { row: i, norm });
                    }
                }
            }
            MatrixKind::Similarities => {
                let lim = 1.0 + RANGE_SLACK;
                if let Some(pos) = self.data.iter().position(|v| !(-lim..=lim).contains(v)) {
                    return Err(StoreError::RangeViolation {
                        row: pos / self.dims,
                        col: pos % self.dims,
                        value: self.data[pos],
                    });
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dims)
    }

    /// Copies the listed rows, in order, into a new matrix of the same kind.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Matrix> {
        let mut data = Vec::with_capacity(indices.len() * self.dims);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix::new(self.kind, indices.len(), self.dims, data)
    }

    pub fn expect_kind(&self, kind: MatrixKind) -> Result<()> {
        if self.kind != kind {
            return Err(StoreError::KindMismatch {
                expected: kind,
                found: self.kind,
            });
        }
        Ok(())
    }

    /// Serializes header and payload into a byte vector.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 4);
        out.extend_from_slice(&MAGIC);
        out.push(FORMAT_VERSION);
        out.push(self.kind.to_byte());
        out.push(DTYPE_F32);
        out.push(0);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.dims as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Matrix> {
        if bytes.len() < 4 {
            let mut got = [0u8; 4];
            got[..bytes.len()].copy_from_slice(bytes);
            return Err(StoreError::BadMagic(got));
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(StoreError::BadMagic(magic));
        }
        if bytes.len() < HEADER_LEN {
            return Err(StoreError::TruncatedPayload {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(StoreError::UnsupportedVersion(bytes[4]));
        }
        let kind = MatrixKind::from_byte(bytes[5])?;
        if bytes[6] != DTYPE_F32 {
            return Err(StoreError::BadDtype(bytes[6]));
        }
        let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let dims = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let payload = &bytes[HEADER_LEN..];
        let expected = rows
            .checked_mul(dims)
            .and_then(|n| n.checked_mul(4))
            .ok_or(StoreError::ShapeOverflow { rows, dims })?;
        if payload.len() < expected {
            return Err(StoreError::TruncatedPayload {
                expected,
                found: payload.len(),
            });
        }
        if payload.len() > expected {
            return Err(StoreError::TrailingBytes(payload.len() - expected));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Matrix::new(kind, rows, dims, data)
    }
}

fn l2_norm(row: &[f32]) -> f64 {
    row.iter()
        .map(|&v| {
            let v = v as f64;
            v * v
        })
        .sum::<f64>()
        .sqrt()
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| StoreError::io(path, e))?;
    Matrix::from_bytes(&bytes)
}

pub fn save_matrix(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, m.to_bytes()).map_err(|e| StoreError::io(path, e))
}

/// Ordered, non-empty list of labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(StoreError::EmptyFile);
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(StoreError::EmptyLine(i + 1));
            }
            if l.contains('\n') {
                return Err(StoreError::LabelHasNewline(l.clone()));
            }
        }
        Ok(LabelSet { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.labels.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.labels
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.labels.iter().map(|l| l.len() + 1).sum());
        for l in &self.labels {
            s.push_str(l);
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text.starts_with('\u{feff}') {
            return Err(StoreError::ByteOrderMark);
        }
        if text.is_empty() {
            return Err(StoreError::EmptyFile);
        }
        // A missing final terminator is tolerated.
        let body = text.strip_suffix('\n').unwrap_or(text);
        let labels: Vec<String> = body.split('\n').map(str::to_owned).collect();
        Self::new(labels)
    }
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| StoreError::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|_| StoreError::InvalidUtf8)?;
    LabelSet::parse(&text)
}

pub fn save_labels(labels: &LabelSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| StoreError::io(path, e))?;
    f.write_all(labels.to_text().as_bytes())
        .map_err(|e| StoreError::io(path, e))
}

/// Scales each row to unit L2 norm, producing an embeddings matrix.
pub fn normalize_rows(rows: usize, dims: usize, data: &[f32]) -> Result<Matrix> {
    if rows == 0 || dims == 0 {
        return Err(StoreError::EmptyShape { rows, dims });
    }
    if rows.checked_mul(dims) != Some(data.len()) {
        return Err(StoreError::ShapeMismatch {
            rows,
            dims,
            len: data.len(),
        });
    }
    let mut out = Vec::with_capacity(data.len());
    for (i, row) in data.chunks_exact(dims).enumerate() {
        let norm = l2_norm(row);
        if norm.is_nan() || norm <= ZERO_NORM {
            return Err(StoreError::ZeroRow(i));
        }
        out.extend(row.iter().map(|&v| (v as f64 / norm) as f32));
    }
    Matrix::embeddings(rows, dims, out)
}

/// Dot product with f64 accumulation in ascending index order.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        acc += *x as f64 * *y as f64;
    }
    acc
}

/// Cosine of two unit rows, rounded to f32 and clamped to `[-1, 1]`.
#[inline]
pub fn cosine(a: &[f32], b: &[f32]) -> f32 {
    (dot(a, b) as f32).clamp(-1.0, 1.0)
}

/// Fills `out` (length `b.rows()`) with the cosines of `a_row` against every row of `b`.
pub fn cosine_row_into(a_row: &[f32], b: &Matrix, out: &mut [f32]) {
    for (o, b_row) in out.iter_mut().zip(b.row_iter()) {
        *o = cosine(a_row, b_row);
    }
}

/// All pairwise cosines between the rows of `a` and the rows of `b`.
///
/// Rows of the output are computed in parallel; each entry is a sequential
/// reduction, so the result does not depend on the worker count.
pub fn cosine_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.expect_kind(MatrixKind::Embeddings)?;
    b.expect_kind(MatrixKind::Embeddings)?;
    if a.dims != b.dims {
        return Err(StoreError::DimMismatch {
            left: a.dims,
            right: b.dims,
        });
    }
    let mut data = vec![0.0f32; a.rows * b.rows];
    data.par_chunks_mut(b.rows)
        .zip(a.data.par_chunks_exact(a.dims))
        .for_each(|(out, a_row)| cosine_row_into(a_row, b, out));
    Matrix::similarities(a.rows, b.rows, data)
}
