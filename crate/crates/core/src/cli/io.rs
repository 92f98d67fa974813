//! State files (JSON) and classical joints (CSV).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::linalg::{ComplexMatrix, C64};
use crate::states::{validate_matrix, BipartiteState, ClassicalJoint, Diagnostics, StateError};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path} is not a valid state: {}", .diagnostics.summary())]
    Validation { path: PathBuf, diagnostics: Box<Diagnostics> },

    #[error("{0}")]
    Invalid(String),
}

impl InputError {
    pub fn diagnostics(&self) -> Option<&Diagnostics> {
        match self {
            InputError::Validation { diagnostics, .. } => Some(diagnostics),
            _ => None,
        }
    }
}

/// On-disk form of a bipartite density matrix: entries are `[re, im]`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: [usize; 2],
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl StateFile {
    pub fn from_state(state: &BipartiteState) -> Self {
        let rho = state.rho();
        let matrix = (0..rho.rows())
            .map(|i| (0..rho.cols()).map(|j| [rho[(i, j)].re, rho[(i, j)].im]).collect())
            .collect();
        Self {
            dims: [state.d_a(), state.d_b()],
            matrix,
        }
    }

    /// Shape checks, then full validation with entry-level diagnostics.
    pub fn into_state(self, path: &Path) -> Result<BipartiteState, InputError> {
        let [da, db] = self.dims;
        let n = da * db;
        let parse = |message: String| InputError::Parse {
            path: path.to_path_buf(),
            message,
        };
        if da == 0 || db == 0 {
            return Err(parse(format!("dims {da}x{db} must be positive")));
        }
        if self.matrix.len() != n {
            return Err(parse(format!("expected {n} rows for dims {da}x{db}, found {}", self.matrix.len())));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in self.matrix.iter().enumerate() {
            if row.len() != n {
                return Err(parse(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            entries.extend(row.iter().map(|&[re, im]| C64::new(re, im)));
        }
        let m = ComplexMatrix::from_row_major(n, n, entries).map_err(|e| parse(e.to_string()))?;
        let diagnostics = validate_matrix(da, db, &m);
        if !diagnostics.is_valid() {
            return Err(InputError::Validation {
                path: path.to_path_buf(),
                diagnostics: Box::new(diagnostics),
            });
        }
        BipartiteState::from_matrix(da, db, m).map_err(|e| match e {
            StateError::Invalid(d) => InputError::Validation {
                path: path.to_path_buf(),
                diagnostics: d,
            },
            other => parse(other.to_string()),
        })
    }
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, InputError> {
    fs::read(path).map_err(|source| InputError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses and validates a state file; also returns the digest of its bytes.
pub fn read_state(path: &Path) -> Result<(BipartiteState, String), InputError> {
    let bytes = read_bytes(path)?;
    let file: StateFile = serde_json::from_slice(&bytes).map_err(|e| InputError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok((file.into_state(path)?, sha256_hex(&bytes)))
}

pub fn write_state(path: &Path, state: &BipartiteState) -> Result<(), InputError> {
    let mut text = serde_json::to_string_pretty(&StateFile::from_state(state)).expect("state serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| InputError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Headerless CSV, one row per outcome of A.
pub fn read_joint(path: &Path) -> Result<(ClassicalJoint, String), InputError> {
    let bytes = read_bytes(path)?;
    let parse = |message: String| InputError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| parse(format!("row {i}: {f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let joint = ClassicalJoint::from_rows(&rows).map_err(|e| parse(e.to_string()))?;
    Ok((joint, sha256_hex(&bytes)))
}

pub fn write_joint(path: &Path, p: &ClassicalJoint) -> Result<(), InputError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for a in 0..p.rows() {
        let row: Vec<String> = (0..p.cols()).map(|b| p.get(a, b).to_string()).collect();
        writer.write_record(&row).expect("in-memory write");
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    fs::write(path, bytes).map_err(|source| InputError::Write {
        path: path.to_path_buf(),
        source,
    })
}
