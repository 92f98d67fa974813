//! Machine-readable run reports.

use serde::Serialize;
use serde_json::Value;

use crate::linalg::{ComplexMatrix, RANK_TOL};
use crate::maxcorr::LAMBDA1_WARN_TOL;
use crate::maxent::{PPT_TOL, RECONSTRUCTION_TOL};

/// Default agreement tolerance between independent routes to the same number.
pub const DEFAULT_AGREEMENT_TOL: f64 = 1e-6;

/// Environment variable overriding [`DEFAULT_AGREEMENT_TOL`].
pub const TOL_ENV: &str = "MAXCORR_TOL";

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Tolerances {
    pub rank_tol: f64,
    pub agreement_tol: f64,
    /// `"default"` or the name of the overriding environment variable.
    pub agreement_tol_source: String,
    pub lambda1_warn_tol: f64,
    pub reconstruction_tol: f64,
    pub ppt_tol: f64,
}

impl Tolerances {
    pub fn with_agreement(agreement_tol: f64, overridden: bool) -> Self {
        Self {
            rank_tol: RANK_TOL,
            agreement_tol,
            agreement_tol_source: if overridden { TOL_ENV.into() } else { "default".into() },
            lambda1_warn_tol: LAMBDA1_WARN_TOL,
            reconstruction_tol: RECONSTRUCTION_TOL,
            ppt_tol: PPT_TOL,
        }
    }

    /// Reads [`TOL_ENV`]; an unparsable or non-positive value is an input error.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var(TOL_ENV) {
            Ok(raw) => match raw.trim().parse::<f64>() {
                Ok(t) if t.is_finite() && t > 0.0 => Ok(Self::with_agreement(t, true)),
                _ => Err(format!("{TOL_ENV}={raw:?} is not a positive number")),
            },
            Err(_) => Ok(Self::with_agreement(DEFAULT_AGREEMENT_TOL, false)),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Violation,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 of the input file bytes.
    pub input_digest: Option<String>,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    pub status: Status,
    pub results: Value,
    pub warnings: Vec<String>,
    /// Excluded from reproducibility comparisons; omitted under `--no-timing`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `[[re, im], ...]` rows, the same layout as state files.
pub fn matrix_json(m: &ComplexMatrix) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|i| {
            Value::Array(
                (0..m.cols())
                    .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}
