//! Channel specification files: JSON schema, validation, canonical hashing.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gbc_core::linalg::{sym_eigen, PsdMat, SymMat};
use gbc_core::mat::Mat;
use gbc_core::{ChannelPair, PsdMatrix};

/// On-disk schema. `version` is required and must currently be 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelSpecFile {
    pub version: u32,
    pub t: usize,
    pub g1: Vec<Vec<f64>>,
    pub g2: Vec<Vec<f64>>,
    pub k: Vec<Vec<f64>>,
}

pub struct ValidatedSpec {
    pub channel: ChannelPair,
    pub k: PsdMatrix,
    pub t: usize,
    /// SHA-256 of the canonicalized spec (hex).
    pub hash: String,
}

#[derive(Debug)]
pub struct SpecError(pub String);

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "spec validation failed: {}", self.0)
    }
}

fn matrix_from(rows: &[Vec<f64>], t: usize, name: &str) -> Result<Mat<f64>, SpecError> {
    if rows.len() != t || rows.iter().any(|r| r.len() != t) {
        return Err(SpecError(format!("{name} must be a {t}x{t} matrix")));
    }
    Mat::from_rows(rows).map_err(|e| SpecError(format!("{name}: {e}")))
}

impl ChannelSpecFile {
    pub fn validate(&self) -> Result<ValidatedSpec, SpecError> {
        if self.version != 1 {
            return Err(SpecError(format!(
                "unsupported schema version {} (expected 1)",
                self.version
            )));
        }
        if self.t == 0 {
            return Err(SpecError("t must be at least 1".into()));
        }
        let g1 = matrix_from(&self.g1, self.t, "g1")?;
        let g2 = matrix_from(&self.g2, self.t, "g2")?;
        let k_mat = matrix_from(&self.k, self.t, "k")?;

        let channel = ChannelPair::new(g1, g2).map_err(|e| SpecError(e.to_string()))?;

        let k_sym = SymMat::new(k_mat).map_err(|e| SpecError(e.to_string()))?;
        let min_eig = sym_eigen(&k_sym)
            .map_err(|e| SpecError(e.to_string()))?
            .min();
        let k = PsdMat::new(k_sym)
            .map_err(|_| SpecError(format!("k not PSD (min eigenvalue {min_eig:e})")))?;

        Ok(ValidatedSpec {
            channel,
            k,
            t: self.t,
            hash: self.canonical_hash(),
        })
    }

    /// Hash of the canonical serialization: fixed field order, shortest
    /// round-trip numerals, no whitespace. Reformatting the file on disk
    /// does not change the hash; changing any value does.
    pub fn canonical_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("spec serializes");
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load(path: &std::path::Path) -> Result<ValidatedSpec, SpecError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SpecError(format!("cannot read {}: {e}", path.display())))?;
    let file: ChannelSpecFile =
        serde_json::from_str(&text).map_err(|e| SpecError(format!("malformed spec: {e}")))?;
    file.validate()
}

/// Parses a bare matrix file (`[[...], ...]`) into a PSD matrix.
pub fn load_psd(path: &std::path::Path, t: usize, name: &str) -> Result<PsdMatrix, SpecError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SpecError(format!("cannot read {}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(&text).map_err(|e| SpecError(format!("malformed {name}: {e}")))?;
    let m = matrix_from(&rows, t, name)?;
    let s = SymMat::new(m).map_err(|e| SpecError(format!("{name}: {e}")))?;
    PsdMat::new(s).map_err(|e| SpecError(format!("{name}: {e}")))
}
