//! Matrix pair files: generation, JSON serialization, and validation.
//!
//! Matrices are stored as row-major nested arrays of `[re, im]` pairs; the
//! readable format is worth the size at the matrix scales this tool targets.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use specshift::linalg::{unitary_exp, Complex64, ComplexMatrix, HERMITIAN_TOL, UNITARY_TOL};
use specshift::random::{bounded_hermitian, random_hermitian_rank, random_unitary, seeded_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    Unitary,
    Hermitian,
}

impl std::fmt::Display for PairKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PairKind::Unitary => f.write_str("unitary"),
            PairKind::Hermitian => f.write_str("hermitian"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PairError {
    #[error("cannot read pair file: {0}")]
    Io(String),
    #[error("pair file is not valid JSON: {0}")]
    Json(String),
    #[error("matrix `{name}` is {rows}x{cols}, expected {dim}x{dim}")]
    BadShape {
        name: &'static str,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("matrix `{name}` violates the {kind} property: defect {defect:.3e}")]
    KindViolation {
        name: &'static str,
        kind: PairKind,
        defect: f64,
    },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("dimension must be at least 1")]
    BadDimension,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairFile {
    pub dim: usize,
    pub kind: PairKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub meta: BTreeMap<String, serde_json::Value>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<[f64; 2]>>,
}

fn encode(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| [m.at(i, j).re, m.at(i, j).im]).collect())
        .collect()
}

fn decode(name: &'static str, rows: &[Vec<[f64; 2]>], dim: usize) -> Result<ComplexMatrix, PairError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(PairError::BadShape {
            name,
            rows: rows.len(),
            cols: rows.first().map_or(0, |r| r.len()),
            dim,
        });
    }
    let m = ComplexMatrix::from_fn(dim, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
    if !m.is_finite() {
        return Err(PairError::NonFinite);
    }
    Ok(m)
}

impl PairFile {
    pub fn matrices(&self) -> Result<(ComplexMatrix, ComplexMatrix), PairError> {
        if self.dim == 0 {
            return Err(PairError::BadDimension);
        }
        let u = decode("U", &self.u, self.dim)?;
        let v = decode("V", &self.v, self.dim)?;
        for (name, m) in [("U", &u), ("V", &v)] {
            let defect = match self.kind {
                PairKind::Unitary => m.unitarity_defect(),
                PairKind::Hermitian => m.hermiticity_defect(),
            };
            let tol = match self.kind {
                PairKind::Unitary => UNITARY_TOL,
                PairKind::Hermitian => HERMITIAN_TOL,
            };
            if defect > tol {
                return Err(PairError::KindViolation {
                    name,
                    kind: self.kind,
                    defect,
                });
            }
        }
        Ok((u, v))
    }

    pub fn load(path: &Path) -> Result<Self, PairError> {
        let text = std::fs::read_to_string(path).map_err(|e| PairError::Io(e.to_string()))?;
        let pair: PairFile =
            serde_json::from_str(&text).map_err(|e| PairError::Json(e.to_string()))?;
        // Validate on load so downstream code sees only conforming pairs.
        pair.matrices()?;
        Ok(pair)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pair serialization cannot fail")
    }
}

/// Seeded pair generation. Unitary pairs are `V = e^{iA} U` with Haar `U`
/// and a rank-constrained Hermitian generator of operator norm exactly
/// `scale`; Hermitian pairs are `B = A + K` with `A` drawn entrywise from
/// `[-1, 1]` and `K` rank-constrained with norm `scale`.
pub fn generate_pair(
    dim: usize,
    kind: PairKind,
    scale: f64,
    rank: usize,
    seed: u64,
) -> Result<PairFile, String> {
    if dim < 1 {
        return Err("dim must be at least 1".into());
    }
    if !(scale > 0.0) {
        return Err("perturbation scale must be positive".into());
    }
    if rank < 1 || rank > dim {
        return Err(format!("rank must be in 1..={dim}"));
    }
    let mut rng = seeded_rng(seed, 0x9e4a);
    let (first, second) = match kind {
        PairKind::Unitary => {
            let u = random_unitary(dim, &mut rng);
            let a = random_hermitian_rank(dim, rank, scale, &mut rng);
            let v = unitary_exp(&a, 1.0).map_err(|e| e.to_string())?.mul(&u);
            (u, v)
        }
        PairKind::Hermitian => {
            let a = bounded_hermitian(dim, &mut rng);
            let k = random_hermitian_rank(dim, rank, scale, &mut rng);
            (a.clone(), a.add(&k))
        }
    };
    let mut meta = BTreeMap::new();
    meta.insert("generator".to_string(), serde_json::json!("qr-haar"));
    meta.insert("perturbation_scale".to_string(), serde_json::json!(scale));
    meta.insert("rank".to_string(), serde_json::json!(rank));
    Ok(PairFile {
        dim,
        kind,
        seed: Some(seed),
        meta,
        u: encode(&first),
        v: encode(&second),
    })
}
