//! JSON file formats for algebras, metrics, lattices and morphisms.
//! Rationals are written as `"p/q"` strings.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, LieAlgebra, Metric, MetricError};
use crate::group::{Lattice, LatticeError};
use crate::linalg::QMat;
use crate::morphisms::{Morphism, MorphismError};
use crate::rational::{format_rational, parse_rational, serde_q, zeros};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{context}: line {line}, column {column}: {message}")]
    Json { context: String, line: usize, column: usize, message: String },
    #[error("{field}: invalid rational '{value}'")]
    Rational { field: String, value: String },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    /// Coefficient of basis vector `k` in `[b_i, b_j]`.
    pub coeffs: BTreeMap<usize, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub dim: usize,
    pub labels: Vec<String>,
    pub brackets: Vec<BracketEntry>,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFile {
    /// Rows are orthonormal vectors in the structural basis.
    #[serde(with = "serde_q::matrix")]
    pub frame: QMat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeFile {
    pub algebra_ref: String,
    #[serde(default)]
    pub names: Vec<String>,
    #[serde(with = "serde_q::matrix")]
    pub generators: QMat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphismFile {
    pub source: String,
    pub target: String,
    /// Rows are images of basis vectors.
    #[serde(with = "serde_q::matrix")]
    pub matrix: QMat,
}

fn json_error(context: &str, e: serde_json::Error) -> IoError {
    IoError::Json { context: context.to_string(), line: e.line(), column: e.column(), message: e.to_string() }
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(context: &str, text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| json_error(context, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| IoError::Read { path: path.display().to_string(), source })?;
    parse_json(&path.display().to_string(), &text)
}

impl AlgebraFile {
    pub fn from_algebra(l: &LieAlgebra) -> Self {
        let brackets = l
            .bracket_list()
            .into_iter()
            .map(|(i, j, v)| BracketEntry {
                i,
                j,
                coeffs: v
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != crate::rational::qi(0))
                    .map(|(k, c)| (k, format_rational(c)))
                    .collect(),
            })
            .collect();
        Self { dim: l.dim(), labels: l.labels().to_vec(), brackets, step: l.declared_step() }
    }

    /// Builds the tensor; unlisted opposite orders are filled in
    /// antisymmetrically, listed ones are kept as given so that
    /// structure checks can flag them.
    pub fn to_algebra(&self) -> Result<LieAlgebra, IoError> {
        let n = self.dim;
        if self.labels.len() != n {
            return Err(IoError::Field {
                field: "labels".into(),
                message: format!("expected {n} labels, got {}", self.labels.len()),
            });
        }
        let mut c = vec![vec![zeros(n); n]; n];
        let mut given = vec![vec![false; n]; n];
        for (idx, b) in self.brackets.iter().enumerate() {
            if b.i >= n || b.j >= n {
                return Err(IoError::Field {
                    field: format!("brackets[{idx}]"),
                    message: format!("index out of range for dim {n}"),
                });
            }
            let mut v = zeros(n);
            for (&k, s) in &b.coeffs {
                if k >= n {
                    return Err(IoError::Field {
                        field: format!("brackets[{idx}].coeffs"),
                        message: format!("basis index {k} out of range"),
                    });
                }
                v[k] = parse_rational(s).map_err(|_| IoError::Rational {
                    field: format!("brackets[{idx}].coeffs.{k}"),
                    value: s.clone(),
                })?;
            }
            c[b.i][b.j] = v;
            given[b.i][b.j] = true;
        }
        for i in 0..n {
            for j in 0..n {
                if given[i][j] && !given[j][i] {
                    c[j][i] = c[i][j].iter().map(|x| -x).collect();
                }
            }
        }
        Ok(LieAlgebra::from_tensor(self.labels.clone(), c, self.step)?)
    }
}

impl MetricFile {
    pub fn to_metric(&self) -> Result<Metric, IoError> {
        Ok(Metric::from_frame(self.frame.clone())?)
    }
}

impl LatticeFile {
    pub fn from_lattice(lat: &Lattice, algebra_ref: &str) -> Self {
        Self { algebra_ref: algebra_ref.to_string(), names: lat.names().to_vec(), generators: lat.generator_logs().clone() }
    }

    pub fn to_lattice(&self, algebra: Arc<LieAlgebra>) -> Result<Lattice, IoError> {
        Ok(Lattice::new(algebra, self.names.clone(), self.generators.clone())?)
    }
}

impl MorphismFile {
    pub fn to_morphism(&self, algebra: Arc<LieAlgebra>) -> Result<Morphism, IoError> {
        Ok(Morphism::new(algebra, self.matrix.clone())?)
    }
}
