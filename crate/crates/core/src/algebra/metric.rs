use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg::{self, QMat};
use crate::rational::{QVec, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("frame matrix is not square of size {0}")]
    Shape(usize),
    #[error("frame matrix is singular")]
    Singular,
    #[error("Gram matrix is not symmetric positive definite")]
    NotPositiveDefinite,
}

/// Left-invariant metric, stored as the exact Gram matrix on the structural
/// basis. When the metric was declared by an orthonormal frame, the frame is
/// kept as well.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    gram: QMat,
    frame: Option<QMat>,
}

impl Metric {
    /// The structural basis is orthonormal.
    pub fn identity(n: usize) -> Self {
        Self { gram: linalg::identity(n), frame: Some(linalg::identity(n)) }
    }

    /// Rows of `frame` are declared orthonormal (structural coordinates).
    pub fn from_frame(frame: QMat) -> Result<Self, MetricError> {
        let n = frame.len();
        if frame.iter().any(|r| r.len() != n) {
            return Err(MetricError::Shape(n));
        }
        let inv = linalg::inverse(&frame).ok_or(MetricError::Singular)?;
        // u = a F with a the frame coefficients, so <u,v> = u F⁻¹ F⁻ᵀ vᵀ
        let gram = linalg::mat_mul(&inv, &linalg::transpose(&inv));
        Ok(Self { gram, frame: Some(frame) })
    }

    pub fn from_gram(gram: QMat) -> Result<Self, MetricError> {
        let n = gram.len();
        if gram.iter().any(|r| r.len() != n) {
            return Err(MetricError::Shape(n));
        }
        if linalg::transpose(&gram) != gram || !is_positive_definite(&gram) {
            return Err(MetricError::NotPositiveDefinite);
        }
        Ok(Self { gram, frame: None })
    }

    pub(crate) fn with_frame(gram: QMat, frame: Option<QMat>) -> Self {
        Self { gram, frame }
    }

    pub fn dim(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &QMat {
        &self.gram
    }

    pub fn frame(&self) -> Option<&QMat> {
        self.frame.as_ref()
    }

    pub fn inner(&self, u: &[Rational], v: &[Rational]) -> Rational {
        linalg::dot(u, &linalg::mat_vec(&self.gram, v))
    }

    pub fn norm_sq(&self, u: &[Rational]) -> Rational {
        self.inner(u, u)
    }

    /// Orthogonal projection of `v` onto the span of the orthogonal family `basis`.
    pub fn project_onto_orthogonal(&self, v: &[Rational], basis: &[QVec]) -> QVec {
        let mut out = vec![Rational::zero(); v.len()];
        for b in basis {
            let c = self.inner(v, b) / self.norm_sq(b);
            out = linalg::axpy(&out, &c, b);
        }
        out
    }

    /// Exact Gram–Schmidt of `candidates` against `against` (both orthogonal
    /// output), dropping dependent vectors. Processing order is input order.
    pub fn gram_schmidt(&self, candidates: &[QVec], against: &[QVec]) -> QMat {
        let mut done: QMat = against.to_vec();
        let mut out = Vec::new();
        for c in candidates {
            let p = self.project_onto_orthogonal(c, &done);
            let r = linalg::sub(c, &p);
            if r.iter().any(|x| !x.is_zero()) {
                done.push(r.clone());
                out.push(r);
            }
        }
        out
    }

    /// Orthogonal projection onto an arbitrary subspace given by any basis.
    pub fn project_onto(&self, v: &[Rational], subspace: &[QVec]) -> QVec {
        let orth = self.gram_schmidt(subspace, &[]);
        self.project_onto_orthogonal(v, &orth)
    }
}

/// Sylvester's criterion via exact Gaussian elimination pivots.
fn is_positive_definite(g: &QMat) -> bool {
    let n = g.len();
    let mut m = g.clone();
    for k in 0..n {
        if !m[k][k].is_positive() {
            return false;
        }
        let inv = Rational::one() / m[k][k];
        for i in (k + 1)..n {
            let f = m[i][k] * inv;
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let d = f * m[k][j];
                m[i][j] -= d;
            }
        }
    }
    true
}
