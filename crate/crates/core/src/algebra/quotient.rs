use num_traits::{One, Zero};

use super::{AlgebraError, LieAlgebra, Metric};
use crate::linalg::{self, QMat};
use crate::rational::{unit, QVec, Rational};

/// Central quotient `ḡ = g / g⁽ᵏ⁻¹⁾` with its submersion data.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientData {
    pub algebra: LieAlgebra,
    pub metric: Metric,
    /// `n̄ × n`: `log π(x) = proj · log x`.
    pub proj: QMat,
    /// Structural indices kept as the quotient basis.
    pub kept: Vec<usize>,
    /// Basis of the kernel `g⁽ᵏ⁻¹⁾`.
    pub kernel: QMat,
    /// Horizontal lifts `h_i` of the quotient basis vectors (⊥ kernel).
    pub lifts: QMat,
}

impl QuotientData {
    pub fn project(&self, v: &[Rational]) -> QVec {
        linalg::mat_vec(&self.proj, v)
    }

    /// Unique vector orthogonal to the kernel projecting to `v̄`.
    pub fn horizontal_lift(&self, vbar: &[Rational]) -> QVec {
        linalg::vec_mat(vbar, &self.lifts, self.proj[0].len())
    }

    /// Induced map on `ḡ` of a linear map `m` (rows are images of basis
    /// vectors) that preserves the kernel; `None` if it does not.
    pub fn induced_map(&self, m: &[QVec]) -> Option<QMat> {
        for k in &self.kernel {
            let img = linalg::vec_mat(k, m, k.len());
            if !linalg::in_span(&self.kernel, &img) {
                return None;
            }
        }
        Some(self.kept.iter().map(|&i| self.project(&m[i])).collect())
    }
}

/// Quotient by the last nonzero term of the derived series.
pub fn quotient_algebra(l: &LieAlgebra, m: &Metric) -> Result<QuotientData, AlgebraError> {
    let f = l.derived_series();
    if f.step < 2 {
        return Err(AlgebraError::StepTooSmall(f.step));
    }
    let n = l.dim();
    let kernel = f.last();
    // greedy structural vectors independent modulo the kernel
    let mut kept = Vec::new();
    let mut span = kernel.clone();
    for i in 0..n {
        let mut trial = span.clone();
        trial.push(unit(n, i));
        if linalg::rank(&trial) > span.len() {
            span.push(unit(n, i));
            kept.push(i);
        }
    }
    let nb = kept.len();
    // columns: kept basis vectors then kernel basis; inverse gives coordinates
    let mut cols: QMat = kept.iter().map(|&i| unit(n, i)).collect();
    cols.extend(kernel.iter().cloned());
    let inv = linalg::inverse(&linalg::transpose(&cols)).expect("complement basis");
    let proj: QMat = inv[..nb].to_vec();

    let labels = kept.iter().map(|&i| format!("{}bar", l.labels()[i])).collect();
    let mut brackets = Vec::new();
    for a in 0..nb {
        for b in (a + 1)..nb {
            let v = linalg::mat_vec(&proj, l.basis_bracket(kept[a], kept[b]));
            if v.iter().any(|x| !x.is_zero()) {
                brackets.push((a, b, v));
            }
        }
    }
    let qalg = LieAlgebra::from_brackets(labels, &brackets, f.step - 1)?;

    let korth = m.gram_schmidt(&kernel, &[]);
    let lifts: QMat = kept
        .iter()
        .map(|&i| {
            let b = unit(n, i);
            linalg::sub(&b, &m.project_onto_orthogonal(&b, &korth))
        })
        .collect();
    let gram: QMat =
        lifts.iter().map(|u| lifts.iter().map(|v| m.inner(u, v)).collect()).collect();
    let frame = m.frame().and_then(|fr| {
        let projected: QMat = fr
            .iter()
            .map(|e| linalg::mat_vec(&proj, e))
            .filter(|v| v.iter().any(|x| !x.is_zero()))
            .collect();
        if projected.len() != nb {
            return None;
        }
        let ip = |u: &QVec, v: &QVec| linalg::dot(u, &linalg::mat_vec(&gram, v));
        let orthonormal = projected.iter().enumerate().all(|(i, u)| {
            projected.iter().enumerate().all(|(j, v)| {
                let want = if i == j { Rational::one() } else { Rational::zero() };
                ip(u, v) == want
            })
        });
        orthonormal.then_some(projected)
    });
    Ok(QuotientData {
        algebra: qalg,
        metric: Metric::with_frame(gram, frame),
        proj,
        kept,
        kernel,
        lifts,
    })
}
