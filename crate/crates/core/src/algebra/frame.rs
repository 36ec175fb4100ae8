use num_traits::Zero;
use serde::Serialize;

use super::{AlgebraError, LieAlgebra, Metric};
use crate::linalg::QMat;
use crate::rational::{rational_sqrt, to_f64, unit, QVec, Rational};

/// Orthonormal frame `X ∪ Z ∪ W` adapted to `g = ν ⊕ ζ ⊕ g⁽²⁾`.
///
/// The frame is stored exactly as an orthogonal (unnormalized) rational
/// basis together with squared norms; the structure constants `Â, B̂, Ĉ` of
/// that orthogonal basis are exact. Normalized constants follow from
/// `A_ij^k = Â_ij^k √(|ζ_k|² / (|ν_i|² |ν_j|²))` and the analogous formulas,
/// and are exact rationals whenever every squared norm is a rational square.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFrame {
    pub nu: QMat,
    pub zeta: QMat,
    pub top: QMat,
    pub nu_norms: QVec,
    pub zeta_norms: QVec,
    pub top_norms: QVec,
    a_hat: Vec<Rational>,
    b_hat: Vec<Rational>,
    c_hat: Vec<Rational>,
}

/// Normalized constants and frame vectors in floating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameConstants {
    pub j: usize,
    pub k: usize,
    pub t: usize,
    /// `a[(i*j + l)*k + h] = A_il^h`
    pub a: Vec<f64>,
    /// `b[(i*j + l)*t + s] = B_il^s`
    pub b: Vec<f64>,
    /// `c[(i*k + h)*t + s] = C_ih^s`
    pub c: Vec<f64>,
    /// Orthonormal frame vectors (order `X, Z, W`) in structural coordinates.
    pub basis: Vec<Vec<f64>>,
}

impl FrameConstants {
    pub fn dim(&self) -> usize {
        self.j + self.k + self.t
    }
    pub fn a(&self, i: usize, l: usize, h: usize) -> f64 {
        self.a[(i * self.j + l) * self.k + h]
    }
    pub fn b(&self, i: usize, l: usize, s: usize) -> f64 {
        self.b[(i * self.j + l) * self.t + s]
    }
    pub fn c(&self, i: usize, h: usize, s: usize) -> f64 {
        self.c[(i * self.k + h) * self.t + s]
    }
}

/// Exact normalized data, available when all squared norms are squares.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactFrame {
    pub basis: QMat,
    pub a: Vec<Rational>,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
}

impl AdaptedFrame {
    pub fn new(l: &LieAlgebra, m: &Metric) -> Result<Self, AlgebraError> {
        if m.dim() != l.dim() {
            return Err(AlgebraError::DimensionMismatch { expected: l.dim(), got: m.dim() });
        }
        let f = l.derived_series();
        if f.step > 3 {
            return Err(AlgebraError::UnsupportedStep(f.step));
        }
        let n = l.dim();
        let g1 = f.term(1);
        let g2 = f.term(2);
        let top = m.gram_schmidt(&g2, &[]);
        let zeta = m.gram_schmidt(&g1, &top);
        let mut upper = top.clone();
        upper.extend(zeta.iter().cloned());
        let units: QMat = (0..n).map(|i| unit(n, i)).collect();
        let nu = m.gram_schmidt(&units, &upper);
        let norms = |v: &QMat| v.iter().map(|x| m.norm_sq(x)).collect::<QVec>();
        let (nu_norms, zeta_norms, top_norms) = (norms(&nu), norms(&zeta), norms(&top));
        let (jd, kd, td) = (nu.len(), zeta.len(), top.len());
        let coeff = |v: &QVec, u: &QVec, nu2: &Rational| m.inner(v, u) / nu2;

        let mut a_hat = vec![Rational::zero(); jd * jd * kd];
        let mut b_hat = vec![Rational::zero(); jd * jd * td];
        for i in 0..jd {
            for jj in 0..jd {
                let br = l.bracket(&nu[i], &nu[jj]);
                for h in 0..kd {
                    a_hat[(i * jd + jj) * kd + h] = coeff(&br, &zeta[h], &zeta_norms[h]);
                }
                for s in 0..td {
                    b_hat[(i * jd + jj) * td + s] = coeff(&br, &top[s], &top_norms[s]);
                }
            }
        }
        let mut c_hat = vec![Rational::zero(); jd * kd * td];
        for i in 0..jd {
            for h in 0..kd {
                let br = l.bracket(&nu[i], &zeta[h]);
                for s in 0..td {
                    c_hat[(i * kd + h) * td + s] = coeff(&br, &top[s], &top_norms[s]);
                }
            }
        }
        Ok(Self { nu, zeta, top, nu_norms, zeta_norms, top_norms, a_hat, b_hat, c_hat })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nu.len(), self.zeta.len(), self.top.len())
    }

    pub fn a_hat(&self, i: usize, l: usize, h: usize) -> Rational {
        let (j, k, _) = self.dims();
        self.a_hat[(i * j + l) * k + h]
    }

    pub fn b_hat(&self, i: usize, l: usize, s: usize) -> Rational {
        let (j, _, t) = self.dims();
        self.b_hat[(i * j + l) * t + s]
    }

    pub fn c_hat(&self, i: usize, h: usize, s: usize) -> Rational {
        let (_, k, t) = self.dims();
        self.c_hat[(i * k + h) * t + s]
    }

    fn all_norms(&self) -> impl Iterator<Item = &Rational> {
        self.nu_norms.iter().chain(&self.zeta_norms).chain(&self.top_norms)
    }

    /// Orthogonal basis in frame order `ν, ζ, g⁽²⁾`.
    pub fn orthogonal_basis(&self) -> QMat {
        self.nu.iter().chain(&self.zeta).chain(&self.top).cloned().collect()
    }

    pub fn constants(&self) -> FrameConstants {
        let (j, k, t) = self.dims();
        let s = |x: &Rational| to_f64(x).sqrt();
        let nu: Vec<f64> = self.nu_norms.iter().map(s).collect();
        let ze: Vec<f64> = self.zeta_norms.iter().map(s).collect();
        let to: Vec<f64> = self.top_norms.iter().map(s).collect();
        let mut a = vec![0.0; j * j * k];
        let mut b = vec![0.0; j * j * t];
        let mut c = vec![0.0; j * k * t];
        for i in 0..j {
            for l in 0..j {
                for h in 0..k {
                    a[(i * j + l) * k + h] = to_f64(&self.a_hat(i, l, h)) * ze[h] / (nu[i] * nu[l]);
                }
                for r in 0..t {
                    b[(i * j + l) * t + r] = to_f64(&self.b_hat(i, l, r)) * to[r] / (nu[i] * nu[l]);
                }
            }
            for h in 0..k {
                for r in 0..t {
                    c[(i * k + h) * t + r] = to_f64(&self.c_hat(i, h, r)) * to[r] / (nu[i] * ze[h]);
                }
            }
        }
        let norms: Vec<f64> = nu.iter().chain(&ze).chain(&to).copied().collect();
        let basis = self
            .orthogonal_basis()
            .iter()
            .zip(&norms)
            .map(|(v, nv)| v.iter().map(|x| to_f64(x) / nv).collect())
            .collect();
        FrameConstants { j, k, t, a, b, c, basis }
    }

    /// Exact normalized frame and constants when every squared norm is a square.
    pub fn exact(&self) -> Option<ExactFrame> {
        let roots: Option<Vec<Rational>> = self.all_norms().map(rational_sqrt).collect();
        let roots = roots?;
        let (j, k, t) = self.dims();
        let (rn, rz, rt) = (&roots[..j], &roots[j..j + k], &roots[j + k..]);
        let mut a = vec![Rational::zero(); j * j * k];
        let mut b = vec![Rational::zero(); j * j * t];
        let mut c = vec![Rational::zero(); j * k * t];
        for i in 0..j {
            for l in 0..j {
                for h in 0..k {
                    a[(i * j + l) * k + h] = self.a_hat(i, l, h) * rz[h] / (rn[i] * rn[l]);
                }
                for r in 0..t {
                    b[(i * j + l) * t + r] = self.b_hat(i, l, r) * rt[r] / (rn[i] * rn[l]);
                }
            }
            for h in 0..k {
                for r in 0..t {
                    c[(i * k + h) * t + r] = self.c_hat(i, h, r) * rt[r] / (rn[i] * rz[h]);
                }
            }
        }
        let basis = self
            .orthogonal_basis()
            .iter()
            .zip(&roots)
            .map(|(v, r)| v.iter().map(|x| x / r).collect())
            .collect();
        Some(ExactFrame { basis, a, b, c })
    }

    /// Exact invariant checks; returns a description of each failure.
    pub fn check_invariants(&self, l: &LieAlgebra, m: &Metric) -> Vec<String> {
        let mut bad = Vec::new();
        let basis = self.orthogonal_basis();
        for (i, u) in basis.iter().enumerate() {
            for (jj, v) in basis.iter().enumerate().take(i) {
                if !m.inner(u, v).is_zero() {
                    bad.push(format!("frame vectors {jj} and {i} not orthogonal"));
                }
            }
        }
        if basis.len() != l.dim() {
            bad.push("frame does not span g".into());
        }
        let f = l.derived_series();
        let g1 = f.term(1);
        for (i, x) in self.nu.iter().enumerate() {
            if g1.iter().any(|g| !m.inner(x, g).is_zero()) {
                bad.push(format!("nu_{i} not orthogonal to g1"));
            }
        }
        let (j, k, t) = self.dims();
        for i in 0..j {
            for jj in 0..j {
                for h in 0..k {
                    if self.a_hat(i, jj, h) != -self.a_hat(jj, i, h) {
                        bad.push(format!("A not antisymmetric at ({i},{jj},{h})"));
                    }
                }
                for s in 0..t {
                    if self.b_hat(i, jj, s) != -self.b_hat(jj, i, s) {
                        bad.push(format!("B not antisymmetric at ({i},{jj},{s})"));
                    }
                }
            }
        }
        for a in 0..k {
            for b in 0..k {
                if l.bracket(&self.zeta[a], &self.zeta[b]).iter().any(|x| !x.is_zero()) {
                    bad.push(format!("[Z_{a}, Z_{b}] != 0"));
                }
            }
        }
        for i in 0..j {
            for jj in 0..j {
                for ll in 0..j {
                    for s in 0..t {
                        let mut sum = Rational::zero();
                        for h in 0..k {
                            sum += self.a_hat(jj, ll, h) * self.c_hat(i, h, s)
                                + self.a_hat(i, jj, h) * self.c_hat(ll, h, s)
                                + self.a_hat(ll, i, h) * self.c_hat(jj, h, s);
                        }
                        if !sum.is_zero() {
                            bad.push(format!("Jacobi relation fails at ({i},{jj},{ll},{s})"));
                        }
                    }
                }
            }
        }
        bad
    }
}
