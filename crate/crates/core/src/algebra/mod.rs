//! Exact Lie algebra kernel: structure constants, brackets, derived series,
//! center, strict nonsingularity, metrics, adapted frames and central quotients.

mod frame;
mod metric;
mod quotient;

pub use frame::{AdaptedFrame, FrameConstants};
pub use metric::{Metric, MetricError};
pub use quotient::{quotient_algebra, QuotientData};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, QMat};
use crate::rational::{q, to_f64, unit, zeros, QVec, Rational, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("invalid Lie algebra: {0}")]
    Invalid(String),
    #[error("step {0} not supported (need step <= 3)")]
    UnsupportedStep(usize),
    #[error("quotient requires step >= 2, got {0}")]
    StepTooSmall(usize),
}

/// One nonzero structure constant `c[i][j][k]` with its float image.
#[derive(Debug, Clone, PartialEq)]
struct Entry {
    i: usize,
    j: usize,
    k: usize,
    exact: Rational,
    approx: f64,
}

/// Finite-dimensional real Lie algebra given by exact structure constants.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    labels: Vec<String>,
    declared_step: usize,
    /// `table[i * dim + j]` is `[b_i, b_j]` as read from the tensor.
    table: Vec<QVec>,
    entries: Vec<Entry>,
}

impl LieAlgebra {
    /// Builds from a list of brackets `[b_i, b_j] = v` with `i != j`; the
    /// opposite order is filled in antisymmetrically.
    pub fn from_brackets(
        labels: Vec<String>,
        brackets: &[(usize, usize, QVec)],
        declared_step: usize,
    ) -> Result<Self, AlgebraError> {
        let n = labels.len();
        let mut c = vec![vec![zeros(n); n]; n];
        for (i, j, v) in brackets {
            if *i >= n || *j >= n {
                return Err(AlgebraError::IndexOutOfRange((*i).max(*j)));
            }
            if v.len() != n {
                return Err(AlgebraError::DimensionMismatch { expected: n, got: v.len() });
            }
            c[*i][*j] = v.clone();
            c[*j][*i] = v.iter().map(|x| -x).collect();
        }
        Self::from_tensor(labels, c, declared_step)
    }

    /// Builds from a raw tensor `c[i][j][k]` without enforcing antisymmetry;
    /// use [`check_structure`](Self::check_structure) to validate.
    pub fn from_tensor(
        labels: Vec<String>,
        c: Vec<Vec<QVec>>,
        declared_step: usize,
    ) -> Result<Self, AlgebraError> {
        let n = labels.len();
        if c.len() != n {
            return Err(AlgebraError::DimensionMismatch { expected: n, got: c.len() });
        }
        let mut table = Vec::with_capacity(n * n);
        let mut entries = Vec::new();
        for (i, row) in c.into_iter().enumerate() {
            if row.len() != n {
                return Err(AlgebraError::DimensionMismatch { expected: n, got: row.len() });
            }
            for (j, v) in row.into_iter().enumerate() {
                if v.len() != n {
                    return Err(AlgebraError::DimensionMismatch { expected: n, got: v.len() });
                }
                for (k, x) in v.iter().enumerate() {
                    if !x.is_zero() {
                        entries.push(Entry { i, j, k, exact: *x, approx: to_f64(x) });
                    }
                }
                table.push(v);
            }
        }
        Ok(Self { dim: n, labels, declared_step, table, entries })
    }

    /// Abelian algebra of dimension `n`.
    pub fn abelian(n: usize) -> Self {
        let labels = (1..=n).map(|i| format!("e{i}")).collect();
        Self::from_brackets(labels, &[], if n == 0 { 0 } else { 1 }).expect("abelian")
    }

    /// Direct sum with an abelian algebra of dimension `extra`.
    pub fn direct_sum_abelian(&self, extra: usize) -> Self {
        let n = self.dim + extra;
        let mut labels = self.labels.clone();
        labels.extend((1..=extra).map(|i| format!("R{i}")));
        let mut c = vec![vec![zeros(n); n]; n];
        for e in &self.entries {
            c[e.i][e.j][e.k] = e.exact;
        }
        Self::from_tensor(labels, c, self.declared_step).expect("direct sum")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn declared_step(&self) -> usize {
        self.declared_step
    }

    /// Structure constants `(i, j, [b_i, b_j])` with `i < j` and nonzero bracket.
    pub fn bracket_list(&self) -> Vec<(usize, usize, QVec)> {
        let n = self.dim;
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = &self.table[i * n + j];
                if v.iter().any(|x| !x.is_zero()) {
                    out.push((i, j, v.clone()));
                }
            }
        }
        out
    }

    pub fn basis_bracket(&self, i: usize, j: usize) -> &QVec {
        &self.table[i * self.dim + j]
    }

    pub fn basis_vector(&self, i: usize) -> QVec {
        unit(self.dim, i)
    }

    /// Index of a basis label.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `[x, y]`, bilinear in the structure constants.
    pub fn bracket<T: Scalar>(&self, x: &[T], y: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        let mut out = vec![T::zero(); self.dim];
        for e in &self.entries {
            let (a, b) = (&x[e.i], &y[e.j]);
            if a.is_exact_zero() || b.is_exact_zero() {
                continue;
            }
            let c = T::from_constant(&e.exact, e.approx);
            out[e.k] = out[e.k].clone() + a.clone() * b.clone() * c;
        }
        out
    }

    /// Checked bracket.
    pub fn try_bracket(&self, x: &[Rational], y: &[Rational]) -> Result<QVec, AlgebraError> {
        for v in [x, y] {
            if v.len() != self.dim {
                return Err(AlgebraError::DimensionMismatch { expected: self.dim, got: v.len() });
            }
        }
        Ok(self.bracket(x, y))
    }

    /// Images `[x, b_i]` for every basis vector; they span `ad(x)(g)`.
    pub fn ad_images<T: Scalar>(&self, x: &[T]) -> Vec<Vec<T>> {
        (0..self.dim)
            .map(|i| {
                let mut b = vec![T::zero(); self.dim];
                b[i] = T::one();
                self.bracket(x, &b)
            })
            .collect()
    }

    /// Reports every antisymmetry and Jacobi violation, and a step mismatch.
    pub fn check_structure(&self) -> StructureReport {
        let n = self.dim;
        let mut report = StructureReport::default();
        for i in 0..n {
            for j in 0..n {
                let a = &self.table[i * n + j];
                let b = &self.table[j * n + i];
                for k in 0..n {
                    if a[k] != -b[k] && i <= j {
                        report.antisymmetry.push((i, j, k));
                    }
                }
            }
        }
        let raw = |x: &QVec, y: &QVec| -> QVec {
            let mut out = zeros(n);
            for (a, xa) in x.iter().enumerate() {
                if xa.is_zero() {
                    continue;
                }
                for (b, yb) in y.iter().enumerate() {
                    if yb.is_zero() {
                        continue;
                    }
                    for (o, c) in out.iter_mut().zip(&self.table[a * n + b]) {
                        if !c.is_zero() {
                            *o += xa * yb * c;
                        }
                    }
                }
            }
            out
        };
        for i in 0..n {
            for j in (i + 1)..n {
                for l in (j + 1)..n {
                    let (bi, bj, bl) = (unit(n, i), unit(n, j), unit(n, l));
                    let t1 = raw(&bi, &raw(&bj, &bl));
                    let t2 = raw(&bj, &raw(&bl, &bi));
                    let t3 = raw(&bl, &raw(&bi, &bj));
                    let s: QVec = (0..n).map(|k| t1[k] + t2[k] + t3[k]).collect();
                    if s.iter().any(|x| !x.is_zero()) {
                        report.jacobi.push(JacobiViolation { triple: (i, j, l), residual: s });
                    }
                }
            }
        }
        if report.antisymmetry.is_empty() && report.jacobi.is_empty() {
            let f = self.derived_series();
            if f.step != self.declared_step {
                report.step_mismatch = Some((self.declared_step, f.step));
            }
        }
        report
    }

    /// Derived series `g⁽¹⁾ ⊇ g⁽²⁾ ⊇ …` and center, as canonical (RREF) bases.
    pub fn derived_series(&self) -> Filtration {
        let n = self.dim;
        let mut derived: Vec<QMat> = Vec::new();
        let mut gens: QMat = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.table[i * n + j].clone())
            .collect();
        loop {
            let basis = linalg::span_basis(&gens);
            if basis.is_empty() {
                break;
            }
            if let Some(prev) = derived.last() {
                if prev.len() == basis.len() {
                    // not nilpotent; stop to avoid looping forever
                    derived.push(basis);
                    break;
                }
            }
            gens = (0..n)
                .flat_map(|i| basis.iter().map(move |v| (i, v.clone())))
                .map(|(i, v)| self.bracket(&unit(n, i), &v))
                .collect();
            derived.push(basis);
        }
        let step = if n == 0 { 0 } else { derived.len() + 1 };
        Filtration { derived, center: self.center(), step }
    }

    /// Basis of the center `{X : [X, b_i] = 0 ∀ i}`.
    pub fn center(&self) -> QMat {
        let n = self.dim;
        // rows of the system: for each (i, k), Σ_a X_a c[a][i][k] = 0
        let mut rows = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                rows.push((0..n).map(|a| self.table[a * n + i][k]).collect::<QVec>());
            }
        }
        linalg::span_basis(&linalg::nullspace(&rows, n))
    }

    pub fn is_central(&self, x: &[Rational]) -> bool {
        (0..self.dim).all(|i| self.bracket(x, &unit(self.dim, i)).iter().all(Zero::is_zero))
    }

    /// Randomized exact test of `z ⊆ ad(X)(g)` for noncentral `X`.
    ///
    /// Basis vectors and their pairwise sums are tried first, then random
    /// sparse rational vectors from a ChaCha stream seeded by `seed`.
    pub fn is_strictly_nonsingular(&self, trials: usize, seed: u64) -> NonsingularityVerdict {
        let n = self.dim;
        let z = self.center();
        if z.is_empty() {
            return NonsingularityVerdict::Degenerate { reason: "center is zero".into() };
        }
        if z.len() == n {
            return NonsingularityVerdict::Degenerate {
                reason: "algebra is abelian; no noncentral X exists".into(),
            };
        }
        let mut candidates: Vec<QVec> = (0..n).map(|i| unit(n, i)).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                candidates.push(linalg::add(&unit(n, i), &unit(n, j)));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tested = 0;
        let mut idx = 0;
        while tested < trials {
            let x = if idx < candidates.len() {
                idx += 1;
                candidates[idx - 1].clone()
            } else {
                random_sparse_vector(&mut rng, n)
            };
            if self.is_central(&x) {
                continue;
            }
            tested += 1;
            if !self.center_in_image(&x, &z) {
                return NonsingularityVerdict::ProvenFalse { witness: x };
            }
        }
        NonsingularityVerdict::PassedRandomized { trials }
    }

    /// Exact rank test `z ⊆ ad(x)(g)`.
    pub fn center_in_image(&self, x: &[Rational], z: &[QVec]) -> bool {
        let img = self.ad_images(x);
        let r = linalg::rank(&img);
        let mut both = img;
        both.extend(z.iter().cloned());
        linalg::rank(&both) == r
    }

    /// Fails unless the structure is valid and the step is at most 3.
    pub fn validate(&self) -> Result<Filtration, AlgebraError> {
        let report = self.check_structure();
        if !report.is_valid() {
            return Err(AlgebraError::Invalid(report.summary(self)));
        }
        let f = self.derived_series();
        if f.step > 3 {
            return Err(AlgebraError::UnsupportedStep(f.step));
        }
        Ok(f)
    }
}

fn random_sparse_vector(rng: &mut ChaCha8Rng, n: usize) -> QVec {
    loop {
        let v: QVec = (0..n)
            .map(|_| {
                if rng.gen_bool(0.4) {
                    Rational::zero()
                } else {
                    q(rng.gen_range(-6..=6), rng.gen_range(1..=4))
                }
            })
            .collect();
        if v.iter().any(|x| !x.is_zero()) {
            return v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiViolation {
    pub triple: (usize, usize, usize),
    #[serde(with = "crate::rational::serde_q::vec")]
    pub residual: QVec,
}

/// Outcome of [`LieAlgebra::check_structure`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StructureReport {
    pub antisymmetry: Vec<(usize, usize, usize)>,
    pub jacobi: Vec<JacobiViolation>,
    /// `(declared, actual)`
    pub step_mismatch: Option<(usize, usize)>,
}

impl StructureReport {
    pub fn is_valid(&self) -> bool {
        self.antisymmetry.is_empty() && self.jacobi.is_empty() && self.step_mismatch.is_none()
    }

    pub fn summary(&self, l: &LieAlgebra) -> String {
        let name = |i: usize| l.labels.get(i).cloned().unwrap_or_else(|| i.to_string());
        let mut parts = Vec::new();
        for (i, j, k) in &self.antisymmetry {
            parts.push(format!("antisymmetry fails at ({}, {}, {})", name(*i), name(*j), name(*k)));
        }
        for v in &self.jacobi {
            let (i, j, k) = v.triple;
            parts.push(format!("Jacobi fails on ({}, {}, {})", name(i), name(j), name(k)));
        }
        if let Some((d, a)) = self.step_mismatch {
            parts.push(format!("declared step {d} but derived series gives step {a}"));
        }
        parts.join("; ")
    }
}

/// Derived series and center.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    /// `derived[0] = g⁽¹⁾`, `derived[1] = g⁽²⁾`, …, nonzero terms only.
    pub derived: Vec<QMat>,
    pub center: QMat,
    pub step: usize,
}

impl Filtration {
    /// `g⁽ᵏ⁾` for `k ≥ 1` (empty basis once it vanishes).
    pub fn term(&self, k: usize) -> QMat {
        assert!(k >= 1);
        self.derived.get(k - 1).cloned().unwrap_or_default()
    }

    /// Dimensions `(dim g; dim g⁽¹⁾; …)`.
    pub fn dims(&self, n: usize) -> Vec<usize> {
        std::iter::once(n).chain(self.derived.iter().map(Vec::len)).collect()
    }

    /// Last nonzero derived term `g⁽ᵏ⁻¹⁾`.
    pub fn last(&self) -> QMat {
        self.derived.last().cloned().unwrap_or_default()
    }

    /// Whether `z = g⁽ᵏ⁻¹⁾`.
    pub fn center_is_last_term(&self) -> bool {
        let last = self.last();
        last.len() == self.center.len() && last.iter().all(|v| linalg::in_span(&self.center, v))
    }

    /// Depth of `v`: the largest `k` with `v ∈ g⁽ᵏ⁾` (`g⁽⁰⁾ = g`).
    pub fn depth(&self, v: &[Rational]) -> usize {
        let mut d = 0;
        for (k, term) in self.derived.iter().enumerate() {
            if linalg::in_span(term, v) {
                d = k + 1;
            } else {
                break;
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum NonsingularityVerdict {
    ProvenFalse {
        #[serde(with = "crate::rational::serde_q::vec")]
        witness: QVec,
    },
    PassedRandomized { trials: usize },
    /// No noncentral element exists, or the center is trivial.
    Degenerate { reason: String },
}

impl NonsingularityVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, Self::PassedRandomized { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rational::qi;

    #[test]
    fn example_ii_brackets() {
        let l = catalog::algebra_ii();
        let e = |s: &str| l.basis_vector(l.index_of(s).unwrap());
        assert_eq!(l.bracket(&e("X1"), &e("Y1")), e("Z"));
        assert_eq!(l.bracket(&e("X1"), &e("Z")), e("W"));
        assert_eq!(l.bracket(&e("Y1"), &e("Y2")), e("W"));
        assert!(l.bracket(&e("X1"), &e("X1")).iter().all(Zero::is_zero));
    }

    #[test]
    fn try_bracket_rejects_wrong_dimension() {
        let l = catalog::algebra_ii();
        assert!(matches!(
            l.try_bracket(&[qi(1)], &l.basis_vector(0)),
            Err(AlgebraError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn derived_series_of_examples() {
        let l = catalog::algebra_ii();
        let f = l.derived_series();
        assert_eq!(f.step, 3);
        assert_eq!(f.dims(5), vec![5, 2, 1]);
        let e = |s: &str| l.basis_vector(l.index_of(s).unwrap());
        assert!(linalg::in_span(&f.term(1), &e("Z")) && linalg::in_span(&f.term(1), &e("W")));
        assert_eq!(f.term(2), vec![e("W")]);

        let l = catalog::algebra_i();
        let f = l.derived_series();
        assert_eq!(f.step, 3);
        assert_eq!(f.dims(7), vec![7, 3, 1]);
        assert_eq!(f.center, vec![l.basis_vector(6)]);
        assert!(f.center_is_last_term());
    }

    #[test]
    fn abelian_is_step_one() {
        let f = LieAlgebra::abelian(3).derived_series();
        assert_eq!(f.step, 1);
        assert!(f.derived.is_empty());
        assert_eq!(f.center.len(), 3);
    }

    #[test]
    fn antisymmetry_violation_is_located() {
        let n = 4;
        let mut c = vec![vec![zeros(n); n]; n];
        c[1][2][3] = qi(1);
        c[2][1][3] = qi(1);
        let l = LieAlgebra::from_tensor((0..n).map(|i| format!("b{i}")).collect(), c, 2).unwrap();
        let r = l.check_structure();
        assert_eq!(r.antisymmetry, vec![(1, 2, 3)]);
    }

    #[test]
    fn perturbation_breaks_jacobi() {
        let l = catalog::algebra_i();
        let mut br = l.bracket_list();
        br.push((0, 1, unit(7, 2)));
        let bad = LieAlgebra::from_brackets(l.labels().to_vec(), &br, 3).unwrap();
        let r = bad.check_structure();
        assert!(r.antisymmetry.is_empty());
        assert!(r.jacobi.iter().any(|v| v.triple == (0, 1, 3)));
    }

    #[test]
    fn every_single_entry_perturbation_agrees_with_brute_force() {
        // Independent oracle: Jacobi via explicit nested loops over the raw tensor.
        let l = catalog::algebra_i();
        let n = l.dim();
        for (i, j) in [(0, 2), (1, 3), (4, 5), (2, 3), (0, 4)] {
            for k in 0..n {
                let mut br = l.bracket_list();
                let mut v = l.basis_bracket(i, j).clone();
                v[k] += qi(1);
                br.retain(|(a, b, _)| (*a, *b) != (i, j));
                br.push((i, j, v));
                let p = LieAlgebra::from_brackets(l.labels().to_vec(), &br, 3).unwrap();
                let brute = (0..n).any(|a| {
                    (0..n).any(|b| {
                        (0..n).any(|c| {
                            let (x, y, z) = (unit(n, a), unit(n, b), unit(n, c));
                            let s1 = p.bracket(&x, &p.bracket(&y, &z));
                            let s2 = p.bracket(&y, &p.bracket(&z, &x));
                            let s3 = p.bracket(&z, &p.bracket(&x, &y));
                            (0..n).any(|m| !(s1[m] + s2[m] + s3[m]).is_zero())
                        })
                    })
                });
                assert_eq!(brute, !p.check_structure().jacobi.is_empty(), "{i} {j} {k}");
            }
        }
    }

    #[test]
    fn strict_nonsingularity_of_examples() {
        for l in [catalog::algebra_i(), catalog::algebra_ii()] {
            assert!(l.is_strictly_nonsingular(100, 7).passed());
        }
    }

    #[test]
    fn abelian_is_degenerate() {
        let v = LieAlgebra::abelian(3).is_strictly_nonsingular(10, 1);
        assert!(matches!(v, NonsingularityVerdict::Degenerate { .. }));
        assert!(!v.passed());
    }

    #[test]
    fn direct_sum_with_line_fails_with_reverifiable_witness() {
        let l = catalog::algebra_ii().direct_sum_abelian(1);
        match l.is_strictly_nonsingular(100, 3) {
            NonsingularityVerdict::ProvenFalse { witness } => {
                assert!(!l.is_central(&witness));
                assert!(!l.center_in_image(&witness, &l.center()));
            }
            other => panic!("expected proven_false, got {other:?}"),
        }
    }

    /// Case analysis: for each noncentral X an explicit Y with [X, Y] = W.
    fn explicit_w_preimage_i(x: &[Rational]) -> QVec {
        // basis X1 X2 Y1 Y2 Z1 Z2 W
        let n = 7;
        let s = |i: usize, c: Rational| linalg::scale(&unit(n, i), &c);
        if !x[0].is_zero() {
            s(4, x[0].recip())
        } else if !x[1].is_zero() {
            s(5, x[1].recip())
        } else if !x[2].is_zero() {
            s(3, x[2].recip())
        } else if !x[3].is_zero() {
            s(2, -x[3].recip())
        } else if !x[4].is_zero() {
            s(0, -x[4].recip())
        } else {
            s(1, -x[5].recip())
        }
    }

    fn explicit_w_preimage_ii(x: &[Rational]) -> QVec {
        // basis X1 Y1 Y2 Z W
        let n = 5;
        let s = |i: usize, c: Rational| linalg::scale(&unit(n, i), &c);
        if !x[0].is_zero() {
            s(3, x[0].recip())
        } else if !x[1].is_zero() {
            s(2, x[1].recip())
        } else if !x[2].is_zero() {
            s(1, -x[2].recip())
        } else {
            s(0, -x[3].recip())
        }
    }

    proptest::proptest! {
        #[test]
        fn symbolic_case_analysis_i(v in proptest::collection::vec(-3i128..4, 7)) {
            let l = catalog::algebra_i();
            let x: QVec = v.into_iter().map(qi).collect();
            if !l.is_central(&x) {
                let y = explicit_w_preimage_i(&x);
                proptest::prop_assert_eq!(l.bracket(&x, &y), unit(7, 6));
            }
        }

        #[test]
        fn symbolic_case_analysis_ii(v in proptest::collection::vec(-3i128..4, 5)) {
            let l = catalog::algebra_ii();
            let x: QVec = v.into_iter().map(qi).collect();
            if !l.is_central(&x) {
                let y = explicit_w_preimage_ii(&x);
                proptest::prop_assert_eq!(l.bracket(&x, &y), unit(5, 4));
            }
        }

        #[test]
        fn derived_series_is_bracket_compatible(which in 0usize..2) {
            let l = if which == 0 { catalog::algebra_i() } else { catalog::algebra_ii() };
            let f = l.derived_series();
            for k in 1..=f.derived.len() {
                let next = f.term(k + 1);
                for v in f.term(k) {
                    for i in 0..l.dim() {
                        let w = l.bracket(&l.basis_vector(i), &v);
                        proptest::prop_assert!(linalg::in_span(&next, &w));
                    }
                }
            }
        }
    }
}
