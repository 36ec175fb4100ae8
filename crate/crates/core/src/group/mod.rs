//! Group arithmetic in exponential coordinates via the truncated
//! Campbell–Baker–Hausdorff series, lattices with canonical coordinates,
//! conjugacy in `G` and in `Γ`, and conjugacy-class enumeration.

mod classes;
mod congruence;
mod lattice;

pub use classes::{
    enumerate_classes, is_conjugate_in_lattice, ClassEnumeration, ClassPredicate,
    ConjugacyClass, FnPredicate, LatticeConjugacy, LatticeConjugacyError,
};
pub use congruence::CongruenceFormula;
pub use lattice::{Lattice, LatticeError, Window};

use std::sync::Arc;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{AlgebraError, LieAlgebra};
use crate::linalg;
use crate::rational::{q, QVec, Rational, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("unsupported step {0}: the truncated series is exact only for step <= 3")]
    UnsupportedStep(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A point of the simply connected group, stored as its logarithm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct GroupElement {
    #[serde(with = "crate::rational::serde_q::vec")]
    pub log: QVec,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self { log: vec![Rational::zero(); n] }
    }

    pub fn from_log(log: QVec) -> Self {
        Self { log }
    }

    pub fn is_identity(&self) -> bool {
        self.log.iter().all(Zero::is_zero)
    }
}

/// `log(exp x · exp y)` for step ≤ 3:
/// `x + y + ½[x,y] + (1/12)[x,[x,y]] + (1/12)[y,[y,x]]`.
pub fn bch<T: Scalar>(l: &LieAlgebra, x: &[T], y: &[T]) -> Vec<T> {
    let xy = l.bracket(x, y);
    let half = q(1, 2);
    let twelfth = q(1, 12);
    let mut out: Vec<T> = x
        .iter()
        .zip(y)
        .zip(&xy)
        .map(|((a, b), c)| a.clone() + b.clone() + c.scale(&half))
        .collect();
    if xy.iter().all(Scalar::is_exact_zero) {
        return out;
    }
    let xxy = l.bracket(x, &xy);
    let yyx = l.bracket(y, &xy);
    for ((o, a), b) in out.iter_mut().zip(&xxy).zip(&yyx) {
        // [y,[y,x]] = -[y,[x,y]]
        *o = o.clone() + (a.clone() - b.clone()).scale(&twelfth);
    }
    out
}

/// `log(a x a⁻¹) = exp(ad A) X = X + [A,X] + ½[A,[A,X]]` for step ≤ 3.
pub fn conjugate_log<T: Scalar>(l: &LieAlgebra, a: &[T], x: &[T]) -> Vec<T> {
    let ax = l.bracket(a, x);
    if ax.iter().all(Scalar::is_exact_zero) {
        return x.to_vec();
    }
    let aax = l.bracket(a, &ax);
    let half = q(1, 2);
    x.iter()
        .zip(&ax)
        .zip(&aax)
        .map(|((p, s), t)| p.clone() + s.clone() + t.scale(&half))
        .collect()
}

/// Simply connected nilpotent group of step ≤ 3 in exponential coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    algebra: Arc<LieAlgebra>,
}

impl Group {
    pub fn new(algebra: LieAlgebra) -> Result<Self, GroupError> {
        Self::from_arc(Arc::new(algebra))
    }

    pub fn from_arc(algebra: Arc<LieAlgebra>) -> Result<Self, GroupError> {
        let step = algebra.derived_series().step;
        if step > 3 {
            return Err(GroupError::UnsupportedStep(step));
        }
        Ok(Self { algebra })
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn algebra_arc(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.dim())
    }

    fn check(&self, x: &GroupElement) -> Result<(), GroupError> {
        if x.log.len() != self.dim() {
            return Err(GroupError::DimensionMismatch { expected: self.dim(), got: x.log.len() });
        }
        Ok(())
    }

    /// Checked product.
    pub fn bch_product(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.mul(x, y))
    }

    pub fn mul(&self, x: &GroupElement, y: &GroupElement) -> GroupElement {
        GroupElement { log: bch(&self.algebra, &x.log, &y.log) }
    }

    pub fn inverse(&self, x: &GroupElement) -> GroupElement {
        GroupElement { log: x.log.iter().map(|a| -a).collect() }
    }

    /// `a x a⁻¹`
    pub fn conjugate(&self, a: &GroupElement, x: &GroupElement) -> GroupElement {
        GroupElement { log: conjugate_log(&self.algebra, &a.log, &x.log) }
    }

    /// `a x a⁻¹ x⁻¹`
    pub fn group_commutator(&self, a: &GroupElement, x: &GroupElement) -> GroupElement {
        let axa = self.conjugate(a, x);
        self.mul(&axa, &self.inverse(x))
    }

    /// `exp(t X)` for the one-parameter subgroup through `x`.
    pub fn power(&self, x: &GroupElement, t: i64) -> GroupElement {
        let c = Rational::from_integer(t as i128);
        GroupElement { log: linalg::scale(&x.log, &c) }
    }

    /// Decides whether `y = a x a⁻¹` for some `a ∈ G`.
    ///
    /// For step ≤ 3, `exp(ad A) X = Y` holds exactly when
    /// `[A, (X+Y)/2] = Y − X`, so this is one exact linear solve. A negative
    /// answer carries a functional vanishing on `[g, (X+Y)/2]` but not on `Y − X`.
    pub fn is_conjugate_in_g(&self, x: &GroupElement, y: &GroupElement) -> ConjugacyInG {
        let l = &self.algebra;
        let n = l.dim();
        let mid: QVec = x.log.iter().zip(&y.log).map(|(a, b)| (a + b) * q(1, 2)).collect();
        let d = linalg::sub(&y.log, &x.log);
        // column i is [b_i, mid]
        let cols: Vec<QVec> =
            (0..n).map(|i| l.bracket(&l.basis_vector(i), &mid)).collect();
        let m = linalg::transpose(&cols);
        match linalg::solve(&m, &d, n) {
            Some(a) => {
                let w = GroupElement::from_log(a);
                debug_assert_eq!(self.conjugate(&w, x), *y);
                ConjugacyInG::Conjugate { witness: w }
            }
            None => ConjugacyInG::NotConjugate {
                separator: linalg::separating_functional(&m, &d).expect("certificate"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ConjugacyInG {
    Conjugate { witness: GroupElement },
    NotConjugate {
        #[serde(with = "crate::rational::serde_q::vec")]
        separator: QVec,
    },
}

impl ConjugacyInG {
    pub fn witness(&self) -> Option<&GroupElement> {
        match self {
            Self::Conjugate { witness } => Some(witness),
            Self::NotConjugate { .. } => None,
        }
    }
}
