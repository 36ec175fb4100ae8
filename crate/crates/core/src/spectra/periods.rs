use std::cmp::Ordering;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::lengths::{Length, PiPoly};
use super::SpectraError;
use crate::algebra::{quotient_algebra, LieAlgebra, Metric, QuotientData};
use crate::linalg::{self, QMat};
use crate::rational::{is_zero_vec, qi, rational_sqrt, to_f64, QVec, Rational};

/// Geometry of the 2-step quotient needed to decide periods exactly.
#[derive(Debug, Clone)]
pub struct SpectralContext {
    pub algebra: Arc<LieAlgebra>,
    pub metric: Metric,
    pub quotient: QuotientData,
    /// Orthogonal basis of the quotient center `z̄`.
    center: QMat,
    /// Orthogonal basis of `[n̄, n̄]`.
    derived: QMat,
    /// Orthogonal basis of `z̄ ⊖ [n̄, n̄]`.
    abelian: QMat,
    /// Orthogonal basis of `v = z̄^⊥`.
    v_basis: QMat,
    /// `Σ_{i<j} |[u_i,u_j]|² / (|u_i|²|u_j|²)` over `v_basis`; bounds
    /// `|ad(Z)|_v|²` by `C²|Z|²`.
    rotation_sq: Rational,
    /// `n̄ = h₃ ⊕ abelian` orthogonally.
    heisenberg: bool,
}

impl SpectralContext {
    pub fn new(algebra: Arc<LieAlgebra>, metric: Metric) -> Result<Self, SpectraError> {
        let quotient = quotient_algebra(&algebra, &metric)?;
        let ql = &quotient.algebra;
        let qm = &quotient.metric;
        let center = qm.gram_schmidt(&ql.center(), &[]);
        let derived = qm.gram_schmidt(&ql.derived_series().term(1), &[]);
        let abelian = qm.gram_schmidt(&center, &derived);
        let n = ql.dim();
        let units: QMat = (0..n).map(|i| ql.basis_vector(i)).collect();
        let v_basis = qm.gram_schmidt(&units, &center);
        let mut rotation_sq = Rational::zero();
        for i in 0..v_basis.len() {
            for j in (i + 1)..v_basis.len() {
                let b = ql.bracket(&v_basis[i], &v_basis[j]);
                rotation_sq += qm.norm_sq(&b) / (qm.norm_sq(&v_basis[i]) * qm.norm_sq(&v_basis[j]));
            }
        }
        let heisenberg = derived.len() == 1 && v_basis.len() == 2;
        Ok(Self { algebra, metric, quotient, center, derived, abelian, v_basis, rotation_sq, heisenberg })
    }

    pub fn quotient_dim(&self) -> usize {
        self.quotient.algebra.dim()
    }

    pub fn rotation_constant_sq(&self) -> Rational {
        self.rotation_sq
    }

    pub fn is_heisenberg_split(&self) -> bool {
        self.heisenberg
    }

    /// Component of a quotient vector orthogonal to `[n̄, n̄]`.
    pub fn off_derived(&self, vbar: &[Rational]) -> QVec {
        let qm = &self.quotient.metric;
        linalg::sub(vbar, &qm.project_onto_orthogonal(vbar, &self.derived))
    }

    pub fn quotient_norm_sq(&self, vbar: &[Rational]) -> Rational {
        self.quotient.metric.norm_sq(vbar)
    }

    pub fn v_dim(&self) -> usize {
        self.v_basis.len()
    }
}

/// Exact decomposition `log γ̄ = V* + Z*` with the extreme periods.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoStepPeriodData {
    #[serde(with = "crate::rational::serde_q::vec")]
    pub log: QVec,
    #[serde(with = "crate::rational::serde_q::vec")]
    pub v_star: QVec,
    #[serde(with = "crate::rational::serde_q::vec")]
    pub z_star: QVec,
    #[serde(with = "crate::rational::serde_q::vec")]
    pub z_dstar: QVec,
    /// Part of `Z*` orthogonal to `[n̄, n̄]`.
    #[serde(with = "crate::rational::serde_q::vec")]
    pub z_abelian: QVec,
    /// `|V*|²`, the lower bound on squared periods.
    #[serde(with = "crate::rational::serde_q")]
    pub lower_sq: Rational,
    /// `|V*|² + |Z**|²`, always a squared period.
    #[serde(with = "crate::rational::serde_q")]
    pub upper_sq: Rational,
    pub definite_periods: Vec<Length>,
}

impl TwoStepPeriodData {
    pub fn lower_is_period(&self) -> bool {
        is_zero_vec(&self.z_dstar)
    }
}

pub fn two_step_periods(ctx: &SpectralContext, gbar: &[Rational]) -> Result<TwoStepPeriodData, SpectraError> {
    if is_zero_vec(gbar) {
        return Err(SpectraError::Identity);
    }
    if gbar.len() != ctx.quotient_dim() {
        return Err(SpectraError::Dimension { expected: ctx.quotient_dim(), got: gbar.len() });
    }
    let ql = &ctx.quotient.algebra;
    let qm = &ctx.quotient.metric;
    let z_star = qm.project_onto_orthogonal(gbar, &ctx.center);
    let v_star = linalg::sub(gbar, &z_star);
    let images: QMat = ql.ad_images(&v_star).into_iter().filter(|b| !is_zero_vec(b)).collect();
    let z_dstar = linalg::sub(&z_star, &qm.project_onto(&z_star, &images));
    let z_abelian = qm.project_onto_orthogonal(&z_star, &ctx.abelian);
    let lower_sq = qm.norm_sq(&v_star);
    let upper_sq = lower_sq + qm.norm_sq(&z_dstar);
    let mut definite = vec![PiPoly::constant(upper_sq)];
    if ctx.heisenberg && is_zero_vec(&v_star) {
        let zd = linalg::sub(&z_star, &z_abelian);
        let za_sq = qm.norm_sq(&z_abelian);
        if let Some(list) = heisenberg_squares(qm.norm_sq(&zd), ctx.rotation_sq) {
            definite.extend(list.into_iter().skip(1).map(|p| p.add(&PiPoly::constant(za_sq))));
        }
    }
    definite.sort_by(|a, b| a.cmp_exact(b));
    definite.dedup();
    Ok(TwoStepPeriodData {
        log: gbar.to_vec(),
        v_star,
        z_star,
        z_dstar,
        z_abelian,
        lower_sq,
        upper_sq,
        definite_periods: definite.into_iter().map(Length::from_sq).collect(),
    })
}

/// Squared periods of `exp(zẐ)` in a Heisenberg algebra with
/// `[X, Y] = θ Ẑ` on an orthonormal basis: `z²` and
/// `4πkz/θ − 4π²k²/θ²` for integers `1 ≤ k < θz/(2π)`. `None` when `z/θ`
/// is irrational (the list is then not expressible exactly).
fn heisenberg_squares(z_sq: Rational, theta_sq: Rational) -> Option<Vec<PiPoly>> {
    let mut out = vec![PiPoly::constant(z_sq)];
    if z_sq.is_zero() || theta_sq.is_zero() {
        return Some(out);
    }
    let ratio = rational_sqrt(&(z_sq / theta_sq))?;
    let bound = to_f64(&(theta_sq * z_sq)).sqrt() / (2.0 * std::f64::consts::PI);
    let mut k = 1i128;
    while (k as f64) < bound {
        let kq = Rational::from_integer(k);
        out.push(PiPoly::from_coeffs(vec![
            Rational::zero(),
            qi(4) * kq * ratio,
            -qi(4) * kq * kq / theta_sq,
        ]));
        k += 1;
    }
    Some(out)
}

/// Lengths of closed geodesics in the free homotopy class of a central
/// `exp(zẐ)` of the 3-dimensional Heisenberg group with orthonormal
/// `[X, Y] = Ẑ`, ascending.
pub fn heisenberg_central_lengths(z: Rational) -> Result<Vec<Length>, SpectraError> {
    if !z.is_positive() {
        return Err(SpectraError::Identity);
    }
    let mut v: Vec<Length> = heisenberg_squares(z * z, Rational::one())
        .expect("rational ratio")
        .into_iter()
        .map(Length::from_sq)
        .collect();
    v.sort_by(|a, b| a.cmp_exact(b));
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodRule {
    /// Outside `[|V*|², |V*|² + |Z**|²]`.
    Bound,
    /// Equals the upper extreme.
    UpperExtreme,
    /// Equals `|V*|` while `Z** ≠ 0`.
    LowerExtreme,
    /// Decided by the Heisenberg central list.
    Heisenberg,
    /// Strictly between the extremes, but too short for the rotation a
    /// non-extreme translated geodesic needs.
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "verdict", content = "rule", rename_all = "snake_case")]
pub enum PeriodVerdict {
    Period(PeriodRule),
    NotPeriod(PeriodRule),
    Undecided,
}

impl PeriodVerdict {
    pub fn is_period(self) -> bool {
        matches!(self, Self::Period(_))
    }

    pub fn is_decided(self) -> bool {
        !matches!(self, Self::Undecided)
    }
}

/// Decides whether `λ` is a period of the free homotopy class of the
/// noncentral-in-quotient element `γ̄` (log coordinates in `ḡ`).
pub fn classify_quotient_period(ctx: &SpectralContext, gbar: &[Rational], lambda: &Length) -> Result<PeriodVerdict, SpectraError> {
    let d = two_step_periods(ctx, gbar)?;
    Ok(classify_with(ctx, &d, lambda.sq()))
}

pub(crate) fn classify_with(ctx: &SpectralContext, d: &TwoStepPeriodData, l2: &PiPoly) -> PeriodVerdict {
    use PeriodRule::*;
    let lo = PiPoly::constant(d.lower_sq);
    let hi = PiPoly::constant(d.upper_sq);
    let c_lo = l2.cmp_exact(&lo);
    let c_hi = l2.cmp_exact(&hi);
    if c_lo == Ordering::Less || c_hi == Ordering::Greater {
        return PeriodVerdict::NotPeriod(Bound);
    }
    if c_hi == Ordering::Equal {
        return PeriodVerdict::Period(UpperExtreme);
    }
    if c_lo == Ordering::Equal {
        return PeriodVerdict::NotPeriod(LowerExtreme);
    }
    let qm = &ctx.quotient.metric;
    let za_sq = qm.norm_sq(&d.z_abelian);
    // the abelian factor splits off as a Euclidean product
    let rest = l2.sub(&PiPoly::constant(za_sq));
    if ctx.heisenberg {
        if !is_zero_vec(&d.v_star) {
            return PeriodVerdict::NotPeriod(Heisenberg);
        }
        let zd = linalg::sub(&d.z_star, &d.z_abelian);
        let ok = heisenberg_squares(qm.norm_sq(&zd), ctx.rotation_sq)
            .map(|list| list.iter().any(|p| p == &rest))
            .unwrap_or(false);
        return if ok { PeriodVerdict::Period(Heisenberg) } else { PeriodVerdict::NotPeriod(Heisenberg) };
    }
    // a non-extreme period needs C²(λ² − |Z_a|² − |V*|²) > 4π²
    let slack = rest.sub(&lo).scale(&ctx.rotation_sq).sub(&PiPoly::from_coeffs(vec![
        Rational::zero(),
        Rational::zero(),
        qi(4),
    ]));
    if slack.signum() != Ordering::Greater {
        return PeriodVerdict::NotPeriod(Rotation);
    }
    PeriodVerdict::Undecided
}

/// `λ ∈ [γ]_Γ` decided on the quotient for a noncentral `γ` given by its
/// log in `g`.
pub fn transfer_period(ctx: &SpectralContext, log_gamma: &[Rational], lambda: &Length) -> Result<PeriodVerdict, SpectraError> {
    if log_gamma.len() != ctx.algebra.dim() {
        return Err(SpectraError::Dimension { expected: ctx.algebra.dim(), got: log_gamma.len() });
    }
    if ctx.algebra.is_central(log_gamma) {
        return Err(SpectraError::Central);
    }
    classify_quotient_period(ctx, &ctx.quotient.project(log_gamma), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, ExampleName};
    use crate::rational::{q, unit, zeros};
    use proptest::prelude::*;

    fn ctx(name: ExampleName) -> SpectralContext {
        let ex = catalog::example(name);
        SpectralContext::new(ex.algebra.clone(), ex.metric.clone()).unwrap()
    }

    fn qv(n: usize, terms: &[(usize, i128)]) -> QVec {
        let mut v = zeros(n);
        for &(i, c) in terms {
            v[i] = qi(c);
        }
        v
    }

    #[test]
    fn rotation_constants() {
        assert_eq!(ctx(ExampleName::III).rotation_constant_sq(), qi(3));
        assert_eq!(ctx(ExampleName::IV).rotation_constant_sq(), qi(1));
        assert!(ctx(ExampleName::IV).is_heisenberg_split());
        assert!(!ctx(ExampleName::III).is_heisenberg_split());
    }

    #[test]
    fn central_quotient_element_has_definite_norm_period() {
        let c = ctx(ExampleName::III);
        let d = two_step_periods(&c, &qv(6, &[(4, 3), (5, 4)])).unwrap();
        assert_eq!(d.lower_sq, qi(0));
        assert_eq!(d.upper_sq, qi(25));
        assert!(d.definite_periods.iter().any(|l| l.sq() == &PiPoly::constant(qi(25))));
    }

    #[test]
    fn case_one_has_vanishing_z_double_star() {
        let c = ctx(ExampleName::III);
        let d = two_step_periods(&c, &qv(6, &[(3, 1), (4, 2), (5, -3)])).unwrap();
        assert!(d.lower_is_period());
        assert_eq!(d.upper_sq, qi(1));
        let one = Length::parse("1").unwrap();
        assert_eq!(classify_with(&c, &d, one.sq()), PeriodVerdict::Period(PeriodRule::UpperExtreme));
    }

    #[test]
    fn case_two_needs_k2_zero() {
        let c = ctx(ExampleName::III);
        let one = Length::parse("1").unwrap();
        let with = two_step_periods(&c, &qv(6, &[(2, 1), (5, 1)])).unwrap();
        assert!(!with.lower_is_period());
        assert_eq!(classify_with(&c, &with, one.sq()), PeriodVerdict::NotPeriod(PeriodRule::LowerExtreme));
        let without = two_step_periods(&c, &qv(6, &[(2, 1), (4, 5)])).unwrap();
        assert!(without.lower_is_period());
        assert!(classify_with(&c, &without, one.sq()).is_period());
    }

    #[test]
    fn bound_exclusion() {
        let c = ctx(ExampleName::III);
        let d = two_step_periods(&c, &qv(6, &[(0, 1), (2, 1)])).unwrap();
        assert_eq!(classify_with(&c, &d, Length::parse("1").unwrap().sq()), PeriodVerdict::NotPeriod(PeriodRule::Bound));
    }

    #[test]
    fn heisenberg_lists() {
        assert_eq!(heisenberg_central_lengths(qi(1)).unwrap().len(), 1);
        let seven = heisenberg_central_lengths(qi(7)).unwrap();
        assert_eq!(seven.len(), 2);
        assert_eq!(seven[0].sq(), Length::parse("sqrt(4*pi*(7-pi))").unwrap().sq());
        assert_eq!(seven[1].sq(), &PiPoly::constant(qi(49)));
        let thirteen = heisenberg_central_lengths(qi(13)).unwrap();
        assert_eq!(thirteen.len(), 3);
        assert!(thirteen.iter().any(|l| l.sq() == Length::parse("sqrt(8*pi*(13-2*pi))").unwrap().sq()));
        // direct inequality cross-check of the k-range
        for z in 1..40i128 {
            let want = 1 + (1..z).filter(|&k| (k as f64) < z as f64 / (2.0 * std::f64::consts::PI)).count();
            assert_eq!(heisenberg_central_lengths(qi(z)).unwrap().len(), want, "{z}");
        }
        assert!(heisenberg_central_lengths(qi(0)).is_err());
    }

    #[test]
    fn seven_z_transfers_the_irrational_length() {
        let c = ctx(ExampleName::IV);
        let lam = Length::parse("sqrt(4*pi*(7-pi))").unwrap();
        for j in -3..4 {
            let g = qv(5, &[(3, 7), (4, j)]);
            assert_eq!(transfer_period(&c, &g, &lam).unwrap(), PeriodVerdict::Period(PeriodRule::Heisenberg));
            let g = qv(5, &[(3, -7), (4, j)]);
            assert!(transfer_period(&c, &g, &lam).unwrap().is_period());
        }
        for other in [6, 8, 14] {
            assert!(!transfer_period(&c, &qv(5, &[(3, other)]), &lam).unwrap().is_period());
        }
        assert!(!transfer_period(&c, &qv(5, &[(3, 7), (2, 1)]), &lam).unwrap().is_period());
        assert!(!transfer_period(&c, &qv(5, &[(3, 7), (0, 1)]), &lam).unwrap().is_period());
        assert_eq!(transfer_period(&c, &qv(5, &[(4, 1)]), &lam), Err(SpectraError::Central));
    }

    #[test]
    fn case_one_element_transfers_length_one() {
        let c = ctx(ExampleName::III);
        let g = qv(7, &[(3, 1), (4, 1)]);
        assert!(transfer_period(&c, &g, &Length::parse("1").unwrap()).unwrap().is_period());
    }

    #[test]
    fn identity_is_rejected() {
        let c = ctx(ExampleName::III);
        assert_eq!(two_step_periods(&c, &zeros(6)), Err(SpectraError::Identity));
        assert!(two_step_periods(&c, &unit(5, 0)).is_err());
        assert!(heisenberg_squares(q(2, 1), qi(1)).is_none());
    }

    proptest! {
        #[test]
        fn decomposition_invariants(coords in proptest::collection::vec(-3i128..4, 6)) {
            prop_assume!(coords.iter().any(|&c| c != 0));
            let c = ctx(ExampleName::III);
            let g: QVec = coords.iter().map(|&x| qi(x)).collect();
            let d = two_step_periods(&c, &g).unwrap();
            prop_assert_eq!(linalg::add(&d.v_star, &d.z_star), g.clone());
            let qm = &c.quotient.metric;
            for b in c.quotient.algebra.ad_images(&d.v_star) {
                prop_assert_eq!(qm.inner(&d.z_dstar, &b), qi(0));
            }
            prop_assert!(d.lower_sq <= d.upper_sq);
            // the lower extreme is reported exactly when Z** = 0
            let lower = Length::from_rational_sq(d.lower_sq);
            if !d.lower_sq.is_zero() {
                let v = classify_with(&c, &d, lower.sq());
                prop_assert_eq!(v.is_period(), d.lower_is_period());
            }
            // no reported period lies below |V*|
            for p in &d.definite_periods {
                prop_assert!(p.sq().cmp_exact(&PiPoly::constant(d.lower_sq)) != Ordering::Less);
            }
        }
    }
}
