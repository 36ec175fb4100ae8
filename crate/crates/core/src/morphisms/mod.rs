//! Automorphisms, isometries, almost-inner maps, projections to the
//! quotient and marking certificates.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{LieAlgebra, Metric, QuotientData};
use crate::group::{ConjugacyInG, Group, GroupElement, Lattice, LatticeError};
use crate::linalg::{self, QMat};
use crate::rational::{q, qi, serde_q, QVec, Rational};
use crate::spectra::{two_step_periods, SpectralContext};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorphismError {
    #[error("matrix is {rows}x{cols}, expected {n}x{n}")]
    Shape { rows: usize, cols: usize, n: usize },
    #[error("map is not a Lie algebra automorphism")]
    NotAutomorphism,
    #[error("map does not preserve the last derived term")]
    KernelNotPreserved,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Linear map on the structural basis; rows are images of basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Morphism {
    pub algebra: Arc<LieAlgebra>,
    pub matrix: QMat,
}

impl Morphism {
    pub fn new(algebra: Arc<LieAlgebra>, matrix: QMat) -> Result<Self, MorphismError> {
        let n = algebra.dim();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            let cols = matrix.first().map_or(0, Vec::len);
            return Err(MorphismError::Shape { rows: matrix.len(), cols, n });
        }
        Ok(Self { algebra, matrix })
    }

    pub fn identity(algebra: Arc<LieAlgebra>) -> Self {
        let n = algebra.dim();
        Self { algebra, matrix: linalg::identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn apply(&self, v: &[Rational]) -> QVec {
        linalg::vec_mat(v, &self.matrix, self.dim())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Morphism) -> Morphism {
        Morphism { algebra: self.algebra.clone(), matrix: linalg::mat_mul(&other.matrix, &self.matrix) }
    }

    pub fn inverse(&self) -> Option<Morphism> {
        linalg::inverse(&self.matrix).map(|m| Morphism { algebra: self.algebra.clone(), matrix: m })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AutomorphismVerdict {
    Automorphism,
    Singular,
    BracketViolation {
        pair: (usize, usize),
        #[serde(with = "serde_q::vec")]
        image_of_bracket: QVec,
        #[serde(with = "serde_q::vec")]
        bracket_of_images: QVec,
    },
}

impl AutomorphismVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, Self::Automorphism)
    }
}

/// Exact check of `M[U,V] = [MU,MV]` on basis pairs and invertibility.
pub fn is_lie_algebra_automorphism(m: &Morphism) -> AutomorphismVerdict {
    let l = &m.algebra;
    let n = l.dim();
    if linalg::rank(&m.matrix) < n {
        return AutomorphismVerdict::Singular;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let lhs = m.apply(l.basis_bracket(i, j));
            let rhs = l.bracket(&m.matrix[i], &m.matrix[j]);
            if lhs != rhs {
                return AutomorphismVerdict::BracketViolation {
                    pair: (i, j),
                    image_of_bracket: lhs,
                    bracket_of_images: rhs,
                };
            }
        }
    }
    AutomorphismVerdict::Automorphism
}

/// `log Φ(x) = M log x`.
pub fn apply_to_group(m: &Morphism, x: &GroupElement) -> Result<GroupElement, MorphismError> {
    if !is_lie_algebra_automorphism(m).passed() {
        return Err(MorphismError::NotAutomorphism);
    }
    Ok(GroupElement::from_log(m.apply(&x.log)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeMapping {
    /// First generator of the source whose image is outside the target.
    pub forward_failure: Option<usize>,
    /// First generator of the target whose preimage is outside the source.
    pub backward_failure: Option<usize>,
}

impl LatticeMapping {
    pub fn holds(&self) -> bool {
        self.forward_failure.is_none() && self.backward_failure.is_none()
    }
}

/// Whether `Φ(Γ₁) = Γ₂`, via canonical coordinates of generator images.
pub fn maps_lattice(m: &Morphism, from: &Lattice, to: &Lattice) -> Result<LatticeMapping, MorphismError> {
    if !is_lie_algebra_automorphism(m).passed() {
        return Err(MorphismError::NotAutomorphism);
    }
    let inv = m.inverse().ok_or(MorphismError::NotAutomorphism)?;
    let first_failure = |map: &Morphism, a: &Lattice, b: &Lattice| {
        (0..a.rank()).find(|&i| !b.contains(&GroupElement::from_log(map.apply(&a.generator_logs()[i]))))
    };
    Ok(LatticeMapping { forward_failure: first_failure(m, from, to), backward_failure: first_failure(&inv, to, from) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum IsometryVerdict {
    Isometry,
    Violation {
        pair: (usize, usize),
        #[serde(with = "serde_q")]
        expected: Rational,
        #[serde(with = "serde_q")]
        got: Rational,
    },
}

impl IsometryVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, Self::Isometry)
    }
}

/// Exact check of `⟨Mu, Mv⟩ = ⟨u, v⟩` on basis pairs.
pub fn is_isometry(m: &Morphism, metric: &Metric) -> IsometryVerdict {
    let n = m.dim();
    for i in 0..n {
        for j in i..n {
            let expected = metric.gram()[i][j].clone();
            let got = metric.inner(&m.matrix[i], &m.matrix[j]);
            if got != expected {
                return IsometryVerdict::Violation { pair: (i, j), expected, got };
            }
        }
    }
    IsometryVerdict::Isometry
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugacyWitness {
    pub x: GroupElement,
    /// `a` with `a x a⁻¹ = Φ(x)`.
    pub a: GroupElement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AlmostInnerVerdict {
    PassedRandomized { samples: usize, witnesses: Vec<ConjugacyWitness> },
    /// `Φ(x)` is not conjugate to `x`; `separator` vanishes on
    /// `[g, (log x + log Φ(x))/2]` but not on `log Φ(x) − log x`.
    ProvenFalse {
        x: GroupElement,
        image: GroupElement,
        #[serde(with = "serde_q::vec")]
        separator: QVec,
    },
}

impl AlmostInnerVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, Self::PassedRandomized { .. })
    }
}

fn check_conjugate(g: &Group, m: &Morphism, xs: Vec<GroupElement>) -> AlmostInnerVerdict {
    let results: Vec<(GroupElement, GroupElement, ConjugacyInG)> = xs
        .into_par_iter()
        .map(|x| {
            let y = GroupElement::from_log(m.apply(&x.log));
            let c = g.is_conjugate_in_g(&x, &y);
            (x, y, c)
        })
        .collect();
    let samples = results.len();
    let mut witnesses = Vec::with_capacity(samples);
    for (x, image, c) in results {
        match c {
            ConjugacyInG::Conjugate { witness } => witnesses.push(ConjugacyWitness { x, a: witness }),
            ConjugacyInG::NotConjugate { separator } => {
                return AlmostInnerVerdict::ProvenFalse { x, image, separator };
            }
        }
    }
    AlmostInnerVerdict::PassedRandomized { samples, witnesses }
}

/// Deterministic rational sample points with numerators in
/// `[-window, window]` and denominators in `1..=4`.
pub fn sample_points(n: usize, samples: usize, window: i64, seed: u64) -> Vec<GroupElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            GroupElement::from_log(
                (0..n)
                    .map(|_| q(i128::from(rng.gen_range(-window..=window)), i128::from(rng.gen_range(1..=4i64))))
                    .collect(),
            )
        })
        .collect()
}

/// Checks `Φ(x) ~ x` in `G` on deterministic samples; a failure is an exact
/// disproof.
pub fn is_almost_inner(m: &Morphism, samples: usize, window: i64, seed: u64) -> Result<AlmostInnerVerdict, MorphismError> {
    if !is_lie_algebra_automorphism(m).passed() {
        return Err(MorphismError::NotAutomorphism);
    }
    let g = Group::from_arc(m.algebra.clone()).map_err(|_| MorphismError::NotAutomorphism)?;
    Ok(check_conjugate(&g, m, sample_points(m.dim(), samples, window, seed)))
}

/// Lattice elements with word exponents in `[-radius, radius]`.
pub fn lattice_window(lat: &Lattice, radius: i64) -> Vec<GroupElement> {
    let r = lat.rank();
    let side = (2 * radius + 1) as usize;
    let total = side.pow(r as u32);
    (0..total)
        .map(|mut k| {
            let exps: Vec<i64> = (0..r)
                .map(|_| {
                    let e = (k % side) as i64 - radius;
                    k /= side;
                    e
                })
                .collect();
            lat.word_to_element(&exps)
        })
        .collect()
}

/// Checks `Φ(γ) ~ γ` in `G` for every `γ` in the word window.
pub fn is_gamma_almost_inner(m: &Morphism, lat: &Lattice, radius: i64) -> Result<AlmostInnerVerdict, MorphismError> {
    if !is_lie_algebra_automorphism(m).passed() {
        return Err(MorphismError::NotAutomorphism);
    }
    Ok(check_conjugate(lat.group(), m, lattice_window(lat, radius)))
}

/// Induced map on `g / g⁽ᵏ⁻¹⁾`.
pub fn project_morphism(m: &Morphism, qd: &QuotientData) -> Result<Morphism, MorphismError> {
    let induced = qd.induced_map(&m.matrix).ok_or(MorphismError::KernelNotPreserved)?;
    Morphism::new(Arc::new(qd.algebra.clone()), induced)
}

/// `π(Γ)` as a lattice of the quotient.
pub fn quotient_lattice(lat: &Lattice, qd: &QuotientData) -> Result<Lattice, MorphismError> {
    let (names, gens): (Vec<String>, QMat) = lat
        .generator_logs()
        .iter()
        .zip(lat.names())
        .map(|(g, name)| (name.clone(), qd.project(g)))
        .filter(|(_, g)| g.iter().any(|c| *c != qi(0)))
        .unzip();
    Ok(Lattice::new(Arc::new(qd.algebra.clone()), names, gens)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkingChecks {
    pub generator_image_ok: bool,
    pub central_intersection_ok: bool,
    pub central_case_ok: bool,
    pub projection_factorization_ok: Option<bool>,
    pub quotient_marking_ok: Option<bool>,
    pub spot_check_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkingReport {
    pub automorphism: AutomorphismVerdict,
    pub lattice_mapping: Option<LatticeMapping>,
    pub checks: MarkingChecks,
    pub isometry: Option<IsometryVerdict>,
    pub almost_inner: Option<AlmostInnerVerdict>,
    /// Central generators of `Γ₁` with `Φ(γ) ∉ {γ, γ⁻¹}`.
    pub central_failures: Vec<usize>,
    pub spot_checks: usize,
    pub spot_failures: Vec<GroupElement>,
    /// Whether a factorization candidate was supplied and every check passed.
    pub certifying: bool,
}

impl MarkingReport {
    pub fn passed(&self) -> bool {
        let c = &self.checks;
        self.automorphism.passed()
            && c.generator_image_ok
            && c.central_intersection_ok
            && c.central_case_ok
            && c.projection_factorization_ok != Some(false)
            && c.quotient_marking_ok != Some(false)
            && c.spot_check_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkingOptions {
    pub samples: usize,
    pub window: i64,
    pub seed: u64,
    /// Word radius for the period spot-check.
    pub spot_radius: i64,
}

impl Default for MarkingOptions {
    fn default() -> Self {
        Self { samples: 100, window: 3, seed: 0x5eed, spot_radius: 1 }
    }
}

/// Marking certificate for `Φ: Γ₁ → Γ₂`. Full certification needs a
/// factorization `π(Φ) = Ψ₁ ∘ Ψ₂` with `Ψ₁` an isometry and `Ψ₂` almost
/// inner on the quotient.
pub fn verify_marking(
    phi: &Morphism,
    lats: [&Lattice; 2],
    metric: &Metric,
    factorization: Option<(&Morphism, &Morphism)>,
    opts: &MarkingOptions,
) -> Result<MarkingReport, MorphismError> {
    let automorphism = is_lie_algebra_automorphism(phi);
    let central_intersection_ok = lats[0].same_central_intersection(lats[1]);
    if !automorphism.passed() {
        return Ok(MarkingReport {
            automorphism,
            lattice_mapping: None,
            checks: MarkingChecks {
                generator_image_ok: false,
                central_intersection_ok,
                central_case_ok: false,
                projection_factorization_ok: None,
                quotient_marking_ok: None,
                spot_check_ok: false,
            },
            isometry: None,
            almost_inner: None,
            central_failures: vec![],
            spot_checks: 0,
            spot_failures: vec![],
            certifying: false,
        });
    }
    let mapping = maps_lattice(phi, lats[0], lats[1])?;
    let central_failures: Vec<usize> = (0..lats[0].rank())
        .filter(|&i| lats[0].is_central_generator(i))
        .filter(|&i| {
            let g = &lats[0].generator_logs()[i];
            let img = phi.apply(g);
            img != *g && img != linalg::scale(g, &qi(-1))
        })
        .collect();
    let ctx = SpectralContext::new(phi.algebra.clone(), metric.clone()).map_err(|_| MorphismError::KernelNotPreserved)?;
    let qd = &ctx.quotient;
    let (factor_ok, quotient_ok, isometry, almost_inner) = match factorization {
        Some((psi1, psi2)) => {
            let proj = project_morphism(phi, qd)?;
            let factor_ok = proj.matrix == psi1.compose(psi2).matrix;
            let iso = is_isometry(psi1, &qd.metric);
            let ai = is_almost_inner(psi2, opts.samples, opts.window, opts.seed)?;
            (Some(factor_ok), Some(iso.passed() && ai.passed()), Some(iso), Some(ai))
        }
        None => (None, None, None, None),
    };
    // exact period data of γ̄ and π(Φ(γ)) must agree on sampled noncentral γ
    let sampled: Vec<GroupElement> = lattice_window(lats[0], opts.spot_radius)
        .into_iter()
        .filter(|g| !phi.algebra.is_central(&g.log))
        .collect();
    let spot_failures: Vec<GroupElement> = sampled
        .par_iter()
        .filter(|g| {
            let a = two_step_periods(&ctx, &qd.project(&g.log));
            let b = two_step_periods(&ctx, &qd.project(&phi.apply(&g.log)));
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    a.lower_sq != b.lower_sq || a.upper_sq != b.upper_sq || a.definite_periods != b.definite_periods
                }
                _ => true,
            }
        })
        .cloned()
        .collect();
    let checks = MarkingChecks {
        generator_image_ok: mapping.holds(),
        central_intersection_ok,
        central_case_ok: central_failures.is_empty(),
        projection_factorization_ok: factor_ok,
        quotient_marking_ok: quotient_ok,
        spot_check_ok: spot_failures.is_empty(),
    };
    let mut report = MarkingReport {
        automorphism,
        lattice_mapping: Some(mapping),
        checks,
        isometry,
        almost_inner,
        central_failures,
        spot_checks: sampled.len(),
        spot_failures,
        certifying: false,
    };
    report.certifying = factorization.is_some() && report.passed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, ExampleName};
    use crate::rational::unit;
    use proptest::prelude::*;

    fn ex_v() -> (catalog::ExampleRecord, Morphism) {
        let ex = catalog::example(ExampleName::V);
        let phi = Morphism::new(ex.algebra.clone(), catalog::phi_v()).unwrap();
        (ex, phi)
    }

    fn quotient_morphism(qd: &QuotientData, m: QMat) -> Morphism {
        Morphism::new(Arc::new(qd.algebra.clone()), m).unwrap()
    }

    #[test]
    fn identity_and_phi_are_automorphisms() {
        let (ex, phi) = ex_v();
        assert!(is_lie_algebra_automorphism(&Morphism::identity(ex.algebra.clone())).passed());
        assert!(is_lie_algebra_automorphism(&phi).passed());
    }

    #[test]
    fn perturbed_phi_reports_a_violating_pair() {
        let (ex, phi) = ex_v();
        let mut m = phi.matrix.clone();
        m[0][2] += q(1, 8);
        let bad = Morphism::new(ex.algebra.clone(), m).unwrap();
        match is_lie_algebra_automorphism(&bad) {
            AutomorphismVerdict::BracketViolation { image_of_bracket, bracket_of_images, .. } => {
                assert_ne!(image_of_bracket, bracket_of_images)
            }
            v => panic!("{v:?}"),
        }
        let singular = Morphism::new(ex.algebra.clone(), vec![vec![qi(0); 7]; 7]).unwrap();
        assert_eq!(is_lie_algebra_automorphism(&singular), AutomorphismVerdict::Singular);
        assert!(Morphism::new(ex.algebra.clone(), linalg::identity(6)).is_err());
    }

    #[test]
    fn phi_sends_w_to_its_inverse() {
        let (ex, phi) = ex_v();
        let w = GroupElement::from_log(unit(7, 6));
        let img = apply_to_group(&phi, &w).unwrap();
        assert_eq!(img.log, linalg::scale(&unit(7, 6), &qi(-1)));
        assert!(apply_to_group(&phi, &GroupElement::identity(7)).unwrap().is_identity());
        let _ = ex;
    }

    #[test]
    fn phi_maps_lattice_one_to_two_only() {
        let (ex, phi) = ex_v();
        assert!(maps_lattice(&phi, &ex.lattices[0], &ex.lattices[1]).unwrap().holds());
        let back = maps_lattice(&phi, &ex.lattices[0], &ex.lattices[0]).unwrap();
        assert!(!back.holds());
        let id = Morphism::identity(ex.algebra.clone());
        assert!(maps_lattice(&id, &ex.lattices[0], &ex.lattices[0]).unwrap().holds());
    }

    #[test]
    fn quotient_factors_of_example_v() {
        let (ex, phi) = ex_v();
        let qd = ex.quotient();
        let psi1 = quotient_morphism(&qd, catalog::psi1_v());
        let psi2 = quotient_morphism(&qd, catalog::psi2_v());
        assert_eq!(project_morphism(&phi, &qd).unwrap().matrix, psi1.compose(&psi2).matrix);
        assert!(is_isometry(&psi1, &qd.metric).passed());
        match is_isometry(&psi2, &qd.metric) {
            IsometryVerdict::Violation { .. } => {}
            v => panic!("{v:?}"),
        }
        assert!(is_almost_inner(&psi2, 100, 3, 1).unwrap().passed());
        let id = Morphism::identity(ex.algebra.clone());
        assert_eq!(project_morphism(&id, &qd).unwrap().matrix, linalg::identity(6));
    }

    #[test]
    fn example_v_marking_certifies() {
        let (ex, phi) = ex_v();
        let qd = ex.quotient();
        let psi1 = quotient_morphism(&qd, catalog::psi1_v());
        let psi2 = quotient_morphism(&qd, catalog::psi2_v());
        let lats = [&ex.lattices[0], &ex.lattices[1]];
        let r = verify_marking(&phi, lats, &ex.metric, Some((&psi1, &psi2)), &MarkingOptions::default()).unwrap();
        assert!(r.certifying, "{r:?}");
        let id = quotient_morphism(&qd, linalg::identity(6));
        let r = verify_marking(&phi, lats, &ex.metric, Some((&psi1, &id)), &MarkingOptions::default()).unwrap();
        assert_eq!(r.checks.projection_factorization_ok, Some(false));
        assert!(!r.certifying);
        let r = verify_marking(&phi, lats, &ex.metric, None, &MarkingOptions::default()).unwrap();
        assert!(r.passed() && !r.certifying);
    }

    #[test]
    fn identity_marking_on_one_lattice() {
        let ex = catalog::example(ExampleName::II);
        let qd = ex.quotient();
        let id = Morphism::identity(ex.algebra.clone());
        let qid = quotient_morphism(&qd, linalg::identity(4));
        let lats = [&ex.lattices[0], &ex.lattices[0]];
        let r = verify_marking(&id, lats, &ex.metric, Some((&qid, &qid)), &MarkingOptions::default()).unwrap();
        assert!(r.certifying);
    }

    #[test]
    fn example_ii_candidates_are_refuted_by_isometry() {
        let ex = catalog::example(ExampleName::II);
        let qd = ex.quotient();
        for h in [[0, 0, 0, 1, 0], [1, 2, -1, 0, 1], [0, 1, 1, -2, 3]] {
            let cand = Morphism::new(ex.algebra.clone(), catalog::candidate_ii(h)).unwrap();
            assert!(is_lie_algebra_automorphism(&cand).passed());
            let iso = quotient_morphism(&qd, catalog::isometric_factor_candidate_ii(h, [qi(0), qi(0), qi(0)]));
            assert!(!is_isometry(&iso, &qd.metric).passed());
        }
    }

    #[test]
    fn shear_on_example_iii_quotient_is_almost_inner() {
        // X2 -> X2 + Z1 on the quotient
        let qd = catalog::example(ExampleName::III).quotient();
        let mut m = linalg::identity(6);
        m[1][4] = qi(1);
        let shear = quotient_morphism(&qd, m);
        assert!(is_lie_algebra_automorphism(&shear).passed());
        assert!(is_almost_inner(&shear, 200, 4, 9).unwrap().passed());
    }

    #[test]
    fn non_almost_inner_map_is_disproved() {
        // diagonal scaling (2, 1, 4, 2, 4) on the algebra of example II
        let ex = catalog::example(ExampleName::II);
        let mut m = linalg::identity(5);
        for (i, c) in [2, 1, 4, 2, 4].into_iter().enumerate() {
            m[i][i] = qi(c);
        }
        let shear = Morphism::new(ex.algebra.clone(), m).unwrap();
        assert!(is_lie_algebra_automorphism(&shear).passed());
        match is_almost_inner(&shear, 50, 3, 2).unwrap() {
            AlmostInnerVerdict::ProvenFalse { x, image, separator } => {
                let d = linalg::sub(&image.log, &x.log);
                assert_ne!(linalg::dot(&separator, &d), qi(0));
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn example_i_relating_map_is_gamma_almost_inner() {
        let ex = catalog::example(ExampleName::I);
        let qd = ex.quotient();
        let catalog::MorphismBundle::QuotientRelating { map } = &ex.morphisms else { panic!() };
        let m = quotient_morphism(&qd, map.clone());
        let l1 = quotient_lattice(&ex.lattices[0], &qd).unwrap();
        let l2 = quotient_lattice(&ex.lattices[1], &qd).unwrap();
        assert!(maps_lattice(&m, &l1, &l2).unwrap().holds());
        assert!(is_gamma_almost_inner(&m, &l1, 1).unwrap().passed());
    }

    #[test]
    fn almost_inner_implies_gamma_almost_inner() {
        let (ex, _) = ex_v();
        let qd = ex.quotient();
        let psi2 = quotient_morphism(&qd, catalog::psi2_v());
        let l1 = quotient_lattice(&ex.lattices[0], &qd).unwrap();
        assert!(is_almost_inner(&psi2, 50, 3, 4).unwrap().passed());
        assert!(is_gamma_almost_inner(&psi2, &l1, 1).unwrap().passed());
    }

    #[test]
    fn inner_automorphism_is_almost_inner() {
        // Ad(exp A) = exp(ad A) truncated at step 3
        let l = Arc::new(catalog::algebra_i());
        let a = vec![qi(1), q(-1, 2), qi(0), qi(2), qi(1), qi(0), qi(3)];
        let rows: QMat = (0..7)
            .map(|i| {
                let e = l.basis_vector(i);
                let ae = l.bracket(&a, &e);
                let aae = l.bracket(&a, &ae);
                linalg::add(&linalg::add(&e, &ae), &linalg::scale(&aae, &q(1, 2)))
            })
            .collect();
        let ad = Morphism::new(l, rows).unwrap();
        assert!(is_lie_algebra_automorphism(&ad).passed());
        assert!(is_almost_inner(&ad, 100, 3, 3).unwrap().passed());
    }

    fn small_q() -> impl Strategy<Value = Rational> {
        (-6i128..=6, 1i128..=3).prop_map(|(n, d)| q(n, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn phi_is_a_group_homomorphism(x in prop::collection::vec(small_q(), 7), y in prop::collection::vec(small_q(), 7)) {
            let (ex, phi) = ex_v();
            let g = Group::from_arc(ex.algebra.clone()).unwrap();
            let (x, y) = (GroupElement::from_log(x), GroupElement::from_log(y));
            let lhs = apply_to_group(&phi, &g.mul(&x, &y)).unwrap();
            let rhs = g.mul(&apply_to_group(&phi, &x).unwrap(), &apply_to_group(&phi, &y).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn projection_is_functorial(k in -3i128..=3) {
            let (ex, phi) = ex_v();
            let qd = ex.quotient();
            let mut m = linalg::identity(7);
            m[1][4] = qi(k);
            let shear = Morphism::new(ex.algebra.clone(), m).unwrap();
            let lhs = project_morphism(&phi.compose(&shear), &qd).unwrap();
            let rhs = project_morphism(&phi, &qd).unwrap().compose(&project_morphism(&shear, &qd).unwrap());
            prop_assert_eq!(lhs.matrix, rhs.matrix);
        }
    }
}
