use std::sync::Arc;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::{bch, Group, GroupElement};
use crate::algebra::LieAlgebra;
use crate::linalg::{self, QMat};
use crate::rational::{format_rational, is_integer, QVec, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("expected {expected} generators, got {got}")]
    GeneratorCount { expected: usize, got: usize },
    #[error("generator logs do not span the algebra")]
    NotSpanning,
    #[error("generator order is not adapted at position {0}")]
    NotAdapted(usize),
    #[error("generators do not close up under products: {0}")]
    NotClosed(String),
    #[error("element is not in the lattice (coordinate {index} = {value})")]
    NotInLattice { index: usize, value: String },
    #[error("word has {got} exponents, expected {expected}")]
    WordLength { expected: usize, got: usize },
    #[error("exponent overflow while extracting canonical coordinates")]
    Overflow,
}

/// Coordinate bounds on word exponents, inclusive. Coordinates flagged
/// `scalable` grow under [`Window::doubled`]; the others are fixed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Window {
    pub ranges: Vec<(i64, i64)>,
    pub scalable: Vec<bool>,
}

impl Window {
    pub fn new(ranges: Vec<(i64, i64)>) -> Self {
        let n = ranges.len();
        Self { ranges, scalable: vec![true; n] }
    }

    pub fn cube(n: usize, r: i64) -> Self {
        Self::new(vec![(-r, r); n])
    }

    /// The single point `0`.
    pub fn identity(n: usize) -> Self {
        Self { ranges: vec![(0, 0); n], scalable: vec![false; n] }
    }

    pub fn from_radii(radii: &[i64]) -> Self {
        Self::new(radii.iter().map(|&r| (-r, r)).collect())
    }

    pub fn fixed(mut self, i: usize, lo: i64, hi: i64) -> Self {
        self.ranges[i] = (lo, hi);
        self.scalable[i] = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn scaled(&self, factor: i64) -> Self {
        let ranges = self
            .ranges
            .iter()
            .zip(&self.scalable)
            .map(|(&(lo, hi), &s)| if s { (lo * factor, hi * factor) } else { (lo, hi) })
            .collect();
        Self { ranges, scalable: self.scalable.clone() }
    }

    pub fn doubled(&self) -> Self {
        self.scaled(2)
    }

    pub fn contains(&self, exps: &[i64]) -> bool {
        exps.len() == self.ranges.len()
            && exps.iter().zip(&self.ranges).all(|(&e, &(lo, hi))| lo <= e && e <= hi)
    }

    pub fn size(&self) -> u128 {
        self.ranges.iter().map(|&(lo, hi)| (hi - lo + 1).max(0) as u128).product()
    }

    pub fn radius(&self) -> i64 {
        self.ranges.iter().map(|&(lo, hi)| lo.abs().max(hi.abs())).max().unwrap_or(0)
    }
}

/// Lattice given by an ordered generator list. The order must be adapted to
/// the lower central series (`[g, V_i] ⊆ V_{i+1}` for `V_i = span(v_i, …)`),
/// so every element is uniquely `exp(v_1)^{e_1} ⋯ exp(v_n)^{e_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    group: Group,
    names: Vec<String>,
    generators: QMat,
    /// Rows: coordinate functionals for the generator basis.
    coords: QMat,
    central: Vec<bool>,
    /// Number of leading generators outside `g⁽¹⁾`.
    layer0: usize,
}

impl Lattice {
    pub fn new(
        algebra: Arc<LieAlgebra>,
        names: Vec<String>,
        generators: QMat,
    ) -> Result<Self, LatticeError> {
        let group = Group::from_arc(algebra).map_err(|e| LatticeError::NotClosed(e.to_string()))?;
        let l = group.algebra();
        let n = l.dim();
        if generators.len() != n {
            return Err(LatticeError::GeneratorCount { expected: n, got: generators.len() });
        }
        if generators.iter().any(|g| g.len() != n) {
            return Err(LatticeError::NotSpanning);
        }
        let inv = linalg::inverse(&linalg::transpose(&generators)).ok_or(LatticeError::NotSpanning)?;
        for i in 0..n {
            let tail = &generators[i + 1..];
            for b in 0..n {
                let img = l.bracket(&l.basis_vector(b), &generators[i]);
                if !linalg::in_span(tail, &img) {
                    return Err(LatticeError::NotAdapted(i));
                }
            }
        }
        let g1 = l.derived_series().term(1);
        let layer0 = generators.iter().take_while(|g| !linalg::in_span(&g1, g)).count();
        if generators[layer0..].iter().any(|g| !linalg::in_span(&g1, g)) {
            return Err(LatticeError::NotAdapted(layer0));
        }
        let central = generators.iter().map(|g| l.is_central(g)).collect();
        let names = if names.len() == n { names } else { (0..n).map(|i| format!("g{}", i + 1)).collect() };
        let lat = Self { group, names, generators, coords: inv, central, layer0 };
        lat.check_closure(32, 0x5eed)?;
        Ok(lat)
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn algebra(&self) -> &LieAlgebra {
        self.group.algebra()
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn generator_logs(&self) -> &QMat {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> GroupElement {
        GroupElement::from_log(self.generators[i].clone())
    }

    pub fn is_central_generator(&self, i: usize) -> bool {
        self.central[i]
    }

    /// Number of leading generators whose logs lie outside `g⁽¹⁾`.
    pub fn layer0(&self) -> usize {
        self.layer0
    }

    /// Ordered product `g₁^{e₁} ⋯ g_r^{e_r}`.
    pub fn word_to_element(&self, exps: &[i64]) -> GroupElement {
        assert_eq!(exps.len(), self.rank(), "word length");
        let l = self.algebra();
        let mut acc = vec![Rational::zero(); l.dim()];
        for (e, g) in exps.iter().zip(&self.generators) {
            if *e == 0 {
                continue;
            }
            let step = linalg::scale(g, &Rational::from_integer(*e as i128));
            acc = if acc.iter().all(Zero::is_zero) { step } else { bch(l, &acc, &step) };
        }
        GroupElement::from_log(acc)
    }

    pub fn try_word_to_element(&self, exps: &[i64]) -> Result<GroupElement, LatticeError> {
        if exps.len() != self.rank() {
            return Err(LatticeError::WordLength { expected: self.rank(), got: exps.len() });
        }
        Ok(self.word_to_element(exps))
    }

    /// Word exponents of `x`, or the first non-integral coordinate.
    pub fn canonical_coordinates(&self, x: &GroupElement) -> Result<Vec<i64>, LatticeError> {
        let l = self.algebra();
        let mut t = x.log.clone();
        let mut out = Vec::with_capacity(self.rank());
        for i in 0..self.rank() {
            let c = linalg::dot(&self.coords[i], &t);
            if !is_integer(&c) {
                return Err(LatticeError::NotInLattice { index: i, value: format_rational(&c) });
            }
            let ci = i64::try_from(*c.numer()).map_err(|_| LatticeError::Overflow)?;
            out.push(ci);
            if ci != 0 {
                let neg = linalg::scale(&self.generators[i], &-c);
                t = bch(l, &neg, &t);
            }
        }
        debug_assert!(t.iter().all(Zero::is_zero));
        Ok(out)
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.canonical_coordinates(x).is_ok()
    }

    /// Products and conjugates of generators, plus random word products,
    /// must have integral coordinates.
    pub fn check_closure(&self, random_pairs: usize, seed: u64) -> Result<(), LatticeError> {
        let g = &self.group;
        let r = self.rank();
        let gens: Vec<GroupElement> = (0..r).map(|i| self.generator(i)).collect();
        for a in &gens {
            for b in &gens {
                for x in [
                    g.conjugate(a, b),
                    g.conjugate(&g.inverse(a), b),
                    g.mul(a, b),
                    g.mul(&g.inverse(a), b),
                ] {
                    self.canonical_coordinates(&x)
                        .map_err(|e| LatticeError::NotClosed(e.to_string()))?;
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..random_pairs {
            let u: Vec<i64> = (0..r).map(|_| rng.gen_range(-3..=3)).collect();
            let v: Vec<i64> = (0..r).map(|_| rng.gen_range(-3..=3)).collect();
            let x = g.mul(&self.word_to_element(&u), &self.word_to_element(&v));
            self.canonical_coordinates(&x).map_err(|e| LatticeError::NotClosed(e.to_string()))?;
        }
        Ok(())
    }

    /// Integral basis of `Γ ∩ Z(G)`: the logs of the central generators.
    pub fn central_intersection(&self) -> QMat {
        self.generators
            .iter()
            .zip(&self.central)
            .filter(|(_, &c)| c)
            .map(|(g, _)| g.clone())
            .collect()
    }

    /// Whether `Γ ∩ Z(G)` coincides for two lattices in the same group.
    pub fn same_central_intersection(&self, other: &Lattice) -> bool {
        let a = self.central_intersection();
        let b = other.central_intersection();
        let within = |x: &QMat, y: &QMat| {
            x.iter().all(|v| {
                linalg::coordinates_in(y, v).is_some_and(|c| c.iter().all(is_integer))
            })
        };
        a.len() == b.len() && within(&a, &b) && within(&b, &a)
    }

    /// Integer vector of `Γ ∩ Z` coordinates for a central element.
    pub fn central_coordinates(&self, x: &[Rational]) -> Option<QVec> {
        linalg::coordinates_in(&self.central_intersection(), x)
    }
}
