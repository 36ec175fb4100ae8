use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::{bch, conjugate_log, CongruenceFormula, ConjugacyInG, GroupElement, Lattice, LatticeError, Window};
use crate::linalg::{self, QMat};
use crate::rational::{QVec, Rational};

/// Filter on lattice elements used during enumeration. It must be a class
/// function for the resulting counts to be meaningful.
pub trait ClassPredicate: Sync {
    fn tag(&self) -> String;

    /// Called once `exps[..depth]` are fixed; `partial` is the log of that
    /// prefix product. Returning `false` discards every completion.
    fn prune_ok(&self, _depth: usize, _exps: &[i64], _partial: &[Rational]) -> bool {
        true
    }

    fn accept(&self, exps: &[i64], log: &[Rational]) -> bool;
}

/// Closure-backed predicate without pruning.
pub struct FnPredicate<F> {
    pub tag: String,
    pub f: F,
}

impl<F> FnPredicate<F>
where
    F: Fn(&[i64], &[Rational]) -> bool + Sync,
{
    pub fn new(tag: impl Into<String>, f: F) -> Self {
        Self { tag: tag.into(), f }
    }
}

impl<F> ClassPredicate for FnPredicate<F>
where
    F: Fn(&[i64], &[Rational]) -> bool + Sync,
{
    fn tag(&self) -> String {
        self.tag.clone()
    }

    fn accept(&self, exps: &[i64], log: &[Rational]) -> bool {
        (self.f)(exps, log)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugacyClass {
    /// Lexicographically least word exponents among members in the window.
    pub representative: Vec<i64>,
    pub element: GroupElement,
    pub size_in_window: usize,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassEnumeration {
    pub classes: Vec<ConjugacyClass>,
    pub window: Window,
    /// Class count for the doubled window, used as the stability check.
    pub doubled_count: usize,
    pub stable: bool,
}

impl ClassEnumeration {
    pub fn count(&self) -> usize {
        self.classes.len()
    }

    pub fn provisional(&self) -> bool {
        !self.stable
    }
}

fn collect_members(lat: &Lattice, w: &Window, pred: &dyn ClassPredicate) -> Vec<(Vec<i64>, QVec)> {
    let n = lat.rank();
    if n == 0 {
        return Vec::new();
    }
    let l = lat.algebra();
    let gens = lat.generator_logs();

    fn dfs(
        lat: &Lattice,
        gens: &QMat,
        w: &Window,
        pred: &dyn ClassPredicate,
        depth: usize,
        exps: &mut Vec<i64>,
        partial: &QVec,
        out: &mut Vec<(Vec<i64>, QVec)>,
    ) {
        if !pred.prune_ok(depth, &exps[..depth], partial) {
            return;
        }
        if depth == exps.len() {
            if pred.accept(exps, partial) {
                out.push((exps.clone(), partial.clone()));
            }
            return;
        }
        let (lo, hi) = w.ranges[depth];
        for e in lo..=hi {
            exps[depth] = e;
            let next = if e == 0 {
                partial.clone()
            } else {
                let step = linalg::scale(&gens[depth], &Rational::from_integer(e as i128));
                bch(lat.algebra(), partial, &step)
            };
            dfs(lat, gens, w, pred, depth + 1, exps, &next, out);
        }
        exps[depth] = 0;
    }

    let (lo, hi) = w.ranges[0];
    if !pred.prune_ok(0, &[], &vec![Rational::zero(); l.dim()]) {
        return Vec::new();
    }
    (lo..=hi)
        .into_par_iter()
        .map(|e0| {
            let mut exps = vec![0i64; n];
            exps[0] = e0;
            let start = linalg::scale(&gens[0], &Rational::from_integer(e0 as i128));
            let mut out = Vec::new();
            dfs(lat, gens, w, pred, 1, &mut exps, &start, &mut out);
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Classes of `ambient`-window members meeting `inner`, linked by
/// conjugation with generators and their inverses.
fn classes_between(
    lat: &Lattice,
    inner: &Window,
    ambient: &Window,
    pred: &dyn ClassPredicate,
) -> Vec<ConjugacyClass> {
    let members = collect_members(lat, ambient, pred);
    let index: HashMap<&QVec, usize> = members.iter().enumerate().map(|(i, (_, x))| (x, i)).collect();
    let l = lat.algebra();
    let moves: Vec<QVec> = (0..lat.rank())
        .filter(|&i| !lat.is_central_generator(i))
        .flat_map(|i| {
            let g = lat.generator_logs()[i].clone();
            let neg = g.iter().map(|x| -x).collect();
            [g, neg]
        })
        .collect();
    let edges: Vec<(usize, usize)> = members
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, (_, x))| {
            moves
                .iter()
                .filter_map(|a| {
                    let y = conjugate_log(l, a, x);
                    index.get(&y).map(|&j| (i, j))
                })
                .filter(|&(i, j)| i != j)
                .collect::<Vec<_>>()
        })
        .collect();
    let mut parent: Vec<usize> = (0..members.len()).collect();
    for (i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..members.len() {
        if inner.contains(&members[i].0) {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
    }
    let tag = pred.tag();
    let mut classes: Vec<ConjugacyClass> = groups
        .into_values()
        .map(|idx| {
            let best = *idx.iter().min_by(|&&a, &&b| members[a].0.cmp(&members[b].0)).expect("nonempty");
            ConjugacyClass {
                representative: members[best].0.clone(),
                element: GroupElement::from_log(members[best].1.clone()),
                size_in_window: idx.len(),
                tag: tag.clone(),
            }
        })
        .collect();
    classes.sort_by(|a, b| a.representative.cmp(&b.representative));
    classes
}

/// Partitions lattice elements in `window` accepted by `pred` into
/// `Γ`-conjugacy classes. Members are linked inside the doubled window; the
/// count is stable when the doubled window (linked inside the quadrupled one)
/// gives the same number.
pub fn enumerate_classes(lat: &Lattice, window: &Window, pred: &dyn ClassPredicate) -> ClassEnumeration {
    let classes = classes_between(lat, window, &window.doubled(), pred);
    let doubled_count = if window.scalable.iter().any(|&s| s) {
        classes_between(lat, &window.doubled(), &window.scaled(4), pred).len()
    } else {
        classes.len()
    };
    ClassEnumeration { stable: doubled_count == classes.len(), doubled_count, window: window.clone(), classes }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeConjugacyError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("closed-form congruence {formula:?} disagrees with exact conjugation for conjugator {conjugator:?}")]
    ClosedFormMismatch { formula: CongruenceFormula, conjugator: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LatticeConjugacy {
    Conjugate {
        conjugator: Vec<i64>,
        closed_form_checked: bool,
    },
    /// Not conjugate even in `G`, with an exact separating functional.
    NotConjugateInG {
        #[serde(with = "crate::rational::serde_q::vec")]
        separator: QVec,
    },
    /// No conjugator with relevant exponents in `[-radius, radius]`.
    NotFoundInWindow { radius: i64 },
}

impl LatticeConjugacy {
    pub fn is_conjugate(&self) -> bool {
        matches!(self, Self::Conjugate { .. })
    }
}

/// Searches `â ∈ Γ` with `â x â⁻¹ = y`. Conjugator coordinates whose
/// generator commutes with `x` are set to zero (right multiplication by the
/// centralizer); the rest range over `[-radius, radius]`, default
/// `4·max(1, |exponents|)`. Applicable closed-form congruences are evaluated
/// alongside and must agree with exact conjugation.
pub fn is_conjugate_in_lattice(
    lat: &Lattice,
    x: &GroupElement,
    y: &GroupElement,
    radius: Option<i64>,
    formulas: &[CongruenceFormula],
) -> Result<LatticeConjugacy, LatticeConjugacyError> {
    let ex = lat.canonical_coordinates(x)?;
    let ey = lat.canonical_coordinates(y)?;
    let n = lat.rank();
    if ex == ey {
        return Ok(LatticeConjugacy::Conjugate { conjugator: vec![0; n], closed_form_checked: false });
    }
    if let ConjugacyInG::NotConjugate { separator } = lat.group().is_conjugate_in_g(x, y) {
        return Ok(LatticeConjugacy::NotConjugateInG { separator });
    }
    let mag = ex.iter().chain(&ey).map(|e| e.abs()).max().unwrap_or(0).max(1);
    let r = radius.unwrap_or(4 * mag);

    let brute = brute_force_conjugator(lat, x, y, r);
    let applicable: Vec<CongruenceFormula> =
        formulas.iter().copied().filter(|f| f.applies_to(&ex) && f.applies_to(&ey)).collect();
    let mut checked = false;
    let exact_ok = |c: &[i64]| {
        let a = lat.word_to_element(c);
        lat.canonical_coordinates(&lat.group().conjugate(&a, x)).ok().as_deref() == Some(&ey[..])
    };
    for f in &applicable {
        checked = true;
        if let Some(c) = &brute {
            if f.apply(&ex, c).as_deref() != Some(&ey[..]) {
                return Err(LatticeConjugacyError::ClosedFormMismatch { formula: *f, conjugator: c.clone() });
            }
        }
        // cap the closed-form search at about two million evaluations
        let vars = f.conjugator_vars().len() as u32;
        let mut rc = r;
        while rc > 1 && (2 * rc + 1).pow(vars) > 2_000_000 {
            rc -= 1;
        }
        let cf = f.search(&ex, &ey, rc);
        if let Some(c) = &cf {
            if !exact_ok(c) {
                return Err(LatticeConjugacyError::ClosedFormMismatch { formula: *f, conjugator: c.clone() });
            }
        }
        let in_cf_domain = |c: &[i64]| {
            c.iter().enumerate().all(|(i, &v)| v == 0 || (f.conjugator_vars().contains(&i) && v.abs() <= rc))
        };
        match (&brute, &cf) {
            (Some(c), None) if in_cf_domain(c) => {
                return Err(LatticeConjugacyError::ClosedFormMismatch { formula: *f, conjugator: c.clone() });
            }
            (None, Some(c)) => {
                let relevant = relevant_vars(lat, x);
                let in_brute_domain = c
                    .iter()
                    .enumerate()
                    .all(|(i, &v)| v == 0 || (relevant.contains(&i) && v.abs() <= r));
                if in_brute_domain {
                    return Err(LatticeConjugacyError::ClosedFormMismatch { formula: *f, conjugator: c.clone() });
                }
                return Ok(LatticeConjugacy::Conjugate { conjugator: c.clone(), closed_form_checked: true });
            }
            _ => {}
        }
    }
    Ok(match brute {
        Some(conjugator) => LatticeConjugacy::Conjugate { conjugator, closed_form_checked: checked },
        None => LatticeConjugacy::NotFoundInWindow { radius: r },
    })
}

/// Generators (non-central) that do not commute with `x` to first order.
fn relevant_vars(lat: &Lattice, x: &GroupElement) -> Vec<usize> {
    let l = lat.algebra();
    (0..lat.rank())
        .filter(|&i| !lat.is_central_generator(i))
        .filter(|&i| !l.bracket(&lat.generator_logs()[i], &x.log).iter().all(Zero::is_zero))
        .collect()
}

/// Layered exact search. Modulo `g⁽²⁾` the conjugation is linear in the
/// leading exponents; the remaining exponents enter linearly through
/// `[v_i, log x] ∈ g⁽²⁾`.
fn brute_force_conjugator(lat: &Lattice, x: &GroupElement, y: &GroupElement, r: i64) -> Option<Vec<i64>> {
    let l = lat.algebra();
    let n = lat.rank();
    let gens = lat.generator_logs();
    let relevant = relevant_vars(lat, x);
    let cols: Vec<QVec> = relevant.iter().map(|&i| l.bracket(&gens[i], &x.log)).collect();
    let d = linalg::sub(&y.log, &x.log);
    let g1 = l.derived_series().term(1);
    let x_deep = linalg::in_span(&g1, &x.log);
    let verify = |c: &[i64]| {
        let a = lat.word_to_element(c);
        lat.group().conjugate(&a, x) == *y
    };
    let embed = |vars: &[usize], sol: &[i64], base: &mut Vec<i64>| {
        for (&v, &s) in vars.iter().zip(sol) {
            base[v] = s;
        }
    };
    if x_deep {
        // log x ∈ g⁽¹⁾: conjugation is x + Σ c_i [v_i, x], exactly linear
        let m = linalg::transpose(&cols);
        let sols = linalg::integer_solutions_in_box(&m, &d, &vec![(-r, r); relevant.len()]);
        return sols.into_iter().find_map(|s| {
            let mut c = vec![0; n];
            embed(&relevant, &s, &mut c);
            verify(&c).then_some(c)
        });
    }
    let layer0 = lat.layer0();
    let (r0, r1): (Vec<usize>, Vec<usize>) = relevant.iter().partition(|&&i| i < layer0);
    let g2 = l.derived_series().term(2);
    // functionals vanishing on g⁽²⁾
    let f2: QMat = if g2.is_empty() { linalg::identity(l.dim()) } else { linalg::nullspace(&g2, l.dim()) };
    let proj = |v: &QVec| linalg::mat_vec(&f2, v);
    let col_of = |i: usize| l.bracket(&gens[i], &x.log);
    let m0 = linalg::transpose(&r0.iter().map(|&i| proj(&col_of(i))).collect::<Vec<_>>());
    let m0 = if r0.is_empty() { vec![Vec::new(); f2.len()] } else { m0 };
    let sols0 = linalg::integer_solutions_in_box(&m0, &proj(&d), &vec![(-r, r); r0.len()]);
    let m1 = linalg::transpose(&r1.iter().map(|&i| col_of(i)).collect::<Vec<_>>());
    for s0 in sols0 {
        let mut c = vec![0; n];
        embed(&r0, &s0, &mut c);
        let a0 = lat.word_to_element(&c);
        let rem = linalg::sub(&y.log, &lat.group().conjugate(&a0, x).log);
        if r1.is_empty() {
            if rem.iter().all(Zero::is_zero) {
                return Some(c);
            }
            continue;
        }
        let sols1 = linalg::integer_solutions_in_box(&m1, &rem, &vec![(-r, r); r1.len()]);
        if let Some(s1) = sols1.into_iter().next() {
            embed(&r1, &s1, &mut c);
            if verify(&c) {
                return Some(c);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use proptest::prelude::*;

    #[test]
    fn identity_window_has_one_class() {
        let lat = catalog::lattice_ii_1();
        let all = FnPredicate::new("all", |_: &[i64], _: &[Rational]| true);
        let e = enumerate_classes(&lat, &Window::identity(5), &all);
        assert_eq!(e.count(), 1);
        assert!(e.stable);
        assert_eq!(e.classes[0].representative, vec![0; 5]);
    }

    fn seven_family(lat: &Lattice) -> ClassEnumeration {
        let pred = FnPredicate::new("pm7Z+jW", |e: &[i64], _: &[Rational]| e[..3] == [0, 0, 0] && e[3].abs() == 7);
        let w = Window::cube(5, 9).fixed(0, 0, 0).fixed(1, 0, 0).fixed(2, 0, 0).fixed(3, -7, 7);
        enumerate_classes(lat, &w, &pred)
    }

    #[test]
    fn seven_family_counts() {
        let e1 = seven_family(&catalog::lattice_iv_1());
        let e2 = seven_family(&catalog::lattice_iv_2());
        assert_eq!((e1.count(), e2.count()), (28, 14));
        assert!(e1.stable && e2.stable);
        assert_eq!(e1.classes[0].representative, vec![0, 0, 0, -7, -9]);
    }

    #[test]
    fn case_one_family_has_eight_classes() {
        let pred = FnPredicate::new("case1", |e: &[i64], _: &[Rational]| e[..3] == [0, 0, 0] && e[3].abs() == 1);
        let w = Window::cube(7, 3)
            .fixed(0, 0, 0)
            .fixed(1, 0, 0)
            .fixed(2, 0, 0)
            .fixed(3, -1, 1);
        let e = enumerate_classes(&catalog::lattice_iii_1(), &w, &pred);
        assert_eq!(e.count(), 8);
        assert!(e.stable);
    }

    #[test]
    fn worked_example_conjugacy() {
        let lat = catalog::lattice_ii_1();
        let x = lat.word_to_element(&[1, 0, 0, 0, 0]);
        let y = lat.word_to_element(&[1, 0, 0, 2, 0]);
        let forms = [CongruenceFormula::IiGamma1];
        let v = is_conjugate_in_lattice(&lat, &x, &y, None, &forms).unwrap();
        match v {
            LatticeConjugacy::Conjugate { conjugator, closed_form_checked } => {
                assert!(closed_form_checked);
                let a = lat.word_to_element(&conjugator);
                assert_eq!(lat.group().conjugate(&a, &x), y);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seven_family_modulus_fourteen() {
        let lat = catalog::lattice_iv_1();
        let forms = [CongruenceFormula::IiGamma1];
        for j in 0..30 {
            let x = lat.word_to_element(&[0, 0, 0, 7, 0]);
            let y = lat.word_to_element(&[0, 0, 0, 7, j]);
            let v = is_conjugate_in_lattice(&lat, &x, &y, Some(4), &forms).unwrap();
            assert_eq!(v.is_conjugate(), j % 14 == 0, "j = {j}");
        }
    }

    #[test]
    fn non_conjugate_in_g_is_certified() {
        let lat = catalog::lattice_iii_1();
        let x = lat.word_to_element(&[0, 0, 0, 1, 0, 0, 0]);
        let y = lat.word_to_element(&[0, 0, 1, 0, 0, 0, 0]);
        let v = is_conjugate_in_lattice(&lat, &x, &y, Some(2), &[]).unwrap();
        assert!(matches!(v, LatticeConjugacy::NotConjugateInG { .. }));
        let z = GroupElement::from_log(vec![Rational::new(1, 2); 7]);
        assert!(is_conjugate_in_lattice(&lat, &x, &z, None, &[]).is_err());
    }

    fn formulas_for(which: usize) -> (Lattice, Vec<CongruenceFormula>) {
        use CongruenceFormula::*;
        match which {
            0 => (catalog::lattice_ii_1(), vec![IiGamma1]),
            1 => (catalog::lattice_ii_2(), vec![IiGamma2]),
            2 => (catalog::lattice_iii_1(), vec![IiiCase1Gamma1, IiiCase2Gamma1, IiiCase3Gamma1]),
            3 => (catalog::lattice_iii_2(), vec![IiiCase1Gamma2, IiiCase2Gamma2, IiiCase3Gamma2]),
            4 => (catalog::lattice_iv_1(), vec![IiGamma1]),
            _ => (catalog::lattice_iv_2(), vec![IvSevenGamma2]),
        }
    }

    fn family_member(which: usize, pick: usize, s: i64, k1: i64, k2: i64, j: i64, free: &[i64]) -> Vec<i64> {
        match which {
            0 | 1 | 4 => vec![free[0], free[1], free[2], k1, j],
            2 => match pick % 3 {
                0 => vec![0, 0, 0, s, k1, k2, j],
                1 => vec![0, 0, s, 0, k1, 0, j],
                _ => vec![0, 0, 0, 0, k1, k2, j],
            },
            3 => match pick % 3 {
                0 => vec![s, 0, 0, 0, k1, k2, j],
                1 => vec![0, s, 0, 0, k1, 0, j],
                _ => vec![0, 0, 0, 0, k1, k2, j],
            },
            _ => vec![0, 0, 0, 7 * s, j],
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]

        /// Closed-form and layered search agree on conjugates and on random pairs.
        #[test]
        fn closed_form_agrees_with_search(
            which in 0usize..6,
            pick in 0usize..3,
            s in prop_oneof![Just(-1i64), Just(1i64)],
            k1 in -2i64..3, k2 in -2i64..3, j in -3i64..4, j2 in -3i64..4,
            free in proptest::collection::vec(-1i64..2, 3),
            c in proptest::collection::vec(-1i64..2, 7),
        ) {
            let (lat, forms) = formulas_for(which);
            let g = family_member(which, pick, s, k1, k2, j, &free);
            let x = lat.word_to_element(&g);
            let a = lat.word_to_element(&c[..lat.rank()]);
            let y = lat.group().conjugate(&a, &x);
            let v = is_conjugate_in_lattice(&lat, &x, &y, Some(3), &forms).unwrap();
            prop_assert!(v.is_conjugate());
            // random partner in the same family
            let mut g2 = g.clone();
            let last = g2.len() - 1;
            g2[last] = j2;
            let y2 = lat.word_to_element(&g2);
            let v2 = is_conjugate_in_lattice(&lat, &x, &y2, Some(3), &forms);
            prop_assert!(v2.is_ok());
        }
    }
}
