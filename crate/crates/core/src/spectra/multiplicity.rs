use std::cmp::Ordering;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::lengths::{Length, PiPoly};
use super::periods::{classify_with, two_step_periods, PeriodRule, PeriodVerdict, SpectralContext};
use super::SpectraError;
use crate::group::{bch, enumerate_classes, ClassPredicate, GroupElement, Lattice, Window};
use crate::linalg::{self, QMat};
use crate::rational::{is_integer, is_zero_vec, to_f64, QVec, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    /// Every candidate class was decided by a structured rule and the class
    /// count is stable under window doubling.
    CompleteForStructuredCases,
    Provisional,
}

impl std::fmt::Display for Completeness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::CompleteForStructuredCases => "complete_for_structured_cases",
            Self::Provisional => "provisional",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassWitness {
    pub representative: Vec<i64>,
    pub verdict: PeriodVerdict,
    pub size_in_window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub lambda: Length,
    pub lambda_value: f64,
    /// Noncentral classes with `λ` as a period.
    pub m_prime: usize,
    /// Central classes with `λ = |log γ|`.
    pub m_dprime: usize,
    /// Noncentral classes whose verdict no structured rule decides.
    pub undecided: usize,
    pub completeness: Completeness,
    /// Central periods other than `|log γ|` are not searched.
    pub central_witness_based: bool,
    pub stable: bool,
    pub window: Window,
    pub noncentral: Vec<ClassWitness>,
    pub central: Vec<Vec<i64>>,
}

impl SpectrumEntry {
    pub fn m(&self) -> usize {
        self.m_prime + self.m_dprime
    }

    pub fn is_complete(&self) -> bool {
        self.completeness == Completeness::CompleteForStructuredCases
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MultiplicityOptions {
    /// Word-exponent radius on coordinates beyond the first layer.
    pub deep_radius: i64,
}

impl Default for MultiplicityOptions {
    fn default() -> Self {
        Self { deep_radius: 3 }
    }
}

/// Lattice data precomputed against a spectral context.
struct LatticeShape {
    layer0: usize,
    /// First index from which all generators lie in the quotient kernel.
    q_depth: usize,
    /// Quotient images of the first-layer generators, off `[n̄, n̄]`.
    p_vecs: QMat,
    qgens: QMat,
}

fn shape(ctx: &SpectralContext, lat: &Lattice) -> Result<LatticeShape, SpectraError> {
    if lat.algebra().dim() != ctx.algebra.dim() {
        return Err(SpectraError::Dimension { expected: ctx.algebra.dim(), got: lat.algebra().dim() });
    }
    let qgens: QMat = lat.generator_logs().iter().map(|g| ctx.quotient.project(g)).collect();
    let mut q_depth = lat.rank();
    while q_depth > 0 && is_zero_vec(&qgens[q_depth - 1]) {
        q_depth -= 1;
    }
    let layer0 = lat.layer0();
    let p_vecs = qgens[..layer0].iter().map(|v| ctx.off_derived(v)).collect();
    Ok(LatticeShape { layer0, q_depth, p_vecs, qgens })
}

fn layer0_sq(ctx: &SpectralContext, sh: &LatticeShape, exps: &[i64]) -> Rational {
    let mut p = vec![Rational::zero(); ctx.quotient_dim()];
    for (e, v) in exps.iter().zip(&sh.p_vecs) {
        if *e != 0 {
            p = linalg::axpy(&p, &Rational::from_integer(*e as i128), v);
        }
    }
    ctx.quotient_norm_sq(&p)
}

/// Box containing every first-layer exponent vector with `|P|² ≤ λ²`.
fn layer0_box(ctx: &SpectralContext, sh: &LatticeShape, lambda: f64) -> Vec<i64> {
    let qm = &ctx.quotient.metric;
    let gram: QMat = sh.p_vecs.iter().map(|u| sh.p_vecs.iter().map(|v| qm.inner(u, v)).collect()).collect();
    let inv = linalg::inverse(&gram).expect("first-layer generators independent modulo the derived algebra");
    (0..sh.layer0).map(|i| (lambda * to_f64(&inv[i][i]).sqrt() + 1e-9).floor() as i64).collect()
}

fn candidate_window(ctx: &SpectralContext, lat: &Lattice, sh: &LatticeShape, lambda: f64, opts: &MultiplicityOptions) -> Window {
    let bounds = layer0_box(ctx, sh, lambda);
    let mut w = Window::cube(lat.rank(), opts.deep_radius);
    for (i, b) in bounds.into_iter().enumerate() {
        w = w.fixed(i, -b, b);
    }
    w
}

struct PeriodPredicate<'a> {
    ctx: &'a SpectralContext,
    sh: &'a LatticeShape,
    l2: &'a PiPoly,
}

impl ClassPredicate for PeriodPredicate<'_> {
    fn tag(&self) -> String {
        "period".into()
    }

    fn prune_ok(&self, depth: usize, exps: &[i64], partial: &[Rational]) -> bool {
        if depth == self.sh.layer0 {
            let p2 = PiPoly::constant(layer0_sq(self.ctx, self.sh, exps));
            if p2.cmp_exact(self.l2) == Ordering::Greater {
                return false;
            }
        }
        if depth == self.sh.q_depth {
            let gbar = self.ctx.quotient.project(partial);
            let Ok(d) = two_step_periods(self.ctx, &gbar) else {
                return false;
            };
            return !matches!(classify_with(self.ctx, &d, self.l2), PeriodVerdict::NotPeriod(_));
        }
        true
    }

    fn accept(&self, _exps: &[i64], _log: &[Rational]) -> bool {
        true
    }
}

/// Central lattice elements `γ ≠ e` with `|log γ|² = λ²`, as word exponents.
pub fn central_elements_at(lat: &Lattice, metric: &crate::algebra::Metric, lambda: &Length) -> Vec<Vec<i64>> {
    let Some(l2) = lambda.sq().as_rational() else {
        return Vec::new();
    };
    let idx: Vec<usize> = (0..lat.rank()).filter(|&i| lat.is_central_generator(i)).collect();
    if idx.is_empty() {
        return Vec::new();
    }
    let basis: QMat = idx.iter().map(|&i| lat.generator_logs()[i].clone()).collect();
    let gram: QMat = basis.iter().map(|u| basis.iter().map(|v| metric.inner(u, v)).collect()).collect();
    let inv = linalg::inverse(&gram).expect("central generators independent");
    let lam = lambda.value();
    let bounds: Vec<i64> = (0..idx.len()).map(|i| (lam * to_f64(&inv[i][i]).sqrt() + 1e-9).floor() as i64).collect();
    let mut out = Vec::new();
    let mut c = vec![0i64; idx.len()];
    fn rec(
        k: usize,
        c: &mut Vec<i64>,
        bounds: &[i64],
        gram: &QMat,
        l2: &Rational,
        idx: &[usize],
        rank: usize,
        out: &mut Vec<Vec<i64>>,
    ) {
        if k == c.len() {
            if c.iter().all(|&x| x == 0) {
                return;
            }
            let mut s = Rational::zero();
            for i in 0..c.len() {
                for j in 0..c.len() {
                    s += gram[i][j] * Rational::from_integer((c[i] * c[j]) as i128);
                }
            }
            if &s == l2 {
                let mut w = vec![0i64; rank];
                for (p, &i) in idx.iter().enumerate() {
                    w[i] = c[p];
                }
                out.push(w);
            }
            return;
        }
        for e in -bounds[k]..=bounds[k] {
            c[k] = e;
            rec(k + 1, c, bounds, gram, l2, idx, rank, out);
        }
        c[k] = 0;
    }
    rec(0, &mut c, &bounds, &gram, &l2, &idx, lat.rank(), &mut out);
    out.sort();
    out
}

/// `m(λ) = m′(λ) + m″(λ)` for one lattice.
pub fn multiplicity_at(
    ctx: &SpectralContext,
    lat: &Lattice,
    lambda: &Length,
    opts: &MultiplicityOptions,
) -> Result<SpectrumEntry, SpectraError> {
    let sh = shape(ctx, lat)?;
    let window = candidate_window(ctx, lat, &sh, lambda.value(), opts);
    let pred = PeriodPredicate { ctx, sh: &sh, l2: lambda.sq() };
    let en = enumerate_classes(lat, &window, &pred);
    let mut noncentral = Vec::new();
    for c in &en.classes {
        let gbar = ctx.quotient.project(&c.element.log);
        let d = two_step_periods(ctx, &gbar)?;
        noncentral.push(ClassWitness {
            representative: c.representative.clone(),
            verdict: classify_with(ctx, &d, lambda.sq()),
            size_in_window: c.size_in_window,
        });
    }
    let m_prime = noncentral.iter().filter(|w| w.verdict.is_period()).count();
    let undecided = noncentral.iter().filter(|w| !w.verdict.is_decided()).count();
    noncentral.retain(|w| w.verdict.is_period() || !w.verdict.is_decided());
    let central = central_elements_at(lat, &ctx.metric, lambda);
    let complete = en.stable && undecided == 0;
    Ok(SpectrumEntry {
        lambda: lambda.clone(),
        lambda_value: lambda.value(),
        m_prime,
        m_dprime: central.len(),
        undecided,
        completeness: if complete { Completeness::CompleteForStructuredCases } else { Completeness::Provisional },
        central_witness_based: true,
        stable: en.stable,
        window,
        noncentral,
        central,
    })
}

/// Definite periods (extremes, Heisenberg lists, central norms) of lattice
/// elements with `lo ≤ λ ≤ hi`, ascending and without repeats.
pub fn candidate_lengths(
    ctx: &SpectralContext,
    lat: &Lattice,
    lo: &PiPoly,
    hi: &Length,
    opts: &MultiplicityOptions,
) -> Result<Vec<Length>, SpectraError> {
    let sh = shape(ctx, lat)?;
    let window = candidate_window(ctx, lat, &sh, hi.value(), opts);
    let ql = &ctx.quotient.algebra;
    let mut found: Vec<PiPoly> = Vec::new();
    let mut stack: Vec<(usize, QVec, Vec<i64>)> = vec![(0, vec![Rational::zero(); ctx.quotient_dim()], Vec::new())];
    while let Some((depth, partial, exps)) = stack.pop() {
        if depth == sh.layer0 {
            let p2 = PiPoly::constant(layer0_sq(ctx, &sh, &exps));
            if p2.cmp_exact(hi.sq()) == Ordering::Greater {
                continue;
            }
        }
        if depth == sh.q_depth {
            if let Ok(d) = two_step_periods(ctx, &partial) {
                for p in d.definite_periods {
                    let s = p.sq();
                    if s.cmp_exact(lo) != Ordering::Less && s.cmp_exact(hi.sq()) != Ordering::Greater && !found.contains(s) {
                        found.push(s.clone());
                    }
                }
            }
            continue;
        }
        let (a, b) = window.ranges[depth];
        for e in a..=b {
            let step = linalg::scale(&sh.qgens[depth], &Rational::from_integer(e as i128));
            let next = if e == 0 { partial.clone() } else { bch(ql, &partial, &step) };
            let mut ex = exps.clone();
            ex.push(e);
            stack.push((depth + 1, next, ex));
        }
    }
    let idx: Vec<usize> = (0..lat.rank()).filter(|&i| lat.is_central_generator(i)).collect();
    let r = opts.deep_radius.max(hi.value().ceil() as i64);
    let central_window = Window::new(idx.iter().map(|_| (-r, r)).collect());
    let basis: Vec<&QVec> = idx.iter().map(|&i| &lat.generator_logs()[i]).collect();
    let mut c = vec![0i64; idx.len()];
    loop {
        if c.iter().any(|&x| x != 0) {
            let mut v = vec![Rational::zero(); ctx.algebra.dim()];
            for (k, b) in basis.iter().enumerate() {
                v = linalg::axpy(&v, &Rational::from_integer(c[k] as i128), b);
            }
            let s = PiPoly::constant(ctx.metric.norm_sq(&v));
            if s.cmp_exact(lo) != Ordering::Less && s.cmp_exact(hi.sq()) != Ordering::Greater && !found.contains(&s) {
                found.push(s);
            }
        }
        let mut k = 0;
        while k < c.len() {
            if c[k] < central_window.ranges[k].1 {
                c[k] += 1;
                break;
            }
            c[k] = central_window.ranges[k].0;
            k += 1;
        }
        if k == c.len() {
            break;
        }
    }
    found.retain(|p| p.signum() == Ordering::Greater);
    found.sort_by(|a, b| a.cmp_exact(b));
    Ok(found.into_iter().map(Length::from_sq).collect())
}

/// Spectrum rows for every candidate length in `[lo, hi]`.
pub fn spectrum_table(
    ctx: &SpectralContext,
    lat: &Lattice,
    lo: &PiPoly,
    hi: &Length,
    opts: &MultiplicityOptions,
) -> Result<Vec<SpectrumEntry>, SpectraError> {
    let lengths = candidate_lengths(ctx, lat, lo, hi, opts)?;
    lengths.par_iter().map(|l| multiplicity_at(ctx, lat, l, opts)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub lambda: Length,
    pub first: SpectrumEntry,
    pub second: SpectrumEntry,
    pub differs: bool,
    /// Both entries complete, so `differs` is a certified verdict.
    pub decided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GClassSample {
    pub source_lattice: usize,
    pub exponents: Vec<i64>,
    pub first: usize,
    pub second: usize,
    pub stable: bool,
}

impl GClassSample {
    pub fn agrees(&self) -> bool {
        self.first == self.second
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub same_central_intersection: bool,
    /// Lattice pairs with equal `Γ ∩ Z(G)` must give equal `m″` columns.
    pub central_columns_equal: bool,
    pub class_count_samples: Vec<GClassSample>,
}

impl ComparisonReport {
    pub fn differing(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.differs)
    }

    pub fn samples_agree(&self) -> bool {
        self.class_count_samples.iter().all(|s| s.stable && s.agrees())
    }
}

pub fn compare_length_spectra(
    ctx: &SpectralContext,
    lats: [&Lattice; 2],
    lambdas: &[Length],
    opts: &MultiplicityOptions,
    samples: usize,
    seed: u64,
) -> Result<ComparisonReport, SpectraError> {
    let rows: Vec<ComparisonRow> = lambdas
        .par_iter()
        .map(|l| {
            let first = multiplicity_at(ctx, lats[0], l, opts)?;
            let second = multiplicity_at(ctx, lats[1], l, opts)?;
            Ok(ComparisonRow {
                lambda: l.clone(),
                differs: first.m() != second.m(),
                decided: first.is_complete() && second.is_complete(),
                first,
                second,
            })
        })
        .collect::<Result<_, SpectraError>>()?;
    let central_columns_equal = rows.iter().all(|r| r.first.m_dprime == r.second.m_dprime);
    let class_count_samples = if samples > 0 { sample_g_class_counts(lats, samples, seed, opts.deep_radius)? } else { Vec::new() };
    Ok(ComparisonReport {
        rows,
        same_central_intersection: lats[0].same_central_intersection(lats[1]),
        central_columns_equal,
        class_count_samples,
    })
}

struct GClassPredicate<'a> {
    lat: &'a Lattice,
    x: &'a GroupElement,
    derived: &'a QMat,
    layer0: usize,
}

impl ClassPredicate for GClassPredicate<'_> {
    fn tag(&self) -> String {
        "g_class".into()
    }

    fn prune_ok(&self, depth: usize, _exps: &[i64], partial: &[Rational]) -> bool {
        depth != self.layer0 || linalg::in_span(self.derived, &linalg::sub(partial, &self.x.log))
    }

    fn accept(&self, _exps: &[i64], log: &[Rational]) -> bool {
        self.lat.group().is_conjugate_in_g(self.x, &GroupElement::from_log(log.to_vec())).witness().is_some()
    }
}

/// `#{[γ]_Γ ⊂ [x]_G}` over a window whose deep coordinates have radius `r`.
pub fn g_class_count(lat: &Lattice, x: &GroupElement, r: i64) -> (usize, bool) {
    let l = lat.algebra();
    let derived = l.derived_series().term(1);
    let layer0 = lat.layer0();
    let mut family: QMat = lat.generator_logs()[..layer0].to_vec();
    family.extend(derived.iter().cloned());
    let Some(c) = linalg::coordinates_in(&family, &x.log) else {
        return (0, true);
    };
    if !c[..layer0].iter().all(is_integer) {
        return (0, true);
    }
    let mut w = Window::cube(lat.rank(), r);
    for (i, e) in c[..layer0].iter().enumerate() {
        let e = *e.numer() as i64;
        w = w.fixed(i, e, e);
    }
    let pred = GClassPredicate { lat, x, derived: &derived, layer0 };
    let en = enumerate_classes(lat, &w, &pred);
    (en.count(), en.stable)
}

/// Compares `G`-class splittings on random elements of both lattices.
pub fn sample_g_class_counts(lats: [&Lattice; 2], samples: usize, seed: u64, r: i64) -> Result<Vec<GClassSample>, SpectraError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<(usize, Vec<i64>)> = (0..samples)
        .map(|s| {
            let lat = lats[s % 2];
            let exps = (0..lat.rank())
                .map(|i| if i < lat.layer0() { rng.gen_range(-1..=1) } else { rng.gen_range(-2..=2) })
                .collect();
            (s % 2, exps)
        })
        .collect();
    Ok(picks
        .into_par_iter()
        .map(|(src, exps)| {
            let x = lats[src].word_to_element(&exps);
            let (a, sa) = g_class_count(lats[0], &x, r);
            let (b, sb) = g_class_count(lats[1], &x, r);
            GClassSample { source_lattice: src, exponents: exps, first: a, second: b, stable: sa && sb }
        })
        .collect())
}

/// Rule used for a witness, if decided.
pub fn witness_rule(w: &ClassWitness) -> Option<PeriodRule> {
    match w.verdict {
        PeriodVerdict::Period(r) | PeriodVerdict::NotPeriod(r) => Some(r),
        PeriodVerdict::Undecided => None,
    }
}
