//! Acceptance criteria over the built-in examples. Prints one pass/fail line
//! per criterion and fails if any criterion fails.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nilspec_core::algebra::LieAlgebra;
use nilspec_core::catalog::{self, ExampleName, ExampleRecord, MorphismBundle};
use nilspec_core::geodesics::{
    check_horizontality, check_translation_orthogonality, find_translated_geodesic, heisenberg_spiral_hint, integrate,
    lift_certificate, perturbed_orthogonality, GeodesicInitialData, Geometry, Horizontality, ShootingOptions,
};
use nilspec_core::group::{bch, Lattice};
use nilspec_core::morphisms::{
    is_almost_inner, is_gamma_almost_inner, is_isometry, is_lie_algebra_automorphism, maps_lattice, project_morphism,
    quotient_lattice, sample_points, verify_marking, MarkingOptions, Morphism,
};
use nilspec_core::rational::{qi, Rational};
use nilspec_core::spectra::{
    candidate_lengths, central_elements_at, compare_length_spectra, heisenberg_central_lengths, multiplicity_at,
    transfer_period, Length, MultiplicityOptions, PiPoly, SpectralContext, SpectraError,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t <= limit, format!("took {:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()))
}

fn context(ex: &ExampleRecord) -> SpectralContext {
    SpectralContext::new(ex.algebra.clone(), ex.metric.clone()).expect("3-step example")
}

fn len(s: &str) -> Length {
    Length::parse(s).expect("length expression")
}

fn options(ex: &ExampleRecord) -> MultiplicityOptions {
    MultiplicityOptions { deep_radius: ex.deep_radius }
}

/// Partition by first-layer exponents `(n1, n2, m1, m2)`.
fn case_of(rep: &[i64]) -> usize {
    let (n1, n2, m1, m2) = (rep[0], rep[1], rep[2], rep[3]);
    if n1 != 0 || m2 != 0 {
        1
    } else if n2 != 0 || m1 != 0 {
        2
    } else {
        3
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Independent count of noncentral classes with period `λ`: union-find of
/// lattice elements under conjugation by generators over a deep box of
/// twice the inner radius, one pass per first-layer exponent tuple.
fn brute_force_periods(ctx: &SpectralContext, lat: &Lattice, lambda: &Length, inner: &[(i64, i64)]) -> [usize; 3] {
    let rank = lat.rank();
    let l0 = lat.layer0();
    let deep: Vec<(i64, i64)> = inner[l0..].iter().map(|&(a, b)| (2 * a, 2 * b)).collect();
    let sizes: Vec<usize> = deep.iter().map(|&(a, b)| (b - a + 1) as usize).collect();
    let total: usize = sizes.iter().product();
    let decode = |mut k: usize| -> Vec<i64> {
        deep.iter()
            .zip(&sizes)
            .map(|(&(a, _), &s)| {
                let v = a + (k % s) as i64;
                k /= s;
                v
            })
            .collect()
    };
    let encode = |d: &[i64]| -> Option<usize> {
        let mut k = 0usize;
        for i in (0..d.len()).rev() {
            let (a, b) = deep[i];
            if d[i] < a || d[i] > b {
                return None;
            }
            k = k * sizes[i] + (d[i] - a) as usize;
        }
        Some(k)
    };
    let g = lat.group();
    let conjugators: Vec<_> = (0..rank)
        .flat_map(|i| {
            let x = lat.generator(i);
            [g.inverse(&x), x]
        })
        .collect();
    let mut counts = [0usize; 3];
    let mut head: Vec<i64> = inner[..l0].iter().map(|r| r.0).collect();
    loop {
        let mut w = head.clone();
        w.resize(rank, 0);
        let p = ctx.off_derived(&ctx.quotient.project(&lat.word_to_element(&w).log));
        let p2 = PiPoly::constant(ctx.quotient_norm_sq(&p));
        if p2.cmp_exact(lambda.sq()) != Ordering::Greater {
            let mut parent: Vec<usize> = (0..total).collect();
            for k in 0..total {
                let mut exps = head.clone();
                exps.extend(decode(k));
                let x = lat.word_to_element(&exps);
                for a in &conjugators {
                    let y = lat.canonical_coordinates(&g.conjugate(a, &x)).expect("lattice closed");
                    assert_eq!(&y[..l0], &head[..], "conjugation preserves the first layer");
                    if let Some(j) = encode(&y[l0..]) {
                        let (ra, rb) = (find(&mut parent, k), find(&mut parent, j));
                        parent[ra] = rb;
                    }
                }
            }
            let mut seen: HashSet<usize> = HashSet::new();
            for k in 0..total {
                let d = decode(k);
                let in_inner = d.iter().zip(&inner[l0..]).all(|(v, &(a, b))| a <= *v && *v <= b);
                if !in_inner {
                    continue;
                }
                let r = find(&mut parent, k);
                if !seen.insert(r) {
                    continue;
                }
                let mut exps = head.clone();
                exps.extend(d);
                let x = lat.word_to_element(&exps);
                match transfer_period(ctx, &x.log, lambda) {
                    Ok(v) => {
                        assert!(v.is_decided(), "undecided class {exps:?}");
                        if v.is_period() {
                            counts[case_of(&exps) - 1] += 1;
                        }
                    }
                    Err(SpectraError::Central | SpectraError::Identity) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
        let mut i = 0;
        while i < l0 {
            if head[i] < inner[i].1 {
                head[i] += 1;
                break;
            }
            head[i] = inner[i].0;
            i += 1;
        }
        if i == l0 {
            break;
        }
    }
    counts
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let ex = catalog::example(ExampleName::IV);
    let ctx = context(&ex);
    let l = len("sqrt(4*pi*(7-pi))");
    let e: Vec<_> = ex.lattices.iter().map(|lat| multiplicity_at(&ctx, lat, &l, &options(&ex)).unwrap()).collect();
    ensure(e.iter().all(|x| x.is_complete()), "incomplete enumeration")?;
    ensure((e[0].m_prime, e[1].m_prime) == (28, 14), format!("got {} and {}", e[0].m_prime, e[1].m_prime))?;
    within(t, Duration::from_secs(10))?;
    Ok(format!("example IV at sqrt(4pi(7-pi)): 28 and 14 in {:.2}s", t.elapsed().as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let ex = catalog::example(ExampleName::III);
    let ctx = context(&ex);
    let l = len("1");
    let mut splits = Vec::new();
    let mut totals = Vec::new();
    for lat in &ex.lattices {
        let e = multiplicity_at(&ctx, lat, &l, &options(&ex)).unwrap();
        ensure(e.is_complete(), "incomplete enumeration")?;
        let mut split = [0usize; 3];
        for w in &e.noncentral {
            split[case_of(&w.representative) - 1] += 1;
        }
        let oracle = brute_force_periods(&ctx, lat, &l, &e.window.ranges);
        ensure(oracle == split, format!("enumeration {split:?} but union-find oracle {oracle:?}"))?;
        ensure(e.m_dprime == 2, format!("m'' = {}", e.m_dprime))?;
        splits.push(split);
        totals.push(e.m_prime);
    }
    ensure(splits[0][..2] == [8, 4] && splits[1][..2] == [8, 4], format!("cases 1 and 2: {splits:?}"))?;
    ensure(splits[0][2] == 2 * splits[1][2], format!("case 3 counts {} and {}", splits[0][2], splits[1][2]))?;
    ensure(totals == [20, 16], format!("totals {totals:?}"))?;
    within(t, Duration::from_secs(30))?;
    Ok(format!("example III at 1: cases {:?} vs {:?}, totals 20 > 16, oracle agrees", splits[0], splits[1]))
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let ex = catalog::example(ExampleName::II);
    let ctx = context(&ex);
    let lambdas: Vec<Length> = ex.sweep.iter().map(|s| len(s)).collect();
    let r = compare_length_spectra(&ctx, [&ex.lattices[0], &ex.lattices[1]], &lambdas, &options(&ex), 50, 0x5eed)
        .map_err(|e| e.to_string())?;
    ensure(r.rows.iter().all(|x| x.decided && !x.differs), "spectrum tables differ or are undecided")?;
    let agree = r.class_count_samples.iter().filter(|s| s.agrees() && s.stable).count();
    ensure(agree >= 50 && agree == r.class_count_samples.len(), format!("{agree} agreeing G-class samples"))?;
    within(t, Duration::from_secs(60))?;
    Ok(format!("example II: {agree} G-class samples equal, {} table rows equal", r.rows.len()))
}

fn criterion_4() -> Outcome {
    let ex = catalog::example(ExampleName::V);
    let MorphismBundle::Marking { phi, psi1, psi2 } = &ex.morphisms else { return Err("no marking bundle".into()) };
    let qd = ex.quotient();
    let qa = Arc::new(qd.algebra.clone());
    let phi = Morphism::new(ex.algebra.clone(), phi.clone()).unwrap();
    let psi1 = Morphism::new(qa.clone(), psi1.clone()).unwrap();
    let psi2 = Morphism::new(qa, psi2.clone()).unwrap();
    ensure(is_lie_algebra_automorphism(&phi).passed(), "Φ is not an automorphism")?;
    let proj = project_morphism(&phi, &qd).map_err(|e| e.to_string())?;
    ensure(proj.matrix == psi1.compose(&psi2).matrix, "projection of Φ is not Ψ₁∘Ψ₂")?;
    ensure(is_isometry(&psi1, &qd.metric).passed(), "Ψ₁ is not an isometry")?;
    ensure(is_almost_inner(&psi2, 100, 3, 0x5eed).unwrap().passed(), "Ψ₂ is not almost inner")?;
    let w = ex.algebra.index_of("W").unwrap();
    let minus_w: Vec<Rational> = ex.algebra.basis_vector(w).iter().map(|c| -c).collect();
    ensure(phi.apply(&ex.algebra.basis_vector(w)) == minus_w, "Φ(W) ≠ −W")?;
    let rep = verify_marking(&phi, [&ex.lattices[0], &ex.lattices[1]], &ex.metric, Some((&psi1, &psi2)), &MarkingOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(rep.certifying, "marking does not certify")?;
    Ok("example V: automorphism, π(Φ) = Ψ₁∘Ψ₂, Ψ₁ isometry, Ψ₂ almost inner on 100 samples, Φ(W) = −W".into())
}

fn criterion_5() -> Outcome {
    let opts = ShootingOptions::default();
    let mut parts = Vec::new();
    for name in ExampleName::ALL {
        let ex = catalog::example(name);
        let geo = Geometry::new(&ex.algebra, &ex.metric).unwrap();
        let lat = &ex.lattices[0];
        for idx in [0, lat.rank() - 1] {
            let gamma = geo.from_rational(&lat.generator_logs()[idx]);
            let cert = find_translated_geodesic(&geo, &gamma, None, None, &opts)
                .ok_or_else(|| format!("example {name}: no certificate for generator {idx}"))?;
            ensure(
                cert.residual_translation < 1e-6 && check_translation_orthogonality(&geo, &cert) < 1e-6,
                format!("example {name}, generator {idx}: residuals too large"),
            )?;
            if let Horizontality::Residual(h) = check_horizontality(&geo, &cert) {
                ensure(h < 1e-6, format!("example {name}, generator {idx}: horizontality {h:e}"))?;
            }
            if idx == 0 {
                let p = perturbed_orthogonality(&geo, &cert, 0.1).unwrap_or(0.0);
                ensure(p > 1e-3, format!("example {name}: perturbed residual {p:e} does not detect the tilt"))?;
            }
        }
        parts.push(name.to_string());
    }
    Ok(format!("certified generators on examples {}", parts.join(", ")))
}

fn criterion_6() -> Outcome {
    let ex = catalog::example(ExampleName::IV);
    let qd = ex.quotient();
    let full = Geometry::new(&ex.algebra, &ex.metric).unwrap();
    let quot = Geometry::new(&qd.algebra, &qd.metric).unwrap();
    let seven_z: Vec<Rational> = ex.lattices[0].generator_logs()[3].iter().map(|c| c * qi(7)).collect();
    let gbar = quot.from_rational(&qd.project(&seven_z));
    let closed = len("sqrt(4*pi*(7-pi))");
    let (lh, vh) = heisenberg_spiral_hint(&quot, &gbar, 1).ok_or("no spiral hint")?;
    let opts = ShootingOptions::default();
    let qc = find_translated_geodesic(&quot, &gbar, Some(lh), Some(&vh), &opts).ok_or("quotient shooting failed")?;
    ensure((qc.lambda - closed.value()).abs() < 1e-4, format!("period {} vs {}", qc.lambda, closed.value()))?;
    let lifted = lift_certificate(&full, &quot, &qd, &qc, &full.from_rational(&seven_z), &opts).ok_or("lift failed")?;
    ensure(lifted.residual_translation < 1e-6, "lifted certificate residual")?;
    let list = heisenberg_central_lengths(qi(7)).map_err(|e| e.to_string())?;
    let want = [len("7"), closed];
    ensure(
        list.len() == want.len() && want.iter().all(|w| list.iter().any(|l| l.cmp_exact(w) == Ordering::Equal)),
        format!("closed-form list {:?}", list.iter().map(|l| l.expr().to_string()).collect::<Vec<_>>()),
    )?;
    Ok(format!("7Z quotient period {:.8} within {:.1e} of sqrt(4pi(7-pi)); list {{7, sqrt(4pi(7-pi))}}", qc.lambda, (qc.lambda - want[1].value()).abs()))
}

fn algebras() -> Vec<(&'static str, LieAlgebra)> {
    vec![("I/III/V", catalog::algebra_i()), ("II/IV", catalog::algebra_ii())]
}

fn criterion_7() -> Outcome {
    for (name, l) in algebras() {
        let n = l.dim();
        let pts = sample_points(n, 3000, 3, 7);
        for t in pts.chunks(3) {
            let (a, b, c) = (&t[0].log, &t[1].log, &t[2].log);
            ensure(bch(&l, &bch(&l, a, b), c) == bch(&l, a, &bch(&l, b, c)), format!("{name}: BCH not associative"))?;
        }
        let f = l.derived_series();
        let d1 = f.term(1);
        let pts = sample_points(n, 400, 3, 11);
        for pair in pts.chunks(2) {
            let x = &pair[0].log;
            let y: Vec<Rational> = d1.iter().zip(&pair[1].log).fold(vec![qi(0); n], |acc, (v, c)| {
                acc.iter().zip(v).map(|(s, vi)| s + c * vi).collect()
            });
            ensure(f.depth(&l.bracket(x, &y)) >= 2, format!("{name}: [g, g(1)] not in g(2)"))?;
        }
    }
    for name in ExampleName::ALL {
        let ex = catalog::example(name);
        let qd = ex.quotient();
        let pts = sample_points(ex.algebra.dim(), 200, 3, 13);
        for pair in pts.chunks(2) {
            let (x, y) = (&pair[0].log, &pair[1].log);
            let lhs = qd.project(&bch(&ex.algebra, x, y));
            let rhs = bch(&qd.algebra, &qd.project(x), &qd.project(y));
            ensure(lhs == rhs, format!("example {name}: projection is not a homomorphism"))?;
        }
        let geo = Geometry::new(&ex.algebra, &ex.metric).unwrap();
        let raw: Vec<f64> = (0..geo.dim()).map(|i| 0.3 + 0.17 * i as f64 * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let nv = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let init = GeodesicInitialData::at_identity(raw.iter().map(|x| x / nv).collect());
        let end = |h: f64| integrate(&geo, &init, 4.0, h).unwrap().endpoint().to_vec();
        let (a, b, c) = (end(0.2), end(0.1), end(0.05));
        let dist = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        let ratio = dist(&a, &b) / dist(&b, &c);
        ensure((12.0..=20.0).contains(&ratio), format!("example {name}: Richardson ratio {ratio:.2}"))?;
        for s in &ex.sweep {
            let l = len(s);
            let m: Vec<usize> = ex.lattices.iter().map(|lat| central_elements_at(lat, &ex.metric, &l).len()).collect();
            ensure(m[0] == m[1], format!("example {name} at {s}: m'' {} vs {}", m[0], m[1]))?;
        }
    }
    for (name, lambda) in [(ExampleName::II, "2"), (ExampleName::III, "1"), (ExampleName::IV, "2")] {
        let ex = catalog::example(name);
        let ctx = context(&ex);
        let l = len(lambda);
        for lat in &ex.lattices {
            let base = multiplicity_at(&ctx, lat, &l, &options(&ex)).unwrap();
            let wide = multiplicity_at(&ctx, lat, &l, &MultiplicityOptions { deep_radius: 2 * ex.deep_radius }).unwrap();
            ensure(base.stable && base.m_prime == wide.m_prime, format!("example {name} at {lambda}: window doubling changes m'"))?;
        }
    }
    Ok("BCH associativity (1000 triples per algebra), derived series, Richardson ratios, m'' equality, window doubling".into())
}

fn criterion_8() -> Outcome {
    let ex = catalog::example(ExampleName::I);
    let ctx = context(&ex);
    let opts = options(&ex);
    let lambdas: Vec<Length> = ex.sweep.iter().map(|s| len(s)).collect();
    let r = compare_length_spectra(&ctx, [&ex.lattices[0], &ex.lattices[1]], &lambdas, &opts, 0, 0x5eed)
        .map_err(|e| e.to_string())?;
    let diff = r.rows.iter().find(|x| x.differs && x.decided).ok_or("no certified differing length")?;
    ensure(
        diff.lambda.cmp_exact(&len("sqrt(5)")) == Ordering::Equal
            && (diff.first.m_prime, diff.second.m_prime) == (224, 248),
        format!("first difference at {} with {} vs {}", diff.lambda, diff.first.m_prime, diff.second.m_prime),
    )?;
    let zero = PiPoly::constant(qi(0));
    let top = len("sqrt(5)");
    let sets: Vec<Vec<String>> = ex
        .lattices
        .iter()
        .map(|lat| candidate_lengths(&ctx, lat, &zero, &top, &opts).unwrap().iter().map(|l| l.expr().to_string()).collect())
        .collect();
    ensure(sets[0] == sets[1], format!("candidate lengths {:?} vs {:?}", sets[0], sets[1]))?;
    let MorphismBundle::QuotientRelating { map } = &ex.morphisms else { return Err("no relating map".into()) };
    let qd = ex.quotient();
    let m = Morphism::new(Arc::new(qd.algebra.clone()), map.clone()).unwrap();
    let q1 = quotient_lattice(&ex.lattices[0], &qd).unwrap();
    let q2 = quotient_lattice(&ex.lattices[1], &qd).unwrap();
    ensure(maps_lattice(&m, &q1, &q2).unwrap().holds(), "relating map does not map the quotient lattices")?;
    ensure(is_gamma_almost_inner(&m, &q1, 1).unwrap().passed(), "relating map is not Γ-almost inner")?;
    Ok(format!("example I: differs at sqrt(5) (224 vs 248); candidate lengths {{{}}} agree; relating map Γ-almost inner", sets[0].join(", ")))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("multiplicities 28 and 14", criterion_1),
        ("case split and oracle totals", criterion_2),
        ("isospectral pair without marking", criterion_3),
        ("marking certificate", criterion_4),
        ("translated geodesic certificates", criterion_5),
        ("quotient spiral period", criterion_6),
        ("property suites", criterion_7),
        ("differing spectra", criterion_8),
    ];
    let mut results = BTreeMap::new();
    for (i, (title, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(d) => ("FAIL", d.clone()),
        };
        // the raw handle bypasses test output capture
        let _ = writeln!(std::io::stderr(), "criterion {}: {tag}: {title}: {detail}", i + 1);
        results.insert(i + 1, outcome.is_ok());
    }
    let failed: Vec<usize> = results.iter().filter(|(_, ok)| !**ok).map(|(k, _)| *k).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
