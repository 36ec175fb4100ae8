use std::cmp::Ordering;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use serde::Serialize;
use serde_json::{json, Value};

use nilspec_core::algebra::{quotient_algebra, AdaptedFrame, LieAlgebra, NonsingularityVerdict};
use nilspec_core::catalog::{self, ExampleName, MorphismBundle};
use nilspec_core::geodesics::{
    find_translated_geodesic, heisenberg_spiral_hint, lift_certificate, Geometry, ShootingOptions,
    TranslationCertificate,
};
use nilspec_core::group::Lattice;
use nilspec_core::io::{read_json, MorphismFile};
use nilspec_core::morphisms::{
    is_almost_inner, is_gamma_almost_inner, is_isometry, is_lie_algebra_automorphism, maps_lattice,
    quotient_lattice, verify_marking, AlmostInnerVerdict, IsometryVerdict, MarkingOptions, MarkingReport, Morphism,
};
use nilspec_core::rational::{format_rational, q, qi, rational_sqrt};
use nilspec_core::spectra::{
    candidate_lengths, compare_length_spectra, heisenberg_central_lengths, multiplicity_at, Length, MultiplicityOptions,
    PiPoly, SpectralContext, SpectrumEntry,
};

use crate::source::{Loaded, SourceArgs};
use crate::{CliError, CommonArgs, Format, EXIT_MISMATCH, EXIT_OK};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn write_csv(out: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(out: &mut dyn Write, v: &impl Serialize) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

fn write_summary(out: &mut dyn Write, items: &[(&str, String)]) -> Result<(), CliError> {
    for (k, v) in items {
        writeln!(out, "# {k},{v}")?;
    }
    Ok(())
}

fn context(loaded: &Loaded) -> Result<SpectralContext, CliError> {
    SpectralContext::new(loaded.algebra.clone(), loaded.metric.clone()).map_err(|e| usage(e.to_string()))
}

// ---------------------------------------------------------------- validate

#[derive(Serialize)]
struct Check {
    check: String,
    status: &'static str,
    detail: String,
}

fn check(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Check {
    Check { check: name.into(), status: if ok { "pass" } else { "fail" }, detail: detail.into() }
}

fn info(name: impl Into<String>, detail: impl Into<String>) -> Check {
    Check { check: name.into(), status: "info", detail: detail.into() }
}

fn structural_checks(l: &LieAlgebra, loaded: &Loaded, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let rep = l.check_structure();
    let algebraic = rep.antisymmetry.is_empty() && rep.jacobi.is_empty();
    out.push(check(
        "structure",
        algebraic,
        if algebraic { "antisymmetry and Jacobi identity hold".to_string() } else { rep.summary(l) },
    ));
    if !algebraic {
        return out;
    }
    let f = l.derived_series();
    let step_ok = f.step == l.declared_step() && f.step <= 3;
    out.push(check("step", step_ok, format!("step {} (declared {})", f.step, l.declared_step())));
    let dims: Vec<String> = f.dims(l.dim()).iter().map(ToString::to_string).collect();
    out.push(info("derived_series", format!("dims ({})", dims.join("; "))));
    out.push(check(
        "center",
        f.center_is_last_term(),
        format!("dim z = {}, last derived term has dim {}", f.center.len(), f.last().len()),
    ));
    let ns = l.is_strictly_nonsingular(100, seed);
    let detail = match &ns {
        NonsingularityVerdict::PassedRandomized { trials } => format!("passed {trials} randomized exact trials"),
        NonsingularityVerdict::ProvenFalse { witness } => {
            format!("fails at X = ({})", witness.iter().map(format_rational).collect::<Vec<_>>().join(", "))
        }
        NonsingularityVerdict::Degenerate { reason } => reason.clone(),
    };
    out.push(check("strict_nonsingularity", ns.passed(), detail));
    if f.step >= 2 && f.step <= 3 {
        match AdaptedFrame::new(l, &loaded.metric) {
            Ok(frame) => {
                let bad = frame.check_invariants(l, &loaded.metric);
                let (j, k, t) = frame.dims();
                out.push(check(
                    "adapted_frame",
                    bad.is_empty(),
                    if bad.is_empty() { format!("J = {j}, K = {k}, T = {t}") } else { bad.join("; ") },
                ));
            }
            Err(e) => out.push(check("adapted_frame", false, e.to_string())),
        }
        match quotient_algebra(l, &loaded.metric) {
            Ok(qd) => {
                let qs = qd.algebra.derived_series().step;
                out.push(check("quotient", qs + 1 == f.step, format!("quotient has dim {} and step {qs}", qd.algebra.dim())));
            }
            Err(e) => out.push(check("quotient", false, e.to_string())),
        }
    }
    out
}

pub fn validate(source: &SourceArgs, common: &CommonArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = source.load()?;
    let l = loaded.algebra.clone();
    let mut checks = vec![info("source", loaded.label.clone())];
    checks.extend(structural_checks(&l, &loaded, common.seed));
    let structure_ok = checks.iter().all(|c| c.status != "fail");
    let mut good: Vec<&Lattice> = Vec::new();
    for (i, lat) in loaded.lattices.iter().enumerate() {
        let name = format!("lattice_{}", i + 1);
        match lat {
            Ok(lat) if structure_ok => {
                checks.push(check(name, true, format!("rank {}, {} generators outside g(1)", lat.rank(), lat.layer0())));
                good.push(lat);
            }
            Ok(_) => checks.push(check(name, false, "skipped: algebra failed structural checks")),
            Err(e) => checks.push(check(name, false, e.clone())),
        }
    }
    if good.len() == 2 {
        let same = good[0].same_central_intersection(good[1]);
        checks.push(info("central_intersection", if same { "equal" } else { "different" }));
    }
    let ok = checks.iter().all(|c| c.status != "fail");
    match common.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> =
                checks.iter().map(|c| vec![c.check.clone(), c.status.to_string(), c.detail.clone()]).collect();
            write_csv(out, &["check", "status", "detail"], &rows)?;
        }
        Format::Json => write_json(out, &json!({ "source": loaded.label, "passed": ok, "checks": checks }))?,
    }
    Ok(if ok { EXIT_OK } else { EXIT_MISMATCH })
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Clone, Args)]
pub struct LambdaArgs {
    /// Length expression, e.g. `sqrt(4*pi*(7-pi))`; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Vec<String>,
    /// Window `A..B` of lengths; every definite period in it is listed.
    #[arg(long, conflicts_with = "lambda")]
    pub lambda_window: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub lambdas: LambdaArgs,
    /// Only this lattice (1 or 2).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub lattice_index: Option<u8>,
}

fn parse_length(s: &str) -> Result<Length, CliError> {
    Length::parse(s).map_err(|e| usage(format!("invalid length '{s}': {e}")))
}

fn parse_window(w: &str) -> Result<(PiPoly, Length), CliError> {
    let (a, b) = w.split_once("..").ok_or_else(|| usage(format!("window '{w}' must look like A..B")))?;
    let lo = if a.trim().parse::<f64>().is_ok_and(|x| x == 0.0) { PiPoly::constant(qi(0)) } else { parse_length(a)?.sq().clone() };
    let hi = parse_length(b)?;
    if lo.cmp_exact(hi.sq()) == Ordering::Greater {
        return Err(usage(format!("window '{w}' is empty")));
    }
    Ok((lo, hi))
}

/// Requested lengths: explicit list, every candidate in a window, or the
/// example's sweep.
fn resolve_lambdas(
    args: &LambdaArgs,
    loaded: &Loaded,
    ctx: &SpectralContext,
    lats: &[&Lattice],
    opts: &MultiplicityOptions,
) -> Result<Vec<Length>, CliError> {
    if let Some(w) = &args.lambda_window {
        let (lo, hi) = parse_window(w)?;
        let mut all: Vec<Length> = Vec::new();
        for lat in lats {
            for l in candidate_lengths(ctx, lat, &lo, &hi, opts).map_err(|e| usage(e.to_string()))? {
                if !all.iter().any(|x| x.cmp_exact(&l) == Ordering::Equal) {
                    all.push(l);
                }
            }
        }
        all.sort_by(|a, b| a.cmp_exact(b));
        return Ok(all);
    }
    if !args.lambda.is_empty() {
        return args.lambda.iter().map(|s| parse_length(s)).collect();
    }
    match &loaded.example {
        Some(ex) => ex.sweep.iter().map(|s| parse_length(s)).collect(),
        None => Err(usage("pass --lambda EXPR or --lambda-window A..B")),
    }
}

fn witness_list(e: &SpectrumEntry) -> String {
    let fmt = |v: &[i64]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
    e.noncentral
        .iter()
        .map(|w| format!("[{}]", fmt(&w.representative)))
        .chain(e.central.iter().map(|c| format!("central[{}]", fmt(c))))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Serialize)]
struct SpectrumRow<'a> {
    lattice: usize,
    m: usize,
    #[serde(flatten)]
    entry: &'a SpectrumEntry,
}

pub fn spectrum(args: &SpectrumArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = args.source.load()?;
    let ctx = context(&loaded)?;
    let lats = loaded.require_lattices(1)?;
    let selected: Vec<usize> = match args.lattice_index {
        Some(i) => {
            let i = usize::from(i) - 1;
            if i >= lats.len() {
                return Err(usage(format!("lattice {} not loaded", i + 1)));
            }
            vec![i]
        }
        None => (0..lats.len()).collect(),
    };
    let opts = MultiplicityOptions { deep_radius: loaded.deep_radius(args.common.window) };
    let chosen: Vec<&Lattice> = selected.iter().map(|&i| lats[i]).collect();
    let lambdas = resolve_lambdas(&args.lambdas, &loaded, &ctx, &chosen, &opts)?;
    let mut entries: Vec<(usize, SpectrumEntry)> = Vec::new();
    for &i in &selected {
        for l in &lambdas {
            entries.push((i + 1, multiplicity_at(&ctx, lats[i], l, &opts).map_err(|e| usage(e.to_string()))?));
        }
    }
    let mut code = EXIT_OK;
    if let Some(ex) = &loaded.example {
        for claim in &ex.claims.multiplicities {
            let cl = parse_length(claim.lambda)?;
            let expected = [claim.m_prime.0, claim.m_prime.1];
            for (lat, e) in &entries {
                if e.lambda.cmp_exact(&cl) == Ordering::Equal && (e.m_prime != expected[lat - 1] || !e.is_complete()) {
                    code = EXIT_MISMATCH;
                }
            }
        }
    }
    match args.common.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = entries
                .iter()
                .map(|(lat, e)| {
                    vec![
                        lat.to_string(),
                        e.lambda.expr().to_string(),
                        format!("{:.12}", e.lambda_value),
                        e.m_prime.to_string(),
                        e.m_dprime.to_string(),
                        e.m().to_string(),
                        e.undecided.to_string(),
                        e.completeness.to_string(),
                        witness_list(e),
                    ]
                })
                .collect();
            write_csv(
                out,
                &[
                    "lattice",
                    "lambda_expression",
                    "lambda_float",
                    "m_prime",
                    "m_dprime",
                    "m",
                    "undecided",
                    "completeness",
                    "witnesses",
                ],
                &rows,
            )?;
        }
        Format::Json => {
            let rows: Vec<SpectrumRow> = entries.iter().map(|(lat, e)| SpectrumRow { lattice: *lat, m: e.m(), entry: e }).collect();
            write_json(out, &rows)?;
        }
    }
    Ok(code)
}

// ---------------------------------------------------------------- compare

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub lambdas: LambdaArgs,
    /// Sampled elements for the `G`-class splitting comparison.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Verdict {
    Yes,
    No,
    Undetermined,
}

impl Verdict {
    fn as_str(self) -> &'static str {
        match self {
            Self::Yes => "yes",
            Self::No => "no",
            Self::Undetermined => "undetermined",
        }
    }

    fn matches(self, claim: bool) -> bool {
        matches!((self, claim), (Self::Yes, true) | (Self::No, false))
    }
}

fn example_marking(name: ExampleName) -> Option<MarkingReport> {
    let ex = catalog::example(name);
    let MorphismBundle::Marking { phi, psi1, psi2 } = &ex.morphisms else { return None };
    let qd = ex.quotient();
    let qa = Arc::new(qd.algebra.clone());
    let phi = Morphism::new(ex.algebra.clone(), phi.clone()).ok()?;
    let psi1 = Morphism::new(qa.clone(), psi1.clone()).ok()?;
    let psi2 = Morphism::new(qa, psi2.clone()).ok()?;
    let lats = [&ex.lattices[0], &ex.lattices[1]];
    verify_marking(&phi, lats, &ex.metric, Some((&psi1, &psi2)), &MarkingOptions::default()).ok()
}

pub fn compare(args: &CompareArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = args.source.load()?;
    let ctx = context(&loaded)?;
    let lats = loaded.require_lattices(2)?;
    let opts = MultiplicityOptions { deep_radius: loaded.deep_radius(args.common.window) };
    let lambdas = resolve_lambdas(&args.lambdas, &loaded, &ctx, &lats[..2], &opts)?;
    let report = compare_length_spectra(&ctx, [lats[0], lats[1]], &lambdas, &opts, args.samples, args.common.seed)
        .map_err(|e| usage(e.to_string()))?;
    let witness = report.rows.iter().find(|r| r.differs && r.decided).map(|r| r.lambda.expr().to_string());
    let all_decided = report.rows.iter().all(|r| r.decided);
    let verdict = if witness.is_some() {
        Verdict::No
    } else if all_decided && report.samples_agree() {
        Verdict::Yes
    } else {
        Verdict::Undetermined
    };
    let occurring = |k: usize| -> Vec<String> {
        report
            .rows
            .iter()
            .filter(|r| if k == 0 { r.first.m() > 0 } else { r.second.m() > 0 })
            .map(|r| r.lambda.expr().to_string())
            .collect()
    };
    let same_occurring = occurring(0) == occurring(1);
    let marking = loaded.example.as_ref().and_then(|e| example_marking(e.name));
    let code = match &loaded.example {
        Some(ex) if !verdict.matches(ex.claims.same_length_spectrum) => EXIT_MISMATCH,
        Some(_) => EXIT_OK,
        None if verdict == Verdict::Undetermined => EXIT_MISMATCH,
        None => EXIT_OK,
    };
    let mut summary = vec![
        ("same_length_spectrum", verdict.as_str().to_string()),
        ("differing_lambda", witness.clone().unwrap_or_default()),
        ("same_occurring_lengths", same_occurring.to_string()),
        ("central_columns_equal", report.central_columns_equal.to_string()),
        ("same_central_intersection", report.same_central_intersection.to_string()),
    ];
    if !report.class_count_samples.is_empty() {
        let agree = report.class_count_samples.iter().filter(|s| s.agrees() && s.stable).count();
        summary.push(("g_class_samples_agreeing", format!("{agree}/{}", report.class_count_samples.len())));
    }
    if let Some(m) = &marking {
        summary.push(("marking_certified", m.certifying.to_string()));
    }
    if let Some(ex) = &loaded.example {
        summary.push(("claimed_same_length_spectrum", ex.claims.same_length_spectrum.to_string()));
    }
    match args.common.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.lambda.expr().to_string(),
                        format!("{:.12}", r.lambda.value()),
                        r.first.m_prime.to_string(),
                        r.first.m_dprime.to_string(),
                        r.second.m_prime.to_string(),
                        r.second.m_dprime.to_string(),
                        r.first.completeness.to_string(),
                        r.second.completeness.to_string(),
                        r.differs.to_string(),
                    ]
                })
                .collect();
            write_csv(
                out,
                &[
                    "lambda_expression",
                    "lambda_float",
                    "m_prime_1",
                    "m_dprime_1",
                    "m_prime_2",
                    "m_dprime_2",
                    "completeness_1",
                    "completeness_2",
                    "differs",
                ],
                &rows,
            )?;
            write_summary(out, &summary)?;
        }
        Format::Json => {
            let summary: serde_json::Map<String, Value> =
                summary.into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
            write_json(out, &json!({ "summary": summary, "report": report, "marking": marking }))?;
        }
    }
    Ok(code)
}

// ---------------------------------------------------------------- geodesic

#[derive(Debug, Clone, Args)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Word exponents of γ in the chosen lattice, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: String,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub lattice_index: u8,
    /// Shoot in the 2-step quotient for π(γ).
    #[arg(long)]
    pub quotient: bool,
    #[arg(long)]
    pub lambda_hint: Option<f64>,
    /// Initial velocity hint in adapted-frame coordinates, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub velocity_hint: Option<String>,
    /// Use the k-th Heisenberg spiral as hint for central quotient elements.
    #[arg(long)]
    pub spiral: Option<u32>,
    #[arg(long, default_value_t = 32)]
    pub starts: usize,
    /// Write the certified trajectory over one period as CSV.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| usage(format!("invalid {what} entry '{}'", t.trim()))))
        .collect()
}

#[derive(Serialize)]
struct GeodesicReport {
    source: String,
    lattice: u8,
    exponents: Vec<i64>,
    log_gamma: Vec<String>,
    mode: &'static str,
    certified: bool,
    lambda: Option<f64>,
    closed_form_lengths: Vec<String>,
    closed_form_distance: Option<f64>,
    certificate: Option<TranslationCertificate>,
}

pub fn geodesic(args: &GeodesicArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = args.source.load()?;
    let lats = loaded.require_lattices(usize::from(args.lattice_index))?;
    let lat = lats[usize::from(args.lattice_index) - 1];
    let exps: Vec<i64> = parse_list(&args.gamma, "exponent")?;
    let x = lat.try_word_to_element(&exps).map_err(|e| usage(e.to_string()))?;
    if x.is_identity() {
        return Err(usage("γ is the identity"));
    }
    let l = &loaded.algebra;
    let m = &loaded.metric;
    let full = Geometry::new(l, m).map_err(|e| usage(e.to_string()))?;
    let qd = quotient_algebra(l, m).map_err(|e| usage(e.to_string()))?;
    let quot = Geometry::new(&qd.algebra, &qd.metric).map_err(|e| usage(e.to_string()))?;
    let velocity_hint: Option<Vec<f64>> = args.velocity_hint.as_deref().map(|s| parse_list(s, "velocity")).transpose()?;
    let opts = ShootingOptions { starts: args.starts.max(1), seed: args.common.seed, ..ShootingOptions::default() };
    let gbar = qd.project(&x.log);
    let gbar_central = qd.algebra.is_central(&gbar);
    let shoot_quotient = || -> Option<TranslationCertificate> {
        let g = quot.from_rational(&gbar);
        let spiral = args.spiral.or(if gbar_central && velocity_hint.is_none() { Some(1) } else { None });
        let (lh, vh) = match spiral.and_then(|k| heisenberg_spiral_hint(&quot, &g, k)) {
            Some((lh, vh)) => (Some(args.lambda_hint.unwrap_or(lh)), Some(vh)),
            None => (args.lambda_hint, velocity_hint.clone()),
        };
        find_translated_geodesic(&quot, &g, lh, vh.as_deref(), &opts)
    };
    let g_full = full.from_rational(&x.log);
    let (mode, cert, geo) = if args.quotient {
        ("quotient", shoot_quotient(), &quot)
    } else if l.is_central(&x.log) {
        let lh = args.lambda_hint.or(Some(m.norm_sq(&x.log)).map(|s| nilspec_core::rational::to_f64(&s).sqrt()));
        ("central", find_translated_geodesic(&full, &g_full, lh, velocity_hint.as_deref(), &opts), &full)
    } else {
        let lifted = || shoot_quotient().and_then(|qc| lift_certificate(&full, &quot, &qd, &qc, &g_full, &opts));
        if gbar_central {
            ("lifted", lifted(), &full)
        } else {
            match find_translated_geodesic(&full, &g_full, args.lambda_hint, velocity_hint.as_deref(), &opts) {
                Some(c) => ("direct", Some(c), &full),
                None => ("lifted", lifted(), &full),
            }
        }
    };
    // closed forms for central elements of a Heisenberg quotient factor
    let ctx = context(&loaded)?;
    let mut closed: Vec<Length> = Vec::new();
    if gbar_central && ctx.is_heisenberg_split() && ctx.rotation_constant_sq() == qi(1) && mode != "central" {
        if let Some(z) = rational_sqrt(&qd.metric.norm_sq(&gbar)) {
            closed = heisenberg_central_lengths(z).unwrap_or_default();
        }
    }
    let distance = cert.as_ref().and_then(|c| {
        closed.iter().map(|l| (l.value() - c.lambda).abs()).min_by(|a, b| a.total_cmp(b))
    });
    let certified = cert.as_ref().is_some_and(|c| {
        c.residual_translation < opts.tolerance
            && c.residual_orthogonality < opts.tolerance
            && c.residual_horizontality.is_none_or(|h| h < opts.tolerance)
    });
    let closed_ok = closed.is_empty() || distance.is_some_and(|d| d < 1e-4);
    if let (Some(path), Some(c)) = (&args.trajectory, &cert) {
        let traj = c.trajectory(geo, c.lambda);
        let mut w = csv::Writer::from_writer(File::create(path)?);
        let mut header = vec!["s".to_string()];
        header.extend((1..=geo.dim()).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for (s, p) in traj.times.iter().zip(&traj.points) {
            let mut row = vec![format!("{s:.6}")];
            row.extend(p.iter().map(|v| format!("{v:.12e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    let report = GeodesicReport {
        source: loaded.label.clone(),
        lattice: args.lattice_index,
        exponents: exps,
        log_gamma: x.log.iter().map(format_rational).collect(),
        mode,
        certified,
        lambda: cert.as_ref().map(|c| c.lambda),
        closed_form_lengths: closed.iter().map(|l| l.expr().to_string()).collect(),
        closed_form_distance: distance,
        certificate: cert,
    };
    match args.common.format {
        Format::Json => write_json(out, &report)?,
        Format::Csv => {
            let c = report.certificate.as_ref();
            let f = |v: Option<f64>| v.map(|x| format!("{x:.3e}")).unwrap_or_default();
            write_csv(
                out,
                &["mode", "certified", "lambda", "residual_translation", "residual_orthogonality", "residual_horizontality", "closed_form_distance"],
                &[vec![
                    report.mode.to_string(),
                    report.certified.to_string(),
                    report.lambda.map(|l| format!("{l:.12}")).unwrap_or_default(),
                    f(c.map(|c| c.residual_translation)),
                    f(c.map(|c| c.residual_orthogonality)),
                    f(c.and_then(|c| c.residual_horizontality)),
                    f(report.closed_form_distance),
                ]],
            )?;
        }
    }
    Ok(if certified && closed_ok { EXIT_OK } else { EXIT_MISMATCH })
}

// ---------------------------------------------------------------- morphism

#[derive(Debug, Clone, Args)]
pub struct MorphismArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Automorphism of the algebra (morphism file).
    #[arg(long)]
    pub phi: Option<PathBuf>,
    /// Isometric factor on the quotient (morphism file).
    #[arg(long)]
    pub psi1: Option<PathBuf>,
    /// Almost-inner factor on the quotient (morphism file).
    #[arg(long)]
    pub psi2: Option<PathBuf>,
    /// Sample count for almost-inner checks.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Word radius of the lattice window for Γ-almost-inner checks.
    #[arg(long, default_value_t = 1)]
    pub radius: i64,
}

fn load_morphism(path: &Path, algebra: Arc<LieAlgebra>) -> Result<Morphism, CliError> {
    Ok(read_json::<MorphismFile>(path)?.to_morphism(algebra)?)
}

fn marking_rows(r: &MarkingReport) -> Vec<Vec<String>> {
    let status = |b: Option<bool>| match b {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "not_supplied",
    };
    let c = &r.checks;
    let mut rows = vec![
        vec!["automorphism".into(), status(Some(r.automorphism.passed())).into(), format!("{:?}", r.automorphism)],
        vec![
            "generator_images".into(),
            status(Some(c.generator_image_ok)).into(),
            r.lattice_mapping.as_ref().map(|m| format!("{m:?}")).unwrap_or_default(),
        ],
        vec!["central_intersection".into(), status(Some(c.central_intersection_ok)).into(), String::new()],
        vec!["central_case".into(), status(Some(c.central_case_ok)).into(), format!("failures {:?}", r.central_failures)],
        vec!["projection_factorization".into(), status(c.projection_factorization_ok).into(), String::new()],
        vec![
            "quotient_marking".into(),
            status(c.quotient_marking_ok).into(),
            format!(
                "isometry {}; almost inner {}",
                r.isometry.as_ref().map_or("-", |i| if i.passed() { "pass" } else { "fail" }),
                r.almost_inner.as_ref().map_or("-".to_string(), |a| match a {
                    AlmostInnerVerdict::PassedRandomized { samples, .. } => format!("passed {samples} samples"),
                    AlmostInnerVerdict::ProvenFalse { .. } => "proven false".into(),
                })
            ),
        ],
        vec![
            "period_spot_check".into(),
            status(Some(c.spot_check_ok)).into(),
            format!("{} classes, {} failures", r.spot_checks, r.spot_failures.len()),
        ],
    ];
    rows.push(vec!["certifying".into(), r.certifying.to_string(), String::new()]);
    rows
}

fn emit_rows(out: &mut dyn Write, format: Format, rows: &[Vec<String>], json_value: &impl Serialize) -> Result<(), CliError> {
    match format {
        Format::Csv => write_csv(out, &["check", "status", "detail"], rows),
        Format::Json => write_json(out, json_value),
    }
}

/// Candidates from the integer family forced on markings of example II,
/// each paired with an isometric factor of the forced shape.
fn example_ii_family(ex: &catalog::ExampleRecord) -> Vec<(String, bool, IsometryVerdict)> {
    let qd = ex.quotient();
    let qa = Arc::new(qd.algebra.clone());
    let zs = [qi(0), q(1, 2), qi(-1)];
    let mut out = Vec::new();
    for code in 0..243 {
        let mut h = [0i64; 5];
        let mut c = code;
        for x in h.iter_mut() {
            *x = (c % 3) as i64 - 1;
            c /= 3;
        }
        if h[3] == 0 && h[4] == 0 {
            continue;
        }
        let Ok(cand) = Morphism::new(ex.algebra.clone(), catalog::candidate_ii(h)) else { continue };
        let auto = is_lie_algebra_automorphism(&cand).passed();
        for z in &zs {
            let psi = Morphism::new(qa.clone(), catalog::isometric_factor_candidate_ii(h, [*z, *z, *z]))
                .expect("shape");
            out.push((format!("h={h:?} z={}", format_rational(z)), auto, is_isometry(&psi, &qd.metric)));
        }
    }
    out
}

pub fn morphism(args: &MorphismArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = args.source.load()?;
    let opts = MarkingOptions { samples: args.samples, seed: args.common.seed, ..MarkingOptions::default() };
    let qd = quotient_algebra(&loaded.algebra, &loaded.metric).map_err(|e| usage(e.to_string()))?;
    let qa = Arc::new(qd.algebra.clone());
    let bundle = loaded.example.as_ref().map(|e| e.morphisms.clone()).unwrap_or(MorphismBundle::None);
    let (phi, psi1, psi2) = match (&args.phi, &bundle) {
        (Some(p), _) => (Some(load_morphism(p, loaded.algebra.clone())?), None, None),
        (None, MorphismBundle::Marking { phi, psi1, psi2 }) => (
            Some(Morphism::new(loaded.algebra.clone(), phi.clone()).map_err(|e| usage(e.to_string()))?),
            Some(Morphism::new(qa.clone(), psi1.clone()).map_err(|e| usage(e.to_string()))?),
            Some(Morphism::new(qa.clone(), psi2.clone()).map_err(|e| usage(e.to_string()))?),
        ),
        _ => (None, None, None),
    };
    let psi1 = match &args.psi1 {
        Some(p) => Some(load_morphism(p, qa.clone())?),
        None => psi1,
    };
    let psi2 = match &args.psi2 {
        Some(p) => Some(load_morphism(p, qa.clone())?),
        None => psi2,
    };
    let claim = loaded.example.as_ref().map(|e| e.claims.same_marked_length_spectrum);
    if let Some(phi) = phi {
        let lats = loaded.require_lattices(1)?;
        let pair = [lats[0], *lats.get(1).unwrap_or(&lats[0])];
        let factor = match (&psi1, &psi2) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        let report = verify_marking(&phi, pair, &loaded.metric, factor, &opts).map_err(|e| usage(e.to_string()))?;
        emit_rows(out, args.common.format, &marking_rows(&report), &json!({ "source": loaded.label, "marking": report }))?;
        let ok = match claim {
            Some(c) if args.phi.is_none() && args.psi1.is_none() && args.psi2.is_none() => report.certifying == c,
            _ => report.certifying,
        };
        return Ok(if ok { EXIT_OK } else { EXIT_MISMATCH });
    }
    match (&bundle, loaded.example.as_ref().map(|e| e.name)) {
        (MorphismBundle::QuotientRelating { map }, _) => {
            let lats = loaded.require_lattices(2)?;
            let m = Morphism::new(qa.clone(), map.clone()).map_err(|e| usage(e.to_string()))?;
            let l1 = quotient_lattice(lats[0], &qd).map_err(|e| usage(e.to_string()))?;
            let l2 = quotient_lattice(lats[1], &qd).map_err(|e| usage(e.to_string()))?;
            let auto = is_lie_algebra_automorphism(&m);
            let mapping = maps_lattice(&m, &l1, &l2).map_err(|e| usage(e.to_string()))?;
            let gai = is_gamma_almost_inner(&m, &l1, args.radius).map_err(|e| usage(e.to_string()))?;
            let ai = is_almost_inner(&m, args.samples, 3, args.common.seed).map_err(|e| usage(e.to_string()))?;
            let gai_detail = match &gai {
                AlmostInnerVerdict::PassedRandomized { samples, .. } => format!("{samples} lattice elements, radius {}", args.radius),
                AlmostInnerVerdict::ProvenFalse { x, .. } => format!("fails at {:?}", x.log),
            };
            let rows = vec![
                vec!["quotient_automorphism".into(), if auto.passed() { "pass" } else { "fail" }.into(), String::new()],
                vec!["maps_quotient_lattices".into(), if mapping.holds() { "pass" } else { "fail" }.into(), format!("{mapping:?}")],
                vec!["gamma_almost_inner".into(), if gai.passed() { "pass" } else { "fail" }.into(), gai_detail],
                vec!["almost_inner".into(), if ai.passed() { "pass" } else { "fail" }.into(), format!("{} samples", args.samples)],
                vec!["lattice_isomorphism".into(), "not_supplied".into(), "no candidate map of the full lattices".into()],
                vec!["certifying".into(), "false".into(), String::new()],
            ];
            let ok = auto.passed() && mapping.holds() && gai.passed();
            emit_rows(
                out,
                args.common.format,
                &rows,
                &json!({ "source": loaded.label, "quotient_automorphism": auto, "mapping": mapping,
                          "gamma_almost_inner": gai, "almost_inner": ai, "certifying": false }),
            )?;
            Ok(if ok && claim != Some(true) { EXIT_OK } else { EXIT_MISMATCH })
        }
        (_, Some(ExampleName::II)) => {
            let ex = loaded.example.as_ref().expect("example");
            let fam = example_ii_family(ex);
            let refuted = fam.iter().filter(|(_, _, iso)| !iso.passed()).count();
            let mut rows: Vec<Vec<String>> = fam
                .iter()
                .map(|(name, auto, iso)| {
                    let detail = match iso {
                        IsometryVerdict::Isometry => "isometry".to_string(),
                        IsometryVerdict::Violation { pair, expected, got } => format!(
                            "<e{}, e{}>: expected {}, got {}",
                            pair.0,
                            pair.1,
                            format_rational(expected),
                            format_rational(got)
                        ),
                    };
                    vec![name.clone(), if *auto && iso.passed() { "pass" } else { "fail" }.into(), detail]
                })
                .collect();
            rows.push(vec!["refuted_candidates".into(), format!("{refuted}/{}", fam.len()), String::new()]);
            rows.push(vec!["certifying".into(), "false".into(), String::new()]);
            let json_rows: Vec<Value> = fam
                .iter()
                .map(|(n, a, i)| json!({ "candidate": n, "automorphism": a, "isometric_factor": i }))
                .collect();
            emit_rows(out, args.common.format, &rows, &json!({ "source": loaded.label, "candidates": json_rows, "certifying": false }))?;
            Ok(if refuted == fam.len() && claim != Some(true) { EXIT_OK } else { EXIT_MISMATCH })
        }
        _ => {
            let lats = loaded.require_lattices(1)?;
            let pair = [lats[0], *lats.get(1).unwrap_or(&lats[0])];
            let id = Morphism::identity(loaded.algebra.clone());
            let report = verify_marking(&id, pair, &loaded.metric, None, &opts).map_err(|e| usage(e.to_string()))?;
            let mut rows = marking_rows(&report);
            rows.insert(0, vec!["bundle".into(), "none".into(), "identity map checked; report is non-certifying".into()]);
            emit_rows(out, args.common.format, &rows, &json!({ "source": loaded.label, "identity_marking": report }))?;
            Ok(if claim == Some(true) { EXIT_MISMATCH } else { EXIT_OK })
        }
    }
}
