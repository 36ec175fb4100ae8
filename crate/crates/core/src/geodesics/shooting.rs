use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    dot, flow, integrate, neg, norm, translation_residual, GeodesicError, GeodesicInitialData, GeodesicState, Geometry,
    Trajectory,
};
use crate::algebra::QuotientData;
use crate::rational::to_f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingOptions {
    pub starts: usize,
    /// Starts are run in batches of this size; the search stops after the
    /// first batch containing a certified start.
    pub batch: usize,
    pub seed: u64,
    pub search_step: f64,
    pub certify_step: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            batch: 8,
            seed: 0x5eed,
            search_step: 1e-2,
            certify_step: 1e-3,
            tolerance: 1e-6,
            max_iterations: 60,
        }
    }
}

/// A geodesic `s ↦ p·σ₀(s)` with `σ₀(0) = e`, `σ̇₀(0) = velocity`,
/// translated by `γ` with period `λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationCertificate {
    /// `log γ` in frame coordinates.
    pub gamma: Vec<f64>,
    pub lambda: f64,
    /// `log p` in frame coordinates.
    pub start: Vec<f64>,
    pub velocity: Vec<f64>,
    pub residual_translation: f64,
    pub residual_orthogonality: f64,
    pub residual_horizontality: Option<f64>,
    pub seed_index: usize,
    pub step: f64,
}

impl TranslationCertificate {
    /// `log(p⁻¹ γ p)`.
    pub fn conjugated_gamma(&self, geo: &Geometry) -> Vec<f64> {
        geo.conjugate(&neg(&self.start), &self.gamma)
    }

    pub fn trajectory(&self, geo: &Geometry, duration: f64) -> Trajectory {
        let init = GeodesicInitialData { point: self.start.clone(), velocity: self.velocity.clone() };
        integrate(geo, &init, duration, self.step).expect("certificate data is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Horizontality {
    Residual(f64),
    NotApplicable,
}

/// Levenberg–Marquardt with forward-difference Jacobians.
fn levenberg_marquardt(f: &dyn Fn(&[f64]) -> Vec<f64>, x0: Vec<f64>, max_iter: usize, tol: f64) -> (Vec<f64>, f64) {
    let mut x = x0;
    let mut r = f(&x);
    let mut rn = norm(&r);
    let mut mu = 1e-3;
    let m = x.len();
    let mut stall = 0;
    for _ in 0..max_iter {
        if rn < tol {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(r.len(), m);
        for c in 0..m {
            let h = 1e-7 * x[c].abs().max(1.0);
            let mut xp = x.clone();
            xp[c] += h;
            let rp = f(&xp);
            for (row, (a, b)) in rp.iter().zip(&r).enumerate() {
                jac[(row, c)] = (a - b) / h;
            }
        }
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_vec(r.clone());
        let mut improved = false;
        while mu < 1e12 {
            let mut lhs = a.clone();
            for d in 0..m {
                lhs[(d, d)] += mu * a[(d, d)].max(1e-9);
            }
            let Some(delta) = lhs.lu().solve(&(-&g)) else {
                mu *= 4.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(delta.iter()).map(|(p, q)| p + q).collect();
            let rnew = f(&xn);
            let nn = norm(&rnew);
            if nn.is_finite() && nn < rn {
                stall = if nn > 0.999 * rn { stall + 1 } else { 0 };
                x = xn;
                r = rnew;
                rn = nn;
                mu = (mu / 3.0).max(1e-12);
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if !improved || stall >= 6 {
            break;
        }
    }
    (x, rn)
}

struct Problem<'a> {
    geo: &'a Geometry,
    gamma: &'a [f64],
    j: usize,
}

impl Problem<'_> {
    /// Parameters `(v, λ, c)`: velocity direction, period, and `log p`
    /// restricted to `ν`.
    fn unpack(&self, t: &[f64]) -> (Vec<f64>, f64, Vec<f64>) {
        let n = self.geo.dim();
        let v = &t[..n];
        let nv = norm(v).max(1e-300);
        let u0 = v.iter().map(|x| x / nv).collect();
        let lambda = t[n].max(1e-3);
        let mut p = vec![0.0; n];
        p[..self.j].copy_from_slice(&t[n + 1..]);
        (u0, lambda, p)
    }

    fn residual(&self, t: &[f64], h: f64) -> Vec<f64> {
        let (u0, lambda, p) = self.unpack(t);
        let g2 = self.geo.conjugate(&neg(&p), self.gamma);
        let steps = ((lambda / h).ceil() as usize).max(8);
        let end = flow(self.geo, GeodesicState { x: vec![0.0; u0.len()], u: u0.clone() }, lambda, steps);
        let mut r = self.geo.bch(&neg(&g2), &end.x);
        r.extend(end.u.iter().zip(&u0).map(|(a, b)| a - b));
        r
    }
}

fn certify(geo: &Geometry, gamma: &[f64], lambda: f64, start: Vec<f64>, velocity: Vec<f64>, seed_index: usize, step: f64) -> TranslationCertificate {
    let mut cert = TranslationCertificate {
        gamma: gamma.to_vec(),
        lambda,
        start,
        velocity,
        residual_translation: f64::INFINITY,
        residual_orthogonality: f64::INFINITY,
        residual_horizontality: None,
        seed_index,
        step,
    };
    let traj = cert.trajectory(geo, 2.0 * lambda);
    cert.residual_translation = translation_residual(geo, gamma, &traj, lambda).unwrap_or(f64::INFINITY);
    cert.residual_orthogonality = check_translation_orthogonality(geo, &cert);
    if let Horizontality::Residual(r) = check_horizontality(geo, &cert) {
        cert.residual_horizontality = Some(r);
    }
    cert
}

/// Multi-start search for a geodesic translated by `γ` (frame
/// coordinates). `None` means the search failed, not that no such geodesic
/// exists.
pub fn find_translated_geodesic(
    geo: &Geometry,
    gamma: &[f64],
    lambda_hint: Option<f64>,
    velocity_hint: Option<&[f64]>,
    opts: &ShootingOptions,
) -> Option<TranslationCertificate> {
    let n = geo.dim();
    if gamma.len() != n || norm(gamma) == 0.0 {
        return None;
    }
    let (j, _, _) = geo.dims();
    let prob = Problem { geo, gamma, j };
    let base_v: Vec<f64> = velocity_hint.map(|v| v.to_vec()).unwrap_or_else(|| gamma.to_vec());
    let base_l = lambda_hint.unwrap_or_else(|| norm(gamma));
    let start_params = |i: usize| -> Vec<f64> {
        let mut t = base_v.clone();
        if i == 0 {
            t.push(base_l);
            t.extend(std::iter::repeat_n(0.0, j));
            return t;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64));
        let nb = norm(&base_v).max(1e-12);
        for x in t.iter_mut() {
            *x = *x / nb + rng.gen_range(-0.6..0.6);
        }
        t.push(base_l * rng.gen_range(0.6..1.4));
        t.extend((0..j).map(|_| rng.gen_range(-1.0..1.0)));
        t
    };
    let run = |i: usize| -> Option<TranslationCertificate> {
        let f = |t: &[f64]| prob.residual(t, opts.search_step);
        let (t, _) = levenberg_marquardt(&f, start_params(i), opts.max_iterations, 1e-11);
        let fine = |t: &[f64]| prob.residual(t, opts.certify_step * 2.0);
        let (t, rn) = levenberg_marquardt(&fine, t, 4, 1e-10);
        if !(rn < opts.tolerance * 10.0) {
            return None;
        }
        let (u0, lambda, p) = prob.unpack(&t);
        let cert = certify(geo, gamma, lambda, p, u0, i, opts.certify_step);
        (cert.residual_translation < opts.tolerance).then_some(cert)
    };
    let batch = opts.batch.max(1);
    let mut i = 0;
    while i < opts.starts {
        let idx: Vec<usize> = (i..(i + batch).min(opts.starts)).collect();
        let found: Vec<TranslationCertificate> = idx.par_iter().filter_map(|&s| run(s)).collect();
        if let Some(best) = found.into_iter().min_by(|a, b| {
            a.residual_translation.total_cmp(&b.residual_translation).then(a.seed_index.cmp(&b.seed_index))
        }) {
            return Some(best);
        }
        i += batch;
    }
    None
}

/// Orthonormal basis of `[x, g]` in frame coordinates.
fn image_basis(geo: &Geometry, x: &[f64]) -> Vec<Vec<f64>> {
    let n = geo.dim();
    let scale = norm(x).max(1.0);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let mut v = geo.bracket(x, &e);
        for b in &out {
            let c = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let nv = norm(&v);
        if nv > 1e-9 * scale {
            out.push(v.iter().map(|t| t / nv).collect());
        }
    }
    out
}

/// `max |⟨L_{p*} b, σ̇(0)⟩|` over an orthonormal basis `b` of
/// `[log(p⁻¹γp), g]`; zero for a genuinely translated geodesic.
pub fn check_translation_orthogonality(geo: &Geometry, cert: &TranslationCertificate) -> f64 {
    orthogonality_of(geo, &cert.conjugated_gamma(geo), &cert.velocity)
}

fn orthogonality_of(geo: &Geometry, g2: &[f64], velocity: &[f64]) -> f64 {
    image_basis(geo, g2).iter().map(|b| dot(b, velocity).abs()).fold(0.0, f64::max)
}

/// `max_s |⟨L_{σ(s)*} z, σ̇(s)⟩|` over the center `g⁽ᵏ⁻¹⁾`; not applicable
/// for central `γ`.
pub fn check_horizontality(geo: &Geometry, cert: &TranslationCertificate) -> Horizontality {
    if image_basis(geo, &cert.gamma).is_empty() {
        return Horizontality::NotApplicable;
    }
    let top = geo.top_range();
    let steps = ((cert.lambda / cert.step).ceil() as usize).max(1);
    let mut s = GeodesicState { x: cert.start.clone(), u: cert.velocity.clone() };
    let mut worst: f64 = 0.0;
    let chunk = (steps / 64).max(1);
    let mut done = 0;
    while done <= steps {
        worst = s.u[top.clone()].iter().fold(worst, |w, x| w.max(x.abs()));
        let k = chunk.min(steps - done.min(steps));
        if k == 0 {
            break;
        }
        s = flow(geo, s, cert.step * k as f64, k);
        done += k;
    }
    Horizontality::Residual(worst)
}

/// Orthogonality residual after tilting the velocity by `eps` into
/// `[log(p⁻¹γp), g]`; a negative control for the certificate check.
pub fn perturbed_orthogonality(geo: &Geometry, cert: &TranslationCertificate, eps: f64) -> Option<f64> {
    let g2 = cert.conjugated_gamma(geo);
    let b = image_basis(geo, &g2).into_iter().next()?;
    let v: Vec<f64> = cert.velocity.iter().zip(&b).map(|(u, d)| u + eps * d).collect();
    let nv = norm(&v);
    let v: Vec<f64> = v.iter().map(|x| x / nv).collect();
    Some(orthogonality_of(geo, &g2, &v))
}

/// Lifts a quotient certificate for `π(γ)` to one for `γ`: the horizontal
/// lift `σ̂` from `e` is translated by `σ̂(λ)`, which is conjugate to
/// `p̂⁻¹γp̂` by some `x`; then `p̂xσ̂` is translated by `γ`.
pub fn lift_certificate(
    full: &Geometry,
    quot: &Geometry,
    qd: &QuotientData,
    qcert: &TranslationCertificate,
    gamma: &[f64],
    opts: &ShootingOptions,
) -> Option<TranslationCertificate> {
    let lift = |v: &[f64]| lift_vector(full, quot, qd, v);
    let u_hat = lift(&qcert.velocity);
    let nu = norm(&u_hat);
    let u_hat: Vec<f64> = u_hat.iter().map(|x| x / nu).collect();
    let steps = ((qcert.lambda / opts.certify_step).ceil() as usize).max(8);
    let g_hat = flow(full, GeodesicState { x: vec![0.0; full.dim()], u: u_hat.clone() }, qcert.lambda, steps).x;
    let p_hat = lift(&qcert.start);
    let g2 = full.conjugate(&neg(&p_hat), gamma);
    let f = |x: &[f64]| -> Vec<f64> {
        let c = full.conjugate(&neg(x), &g2);
        c.iter().zip(&g_hat).map(|(a, b)| a - b).collect()
    };
    let (x, rn) = levenberg_marquardt(&f, vec![0.0; full.dim()], 100, 1e-13);
    if !(rn < opts.tolerance) {
        return None;
    }
    let start = full.bch(&p_hat, &x);
    let cert = certify(full, gamma, qcert.lambda, start, u_hat, qcert.seed_index, opts.certify_step);
    (cert.residual_translation < opts.tolerance).then_some(cert)
}

/// Period and initial velocity of the `k`-th Heisenberg spiral translated
/// by a central `γ`: `λ² = 4πk|γ|/θ − 4π²k²/θ²` with `θ` the largest
/// structure constant of `ν ∧ ν` along `γ`. `None` when `k` is out of range.
pub fn heisenberg_spiral_hint(geo: &Geometry, gamma: &[f64], k: u32) -> Option<(f64, Vec<f64>)> {
    let n = geo.dim();
    let (j, _, _) = geo.dims();
    let z = norm(gamma);
    if gamma.len() != n || z == 0.0 || k == 0 {
        return None;
    }
    let dir: Vec<f64> = gamma.iter().map(|x| x / z).collect();
    let mut best = (0.0f64, 0usize);
    for a in 0..j {
        for b in 0..j {
            let mut ea = vec![0.0; n];
            ea[a] = 1.0;
            let mut eb = vec![0.0; n];
            eb[b] = 1.0;
            let t = dot(&geo.bracket(&ea, &eb), &dir).abs();
            if t > best.0 {
                best = (t, a);
            }
        }
    }
    let (theta, a) = best;
    let kf = f64::from(k);
    let pi = std::f64::consts::PI;
    let lsq = 4.0 * pi * kf * z / theta - 4.0 * pi * pi * kf * kf / (theta * theta);
    if !(theta > 0.0 && lsq > 0.0) {
        return None;
    }
    let lambda = lsq.sqrt();
    let c = 2.0 * pi * kf / (theta * lambda);
    if c >= 1.0 {
        return None;
    }
    let mut v: Vec<f64> = dir.iter().map(|x| c * x).collect();
    v[a] += (1.0 - c * c).sqrt();
    Some((lambda, v))
}

/// `log π(x)` in quotient frame coordinates.
pub fn project_point(full: &Geometry, quot: &Geometry, qd: &QuotientData, x: &[f64]) -> Vec<f64> {
    let s = full.to_structural(x);
    let p: Vec<f64> = qd.proj.iter().map(|row| row.iter().zip(&s).map(|(a, b)| to_f64(a) * b).sum()).collect();
    quot.from_structural(&p)
}

fn lift_vector(full: &Geometry, quot: &Geometry, qd: &QuotientData, vbar: &[f64]) -> Vec<f64> {
    let s = quot.to_structural(vbar);
    let mut up = vec![0.0; full.dim()];
    for (c, row) in s.iter().zip(&qd.lifts) {
        for (u, r) in up.iter_mut().zip(row) {
            *u += c * to_f64(r);
        }
    }
    full.from_structural(&up)
}

/// Horizontal geodesic through `base` whose projection is `traj`.
pub fn horizontal_lift(
    full: &Geometry,
    quot: &Geometry,
    qd: &QuotientData,
    traj: &Trajectory,
    base: &[f64],
) -> Result<Trajectory, GeodesicError> {
    if base.len() != full.dim() {
        return Err(GeodesicError::Dimension { expected: full.dim(), got: base.len() });
    }
    let p = project_point(full, quot, qd, base);
    let off = norm(&quot.bch(&neg(&p), &traj.points[0]));
    if off > 1e-9 {
        return Err(GeodesicError::BasePoint(off));
    }
    let velocity = lift_vector(full, quot, qd, &traj.velocities[0]);
    integrate(full, &GeodesicInitialData { point: base.to_vec(), velocity }, traj.end(), traj.step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Metric;
    use crate::catalog;

    #[test]
    fn central_fiber_geodesic_is_found() {
        let g = Geometry::new(&catalog::algebra_i(), &Metric::identity(7)).unwrap();
        let mut w = vec![0.0; 7];
        w[6] = 3.0;
        let cert = find_translated_geodesic(&g, &w, Some(3.0), None, &ShootingOptions::default()).unwrap();
        assert!((cert.lambda - 3.0).abs() < 1e-9);
        assert!(cert.residual_translation < 1e-9);
        assert_eq!(cert.residual_orthogonality, 0.0);
        assert_eq!(check_horizontality(&g, &cert), Horizontality::NotApplicable);
    }

    #[test]
    fn unit_y2_translates_a_line() {
        let ex = catalog::example(catalog::ExampleName::III);
        let g = Geometry::new(&ex.algebra, &ex.metric).unwrap();
        let gamma = g.from_rational(&ex.lattices[0].generator_logs()[3]);
        let cert = find_translated_geodesic(&g, &gamma, None, None, &ShootingOptions::default()).unwrap();
        assert!((cert.lambda - 1.0).abs() < 1e-6);
        assert!(cert.residual_orthogonality < 1e-6);
        assert!(cert.residual_horizontality.unwrap() < 1e-6);
        assert!(perturbed_orthogonality(&g, &cert, 0.1).unwrap() > 1e-3);
    }

    fn example_iv() -> (catalog::ExampleRecord, QuotientData, Geometry, Geometry) {
        let ex = catalog::example(catalog::ExampleName::IV);
        let qd = ex.quotient();
        let full = Geometry::new(&ex.algebra, &ex.metric).unwrap();
        let quot = Geometry::new(&qd.algebra, &qd.metric).unwrap();
        (ex, qd, full, quot)
    }

    fn seven_z(ex: &catalog::ExampleRecord) -> Vec<crate::rational::Rational> {
        ex.lattices[0].generator_logs()[3].iter().map(|c| c * crate::rational::qi(7)).collect()
    }

    #[test]
    fn heisenberg_spiral_period_matches_closed_form() {
        let (ex, qd, _, quot) = example_iv();
        let gbar = quot.from_rational(&qd.project(&seven_z(&ex)));
        let (lh, vh) = heisenberg_spiral_hint(&quot, &gbar, 1).unwrap();
        let closed = (4.0 * std::f64::consts::PI * (7.0 - std::f64::consts::PI)).sqrt();
        assert!((lh - closed).abs() < 1e-12);
        let cert = find_translated_geodesic(&quot, &gbar, Some(lh), Some(&vh), &ShootingOptions::default()).unwrap();
        assert!((cert.lambda - closed).abs() < 1e-4, "{}", cert.lambda);
        assert!(cert.residual_orthogonality < 1e-6);
        assert!(heisenberg_spiral_hint(&quot, &gbar, 2).is_none());
    }

    #[test]
    fn quotient_certificate_lifts_to_seven_z() {
        let (ex, qd, full, quot) = example_iv();
        let g = seven_z(&ex);
        let gbar = quot.from_rational(&qd.project(&g));
        let (lh, vh) = heisenberg_spiral_hint(&quot, &gbar, 1).unwrap();
        let opts = ShootingOptions::default();
        let qcert = find_translated_geodesic(&quot, &gbar, Some(lh), Some(&vh), &opts).unwrap();
        let cert = lift_certificate(&full, &quot, &qd, &qcert, &full.from_rational(&g), &opts).unwrap();
        assert!(cert.residual_translation < 1e-6);
        assert!(cert.residual_orthogonality < 1e-6);
        assert!(cert.residual_horizontality.unwrap() < 1e-6);
        assert!((cert.lambda - qcert.lambda).abs() < 1e-12);
    }

    #[test]
    fn horizontal_lift_projects_back() {
        let ex = catalog::example(catalog::ExampleName::III);
        let qd = ex.quotient();
        let full = Geometry::new(&ex.algebra, &ex.metric).unwrap();
        let quot = Geometry::new(&qd.algebra, &qd.metric).unwrap();
        let mut v = vec![0.3, -0.5, 0.2, 0.4, 0.1, 0.0];
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let pbar = vec![0.2, 0.0, -0.1, 0.0, 0.3, 0.1];
        let tb = integrate(&quot, &GeodesicInitialData { point: pbar.clone(), velocity: v }, 3.0, 1e-3).unwrap();
        let mut base = lift_vector(&full, &quot, &qd, &pbar);
        base[6] = 0.7;
        let t = horizontal_lift(&full, &quot, &qd, &tb, &base).unwrap();
        for (a, b) in t.points.iter().zip(&tb.points) {
            let d = norm(&quot.bch(&neg(b), &project_point(&full, &quot, &qd, a)));
            assert!(d < 1e-8, "{d}");
        }
        assert!((norm(&t.velocities[0]) - 1.0).abs() < 1e-12);
        let off = vec![5.0; 7];
        assert!(matches!(horizontal_lift(&full, &quot, &qd, &tb, &off), Err(GeodesicError::BasePoint(_))));
    }
}
