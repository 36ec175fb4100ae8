//! Left-invariant geometry in an orthonormal adapted frame: covariant
//! derivatives, frame fields in exponential coordinates, the geodesic
//! system, fixed-step integration and the translated-geodesic search.

mod shooting;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{AdaptedFrame, AlgebraError, FrameConstants, LieAlgebra, Metric};
use crate::rational::{to_f64, Rational};

pub use shooting::{
    check_horizontality, check_translation_orthogonality, find_translated_geodesic, heisenberg_spiral_hint,
    horizontal_lift, lift_certificate, perturbed_orthogonality, project_point, Horizontality, ShootingOptions,
    TranslationCertificate,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("step must be positive, got {0}")]
    Step(f64),
    #[error("duration must be non-negative, got {0}")]
    Duration(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("trajectory covers [0, {end}] but [0, {needed}] is required")]
    GridTooShort { end: f64, needed: f64 },
    #[error("base point is {0} away from the fiber over the trajectory start")]
    BasePoint(f64),
    #[error("initial velocity is not unit speed (|v|² = {0})")]
    NotUnitSpeed(f64),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Bracket table of an orthonormal adapted frame `X ∪ Z ∪ W` built from the
/// constants `A, B, C`, with conversions to structural coordinates.
#[derive(Debug, Clone)]
pub struct Geometry {
    n: usize,
    j: usize,
    k: usize,
    /// `[e_a, e_b] = Σ_c table[(a*n + b)*n + c] e_c`
    table: Vec<f64>,
    /// Frame vectors in structural coordinates (rows).
    basis: Vec<Vec<f64>>,
    /// Structural coordinates to frame coordinates (row convention).
    to_frame: Vec<Vec<f64>>,
    constants: FrameConstants,
}

impl Geometry {
    pub fn new(l: &LieAlgebra, m: &Metric) -> Result<Self, GeodesicError> {
        let frame = AdaptedFrame::new(l, m)?;
        let c = frame.constants();
        let (j, k, t) = (c.j, c.k, c.t);
        let n = c.dim();
        if n != l.dim() {
            return Err(GeodesicError::Dimension { expected: l.dim(), got: n });
        }
        let mut table = vec![0.0; n * n * n];
        let mut set = |a: usize, b: usize, e: usize, v: f64| {
            table[(a * n + b) * n + e] += v;
            table[(b * n + a) * n + e] -= v;
        };
        for i in 0..j {
            for l2 in (i + 1)..j {
                for h in 0..k {
                    set(i, l2, j + h, c.a(i, l2, h));
                }
                for s in 0..t {
                    set(i, l2, j + k + s, c.b(i, l2, s));
                }
            }
            for h in 0..k {
                for s in 0..t {
                    set(i, j + h, j + k + s, c.c(i, h, s));
                }
            }
        }
        let b = DMatrix::from_fn(n, n, |r, col| c.basis[r][col]);
        let inv = b.try_inverse().ok_or(GeodesicError::Dimension { expected: n, got: 0 })?;
        let to_frame = (0..n).map(|r| (0..n).map(|col| inv[(r, col)]).collect()).collect();
        Ok(Self { n, j, k, table, basis: c.basis.clone(), to_frame, constants: c })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `(J, K, T)`: dimensions of `ν`, `ζ` and `g⁽²⁾`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.j, self.k, self.n - self.j - self.k)
    }

    pub fn constants(&self) -> &FrameConstants {
        &self.constants
    }

    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for a in 0..n {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                let s = x[a] * y[b];
                if s == 0.0 {
                    continue;
                }
                let row = &self.table[(a * n + b) * n..(a * n + b + 1) * n];
                for (o, r) in out.iter_mut().zip(row) {
                    *o += s * r;
                }
            }
        }
        out
    }

    /// Metric adjoint `ad_u^T v`, i.e. the vector with `⟨ad_u^T v, e⟩ = ⟨v, [u, e]⟩`.
    pub fn ad_transpose(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|e| {
                let mut s = 0.0;
                for b in 0..n {
                    if u[b] == 0.0 {
                        continue;
                    }
                    let row = &self.table[(b * n + e) * n..(b * n + e + 1) * n];
                    s += u[b] * dot(row, v);
                }
                s
            })
            .collect()
    }

    /// Truncated BCH product of log coordinates (step ≤ 3).
    pub fn bch(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let xy = self.bracket(x, y);
        let xxy = self.bracket(x, &xy);
        let yyx = self.bracket(y, &neg(&xy));
        (0..self.n).map(|i| x[i] + y[i] + 0.5 * xy[i] + (xxy[i] + yyx[i]) / 12.0).collect()
    }

    /// `log(a x a⁻¹)`.
    pub fn conjugate(&self, a: &[f64], x: &[f64]) -> Vec<f64> {
        let ax = self.bracket(a, x);
        let aax = self.bracket(a, &ax);
        (0..self.n).map(|i| x[i] + ax[i] + 0.5 * aax[i]).collect()
    }

    pub fn to_structural(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (ci, b) in c.iter().zip(&self.basis) {
            for (o, bi) in out.iter_mut().zip(b) {
                *o += ci * bi;
            }
        }
        out
    }

    pub fn from_structural(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (vi, row) in v.iter().zip(&self.to_frame) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += vi * r;
            }
        }
        out
    }

    pub fn from_rational(&self, v: &[Rational]) -> Vec<f64> {
        self.from_structural(&v.iter().map(to_f64).collect::<Vec<_>>())
    }

    /// Frame coordinates of the center `g⁽ᵏ⁻¹⁾`, the last frame block.
    pub fn top_range(&self) -> std::ops::Range<usize> {
        let (j, k, t) = self.dims();
        if t > 0 {
            j + k..self.n
        } else {
            j..j + k
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

/// `∇_u v` for left-invariant fields with frame coefficients `u, v`:
/// `½([u, v] − ad_u^T v − ad_v^T u)`.
pub fn covariant_derivative(geo: &Geometry, u: &[f64], v: &[f64]) -> Vec<f64> {
    let b = geo.bracket(u, v);
    let p = geo.ad_transpose(u, v);
    let q = geo.ad_transpose(v, u);
    (0..geo.n).map(|i| 0.5 * (b[i] - p[i] - q[i])).collect()
}

/// Left-invariant frame fields at the point with exponential coordinates
/// `x`; row `i` holds the coordinate components of `E_i`:
/// `E_i + ½[x, E_i] + (1/12)[x, [x, E_i]]`.
pub fn frame_fields_at(geo: &Geometry, x: &[f64]) -> Vec<Vec<f64>> {
    (0..geo.n)
        .map(|i| {
            let mut e = vec![0.0; geo.n];
            e[i] = 1.0;
            field_image(geo, x, &e)
        })
        .collect()
}

fn field_image(geo: &Geometry, x: &[f64], u: &[f64]) -> Vec<f64> {
    let xu = geo.bracket(x, u);
    let xxu = geo.bracket(x, &xu);
    (0..geo.n).map(|i| u[i] + 0.5 * xu[i] + xxu[i] / 12.0).collect()
}

/// Position in exponential coordinates and left-trivialized velocity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicState {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// `ẋ = Σ u_i E_i(x)`, `u̇ = ad_u^T u` (the geodesic equation `∇_σ̇ σ̇ = 0`).
pub fn geodesic_rhs(geo: &Geometry, state: &GeodesicState) -> GeodesicState {
    GeodesicState { x: field_image(geo, &state.x, &state.u), u: geo.ad_transpose(&state.u, &state.u) }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicInitialData {
    /// Exponential coordinates of the initial point in the frame.
    pub point: Vec<f64>,
    /// Initial velocity in the frame, unit length.
    pub velocity: Vec<f64>,
}

impl GeodesicInitialData {
    pub fn at_identity(velocity: Vec<f64>) -> Self {
        Self { point: vec![0.0; velocity.len()], velocity }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub step: f64,
    pub order: u32,
}

impl Trajectory {
    pub fn end(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    pub fn endpoint(&self) -> &[f64] {
        self.points.last().expect("nonempty")
    }

    /// Cubic Hermite interpolation of the position.
    pub fn point_at(&self, geo: &Geometry, s: f64) -> Vec<f64> {
        let n = self.times.len();
        if n == 1 || s <= self.times[0] {
            return self.points[0].clone();
        }
        let h = self.times[1] - self.times[0];
        let i = (((s - self.times[0]) / h).floor() as usize).min(n - 2);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let hh = t1 - t0;
        let tau = ((s - t0) / hh).clamp(0.0, 1.0);
        let d0 = field_image(geo, &self.points[i], &self.velocities[i]);
        let d1 = field_image(geo, &self.points[i + 1], &self.velocities[i + 1]);
        let (t2, t3) = (tau * tau, tau * tau * tau);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + tau;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        (0..self.points[i].len())
            .map(|c| h00 * self.points[i][c] + h10 * hh * d0[c] + h01 * self.points[i + 1][c] + h11 * hh * d1[c])
            .collect()
    }

    pub fn max_speed_drift(&self) -> f64 {
        let s0 = norm(&self.velocities[0]);
        self.velocities.iter().map(|u| (norm(u) - s0).abs()).fold(0.0, f64::max)
    }
}

fn rk4_step(geo: &Geometry, s: &GeodesicState, h: f64) -> GeodesicState {
    let add = |a: &GeodesicState, b: &GeodesicState, c: f64| GeodesicState {
        x: a.x.iter().zip(&b.x).map(|(p, q)| p + c * q).collect(),
        u: a.u.iter().zip(&b.u).map(|(p, q)| p + c * q).collect(),
    };
    let k1 = geodesic_rhs(geo, s);
    let k2 = geodesic_rhs(geo, &add(s, &k1, h / 2.0));
    let k3 = geodesic_rhs(geo, &add(s, &k2, h / 2.0));
    let k4 = geodesic_rhs(geo, &add(s, &k3, h));
    let comb = |a: &[f64], b1: &[f64], b2: &[f64], b3: &[f64], b4: &[f64]| -> Vec<f64> {
        (0..a.len()).map(|i| a[i] + h / 6.0 * (b1[i] + 2.0 * b2[i] + 2.0 * b3[i] + b4[i])).collect()
    };
    GeodesicState { x: comb(&s.x, &k1.x, &k2.x, &k3.x, &k4.x), u: comb(&s.u, &k1.u, &k2.u, &k3.u, &k4.u) }
}

/// Endpoint state after `steps` equal steps over `[0, duration]`.
pub(crate) fn flow(geo: &Geometry, init: GeodesicState, duration: f64, steps: usize) -> GeodesicState {
    let h = duration / steps as f64;
    (0..steps).fold(init, |s, _| rk4_step(geo, &s, h))
}

/// Classical fourth-order integration with the largest step `≤ step` that
/// lands exactly on `duration`.
pub fn integrate(geo: &Geometry, init: &GeodesicInitialData, duration: f64, step: f64) -> Result<Trajectory, GeodesicError> {
    if !(step > 0.0) {
        return Err(GeodesicError::Step(step));
    }
    if !(duration >= 0.0) {
        return Err(GeodesicError::Duration(duration));
    }
    for v in [&init.point, &init.velocity] {
        if v.len() != geo.n {
            return Err(GeodesicError::Dimension { expected: geo.n, got: v.len() });
        }
    }
    let speed = dot(&init.velocity, &init.velocity);
    if (speed - 1.0).abs() > 1e-12 {
        return Err(GeodesicError::NotUnitSpeed(speed));
    }
    let steps = (duration / step).ceil() as usize;
    let h = if steps == 0 { step } else { duration / steps as f64 };
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut velocities = Vec::with_capacity(steps + 1);
    let mut s = GeodesicState { x: init.point.clone(), u: init.velocity.clone() };
    for i in 0..=steps {
        times.push(i as f64 * h);
        points.push(s.x.clone());
        velocities.push(s.u.clone());
        if i < steps {
            s = rk4_step(geo, &s, h);
        }
    }
    Ok(Trajectory { times, points, velocities, step: h, order: 4 })
}

/// `max_s |log((γ σ(s))⁻¹ σ(s + λ))|` over the sample grid with `s + λ`
/// inside the trajectory.
pub fn translation_residual(geo: &Geometry, gamma: &[f64], traj: &Trajectory, lambda: f64) -> Result<f64, GeodesicError> {
    if gamma.len() != geo.n {
        return Err(GeodesicError::Dimension { expected: geo.n, got: gamma.len() });
    }
    if lambda > traj.end() + 1e-12 {
        return Err(GeodesicError::GridTooShort { end: traj.end(), needed: lambda });
    }
    let mut worst: f64 = 0.0;
    for (s, x) in traj.times.iter().zip(&traj.points) {
        if s + lambda > traj.end() + 1e-12 {
            break;
        }
        let moved = geo.bch(gamma, x);
        let later = traj.point_at(geo, s + lambda);
        worst = worst.max(norm(&geo.bch(&neg(&moved), &later)));
    }
    Ok(worst)
}
