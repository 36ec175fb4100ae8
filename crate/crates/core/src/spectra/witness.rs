use serde::Serialize;

use super::lengths::Length;
use super::periods::SpectralContext;
use super::SpectraError;
use crate::geodesics::{find_translated_geodesic, Geometry, ShootingOptions, TranslationCertificate};
use crate::rational::{is_zero_vec, Rational};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralWitness {
    pub lambda: Length,
    pub certificate: TranslationCertificate,
}

/// Fiber period `|log γ|` of a central `γ` with its certificate.
pub fn central_period_witness(ctx: &SpectralContext, log_gamma: &[Rational]) -> Result<CentralWitness, SpectraError> {
    let n = ctx.algebra.dim();
    if log_gamma.len() != n {
        return Err(SpectraError::Dimension { expected: n, got: log_gamma.len() });
    }
    if is_zero_vec(log_gamma) {
        return Err(SpectraError::Identity);
    }
    if !ctx.algebra.is_central(log_gamma) {
        return Err(SpectraError::NotCentral);
    }
    let lambda = Length::from_rational_sq(ctx.metric.norm_sq(log_gamma));
    let geo = Geometry::new(&ctx.algebra, &ctx.metric).map_err(|e| SpectraError::Geodesic(e.to_string()))?;
    let gamma = geo.from_rational(log_gamma);
    let cert = find_translated_geodesic(&geo, &gamma, Some(lambda.value()), Some(&gamma), &ShootingOptions::default())
        .ok_or(SpectraError::NoCertificate)?;
    Ok(CentralWitness { lambda, certificate: cert })
}
