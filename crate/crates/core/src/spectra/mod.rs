//! Length spectra: exact squared lengths, period decisions on the 2-step
//! quotient, multiplicity counting and pairwise comparison.

mod lengths;
mod multiplicity;
mod periods;
mod witness;

use thiserror::Error;

pub use lengths::{Length, LengthParseError, PiPoly};
pub use multiplicity::{
    candidate_lengths, central_elements_at, compare_length_spectra, g_class_count, multiplicity_at,
    sample_g_class_counts, spectrum_table, witness_rule, ClassWitness, Completeness, ComparisonReport,
    ComparisonRow, GClassSample, MultiplicityOptions, SpectrumEntry,
};
pub use periods::{
    classify_quotient_period, heisenberg_central_lengths, transfer_period, two_step_periods, PeriodRule,
    PeriodVerdict, SpectralContext, TwoStepPeriodData,
};
pub use witness::{central_period_witness, CentralWitness};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("element is the identity")]
    Identity,
    #[error("element is central; use the central period witness")]
    Central,
    #[error("element is not central")]
    NotCentral,
    #[error("geometry setup failed: {0}")]
    Geodesic(String),
    #[error("no translated geodesic was certified")]
    NoCertificate,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Algebra(#[from] crate::algebra::AlgebraError),
}
