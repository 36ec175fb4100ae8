//! Exact and numeric kernels for length spectra of 2- and 3-step
//! nilmanifolds: Lie algebras with exact structure constants, group
//! arithmetic, lattices and conjugacy, geodesic shooting, period transfer
//! and multiplicity counting, and morphism certificates.

pub mod algebra;
pub mod catalog;
pub mod geodesics;
pub mod group;
pub mod io;
pub mod linalg;
pub mod morphisms;
pub mod rational;
pub mod spectra;
