//! Finite-volume Anderson-model simulation toolkit.
//!
//! Builds lattice Hamiltonians with i.i.d. on-site disorder, extracts
//! eigenvalue/localization-center point processes under the |Λ|(E−E0) energy
//! scaling, and runs the statistical checks (Wegner, Minami, Poisson limit,
//! multiscale decomposition matching) that probe localized spectra at desk
//! scale.

pub mod harness;
pub mod lattice;
pub mod operator;
pub mod pointprocess;
pub mod spectral;
pub mod stats;
