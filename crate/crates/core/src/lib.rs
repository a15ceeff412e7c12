//! Numerical toolkit for the compressible three-dimensional Ericksen–Leslie
//! nematic liquid crystal system on a periodic box.
//!
//! The crate is organised bottom-up:
//!
//! - [`fields`]: periodic grid, field storage, centered differences, quadrature, snapshots
//! - [`constitutive`]: Frank energy, molecular field, Leslie/Ericksen stress, parameter checks
//! - [`dynamics`]: semi-discrete right-hand side, RK4 stepping, run orchestration
//! - [`diagnostics`]: mass, momentum, energy components, energy-identity residuals
//! - [`certificate`]: functional inequalities, lemma constants and the lifespan bound

pub mod constitutive;
pub mod fields;
pub mod dynamics;
pub mod diagnostics;
pub mod certificate;
