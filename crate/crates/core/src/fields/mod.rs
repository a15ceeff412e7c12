//! Periodic grid, field storage, centered difference operators and box quadrature.
//!
//! Every operator uses the two-point centered stencil `(f[i+1] - f[i-1]) / 2h`
//! with periodic wrap, and integrals use the rectangle rule. The pair is
//! skew-adjoint: `integrate(f div v) == -integrate(grad f . v)` up to roundoff.

mod field;
mod grid;
pub mod ops;
pub mod snapshot;
pub mod vec3;

pub use field::{Field, ScalarField, TensorField, VectorField};
pub use grid::{Grid, GridSpec, MIN_CELLS};
pub use ops::{curl, div, div_tensor, grad, grad_vec, integrate};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("non-finite value {value} in component {component} at cell {cell:?}")]
    NonFinite {
        cell: [usize; 3],
        component: usize,
        value: f64,
    },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
}
