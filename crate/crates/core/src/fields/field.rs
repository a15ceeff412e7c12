use super::vec3::{Mat3, Vec3};
use super::{FieldError, Grid};

/// Storage shared by scalar, vector and tensor fields: one `Cell` per grid cell,
/// row-major, components interleaved.
pub trait Field {
    type Cell: Copy;
    const COMPONENTS: usize;

    fn grid(&self) -> &Grid;
    fn values(&self) -> &[Self::Cell];
    fn flat(&self) -> &[f64];

    /// First non-finite entry, if any.
    fn check_finite(&self) -> Result<(), FieldError> {
        let c = Self::COMPONENTS;
        match self.flat().iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(pos) => Err(FieldError::NonFinite {
                cell: self.grid().coords(pos / c),
                component: pos % c,
                value: self.flat()[pos],
            }),
        }
    }
}

macro_rules! field_type {
    ($(#[$meta:meta])* $name:ident, $cell:ty, $comps:expr, $zero:expr, $flatten:expr) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: Grid,
            values: Vec<$cell>,
        }

        impl $name {
            pub fn new(grid: Grid, values: Vec<$cell>) -> Result<Self, FieldError> {
                if values.len() != grid.cells() {
                    return Err(FieldError::LengthMismatch {
                        expected: grid.cells(),
                        got: values.len(),
                    });
                }
                Ok(Self { grid, values })
            }

            pub fn zeros(grid: Grid) -> Self {
                Self::constant(grid, $zero)
            }

            pub fn constant(grid: Grid, value: $cell) -> Self {
                Self {
                    grid,
                    values: vec![value; grid.cells()],
                }
            }

            /// Sample `f` at every cell position.
            pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> $cell) -> Self {
                let values = (0..grid.cells()).map(|i| f(grid.position(i))).collect();
                Self { grid, values }
            }

            pub fn values_mut(&mut self) -> &mut [$cell] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<$cell> {
                self.values
            }

            pub fn map(&self, f: impl Fn($cell) -> $cell) -> Self {
                Self {
                    grid: self.grid,
                    values: self.values.iter().map(|&v| f(v)).collect(),
                }
            }

            pub fn from_flat(grid: Grid, flat: &[f64]) -> Result<Self, FieldError> {
                let expected = grid.cells() * $comps;
                if flat.len() != expected {
                    return Err(FieldError::LengthMismatch {
                        expected,
                        got: flat.len(),
                    });
                }
                let values = flat.chunks_exact($comps).map($flatten).collect();
                Ok(Self { grid, values })
            }
        }

        impl Field for $name {
            type Cell = $cell;
            const COMPONENTS: usize = $comps;

            fn grid(&self) -> &Grid {
                &self.grid
            }

            fn values(&self) -> &[$cell] {
                &self.values
            }

            fn flat(&self) -> &[f64] {
                flatten_slice(&self.values)
            }
        }
    };
}

field_type!(
    /// One real per cell.
    ScalarField, f64, 1, 0.0, |c: &[f64]| c[0]
);
field_type!(
    /// Three components per cell.
    VectorField, Vec3, 3, [0.0; 3], |c: &[f64]| [c[0], c[1], c[2]]
);
field_type!(
    /// Nine components per cell, `values[c][i][j]` is entry `(i, j)`.
    TensorField, Mat3, 9, [[0.0; 3]; 3], |c: &[f64]| [
        [c[0], c[1], c[2]],
        [c[3], c[4], c[5]],
        [c[6], c[7], c[8]]
    ]
);

trait Flatten {
    fn flatten_into(v: &[Self]) -> &[f64]
    where
        Self: Sized;
}

impl Flatten for f64 {
    fn flatten_into(v: &[f64]) -> &[f64] {
        v
    }
}

impl Flatten for Vec3 {
    fn flatten_into(v: &[Vec3]) -> &[f64] {
        v.as_flattened()
    }
}

impl Flatten for Mat3 {
    fn flatten_into(v: &[Mat3]) -> &[f64] {
        v.as_flattened().as_flattened()
    }
}

fn flatten_slice<T: Flatten>(v: &[T]) -> &[f64] {
    T::flatten_into(v)
}

impl ScalarField {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl VectorField {
    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v[c]).collect(),
        }
    }
}
