use serde::{Deserialize, Serialize};

use super::FieldError;

/// Minimum cells per axis for the centered stencils to be well defined.
pub const MIN_CELLS: usize = 4;

/// Uniform periodic Cartesian grid.
///
/// Cell `(i, j, k)` sits at `x = (i h₁, j h₂, k h₃)`; storage is row-major with
/// the last axis fastest. Indices wrap, so `i` and `i + n` address the same cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    n: [usize; 3],
    l: [f64; 3],
    h: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: [usize; 3],
    pub l: [f64; 3],
}

impl TryFrom<GridSpec> for Grid {
    type Error = FieldError;

    fn try_from(spec: GridSpec) -> Result<Self, Self::Error> {
        Grid::new(spec.n, spec.l)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec { n: g.n, l: g.l }
    }
}

impl Grid {
    pub fn new(n: [usize; 3], l: [f64; 3]) -> Result<Self, FieldError> {
        for axis in 0..3 {
            if n[axis] < MIN_CELLS {
                return Err(FieldError::BadGrid(format!(
                    "axis {axis} has {} cells, at least {MIN_CELLS} required",
                    n[axis]
                )));
            }
            if !(l[axis].is_finite() && l[axis] > 0.0) {
                return Err(FieldError::BadGrid(format!(
                    "axis {axis} has non-positive edge length {}",
                    l[axis]
                )));
            }
        }
        let h = [
            l[0] / n[0] as f64,
            l[1] / n[1] as f64,
            l[2] / n[2] as f64,
        ];
        Ok(Grid { n, l, h })
    }

    /// Cube with `n` cells and edge `l` on every axis.
    pub fn cube(n: usize, l: f64) -> Result<Self, FieldError> {
        Self::new([n; 3], [l; 3])
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.l
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.h
    }

    pub fn min_spacing(&self) -> f64 {
        self.h[0].min(self.h[1]).min(self.h[2])
    }

    pub fn volume_element(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    pub fn volume(&self) -> f64 {
        self.l[0] * self.l[1] * self.l[2]
    }

    pub fn cells(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// Flat index of a (possibly out-of-range) cell, wrapping periodically.
    pub fn index(&self, i: isize, j: isize, k: isize) -> usize {
        let w = |v: isize, n: usize| v.rem_euclid(n as isize) as usize;
        (w(i, self.n[0]) * self.n[1] + w(j, self.n[1])) * self.n[2] + w(k, self.n[2])
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.n[2];
        let rest = idx / self.n[2];
        [rest / self.n[1], rest % self.n[1], k]
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        [
            c[0] as f64 * self.h[0],
            c[1] as f64 * self.h[1],
            c[2] as f64 * self.h[2],
        ]
    }

    /// `[minus, plus]` neighbour indices of `idx` along each axis.
    #[inline]
    pub fn neighbours(&self, idx: usize) -> [[usize; 2]; 3] {
        let [i, j, k] = self.coords(idx);
        let [n0, n1, n2] = self.n;
        let s0 = n1 * n2;
        let base = idx - i * s0 - j * n2 - k;
        let im = if i == 0 { n0 - 1 } else { i - 1 };
        let ip = if i + 1 == n0 { 0 } else { i + 1 };
        let jm = if j == 0 { n1 - 1 } else { j - 1 };
        let jp = if j + 1 == n1 { 0 } else { j + 1 };
        let km = if k == 0 { n2 - 1 } else { k - 1 };
        let kp = if k + 1 == n2 { 0 } else { k + 1 };
        [
            [base + im * s0 + j * n2 + k, base + ip * s0 + j * n2 + k],
            [base + i * s0 + jm * n2 + k, base + i * s0 + jp * n2 + k],
            [base + i * s0 + j * n2 + km, base + i * s0 + j * n2 + kp],
        ]
    }

    /// Distance from cell `idx` to the nearest face of the box.
    pub fn distance_to_boundary(&self, idx: usize) -> f64 {
        let x = self.position(idx);
        (0..3)
            .map(|a| x[a].min(self.l[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_thin_axes() {
        assert!(Grid::new([3, 8, 8], [1.0; 3]).is_err());
        assert!(Grid::new([8, 8, 8], [1.0, 0.0, 1.0]).is_err());
        assert!(Grid::new([4, 4, 4], [1.0; 3]).is_ok());
    }

    #[test]
    fn volume_element_is_product_of_spacings() {
        let g = Grid::new([4, 5, 6], [1.0, 2.0, 3.0]).unwrap();
        let h = g.spacing();
        assert_eq!(g.volume_element(), h[0] * h[1] * h[2]);
        assert!(h.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn indices_wrap() {
        let g = Grid::new([4, 5, 6], [1.0; 3]).unwrap();
        for idx in [0, 7, 59, 119] {
            let [i, j, k] = g.coords(idx).map(|c| c as isize);
            assert_eq!(g.index(i, j, k), idx);
            assert_eq!(g.index(i + 4, j - 5, k + 12), idx);
            let nb = g.neighbours(idx);
            assert_eq!(nb[0], [g.index(i - 1, j, k), g.index(i + 1, j, k)]);
            assert_eq!(nb[1], [g.index(i, j - 1, k), g.index(i, j + 1, k)]);
            assert_eq!(nb[2], [g.index(i, j, k - 1), g.index(i, j, k + 1)]);
        }
    }

    #[test]
    fn serde_validates() {
        let ok: Grid = serde_json::from_str(r#"{"n":[8,8,8],"l":[1,1,1]}"#).unwrap();
        assert_eq!(ok.cells(), 512);
        assert!(serde_json::from_str::<Grid>(r#"{"n":[2,8,8],"l":[1,1,1]}"#).is_err());
        assert!(serde_json::from_str::<Grid>(r#"{"n":[8,8,8],"l":[1,1,1],"x":0}"#).is_err());
    }
}
