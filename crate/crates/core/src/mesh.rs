//! Uniform periodic grids.

use serde::{Deserialize, Serialize};

use crate::error::{GrfError, Result};

/// Uniform periodic grid with `n` points per axis on a flat torus.
///
/// Nodes are stored row-major: axis 0 varies slowest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    dim: usize,
    n: usize,
    lengths: [f64; 3],
}

impl MeshSpec {
    pub fn new(dim: usize, n: usize, lengths: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(GrfError::InvalidArgument(format!("mesh dim must be 1..=3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(GrfError::InvalidArgument(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if lengths.len() != dim {
            return Err(GrfError::InvalidArgument(format!(
                "expected {dim} axis lengths, got {}",
                lengths.len()
            )));
        }
        let mut l = [1.0; 3];
        for (a, &len) in lengths.iter().enumerate() {
            if !(len.is_finite() && len > 0.0) {
                return Err(GrfError::InvalidArgument(format!("axis length {a} must be positive")));
            }
            l[a] = len;
        }
        Ok(MeshSpec { dim, n, lengths: l })
    }

    /// Torus with every side `2π`.
    pub fn torus(dim: usize, n: usize) -> Result<Self> {
        let tau = 2.0 * std::f64::consts::PI;
        Self::new(dim, n, &vec![tau; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.n as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    /// Coordinate volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Integer coordinates of a node.
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let mut c = [0; 3];
        let mut r = idx;
        for a in (0..self.dim).rev() {
            c[a] = r % self.n;
            r /= self.n;
        }
        c
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        let mut idx = 0;
        for &ci in c.iter().take(self.dim) {
            idx = idx * self.n + ci;
        }
        idx
    }

    /// Physical position of a node.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = c[a] as f64 * self.spacing(a);
        }
        x
    }

    /// Periodic neighbour `delta` steps along `axis`.
    #[inline]
    pub fn shift(&self, idx: usize, axis: usize, delta: isize) -> usize {
        let s = self.stride(axis);
        let c = (idx / s) % self.n;
        let nc = (c as isize + delta).rem_euclid(self.n as isize) as usize;
        idx + nc * s - c * s
    }

    /// Fails unless `other` is the same grid.
    pub fn check_same(&self, other: &MeshSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(GrfError::ShapeMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Same torus with `factor` times the points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.dim, self.n * factor, self.lengths())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(MeshSpec::new(4, 8, &[1.0; 4]).is_err());
        assert!(MeshSpec::new(2, 12, &[1.0, 1.0]).is_err());
        assert!(MeshSpec::new(2, 4, &[1.0, 1.0]).is_err());
        assert!(MeshSpec::new(2, 8, &[1.0]).is_err());
        assert!(MeshSpec::new(1, 8, &[-1.0]).is_err());
    }

    #[test]
    fn index_roundtrip_and_wrap() {
        let m = MeshSpec::new(3, 8, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.len(), 512);
        for idx in [0, 7, 63, 200, 511] {
            assert_eq!(m.index(m.coords(idx)), idx);
        }
        let i = m.index([0, 7, 3]);
        assert_eq!(m.coords(m.shift(i, 1, 1)), [0, 0, 3]);
        assert_eq!(m.coords(m.shift(i, 0, -1)), [7, 7, 3]);
        assert_eq!(m.coords(m.shift(i, 2, 2)), [0, 7, 5]);
        assert!((m.spacing(1) - 0.25).abs() < 1e-15);
    }
}
