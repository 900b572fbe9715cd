//! The dense third-order tensor container.
//!
//! Entries are stored with the mode-1 index fastest, then mode-2, then mode-3:
//! each frontal slice is a contiguous column-major `n1 x n2` block and slices
//! follow one another. Tubes `x(i, j, :)` are therefore strided by `n1 * n2`.
//!
//! Indices in this API are zero-based, so entry `(0, 0, 0)` is the first
//! element of the first frontal slice.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};

/// Shape `(n1, n2, n3)` of a third-order tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl Dims {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::InvalidDims((n1, n2, n3)));
        }
        Ok(Self { n1, n2, n3 })
    }

    /// Total number of entries.
    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    /// Never true for a validated shape; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of entries in one frontal slice.
    pub fn slice_len(&self) -> usize {
        self.n1 * self.n2
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n1 && j < self.n2 && k < self.n3);
        i + self.n1 * (j + self.n2 * k)
    }

    pub fn as_tuple(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.n1, self.n2, self.n3)
    }
}

/// A real `n1 x n2 x n3` tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: Dims,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        let dims = Dims::new(n1, n2, n3)?;
        Ok(Self::zeros_like_dims(dims))
    }

    pub(crate) fn zeros_like_dims(dims: Dims) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.len()],
        }
    }

    /// Wraps `data` laid out mode-1 fastest. Rejects wrong lengths and
    /// non-finite entries.
    pub fn from_vec(n1: usize, n2: usize, n3: usize, data: Vec<f64>) -> Result<Self> {
        let dims = Dims::new(n1, n2, n3)?;
        if data.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values supplied for a {} tensor",
                data.len(),
                dims
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteOutput("Tensor3::from_vec"));
        }
        Ok(Self { dims, data })
    }

    pub(crate) fn from_parts(dims: Dims, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dims.len());
        Self { dims, data }
    }

    pub fn from_fn(
        n1: usize,
        n2: usize,
        n3: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let dims = Dims::new(n1, n2, n3)?;
        let mut data = Vec::with_capacity(dims.len());
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self::from_vec(n1, n2, n3, data)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.dims.as_tuple()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Frontal slice `k` as a column-major `n1 x n2` block.
    pub fn slice(&self, k: usize) -> &[f64] {
        let m = self.dims.slice_len();
        &self.data[k * m..(k + 1) * m]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let m = self.dims.slice_len();
        &mut self.data[k * m..(k + 1) * m]
    }

    /// Copies out the mode-3 fiber `x(i, j, :)`.
    pub fn tube(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.dims.n3).map(|k| self[(i, j, k)]).collect()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &Tensor3) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Clamps every entry into `[lo, hi]`.
    pub fn clamp(&self, lo: f64, hi: f64) -> Tensor3 {
        self.map(|v| v.clamp(lo, hi))
    }

    pub fn scale(&self, s: f64) -> Tensor3 {
        self.map(|v| v * s)
    }

    /// `self + alpha * other`, elementwise.
    pub fn add_scaled(&self, alpha: f64, other: &Tensor3) -> Result<Tensor3> {
        self.check_same_dims(other)?;
        Ok(Tensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }

    pub(crate) fn check_same_dims(&self, other: &Tensor3) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;

    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[self.dims.offset(i, j, k)]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        let o = self.dims.offset(i, j, k);
        &mut self.data[o]
    }
}

// The operator impls panic on mismatched shapes, like ndarray's do; use
// `add_scaled` for a fallible version.
impl Add for &Tensor3 {
    type Output = Tensor3;

    fn add(self, rhs: &Tensor3) -> Tensor3 {
        self.add_scaled(1.0, rhs).expect("tensor shapes differ")
    }
}

impl Sub for &Tensor3 {
    type Output = Tensor3;

    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        self.add_scaled(-1.0, rhs).expect("tensor shapes differ")
    }
}

impl Mul<f64> for &Tensor3 {
    type Output = Tensor3;

    fn mul(self, rhs: f64) -> Tensor3 {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_mode1_fastest() {
        let t = Tensor3::from_fn(2, 3, 2, |i, j, k| (i + 10 * j + 100 * k) as f64).unwrap();
        assert_eq!(&t.as_slice()[..4], &[0.0, 1.0, 10.0, 11.0]);
        assert_eq!(t.slice(1)[0], 100.0);
        assert_eq!(t.tube(1, 2), vec![21.0, 121.0]);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(Tensor3::zeros(0, 2, 2), Err(Error::InvalidDims(_))));
        assert!(matches!(
            Tensor3::from_vec(2, 2, 2, vec![0.0; 7]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            Tensor3::from_vec(1, 1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFiniteOutput(_))
        ));
    }

    #[test]
    fn arithmetic() {
        let a = Tensor3::from_vec(1, 2, 1, vec![1.0, 2.0]).unwrap();
        let b = Tensor3::from_vec(1, 2, 1, vec![0.5, -1.0]).unwrap();
        assert_eq!((&a + &b).as_slice(), &[1.5, 1.0]);
        assert_eq!((&a - &b).as_slice(), &[0.5, 3.0]);
        assert_eq!((&a * 2.0).as_slice(), &[2.0, 4.0]);
        assert!((a.distance(&b).unwrap() - (0.25f64 + 9.0).sqrt()).abs() < 1e-15);
        assert_eq!(a.clamp(0.0, 1.5).as_slice(), &[1.0, 1.5]);
    }
}
