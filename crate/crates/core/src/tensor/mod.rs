//! Third-order tensors under the t-product.
//!
//! A real `n1 x n2 x n3` tensor is treated as an `n1 x n2` matrix of tubes
//! (fibres along the third axis). Multiplying tubes by circular convolution
//! turns the tensor into a linear operator, and a DFT along the tubes
//! diagonalizes that convolution: every product, factorization and norm
//! here is computed face-by-face in the Fourier domain.
//!
//! Conventions:
//! - forward DFT is unnormalized, the inverse carries the `1/n3`;
//! - storage is face-major (`k` slowest), row-major within a face.

mod algebra;
mod fourier;
pub mod io;
mod tsvd;

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use algebra::{identity_tensor, inner_product, t_product, t_transpose, tensor_trace};
pub use fourier::{blkdiag, fft3, ifft3, reshape_t, FourierTensor3, RESIDUE_TOLERANCE};
pub(crate) use tsvd::{face_svd, FaceSvd};
pub use tsvd::{multi_rank, t_svd, tnn, TsvdFactors, DEFAULT_RANK_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl Dims {
    pub const fn new(n1: usize, n2: usize, n3: usize) -> Self {
        Dims { n1, n2, n3 }
    }

    pub const fn len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn face_len(&self) -> usize {
        self.n1 * self.n2
    }

    #[inline]
    pub const fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        k * self.n1 * self.n2 + i * self.n2 + j
    }

    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        i < self.n1 && j < self.n2 && k < self.n3
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.n1, self.n2, self.n3)
    }
}

/// Dense real tensor, face-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor3 {
    dims: Dims,
    data: Vec<f64>,
}

impl DenseTensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        let dims = Dims::new(n1, n2, n3);
        DenseTensor3 {
            dims,
            data: vec![0.0; dims.len()],
        }
    }

    /// Wraps face-major data, rejecting non-finite entries.
    pub fn from_vec(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values supplied for a {} tensor",
                data.len(),
                dims
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(DenseTensor3 { dims, data })
    }

    pub fn from_fn(
        n1: usize,
        n2: usize,
        n3: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let dims = Dims::new(n1, n2, n3);
        let mut data = Vec::with_capacity(dims.len());
        for k in 0..n3 {
            for i in 0..n1 {
                for j in 0..n2 {
                    data.push(f(i, j, k));
                }
            }
        }
        DenseTensor3 { dims, data }
    }

    /// Stacks frontal slices, all of which must share a shape.
    pub fn from_faces(faces: &[DMatrix<f64>]) -> Result<Self> {
        let Some(first) = faces.first() else {
            return Err(Error::DimensionMismatch("no faces supplied".into()));
        };
        let (n1, n2) = first.shape();
        if faces.iter().any(|f| f.shape() != (n1, n2)) {
            return Err(Error::DimensionMismatch("faces differ in shape".into()));
        }
        let t = DenseTensor3::from_fn(n1, n2, faces.len(), |i, j, k| faces[k][(i, j)]);
        DenseTensor3::from_vec(t.dims, t.data)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.dims.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        debug_assert!(value.is_finite());
        let o = self.dims.offset(i, j, k);
        self.data[o] = value;
    }

    pub fn face(&self, k: usize) -> DMatrix<f64> {
        let Dims { n1, n2, .. } = self.dims;
        let start = k * n1 * n2;
        DMatrix::from_row_slice(n1, n2, &self.data[start..start + n1 * n2])
    }

    pub fn faces(&self) -> Vec<DMatrix<f64>> {
        (0..self.dims.n3).map(|k| self.face(k)).collect()
    }

    pub fn tube(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.dims.n3).map(|k| self.get(i, j, k)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DenseTensor3 {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Max entrywise |self - other|; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &DenseTensor3) -> f64 {
        assert_eq!(self.dims, other.dims, "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// ‖self − other‖_F / max(‖other‖_F, tiny).
    pub fn relative_error(&self, other: &DenseTensor3) -> f64 {
        let diff = self - other;
        diff.frobenius_norm() / other.frobenius_norm().max(f64::MIN_POSITIVE)
    }
}

impl Add for &DenseTensor3 {
    type Output = DenseTensor3;

    fn add(self, rhs: &DenseTensor3) -> DenseTensor3 {
        assert_eq!(self.dims, rhs.dims, "shape mismatch");
        DenseTensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &DenseTensor3 {
    type Output = DenseTensor3;

    fn sub(self, rhs: &DenseTensor3) -> DenseTensor3 {
        assert_eq!(self.dims, rhs.dims, "shape mismatch");
        DenseTensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<f64> for &DenseTensor3 {
    type Output = DenseTensor3;

    fn mul(self, rhs: f64) -> DenseTensor3 {
        self.map(|v| v * rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_face_major_row_major() {
        let t =
            DenseTensor3::from_vec(Dims::new(2, 3, 2), (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(t.get(0, 0, 0), 0.0);
        assert_eq!(t.get(0, 2, 0), 2.0);
        assert_eq!(t.get(1, 0, 0), 3.0);
        assert_eq!(t.get(0, 0, 1), 6.0);
        assert_eq!(t.face(1)[(1, 2)], 11.0);
        assert_eq!(t.tube(1, 1), vec![4.0, 10.0]);
    }

    #[test]
    fn rejects_non_finite_and_bad_lengths() {
        assert!(matches!(
            DenseTensor3::from_vec(Dims::new(1, 1, 2), vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(matches!(
            DenseTensor3::from_vec(Dims::new(1, 1, 2), vec![0.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn faces_round_trip() {
        let t = DenseTensor3::from_fn(3, 2, 4, |i, j, k| (i * 100 + j * 10 + k) as f64);
        let back = DenseTensor3::from_faces(&t.faces()).unwrap();
        assert_eq!(back, t);
    }
}
