//! Positive-definite tensors and their spectral calculus.
//!
//! A tensor is positive definite when every Fourier face is Hermitian
//! positive definite. Matrix functions (exp, log, entropy) then act face by
//! face, which is the same as acting on `blkdiag(X̂)` without materializing it.

mod embed;
pub(crate) mod functions;
mod gradient;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, max_hermitian_deviation};
use crate::tensor::{Dims, FourierTensor3};

pub use embed::{embed_decomposition, embed_phi, pn_decompose, sym_embed, PnDecomposition};
pub use functions::{tensor_exp, tensor_log, von_neumann_divergence, von_neumann_entropy};
pub use gradient::{complex_gradient_check, fourier_adjoint, Perturbation};

/// Eigenvalues are clamped here before taking logarithms.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Eigenvalues below `-NEGATIVE_EIGEN_TOLERANCE · max(1, λ_max)` mean the
/// input is not positive (semi)definite.
pub const NEGATIVE_EIGEN_TOLERANCE: f64 = 1e-10;

/// Relative tolerance for accepting a face as Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definiteness {
    /// Every eigenvalue positive (above the eigen floor).
    Strict,
    /// Eigenvalues may touch zero.
    Semi,
}

/// Fourier tensor with Hermitian positive (semi)definite faces.
#[derive(Clone, Debug, PartialEq)]
pub struct PdFourierTensor {
    inner: FourierTensor3,
    definiteness: Definiteness,
}

impl PdFourierTensor {
    /// Validates squareness, Hermitian faces and the eigenvalue floor.
    pub fn new(inner: FourierTensor3, definiteness: Definiteness) -> Result<Self> {
        let d = inner.dims();
        if d.n1 != d.n2 {
            return Err(Error::NotSquare {
                rows: d.n1,
                cols: d.n2,
            });
        }
        for (k, face) in inner.faces().iter().enumerate() {
            check_hermitian(k, face)?;
            let eig = hermitian_eigen(face.clone())?;
            let min = eig.eigenvalues.min();
            let max = eig.eigenvalues.max();
            let ok = match definiteness {
                Definiteness::Strict => min >= EIGEN_FLOOR,
                Definiteness::Semi => min >= -NEGATIVE_EIGEN_TOLERANCE * max.max(1.0),
            };
            if !ok {
                return Err(Error::NotPD {
                    face: k,
                    min_eigenvalue: min,
                });
            }
        }
        Ok(PdFourierTensor {
            inner,
            definiteness,
        })
    }

    /// Caller guarantees the invariants (internal update paths that build
    /// faces as `Q f(Λ) Q†` with positive `f`).
    pub(crate) fn new_unchecked(inner: FourierTensor3, definiteness: Definiteness) -> Self {
        PdFourierTensor {
            inner,
            definiteness,
        }
    }

    /// All faces `c_k · I`.
    pub fn scaled_identity(size: usize, scales: &[f64]) -> Result<Self> {
        if let Some(k) = scales.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::NotPD {
                face: k,
                min_eigenvalue: scales[k],
            });
        }
        let faces = scales
            .iter()
            .map(|&s| nalgebra::DMatrix::identity(size, size).map(|z: crate::C64| z * s))
            .collect();
        Ok(PdFourierTensor {
            inner: FourierTensor3::from_faces(faces)?,
            definiteness: Definiteness::Strict,
        })
    }

    pub fn dims(&self) -> Dims {
        self.inner.dims()
    }

    /// Face size `N`.
    pub fn size(&self) -> usize {
        self.inner.dims().n1
    }

    pub fn depth(&self) -> usize {
        self.inner.dims().n3
    }

    pub fn definiteness(&self) -> Definiteness {
        self.definiteness
    }

    pub fn as_fourier(&self) -> &FourierTensor3 {
        &self.inner
    }

    pub fn into_fourier(self) -> FourierTensor3 {
        self.inner
    }

    pub fn face_traces(&self) -> Vec<f64> {
        self.inner.faces().iter().map(|f| f.trace().re).collect()
    }

    pub fn total_trace(&self) -> f64 {
        self.face_traces().iter().sum()
    }

    pub(crate) fn scale_faces(&self, scales: &[f64]) -> Self {
        let faces = self
            .inner
            .faces()
            .iter()
            .zip(scales)
            .map(|(f, &s)| f.map(|z| z * s))
            .collect();
        PdFourierTensor {
            inner: FourierTensor3::from_faces(faces).expect("same shape"),
            definiteness: self.definiteness,
        }
    }
}

pub(crate) fn check_hermitian(
    face_index: usize,
    face: &nalgebra::DMatrix<crate::C64>,
) -> Result<()> {
    let scale = face.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
    let deviation = max_hermitian_deviation(face);
    if deviation > HERMITIAN_TOLERANCE * scale {
        return Err(Error::NotHermitianFaces {
            face: face_index,
            deviation,
        });
    }
    Ok(())
}

/// True iff every face is Hermitian within `tol` and has minimum eigenvalue
/// above `tol`.
pub fn is_positive_definite(xh: &FourierTensor3, tol: f64) -> Result<bool> {
    let d = xh.dims();
    if d.n1 != d.n2 {
        return Err(Error::NotSquare {
            rows: d.n1,
            cols: d.n2,
        });
    }
    for face in xh.faces() {
        if max_hermitian_deviation(face) > tol {
            return Ok(false);
        }
        let eig = hermitian_eigen(face.clone())?;
        if eig.eigenvalues.min() <= tol {
            return Ok(false);
        }
    }
    Ok(true)
}
