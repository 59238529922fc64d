use nalgebra::DMatrix;

use super::{check_hermitian, PdFourierTensor, EIGEN_FLOOR, NEGATIVE_EIGEN_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_apply, hermitian_eigen, C64};
use crate::tensor::{fft3, ifft3, DenseTensor3, FourierTensor3};

/// `exp` of every Hermitian face.
pub(crate) fn face_exp(face: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let eig = hermitian_eigen(face.clone())?;
    Ok(hermitian_apply(
        &eig.eigenvectors,
        &eig.eigenvalues,
        f64::exp,
    ))
}

/// `log` of a PSD face with the eigen floor applied.
pub(crate) fn face_log(index: usize, face: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let eig = hermitian_eigen(face.clone())?;
    let min = eig.eigenvalues.min();
    if min < -NEGATIVE_EIGEN_TOLERANCE * eig.eigenvalues.max().max(1.0) {
        return Err(Error::NotPD {
            face: index,
            min_eigenvalue: min,
        });
    }
    Ok(hermitian_apply(&eig.eigenvectors, &eig.eigenvalues, |l| {
        l.max(EIGEN_FLOOR).ln()
    }))
}

fn face_entropy(face: &DMatrix<C64>) -> Result<f64> {
    let eig = hermitian_eigen(face.clone())?;
    Ok(eig
        .eigenvalues
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            if l <= EIGEN_FLOOR {
                -l
            } else {
                l * l.ln() - l
            }
        })
        .sum())
}

/// Tensor exponential `Σ Xᵏ/k!`, evaluated by Hermitian eigendecomposition
/// of each Fourier face.
pub fn tensor_exp(x: &DenseTensor3) -> Result<DenseTensor3> {
    let xh = fft3(x);
    let faces = xh
        .faces()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            check_square(f)?;
            check_hermitian(k, f)?;
            face_exp(f)
        })
        .collect::<Result<Vec<_>>>()?;
    ifft3(&FourierTensor3::from_faces(faces)?)
}

/// Inverse of [`tensor_exp`] on positive-definite tensors.
pub fn tensor_log(x: &DenseTensor3) -> Result<DenseTensor3> {
    let xh = fft3(x);
    let faces = xh
        .faces()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            check_square(f)?;
            check_hermitian(k, f)?;
            let eig = hermitian_eigen(f.clone())?;
            let min = eig.eigenvalues.min();
            if min < EIGEN_FLOOR {
                return Err(Error::NotPD {
                    face: k,
                    min_eigenvalue: min,
                });
            }
            Ok(hermitian_apply(
                &eig.eigenvectors,
                &eig.eigenvalues,
                f64::ln,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    ifft3(&FourierTensor3::from_faces(faces)?)
}

fn check_square(f: &DMatrix<C64>) -> Result<()> {
    if f.nrows() != f.ncols() {
        return Err(Error::NotSquare {
            rows: f.nrows(),
            cols: f.ncols(),
        });
    }
    Ok(())
}

/// `Σ_k Tr(Ŵ⁽ᵏ⁾ log Ŵ⁽ᵏ⁾ − Ŵ⁽ᵏ⁾)`.
pub fn von_neumann_entropy(w: &PdFourierTensor) -> Result<f64> {
    w.as_fourier()
        .faces()
        .iter()
        .map(face_entropy)
        .sum::<Result<f64>>()
}

/// Bregman divergence of the entropy:
/// `H(W′) − H(W) − Re Tr(blkdiag(Ŵ′ − Ŵ) · log(blkdiag(Ŵ))†)`.
pub fn von_neumann_divergence(w_prime: &PdFourierTensor, w: &PdFourierTensor) -> Result<f64> {
    if w_prime.dims() != w.dims() {
        return Err(Error::DimensionMismatch(format!(
            "divergence between {} and {}",
            w_prime.dims(),
            w.dims()
        )));
    }
    let mut linear = 0.0;
    for (k, (a, b)) in w_prime
        .as_fourier()
        .faces()
        .iter()
        .zip(w.as_fourier().faces())
        .enumerate()
    {
        let log_b = face_log(k, b)?;
        let diff = a - b;
        // Re Tr(D · L†) = Re Σ D_ij conj(L_ij)
        linear += diff
            .iter()
            .zip(log_b.iter())
            .map(|(x, y)| (x * y.conj()).re)
            .sum::<f64>();
    }
    Ok(von_neumann_entropy(w_prime)? - von_neumann_entropy(w)? - linear)
}
