use nalgebra::{DMatrix, DVector};

use super::{Definiteness, PdFourierTensor};
use crate::error::Result;
use crate::linalg::{
    hermitian_apply, hermitian_eigen, is_self_conjugate, real_part, symmetric_eigen, to_complex,
    C64,
};
use crate::tensor::{fft3, DenseTensor3, Dims, FourierTensor3};

/// Faces `[[0, Â⁽ᵏ⁾], [Â⁽ᵏ⁾†, 0]]`, each Hermitian of size `m + n`.
pub fn sym_embed(a: &DenseTensor3) -> FourierTensor3 {
    let Dims { n1: m, n2: n, .. } = a.dims();
    let ah = fft3(a);
    let faces = ah
        .faces()
        .iter()
        .map(|f| {
            let mut s = DMatrix::<C64>::zeros(m + n, m + n);
            s.view_mut((0, m), (m, n)).copy_from(f);
            s.view_mut((m, 0), (n, m)).copy_from(&f.adjoint());
            s
        })
        .collect();
    FourierTensor3::from_faces(faces).expect("faces share a shape")
}

/// Split of `sym(A)` into positive and negative parts, `sym(Â) = P̂ − N̂`.
#[derive(Clone, Debug)]
pub struct PnDecomposition {
    pub p: PdFourierTensor,
    pub n: PdFourierTensor,
    /// `Tr(P̂⁽ᵏ⁾ + N̂⁽ᵏ⁾) = 2‖Â⁽ᵏ⁾‖_*` per face.
    pub tau: Vec<f64>,
    /// Largest diagonal entry of `P̂⁽ᵏ⁾` or `N̂⁽ᵏ⁾` per face.
    pub beta: Vec<f64>,
}

fn eigen_face(face: &DMatrix<C64>, real: bool) -> Result<(DMatrix<C64>, DVector<f64>)> {
    if real {
        let eig = symmetric_eigen(real_part(face))?;
        Ok((to_complex(&eig.eigenvectors), eig.eigenvalues))
    } else {
        let eig = hermitian_eigen(face.clone())?;
        Ok((eig.eigenvectors, eig.eigenvalues))
    }
}

fn max_diagonal(m: &DMatrix<C64>) -> f64 {
    m.diagonal().iter().map(|z| z.re).fold(0.0, f64::max)
}

pub fn pn_decompose(a: &DenseTensor3) -> Result<PnDecomposition> {
    let s = sym_embed(a);
    let Dims {
        n1: size, n3: d, ..
    } = s.dims();
    let mut pf = vec![DMatrix::<C64>::zeros(size, size); d];
    let mut nf = pf.clone();
    let mut tau = vec![0.0; d];
    let mut beta = vec![0.0; d];
    for k in 0..=d / 2 {
        let (q, lambda) = eigen_face(s.face(k), is_self_conjugate(k, d))?;
        let p = hermitian_apply(&q, &lambda, |l| l.max(0.0));
        let n = hermitian_apply(&q, &lambda, |l| (-l).max(0.0));
        let t = lambda.iter().map(|l| l.abs()).sum::<f64>();
        let b = max_diagonal(&p).max(max_diagonal(&n));
        let partner = (d - k) % d;
        if partner != k {
            pf[partner] = p.map(|z| z.conj());
            nf[partner] = n.map(|z| z.conj());
            tau[partner] = t;
            beta[partner] = b;
        }
        pf[k] = p;
        nf[k] = n;
        tau[k] = t;
        beta[k] = b;
    }
    Ok(PnDecomposition {
        p: PdFourierTensor::new_unchecked(FourierTensor3::from_faces(pf)?, Definiteness::Semi),
        n: PdFourierTensor::new_unchecked(FourierTensor3::from_faces(nf)?, Definiteness::Semi),
        tau,
        beta,
    })
}

/// Faces `blockdiag(P̂⁽ᵏ⁾, N̂⁽ᵏ⁾)` of size `2(m + n)`.
pub fn embed_decomposition(pn: &PnDecomposition) -> PdFourierTensor {
    let half = pn.p.size();
    let faces =
        pn.p.as_fourier()
            .faces()
            .iter()
            .zip(pn.n.as_fourier().faces())
            .map(|(p, n)| {
                let mut f = DMatrix::<C64>::zeros(2 * half, 2 * half);
                f.view_mut((0, 0), (half, half)).copy_from(p);
                f.view_mut((half, half), (half, half)).copy_from(n);
                f
            })
            .collect();
    PdFourierTensor::new_unchecked(
        FourierTensor3::from_faces(faces).expect("faces share a shape"),
        Definiteness::Semi,
    )
}

/// Positive semidefinite embedding `Φ(A)` of an `m×n×d` tensor.
pub fn embed_phi(a: &DenseTensor3) -> Result<PdFourierTensor> {
    Ok(embed_decomposition(&pn_decompose(a)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::is_positive_definite;
    use crate::tensor::{ifft3, tnn};

    fn sample(m: usize, n: usize, d: usize) -> DenseTensor3 {
        DenseTensor3::from_fn(m, n, d, |i, j, k| {
            (((i * 7 + j * 3 + k * 11) % 9) as f64 - 4.0) / 4.0
        })
    }

    #[test]
    fn sym_embed_is_hermitian_and_real() {
        let s = sym_embed(&sample(3, 2, 4));
        assert_eq!(s.dims(), Dims::new(5, 5, 4));
        assert!(s.max_hermitian_deviation() < 1e-14);
        assert!(ifft3(&s).is_ok());
    }

    #[test]
    fn pn_parts_reconstruct_and_are_psd() {
        for d in [1, 2, 5, 6] {
            let a = sample(3, 4, d);
            let s = sym_embed(&a);
            let pn = pn_decompose(&a).unwrap();
            for k in 0..d {
                let diff = pn.p.as_fourier().face(k) - pn.n.as_fourier().face(k);
                assert!((diff - s.face(k)).norm() < 1e-10);
            }
            assert!(PdFourierTensor::new(pn.p.as_fourier().clone(), Definiteness::Semi).is_ok());
            assert!(PdFourierTensor::new(pn.n.as_fourier().clone(), Definiteness::Semi).is_ok());
            assert!(ifft3(pn.p.as_fourier()).is_ok());
            let total: f64 = pn.tau.iter().sum();
            assert!((total - 2.0 * tnn(&a).unwrap()).abs() < 1e-9);
            for (t, b) in pn.tau.iter().zip(&pn.beta) {
                assert!(*b >= 0.0 && *b <= *t + 1e-12);
            }
        }
    }

    #[test]
    fn phi_is_psd_block_diagonal() {
        let a = sample(2, 3, 3);
        let phi = embed_phi(&a).unwrap();
        assert_eq!(phi.size(), 10);
        assert!(!is_positive_definite(phi.as_fourier(), 1e-10).unwrap());
        assert!(PdFourierTensor::new(phi.as_fourier().clone(), Definiteness::Semi).is_ok());
        let f = phi.as_fourier().face(1);
        assert!(f.view((0, 5), (5, 5)).norm() == 0.0);
    }
}
