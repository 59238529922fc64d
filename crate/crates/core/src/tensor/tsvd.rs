use nalgebra::DMatrix;

use super::fourier::{fft3, ifft3, FourierTensor3};
use super::{DenseTensor3, Dims};
use crate::error::Result;
use crate::linalg::{
    complete_basis, is_self_conjugate, real_part, singular_values, svd_complex, svd_real,
    to_complex, C64,
};

/// Relative singular-value cutoff used when counting ranks.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// `X = U ⋆ S ⋆ Vᵀ` with orthogonal `U`, `V` and f-diagonal `S`.
#[derive(Clone, Debug)]
pub struct TsvdFactors {
    pub u: DenseTensor3,
    pub s: DenseTensor3,
    pub v: DenseTensor3,
    /// Singular values of each Fourier face, descending.
    pub singular_values: Vec<Vec<f64>>,
}

/// Thin SVD `U diag(σ) V†` of one face.
pub(crate) struct FaceSvd {
    pub(crate) u: DMatrix<C64>,
    pub(crate) sigma: Vec<f64>,
    pub(crate) v: DMatrix<C64>,
}

/// `real` selects a real SVD of the real part, for self-conjugate faces.
pub(crate) fn face_svd(face: &DMatrix<C64>, real: bool) -> Result<FaceSvd> {
    if real {
        let svd = svd_real(real_part(face))?;
        let u = to_complex(svd.u.as_ref().expect("u requested"));
        let v = to_complex(&svd.v_t.as_ref().expect("v requested").transpose());
        Ok(FaceSvd {
            u,
            sigma: svd.singular_values.iter().copied().collect(),
            v,
        })
    } else {
        let svd = svd_complex(face.clone())?;
        let u = svd.u.clone().expect("u requested");
        let v = svd.v_t.as_ref().expect("v requested").adjoint();
        Ok(FaceSvd {
            u,
            sigma: svd.singular_values.iter().copied().collect(),
            v,
        })
    }
}

/// Face-wise SVD in the Fourier domain.
///
/// Only faces `0..=n3/2` are factored; the rest are set to the conjugates of
/// their partners so the factors transform back to real tensors.
pub fn t_svd(x: &DenseTensor3) -> Result<TsvdFactors> {
    let Dims { n1, n2, n3 } = x.dims();
    let xh = fft3(x);
    let mut uf = vec![DMatrix::<C64>::zeros(n1, n1); n3];
    let mut sf = vec![DMatrix::<C64>::zeros(n1, n2); n3];
    let mut vf = vec![DMatrix::<C64>::zeros(n2, n2); n3];
    let mut singular = vec![Vec::new(); n3];

    for k in 0..=n3 / 2 {
        let FaceSvd { u, sigma, v } = face_svd(xh.face(k), is_self_conjugate(k, n3))?;
        let u = complete_basis(&u);
        let v = complete_basis(&v);
        let mut s = DMatrix::<C64>::zeros(n1, n2);
        for (r, &sv) in sigma.iter().enumerate() {
            s[(r, r)] = C64::new(sv, 0.0);
        }
        let partner = (n3 - k) % n3;
        if partner != k {
            uf[partner] = u.map(|z| z.conj());
            vf[partner] = v.map(|z| z.conj());
            sf[partner] = s.clone();
            singular[partner] = sigma.clone();
        }
        uf[k] = u;
        vf[k] = v;
        sf[k] = s;
        singular[k] = sigma;
    }

    Ok(TsvdFactors {
        u: ifft3(&FourierTensor3::from_faces(uf)?)?,
        s: ifft3(&FourierTensor3::from_faces(sf)?)?,
        v: ifft3(&FourierTensor3::from_faces(vf)?)?,
        singular_values: singular,
    })
}

fn face_singular_values(x: &DenseTensor3) -> Result<Vec<Vec<f64>>> {
    let xh = fft3(x);
    xh.faces()
        .iter()
        .map(|f| singular_values(f.clone()))
        .collect()
}

/// Rank of each Fourier face, counting singular values above `tol·σ_max`.
pub fn multi_rank(x: &DenseTensor3, tol: f64) -> Result<Vec<usize>> {
    Ok(face_singular_values(x)?
        .iter()
        .map(|sv| {
            let top = sv.iter().copied().fold(0.0, f64::max);
            if top == 0.0 {
                0
            } else {
                sv.iter().filter(|&&s| s > tol * top).count()
            }
        })
        .collect())
}

/// Tensor nuclear norm: sum of the nuclear norms of the Fourier faces.
pub fn tnn(x: &DenseTensor3) -> Result<f64> {
    Ok(face_singular_values(x)?
        .iter()
        .map(|sv| sv.iter().sum::<f64>())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{identity_tensor, t_product, t_transpose};

    fn pseudo(n1: usize, n2: usize, n3: usize, seed: u64) -> DenseTensor3 {
        let mut s = seed;
        DenseTensor3::from_fn(n1, n2, n3, |_, _, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn identity_has_identity_singular_tensor() {
        let f = t_svd(&identity_tensor(3, 4)).unwrap();
        assert!(f.s.max_abs_diff(&identity_tensor(3, 4)) < 1e-12);
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        for (n1, n2, n3) in [(4, 3, 5), (3, 4, 4), (2, 2, 1), (5, 1, 6)] {
            let x = pseudo(n1, n2, n3, (n1 * 100 + n2 * 10 + n3) as u64);
            let f = t_svd(&x).unwrap();
            let usv = t_product(&t_product(&f.u, &f.s).unwrap(), &t_transpose(&f.v)).unwrap();
            assert!(usv.relative_error(&x) < 1e-10);
            let utu = t_product(&t_transpose(&f.u), &f.u).unwrap();
            assert!(utu.max_abs_diff(&identity_tensor(n1, n3)) < 1e-10);
            let vtv = t_product(&t_transpose(&f.v), &f.v).unwrap();
            assert!(vtv.max_abs_diff(&identity_tensor(n2, n3)) < 1e-10);
            for sv in &f.singular_values {
                assert!(sv.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn ranks_and_norms_of_simple_tensors() {
        assert_eq!(
            multi_rank(&identity_tensor(3, 4), DEFAULT_RANK_TOLERANCE).unwrap(),
            vec![3; 4]
        );
        let z = DenseTensor3::zeros(3, 2, 4);
        assert_eq!(multi_rank(&z, DEFAULT_RANK_TOLERANCE).unwrap(), vec![0; 4]);
        assert_eq!(tnn(&z).unwrap(), 0.0);
        assert!((tnn(&identity_tensor(3, 4)).unwrap() - 12.0).abs() < 1e-12);
    }
}
