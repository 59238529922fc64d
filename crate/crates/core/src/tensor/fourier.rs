use nalgebra::DMatrix;
use rustfft::FftPlanner;

use super::{DenseTensor3, Dims};
use crate::error::{Error, Result};
use crate::linalg::{max_hermitian_deviation, C64};

/// Relative tolerance on the imaginary part left over when a quantity that
/// should be real is brought back from the Fourier domain.
pub const RESIDUE_TOLERANCE: f64 = 1e-8;

const OFF_BLOCK_TOLERANCE: f64 = 1e-12;

/// Complex tensor of DFT-along-tube coefficients, stored as its faces.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTensor3 {
    dims: Dims,
    faces: Vec<DMatrix<C64>>,
}

impl FourierTensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        FourierTensor3 {
            dims: Dims::new(n1, n2, n3),
            faces: vec![DMatrix::zeros(n1, n2); n3],
        }
    }

    pub fn from_faces(faces: Vec<DMatrix<C64>>) -> Result<Self> {
        let Some(first) = faces.first() else {
            return Err(Error::DimensionMismatch("no faces supplied".into()));
        };
        let (n1, n2) = first.shape();
        if faces.iter().any(|f| f.shape() != (n1, n2)) {
            return Err(Error::DimensionMismatch("faces differ in shape".into()));
        }
        Ok(FourierTensor3 {
            dims: Dims::new(n1, n2, faces.len()),
            faces,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn face(&self, k: usize) -> &DMatrix<C64> {
        &self.faces[k]
    }

    pub fn face_mut(&mut self, k: usize) -> &mut DMatrix<C64> {
        &mut self.faces[k]
    }

    pub fn faces(&self) -> &[DMatrix<C64>] {
        &self.faces
    }

    pub fn into_faces(self) -> Vec<DMatrix<C64>> {
        self.faces
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.faces[k][(i, j)]
    }

    pub fn tube(&self, i: usize, j: usize) -> Vec<C64> {
        self.faces.iter().map(|f| f[(i, j)]).collect()
    }

    pub fn is_square(&self) -> bool {
        self.dims.n1 == self.dims.n2
    }

    /// Largest `|face(a,b) − conj(face(b,a))|` over all faces.
    pub fn max_hermitian_deviation(&self) -> f64 {
        self.faces
            .iter()
            .map(max_hermitian_deviation)
            .fold(0.0, f64::max)
    }

    /// Largest `|face(k) − conj(face(n3−k))|`, zero for the DFT of a real tensor.
    pub fn max_conjugate_asymmetry(&self) -> f64 {
        let n3 = self.dims.n3;
        let mut worst = 0.0f64;
        for k in 0..n3 {
            let partner = (n3 - k) % n3;
            let a = &self.faces[k];
            let b = &self.faces[partner];
            for (x, y) in a.iter().zip(b.iter()) {
                worst = worst.max((x - y.conj()).norm());
            }
        }
        worst
    }

    pub fn scale(&self, s: f64) -> Self {
        FourierTensor3 {
            dims: self.dims,
            faces: self.faces.iter().map(|f| f.map(|z| z * s)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &FourierTensor3) -> f64 {
        assert_eq!(self.dims, other.dims, "shape mismatch");
        self.faces
            .iter()
            .zip(&other.faces)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }
}

/// Unnormalized DFT of every tube.
pub fn fft3(x: &DenseTensor3) -> FourierTensor3 {
    let dims = x.dims();
    let Dims { n1, n2, n3 } = dims;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n3);
    let mut faces = vec![DMatrix::<C64>::zeros(n1, n2); n3];
    let mut tube = vec![C64::default(); n3];
    for i in 0..n1 {
        for j in 0..n2 {
            for (k, slot) in tube.iter_mut().enumerate() {
                *slot = C64::new(x.get(i, j, k), 0.0);
            }
            fft.process(&mut tube);
            for (k, v) in tube.iter().enumerate() {
                faces[k][(i, j)] = *v;
            }
        }
    }
    FourierTensor3 { dims, faces }
}

/// Inverse of [`fft3`]. Fails when the result is not numerically real.
pub fn ifft3(xh: &FourierTensor3) -> Result<DenseTensor3> {
    let (re, residue, max_re) = ifft3_parts(xh);
    let tolerance = RESIDUE_TOLERANCE * (1.0 + max_re);
    if residue > tolerance {
        return Err(Error::ImaginaryResidue { residue, tolerance });
    }
    DenseTensor3::from_vec(xh.dims(), re)
}

fn ifft3_parts(xh: &FourierTensor3) -> (Vec<f64>, f64, f64) {
    let dims = xh.dims();
    let Dims { n1, n2, n3 } = dims;
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n3);
    let scale = 1.0 / n3 as f64;
    let mut out = vec![0.0; dims.len()];
    let mut tube = vec![C64::default(); n3];
    let mut residue = 0.0f64;
    let mut max_re = 0.0f64;
    for i in 0..n1 {
        for j in 0..n2 {
            for (k, slot) in tube.iter_mut().enumerate() {
                *slot = xh.faces[k][(i, j)];
            }
            ifft.process(&mut tube);
            for (k, v) in tube.iter().enumerate() {
                let v = v * scale;
                residue = residue.max(v.im.abs());
                max_re = max_re.max(v.re.abs());
                out[dims.offset(i, j, k)] = v.re;
            }
        }
    }
    (out, residue, max_re)
}

/// Materializes the `(n1·n3) x (n2·n3)` block-diagonal matrix of faces.
pub fn blkdiag(xh: &FourierTensor3) -> DMatrix<C64> {
    let Dims { n1, n2, n3 } = xh.dims();
    let mut m = DMatrix::zeros(n1 * n3, n2 * n3);
    for (k, face) in xh.faces.iter().enumerate() {
        m.view_mut((k * n1, k * n2), (n1, n2)).copy_from(face);
    }
    m
}

/// Inverse of [`blkdiag`].
pub fn reshape_t(m: &DMatrix<C64>, dims: Dims) -> Result<FourierTensor3> {
    let Dims { n1, n2, n3 } = dims;
    if m.shape() != (n1 * n3, n2 * n3) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix cannot hold {} blocks",
            m.nrows(),
            m.ncols(),
            dims
        )));
    }
    let mut mass = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if r / n1.max(1) != c / n2.max(1) {
                mass = mass.max(m[(r, c)].norm());
            }
        }
    }
    if mass > OFF_BLOCK_TOLERANCE {
        return Err(Error::OffBlockMass { mass });
    }
    let faces = (0..n3)
        .map(|k| m.view((k * n1, k * n2), (n1, n2)).into_owned())
        .collect();
    Ok(FourierTensor3 { dims, faces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::identity_tensor;

    #[test]
    fn identity_transforms_to_identity_faces() {
        let i = identity_tensor(2, 3);
        let ih = fft3(&i);
        for face in ih.faces() {
            assert!((face - DMatrix::<C64>::identity(2, 2)).norm() < 1e-15);
        }
    }

    #[test]
    fn three_point_tube() {
        let mut x = DenseTensor3::zeros(1, 1, 3);
        x.set(0, 0, 0, 1.0);
        x.set(0, 0, 1, 2.0);
        x.set(0, 0, 2, 3.0);
        let xh = fft3(&x);
        let half_sqrt3 = 3f64.sqrt() / 2.0;
        let expected = [
            C64::new(6.0, 0.0),
            C64::new(-1.5, half_sqrt3),
            C64::new(-1.5, -half_sqrt3),
        ];
        for (got, want) in xh.tube(0, 0).iter().zip(expected) {
            assert!((got - want).norm() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn identity_faces_invert_to_identity() {
        let faces = vec![DMatrix::<C64>::identity(3, 3); 4];
        let xh = FourierTensor3::from_faces(faces).unwrap();
        let x = ifft3(&xh).unwrap();
        assert!(x.max_abs_diff(&identity_tensor(3, 4)) < 1e-15);
    }

    #[test]
    fn broken_conjugate_symmetry_is_rejected() {
        let x = DenseTensor3::from_fn(2, 2, 4, |i, j, k| (i + 2 * j + 3 * k) as f64);
        let mut xh = fft3(&x);
        xh.face_mut(1)[(0, 1)] += C64::new(1.0, 0.0);
        assert!(matches!(ifft3(&xh), Err(Error::ImaginaryResidue { .. })));
    }

    #[test]
    fn blkdiag_round_trip_and_off_block_detection() {
        let x = DenseTensor3::from_fn(2, 3, 3, |i, j, k| (i * 7 + j * 3 + k) as f64 - 4.0);
        let xh = fft3(&x);
        let m = blkdiag(&xh);
        assert_eq!(m.shape(), (6, 9));
        assert_eq!(reshape_t(&m, xh.dims()).unwrap(), xh);

        let mut bad = m.clone();
        bad[(0, 5)] = C64::new(1e-6, 0.0);
        assert!(matches!(
            reshape_t(&bad, xh.dims()),
            Err(Error::OffBlockMass { .. })
        ));
    }

    #[test]
    fn blkdiag_of_identity_faces_is_identity() {
        let xh = fft3(&identity_tensor(3, 5));
        let m = blkdiag(&xh);
        assert!((m - DMatrix::<C64>::identity(15, 15)).norm() < 1e-14);
    }
}
