use nalgebra::DMatrix;

use super::fourier::{fft3, ifft3, FourierTensor3, RESIDUE_TOLERANCE};
use super::{DenseTensor3, Dims};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// `X ⋆ Y`: face-wise products of the transforms, brought back.
pub fn t_product(x: &DenseTensor3, y: &DenseTensor3) -> Result<DenseTensor3> {
    let (dx, dy) = (x.dims(), y.dims());
    if dx.n2 != dy.n1 || dx.n3 != dy.n3 {
        return Err(Error::DimensionMismatch(format!("{dx} ⋆ {dy}")));
    }
    let (xh, yh) = (fft3(x), fft3(y));
    let faces = xh
        .faces()
        .iter()
        .zip(yh.faces())
        .map(|(a, b)| a * b)
        .collect();
    ifft3(&FourierTensor3::from_faces(faces)?)
}

/// Transposes every frontal slice and reverses the order of slices 2..n3.
pub fn t_transpose(x: &DenseTensor3) -> DenseTensor3 {
    let Dims { n1, n2, n3 } = x.dims();
    DenseTensor3::from_fn(n2, n1, n3, |i, j, k| x.get(j, i, (n3 - k) % n3))
}

/// First frontal slice the identity, every other slice zero.
pub fn identity_tensor(n: usize, n3: usize) -> DenseTensor3 {
    let mut t = DenseTensor3::zeros(n, n, n3);
    for i in 0..n {
        t.set(i, i, 0, 1.0);
    }
    t
}

/// Trace of `blkdiag(X̂)`, i.e. the sum of the Fourier face traces.
pub fn tensor_trace(x: &DenseTensor3) -> Result<f64> {
    let d = x.dims();
    if d.n1 != d.n2 {
        return Err(Error::NotSquare {
            rows: d.n1,
            cols: d.n2,
        });
    }
    let xh = fft3(x);
    let mut total = C64::new(0.0, 0.0);
    for face in xh.faces() {
        total += face.trace();
    }
    real_or_residue(total)
}

/// `Tr(X ⋆ Yᵀ) = Tr(blkdiag(X̂) blkdiag(Ŷ)†)`, evaluated face by face.
pub fn inner_product(x: &DenseTensor3, y: &DenseTensor3) -> Result<f64> {
    if x.dims() != y.dims() {
        return Err(Error::DimensionMismatch(format!(
            "<{}, {}>",
            x.dims(),
            y.dims()
        )));
    }
    let (xh, yh) = (fft3(x), fft3(y));
    let total = fourier_inner(xh.faces(), yh.faces());
    real_or_residue(total)
}

pub(crate) fn fourier_inner(a: &[DMatrix<C64>], b: &[DMatrix<C64>]) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    for (fa, fb) in a.iter().zip(b) {
        for (u, v) in fa.iter().zip(fb.iter()) {
            total += u * v.conj();
        }
    }
    total
}

pub(crate) fn real_or_residue(z: C64) -> Result<f64> {
    let tolerance = RESIDUE_TOLERANCE * (1.0 + z.re.abs());
    if z.im.abs() > tolerance {
        return Err(Error::ImaginaryResidue {
            residue: z.im.abs(),
            tolerance,
        });
    }
    Ok(z.re)
}
