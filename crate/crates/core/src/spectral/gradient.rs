use crate::error::{Error, Result};
use crate::tensor::{ifft3, DenseTensor3, Dims, FourierTensor3};

/// Finite-difference directions used by [`complex_gradient_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Perturbation {
    /// One coordinate `e_(i,j,k)` at a time.
    Entrywise,
    /// `e_(i,j,k) + e_(j,i,−k mod n3)`, which keeps every Fourier face
    /// Hermitian. Needed for functions only defined on t-symmetric tensors.
    TSymmetric,
}

/// Spatial gradient of a function given its Fourier-domain gradient:
/// the adjoint of `fft3`, which is `n3 · ifft3`.
pub fn fourier_adjoint(gh: &FourierTensor3) -> Result<DenseTensor3> {
    Ok(ifft3(gh)?.map(|v| v * gh.dims().n3 as f64))
}

/// Largest gap between central differences of `f` at `x` and the directional
/// derivatives predicted by `fourier_gradient` (the gradient with respect to
/// `X̂`, evaluated at `x`).
pub fn complex_gradient_check<F>(
    f: F,
    fourier_gradient: &FourierTensor3,
    x: &DenseTensor3,
    step: f64,
    perturbation: Perturbation,
) -> Result<f64>
where
    F: Fn(&DenseTensor3) -> Result<f64>,
{
    if fourier_gradient.dims() != x.dims() {
        return Err(Error::DimensionMismatch(format!(
            "gradient {} at point {}",
            fourier_gradient.dims(),
            x.dims()
        )));
    }
    let g = fourier_adjoint(fourier_gradient)?;
    let Dims { n1, n2, n3 } = x.dims();
    let mut worst = 0.0f64;
    for k in 0..n3 {
        for i in 0..n1 {
            for j in 0..n2 {
                let mut dir = vec![(i, j, k)];
                if perturbation == Perturbation::TSymmetric {
                    if n1 != n2 {
                        return Err(Error::NotSquare { rows: n1, cols: n2 });
                    }
                    dir.push((j, i, (n3 - k) % n3));
                }
                let shifted = |sign: f64| {
                    let mut y = x.clone();
                    for &(a, b, c) in &dir {
                        y.set(a, b, c, y.get(a, b, c) + sign * step);
                    }
                    y
                };
                let fd = (f(&shifted(1.0))? - f(&shifted(-1.0))?) / (2.0 * step);
                let analytic: f64 = dir.iter().map(|&(a, b, c)| g.get(a, b, c)).sum();
                worst = worst.max((fd - analytic).abs());
            }
        }
    }
    Ok(worst)
}
