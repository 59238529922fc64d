//! Dense factorizations with the error and ordering conventions the rest
//! of the crate relies on.

use nalgebra::{ComplexField, DMatrix, DVector, Dyn, SymmetricEigen, SVD};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

const MAX_SWEEPS: usize = 10_000;

pub(crate) fn hermitian_eigen(m: DMatrix<C64>) -> Result<SymmetricEigen<C64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m, f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::ConvergenceFailure("hermitian eigendecomposition"))
}

pub(crate) fn symmetric_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m, f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::ConvergenceFailure("symmetric eigendecomposition"))
}

/// `Q diag(f(λ)) Q†` for a Hermitian eigendecomposition.
pub(crate) fn hermitian_apply(
    vectors: &DMatrix<C64>,
    values: &DVector<f64>,
    f: impl Fn(f64) -> f64,
) -> DMatrix<C64> {
    let mut scaled = vectors.clone();
    for (c, &lambda) in values.iter().enumerate() {
        let w = f(lambda);
        scaled.column_mut(c).scale_mut(w);
    }
    let out = scaled * vectors.adjoint();
    hermitize(out)
}

/// Averages `M` with `M†`, removing rounding asymmetry.
pub(crate) fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    let adj = m.adjoint();
    (m + adj).map(|z| z * 0.5)
}

const MAX_JACOBI_SWEEPS: usize = 100;

/// Thin SVD by one-sided Jacobi rotations, singular values descending.
///
/// nalgebra's bidiagonal SVD can return NaN singular values for very sparse
/// inputs (a few nonzeros in an otherwise empty matrix), which is exactly
/// what the online learners accumulate early on.
fn jacobi_svd<T>(a: DMatrix<T>) -> Result<SVD<T, Dyn, Dyn>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    if let Some(index) = a.iter().position(|z| !z.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let (m, n) = a.shape();
    if m < n {
        // A† = U Σ V†  ⇒  A = V Σ U†
        let svd = jacobi_svd(a.adjoint())?;
        return Ok(SVD {
            u: svd.v_t.map(|v| v.adjoint()),
            v_t: svd.u.map(|u| u.adjoint()),
            singular_values: svd.singular_values,
        });
    }
    if n == 0 {
        return Ok(SVD {
            u: Some(DMatrix::zeros(m, 0)),
            v_t: Some(DMatrix::zeros(0, 0)),
            singular_values: DVector::zeros(0),
        });
    }
    let mut w = a;
    let mut v = DMatrix::<T>::identity(n, n);
    let tol = m as f64 * f64::EPSILON;
    // columns at rounding level carry no information; rotating them against
    // each other never settles
    let negligible = (f64::EPSILON * w.norm()).powi(2);
    let mut converged = false;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.modulus();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + 1f64.hypot(zeta));
                let c = 1.0 / 1f64.hypot(t);
                let s = c * t;
                let phase = gamma.conjugate().unscale(g);
                for mat in [&mut w, &mut v] {
                    for r in 0..mat.nrows() {
                        let xp = mat[(r, p)];
                        let xq = mat[(r, q)] * phase;
                        mat[(r, p)] = xp.scale(c) - xq.scale(s);
                        mat[(r, q)] = xp.scale(s) + xq.scale(c);
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure("Jacobi SVD"));
    }
    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let zero = negligible.sqrt().max(f64::MIN_POSITIVE);
    let mut u_cols: Vec<DVector<T>> = Vec::with_capacity(n);
    let mut missing = 0;
    for &j in &order {
        if norms[j] > zero {
            u_cols.push(w.column(j).unscale(norms[j]));
        } else {
            missing += 1;
        }
    }
    for e in 0..m {
        if missing == 0 {
            break;
        }
        let mut x = DVector::<T>::zeros(m);
        x[e] = T::one();
        for _ in 0..2 {
            for c in &u_cols {
                let proj = c.dotc(&x);
                x -= c * proj;
            }
        }
        let norm = x.norm();
        if norm > 1e-6 {
            u_cols.push(x.unscale(norm));
            missing -= 1;
        }
    }
    let u = DMatrix::from_columns(&u_cols);
    let v_sorted = DMatrix::from_columns(
        &order
            .iter()
            .map(|&j| v.column(j).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok(SVD {
        u: Some(u),
        v_t: Some(v_sorted.adjoint()),
        singular_values: DVector::from_iterator(n, order.iter().map(|&j| norms[j])),
    })
}

pub(crate) fn svd_complex(m: DMatrix<C64>) -> Result<SVD<C64, Dyn, Dyn>> {
    jacobi_svd(m)
}

pub(crate) fn svd_real(m: DMatrix<f64>) -> Result<SVD<f64, Dyn, Dyn>> {
    jacobi_svd(m)
}

/// Singular values only, descending.
pub(crate) fn singular_values(m: DMatrix<C64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    Ok(jacobi_svd(m)?.singular_values.iter().copied().collect())
}

/// Faces 0 and n3/2 of the DFT of a real tensor are themselves real.
pub(crate) fn is_self_conjugate(face: usize, n3: usize) -> bool {
    face == 0 || 2 * face == n3
}

pub(crate) fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

pub(crate) fn real_part(m: &DMatrix<C64>) -> DMatrix<f64> {
    m.map(|z| z.re)
}

/// Extends orthonormal columns `q` (rows x r) to a full unitary basis
/// (rows x rows) by Gram-Schmidt against the standard basis.
pub(crate) fn complete_basis(q: &DMatrix<C64>) -> DMatrix<C64> {
    let rows = q.nrows();
    let mut cols: Vec<DVector<C64>> = q.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while cols.len() < rows && e < rows {
        let mut v = DVector::<C64>::zeros(rows);
        v[e] = C64::new(1.0, 0.0);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&v);
                v -= c * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            cols.push(v / C64::new(norm, 0.0));
        }
        e += 1;
    }
    DMatrix::from_columns(&cols)
}

/// Largest |eigenvalue| of a Hermitian matrix.
pub(crate) fn hermitian_spectral_norm(m: &DMatrix<C64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let eig = hermitian_eigen(m.clone())?;
    Ok(eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs())))
}

pub(crate) fn max_hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}
