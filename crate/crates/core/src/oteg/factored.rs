//! Closed-form OTEG state.
//!
//! Starting from scaled identities and adding only loss-gradient tensors in
//! the log domain, every face stays of the form
//!
//! ```text
//! log Ŵ⁽ᶠ⁾ = c_f·I + blockdiag(−sym Γ_f, +sym Γ_f),   sym Γ = [[0, Γ], [Γ†, 0]]
//! ```
//!
//! where `Γ = fft3(S)` and `S(i,j,k)` accumulates `η_t·g_t` for every play of
//! `(i,j,k)`. With `Γ_f = U Σ V†` the exponential is explicit:
//! `exp(∓sym Γ) = I + [[U(cosh Σ − I)U†, ∓U sinh Σ V†], [∓V sinh Σ U†, V(cosh Σ − I)V†]]`.

use nalgebra::DMatrix;

use super::twiddle;
use crate::error::Result;
use crate::linalg::{is_self_conjugate, C64};
use crate::spectral::{Definiteness, PdFourierTensor};
use crate::teg::{log_projection_shifts, log_sum_exp, ProjectionMode};
use crate::tensor::{face_svd, fft3, ifft3, DenseTensor3, FaceSvd, FourierTensor3};

pub(crate) struct FactoredState {
    m: usize,
    n: usize,
    d: usize,
    acc: DenseTensor3,
    log_scale: Vec<f64>,
    /// SVDs of `Γ_f` for `f = 0..=d/2`.
    svds: Vec<FaceSvd>,
}

fn zero_svd(m: usize, n: usize) -> FaceSvd {
    FaceSvd {
        u: DMatrix::zeros(m, 0),
        sigma: Vec::new(),
        v: DMatrix::zeros(n, 0),
    }
}

impl FactoredState {
    pub(crate) fn new(m: usize, n: usize, d: usize, tau: &[f64]) -> Self {
        let big_n = 2.0 * (m + n) as f64;
        FactoredState {
            m,
            n,
            d,
            acc: DenseTensor3::zeros(m, n, d),
            log_scale: tau.iter().map(|t| (t / big_n).ln()).collect(),
            svds: (0..=d / 2).map(|_| zero_svd(m, n)).collect(),
        }
    }

    /// `Ŵ⁽ᶠ⁾(i, j+m) − Ŵ⁽ᶠ⁾(i+p, j+m+p) = −2 e^{c_f} [U sinh Σ V†](i, j)`.
    fn block_difference(&self, f: usize, i: usize, j: usize) -> C64 {
        let svd = &self.svds[f];
        let c = self.log_scale[f];
        let mut acc = C64::new(0.0, 0.0);
        for (l, &s) in svd.sigma.iter().enumerate() {
            let w = (c + s).exp() - (c - s).exp();
            acc += svd.u[(i, l)] * svd.v[(j, l)].conj() * w;
        }
        -acc
    }

    pub(crate) fn predict(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.d;
        let mut total = 0.0;
        for f in 0..=d / 2 {
            let z = self.block_difference(f, i, j) * twiddle(f, k, d);
            total += if is_self_conjugate(f, d) {
                z.re
            } else {
                2.0 * z.re
            };
        }
        total / d as f64
    }

    /// `ln Tr(Ŵ⁽ᶠ⁾)`, finite even when the trace itself overflows.
    fn log_face_trace(&self, f: usize) -> f64 {
        let c = self.log_scale[f];
        let sigma = &self.svds[f].sigma;
        let rest = (self.m != self.n).then(|| c + (self.m.abs_diff(self.n) as f64).ln());
        let terms = sigma.iter().flat_map(|&s| [c + s, c - s]).chain(rest);
        2f64.ln() + log_sum_exp(&terms.collect::<Vec<_>>())
    }

    fn half(&self, f: usize) -> usize {
        f.min(self.d - f)
    }

    pub(crate) fn face_traces(&self) -> Vec<f64> {
        self.log_face_traces().into_iter().map(f64::exp).collect()
    }

    fn log_face_traces(&self) -> Vec<f64> {
        (0..self.d)
            .map(|f| self.log_face_trace(self.half(f)))
            .collect()
    }

    /// Largest diagonal entry of each face.
    pub(crate) fn max_diagonals(&self) -> Vec<f64> {
        (0..self.d)
            .map(|f| {
                let f = self.half(f);
                let svd = &self.svds[f];
                let c = self.log_scale[f];
                let base = c.exp();
                // e^c (cosh σ − 1), expanded so a large σ cannot overflow
                let weights: Vec<f64> = svd
                    .sigma
                    .iter()
                    .map(|&s| ((c + s).exp() + (c - s).exp()) / 2.0 - base)
                    .collect();
                let row_max = |q: &DMatrix<C64>| {
                    (0..q.nrows())
                        .map(|r| {
                            base + weights
                                .iter()
                                .enumerate()
                                .map(|(l, w)| w * q[(r, l)].norm_sqr())
                                .sum::<f64>()
                        })
                        .fold(0.0, f64::max)
                };
                row_max(&svd.u).max(row_max(&svd.v))
            })
            .collect()
    }

    /// Adds `step = η·g` at `(i, j, k)`, refreshes the SVDs and applies the
    /// trace projection.
    pub(crate) fn apply(
        &mut self,
        i: usize,
        j: usize,
        k: usize,
        step: f64,
        tau: &[f64],
        mode: ProjectionMode,
    ) -> Result<()> {
        self.acc.set(i, j, k, self.acc.get(i, j, k) + step);
        let gamma = fft3(&self.acc);
        for f in 0..=self.d / 2 {
            self.svds[f] = face_svd(gamma.face(f), is_self_conjugate(f, self.d))?;
        }
        let logs = self.log_face_traces();
        let shifts = log_projection_shifts(&logs, tau, mode);
        for f in 0..=self.d / 2 {
            self.log_scale[f] += shifts[f];
        }
        Ok(())
    }

    /// Predictions for every entry.
    pub(crate) fn render(&self) -> Result<DenseTensor3> {
        let faces = (0..self.d)
            .map(|f| {
                let h = self.half(f);
                let face = DMatrix::from_fn(self.m, self.n, |i, j| self.block_difference(h, i, j));
                if h == f {
                    face
                } else {
                    face.map(|z| z.conj())
                }
            })
            .collect();
        ifft3(&FourierTensor3::from_faces(faces)?)
    }

    /// The full `2p×2p×d` state.
    pub(crate) fn materialize(&self) -> Result<PdFourierTensor> {
        let (m, n) = (self.m, self.n);
        let p = m + n;
        let faces = (0..self.d)
            .map(|f| {
                let h = self.half(f);
                let svd = &self.svds[h];
                let c = self.log_scale[h];
                let r = svd.sigma.len();
                let base = c.exp();
                let cosh_m1 = DMatrix::from_fn(r, r, |a, b| {
                    if a == b {
                        let s = svd.sigma[a];
                        C64::new(((c + s).exp() + (c - s).exp()) / 2.0 - base, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                let sinh = DMatrix::from_fn(r, r, |a, b| {
                    if a == b {
                        let s = svd.sigma[a];
                        C64::new(((c + s).exp() - (c - s).exp()) / 2.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                let tl = &svd.u * &cosh_m1 * svd.u.adjoint()
                    + DMatrix::<C64>::identity(m, m).map(|z| z * base);
                let br = &svd.v * &cosh_m1 * svd.v.adjoint()
                    + DMatrix::<C64>::identity(n, n).map(|z| z * base);
                let tr = &svd.u * &sinh * svd.v.adjoint();
                let mut face = DMatrix::<C64>::zeros(2 * p, 2 * p);
                for (offset, sign) in [(0, -1.0), (p, 1.0)] {
                    face.view_mut((offset, offset), (m, m)).copy_from(&tl);
                    face.view_mut((offset + m, offset + m), (n, n))
                        .copy_from(&br);
                    face.view_mut((offset, offset + m), (m, n))
                        .copy_from(&tr.map(|z| z * sign));
                    face.view_mut((offset + m, offset), (n, m))
                        .copy_from(&tr.adjoint().map(|z| z * sign));
                }
                if h == f {
                    face
                } else {
                    face.map(|z| z.conj())
                }
            })
            .collect();
        Ok(PdFourierTensor::new_unchecked(
            FourierTensor3::from_faces(faces)?,
            Definiteness::Strict,
        ))
    }
}
