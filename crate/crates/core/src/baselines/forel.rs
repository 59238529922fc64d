//! Follow the regularized leader with a tensor-nuclear-norm penalty:
//! `argmin_W ‖𝒫_t(W − M)‖²_F + η Σ_k ‖Ŵ⁽ᵏ⁾‖_*`, warm-started and refined by a
//! few monotone FISTA iterations after every play.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::game::{Index3, OnlineLearner};
use crate::linalg::{is_self_conjugate, C64};
use crate::tensor::{face_svd, fft3, ifft3, DenseTensor3, Dims, FourierTensor3};

/// Lipschitz constant of `∇‖𝒫(W − M)‖²_F = 2𝒫(W − M)`.
pub const FOREL_SMOOTHNESS: f64 = 2.0;

/// Inner iterations per play.
pub const DEFAULT_FISTA_ITERS: usize = 5;

/// Soft-thresholds the singular values of every Fourier face by `threshold`
/// and returns the result with its tensor nuclear norm.
fn svt_with_norm(x: &DenseTensor3, threshold: f64) -> Result<(DenseTensor3, f64)> {
    let d = x.dims().n3;
    let xh = fft3(x);
    let mut faces: Vec<DMatrix<C64>> = xh.faces().to_vec();
    let mut norm = 0.0;
    for f in 0..=d / 2 {
        let svd = face_svd(xh.face(f), is_self_conjugate(f, d))?;
        let shrunk: Vec<f64> = svd.sigma.iter().map(|s| (s - threshold).max(0.0)).collect();
        let mut us = svd.u.clone();
        for (c, s) in shrunk.iter().enumerate() {
            us.column_mut(c).scale_mut(*s);
        }
        let face = us * svd.v.adjoint();
        let face_norm: f64 = shrunk.iter().sum();
        let partner = (d - f) % d;
        if partner != f {
            faces[partner] = face.map(|z| z.conj());
            norm += face_norm;
        }
        faces[f] = face;
        norm += face_norm;
    }
    Ok((ifft3(&FourierTensor3::from_faces(faces)?)?, norm))
}

/// Proximal map of `(threshold/n3)·tnn` under `½‖·‖²_F`; equivalently of
/// `threshold·tnn` under `½ Σ_k ‖X̂⁽ᵏ⁾ − ·‖²_F`.
pub fn svt_faces(x: &DenseTensor3, threshold: f64) -> Result<DenseTensor3> {
    if !(threshold >= 0.0) {
        return Err(Error::Config(format!(
            "threshold {threshold} must be non-negative"
        )));
    }
    Ok(svt_with_norm(x, threshold)?.0)
}

/// `B / (G √T)`.
pub fn forel_learning_rate(b: f64, g: f64, horizon: f64) -> f64 {
    b / (g * horizon.sqrt())
}

#[derive(Clone, Debug)]
pub struct Forel {
    w: DenseTensor3,
    mask: Vec<bool>,
    targets: DenseTensor3,
    observations: Vec<(Index3, f64)>,
    eta: f64,
    iters: usize,
}

impl Forel {
    pub fn new(dims: Dims, eta: f64, iters: usize) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!(
                "FoReL rate {eta} must be non-negative"
            )));
        }
        Ok(Forel {
            w: DenseTensor3::zeros(dims.n1, dims.n2, dims.n3),
            mask: vec![false; dims.len()],
            targets: DenseTensor3::zeros(dims.n1, dims.n2, dims.n3),
            observations: Vec::new(),
            eta,
            iters,
        })
    }

    /// Starts from a given iterate instead of zero.
    pub fn with_start(mut self, w: DenseTensor3) -> Result<Self> {
        if w.dims() != self.w.dims() {
            return Err(Error::DimensionMismatch(format!(
                "start {} for {}",
                w.dims(),
                self.w.dims()
            )));
        }
        self.w = w;
        Ok(self)
    }

    pub fn iterate(&self) -> &DenseTensor3 {
        &self.w
    }

    pub fn observations(&self) -> &[(Index3, f64)] {
        &self.observations
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    fn smooth(&self, w: &DenseTensor3) -> f64 {
        let dims = w.dims();
        self.observations
            .iter()
            .map(|&((i, j, k), _)| {
                let o = dims.offset(i, j, k);
                let r = w.data()[o] - self.targets.data()[o];
                r * r
            })
            .sum()
    }

    /// `‖𝒫_t(W − M)‖²_F + η·tnn(W)` over the current observations.
    pub fn objective(&self, w: &DenseTensor3) -> Result<f64> {
        Ok(self.smooth(w) + self.eta * crate::tensor::tnn(w)?)
    }

    /// `y − ∇f(y)/L`: observed entries move to their targets.
    fn gradient_step(&self, y: &DenseTensor3) -> DenseTensor3 {
        let mut data = y.data().to_vec();
        for (o, v) in data.iter_mut().enumerate() {
            if self.mask[o] {
                *v -= (*v - self.targets.data()[o]) * 2.0 / FOREL_SMOOTHNESS;
            }
        }
        DenseTensor3::from_vec(y.dims(), data).expect("finite")
    }

    /// Records `y` at `(i, j, k)` and runs the inner iterations. Returns the
    /// objective at the warm start followed by the value after each
    /// iteration.
    pub fn observe(&mut self, i: usize, j: usize, k: usize, y: f64) -> Result<Vec<f64>> {
        let dims = self.w.dims();
        if !dims.contains(i, j, k) {
            return Err(Error::IndexOutOfRange {
                i,
                j,
                k,
                m: dims.n1,
                n: dims.n2,
                d: dims.n3,
            });
        }
        let o = dims.offset(i, j, k);
        if self.mask[o] {
            if let Some(entry) = self
                .observations
                .iter_mut()
                .find(|(idx, _)| *idx == (i, j, k))
            {
                entry.1 = y;
            }
        } else {
            self.mask[o] = true;
            self.observations.push(((i, j, k), y));
        }
        self.targets.set(i, j, k, y);
        self.run_fista()
    }

    fn run_fista(&mut self) -> Result<Vec<f64>> {
        let threshold = self.eta * self.w.dims().n3 as f64 / FOREL_SMOOTHNESS;
        let mut x_prev = self.w.clone();
        let mut f_prev = self.objective(&x_prev)?;
        let mut y = x_prev.clone();
        let mut t = 1.0f64;
        let mut values = vec![f_prev];
        for _ in 0..self.iters {
            let (z, z_norm) = svt_with_norm(&self.gradient_step(&y), threshold)?;
            let f_z = self.smooth(&z) + self.eta * z_norm;
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let (x, f_x) = if f_z <= f_prev {
                (z.clone(), f_z)
            } else {
                (x_prev.clone(), f_prev)
            };
            // y = x + (t/t')(z − x) + ((t − 1)/t')(x − x_prev)
            let a = t / t_next;
            let b = (t - 1.0) / t_next;
            let data = x
                .data()
                .iter()
                .zip(z.data())
                .zip(x_prev.data())
                .map(|((&xv, &zv), &pv)| xv + a * (zv - xv) + b * (xv - pv))
                .collect();
            y = DenseTensor3::from_vec(x.dims(), data)?;
            x_prev = x;
            f_prev = f_x;
            t = t_next;
            values.push(f_prev);
        }
        self.w = x_prev;
        Ok(values)
    }
}

impl OnlineLearner for Forel {
    fn predict(&mut self, i: usize, j: usize, k: usize) -> Result<f64> {
        Ok(self.w.get(i, j, k))
    }

    fn update(&mut self, i: usize, j: usize, k: usize, _g: f64, y: f64) -> Result<()> {
        self.observe(i, j, k, y).map(|_| ())
    }
}
