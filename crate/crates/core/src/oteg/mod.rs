//! Online tensor exponentiated gradient.
//!
//! The learner keeps a `2p×2p×d` PD tensor `Ŵ` (p = m + n) in the Fourier
//! domain. The top-left and bottom-right `p×p` blocks of each face are `P̂`
//! and `N̂`; predictions read the `(i, j+m)` entry of `P̂ − N̂` back through
//! one inverse DFT.

mod factored;
mod learner;

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::PdFourierTensor;
use crate::teg::{ConstraintSet, ProjectionMode, SpectralPolicy};
use crate::tensor::{Dims, FourierTensor3, RESIDUE_TOLERANCE};
use crate::C64;

pub use learner::{oteg_run, Oteg, OtegStats};

/// Starting value of the running Lipschitz estimate.
pub const ADAPTIVE_G0: f64 = 1e-6;

/// Learning-rate multiplier used by the experimental mode.
pub const EXPERIMENTAL_ETA_FACTOR: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lipschitz {
    Fixed(f64),
    /// `G` tracks `max |g_t|` seen so far, starting from `initial`.
    Adaptive {
        initial: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaMode {
    Nominal,
    /// Nominal rate times [`EXPERIMENTAL_ETA_FACTOR`].
    Experimental,
    Multiplier(f64),
}

impl EtaMode {
    pub fn factor(self) -> f64 {
        match self {
            EtaMode::Nominal => 1.0,
            EtaMode::Experimental => EXPERIMENTAL_ETA_FACTOR,
            EtaMode::Multiplier(f) => f,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    /// Closed form through the SVD of the accumulated gradients.
    #[default]
    Factored,
    /// Explicit `2p×2p` faces with two eigendecompositions per step.
    Dense,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OtegConfig {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub lipschitz: Lipschitz,
    pub tau: Vec<f64>,
    pub beta: Vec<f64>,
    pub horizon: usize,
    pub eta_mode: EtaMode,
    pub projection: ProjectionMode,
    /// `None` picks `Enforce` for nominal runs above the horizon threshold
    /// and `Warn` otherwise.
    pub spectral_policy: Option<SpectralPolicy>,
    /// Clamp predictions to `[-1, 1]`.
    pub truncate: bool,
    pub backend: Backend,
}

impl OtegConfig {
    pub fn new(
        m: usize,
        n: usize,
        d: usize,
        tau: Vec<f64>,
        beta: Vec<f64>,
        horizon: usize,
    ) -> Self {
        OtegConfig {
            m,
            n,
            d,
            lipschitz: Lipschitz::Adaptive {
                initial: ADAPTIVE_G0,
            },
            tau,
            beta,
            horizon,
            eta_mode: EtaMode::Nominal,
            projection: ProjectionMode::Aggregate,
            spectral_policy: None,
            truncate: false,
            backend: Backend::Factored,
        }
    }

    pub fn p(&self) -> usize {
        self.m + self.n
    }

    /// Face size `N = 2p`.
    pub fn big_n(&self) -> usize {
        2 * self.p()
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.m, self.n, self.d)
    }

    pub fn initial_lipschitz(&self) -> f64 {
        match self.lipschitz {
            Lipschitz::Fixed(g) => g,
            Lipschitz::Adaptive { initial } => initial,
        }
    }

    /// Learning rate for a given `G`, including the mode multiplier.
    pub fn eta(&self, g: f64) -> f64 {
        self.eta_mode.factor()
            * nominal_learning_rate(self.big_n(), &self.tau, &self.beta, g, self.horizon as f64)
    }

    pub fn regret_bound(&self, g: f64) -> f64 {
        regret_bound(self.p(), &self.tau, &self.beta, g, self.horizon as f64)
    }

    pub fn above_threshold(&self) -> bool {
        self.horizon as f64 >= horizon_threshold(self.big_n(), &self.tau, &self.beta)
    }

    pub fn effective_spectral_policy(&self) -> SpectralPolicy {
        self.spectral_policy.unwrap_or(
            if self.eta_mode == EtaMode::Nominal && self.above_threshold() {
                SpectralPolicy::Enforce
            } else {
                SpectralPolicy::Warn
            },
        )
    }

    pub fn constraints(&self) -> Result<ConstraintSet> {
        Ok(ConstraintSet::new(self.tau.clone(), self.beta.clone())?
            .with_projection(self.projection)
            .with_spectral_policy(self.effective_spectral_policy()))
    }

    /// Shape and budget checks. `τ` must satisfy `τ(k) = τ(d−k)`, which
    /// keeps the state conjugate symmetric and the predictions real.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.d == 0 {
            return Err(Error::Config(format!(
                "empty dimensions {}x{}x{}",
                self.m, self.n, self.d
            )));
        }
        if self.tau.len() != self.d {
            return Err(Error::InvalidBudget(format!(
                "{} tau entries for depth {}",
                self.tau.len(),
                self.d
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        let g = self.initial_lipschitz();
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::Config(format!(
                "Lipschitz constant {g} must be positive"
            )));
        }
        let f = self.eta_mode.factor();
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Config(format!(
                "learning-rate multiplier {f} must be positive"
            )));
        }
        for k in 1..self.d {
            let (a, b) = (self.tau[k], self.tau[self.d - k]);
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::InvalidBudget(format!(
                    "tau({k}) = {a} differs from tau({}) = {b}",
                    self.d - k
                )));
            }
        }
        self.constraints().map(|_| ())
    }
}

/// `√(log N · Σ τ / (T · Σ 4G² β))`.
pub fn nominal_learning_rate(big_n: usize, tau: &[f64], beta: &[f64], g: f64, horizon: f64) -> f64 {
    let gamma = 4.0 * g * g;
    let num = (big_n as f64).ln() * tau.iter().sum::<f64>();
    let den = horizon * gamma * beta.iter().sum::<f64>();
    (num / den).sqrt()
}

/// Horizon below which the trivial bound `2GT` is the better one.
pub fn horizon_threshold(big_n: usize, tau: &[f64], beta: &[f64]) -> f64 {
    (big_n as f64).ln() * tau.iter().sum::<f64>() / beta.iter().sum::<f64>()
}

/// `2G √(T log(2p) Σβ Στ)` above the threshold, `2GT` below it.
pub fn regret_bound(p: usize, tau: &[f64], beta: &[f64], g: f64, horizon: f64) -> f64 {
    let big_n = 2 * p;
    if horizon >= horizon_threshold(big_n, tau, beta) {
        let (st, sb) = (tau.iter().sum::<f64>(), beta.iter().sum::<f64>());
        2.0 * g * (horizon * (big_n as f64).ln() * sb * st).sqrt()
    } else {
        2.0 * g * horizon
    }
}

fn check_index(i: usize, j: usize, k: usize, dims: Dims) -> Result<()> {
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
    Ok(())
}

/// `ω^{fk}` with `ω = e^{2πi/d}`.
pub(crate) fn twiddle(f: usize, k: usize, d: usize) -> C64 {
    let angle = 2.0 * PI * ((f * k) % d) as f64 / d as f64;
    C64::new(angle.cos(), angle.sin())
}

/// `[ifft(P̂ − N̂)](i, j+m, k)`, evaluated on one tube.
pub fn prediction_operator(
    w: &PdFourierTensor,
    m: usize,
    i: usize,
    j: usize,
    k: usize,
) -> Result<f64> {
    let size = w.size();
    if size % 2 != 0 || size / 2 <= m {
        return Err(Error::DimensionMismatch(format!(
            "state faces of size {size} cannot hold m = {m}"
        )));
    }
    let p = size / 2;
    let d = w.depth();
    check_index(i, j, k, Dims::new(m, p - m, d))?;
    let faces = w.as_fourier().faces();
    let mut acc = C64::new(0.0, 0.0);
    for (f, face) in faces.iter().enumerate() {
        let diff = face[(i, j + m)] - face[(i + p, j + m + p)];
        acc += diff * twiddle(f, k, d);
    }
    acc /= d as f64;
    let tolerance = RESIDUE_TOLERANCE * (1.0 + acc.re.abs());
    if acc.im.abs() > tolerance {
        return Err(Error::ImaginaryResidue {
            residue: acc.im.abs(),
            tolerance,
        });
    }
    Ok(acc.re)
}

/// Four tubes holding the DFT column `g·F(:,k)`, `F(f,k) = ω^{−fk}`:
/// `+` at `(i, j+m)`, `−` at `(i+p, j+m+p)`, and their conjugate transposes.
pub fn loss_gradient_tensor(
    g: f64,
    i: usize,
    j: usize,
    k: usize,
    dims: Dims,
) -> Result<FourierTensor3> {
    check_index(i, j, k, dims)?;
    let Dims {
        n1: m,
        n2: n,
        n3: d,
    } = dims;
    let p = m + n;
    let faces = (0..d)
        .map(|f| {
            let c = twiddle(f, k, d).conj() * g;
            let mut face = DMatrix::<C64>::zeros(2 * p, 2 * p);
            face[(i, j + m)] = c;
            face[(j + m, i)] = c.conj();
            face[(i + p, j + m + p)] = -c;
            face[(j + m + p, i + p)] = -c.conj();
            face
        })
        .collect();
    FourierTensor3::from_faces(faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{embed_phi, Definiteness};
    use crate::tensor::DenseTensor3;

    #[test]
    fn learning_rate_plug_in() {
        // √(log 4 · 4 / (log 4 · 4 · ¼ · 1)) = 2
        let eta = nominal_learning_rate(4, &[4.0], &[1.0], 0.5, 4f64.ln());
        assert!((eta - 2.0).abs() < 1e-12);
        let e1 = nominal_learning_rate(10, &[3.0, 3.0], &[1.0, 1.0], 1.0, 50.0);
        let e2 = nominal_learning_rate(10, &[3.0, 3.0], &[1.0, 1.0], 1.0, 100.0);
        assert!((e1 / e2 - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn experimental_mode_is_eight_times_nominal() {
        let mut c = OtegConfig::new(2, 3, 2, vec![4.0; 2], vec![1.0; 2], 100);
        let nominal = c.eta(1.0);
        c.eta_mode = EtaMode::Experimental;
        assert!((c.eta(1.0) - 8.0 * nominal).abs() < 1e-12);
        c.eta_mode = EtaMode::Multiplier(3.0);
        assert!((c.eta(1.0) - 3.0 * nominal).abs() < 1e-12);
    }

    #[test]
    fn regret_bound_plug_in() {
        let b = regret_bound(2, &[1.0], &[1.0], 1.0, 100.0);
        assert!((b - 23.548).abs() < 1e-3);
        assert!((b - 2.0 * (100.0 * 4f64.ln()).sqrt()).abs() < 1e-12);
        // threshold is log 4 · 10 ≈ 13.9
        assert_eq!(regret_bound(2, &[10.0], &[1.0], 1.5, 5.0), 15.0);
        let b3 = regret_bound(2, &[1.0], &[1.0], 3.0, 100.0);
        assert!((b3 - 3.0 * b).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let c = OtegConfig::new(2, 3, 4, vec![1.0, 2.0, 3.0, 2.0], vec![1.0; 4], 10);
        assert!(c.validate().is_ok());
        let c = OtegConfig::new(2, 3, 4, vec![1.0, 2.0, 3.0, 2.5], vec![1.0; 4], 10);
        assert!(matches!(c.validate(), Err(Error::InvalidBudget(_))));
        let c = OtegConfig::new(2, 3, 1, vec![1.0], vec![0.5], 10);
        assert!(matches!(c.validate(), Err(Error::InvalidBudget(_))));
        let mut c = OtegConfig::new(2, 3, 1, vec![1.0], vec![1.0], 10);
        c.lipschitz = Lipschitz::Fixed(0.0);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn prediction_reads_embedded_entries() {
        let a = DenseTensor3::from_fn(3, 2, 3, |i, j, k| {
            ((i * 5 + j * 3 + k) % 7) as f64 / 3.5 - 1.0
        });
        let phi = embed_phi(&a).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..2 {
                    let p = prediction_operator(&phi, 3, i, j, k).unwrap();
                    assert!((p - a.get(i, j, k)).abs() < 1e-10);
                }
            }
        }
        assert!(matches!(
            prediction_operator(&phi, 3, 3, 0, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn prediction_of_initial_state_is_zero() {
        let w = PdFourierTensor::scaled_identity(10, &[0.3; 4]).unwrap();
        assert_eq!(prediction_operator(&w, 2, 1, 2, 3).unwrap(), 0.0);
        let z = PdFourierTensor::new(FourierTensor3::zeros(10, 10, 4), Definiteness::Semi).unwrap();
        assert_eq!(prediction_operator(&z, 2, 1, 2, 3).unwrap(), 0.0);
    }

    #[test]
    fn loss_gradient_structure() {
        let dims = Dims::new(3, 2, 5);
        let l = loss_gradient_tensor(0.7, 2, 1, 3, dims).unwrap();
        assert_eq!(l.dims(), Dims::new(10, 10, 5));
        for face in l.faces() {
            assert!(crate::linalg::max_hermitian_deviation(face) == 0.0);
            let tr = (face * face).trace();
            assert!((tr.re - 4.0 * 0.49).abs() < 1e-14 && tr.im.abs() < 1e-14);
            assert_eq!(face.iter().filter(|z| z.norm() > 0.0).count(), 4);
        }
        let zero = loss_gradient_tensor(0.0, 0, 0, 0, dims).unwrap();
        assert!(zero
            .faces()
            .iter()
            .all(|f| f.iter().all(|z| z.norm() == 0.0)));
        assert!(loss_gradient_tensor(1.0, 0, 2, 0, dims).is_err());
    }
}
