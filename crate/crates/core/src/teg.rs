//! Tensor exponentiated gradient: mirror descent on PD tensors under the
//! von Neumann divergence, followed by a trace projection.

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_apply, hermitian_eigen, hermitian_spectral_norm, hermitize};
use crate::spectral::{check_hermitian, Definiteness, PdFourierTensor, EIGEN_FLOOR};
use crate::tensor::FourierTensor3;

/// How the trace budget is enforced after each raw update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProjectionMode {
    /// One budget `Σ_k τ(k)` for the whole tensor; all faces share a scale.
    #[default]
    Aggregate,
    /// Face `k` is scaled down to `τ(k)` on its own.
    PerFace,
}

/// What [`teg_step`] does when `η·‖blkdiag(L̂)‖ > 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpectralPolicy {
    #[default]
    Enforce,
    Warn,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    pub tau: Vec<f64>,
    pub beta: Vec<f64>,
    pub projection: ProjectionMode,
    pub spectral_policy: SpectralPolicy,
    /// Count predictions outside `[-1, 1]` (monitoring only).
    pub prediction_box: bool,
}

impl ConstraintSet {
    /// Requires `τ ≻ 0`, `β ≻ 0` and `‖β‖₁ ≥ 1`.
    pub fn new(tau: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if tau.is_empty() || tau.len() != beta.len() {
            return Err(Error::InvalidBudget(format!(
                "tau has {} entries, beta {}",
                tau.len(),
                beta.len()
            )));
        }
        if let Some(k) = tau.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidBudget(format!(
                "tau({k}) = {} is not positive",
                tau[k]
            )));
        }
        if let Some(k) = beta.iter().position(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidBudget(format!(
                "beta({k}) = {} is not positive",
                beta[k]
            )));
        }
        let l1: f64 = beta.iter().sum();
        if l1 < 1.0 {
            return Err(Error::InvalidBudget(format!("‖beta‖₁ = {l1} < 1")));
        }
        Ok(ConstraintSet {
            tau,
            beta,
            projection: ProjectionMode::default(),
            spectral_policy: SpectralPolicy::default(),
            prediction_box: true,
        })
    }

    pub fn with_projection(mut self, mode: ProjectionMode) -> Self {
        self.projection = mode;
        self
    }

    pub fn with_spectral_policy(mut self, policy: SpectralPolicy) -> Self {
        self.spectral_policy = policy;
        self
    }

    pub fn tau_total(&self) -> f64 {
        self.tau.iter().sum()
    }

    pub fn beta_total(&self) -> f64 {
        self.beta.iter().sum()
    }

    pub fn depth(&self) -> usize {
        self.tau.len()
    }
}

#[derive(Clone, Debug)]
pub struct TegState {
    pub w: PdFourierTensor,
    pub eta: f64,
    pub t: usize,
}

impl TegState {
    /// Faces `(τ(k)/N)·I`.
    pub fn initial(size: usize, tau: &[f64], eta: f64) -> Result<Self> {
        let scales: Vec<f64> = tau.iter().map(|t| t / size as f64).collect();
        Ok(TegState {
            w: PdFourierTensor::scaled_identity(size, &scales)?,
            eta,
            t: 0,
        })
    }
}

/// Face-wise `exp(log Ŵ⁽ᵏ⁾ − η L̂⁽ᵏ⁾)`.
pub fn teg_raw_update(
    w: &PdFourierTensor,
    lhat: &FourierTensor3,
    eta: f64,
) -> Result<PdFourierTensor> {
    if w.dims() != lhat.dims() {
        return Err(Error::DimensionMismatch(format!(
            "state {} and loss {}",
            w.dims(),
            lhat.dims()
        )));
    }
    let faces = w
        .as_fourier()
        .faces()
        .iter()
        .zip(lhat.faces())
        .enumerate()
        .map(|(k, (wf, lf))| {
            check_hermitian(k, lf)?;
            let eig = hermitian_eigen(wf.clone())?;
            let min = eig.eigenvalues.min();
            if min < -crate::spectral::NEGATIVE_EIGEN_TOLERANCE * eig.eigenvalues.max().max(1.0) {
                return Err(Error::NotPD {
                    face: k,
                    min_eigenvalue: min,
                });
            }
            let log_w = hermitian_apply(&eig.eigenvectors, &eig.eigenvalues, |l| {
                l.max(EIGEN_FLOOR).ln()
            });
            let arg = hermitize(log_w - lf.map(|z| z * eta));
            let eig = hermitian_eigen(arg)?;
            Ok(hermitian_apply(
                &eig.eigenvectors,
                &eig.eigenvalues,
                f64::exp,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PdFourierTensor::new_unchecked(
        FourierTensor3::from_faces(faces)?,
        Definiteness::Strict,
    ))
}

/// Scale factors that bring the face traces within budget.
pub fn projection_scales(traces: &[f64], tau: &[f64], mode: ProjectionMode) -> Vec<f64> {
    match mode {
        ProjectionMode::Aggregate => {
            let total: f64 = traces.iter().sum();
            let budget: f64 = tau.iter().sum();
            let s = if total > budget { budget / total } else { 1.0 };
            vec![s; traces.len()]
        }
        ProjectionMode::PerFace => traces
            .iter()
            .zip(tau)
            .map(|(&t, &b)| if t > b { b / t } else { 1.0 })
            .collect(),
    }
}

/// `ln` of [`projection_scales`] computed from log traces, for states
/// whose traces overflow before normalization.
pub fn log_projection_shifts(log_traces: &[f64], tau: &[f64], mode: ProjectionMode) -> Vec<f64> {
    match mode {
        ProjectionMode::Aggregate => {
            let total = log_sum_exp(log_traces);
            let budget = tau.iter().sum::<f64>().ln();
            let s = if total > budget { budget - total } else { 0.0 };
            vec![s; log_traces.len()]
        }
        ProjectionMode::PerFace => log_traces
            .iter()
            .zip(tau)
            .map(|(&t, &b)| if t > b.ln() { b.ln() - t } else { 0.0 })
            .collect(),
    }
}

/// `ln Σ eˣ` without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Trace normalization onto `{Tr(blkdiag Ŵ) ≤ Σ τ}` (or per face).
pub fn project_trace(
    w: &PdFourierTensor,
    tau: &[f64],
    mode: ProjectionMode,
) -> Result<PdFourierTensor> {
    if tau.len() != w.depth() {
        return Err(Error::DimensionMismatch(format!(
            "{} budgets for depth {}",
            tau.len(),
            w.depth()
        )));
    }
    let scales = projection_scales(&w.face_traces(), tau, mode);
    if scales.iter().all(|&s| s == 1.0) {
        return Ok(w.clone());
    }
    Ok(w.scale_faces(&scales))
}

/// Largest `‖L̂⁽ᵏ⁾‖₂` over faces, i.e. `‖blkdiag(L̂)‖₂`.
pub fn blkdiag_spectral_norm(lhat: &FourierTensor3) -> Result<f64> {
    lhat.faces()
        .iter()
        .map(hermitian_spectral_norm)
        .try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

/// Largest excess of a diagonal entry of face `k` over `β(k)`; zero when
/// the β constraint holds.
pub fn beta_excess(w: &PdFourierTensor, beta: &[f64]) -> f64 {
    w.as_fourier()
        .faces()
        .iter()
        .zip(beta)
        .map(|(f, &b)| f.diagonal().iter().map(|z| z.re - b).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

pub fn teg_step(
    state: &TegState,
    lhat: &FourierTensor3,
    constraints: &ConstraintSet,
) -> Result<TegState> {
    let value = state.eta * blkdiag_spectral_norm(lhat)?;
    if value > 1.0 + 1e-12 {
        match constraints.spectral_policy {
            SpectralPolicy::Enforce => return Err(Error::SpectralNormViolation { value }),
            SpectralPolicy::Warn => warn!("step {}: η‖L̂‖ = {value:.4} exceeds 1", state.t),
        }
    }
    let raw = teg_raw_update(&state.w, lhat, state.eta)?;
    let w = project_trace(&raw, &constraints.tau, constraints.projection)?;
    let excess = beta_excess(&w, &constraints.beta);
    if excess > 0.0 {
        debug!("step {}: β constraint exceeded by {excess:.3e}", state.t);
    }
    Ok(TegState {
        w,
        eta: state.eta,
        t: state.t + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::von_neumann_divergence;
    use crate::C64;
    use nalgebra::DMatrix;

    fn diag_faces(values: &[Vec<f64>]) -> FourierTensor3 {
        FourierTensor3::from_faces(
            values
                .iter()
                .map(|v| {
                    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                        v.len(),
                        v.iter().map(|&x| C64::new(x, 0.0)),
                    ))
                })
                .collect(),
        )
        .unwrap()
    }

    fn pd(values: &[Vec<f64>]) -> PdFourierTensor {
        PdFourierTensor::new(diag_faces(values), Definiteness::Strict).unwrap()
    }

    #[test]
    fn constraint_set_validation() {
        assert!(ConstraintSet::new(vec![1.0, 2.0], vec![0.5, 0.5]).is_ok());
        assert!(matches!(
            ConstraintSet::new(vec![1.0, 0.0], vec![1.0, 1.0]),
            Err(Error::InvalidBudget(_))
        ));
        assert!(matches!(
            ConstraintSet::new(vec![1.0], vec![0.5]),
            Err(Error::InvalidBudget(_))
        ));
        assert!(ConstraintSet::new(vec![1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn log_shifts_match_scales() {
        let traces = [3.0, 0.5, 9.0];
        let tau = [2.0, 1.0, 4.0];
        for mode in [ProjectionMode::Aggregate, ProjectionMode::PerFace] {
            let logs: Vec<f64> = traces.iter().map(|t: &f64| t.ln()).collect();
            let shifts = log_projection_shifts(&logs, &tau, mode);
            for (s, e) in shifts.iter().zip(projection_scales(&traces, &tau, mode)) {
                assert!((s.exp() - e).abs() < 1e-14);
            }
        }
        let huge = [800.0, 1000.0];
        let shifts = log_projection_shifts(&huge, &[1.0, 1.0], ProjectionMode::Aggregate);
        assert!((shifts[0] - (2f64.ln() - 1000.0)).abs() < 1e-9);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 2]), f64::NEG_INFINITY);
    }

    #[test]
    fn zero_loss_keeps_state() {
        let w = pd(&[vec![0.5, 2.0, 1.0], vec![1.5, 0.1, 3.0]]);
        let out = teg_raw_update(&w, &FourierTensor3::zeros(3, 3, 2), 0.7).unwrap();
        assert!(out.as_fourier().max_abs_diff(w.as_fourier()) < 1e-12);
    }

    #[test]
    fn scalar_loss_on_identity() {
        let (eta, c) = (0.3, 1.7);
        let w = PdFourierTensor::scaled_identity(4, &[1.0; 3]).unwrap();
        let l = diag_faces(&vec![vec![c; 4]; 3]);
        let out = teg_raw_update(&w, &l, eta).unwrap();
        let expected = diag_faces(&vec![vec![(-eta * c).exp(); 4]; 3]);
        assert!(out.as_fourier().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn diagonal_matches_scalar_eg() {
        let wv = vec![vec![0.2, 1.1, 3.0], vec![0.9, 0.4, 2.2]];
        let lv = vec![vec![0.5, -1.0, 0.25], vec![-0.3, 0.8, 0.0]];
        let eta = 0.9;
        let out = teg_raw_update(&pd(&wv), &diag_faces(&lv), eta).unwrap();
        for k in 0..2 {
            for i in 0..3 {
                let expected = wv[k][i] * (-eta * lv[k][i]).exp();
                assert!((out.as_fourier().get(i, i, k).re - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projection_examples() {
        let w = PdFourierTensor::scaled_identity(3, &[2.0, 2.0]).unwrap();
        let same = project_trace(&w, &[10.0, 10.0], ProjectionMode::Aggregate).unwrap();
        assert_eq!(same, w);
        let half = project_trace(&w, &[3.0, 3.0], ProjectionMode::Aggregate).unwrap();
        let ident = PdFourierTensor::scaled_identity(3, &[1.0, 1.0]).unwrap();
        assert!(half.as_fourier().max_abs_diff(ident.as_fourier()) < 1e-14);
        let per = project_trace(&w, &[3.0, 12.0], ProjectionMode::PerFace).unwrap();
        assert_eq!(per.face_traces(), vec![3.0, 6.0]);
    }

    #[test]
    fn projection_minimizes_divergence_among_scalings() {
        let w = pd(&[vec![0.3, 2.5, 1.2], vec![4.0, 0.7, 0.2]]);
        let tau = [2.0, 3.0];
        let p = project_trace(&w, &tau, ProjectionMode::Aggregate).unwrap();
        let chosen = von_neumann_divergence(&p, &w).unwrap();
        assert!((p.total_trace() - 5.0).abs() < 1e-12);
        let total = w.total_trace();
        for step in 1..=200 {
            let s = 5.0 / total * step as f64 / 200.0;
            let cand = w.scale_faces(&[s, s]);
            assert!(von_neumann_divergence(&cand, &w).unwrap() >= chosen - 1e-12);
        }
    }

    #[test]
    fn step_with_zero_loss_only_advances_time() {
        let c = ConstraintSet::new(vec![3.0, 3.0], vec![1.0, 1.0]).unwrap();
        let s = TegState::initial(3, &c.tau, 0.5).unwrap();
        let next = teg_step(&s, &FourierTensor3::zeros(3, 3, 2), &c).unwrap();
        assert_eq!(next.t, 1);
        assert!(next.w.as_fourier().max_abs_diff(s.w.as_fourier()) < 1e-14);
    }

    #[test]
    fn repeated_steps_follow_scalar_eg_with_renormalization() {
        let loss = vec![vec![0.4, -0.2, 0.9, 0.0]];
        let c = ConstraintSet::new(vec![2.0], vec![1.0]).unwrap();
        let eta = 0.8;
        let mut s = TegState::initial(4, &c.tau, eta).unwrap();
        let mut w = vec![0.5; 4];
        for _ in 0..50 {
            s = teg_step(&s, &diag_faces(&loss), &c).unwrap();
            for (wi, li) in w.iter_mut().zip(&loss[0]) {
                *wi *= (-eta * li).exp();
            }
            let total: f64 = w.iter().sum();
            if total > 2.0 {
                w.iter_mut().for_each(|x| *x *= 2.0 / total);
            }
        }
        for (i, wi) in w.iter().enumerate() {
            assert!((s.w.as_fourier().get(i, i, 0).re - wi).abs() < 1e-8);
        }
    }

    #[test]
    fn spectral_norm_violation_and_warn_policy() {
        let c = ConstraintSet::new(vec![2.0], vec![1.0]).unwrap();
        let s = TegState::initial(2, &c.tau, 1.0).unwrap();
        let mut face = DMatrix::<C64>::zeros(2, 2);
        face[(0, 1)] = C64::new(1.5, 0.0);
        face[(1, 0)] = C64::new(1.5, 0.0);
        let l = FourierTensor3::from_faces(vec![face]).unwrap();
        match teg_step(&s, &l, &c) {
            Err(Error::SpectralNormViolation { value }) => assert!((value - 1.5).abs() < 1e-12),
            other => panic!("expected violation, got {other:?}"),
        }
        let lenient = c.with_spectral_policy(SpectralPolicy::Warn);
        assert!(teg_step(&s, &l, &lenient).is_ok());
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let w = PdFourierTensor::scaled_identity(2, &[1.0]).unwrap();
        assert!(teg_raw_update(&w, &FourierTensor3::zeros(3, 3, 1), 1.0).is_err());
        assert!(project_trace(&w, &[1.0, 1.0], ProjectionMode::Aggregate).is_err());
    }
}
