use log::{debug, warn};

use super::factored::FactoredState;
use super::{
    check_index, loss_gradient_tensor, prediction_operator, Backend, Lipschitz, OtegConfig,
};
use crate::error::{Error, Result};
use crate::game::{play_game, Index3, Loss, OnlineLearner, PlayRecord};
use crate::spectral::PdFourierTensor;
use crate::teg::{beta_excess, teg_step, ConstraintSet, SpectralPolicy, TegState};
use crate::tensor::{DenseTensor3, Dims};

/// Counters for the constraints that are monitored rather than enforced.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OtegStats {
    /// Steps with `η‖L̂‖ > 1` that were let through.
    pub spectral_warnings: usize,
    /// Steps after which some diagonal entry exceeded `β(k)`.
    pub beta_violations: usize,
    /// Predictions outside `[-1, 1]` before any truncation.
    pub box_violations: usize,
}

enum State {
    Factored(FactoredState),
    Dense(TegState),
}

pub struct Oteg {
    config: OtegConfig,
    constraints: ConstraintSet,
    state: State,
    lipschitz: f64,
    eta: f64,
    steps: usize,
    stats: OtegStats,
}

impl Oteg {
    /// Starts from faces `(τ(k)/N)·I`.
    pub fn new(config: OtegConfig) -> Result<Self> {
        config.validate()?;
        let constraints = config.constraints()?;
        let lipschitz = config.initial_lipschitz();
        let eta = config.eta(lipschitz);
        let state = match config.backend {
            Backend::Factored => State::Factored(FactoredState::new(
                config.m,
                config.n,
                config.d,
                &config.tau,
            )),
            Backend::Dense => State::Dense(TegState::initial(config.big_n(), &config.tau, eta)?),
        };
        Ok(Oteg {
            config,
            constraints,
            state,
            lipschitz,
            eta,
            steps: 0,
            stats: OtegStats::default(),
        })
    }

    pub fn config(&self) -> &OtegConfig {
        &self.config
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Current Lipschitz estimate `G`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn stats(&self) -> OtegStats {
        self.stats
    }

    fn raw_prediction(&self, i: usize, j: usize, k: usize) -> Result<f64> {
        check_index(i, j, k, self.config.dims())?;
        match &self.state {
            State::Factored(s) => Ok(s.predict(i, j, k)),
            State::Dense(s) => prediction_operator(&s.w, self.config.m, i, j, k),
        }
    }

    pub fn predict(&mut self, i: usize, j: usize, k: usize) -> Result<f64> {
        let p = self.raw_prediction(i, j, k)?;
        if self.constraints.prediction_box && p.abs() > 1.0 {
            self.stats.box_violations += 1;
        }
        Ok(if self.config.truncate {
            p.clamp(-1.0, 1.0)
        } else {
            p
        })
    }

    /// One step with subderivative `g` at `(i, j, k)`.
    pub fn update(&mut self, i: usize, j: usize, k: usize, g: f64) -> Result<()> {
        check_index(i, j, k, self.config.dims())?;
        if !g.is_finite() {
            return Err(Error::NonFinite { index: self.steps });
        }
        if let Lipschitz::Adaptive { .. } = self.config.lipschitz {
            if g.abs() > self.lipschitz {
                self.lipschitz = g.abs();
                self.eta = self.config.eta(self.lipschitz);
            }
        }
        match &mut self.state {
            State::Factored(s) => {
                // ‖blkdiag(L̂)‖ = |g| for the four-tube gradient
                let value = self.eta * g.abs();
                if value > 1.0 + 1e-12 {
                    match self.constraints.spectral_policy {
                        SpectralPolicy::Enforce => {
                            return Err(Error::SpectralNormViolation { value })
                        }
                        SpectralPolicy::Warn => {
                            self.stats.spectral_warnings += 1;
                            debug!("step {}: η‖L̂‖ = {value:.4} exceeds 1", self.steps);
                        }
                    }
                }
                if g != 0.0 {
                    s.apply(
                        i,
                        j,
                        k,
                        self.eta * g,
                        &self.constraints.tau,
                        self.constraints.projection,
                    )?;
                }
                let excess = s
                    .max_diagonals()
                    .iter()
                    .zip(&self.constraints.beta)
                    .any(|(x, b)| x > b);
                if excess {
                    self.stats.beta_violations += 1;
                }
            }
            State::Dense(s) => {
                let lhat = loss_gradient_tensor(g, i, j, k, self.config.dims())?;
                s.eta = self.eta;
                let value = self.eta * g.abs();
                if value > 1.0 + 1e-12 && self.constraints.spectral_policy == SpectralPolicy::Warn {
                    self.stats.spectral_warnings += 1;
                }
                *s = teg_step(s, &lhat, &self.constraints)?;
                if beta_excess(&s.w, &self.constraints.beta) > 0.0 {
                    self.stats.beta_violations += 1;
                }
            }
        }
        self.steps += 1;
        Ok(())
    }

    /// The current `2p×2p×d` state `Ŵ`.
    pub fn fourier_state(&self) -> Result<PdFourierTensor> {
        match &self.state {
            State::Factored(s) => s.materialize(),
            State::Dense(s) => Ok(s.w.clone()),
        }
    }

    pub fn face_traces(&self) -> Vec<f64> {
        match &self.state {
            State::Factored(s) => s.face_traces(),
            State::Dense(s) => s.w.face_traces(),
        }
    }

    /// Predictions for every entry, without truncation.
    pub fn render(&self) -> Result<DenseTensor3> {
        match &self.state {
            State::Factored(s) => s.render(),
            State::Dense(_) => {
                let Dims { n1, n2, n3 } = self.config.dims();
                let mut out = DenseTensor3::zeros(n1, n2, n3);
                for k in 0..n3 {
                    for i in 0..n1 {
                        for j in 0..n2 {
                            out.set(i, j, k, self.raw_prediction(i, j, k)?);
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

impl OnlineLearner for Oteg {
    fn predict(&mut self, i: usize, j: usize, k: usize) -> Result<f64> {
        Oteg::predict(self, i, j, k)
    }

    fn update(&mut self, i: usize, j: usize, k: usize, g: f64, _y: f64) -> Result<()> {
        Oteg::update(self, i, j, k, g)
    }
}

/// Runs a full game and returns the per-round records.
pub fn oteg_run(
    config: OtegConfig,
    plays: &[Index3],
    truth: &DenseTensor3,
    loss: &dyn Loss,
) -> Result<Vec<PlayRecord>> {
    if truth.dims() != config.dims() {
        return Err(Error::DimensionMismatch(format!(
            "truth {} for learner {}",
            truth.dims(),
            config.dims()
        )));
    }
    let mut learner = Oteg::new(config)?;
    let records = play_game(&mut learner, plays, truth, loss)?;
    let stats = learner.stats();
    if stats.spectral_warnings > 0 {
        warn!(
            "{} of {} steps ran with η‖L̂‖ > 1",
            stats.spectral_warnings,
            records.len()
        );
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::SquaredLoss;
    use crate::teg::ProjectionMode;

    struct ZeroLoss;

    impl Loss for ZeroLoss {
        fn value(&self, _: f64, _: f64) -> f64 {
            0.0
        }
        fn derivative(&self, _: f64, _: f64) -> f64 {
            0.0
        }
    }

    fn truth(m: usize, n: usize, d: usize) -> DenseTensor3 {
        DenseTensor3::from_fn(m, n, d, |i, j, k| {
            (((i * 7 + j * 5 + k * 3) % 9) as f64 - 4.0) / 5.0
        })
    }

    fn plays(m: usize, n: usize, d: usize, count: usize) -> Vec<Index3> {
        (0..count)
            .map(|t| ((t * 7) % m, (t * 3 + t / 5) % n, (t * 5 + t / 3) % d))
            .collect()
    }

    fn symmetric_tau(d: usize) -> Vec<f64> {
        (0..d).map(|k| 4.0 + (k.min(d - k)) as f64).collect()
    }

    #[test]
    fn zero_loss_keeps_initial_state() {
        let cfg = OtegConfig::new(3, 2, 4, symmetric_tau(4), vec![1.0; 4], 20);
        let mut o = Oteg::new(cfg.clone()).unwrap();
        let before = o.fourier_state().unwrap();
        let recs = play_game(&mut o, &plays(3, 2, 4, 20), &truth(3, 2, 4), &ZeroLoss).unwrap();
        assert_eq!(recs.iter().map(|r| r.loss).sum::<f64>(), 0.0);
        assert!(
            o.fourier_state()
                .unwrap()
                .as_fourier()
                .max_abs_diff(before.as_fourier())
                < 1e-15
        );
    }

    #[test]
    fn factored_and_dense_agree() {
        for (m, n, d) in [(3, 2, 4), (2, 3, 3), (2, 2, 1)] {
            for projection in [ProjectionMode::Aggregate, ProjectionMode::PerFace] {
                let mut cfg = OtegConfig::new(m, n, d, symmetric_tau(d), vec![1.0; d], 40);
                cfg.projection = projection;
                cfg.eta_mode = super::super::EtaMode::Experimental;
                let x = truth(m, n, d);
                let ps = plays(m, n, d, 40);
                let a = oteg_run(cfg.clone(), &ps, &x, &SquaredLoss).unwrap();
                cfg.backend = Backend::Dense;
                let b = oteg_run(cfg, &ps, &x, &SquaredLoss).unwrap();
                for (ra, rb) in a.iter().zip(&b) {
                    assert!((ra.p - rb.p).abs() < 1e-10, "{} vs {}", ra.p, rb.p);
                }
            }
        }
    }

    #[test]
    fn materialized_state_matches_dense() {
        let (m, n, d) = (2, 3, 4);
        let mut cfg = OtegConfig::new(m, n, d, symmetric_tau(d), vec![1.0; d], 30);
        cfg.eta_mode = super::super::EtaMode::Experimental;
        let x = truth(m, n, d);
        let ps = plays(m, n, d, 30);
        let mut a = Oteg::new(cfg.clone()).unwrap();
        play_game(&mut a, &ps, &x, &SquaredLoss).unwrap();
        cfg.backend = Backend::Dense;
        let mut b = Oteg::new(cfg).unwrap();
        play_game(&mut b, &ps, &x, &SquaredLoss).unwrap();
        let (wa, wb) = (a.fourier_state().unwrap(), b.fourier_state().unwrap());
        assert!(wa.as_fourier().max_abs_diff(wb.as_fourier()) < 1e-10);
        assert!(a.render().unwrap().max_abs_diff(&b.render().unwrap()) < 1e-10);
        for (ta, tb) in a.face_traces().iter().zip(b.face_traces()) {
            assert!((ta - tb).abs() < 1e-10);
        }
    }

    #[test]
    fn single_entry_converges_to_target() {
        let (m, n, d) = (2, 2, 2);
        let mut x = DenseTensor3::zeros(m, n, d);
        x.set(1, 0, 1, 0.6);
        let cfg = OtegConfig::new(m, n, d, vec![8.0; 2], vec![1.0; 2], 500);
        let recs = oteg_run(cfg, &vec![(1, 0, 1); 500], &x, &SquaredLoss).unwrap();
        let first = (recs[0].y - recs[0].p).abs();
        let last = (recs[499].y - recs[499].p).abs();
        assert!(last < first / 10.0, "{first} -> {last}");
    }

    #[test]
    fn adaptive_lipschitz_tracks_largest_gradient() {
        let cfg = OtegConfig::new(2, 2, 2, vec![4.0; 2], vec![1.0; 2], 10);
        let mut o = Oteg::new(cfg.clone()).unwrap();
        o.update(0, 0, 0, -0.5).unwrap();
        assert_eq!(o.lipschitz(), 0.5);
        assert!((o.eta() - cfg.eta(0.5)).abs() < 1e-15);
        o.update(0, 1, 0, 0.25).unwrap();
        assert_eq!(o.lipschitz(), 0.5);
        assert!(o.update(2, 0, 0, 0.1).is_err());
    }

    #[test]
    fn truncation_clamps_predictions() {
        let mut cfg = OtegConfig::new(1, 1, 1, vec![50.0], vec![1.0], 10);
        cfg.eta_mode = super::super::EtaMode::Multiplier(50.0);
        cfg.truncate = true;
        let mut o = Oteg::new(cfg).unwrap();
        for _ in 0..5 {
            o.update(0, 0, 0, -2.0).unwrap();
        }
        assert_eq!(o.predict(0, 0, 0).unwrap(), 1.0);
        assert!(o.stats().box_violations > 0);
        assert!(o.stats().spectral_warnings > 0);
    }

    #[test]
    fn enforce_policy_raises() {
        let mut cfg = OtegConfig::new(1, 1, 1, vec![1.0], vec![1.0], 10);
        cfg.lipschitz = Lipschitz::Fixed(0.01);
        cfg.spectral_policy = Some(SpectralPolicy::Enforce);
        let mut o = Oteg::new(cfg).unwrap();
        assert!(matches!(
            o.update(0, 0, 0, 2.0),
            Err(Error::SpectralNormViolation { .. })
        ));
    }
}
