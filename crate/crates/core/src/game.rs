//! The online prediction game: each round the learner predicts one entry,
//! the adversary reveals a loss, the learner updates.

use crate::error::{Error, Result};
use crate::tensor::DenseTensor3;

pub type Index3 = (usize, usize, usize);

pub trait Loss: Sync {
    fn value(&self, p: f64, y: f64) -> f64;
    /// A subderivative with respect to the prediction.
    fn derivative(&self, p: f64, y: f64) -> f64;
}

/// `(y − p)²`, subderivative `2(p − y)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SquaredLoss;

impl Loss for SquaredLoss {
    fn value(&self, p: f64, y: f64) -> f64 {
        (y - p) * (y - p)
    }

    fn derivative(&self, p: f64, y: f64) -> f64 {
        2.0 * (p - y)
    }
}

/// One round of the game.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlayRecord {
    /// 1-based round number.
    pub t: usize,
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub y: f64,
    pub p: f64,
    pub g: f64,
    pub loss: f64,
}

pub trait OnlineLearner {
    fn predict(&mut self, i: usize, j: usize, k: usize) -> Result<f64>;
    /// Called after the loss is revealed with its subderivative `g` at the
    /// prediction and the revealed target `y`.
    fn update(&mut self, i: usize, j: usize, k: usize, g: f64, y: f64) -> Result<()>;
}

/// Plays `plays` in order against targets taken from `truth`.
pub fn play_game<L: OnlineLearner + ?Sized>(
    learner: &mut L,
    plays: &[Index3],
    truth: &DenseTensor3,
    loss: &dyn Loss,
) -> Result<Vec<PlayRecord>> {
    let dims = truth.dims();
    let mut records = Vec::with_capacity(plays.len());
    for (t, &(i, j, k)) in plays.iter().enumerate() {
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
        let y = truth.get(i, j, k);
        let p = learner.predict(i, j, k)?;
        if !p.is_finite() {
            return Err(Error::NonFinite { index: t });
        }
        let g = loss.derivative(p, y);
        let value = loss.value(p, y);
        learner.update(i, j, k, g, y)?;
        records.push(PlayRecord {
            t: t + 1,
            i,
            j,
            k,
            y,
            p,
            g,
            loss: value,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant(f64);

    impl OnlineLearner for Constant {
        fn predict(&mut self, _: usize, _: usize, _: usize) -> Result<f64> {
            Ok(self.0)
        }
        fn update(&mut self, _: usize, _: usize, _: usize, _: f64, _: f64) -> Result<()> {
            Ok(())
        }
    }

    #[test]
    fn squared_loss_values() {
        assert_eq!(SquaredLoss.value(0.5, -0.5), 1.0);
        assert_eq!(SquaredLoss.derivative(0.5, -0.5), 2.0);
    }

    #[test]
    fn game_records_every_round() {
        let truth = DenseTensor3::from_fn(2, 2, 2, |i, j, k| (i + j + k) as f64 * 0.25);
        let plays = [(0, 0, 0), (1, 1, 1), (0, 1, 0)];
        let recs = play_game(&mut Constant(0.0), &plays, &truth, &SquaredLoss).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[1].t, 2);
        assert_eq!(recs[1].y, 0.75);
        assert_eq!(recs[1].loss, 0.5625);
        assert!(play_game(&mut Constant(0.0), &[(2, 0, 0)], &truth, &SquaredLoss).is_err());
    }
}
