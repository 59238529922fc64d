//! Independent matrix learners, one per frontal slice.

use crate::error::{Error, Result};
use crate::game::{play_game, Index3, Loss, OnlineLearner, PlayRecord};
use crate::tensor::DenseTensor3;

pub struct Slicewise {
    learners: Vec<Box<dyn OnlineLearner + Send>>,
}

impl Slicewise {
    /// `learners[k]` sees the plays on slice `k` as a depth-1 game.
    pub fn new(learners: Vec<Box<dyn OnlineLearner + Send>>) -> Self {
        Slicewise { learners }
    }

    pub fn depth(&self) -> usize {
        self.learners.len()
    }

    fn learner(&mut self, k: usize) -> Result<&mut Box<dyn OnlineLearner + Send>> {
        let d = self.learners.len();
        self.learners.get_mut(k).ok_or(Error::IndexOutOfRange {
            i: 0,
            j: 0,
            k,
            m: 0,
            n: 0,
            d,
        })
    }
}

impl OnlineLearner for Slicewise {
    fn predict(&mut self, i: usize, j: usize, k: usize) -> Result<f64> {
        self.learner(k)?.predict(i, j, 0)
    }

    fn update(&mut self, i: usize, j: usize, k: usize, g: f64, y: f64) -> Result<()> {
        self.learner(k)?.update(i, j, 0, g, y)
    }
}

pub fn slicewise_run(
    truth: &DenseTensor3,
    learners: Vec<Box<dyn OnlineLearner + Send>>,
    plays: &[Index3],
    loss: &dyn Loss,
) -> Result<Vec<PlayRecord>> {
    if learners.len() != truth.dims().n3 {
        return Err(Error::DimensionMismatch(format!(
            "{} slice learners for depth {}",
            learners.len(),
            truth.dims().n3
        )));
    }
    play_game(&mut Slicewise::new(learners), plays, truth, loss)
}

/// Number of plays landing on each slice.
pub fn plays_per_slice(plays: &[Index3], depth: usize) -> Vec<usize> {
    let mut counts = vec![0; depth];
    for &(_, _, k) in plays {
        if k < depth {
            counts[k] += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::Omeg;
    use crate::game::SquaredLoss;
    use crate::oteg::OtegConfig;

    fn omeg(m: usize, n: usize, horizon: usize) -> Box<dyn OnlineLearner + Send> {
        Box::new(Omeg::new(OtegConfig::new(m, n, 1, vec![6.0], vec![2.0], horizon)).unwrap())
    }

    #[test]
    fn depth_one_is_the_single_learner() {
        let x = DenseTensor3::from_fn(3, 2, 1, |i, j, _| (i as f64 - j as f64) / 3.0);
        let plays: Vec<Index3> = (0..12).map(|t| (t % 3, (t / 3) % 2, 0)).collect();
        let a = slicewise_run(&x, vec![omeg(3, 2, 12)], &plays, &SquaredLoss).unwrap();
        let mut single = omeg(3, 2, 12);
        let b = play_game(single.as_mut(), &plays, &x, &SquaredLoss).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tube_constant_tensor_gives_identical_slices() {
        let x = DenseTensor3::from_fn(2, 3, 3, |i, j, _| (i * 3 + j) as f64 / 6.0 - 0.4);
        let base: Vec<(usize, usize)> = (0..10).map(|t| (t % 2, (t * 2) % 3)).collect();
        let mut plays = Vec::new();
        for &(i, j) in &base {
            for k in 0..3 {
                plays.push((i, j, k));
            }
        }
        let learners = (0..3).map(|_| omeg(2, 3, 10)).collect();
        let recs = slicewise_run(&x, learners, &plays, &SquaredLoss).unwrap();
        for chunk in recs.chunks(3) {
            assert_eq!(chunk[0].p, chunk[1].p);
            assert_eq!(chunk[1].p, chunk[2].p);
        }
        assert_eq!(plays_per_slice(&plays, 3), vec![10; 3]);
    }

    #[test]
    fn learner_count_must_match_depth() {
        let x = DenseTensor3::zeros(2, 2, 2);
        assert!(slicewise_run(&x, vec![omeg(2, 2, 1)], &[], &SquaredLoss).is_err());
    }
}
