//! Online matrix exponentiated gradient on a mode unfolding.
//!
//! This is the `d = 1` learner written directly in real arithmetic: with
//! `S` the accumulated `η_t g_t` and `S = U Σ Vᵀ`, the state is
//! `e^c · blockdiag(exp(−sym S), exp(sym S))` and predictions are
//! `−2 e^c [U sinh(Σ) Vᵀ](r, c)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::game::{play_game, Index3, Loss, OnlineLearner, PlayRecord};
use crate::linalg::svd_real;
use crate::oteg::{Lipschitz, OtegConfig};
use crate::teg::log_sum_exp;
use crate::tensor::{DenseTensor3, Dims};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    pub fn from_number(n: usize) -> Result<Mode> {
        match n {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            _ => Err(Error::Config(format!("mode must be 1, 2 or 3, got {n}"))),
        }
    }

    pub fn number(self) -> usize {
        match self {
            Mode::One => 1,
            Mode::Two => 2,
            Mode::Three => 3,
        }
    }

    /// Shape of the unfolding of a tensor with dims `d`.
    pub fn shape(self, d: Dims) -> (usize, usize) {
        match self {
            Mode::One => (d.n1, d.n2 * d.n3),
            Mode::Two => (d.n2, d.n1 * d.n3),
            Mode::Three => (d.n3, d.n1 * d.n2),
        }
    }

    /// Position of `(i, j, k)` in the unfolding. Columns run over the two
    /// remaining dimensions in ascending order, the second one fastest.
    pub fn position(self, d: Dims, i: usize, j: usize, k: usize) -> (usize, usize) {
        match self {
            Mode::One => (i, j * d.n3 + k),
            Mode::Two => (j, i * d.n3 + k),
            Mode::Three => (k, i * d.n2 + j),
        }
    }

    fn index(self, d: Dims, row: usize, col: usize) -> Index3 {
        match self {
            Mode::One => (row, col / d.n3, col % d.n3),
            Mode::Two => (col / d.n3, row, col % d.n3),
            Mode::Three => (col / d.n2, col % d.n2, row),
        }
    }
}

pub fn flatten_mode(x: &DenseTensor3, mode: Mode) -> DMatrix<f64> {
    let dims = x.dims();
    let (rows, cols) = mode.shape(dims);
    DMatrix::from_fn(rows, cols, |r, c| {
        let (i, j, k) = mode.index(dims, r, c);
        x.get(i, j, k)
    })
}

/// Inverse of [`flatten_mode`].
pub fn unflatten_mode(m: &DMatrix<f64>, mode: Mode, dims: Dims) -> Result<DenseTensor3> {
    if (m.nrows(), m.ncols()) != mode.shape(dims) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not a mode-{} unfolding of {dims}",
            m.nrows(),
            m.ncols(),
            mode.number()
        )));
    }
    Ok(DenseTensor3::from_fn(
        dims.n1,
        dims.n2,
        dims.n3,
        |i, j, k| {
            let (r, c) = mode.position(dims, i, j, k);
            m[(r, c)]
        },
    ))
}

/// Matrix learner over a `rows × cols` game.
pub struct Omeg {
    config: OtegConfig,
    acc: DMatrix<f64>,
    log_scale: f64,
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    v: DMatrix<f64>,
    lipschitz: f64,
    eta: f64,
}

impl Omeg {
    /// `config` describes the matrix game (`d` must be 1).
    pub fn new(config: OtegConfig) -> Result<Self> {
        if config.d != 1 {
            return Err(Error::Config(format!(
                "matrix learner needs depth 1, got {}",
                config.d
            )));
        }
        config.validate()?;
        let (rows, cols) = (config.m, config.n);
        let lipschitz = config.initial_lipschitz();
        Ok(Omeg {
            acc: DMatrix::zeros(rows, cols),
            log_scale: (config.tau[0] / config.big_n() as f64).ln(),
            u: DMatrix::zeros(rows, 0),
            sigma: Vec::new(),
            v: DMatrix::zeros(cols, 0),
            eta: config.eta(lipschitz),
            lipschitz,
            config,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn predict_entry(&self, r: usize, c: usize) -> f64 {
        let s = self.log_scale;
        let mut total = 0.0;
        for (l, &sv) in self.sigma.iter().enumerate() {
            total += self.u[(r, l)] * self.v[(c, l)] * ((s + sv).exp() - (s - sv).exp());
        }
        let p = -total;
        if self.config.truncate {
            p.clamp(-1.0, 1.0)
        } else {
            p
        }
    }

    /// `Tr(W)` of the `2p×2p` state.
    pub fn trace(&self) -> f64 {
        self.log_trace().exp()
    }

    fn log_trace(&self) -> f64 {
        let s = self.log_scale;
        let (m, n) = (self.config.m, self.config.n);
        let rest = (m != n).then(|| s + (m.abs_diff(n) as f64).ln());
        let terms: Vec<f64> = self
            .sigma
            .iter()
            .flat_map(|&sv| [s + sv, s - sv])
            .chain(rest)
            .collect();
        2f64.ln() + log_sum_exp(&terms)
    }

    pub fn update_entry(&mut self, r: usize, c: usize, g: f64) -> Result<()> {
        if r >= self.config.m || c >= self.config.n {
            return Err(Error::IndexOutOfRange {
                i: r,
                j: c,
                k: 0,
                m: self.config.m,
                n: self.config.n,
                d: 1,
            });
        }
        if let Lipschitz::Adaptive { .. } = self.config.lipschitz {
            if g.abs() > self.lipschitz {
                self.lipschitz = g.abs();
                self.eta = self.config.eta(self.lipschitz);
            }
        }
        if g == 0.0 {
            return Ok(());
        }
        self.acc[(r, c)] += self.eta * g;
        let svd = svd_real(self.acc.clone())?;
        self.u = svd.u.expect("u requested");
        self.v = svd.v_t.expect("v requested").transpose();
        self.sigma = svd.singular_values.iter().copied().collect();
        let budget = self.config.tau[0].ln();
        let log_trace = self.log_trace();
        if log_trace > budget {
            self.log_scale += budget - log_trace;
        }
        Ok(())
    }
}

impl OnlineLearner for Omeg {
    fn predict(&mut self, i: usize, j: usize, _k: usize) -> Result<f64> {
        Ok(self.predict_entry(i, j))
    }

    fn update(&mut self, i: usize, j: usize, _k: usize, g: f64, _y: f64) -> Result<()> {
        self.update_entry(i, j, g)
    }
}

/// Plays a tensor game through a matrix learner on one unfolding.
pub struct Flattened<L> {
    pub mode: Mode,
    pub dims: Dims,
    pub inner: L,
}

impl<L: OnlineLearner> OnlineLearner for Flattened<L> {
    fn predict(&mut self, i: usize, j: usize, k: usize) -> Result<f64> {
        let (r, c) = self.mode.position(self.dims, i, j, k);
        self.inner.predict(r, c, 0)
    }

    fn update(&mut self, i: usize, j: usize, k: usize, g: f64, y: f64) -> Result<()> {
        let (r, c) = self.mode.position(self.dims, i, j, k);
        self.inner.update(r, c, 0, g, y)
    }
}

/// Runs the matrix learner on the mode unfolding of `truth`. `config`
/// describes the unfolded matrix game.
pub fn omeg_run(
    truth: &DenseTensor3,
    mode: Mode,
    config: OtegConfig,
    plays: &[Index3],
    loss: &dyn Loss,
) -> Result<Vec<PlayRecord>> {
    let (rows, cols) = mode.shape(truth.dims());
    if (config.m, config.n) != (rows, cols) {
        return Err(Error::DimensionMismatch(format!(
            "config {}x{} for a {rows}x{cols} unfolding",
            config.m, config.n
        )));
    }
    let mut learner = Flattened {
        mode,
        dims: truth.dims(),
        inner: Omeg::new(config)?,
    };
    play_game(&mut learner, plays, truth, loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_one_of_counting_tensor() {
        let x =
            DenseTensor3::from_vec(Dims::new(2, 2, 2), (1..=8).map(f64::from).collect()).unwrap();
        let m = flatten_mode(&x, Mode::One);
        // X(0,j,k) = 1 + 4k + j; columns ordered (j,k) with k fastest
        assert_eq!(
            m.row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 5.0, 2.0, 6.0]
        );
        assert_eq!(
            m.row(1).iter().copied().collect::<Vec<_>>(),
            vec![3.0, 7.0, 4.0, 8.0]
        );
    }

    #[test]
    fn unfoldings_invert() {
        let x = DenseTensor3::from_fn(3, 4, 2, |i, j, k| (i * 100 + j * 10 + k) as f64);
        for mode in Mode::ALL {
            let m = flatten_mode(&x, mode);
            assert_eq!(unflatten_mode(&m, mode, x.dims()).unwrap(), x);
            let mut a: Vec<f64> = m.iter().copied().collect();
            let mut b = x.data().to_vec();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
        assert!(unflatten_mode(&DMatrix::zeros(2, 2), Mode::One, x.dims()).is_err());
    }

    #[test]
    fn single_face_unfolding() {
        let x = DenseTensor3::from_fn(3, 2, 1, |i, j, _| (i * 2 + j) as f64);
        assert_eq!(flatten_mode(&x, Mode::One), x.face(0));
    }

    #[test]
    fn mode_numbers() {
        for mode in Mode::ALL {
            assert_eq!(Mode::from_number(mode.number()).unwrap(), mode);
        }
        assert!(Mode::from_number(4).is_err());
    }

    #[test]
    fn trace_stays_in_budget() {
        let mut cfg = OtegConfig::new(3, 4, 1, vec![2.0], vec![1.0], 50);
        cfg.eta_mode = crate::oteg::EtaMode::Experimental;
        let mut o = Omeg::new(cfg).unwrap();
        for t in 0..50 {
            let (r, c) = (t % 3, (t * 3) % 4);
            let p = o.predict_entry(r, c);
            o.update_entry(r, c, 2.0 * (p - 0.5)).unwrap();
            assert!(o.trace() <= 2.0 + 1e-9);
        }
        assert!(o.update_entry(3, 0, 1.0).is_err());
    }
}
