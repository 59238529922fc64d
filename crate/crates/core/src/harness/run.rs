use std::thread;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use super::config::{Algorithm, DatasetSource, RunConfig, SliceLearner};
use super::report::{moving_average, round_average};
use crate::baselines::{
    forel_learning_rate, omeg_run, plays_per_slice, slicewise_run, Forel, Mode, Omeg,
};
use crate::datagen::{
    evolve, gen_ws_graph, init_ratings, to_game_scale, EvolveOptions, InfluenceGraph, RatingsTensor,
};
use crate::error::{Error, Result};
use crate::game::{play_game, Index3, OnlineLearner, PlayRecord, SquaredLoss};
use crate::oteg::{oteg_run, OtegConfig};
use crate::rng;
use crate::tensor::{io, t_svd, DenseTensor3, Dims};

/// FoReL's radius is this multiple of `‖M‖_F`.
pub const FOREL_RADIUS_FACTOR: f64 = 1.1;

/// `T` distinct cells, uniform without replacement.
pub fn sample_play_sequence(dims: Dims, t: usize, seed: u64) -> Result<Vec<Index3>> {
    let cells = dims.len();
    if t > cells {
        return Err(Error::BudgetExceeded {
            requested: t,
            available: cells,
        });
    }
    let mut rng = rng::stream(seed, rng::PLAYS);
    let mut order: Vec<usize> = (0..cells).collect();
    let (picked, _) = order.partial_shuffle(&mut rng, t);
    let face = dims.face_len();
    Ok(picked
        .iter()
        .map(|&o| (o % face / dims.n2, o % dims.n2, o / face))
        .collect())
}

/// Trace and spectral budgets for a run.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompParams {
    pub tau: Vec<f64>,
    pub beta: Vec<f64>,
}

/// `β(k) = √(m+n)`, `τ(k) = 2‖M̂⁽ᵏ⁾‖_* + U[0, amplitude]`. The noise is drawn
/// once per conjugate pair of faces so that `τ(k) = τ(d−k)`.
pub fn compute_tau_beta<R: Rng>(
    m: &DenseTensor3,
    amplitude: f64,
    rng: &mut R,
) -> Result<DecompParams> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::Config(format!(
            "noise amplitude {amplitude} must be non-negative"
        )));
    }
    let Dims { n1, n2, n3 } = m.dims();
    let sv = t_svd(m)?.singular_values;
    let mut noise = vec![0.0; n3];
    for k in 0..=n3 / 2 {
        let u = if amplitude > 0.0 {
            rng.random_range(0.0..=amplitude)
        } else {
            0.0
        };
        noise[k] = u;
        noise[(n3 - k) % n3] = u;
    }
    let tau = (0..n3)
        .map(|k| 2.0 * sv[k].iter().sum::<f64>() + noise[k])
        .collect();
    Ok(DecompParams {
        tau,
        beta: vec![((n1 + n2) as f64).sqrt(); n3],
    })
}

/// The generated ratings, before conversion to the game scale.
pub struct GeneratedData {
    pub graph: InfluenceGraph,
    pub ratings: RatingsTensor,
}

pub fn generate_dataset(cfg: &RunConfig) -> Result<GeneratedData> {
    let freeze = match cfg.dataset {
        DatasetSource::A => false,
        DatasetSource::B => true,
        DatasetSource::File(_) => {
            return Err(Error::Config(
                "file datasets are loaded, not generated".into(),
            ))
        }
    };
    let graph = gen_ws_graph(cfg.users, cfg.k_ring, cfg.p_rewire, cfg.seed)?;
    let m0 = init_ratings(cfg.users, cfg.movies, cfg.rank, cfg.seed)?;
    let options = EvolveOptions {
        a_mode: cfg.a_mode,
        freeze,
        ..EvolveOptions::default()
    };
    let ratings = evolve(&m0, &graph, cfg.epochs, cfg.seed, options)?;
    Ok(GeneratedData { graph, ratings })
}

/// Game-scale truth tensor for a run.
pub fn load_truth(cfg: &RunConfig) -> Result<DenseTensor3> {
    match &cfg.dataset {
        DatasetSource::File(path) => {
            let t = io::read_tensor(path)?;
            if let Some(v) = t.data().iter().find(|v| v.abs() > 1.0) {
                return Err(Error::ScaleMismatch(if v.is_finite() {
                    "tensor entries must lie in [-1, 1]"
                } else {
                    "tensor entries must be finite"
                }));
            }
            Ok(t)
        }
        _ => to_game_scale(&generate_dataset(cfg)?.ratings),
    }
}

/// The outcome of one algorithm on one run.
#[derive(Clone, Debug)]
pub struct ExperimentTrace {
    pub algorithm: String,
    /// Run settings followed by the algorithm's derived parameters.
    pub config: Vec<(String, String)>,
    pub records: Vec<PlayRecord>,
    pub rounds: Vec<f64>,
    /// Trailing moving average of the per-step loss, when requested.
    pub moving: Option<Vec<f64>>,
    pub cumulative_loss: f64,
    /// Against the truth tensor, whose own loss is 0.
    pub regret: f64,
    pub wall_time: Duration,
}

impl ExperimentTrace {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    /// Mean of the last `count` round averages.
    pub fn tail_mean(&self, count: usize) -> f64 {
        let n = self.rounds.len().min(count).max(1);
        self.rounds[self.rounds.len().saturating_sub(n)..]
            .iter()
            .sum::<f64>()
            / n as f64
    }
}

pub struct Experiment {
    pub truth: DenseTensor3,
    pub plays: Vec<Index3>,
    pub traces: Vec<ExperimentTrace>,
}

impl Experiment {
    pub fn trace(&self, algorithm: &str) -> Option<&ExperimentTrace> {
        self.traces.iter().find(|t| t.algorithm == algorithm)
    }

    /// The OMEG unfolding with the lowest mean over the last `tail` rounds.
    pub fn best_omeg(&self, tail: usize) -> Option<&ExperimentTrace> {
        self.traces
            .iter()
            .filter(|t| t.algorithm.starts_with("omeg"))
            .min_by(|a, b| a.tail_mean(tail).total_cmp(&b.tail_mean(tail)))
    }
}

type Params = Vec<(String, String)>;

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn oteg_config(cfg: &RunConfig, dims: Dims, dp: DecompParams, horizon: usize) -> OtegConfig {
    let mut c = OtegConfig::new(dims.n1, dims.n2, dims.n3, dp.tau, dp.beta, horizon.max(1));
    c.eta_mode = cfg.eta_mode;
    c.projection = cfg.projection;
    c.truncate = cfg.truncate;
    c
}

/// The OTEG configuration a run uses for `truth` over `horizon` plays.
pub fn oteg_setup(cfg: &RunConfig, truth: &DenseTensor3, horizon: usize) -> Result<OtegConfig> {
    let mut r = rng::stream(cfg.seed, &rng::tau_noise("oteg"));
    let dp = compute_tau_beta(truth, cfg.tau_noise, &mut r)?;
    Ok(oteg_config(cfg, truth.dims(), dp, horizon))
}

fn run_oteg(
    cfg: &RunConfig,
    truth: &DenseTensor3,
    plays: &[Index3],
) -> Result<(Vec<PlayRecord>, Params)> {
    let c = oteg_setup(cfg, truth, plays.len())?;
    let params = vec![
        ("tau".to_string(), fmt_list(&c.tau)),
        ("beta".to_string(), fmt_list(&c.beta)),
    ];
    Ok((oteg_run(c, plays, truth, &SquaredLoss)?, params))
}

fn run_omeg(
    cfg: &RunConfig,
    truth: &DenseTensor3,
    plays: &[Index3],
    mode: Mode,
) -> Result<(Vec<PlayRecord>, Params)> {
    let (rows, cols) = mode.shape(truth.dims());
    let flat = crate::baselines::flatten_mode(truth, mode);
    let matrix = DenseTensor3::from_faces(&[flat])?;
    let mut r = rng::stream(cfg.seed, &rng::tau_noise(&Algorithm::Omeg(mode).id()));
    let dp = compute_tau_beta(&matrix, cfg.tau_noise, &mut r)?;
    let c = oteg_config(cfg, Dims::new(rows, cols, 1), dp, plays.len());
    let params = vec![
        ("tau".to_string(), fmt_list(&c.tau)),
        ("beta".to_string(), fmt_list(&c.beta)),
    ];
    Ok((omeg_run(truth, mode, c, plays, &SquaredLoss)?, params))
}

fn run_forel(
    cfg: &RunConfig,
    truth: &DenseTensor3,
    plays: &[Index3],
) -> Result<(Vec<PlayRecord>, Params)> {
    let b = FOREL_RADIUS_FACTOR * truth.frobenius_norm();
    let eta = forel_learning_rate(b, cfg.forel_g, plays.len().max(1) as f64);
    let mut learner = Forel::new(truth.dims(), eta, cfg.fista_iters)?;
    let params = vec![
        ("eta".to_string(), eta.to_string()),
        ("radius".to_string(), b.to_string()),
    ];
    Ok((play_game(&mut learner, plays, truth, &SquaredLoss)?, params))
}

fn run_slicewise(
    cfg: &RunConfig,
    truth: &DenseTensor3,
    plays: &[Index3],
) -> Result<(Vec<PlayRecord>, Params)> {
    let Dims { n1, n2, n3 } = truth.dims();
    let counts = plays_per_slice(plays, n3);
    let mut r = rng::stream(cfg.seed, &rng::tau_noise("slicewise"));
    let mut learners: Vec<Box<dyn OnlineLearner + Send>> = Vec::with_capacity(n3);
    let mut taus = Vec::with_capacity(n3);
    for (k, &count) in counts.iter().enumerate() {
        let slice = DenseTensor3::from_faces(&[truth.face(k)])?;
        match cfg.slice_learner {
            SliceLearner::Omeg => {
                let dp = compute_tau_beta(&slice, cfg.tau_noise, &mut r)?;
                taus.push(dp.tau[0]);
                let c = oteg_config(cfg, Dims::new(n1, n2, 1), dp, count);
                learners.push(Box::new(Omeg::new(c)?));
            }
            SliceLearner::Forel => {
                let b = FOREL_RADIUS_FACTOR * slice.frobenius_norm();
                let eta = forel_learning_rate(b, cfg.forel_g, count.max(1) as f64);
                taus.push(eta);
                learners.push(Box::new(Forel::new(
                    Dims::new(n1, n2, 1),
                    eta,
                    cfg.fista_iters,
                )?));
            }
        }
    }
    let key = match cfg.slice_learner {
        SliceLearner::Omeg => "tau",
        SliceLearner::Forel => "eta",
    };
    let params = vec![
        (key.to_string(), fmt_list(&taus)),
        (
            "plays_per_slice".to_string(),
            counts
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        ),
    ];
    Ok((slicewise_run(truth, learners, plays, &SquaredLoss)?, params))
}

fn run_one(
    alg: Algorithm,
    cfg: &RunConfig,
    truth: &DenseTensor3,
    plays: &[Index3],
) -> Result<ExperimentTrace> {
    let start = Instant::now();
    let (records, params) = match alg {
        Algorithm::Oteg => run_oteg(cfg, truth, plays)?,
        Algorithm::Forel => run_forel(cfg, truth, plays)?,
        Algorithm::Slicewise => run_slicewise(cfg, truth, plays)?,
        Algorithm::Omeg(mode) => run_omeg(cfg, truth, plays, mode)?,
    };
    let wall_time = start.elapsed();
    let losses: Vec<f64> = records.iter().map(|r| r.loss).collect();
    let rounds = round_average(&losses, cfg.rounds.min(losses.len()))?;
    let moving = (cfg.moving_average > 0).then(|| moving_average(&losses, cfg.moving_average));
    let cumulative_loss: f64 = losses.iter().sum();
    let mut config = cfg.entries();
    let id = alg.id();
    config.extend(params.into_iter().map(|(k, v)| (format!("{id}.{k}"), v)));
    log::info!("{id}: cumulative loss {cumulative_loss:.4} in {wall_time:?}");
    Ok(ExperimentTrace {
        algorithm: id,
        config,
        records,
        rounds,
        moving,
        cumulative_loss,
        regret: cumulative_loss,
        wall_time,
    })
}

/// Runs every selected algorithm on the same play sequence.
pub fn run_experiment(cfg: &RunConfig) -> Result<Experiment> {
    let truth = load_truth(cfg)?;
    let t = cfg.plays.resolve(truth.dims().len());
    let plays = sample_play_sequence(truth.dims(), t, cfg.seed)?;
    if t > 0 && cfg.rounds > t {
        return Err(Error::Config(format!(
            "{} rounds for {t} plays",
            cfg.rounds
        )));
    }
    let traces = if cfg.threads {
        thread::scope(|s| {
            let handles: Vec<_> = cfg
                .algorithms
                .iter()
                .map(|&alg| {
                    let (truth, plays) = (&truth, &plays);
                    s.spawn(move || run_one(alg, cfg, truth, plays))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("algorithm thread panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        cfg.algorithms
            .iter()
            .map(|&alg| run_one(alg, cfg, &truth, &plays))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(Experiment {
        truth,
        plays,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn full_budget_is_a_permutation() {
        let dims = Dims::new(3, 2, 4);
        let p = sample_play_sequence(dims, 24, 5).unwrap();
        let set: HashSet<_> = p.iter().copied().collect();
        assert_eq!(set.len(), 24);
        assert!(p.iter().all(|&(i, j, k)| dims.contains(i, j, k)));
        assert_eq!(p, sample_play_sequence(dims, 24, 5).unwrap());
        assert!(matches!(
            sample_play_sequence(dims, 25, 5),
            Err(Error::BudgetExceeded {
                requested: 25,
                available: 24
            })
        ));
    }

    #[test]
    fn first_index_is_uniform() {
        let dims = Dims::new(2, 2, 2);
        let mut counts = [0usize; 8];
        let trials = 10_000;
        for seed in 0..trials {
            let (i, j, k) = sample_play_sequence(dims, 1, seed as u64).unwrap()[0];
            counts[dims.offset(i, j, k)] += 1;
        }
        let expected = trials as f64 / 8.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 7 degrees of freedom, p = 0.001
        assert!(chi2 < 24.32, "chi2 = {chi2}");
        let sd = (trials as f64 * (1.0 / 8.0) * (7.0 / 8.0)).sqrt();
        assert!(counts
            .iter()
            .all(|&c| (c as f64 - expected).abs() < 3.0 * sd + 1.0));
    }

    #[test]
    fn beta_and_noise_free_tau() {
        let m = DenseTensor3::from_fn(100, 150, 1, |i, j, _| ((i * 7 + j * 3) % 11) as f64 / 11.0);
        let mut r = rng::stream(0, "t");
        let dp = compute_tau_beta(&m, 0.0, &mut r).unwrap();
        assert!((dp.beta[0] - 250f64.sqrt()).abs() < 1e-12);
        let nuc: f64 = m.face(0).singular_values().iter().sum();
        assert!((dp.tau[0] - 2.0 * nuc).abs() < 1e-8 * nuc);

        let z = DenseTensor3::zeros(2, 3, 4);
        let dp = compute_tau_beta(&z, 0.0, &mut r).unwrap();
        assert_eq!(dp.tau, vec![0.0; 4]);
        let c = OtegConfig::new(2, 3, 4, dp.tau, dp.beta, 10);
        assert!(matches!(c.validate(), Err(Error::InvalidBudget(_))));
    }

    #[test]
    fn noise_is_mirrored_and_bounded() {
        let m = DenseTensor3::from_fn(3, 4, 6, |i, j, k| {
            ((i + 2 * j + 3 * k) % 5) as f64 / 5.0 - 0.4
        });
        let mut r = rng::stream(3, "t");
        let base = compute_tau_beta(&m, 0.0, &mut r).unwrap();
        let noisy = compute_tau_beta(&m, 5.0, &mut r).unwrap();
        for k in 0..6 {
            let u = noisy.tau[k] - base.tau[k];
            assert!((-1e-9..=5.0 + 1e-9).contains(&u));
            assert!((noisy.tau[k] - noisy.tau[(6 - k) % 6]).abs() < 1e-12);
        }
        assert!(compute_tau_beta(&m, -1.0, &mut r).is_err());
    }

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.users = 8;
        c.movies = 6;
        c.epochs = 4;
        c.rank = 2;
        c.k_ring = 4;
        c.plays = crate::harness::PlayBudget::Count(60);
        c.rounds = 6;
        c
    }

    #[test]
    fn shared_plays_and_regret_accounting() {
        let e = run_experiment(&small()).unwrap();
        assert_eq!(e.traces.len(), 6);
        for tr in &e.traces {
            assert_eq!(tr.records.len(), 60);
            for (rec, &(i, j, k)) in tr.records.iter().zip(&e.plays) {
                assert_eq!((rec.i, rec.j, rec.k), (i, j, k));
                assert_eq!(rec.y, e.truth.get(i, j, k));
            }
            assert_eq!(tr.regret, tr.cumulative_loss);
            assert_eq!(tr.rounds.len(), 6);
            let total: f64 = tr.rounds.iter().map(|r| r * 10.0).sum();
            assert!((total - tr.cumulative_loss).abs() < 1e-10);
        }
        assert!(e.best_omeg(5).unwrap().algorithm.starts_with("omeg"));
    }

    #[test]
    fn threads_do_not_change_results() {
        let mut c = small();
        let a = run_experiment(&c).unwrap();
        c.threads = false;
        let b = run_experiment(&c).unwrap();
        for (x, y) in a.traces.iter().zip(&b.traces) {
            assert_eq!(x.records, y.records);
        }
    }

    #[test]
    fn oversized_budgets_and_rounds_rejected() {
        let mut c = small();
        c.plays = crate::harness::PlayBudget::Count(8 * 6 * 4 + 1);
        assert!(matches!(
            run_experiment(&c),
            Err(Error::BudgetExceeded { .. })
        ));
        let mut c = small();
        c.rounds = 61;
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn file_dataset_must_be_game_scale() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.t3d");
        io::write_t3d(
            &path,
            &DenseTensor3::from_fn(2, 2, 2, |i, _, _| i as f64 * 3.0),
        )
        .unwrap();
        let mut c = small();
        c.dataset = DatasetSource::File(path);
        assert!(matches!(load_truth(&c), Err(Error::ScaleMismatch(_))));
    }
}
