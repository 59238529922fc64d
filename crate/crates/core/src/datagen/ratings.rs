use nalgebra::DMatrix;
use rand::Rng;

use super::InfluenceGraph;
use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::DenseTensor3;

/// Ratings at or above `5 − FREEZE_TOLERANCE` count as a 5.
pub const FREEZE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// Ratings in `[1, 5]`.
    Raw,
    /// `(r − 3)/2`, in `[-1, 1]`.
    Game,
}

/// Users × movies × epochs.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingsTensor {
    pub tensor: DenseTensor3,
    pub scale: Scale,
}

pub fn to_game_scale(r: &RatingsTensor) -> Result<DenseTensor3> {
    if r.scale != Scale::Raw {
        return Err(Error::ScaleMismatch("expected raw ratings"));
    }
    Ok(r.tensor.map(|v| (v - 3.0) / 2.0))
}

pub fn from_game_scale(x: &DenseTensor3) -> RatingsTensor {
    RatingsTensor {
        tensor: x.map(|v| 2.0 * v + 3.0),
        scale: Scale::Raw,
    }
}

/// Rank-`r` matrix with entries in `[1, 5]`. The left factor's first column
/// is all ones, so the affine rescale does not raise the rank.
pub fn init_ratings(users: usize, movies: usize, rank: usize, seed: u64) -> Result<DMatrix<f64>> {
    if rank == 0 || rank > users.min(movies) {
        return Err(Error::Config(format!(
            "rank {rank} outside 1..={}",
            users.min(movies)
        )));
    }
    let mut rng = rng::stream(seed, rng::INIT);
    let a = DMatrix::from_fn(
        users,
        rank,
        |_, c| if c == 0 { 1.0 } else { rng.random::<f64>() },
    );
    let b = DMatrix::from_fn(rank, movies, |_, _| rng.random::<f64>());
    let m = a * b;
    let (lo, hi) = (m.min(), m.max());
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        return Ok(DMatrix::from_element(users, movies, 3.0));
    }
    Ok(m.map(|v| (1.0 + 4.0 * (v - lo) / (hi - lo)).clamp(1.0, 5.0)))
}

/// How the neighbor weight `a` is drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AMode {
    /// One `a(s) ~ U[0,1]` per epoch, shared by all users.
    PerEpoch,
    /// An independent `a(u, s)` per user and epoch.
    PerUser,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub a_mode: AMode,
    /// When false the random rating is replaced by the previous rating.
    pub randomness: bool,
    /// Ratings that reach 5 stay at 5.
    pub freeze: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            a_mode: AMode::PerEpoch,
            randomness: true,
            freeze: false,
        }
    }
}

/// `M(u,m,s) = a·mean_{v∈𝒩(u)} M(v,m,s−1) + (1 − a)·(M(u,m,s−1) + rand{1..5})/2`.
pub fn evolve(
    m0: &DMatrix<f64>,
    graph: &InfluenceGraph,
    epochs: usize,
    seed: u64,
    options: EvolveOptions,
) -> Result<RatingsTensor> {
    let (users, movies) = m0.shape();
    if graph.node_count() != users {
        return Err(Error::DimensionMismatch(format!(
            "{} graph nodes for {users} users",
            graph.node_count()
        )));
    }
    if epochs == 0 {
        return Err(Error::Config("at least one epoch is required".into()));
    }
    if let Some(v) = m0.iter().find(|v| !(1.0..=5.0).contains(*v)) {
        return Err(Error::Config(format!("initial rating {v} outside [1, 5]")));
    }
    if let AMode::Fixed(a) = options.a_mode {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Config(format!("a = {a} outside [0, 1]")));
        }
    }
    let mut a_rng = rng::stream(seed, rng::A_DRAWS);
    let mut r_rng = rng::stream(seed, rng::RAND_RATINGS);
    let mut out = DenseTensor3::zeros(users, movies, epochs);
    let mut frozen = vec![false; users * movies];
    for u in 0..users {
        for m in 0..movies {
            out.set(u, m, 0, m0[(u, m)]);
            frozen[u * movies + m] = options.freeze && m0[(u, m)] >= 5.0 - FREEZE_TOLERANCE;
        }
    }
    for s in 1..epochs {
        let a_values: Vec<f64> = match options.a_mode {
            AMode::PerEpoch => vec![a_rng.random::<f64>(); users],
            AMode::PerUser => (0..users).map(|_| a_rng.random::<f64>()).collect(),
            AMode::Fixed(a) => vec![a; users],
        };
        for u in 0..users {
            let nb = graph.neighbors(u);
            let a = a_values[u];
            for m in 0..movies {
                // drawn for every entry so toggling the freeze rule never
                // shifts the stream
                let draw = r_rng.random_range(1..=5) as f64;
                let prev = out.get(u, m, s - 1);
                let idx = u * movies + m;
                if frozen[idx] {
                    out.set(u, m, s, 5.0);
                    continue;
                }
                let neighbor =
                    nb.iter().map(|&v| out.get(v, m, s - 1)).sum::<f64>() / nb.len() as f64;
                let innovation = if options.randomness { draw } else { prev };
                let value = (a * neighbor + (1.0 - a) * (prev + innovation) / 2.0).clamp(1.0, 5.0);
                out.set(u, m, s, value);
                if options.freeze && value >= 5.0 - FREEZE_TOLERANCE {
                    frozen[idx] = true;
                    out.set(u, m, s, 5.0);
                }
            }
        }
    }
    Ok(RatingsTensor {
        tensor: out,
        scale: Scale::Raw,
    })
}

/// Dataset A: neighborhood influence.
pub fn evolve_a(
    m0: &DMatrix<f64>,
    graph: &InfluenceGraph,
    epochs: usize,
    seed: u64,
) -> Result<RatingsTensor> {
    evolve(m0, graph, epochs, seed, EvolveOptions::default())
}

/// Dataset B: as A, but a rating that reaches 5 never changes again.
pub fn evolve_b(
    m0: &DMatrix<f64>,
    graph: &InfluenceGraph,
    epochs: usize,
    seed: u64,
) -> Result<RatingsTensor> {
    evolve(
        m0,
        graph,
        epochs,
        seed,
        EvolveOptions {
            freeze: true,
            ..EvolveOptions::default()
        },
    )
}
