//! The invariant suite: numerical checks of the algebra, the spectral
//! calculus, the learners and the harness against independent oracles.
//!
//! Every check takes an [`Effort`]; `Full` uses the sample counts and sizes
//! the acceptance suite pins, `Quick` a reduced version for interactive use.

use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{svt_faces, Forel, Omeg};
use crate::error::{Error, Result};
use crate::game::{play_game, Index3, PlayRecord, SquaredLoss};
use crate::harness::{emit_outputs, run_experiment, DatasetSource, PlayBudget, RunConfig};
use crate::linalg::{hermitian_spectral_norm, C64};
use crate::oteg::{
    loss_gradient_tensor, prediction_operator, Backend, Lipschitz, Oteg, OtegConfig,
};
use crate::rng;
use crate::spectral::functions::face_log;

use crate::spectral::{
    complex_gradient_check, embed_phi, pn_decompose, tensor_exp, tensor_log,
    von_neumann_divergence, von_neumann_entropy, Definiteness, PdFourierTensor, Perturbation,
};
use crate::teg::{blkdiag_spectral_norm, ProjectionMode};
use crate::tensor::{
    fft3, identity_tensor, ifft3, inner_product, t_product, t_svd, t_transpose, tensor_trace,
    DenseTensor3, Dims, FourierTensor3,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Effort {
    Quick,
    Full,
}

impl Effort {
    fn pick(self, quick: usize, full: usize) -> usize {
        match self {
            Effort::Quick => quick,
            Effort::Full => full,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {} ({:.2?})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed
        )
    }
}

fn timed(id: usize, name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Check {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

fn uniform(r: &mut ChaCha8Rng, n1: usize, n2: usize, n3: usize) -> DenseTensor3 {
    DenseTensor3::from_fn(n1, n2, n3, |_, _, _| r.random_range(-1.0..=1.0))
}

/// `‖a − b‖_F / max(‖b‖_F, 1)`.
fn rel(a: &DenseTensor3, b: &DenseTensor3) -> f64 {
    diff_norm(a, b) / b.frobenius_norm().max(1.0)
}

fn diff_norm(a: &DenseTensor3, b: &DenseTensor3) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `C(:,:,k) = Σ_l A(:,:,l) B(:,:,(k−l) mod n3)`.
fn circular_product(a: &DenseTensor3, b: &DenseTensor3) -> DenseTensor3 {
    let (da, db) = (a.dims(), b.dims());
    let n3 = da.n3;
    let mut out = DenseTensor3::zeros(da.n1, db.n2, n3);
    for k in 0..n3 {
        let mut face = DMatrix::<f64>::zeros(da.n1, db.n2);
        for l in 0..n3 {
            face += a.face(l) * b.face((n3 + k - l) % n3);
        }
        for i in 0..da.n1 {
            for j in 0..db.n2 {
                out.set(i, j, k, face[(i, j)]);
            }
        }
    }
    out
}

/// Criterion 1: the FFT t-product against the circular-convolution
/// definition, and t-SVD reconstruction and orthogonality.
pub fn algebra(effort: Effort, seed: u64) -> Check {
    timed(1, "t-product and t-SVD oracles", || {
        let mut r = rng::stream(seed, "verify/algebra");
        let count = effort.pick(20, 100);
        let (mut prod, mut recon, mut orth) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..count {
            let (n1, n2, n3) = (
                r.random_range(1..=5),
                r.random_range(1..=5),
                r.random_range(1..=6),
            );
            let n4 = r.random_range(1..=5);
            let a = uniform(&mut r, n1, n2, n3);
            let b = uniform(&mut r, n2, n4, n3);
            let direct = circular_product(&a, &b);
            prod = prod.max(rel(&t_product(&a, &b)?, &direct));

            let f = t_svd(&a)?;
            let back = t_product(&t_product(&f.u, &f.s)?, &t_transpose(&f.v))?;
            recon = recon.max(rel(&back, &a));
            for (q, n) in [(&f.u, n1), (&f.v, n2)] {
                let gram = t_product(&t_transpose(q), q)?;
                orth = orth.max(gram.max_abs_diff(&identity_tensor(n, n3)));
            }
        }
        let tol = 1e-8;
        Ok((
            prod <= tol && recon <= tol && orth <= tol,
            format!(
                "{count} tensors; product rel err {prod:.2e}, reconstruction {recon:.2e}, orthogonality {orth:.2e}"
            ),
        ))
    })
}

/// Random t-symmetric positive-definite `n×n×d` tensor `A⋆Aᵀ + s·I`.
fn random_pd(r: &mut ChaCha8Rng, n: usize, d: usize, shift: f64) -> Result<DenseTensor3> {
    let a = uniform(r, n, n, d);
    let g = t_product(&a, &t_transpose(&a))?;
    let id = identity_tensor(n, d);
    DenseTensor3::from_vec(
        g.dims(),
        g.data()
            .iter()
            .zip(id.data())
            .map(|(x, y)| x + shift * y)
            .collect(),
    )
}

fn random_symmetric(r: &mut ChaCha8Rng, n: usize, d: usize) -> Result<DenseTensor3> {
    let a = uniform(r, n, n, d);
    let at = t_transpose(&a);
    DenseTensor3::from_vec(
        a.dims(),
        a.data()
            .iter()
            .zip(at.data())
            .map(|(x, y)| 0.5 * (x + y))
            .collect(),
    )
}

fn pd_fourier(x: &DenseTensor3) -> Result<PdFourierTensor> {
    PdFourierTensor::new(fft3(x), Definiteness::Strict)
}

fn max_face_norm(x: &DenseTensor3) -> Result<f64> {
    fft3(x)
        .faces()
        .iter()
        .map(hermitian_spectral_norm)
        .try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

/// Criterion 2: exp/log round trips, the power series, and the sign of
/// the von Neumann divergence.
pub fn spectral(effort: Effort, seed: u64) -> Check {
    timed(2, "spectral calculus", || {
        let mut r = rng::stream(seed, "verify/spectral");
        let count = effort.pick(40, 200);
        let (mut round, mut series, mut min_div, mut self_div) =
            (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
        for _ in 0..count {
            let (n, d) = (r.random_range(1..=5), r.random_range(1..=5));
            let x = random_symmetric(&mut r, n, d)?;
            round = round.max(rel(&tensor_log(&tensor_exp(&x)?)?, &x));
            let w = random_pd(&mut r, n, d, 0.5)?;
            round = round.max(rel(&tensor_exp(&tensor_log(&w)?)?, &w));

            // Σ X⋆ᵏ/k! with the spectral norm of every face at most 0.5
            let norm = max_face_norm(&x)?;
            let xs = if norm > 0.5 {
                x.map(|v| v * 0.5 / norm)
            } else {
                x.clone()
            };
            let mut term = identity_tensor(n, d);
            let mut sum = term.clone();
            for k in 1..=30 {
                term = t_product(&term, &xs)?.map(|v| v / k as f64);
                sum = DenseTensor3::from_vec(
                    sum.dims(),
                    sum.data()
                        .iter()
                        .zip(term.data())
                        .map(|(a, b)| a + b)
                        .collect(),
                )?;
            }
            series = series.max(tensor_exp(&xs)?.max_abs_diff(&sum));

            let v = random_pd(&mut r, n, d, 0.1)?;
            let (pw, pv) = (pd_fourier(&w)?, pd_fourier(&v)?);
            min_div = min_div.min(von_neumann_divergence(&pv, &pw)?);
            self_div = self_div.max(von_neumann_divergence(&pw, &pw)?.abs());
        }
        Ok((
            round <= 1e-8 && series <= 1e-6 && min_div >= -1e-8 && self_div <= 1e-8,
            format!(
                "{count} samples; round trip {round:.2e}, power series {series:.2e}, min divergence {min_div:.3e}, divergence at equality {self_div:.2e}"
            ),
        ))
    })
}

/// Criterion 3: finite differences against the adjoint-transformed
/// Fourier gradients of the entropy, trace and inner-product functionals.
pub fn gradients(effort: Effort, seed: u64) -> Check {
    timed(3, "Fourier gradient identities", || {
        let mut r = rng::stream(seed, "verify/gradients");
        let count = effort.pick(5, 20);
        let step = 1e-6;
        let mut worst = [0.0f64; 3];
        for _ in 0..count {
            let (n, d) = (r.random_range(2..=4), r.random_range(1..=4));
            let w = random_pd(&mut r, n, d, 1.0)?;
            let wh = pd_fourier(&w)?;
            let logs = wh
                .as_fourier()
                .faces()
                .iter()
                .enumerate()
                .map(|(k, f)| face_log(k, f))
                .collect::<Result<Vec<_>>>()?;
            let entropy = |y: &DenseTensor3| von_neumann_entropy(&pd_fourier(y)?);
            worst[0] = worst[0].max(complex_gradient_check(
                entropy,
                &FourierTensor3::from_faces(logs)?,
                &w,
                step,
                Perturbation::TSymmetric,
            )?);

            let ones = FourierTensor3::from_faces(vec![DMatrix::<C64>::identity(n, n); d])?;
            worst[1] = worst[1].max(complex_gradient_check(
                tensor_trace,
                &ones,
                &w,
                step,
                Perturbation::TSymmetric,
            )?);

            let y = uniform(&mut r, n, n, d);
            worst[2] = worst[2].max(complex_gradient_check(
                |x| inner_product(x, &y),
                &fft3(&y),
                &w,
                step,
                Perturbation::Entrywise,
            )?);
        }
        Ok((
            worst.iter().all(|&v| v <= 1e-5),
            format!(
                "{count} points; entropy {:.2e}, trace {:.2e}, inner product {:.2e}",
                worst[0], worst[1], worst[2]
            ),
        ))
    })
}

/// `Σ_f Tr(Ŵ⁽ᶠ⁾ L̂⁽ᶠ⁾)`.
fn trace_form(w: &PdFourierTensor, lhat: &FourierTensor3) -> f64 {
    w.as_fourier()
        .faces()
        .iter()
        .zip(lhat.faces())
        .map(|(a, b)| (a * b).trace().re)
        .sum()
}

/// Criterion 4: the embedding is read back exactly by the prediction
/// operator, and the linear-loss identity holds.
pub fn embedding(effort: Effort, seed: u64) -> Check {
    timed(4, "embedding exactness", || {
        let mut r = rng::stream(seed, "verify/embedding");
        let count = effort.pick(5, 20);
        let (m, n, d) = (6, 7, 4);
        let (mut read, mut form) = (0.0f64, 0.0f64);
        for _ in 0..count {
            let a = uniform(&mut r, m, n, d);
            let w = embed_phi(&a)?;
            for k in 0..d {
                for i in 0..m {
                    for j in 0..n {
                        let p = prediction_operator(&w, m, i, j, k)?;
                        read = read.max((p - a.get(i, j, k)).abs());
                    }
                }
            }
            for _ in 0..10 {
                let (i, j, k) = (
                    r.random_range(0..m),
                    r.random_range(0..n),
                    r.random_range(0..d),
                );
                let g = r.random_range(-2.0..=2.0);
                let lhat = loss_gradient_tensor(g, i, j, k, Dims::new(m, n, d))?;
                let lhs = trace_form(&w, &lhat) / d as f64;
                form = form.max((lhs - 2.0 * g * a.get(i, j, k)).abs());
            }
        }
        Ok((
            read <= 1e-8 && form <= 1e-8,
            format!("{count} tensors; read-back {read:.2e}, (1/d) trace form vs 2g·p {form:.2e}"),
        ))
    })
}

/// One randomized game for the bound check.
struct BoundGame {
    config: OtegConfig,
    truth: DenseTensor3,
    plays: Vec<Index3>,
}

/// The eigen-split witnesses of `truth`, with every `β(k)` raised to at
/// least `1/d` so that `‖β‖₁ ≥ 1`. A larger `β` is still a witness.
fn witness_budget(truth: &DenseTensor3) -> Result<(Vec<f64>, Vec<f64>)> {
    let pn = pn_decompose(truth)?;
    let floor = 1.0 / truth.dims().n3 as f64;
    Ok((pn.tau, pn.beta.iter().map(|b| b.max(floor)).collect()))
}

fn bound_game(r: &mut ChaCha8Rng, projection: ProjectionMode, g: f64) -> Result<BoundGame> {
    let (m, n, d) = (
        r.random_range(1..=8),
        r.random_range(1..=8),
        r.random_range(1..=4),
    );
    let horizon = r.random_range(50..=2000);
    let truth = uniform(r, m, n, d);
    let (tau, beta) = witness_budget(&truth)?;
    let mut config = OtegConfig::new(m, n, d, tau, beta, horizon);
    config.lipschitz = Lipschitz::Fixed(g);
    config.projection = projection;
    let plays = (0..horizon)
        .map(|_| {
            (
                r.random_range(0..m),
                r.random_range(0..n),
                r.random_range(0..d),
            )
        })
        .collect();
    Ok(BoundGame {
        config,
        truth,
        plays,
    })
}

/// Outcome of the bound and γ checks on a batch of randomized games.
#[derive(Clone, Debug, Default)]
pub struct BoundReport {
    pub games: usize,
    pub violations: usize,
    pub errors: Vec<String>,
    /// Largest regret / bound ratio.
    pub worst_ratio: f64,
    pub gamma_deviation: f64,
    pub max_lhat_norm: f64,
    pub steps: usize,
}

/// Runs the randomized games of criteria 5 and 6.
pub fn bound_games(effort: Effort, seed: u64, projection: ProjectionMode) -> BoundReport {
    let g = 4.0;
    let mut r = rng::stream(seed, "verify/bound");
    let mut rep = BoundReport::default();
    for game in 0..effort.pick(10, 50) {
        rep.games += 1;
        let result = bound_game(&mut r, projection, g).and_then(|b| {
            let bound = b.config.regret_bound(g);
            let dims = b.config.dims();
            let recs = play_game(&mut Oteg::new(b.config)?, &b.plays, &b.truth, &SquaredLoss)?;
            Ok((bound, dims, recs))
        });
        let (bound, dims, recs) = match result {
            Ok(v) => v,
            Err(e) => {
                rep.violations += 1;
                rep.errors.push(format!("game {game}: {e}"));
                continue;
            }
        };
        let regret: f64 = recs.iter().map(|x| x.loss).sum();
        rep.worst_ratio = rep.worst_ratio.max(regret / bound);
        if regret > bound {
            rep.violations += 1;
        }
        for rec in &recs {
            rep.steps += 1;
            match gamma_step(rec, dims) {
                Ok((dev, norm)) => {
                    rep.gamma_deviation = rep.gamma_deviation.max(dev);
                    rep.max_lhat_norm = rep.max_lhat_norm.max(norm);
                }
                Err(e) => rep.errors.push(format!("game {game} step {}: {e}", rec.t)),
            }
        }
    }
    rep
}

/// `max_f |Tr(L̂_f²) − 4g²|` and `‖blkdiag L̂‖` for one step.
fn gamma_step(rec: &PlayRecord, dims: Dims) -> Result<(f64, f64)> {
    let lhat = loss_gradient_tensor(rec.g, rec.i, rec.j, rec.k, dims)?;
    let dev = lhat
        .faces()
        .iter()
        .map(|f| ((f * f).trace().re - 4.0 * rec.g * rec.g).abs())
        .fold(0.0, f64::max);
    Ok((dev, blkdiag_spectral_norm(&lhat)?))
}

/// Criterion 5: measured regret against the bound.
pub fn regret_bound_check(report: &BoundReport) -> Check {
    let start = Instant::now();
    let mut detail = format!(
        "{} games, {} violations, worst regret/bound {:.3}",
        report.games, report.violations, report.worst_ratio
    );
    if let Some(e) = report.errors.first() {
        detail.push_str(&format!("; first error: {e}"));
    }
    Check {
        id: 5,
        name: "regret bound",
        passed: report.violations == 0,
        detail,
        elapsed: start.elapsed(),
    }
}

/// Criterion 6: `Tr(L̂²) = 4g²` and `‖blkdiag L̂‖ ≤ 2G` on every step.
pub fn gamma_check(report: &BoundReport) -> Check {
    let g = 4.0;
    Check {
        id: 6,
        name: "gamma and spectral-norm constraints",
        passed: report.gamma_deviation <= 1e-10 * (1.0 + 4.0 * g * g)
            && report.max_lhat_norm <= 2.0 * g + 1e-8
            && report.steps > 0,
        detail: format!(
            "{} steps; max |Tr(L²) − 4g²| {:.2e}, max ‖blkdiag L‖ {:.4} (limit {})",
            report.steps,
            report.gamma_deviation,
            report.max_lhat_norm,
            2.0 * g
        ),
        elapsed: Duration::ZERO,
    }
}

/// Criterion 7: OTEG at depth 1 against the matrix learner and the dense
/// backend.
pub fn depth_one(effort: Effort, seed: u64) -> Check {
    timed(7, "depth-one reduction", || {
        let mut r = rng::stream(seed, "verify/depth-one");
        let steps = 500;
        let mut worst = 0.0f64;
        let mut dense_worst = 0.0f64;
        for _ in 0..effort.pick(1, 3) {
            let (m, n) = (r.random_range(2..=7), r.random_range(2..=7));
            let truth = uniform(&mut r, m, n, 1);
            let (tau, beta) = witness_budget(&truth)?;
            let tau: Vec<f64> = tau.iter().map(|t| t + 1.0).collect();
            let plays: Vec<Index3> = (0..steps)
                .map(|_| (r.random_range(0..m), r.random_range(0..n), 0))
                .collect();
            let cfg = OtegConfig::new(m, n, 1, tau, beta, steps);
            let a = play_game(&mut Oteg::new(cfg.clone())?, &plays, &truth, &SquaredLoss)?;
            let b = play_game(&mut Omeg::new(cfg.clone())?, &plays, &truth, &SquaredLoss)?;
            let mut dense = cfg;
            dense.backend = Backend::Dense;
            let c = play_game(&mut Oteg::new(dense)?, &plays, &truth, &SquaredLoss)?;
            for ((x, y), z) in a.iter().zip(&b).zip(&c) {
                worst = worst.max((x.p - y.p).abs());
                dense_worst = dense_worst.max((x.p - z.p).abs());
            }
        }
        Ok((
            worst <= 1e-10 && dense_worst <= 1e-10,
            format!(
                "{steps} steps; vs matrix learner {worst:.2e}, vs dense backend {dense_worst:.2e}"
            ),
        ))
    })
}

/// Per-dataset summary of the desk-scale comparison.
#[derive(Clone, Debug)]
pub struct OrderingSummary {
    pub dataset: &'static str,
    pub seeds: usize,
    pub oteg_first: f64,
    pub oteg_last: f64,
    pub slicewise_last: f64,
    pub omeg_last: f64,
    pub forel_last: f64,
}

impl OrderingSummary {
    pub fn reduction(&self) -> f64 {
        1.0 - self.oteg_last / self.oteg_first
    }

    pub fn checks(&self) -> [bool; 3] {
        [
            self.oteg_last <= 0.5 * self.oteg_first,
            self.oteg_last < self.slicewise_last,
            self.oteg_last < self.omeg_last,
        ]
    }
}

/// Desk-scale runs on datasets A and B, averaged over `seeds` seeds.
pub fn desk_ordering(seeds: usize, base_seed: u64) -> Result<Vec<OrderingSummary>> {
    let tail = 5;
    let mut out = Vec::new();
    for (name, source) in [("A", DatasetSource::A), ("B", DatasetSource::B)] {
        let mut s = OrderingSummary {
            dataset: name,
            seeds,
            oteg_first: 0.0,
            oteg_last: 0.0,
            slicewise_last: 0.0,
            omeg_last: 0.0,
            forel_last: 0.0,
        };
        for offset in 0..seeds {
            let cfg = RunConfig {
                dataset: source.clone(),
                seed: base_seed + offset as u64,
                ..RunConfig::default()
            };
            let e = run_experiment(&cfg)?;
            let get = |id: &str| {
                e.trace(id)
                    .ok_or_else(|| Error::Config(format!("missing trace {id}")))
            };
            let oteg = get("oteg")?;
            let w = 1.0 / seeds as f64;
            s.oteg_first += w * oteg.rounds[0];
            s.oteg_last += w * oteg.tail_mean(tail);
            s.slicewise_last += w * get("slicewise")?.tail_mean(tail);
            s.forel_last += w * get("forel")?.tail_mean(tail);
            s.omeg_last += w * e
                .best_omeg(tail)
                .ok_or_else(|| Error::Config("no OMEG trace".into()))?
                .tail_mean(tail);
        }
        out.push(s);
    }
    Ok(out)
}

/// Criterion 8: OTEG improves on itself and on the matrix baselines.
pub fn ordering(effort: Effort, seed: u64) -> Check {
    timed(8, "desk-scale ordering", || {
        let summaries = desk_ordering(effort.pick(1, 5), seed)?;
        let mut passed = true;
        let mut parts = Vec::new();
        for s in &summaries {
            let [a, b, c] = s.checks();
            passed &= a && b && c;
            parts.push(format!(
                "{}: OTEG {:.4} -> {:.4} ({:.0}% drop{}), slicewise {:.4}{}, best OMEG {:.4}{}, FoReL {:.4}",
                s.dataset,
                s.oteg_first,
                s.oteg_last,
                100.0 * s.reduction(),
                if a { "" } else { " < 50%" },
                s.slicewise_last,
                if b { "" } else { " (not beaten)" },
                s.omeg_last,
                if c { "" } else { " (not beaten)" },
                s.forel_last
            ));
        }
        Ok((passed, parts.join("; ")))
    })
}

/// `θ`-shrinkage of every Fourier face via nalgebra's own SVD.
fn svt_oracle(x: &DenseTensor3, theta: f64) -> Result<DenseTensor3> {
    let faces = fft3(x)
        .faces()
        .iter()
        .map(|f| {
            let svd = f.clone().svd(true, true);
            let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v"));
            let s = DMatrix::from_diagonal(
                &svd.singular_values
                    .map(|v| C64::new((v - theta).max(0.0), 0.0)),
            );
            u * s * vt
        })
        .collect();
    ifft3(&FourierTensor3::from_faces(faces)?)
}

/// Criterion 9: singular value thresholding and monotone inner iterations.
pub fn forel_machinery(effort: Effort, seed: u64) -> Check {
    timed(9, "FoReL machinery", || {
        let mut r = rng::stream(seed, "verify/forel");
        let count = effort.pick(10, 50);
        let mut svt = 0.0f64;
        for _ in 0..count {
            let (n1, n2, n3) = (
                r.random_range(1..=5),
                r.random_range(1..=5),
                r.random_range(1..=6),
            );
            let x = uniform(&mut r, n1, n2, n3);
            let theta = r.random_range(0.0..=2.0);
            svt = svt.max(svt_faces(&x, theta)?.max_abs_diff(&svt_oracle(&x, theta)?));
        }
        let dims = Dims::new(5, 4, 3);
        let truth = uniform(&mut r, dims.n1, dims.n2, dims.n3);
        let mut learner = Forel::new(dims, r.random_range(0.05..=1.0), 5)?;
        let mut increases = 0;
        let mut worst = 0.0f64;
        for _ in 0..count {
            let (i, j, k) = (
                r.random_range(0..dims.n1),
                r.random_range(0..dims.n2),
                r.random_range(0..dims.n3),
            );
            let values = learner.observe(i, j, k, truth.get(i, j, k))?;
            for w in values.windows(2) {
                let rise = w[1] - w[0];
                worst = worst.max(rise);
                if rise > 1e-12 * (1.0 + w[0].abs()) {
                    increases += 1;
                }
            }
        }
        Ok((
            svt <= 1e-8 && increases == 0,
            format!(
                "{count} shrinkages, max deviation {svt:.2e}; {count} updates, {increases} objective increases (largest rise {worst:.2e})"
            ),
        ))
    })
}

fn scratch_dir(tag: &str) -> PathBuf {
    std::env::temp_dir().join(format!("oteg-verify-{}-{tag}", std::process::id()))
}

fn csv_bytes(dir: &PathBuf) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "csv") {
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            files.push((
                path.file_name().unwrap().to_string_lossy().into_owned(),
                bytes,
            ));
        }
    }
    files.sort();
    Ok(files)
}

/// Criterion 10: two runs of one configuration write identical CSVs.
pub fn determinism(effort: Effort, seed: u64) -> Check {
    timed(10, "determinism", || {
        let mut cfg = RunConfig {
            seed,
            ..RunConfig::default()
        };
        if effort == Effort::Quick {
            cfg.users = 16;
            cfg.movies = 10;
            cfg.epochs = 4;
            cfg.plays = PlayBudget::Count(120);
            cfg.rounds = 12;
        }
        let mut listings = Vec::new();
        for tag in ["a", "b"] {
            let dir = scratch_dir(tag);
            let e = run_experiment(&cfg)?;
            emit_outputs(&e.traces, &dir)?;
            listings.push(csv_bytes(&dir)?);
            let _ = fs::remove_dir_all(&dir);
        }
        let same = listings[0] == listings[1] && !listings[0].is_empty();
        Ok((same, format!("{} CSV files compared", listings[0].len())))
    })
}

/// Every check in order.
pub fn run_all(effort: Effort, seed: u64) -> Vec<Check> {
    run_all_selected(effort, seed, &(1..=10).collect::<Vec<_>>())
}

/// The checks whose ids appear in `ids`, in id order.
pub fn run_all_selected(effort: Effort, seed: u64, ids: &[usize]) -> Vec<Check> {
    let want = |id| ids.contains(&id);
    let mut out = Vec::new();
    let simple: [(usize, fn(Effort, u64) -> Check); 4] =
        [(1, algebra), (2, spectral), (3, gradients), (4, embedding)];
    for (id, f) in simple {
        if want(id) {
            out.push(f(effort, seed));
        }
    }
    if want(5) || want(6) {
        let start = Instant::now();
        let report = bound_games(effort, seed, ProjectionMode::Aggregate);
        let mut bound = regret_bound_check(&report);
        bound.elapsed = start.elapsed();
        if want(5) {
            out.push(bound);
        }
        if want(6) {
            out.push(gamma_check(&report));
        }
    }
    let rest: [(usize, fn(Effort, u64) -> Check); 4] = [
        (7, depth_one),
        (8, ordering),
        (9, forel_machinery),
        (10, determinism),
    ];
    for (id, f) in rest {
        if want(id) {
            out.push(f(effort, seed));
        }
    }
    out
}
