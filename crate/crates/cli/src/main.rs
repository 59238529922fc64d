use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use oteg_core::harness::{
    emit_outputs, generate_dataset, load_truth, oteg_setup, run_experiment, write_dataset,
    RunConfig,
};
use oteg_core::verify::{self, Effort};
use oteg_core::{Error, Result};

/// Environment variable that overrides the output directory.
const OUT_DIR_ENV: &str = "OTEG_OUT_DIR";

#[derive(Parser)]
#[command(name = "oteg", version, about = "Online tensor prediction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ratings dataset and its influence graph.
    Datagen(ConfigArgs),
    /// Run the selected algorithms on one dataset.
    Run(ConfigArgs),
    /// Run the selected algorithms and print them ranked by late-round loss.
    Compare(ConfigArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
    /// Print the regret bound and learning rate for a configuration.
    Bound(BoundArgs),
}

/// Settings are applied in order: defaults, `--config` file,
/// `OTEG_OUT_DIR`, the named flags, then `--set` overrides.
#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Extra `key=value` setting; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// `a`, `b` or `file`.
    #[arg(long)]
    dataset: Option<String>,
    /// T3D tensor to play on, in game scale.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    users: Option<String>,
    #[arg(long)]
    movies: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    rank: Option<String>,
    #[arg(long)]
    k_ring: Option<String>,
    #[arg(long)]
    p_rewire: Option<String>,
    /// `per-epoch`, `per-user` or a fixed weight.
    #[arg(long)]
    a_mode: Option<String>,
    /// Play count (`960`) or fraction of the cube (`0.2`, `20%`).
    #[arg(long)]
    plays: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    /// Comma-separated: oteg, forel, slicewise, omeg, omeg1, omeg2, omeg3.
    #[arg(long)]
    algorithms: Option<String>,
    /// `nominal`, `experimental` or a multiplier.
    #[arg(long)]
    eta_mode: Option<String>,
    #[arg(long)]
    tau_noise: Option<String>,
    #[arg(long)]
    fista_iters: Option<String>,
    /// `aggregate` or `per-face`.
    #[arg(long)]
    projection: Option<String>,
    #[arg(long)]
    truncate: Option<String>,
    /// `omeg` or `forel`.
    #[arg(long)]
    slice_learner: Option<String>,
    #[arg(long)]
    forel_g: Option<String>,
    #[arg(long)]
    moving_average: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                RunConfig::parse_text(&text)?
            }
            None => RunConfig::default(),
        };
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                cfg.out = PathBuf::from(dir);
            }
        }
        let input = self.input.as_ref().map(|p| p.display().to_string());
        let out = self.out.as_ref().map(|p| p.display().to_string());
        let flags = [
            ("dataset", &self.dataset),
            ("input", &input),
            ("users", &self.users),
            ("movies", &self.movies),
            ("epochs", &self.epochs),
            ("rank", &self.rank),
            ("k_ring", &self.k_ring),
            ("p_rewire", &self.p_rewire),
            ("a_mode", &self.a_mode),
            ("plays", &self.plays),
            ("rounds", &self.rounds),
            ("algorithms", &self.algorithms),
            ("eta_mode", &self.eta_mode),
            ("tau_noise", &self.tau_noise),
            ("fista_iters", &self.fista_iters),
            ("projection", &self.projection),
            ("truncate", &self.truncate),
            ("slice_learner", &self.slice_learner),
            ("forel_g", &self.forel_g),
            ("moving_average", &self.moving_average),
            ("seed", &self.seed),
            ("out", &out),
            ("threads", &self.threads),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for pair in &self.sets {
            cfg.set_pair(pair)?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Reduced sample counts.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Criteria to run, e.g. `1,2,9`; all by default.
    #[arg(long, value_delimiter = ',')]
    only: Vec<usize>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Lipschitz constant of the loss.
    #[arg(long, default_value_t = 4.0)]
    lipschitz: f64,
}

fn datagen(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let data = generate_dataset(&cfg)?;
    let files = write_dataset(&cfg, &data, &cfg.out)?;
    println!(
        "dataset {}x{}x{}, graph {} edges, clustering {:.4}",
        cfg.users,
        cfg.movies,
        cfg.epochs,
        data.graph.edge_count(),
        data.graph.clustering_coefficient()
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn run(cfg: &RunConfig) -> Result<()> {
    let e = run_experiment(cfg)?;
    let files = emit_outputs(&e.traces, &cfg.out)?;
    for t in &e.traces {
        println!(
            "{:<10} cumulative loss {:>10.4}  final round {:.4}  ({:.2?})",
            t.algorithm,
            t.cumulative_loss,
            t.rounds.last().copied().unwrap_or(f64::NAN),
            t.wall_time
        );
    }
    info!("wrote {} files to {}", files.len(), cfg.out.display());
    println!("outputs in {}", cfg.out.display());
    Ok(())
}

fn compare(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let tail = 5.min(cfg.rounds);
    let e = run_experiment(&cfg)?;
    emit_outputs(&e.traces, &cfg.out)?;
    println!(
        "{:<10} {:>10} {:>10} {:>12}",
        "algorithm",
        "round 1",
        "last",
        format!("last {tail} mean")
    );
    let mut rows: Vec<_> = e.traces.iter().map(|t| (t, t.tail_mean(tail))).collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (t, m) in rows {
        println!(
            "{:<10} {:>10.4} {:>10.4} {:>12.4}",
            t.algorithm,
            t.rounds.first().copied().unwrap_or(f64::NAN),
            t.rounds.last().copied().unwrap_or(f64::NAN),
            m
        );
    }
    println!("outputs in {}", cfg.out.display());
    Ok(())
}

fn bound(args: &BoundArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let truth = load_truth(&cfg)?;
    let dims = truth.dims();
    let horizon = cfg.plays.resolve(dims.n1 * dims.n2 * dims.n3);
    let c = oteg_setup(&cfg, &truth, horizon)?;
    let g = args.lipschitz;
    println!(
        "dims {}x{}x{}, p = {}, N = {}",
        dims.n1,
        dims.n2,
        dims.n3,
        c.p(),
        c.big_n()
    );
    println!("T = {horizon}, G = {g}");
    println!(
        "sum tau = {:.6}, sum beta = {:.6}",
        c.tau.iter().sum::<f64>(),
        c.beta.iter().sum::<f64>()
    );
    println!(
        "horizon threshold = {:.3} ({})",
        oteg_core::oteg::horizon_threshold(c.big_n(), &c.tau, &c.beta),
        if c.above_threshold() {
            "above"
        } else {
            "below, bound is 2GT"
        }
    );
    println!("eta = {:.6e} ({:?})", c.eta(g), c.eta_mode);
    println!("regret bound = {:.6}", c.regret_bound(g));
    Ok(())
}

fn verify_cmd(args: &VerifyArgs) -> Result<bool> {
    let effort = if args.quick {
        Effort::Quick
    } else {
        Effort::Full
    };
    let checks = if args.only.is_empty() {
        verify::run_all(effort, args.seed)
    } else {
        verify::run_all_selected(effort, args.seed, &args.only)
    };
    let mut ok = true;
    for c in &checks {
        println!("{}", c.line());
        ok &= c.passed;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Datagen(a) => datagen(a).map(|_| true),
        Command::Run(a) => a.resolve().and_then(|cfg| run(&cfg)).map(|_| true),
        Command::Compare(a) => compare(a).map(|_| true),
        Command::Verify(a) => verify_cmd(a),
        Command::Bound(a) => bound(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
