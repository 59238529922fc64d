//! Flat `key = value` run configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::baselines::Mode;
use crate::datagen::AMode;
use crate::error::{Error, Result};
use crate::oteg::EtaMode;
use crate::teg::ProjectionMode;

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    /// Neighborhood-influence ratings.
    A,
    /// Ratings that freeze once they reach 5.
    B,
    /// A T3D or CSV tensor with entries in `[-1, 1]`.
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Oteg,
    Forel,
    Slicewise,
    Omeg(Mode),
}

impl Algorithm {
    pub fn id(self) -> String {
        match self {
            Algorithm::Oteg => "oteg".into(),
            Algorithm::Forel => "forel".into(),
            Algorithm::Slicewise => "slicewise".into(),
            Algorithm::Omeg(m) => format!("omeg{}", m.number()),
        }
    }

    /// Parses one entry of the `algorithms` list; `omeg` means all modes.
    pub fn parse_list(text: &str) -> Result<Vec<Algorithm>> {
        let mut out = Vec::new();
        for name in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let found: Vec<Algorithm> = match name {
                "oteg" => vec![Algorithm::Oteg],
                "forel" => vec![Algorithm::Forel],
                "slicewise" => vec![Algorithm::Slicewise],
                "omeg" => Mode::ALL.iter().map(|&m| Algorithm::Omeg(m)).collect(),
                other => match other.strip_prefix("omeg").map(str::parse::<usize>) {
                    Some(Ok(n)) => vec![Algorithm::Omeg(Mode::from_number(n)?)],
                    _ => return Err(Error::Config(format!("unknown algorithm `{other}`"))),
                },
            };
            for a in found {
                if !out.contains(&a) {
                    out.push(a);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlayBudget {
    Fraction(f64),
    Count(usize),
}

impl PlayBudget {
    pub fn resolve(self, cells: usize) -> usize {
        match self {
            PlayBudget::Count(c) => c,
            PlayBudget::Fraction(f) => (f * cells as f64).round() as usize,
        }
    }
}

impl fmt::Display for PlayBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayBudget::Count(c) => write!(f, "{c}"),
            PlayBudget::Fraction(x) => write!(f, "{}%", x * 100.0),
        }
    }
}

impl FromStr for PlayBudget {
    type Err = Error;

    /// `960` is a count; `0.2` or `20%` is a fraction of the cube.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("bad play budget `{s}`"));
        if let Some(p) = s.strip_suffix('%') {
            let v: f64 = p.trim().parse().map_err(|_| bad())?;
            return fraction(v / 100.0).ok_or_else(bad);
        }
        if let Ok(c) = s.parse::<usize>() {
            return Ok(PlayBudget::Count(c));
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        fraction(v).ok_or_else(bad)
    }
}

fn fraction(v: f64) -> Option<PlayBudget> {
    (v > 0.0 && v <= 1.0).then_some(PlayBudget::Fraction(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SliceLearner {
    Omeg,
    Forel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub users: usize,
    pub movies: usize,
    pub epochs: usize,
    /// Rank of the initial rating matrix.
    pub rank: usize,
    pub k_ring: usize,
    pub p_rewire: f64,
    pub a_mode: AMode,
    pub plays: PlayBudget,
    pub rounds: usize,
    pub algorithms: Vec<Algorithm>,
    pub eta_mode: EtaMode,
    pub tau_noise: f64,
    pub fista_iters: usize,
    pub projection: ProjectionMode,
    pub truncate: bool,
    pub slice_learner: SliceLearner,
    /// Gradient bound used for the FoReL rate.
    pub forel_g: f64,
    /// Trailing moving-average window for the loss CSVs; 0 uses block rounds.
    pub moving_average: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetSource::A,
            users: 30,
            movies: 20,
            epochs: 8,
            rank: 1,
            k_ring: 12,
            p_rewire: 0.05,
            a_mode: AMode::PerEpoch,
            plays: PlayBudget::Fraction(0.2),
            rounds: 30,
            algorithms: vec![
                Algorithm::Oteg,
                Algorithm::Forel,
                Algorithm::Slicewise,
                Algorithm::Omeg(Mode::One),
                Algorithm::Omeg(Mode::Two),
                Algorithm::Omeg(Mode::Three),
            ],
            eta_mode: EtaMode::Experimental,
            tau_noise: 5.0,
            fista_iters: 5,
            projection: ProjectionMode::Aggregate,
            truncate: false,
            slice_learner: SliceLearner::Omeg,
            forel_g: 4.0,
            moving_average: 0,
            seed: 42,
            out: PathBuf::from("out"),
            threads: true,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad value `{value}` for `{key}`"))),
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 23] = [
        "dataset",
        "users",
        "movies",
        "epochs",
        "rank",
        "k_ring",
        "p_rewire",
        "a_mode",
        "plays",
        "rounds",
        "algorithms",
        "eta_mode",
        "tau_noise",
        "fista_iters",
        "projection",
        "truncate",
        "slice_learner",
        "forel_g",
        "moving_average",
        "seed",
        "out",
        "threads",
        "input",
    ];

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "dataset" => {
                self.dataset = match value {
                    "a" | "A" => DatasetSource::A,
                    "b" | "B" => DatasetSource::B,
                    "file" => match &self.dataset {
                        DatasetSource::File(p) => DatasetSource::File(p.clone()),
                        _ => DatasetSource::File(PathBuf::new()),
                    },
                    _ => return Err(Error::Config(format!("unknown dataset `{value}`"))),
                }
            }
            "input" => self.dataset = DatasetSource::File(PathBuf::from(value)),
            "users" => self.users = parse("users", value)?,
            "movies" => self.movies = parse("movies", value)?,
            "epochs" => self.epochs = parse("epochs", value)?,
            "rank" => self.rank = parse("rank", value)?,
            "k_ring" => self.k_ring = parse("k_ring", value)?,
            "p_rewire" => self.p_rewire = parse("p_rewire", value)?,
            "a_mode" => {
                self.a_mode = match value {
                    "per-epoch" => AMode::PerEpoch,
                    "per-user" => AMode::PerUser,
                    other => AMode::Fixed(parse("a_mode", other)?),
                }
            }
            "plays" => self.plays = value.parse()?,
            "rounds" => self.rounds = parse("rounds", value)?,
            "algorithms" => self.algorithms = Algorithm::parse_list(value)?,
            "eta_mode" => {
                self.eta_mode = match value {
                    "nominal" => EtaMode::Nominal,
                    "experimental" => EtaMode::Experimental,
                    other => EtaMode::Multiplier(parse("eta_mode", other)?),
                }
            }
            "tau_noise" => self.tau_noise = parse("tau_noise", value)?,
            "fista_iters" => self.fista_iters = parse("fista_iters", value)?,
            "projection" => {
                self.projection = match value {
                    "aggregate" => ProjectionMode::Aggregate,
                    "per-face" => ProjectionMode::PerFace,
                    _ => return Err(Error::Config(format!("unknown projection `{value}`"))),
                }
            }
            "truncate" => self.truncate = parse_bool("truncate", value)?,
            "slice_learner" => {
                self.slice_learner = match value {
                    "omeg" => SliceLearner::Omeg,
                    "forel" => SliceLearner::Forel,
                    _ => return Err(Error::Config(format!("unknown slice learner `{value}`"))),
                }
            }
            "forel_g" => self.forel_g = parse("forel_g", value)?,
            "moving_average" => self.moving_average = parse("moving_average", value)?,
            "seed" => self.seed = parse("seed", value)?,
            "out" => self.out = PathBuf::from(value),
            "threads" => self.threads = parse_bool("threads", value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// `key=value` override as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
        self.set(k, v)
    }

    /// Parses a config file body on top of the defaults. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::ParseError {
                line: no + 1,
                message: format!("expected key = value, got `{line}`"),
            })?;
            cfg.set(k, v).map_err(|e| Error::ParseError {
                line: no + 1,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    /// Every setting as `(key, value)` in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let dataset = match &self.dataset {
            DatasetSource::A => "a".to_string(),
            DatasetSource::B => "b".to_string(),
            DatasetSource::File(_) => "file".to_string(),
        };
        let a_mode = match self.a_mode {
            AMode::PerEpoch => "per-epoch".to_string(),
            AMode::PerUser => "per-user".to_string(),
            AMode::Fixed(a) => a.to_string(),
        };
        let eta_mode = match self.eta_mode {
            EtaMode::Nominal => "nominal".to_string(),
            EtaMode::Experimental => "experimental".to_string(),
            EtaMode::Multiplier(f) => f.to_string(),
        };
        let mut out = vec![
            ("dataset", dataset),
            ("users", self.users.to_string()),
            ("movies", self.movies.to_string()),
            ("epochs", self.epochs.to_string()),
            ("rank", self.rank.to_string()),
            ("k_ring", self.k_ring.to_string()),
            ("p_rewire", self.p_rewire.to_string()),
            ("a_mode", a_mode),
            ("plays", self.plays.to_string()),
            ("rounds", self.rounds.to_string()),
            (
                "algorithms",
                self.algorithms
                    .iter()
                    .map(|a| a.id())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("eta_mode", eta_mode),
            ("tau_noise", self.tau_noise.to_string()),
            ("fista_iters", self.fista_iters.to_string()),
            (
                "projection",
                match self.projection {
                    ProjectionMode::Aggregate => "aggregate",
                    ProjectionMode::PerFace => "per-face",
                }
                .to_string(),
            ),
            ("truncate", self.truncate.to_string()),
            (
                "slice_learner",
                match self.slice_learner {
                    SliceLearner::Omeg => "omeg",
                    SliceLearner::Forel => "forel",
                }
                .to_string(),
            ),
            ("forel_g", self.forel_g.to_string()),
            ("moving_average", self.moving_average.to_string()),
            ("seed", self.seed.to_string()),
        ];
        if let DatasetSource::File(p) = &self.dataset {
            out.push(("input", p.display().to_string()));
        }
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            s.push_str(&format!("{k}={v}\n"));
        }
        s.push_str(&format!(
            "out={}\nthreads={}\n",
            self.out.display(),
            self.threads
        ));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_desk_scale() {
        let c = RunConfig::default();
        assert_eq!((c.users, c.movies, c.epochs), (30, 20, 8));
        assert_eq!(c.plays.resolve(30 * 20 * 8), 960);
        assert_eq!(c.rounds, 30);
        assert_eq!(c.seed, 42);
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.set_pair("dataset=b").unwrap();
        c.set_pair("plays=500").unwrap();
        c.set_pair("algorithms=oteg,omeg2").unwrap();
        c.set_pair("eta_mode=2.5").unwrap();
        c.set_pair("projection=per-face").unwrap();
        let back = RunConfig::parse_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn budgets_parse() {
        assert_eq!("960".parse::<PlayBudget>().unwrap(), PlayBudget::Count(960));
        assert_eq!(
            "20%".parse::<PlayBudget>().unwrap(),
            PlayBudget::Fraction(0.2)
        );
        assert_eq!(
            "0.5".parse::<PlayBudget>().unwrap(),
            PlayBudget::Fraction(0.5)
        );
        assert!("1.5".parse::<PlayBudget>().is_err());
        assert!("x".parse::<PlayBudget>().is_err());
    }

    #[test]
    fn algorithm_lists() {
        let a = Algorithm::parse_list("omeg, oteg, omeg3").unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a[3], Algorithm::Oteg);
        assert!(Algorithm::parse_list("omeg4").is_err());
        assert!(Algorithm::parse_list("svm").is_err());
        assert!(Algorithm::parse_list("").is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = RunConfig::parse_text("# c\nusers=4\nbogus=1\n").unwrap_err();
        assert!(matches!(err, Error::ParseError { line: 3, .. }));
        let err = RunConfig::parse_text("users 4\n").unwrap_err();
        assert!(matches!(err, Error::ParseError { line: 1, .. }));
    }
}
