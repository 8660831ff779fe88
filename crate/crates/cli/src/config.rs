//! Experiment configuration: a flat TOML file plus command-line overrides.

use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use tradegame_core::ftpl::{dynamics_eta, OloBounds, DEFAULT_ETA};
use tradegame_core::swap::{SwapError, TreeSwapConfig};
use tradegame_core::{ActionSpace, GameError, GameSpec};

pub const KAPPA_GRID: [f64; 9] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 10.0];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0} must be at least 1")]
    NotPositive(&'static str),
    #[error("kappa list is empty")]
    NoKappas,
    #[error("kappa must be finite and nonnegative, got {0}")]
    BadKappa(f64),
    #[error("{field} has {got} entries for {players} players")]
    PlayerCount { field: &'static str, got: usize, players: usize },
    #[error("unknown eta preset {0:?} (expected a number, standard, kalai-vempala or dynamics)")]
    BadEta(String),
    #[error("unknown algorithm {0:?} (expected ftpl, br_dynamics or swap)")]
    BadAlgo(String),
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Swap(#[from] SwapError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ftpl,
    BrDynamics,
    Swap,
}

impl FromStr for Algorithm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ftpl" => Ok(Self::Ftpl),
            "br_dynamics" | "br-dynamics" | "br" => Ok(Self::BrDynamics),
            "swap" => Ok(Self::Swap),
            other => Err(ConfigError::BadAlgo(other.to_string())),
        }
    }
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ftpl => "ftpl",
            Self::BrDynamics => "br_dynamics",
            Self::Swap => "swap",
        }
    }
}

/// Noise scale: a literal value or a named preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSetting {
    Value(f64),
    /// The fixed experimental value, 50.
    Standard,
    /// `√(2MCR/D)` from the per-player OLO bounds (largest over players).
    KalaiVempala,
    /// `nT√(2θR)`.
    Dynamics,
}

impl FromStr for EtaSetting {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "standard" => Ok(Self::Standard),
            "kalai-vempala" | "kalai_vempala" => Ok(Self::KalaiVempala),
            "dynamics" => Ok(Self::Dynamics),
            other => match other.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Ok(Self::Value(v)),
                _ => Err(ConfigError::BadEta(other.to_string())),
            },
        }
    }
}

impl EtaSetting {
    pub fn resolve(self, spec: &GameSpec, rounds: usize) -> Result<f64, ConfigError> {
        Ok(match self {
            Self::Value(v) => v,
            Self::Standard => DEFAULT_ETA,
            Self::KalaiVempala => {
                let mut eta: f64 = 0.0;
                for i in 0..spec.n() {
                    eta = eta.max(OloBounds::for_player(spec, i)?.kalai_vempala_eta(rounds));
                }
                eta
            }
            Self::Dynamics => dynamics_eta(spec, rounds),
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum EtaField {
    Number(f64),
    Name(String),
}

/// On-disk shape; every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    horizon: Option<usize>,
    volumes: Option<Vec<i64>>,
    lower: Option<OneOrMany<i64>>,
    upper: Option<OneOrMany<i64>>,
    kappas: Option<OneOrMany<f64>>,
    rounds: Option<usize>,
    runs: Option<usize>,
    eta: Option<EtaField>,
    seed: Option<u64>,
    algo: Option<String>,
    swap_block: Option<usize>,
    swap_depth: Option<usize>,
    epsilon: Option<f64>,
    max_sweeps: Option<usize>,
    regret_stride: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub horizon: usize,
    pub volumes: Vec<i64>,
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
    pub kappas: Vec<f64>,
    pub rounds: usize,
    pub runs: usize,
    pub eta: EtaSetting,
    pub seed: u64,
    pub algo: Algorithm,
    pub swap_block: Option<usize>,
    pub swap_depth: usize,
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub regret_stride: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            horizon: 5,
            volumes: vec![10, 10],
            lower: vec![-5, -5],
            upper: vec![5, 5],
            kappas: KAPPA_GRID.to_vec(),
            rounds: 2500,
            runs: 100,
            eta: EtaSetting::Standard,
            seed: 0,
            algo: Algorithm::Ftpl,
            swap_block: None,
            swap_depth: 2,
            epsilon: 1.0,
            max_sweeps: 10_000,
            regret_stride: 10,
            out: PathBuf::from("results"),
        }
    }
}

fn per_player(v: OneOrMany<i64>, players: usize) -> Vec<i64> {
    match v {
        OneOrMany::One(x) => vec![x; players],
        OneOrMany::Many(xs) => xs,
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let mut cfg = Self::default();
        if let Some(v) = raw.volumes {
            let n = v.len();
            cfg.volumes = v;
            cfg.lower = vec![cfg.lower[0]; n];
            cfg.upper = vec![cfg.upper[0]; n];
        }
        let n = cfg.volumes.len();
        if let Some(h) = raw.horizon {
            cfg.horizon = h;
        }
        if let Some(l) = raw.lower {
            cfg.lower = per_player(l, n);
        }
        if let Some(u) = raw.upper {
            cfg.upper = per_player(u, n);
        }
        if let Some(k) = raw.kappas {
            cfg.kappas = match k {
                OneOrMany::One(x) => vec![x],
                OneOrMany::Many(xs) => xs,
            };
        }
        if let Some(r) = raw.rounds {
            cfg.rounds = r;
        }
        if let Some(r) = raw.runs {
            cfg.runs = r;
        }
        if let Some(e) = raw.eta {
            cfg.eta = match e {
                EtaField::Number(v) => EtaSetting::Value(v),
                EtaField::Name(s) => s.parse()?,
            };
        }
        if let Some(s) = raw.seed {
            cfg.seed = s;
        }
        if let Some(a) = raw.algo {
            cfg.algo = a.parse()?;
        }
        cfg.swap_block = raw.swap_block.or(cfg.swap_block);
        if let Some(d) = raw.swap_depth {
            cfg.swap_depth = d;
        }
        if let Some(e) = raw.epsilon {
            cfg.epsilon = e;
        }
        if let Some(m) = raw.max_sweeps {
            cfg.max_sweeps = m;
        }
        if let Some(s) = raw.regret_stride {
            cfg.regret_stride = s;
        }
        if let Some(o) = raw.out {
            cfg.out = o;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.runs == 0 {
            return Err(ConfigError::NotPositive("runs"));
        }
        if self.rounds == 0 {
            return Err(ConfigError::NotPositive("rounds"));
        }
        if self.regret_stride == 0 {
            return Err(ConfigError::NotPositive("regret_stride"));
        }
        if self.max_sweeps == 0 {
            return Err(ConfigError::NotPositive("max_sweeps"));
        }
        if self.kappas.is_empty() {
            return Err(ConfigError::NoKappas);
        }
        if let Some(&k) = self.kappas.iter().find(|k| !k.is_finite() || **k < 0.0) {
            return Err(ConfigError::BadKappa(k));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ConfigError::BadEpsilon(self.epsilon));
        }
        let players = self.volumes.len();
        for (field, got) in [("lower", self.lower.len()), ("upper", self.upper.len())] {
            if got != players {
                return Err(ConfigError::PlayerCount { field, got, players });
            }
        }
        self.game(self.kappas[0])?;
        if self.algo == Algorithm::Swap {
            self.swap_config()?;
        }
        Ok(())
    }

    pub fn game(&self, kappa: f64) -> Result<GameSpec, ConfigError> {
        let spaces = self
            .volumes
            .iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .map(|((&v, &lo), &hi)| ActionSpace::new(v, self.horizon, lo, hi))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GameSpec::new(spaces, kappa)?)
    }

    /// Smallest block with `M^d ≥ R` unless one is set explicitly.
    pub fn swap_config(&self) -> Result<TreeSwapConfig, ConfigError> {
        if self.swap_depth == 0 {
            return Err(ConfigError::NotPositive("swap_depth"));
        }
        let block = match self.swap_block {
            Some(m) => m,
            None => {
                let mut m = 1usize;
                while m
                    .checked_pow(self.swap_depth as u32)
                    .is_some_and(|p| p < self.rounds)
                {
                    m += 1;
                }
                m
            }
        };
        Ok(TreeSwapConfig::new(block, self.swap_depth, self.rounds)?)
    }
}

/// Parses `"0,0.5,2"` into a list of κ values.
pub fn parse_kappa_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|x| {
            let v: f64 = x.trim().parse().map_err(|_| ConfigError::BadKappa(f64::NAN))?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(ConfigError::BadKappa(v))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_experimental_protocol() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.kappas.len(), 9);
        assert_eq!((cfg.rounds, cfg.runs, cfg.horizon), (2500, 100, 5));
        let spec = cfg.game(1.0).unwrap();
        assert_eq!(cfg.eta.resolve(&spec, 2500).unwrap(), 50.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn toml_overrides() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            horizon = 3
            volumes = [4, -2, 1]
            lower = -2
            upper = [3, 2, 2]
            kappas = [0, 2.5]
            rounds = 40
            runs = 2
            eta = "dynamics"
            algo = "swap"
            swap_depth = 2
            "#,
        )
        .unwrap();
        assert_eq!(cfg.lower, vec![-2, -2, -2]);
        assert_eq!(cfg.upper, vec![3, 2, 2]);
        assert_eq!(cfg.kappas, vec![0.0, 2.5]);
        assert_eq!(cfg.eta, EtaSetting::Dynamics);
        assert_eq!(cfg.algo, Algorithm::Swap);
        cfg.validate().unwrap();
        assert_eq!(cfg.swap_config().unwrap().block(), 7);
        let spec = cfg.game(0.0).unwrap();
        let eta = cfg.eta.resolve(&spec, 40).unwrap();
        assert!((eta - 3.0 * 3.0 * (2.0 * 3.0 * 40.0f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_toml("nonsense = 1").is_err());
        assert!(ExperimentConfig::from_toml("eta = \"fast\"").is_err());
        assert!(ExperimentConfig::from_toml("algo = \"mwu\"").is_err());
        let bad = |f: fn(&mut ExperimentConfig)| {
            let mut c = ExperimentConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.runs = 0));
        assert!(bad(|c| c.rounds = 0));
        assert!(bad(|c| c.kappas.clear()));
        assert!(bad(|c| c.kappas = vec![-1.0]));
        assert!(bad(|c| c.volumes = vec![100, 10]));
        assert!(bad(|c| c.lower = vec![0]));
        assert!(bad(|c| {
            c.algo = Algorithm::Swap;
            c.swap_block = Some(10);
        }));
        assert!(!bad(|c| {
            c.algo = Algorithm::Swap;
            c.swap_block = Some(50);
        }));
    }

    #[test]
    fn kappa_list() {
        assert_eq!(parse_kappa_list("0, 0.5,10").unwrap(), vec![0.0, 0.5, 10.0]);
        assert!(parse_kappa_list("1,x").is_err());
        assert!(parse_kappa_list("-1").is_err());
    }
}
