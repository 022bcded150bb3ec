//! Experiment configuration read from flat `key = value` files.
//!
//! Blank lines and everything after `#` are ignored. List-valued keys take
//! comma-separated values. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use dcopt::{LossKind, NpgOptions, PdcaeOptions, RegularizerKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },

    #[error("invalid value for `{key}`: `{value}`")]
    BadValue { key: String, value: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Pdcae,
    Npg,
    Both,
}

impl SolverChoice {
    pub fn runs_pdcae(self) -> bool {
        matches!(self, SolverChoice::Pdcae | SolverChoice::Both)
    }

    pub fn runs_npg(self) -> bool {
        matches!(self, SolverChoice::Npg | SolverChoice::Both)
    }
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pdcae" => Ok(SolverChoice::Pdcae),
            "npg" => Ok(SolverChoice::Npg),
            "both" => Ok(SolverChoice::Both),
            other => Err(format!("unknown solver `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Problem scales `i`; each gives `(m, n, s, t) = (600i, 3000i, 150i, 30i)`.
    pub scales: Vec<usize>,
    /// Explicit `(m, n, s, t)` overriding `scales`.
    pub dims: Option<[usize; 4]>,
    pub lambdas: Vec<f64>,
    pub mu: f64,
    pub p_fraction: f64,
    /// One output table per entry; `r = round(r_factor · t)`.
    pub r_factors: Vec<f64>,
    pub sigma: f64,
    pub outlier_magnitude: f64,
    pub master_seed: u64,
    pub num_seeds: usize,
    /// Explicit seeds overriding `master_seed..master_seed + num_seeds`.
    pub seeds: Option<Vec<u64>>,
    pub loss: LossKind,
    pub epsilon: f64,
    pub tau: f64,
    pub regularizer: RegularizerKind,
    pub theta: f64,
    pub solver: SolverChoice,
    pub pdcae: PdcaeOptions,
    pub npg: NpgOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scales: vec![1],
            dims: None,
            lambdas: vec![5e-3],
            mu: 0.99,
            p_fraction: 0.8,
            r_factors: vec![1.0],
            sigma: 1e-2,
            outlier_magnitude: 8.0,
            master_seed: 1,
            num_seeds: 20,
            seeds: None,
            loss: LossKind::Squared,
            epsilon: 0.1,
            tau: 0.5,
            regularizer: RegularizerKind::TruncatedL1,
            theta: 3.7,
            solver: SolverChoice::Both,
            pdcae: PdcaeOptions::default(),
            npg: NpgOptions::default(),
        }
    }
}

/// `(m, n, s, t)` for one problem size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub t: usize,
}

impl Dims {
    pub fn from_scale(i: usize) -> Self {
        Self { m: 600 * i, n: 3000 * i, s: 150 * i, t: 30 * i }
    }
}

/// Round half up; `1.1 · 30` must give 33 despite its binary representation.
pub fn round_half_up(v: f64) -> usize {
    (v + 0.5 + 1e-9).floor().max(0.0) as usize
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: raw.trim().to_string(),
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, text: raw.trim().to_string() });
            }
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { line, key });
            }
            if entries.contains_key(&key) {
                return Err(ConfigError::DuplicateKey { line, key });
            }
            entries.insert(key, (line, value.trim().to_string()));
        }

        let mut cfg = Self::default();
        for (key, (_, value)) in &entries {
            cfg.apply(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "scale" => self.scales = list(key, value)?,
            "dims" => {
                let v: Vec<usize> = list(key, value)?;
                let arr: [usize; 4] = v.try_into().map_err(|_| bad(key, value))?;
                self.dims = Some(arr);
            }
            "lambda" => self.lambdas = list(key, value)?,
            "mu" => self.mu = scalar(key, value)?,
            "p_fraction" => self.p_fraction = scalar(key, value)?,
            "r_factor" => self.r_factors = list(key, value)?,
            "sigma" => self.sigma = scalar(key, value)?,
            "outlier_magnitude" => self.outlier_magnitude = scalar(key, value)?,
            "seed" => self.master_seed = scalar(key, value)?,
            "num_seeds" => self.num_seeds = scalar(key, value)?,
            "seeds" => self.seeds = Some(list(key, value)?),
            "loss" => self.loss = scalar(key, value)?,
            "epsilon" => self.epsilon = scalar(key, value)?,
            "tau" => self.tau = scalar(key, value)?,
            "regularizer" => self.regularizer = scalar(key, value)?,
            "theta" => self.theta = scalar(key, value)?,
            "solver" => self.solver = scalar(key, value)?,
            "tol" => {
                let tol = scalar(key, value)?;
                self.pdcae.tol = tol;
                self.npg.tol = tol;
            }
            "max_iter" => {
                let max_iter = scalar(key, value)?;
                self.pdcae.max_iter = max_iter;
                self.npg.max_iter = max_iter;
            }
            "restart_period" => self.pdcae.restart_period = scalar(key, value)?,
            "npg_tau" => self.npg.tau_growth = scalar(key, value)?,
            "npg_c" => self.npg.c = scalar(key, value)?,
            "npg_memory" => self.npg.memory = scalar(key, value)?,
            "npg_l0" => self.npg.l0 = scalar(key, value)?,
            "npg_lmin" => self.npg.l_min = scalar(key, value)?,
            "npg_lmax" => self.npg.l_max = scalar(key, value)?,
            _ => unreachable!("key list checked during parsing"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.dims.is_none() && (self.scales.is_empty() || self.scales.contains(&0)) {
            return invalid("scale values must be positive integers".into());
        }
        if let Some([m, n, s, t]) = self.dims {
            if m == 0 || n == 0 {
                return invalid("dims m and n must be >= 1".into());
            }
            if s > n {
                return invalid(format!("sparsity s = {s} exceeds n = {n}"));
            }
            if t > m {
                return invalid(format!("outlier count t = {t} exceeds m = {m}"));
            }
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return invalid("lambda values must be positive".into());
        }
        if self.r_factors.is_empty() || self.r_factors.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return invalid("r_factor values must be non-negative".into());
        }
        if !(self.p_fraction > 0.0 && self.p_fraction.is_finite()) {
            return invalid("p_fraction must be positive".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return invalid("sigma must be non-negative".into());
        }
        if !self.outlier_magnitude.is_finite() {
            return invalid("outlier_magnitude must be finite".into());
        }
        if self.seeds.as_ref().map_or(self.num_seeds == 0, |s| s.is_empty()) {
            return invalid("at least one seed is required".into());
        }
        self.pdcae.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.npg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for dims in self.dim_list() {
            let p = self.p_for(dims);
            if self.regularizer == RegularizerKind::TruncatedL1 && (p == 0 || p >= dims.n) {
                return invalid(format!("truncated-l1 needs 1 <= p < n (p = {p}, n = {})", dims.n));
            }
            for &rf in &self.r_factors {
                let r = round_half_up(rf * dims.t as f64);
                if r == 0 || r > dims.m + dims.t {
                    return invalid(format!("outlier budget r = {r} must lie in [1, m + t = {}]", dims.m + dims.t));
                }
            }
        }
        Ok(())
    }

    pub fn dim_list(&self) -> Vec<Dims> {
        match self.dims {
            Some([m, n, s, t]) => vec![Dims { m, n, s, t }],
            None => self.scales.iter().map(|&i| Dims::from_scale(i)).collect(),
        }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Some(seeds) => seeds.clone(),
            None => (0..self.num_seeds as u64).map(|j| self.master_seed.wrapping_add(j)).collect(),
        }
    }

    pub fn p_for(&self, dims: Dims) -> usize {
        round_half_up(self.p_fraction * dims.s as f64)
    }

    pub fn r_for(&self, dims: Dims, r_factor: f64) -> usize {
        round_half_up(r_factor * dims.t as f64)
    }
}

const KEYS: &[&str] = &[
    "scale",
    "dims",
    "lambda",
    "mu",
    "p_fraction",
    "r_factor",
    "sigma",
    "outlier_magnitude",
    "seed",
    "num_seeds",
    "seeds",
    "loss",
    "epsilon",
    "tau",
    "regularizer",
    "theta",
    "solver",
    "tol",
    "max_iter",
    "restart_period",
    "npg_tau",
    "npg_c",
    "npg_memory",
    "npg_l0",
    "npg_lmin",
    "npg_lmax",
];

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), value: value.to_string() }
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| bad(key, value))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| bad(key, value)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_table_setup() {
        let cfg = ExperimentConfig::parse("").unwrap();
        let dims = cfg.dim_list()[0];
        assert_eq!((dims.m, dims.n, dims.s, dims.t), (600, 3000, 150, 30));
        assert_eq!(cfg.p_for(dims), 120);
        assert_eq!(cfg.r_for(dims, 1.1), 33);
        assert_eq!(cfg.seed_list().len(), 20);
    }

    #[test]
    fn parses_lists_and_comments() {
        let cfg = ExperimentConfig::parse(
            "# sweep\nlambda = 5e-3, 1e-3 # two values\nr_factor = 1.0,1.1\nsolver = pdcae\nseeds = 4, 9\n",
        )
        .unwrap();
        assert_eq!(cfg.lambdas, vec![5e-3, 1e-3]);
        assert_eq!(cfg.r_factors, vec![1.0, 1.1]);
        assert_eq!(cfg.solver, SolverChoice::Pdcae);
        assert_eq!(cfg.seed_list(), vec![4, 9]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::parse("foo = 1"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(ExperimentConfig::parse("lambda"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(ExperimentConfig::parse("mu = x"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(ExperimentConfig::parse("mu = 1\nmu = 2"), Err(ConfigError::DuplicateKey { .. })));
        assert!(matches!(ExperimentConfig::parse("dims = 10, 20, 30, 1"), Err(ConfigError::Invalid(_))));
        assert!(matches!(ExperimentConfig::parse("lambda = -1"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(round_half_up(2.5), 3);
        assert_eq!(round_half_up(33.0), 33);
        assert_eq!(round_half_up(1.1 * 30.0), 33);
        assert_eq!(round_half_up(0.4), 0);
    }
}
