//! Run parameters: built-in defaults < config file (`key=value` lines) <
//! environment (`NOMA_EC_SEED`, seed only) < command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;

/// Invalid user input. Mapped to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

pub const SEED_ENV: &str = "NOMA_EC_SEED";
pub const DEFAULT_SEED: u64 = 20_240_501;
pub const MIN_SAMPLES: usize = 1_000;

/// Parameters shared by all commands. Every field may also be given in the
/// config file under the flag name without leading dashes.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// key=value file with defaults for any of these flags
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Power coefficient of the weaker user in a pair
    #[arg(long, global = true)]
    pub p1: Option<f64>,

    /// Power coefficient of the stronger user in a pair
    #[arg(long, global = true)]
    pub p2: Option<f64>,

    /// Normalized QoS exponents (negative), one value for all users or one per user
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub betas: Option<Vec<f64>>,

    /// Start of the SNR grid in dB
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rho_db_min: Option<f64>,

    /// End of the SNR grid in dB (inclusive)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rho_db_max: Option<f64>,

    /// SNR grid step in dB
    #[arg(long, global = true)]
    pub rho_db_step: Option<f64>,

    /// Single SNR in dB for sweep-delay, pairing-search and compare-schemes
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rho_db: Option<f64>,

    /// QoS exponent grid for sweep-delay
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub beta_grid: Option<Vec<f64>>,

    /// Monte Carlo samples (per grid point or per search)
    #[arg(long, global = true)]
    pub samples: Option<usize>,

    /// Base RNG seed [env: NOMA_EC_SEED]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output CSV path (default: stdout)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Number of users for pairing-search and compare-schemes
    #[arg(long, global = true)]
    pub m: Option<usize>,

    /// Group size for pairing-search (2 or 3)
    #[arg(long, global = true)]
    pub group_size: Option<usize>,

    /// Expand the strong-user EC with floor(beta2) for non-integer beta2
    #[arg(long, global = true)]
    pub paper_faithful_floor: bool,

    /// Per-group powers for groups of three
    #[arg(long, global = true, value_delimiter = ',')]
    pub triple_powers: Option<Vec<f64>>,

    /// Full-NOMA powers for compare-schemes, weakest user first
    #[arg(long, global = true, value_delimiter = ',')]
    pub full_powers: Option<Vec<f64>>,
}

impl Overrides {
    /// Fills unset fields from `base`.
    fn or(self, base: Overrides) -> Overrides {
        Overrides {
            config: self.config.or(base.config),
            p1: self.p1.or(base.p1),
            p2: self.p2.or(base.p2),
            betas: self.betas.or(base.betas),
            rho_db_min: self.rho_db_min.or(base.rho_db_min),
            rho_db_max: self.rho_db_max.or(base.rho_db_max),
            rho_db_step: self.rho_db_step.or(base.rho_db_step),
            rho_db: self.rho_db.or(base.rho_db),
            beta_grid: self.beta_grid.or(base.beta_grid),
            samples: self.samples.or(base.samples),
            seed: self.seed.or(base.seed),
            threads: self.threads.or(base.threads),
            out: self.out.or(base.out),
            m: self.m.or(base.m),
            group_size: self.group_size.or(base.group_size),
            paper_faithful_floor: self.paper_faithful_floor || base.paper_faithful_floor,
            triple_powers: self.triple_powers.or(base.triple_powers),
            full_powers: self.full_powers.or(base.full_powers),
        }
    }

    /// Merges flags over the environment seed over the config file.
    pub fn resolve(self) -> Result<Overrides> {
        let file = match &self.config {
            Some(path) => parse_config_file(path)?,
            None => Overrides::default(),
        };
        let env = Overrides {
            seed: match std::env::var(SEED_ENV) {
                Ok(v) => Some(
                    v.trim()
                        .parse()
                        .map_err(|e| UsageError(format!("{SEED_ENV}={v:?}: {e}")))?,
                ),
                Err(_) => None,
            },
            ..Overrides::default()
        };
        Ok(self.or(env).or(file))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn samples(&self, default: usize) -> Result<usize> {
        let n = self.samples.unwrap_or(default);
        if n < MIN_SAMPLES {
            return usage(format!("--samples {n} is below the minimum of {MIN_SAMPLES}"));
        }
        Ok(n)
    }

    pub fn pair_powers(&self) -> Result<(f64, f64)> {
        let p1 = self.p1.unwrap_or(0.2);
        let p2 = self.p2.unwrap_or(1.0 - p1);
        if !(p1 > 0.0 && p2 > 0.0) || ((p1 + p2) - 1.0).abs() > 1e-12 {
            return usage(format!("--p1 {p1} and --p2 {p2} must be positive and sum to 1"));
        }
        Ok((p1, p2))
    }

    /// QoS exponents for `m` users; a single value is broadcast.
    pub fn betas(&self, m: usize) -> Result<Vec<f64>> {
        let b = self.betas.clone().unwrap_or_else(|| vec![-1.0]);
        let b = match b.len() {
            1 => vec![b[0]; m],
            n if n == m => b,
            n => return usage(format!("--betas has {n} values, expected 1 or {m}")),
        };
        if b.iter().any(|x| !(*x < 0.0) || !x.is_finite()) {
            return usage(format!("--betas must be negative: {b:?}"));
        }
        Ok(b)
    }

    /// Inclusive dB grid from the min/max/step flags with the given defaults.
    pub fn rho_grid(&self, min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
        let (lo, hi, st) = (
            self.rho_db_min.unwrap_or(min),
            self.rho_db_max.unwrap_or(max),
            self.rho_db_step.unwrap_or(step),
        );
        if !lo.is_finite() || !hi.is_finite() || !(st > 0.0) || !st.is_finite() || lo > hi {
            return usage(format!("invalid SNR grid: min {lo}, max {hi}, step {st}"));
        }
        let n = ((hi - lo) / st + 1e-9).floor() as usize + 1;
        if n > 100_000 {
            return usage(format!("SNR grid of {n} points is too large"));
        }
        Ok((0..n).map(|k| ((lo + k as f64 * st) * 1e12).round() / 1e12).collect())
    }

    pub fn rho_db(&self, default: f64) -> Result<f64> {
        let r = self.rho_db.unwrap_or(default);
        if !r.is_finite() {
            return usage(format!("--rho-db {r} is not finite"));
        }
        Ok(r)
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| UsageError(format!("{key}={value:?}: {e}")).into())
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| UsageError(format!("{key}={value:?}: {e}")).into())
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => usage(format!("{key}={other:?}: expected true or false")),
    }
}

pub fn parse_config(text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return usage(format!("line {}: expected key=value, got {raw:?}", lineno + 1));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "p1" => o.p1 = Some(parse_one(&key, value)?),
            "p2" => o.p2 = Some(parse_one(&key, value)?),
            "betas" => o.betas = Some(parse_list(&key, value)?),
            "rho-db-min" => o.rho_db_min = Some(parse_one(&key, value)?),
            "rho-db-max" => o.rho_db_max = Some(parse_one(&key, value)?),
            "rho-db-step" => o.rho_db_step = Some(parse_one(&key, value)?),
            "rho-db" => o.rho_db = Some(parse_one(&key, value)?),
            "beta-grid" => o.beta_grid = Some(parse_list(&key, value)?),
            "samples" => o.samples = Some(parse_one(&key, value)?),
            "seed" => o.seed = Some(parse_one(&key, value)?),
            "threads" => o.threads = Some(parse_one(&key, value)?),
            "out" => o.out = Some(PathBuf::from(value)),
            "m" => o.m = Some(parse_one(&key, value)?),
            "group-size" => o.group_size = Some(parse_one(&key, value)?),
            "paper-faithful-floor" => o.paper_faithful_floor = parse_bool(&key, value)?,
            "triple-powers" => o.triple_powers = Some(parse_list(&key, value)?),
            "full-powers" => o.full_powers = Some(parse_list(&key, value)?),
            other => return usage(format!("line {}: unknown key {other:?}", lineno + 1)),
        }
    }
    Ok(o)
}

fn parse_config_file(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in config file {}", path.display()))
}
