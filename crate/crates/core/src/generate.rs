//! Seeded random instances with a planted channel-group structure.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{GeneratorInfo, MpcaInstance, RateModel};

/// Name recorded in instance metadata.
pub const PRNG_NAME: &str = "chacha8";

/// Resampling attempts per group column before giving up.
const MAX_RESAMPLES: usize = 1000;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Log-uniform distribution on `[lo, hi]`, written `loguniform:lo,hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogUniform {
    lo: f64,
    hi: f64,
}

impl LogUniform {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < lo <= hi < inf, got [{lo}, {hi}]"
            )));
        }
        Ok(LogUniform { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_degenerate() {
            return self.lo;
        }
        let (a, b) = (self.lo.ln(), self.hi.ln());
        rng.gen_range(a..=b).exp().clamp(self.lo, self.hi)
    }
}

impl fmt::Display for LogUniform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "loguniform:{},{}", self.lo, self.hi)
    }
}

impl FromStr for LogUniform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected loguniform:lo,hi, got {s:?}"));
        let rest = s.strip_prefix("loguniform:").ok_or_else(bad)?;
        let (lo, hi) = rest.split_once(',').ok_or_else(bad)?;
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().parse().map_err(|_| bad())?;
        LogUniform::new(lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub users: usize,
    pub channels: usize,
    pub groups: usize,
    /// Explicit group sizes; an even split when absent.
    pub group_sizes: Option<Vec<usize>>,
    pub gain_dist: LogUniform,
    pub rate_dist: LogUniform,
    pub rate_model: RateModel,
    /// Shuffle channel order instead of laying groups out contiguously.
    pub shuffle_channels: bool,
    pub seed: u64,
}

impl GenConfig {
    /// Log-SNR instance with gains in `[0.01, 100]` and rate targets in
    /// `[0.1, 4]`.
    pub fn new(users: usize, channels: usize, groups: usize, seed: u64) -> Self {
        GenConfig {
            users,
            channels,
            groups,
            group_sizes: None,
            gain_dist: LogUniform {
                lo: 0.01,
                hi: 100.0,
            },
            rate_dist: LogUniform { lo: 0.1, hi: 4.0 },
            rate_model: RateModel::LogSnr,
            shuffle_channels: false,
            seed,
        }
    }

    /// Every channel in its own group.
    pub fn unstructured(users: usize, channels: usize, seed: u64) -> Self {
        GenConfig::new(users, channels, channels, seed)
    }

    pub fn with_model(mut self, model: RateModel) -> Self {
        self.rate_model = model;
        self
    }

    pub fn shuffled(mut self) -> Self {
        self.shuffle_channels = true;
        self
    }

    fn resolved_sizes(&self) -> Result<Vec<usize>> {
        let sizes = match &self.group_sizes {
            Some(s) => {
                if s.len() != self.groups {
                    return Err(Error::InvalidArgument(format!(
                        "{} group sizes given for {} groups",
                        s.len(),
                        self.groups
                    )));
                }
                s.clone()
            }
            None => even_split(self.channels, self.groups)?,
        };
        if sizes.iter().sum::<usize>() != self.channels || sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "group sizes {sizes:?} must be positive and sum to {}",
                self.channels
            )));
        }
        Ok(sizes)
    }
}

/// Splits `n` into `k` sizes differing by at most one, larger ones first.
pub fn even_split(n: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} channels into {k} nonempty groups"
        )));
    }
    Ok((0..k).map(|i| n / k + usize::from(i < n % k)).collect())
}

/// Draws an instance whose channels fall into exactly `groups` classes of
/// identical gain columns. The planted labels are stored as channel groups.
pub fn generate(cfg: &GenConfig) -> Result<MpcaInstance> {
    if cfg.users == 0 || cfg.users > cfg.channels {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= users <= channels, got {} users and {} channels",
            cfg.users, cfg.channels
        )));
    }
    let sizes = cfg.resolved_sizes()?;
    if cfg.groups > 1 && cfg.gain_dist.is_degenerate() {
        return Err(Error::InvalidArgument(
            "a point gain distribution cannot give distinct groups".into(),
        ));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let rates: Vec<f64> = (0..cfg.users)
        .map(|_| cfg.rate_dist.sample(&mut rng))
        .collect();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(cfg.groups);
    for _ in 0..cfg.groups {
        let mut attempts = 0;
        let column = loop {
            let c: Vec<f64> = (0..cfg.users)
                .map(|_| cfg.gain_dist.sample(&mut rng))
                .collect();
            if !columns.contains(&c) {
                break c;
            }
            attempts += 1;
            if attempts >= MAX_RESAMPLES {
                return Err(Error::InvalidArgument(
                    "could not draw distinct group columns".into(),
                ));
            }
        };
        columns.push(column);
    }
    let mut labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
        .collect();
    if cfg.shuffle_channels {
        labels.shuffle(&mut rng);
    }
    let gains = (0..cfg.users)
        .map(|m| labels.iter().map(|&g| columns[g][m]).collect())
        .collect();
    let info = GeneratorInfo {
        prng: PRNG_NAME.into(),
        seed: cfg.seed,
        gain_dist: cfg.gain_dist.to_string(),
        rate_dist: cfg.rate_dist.to_string(),
    };
    Ok(MpcaInstance::new(cfg.rate_model, gains, rates)?
        .with_channel_groups(labels)?
        .with_generator(info))
}
