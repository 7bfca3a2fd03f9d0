//! Problem instances, allocations, solve reports and their JSON formats.
//!
//! Every solver in the crate is audited against [`evaluate`]: a solution is
//! only as good as the power this function recomputes from its rates.

use std::f64::consts::LN_2;
use std::sync::OnceLock;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Absolute slack on per-user rate sums.
pub const RATE_TOLERANCE: f64 = 1e-9;
/// Relative slack between a stored power and the power implied by its rate.
pub const POWER_TOLERANCE: f64 = 1e-9;

/// How a channel turns transmit power into rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `r = log2(1 + g P)`.
    LogSnr,
    /// `r = l P`.
    Linear,
}

impl RateModel {
    pub fn rate(self, gain: f64, power: f64) -> f64 {
        match self {
            RateModel::LogSnr => (gain * power).ln_1p() / LN_2,
            RateModel::Linear => gain * power,
        }
    }

    /// Power needed to carry `rate` on a channel of the given gain.
    pub fn inverse_power(self, gain: f64, rate: f64) -> f64 {
        match self {
            RateModel::LogSnr => (rate * LN_2).exp_m1() / gain,
            RateModel::Linear => rate / gain,
        }
    }
}

/// Provenance of a synthesized instance, so it can be regenerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub prng: String,
    pub seed: u64,
    pub gain_dist: String,
    pub rate_dist: String,
}

/// A validated MPCA input: `M` users with rate targets, `N` channels and an
/// `M x N` gain matrix.
#[derive(Debug, Clone)]
pub struct MpcaInstance {
    rate_model: RateModel,
    num_users: usize,
    num_channels: usize,
    gains: Vec<f64>,
    rate_targets: Vec<f64>,
    channel_groups: Option<Vec<usize>>,
    generator: Option<GeneratorInfo>,
    digest: OnceLock<String>,
}

impl PartialEq for MpcaInstance {
    fn eq(&self, other: &Self) -> bool {
        self.rate_model == other.rate_model
            && self.num_users == other.num_users
            && self.num_channels == other.num_channels
            && self.gains == other.gains
            && self.rate_targets == other.rate_targets
            && self.channel_groups == other.channel_groups
            && self.generator == other.generator
    }
}

impl MpcaInstance {
    pub fn new(
        rate_model: RateModel,
        gains: Vec<Vec<f64>>,
        rate_targets: Vec<f64>,
    ) -> Result<Self> {
        let num_users = gains.len();
        let num_channels = gains.first().map_or(0, Vec::len);
        Self::from_rows(
            rate_model,
            num_users,
            num_channels,
            gains,
            rate_targets,
            None,
            None,
        )
    }

    fn from_rows(
        rate_model: RateModel,
        num_users: usize,
        num_channels: usize,
        gains: Vec<Vec<f64>>,
        rate_targets: Vec<f64>,
        channel_groups: Option<Vec<usize>>,
        generator: Option<GeneratorInfo>,
    ) -> Result<Self> {
        if num_users == 0 || num_channels == 0 {
            return Err(Error::DimensionMismatch(
                "instance needs at least one user and one channel".into(),
            ));
        }
        if gains.len() != num_users {
            return Err(Error::DimensionMismatch(format!(
                "gain matrix has {} rows, expected {num_users}",
                gains.len()
            )));
        }
        if let Some(row) = gains.iter().position(|r| r.len() != num_channels) {
            return Err(Error::DimensionMismatch(format!(
                "gain row {row} has {} entries, expected {num_channels}",
                gains[row].len()
            )));
        }
        if rate_targets.len() != num_users {
            return Err(Error::DimensionMismatch(format!(
                "{} rate targets for {num_users} users",
                rate_targets.len()
            )));
        }
        if let Some(groups) = &channel_groups {
            if groups.len() != num_channels {
                return Err(Error::DimensionMismatch(format!(
                    "{} channel group ids for {num_channels} channels",
                    groups.len()
                )));
            }
        }
        let instance = MpcaInstance {
            rate_model,
            num_users,
            num_channels,
            gains: gains.into_iter().flatten().collect(),
            rate_targets,
            channel_groups,
            generator,
            digest: OnceLock::new(),
        };
        instance.validate()?;
        Ok(instance)
    }

    /// Checks positivity of gains and targets and `M <= N`.
    pub fn validate(&self) -> Result<()> {
        if self.gains.len() != self.num_users * self.num_channels {
            return Err(Error::DimensionMismatch("gain matrix is not M x N".into()));
        }
        if self.num_users > self.num_channels {
            return Err(Error::TooManyUsers {
                users: self.num_users,
                channels: self.num_channels,
            });
        }
        for (i, &g) in self.gains.iter().enumerate() {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::NonPositiveGain {
                    user: i / self.num_channels,
                    channel: i % self.num_channels,
                    value: g,
                });
            }
        }
        for (user, &r) in self.rate_targets.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::NonPositiveRate { user, value: r });
            }
        }
        Ok(())
    }

    pub fn with_channel_groups(mut self, groups: Vec<usize>) -> Result<Self> {
        if groups.len() != self.num_channels {
            return Err(Error::DimensionMismatch(format!(
                "{} channel group ids for {} channels",
                groups.len(),
                self.num_channels
            )));
        }
        self.channel_groups = Some(groups);
        self.digest = OnceLock::new();
        Ok(self)
    }

    pub fn with_generator(mut self, info: GeneratorInfo) -> Self {
        self.generator = Some(info);
        self.digest = OnceLock::new();
        self
    }

    pub fn rate_model(&self) -> RateModel {
        self.rate_model
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    pub fn gain(&self, user: usize, channel: usize) -> f64 {
        self.gains[user * self.num_channels + channel]
    }

    pub fn gains_row(&self, user: usize) -> &[f64] {
        &self.gains[user * self.num_channels..(user + 1) * self.num_channels]
    }

    pub fn rate_target(&self, user: usize) -> f64 {
        self.rate_targets[user]
    }

    pub fn rate_targets(&self) -> &[f64] {
        &self.rate_targets
    }

    pub fn channel_groups(&self) -> Option<&[usize]> {
        self.channel_groups.as_deref()
    }

    pub fn generator(&self) -> Option<&GeneratorInfo> {
        self.generator.as_ref()
    }

    /// Builds the instance restricted to a subset of users and channels,
    /// in the order given.
    pub fn restrict(&self, users: &[usize], channels: &[usize]) -> Result<Self> {
        let gains = users
            .iter()
            .map(|&m| channels.iter().map(|&n| self.gain(m, n)).collect())
            .collect();
        let targets = users.iter().map(|&m| self.rate_targets[m]).collect();
        Self::new(self.rate_model, gains, targets)
    }

    /// Lowercase hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> &str {
        self.digest
            .get_or_init(|| hex::encode(Sha256::digest(write_instance(self))))
    }

    fn to_file(&self) -> InstanceFile {
        InstanceFile {
            rate_model: self.rate_model,
            num_users: self.num_users,
            num_channels: self.num_channels,
            gains: (0..self.num_users)
                .map(|m| self.gains_row(m).to_vec())
                .collect(),
            rate_targets: self.rate_targets.clone(),
            channel_groups: self.channel_groups.clone(),
            generator: self.generator.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    rate_model: RateModel,
    num_users: usize,
    num_channels: usize,
    gains: Vec<Vec<f64>>,
    rate_targets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    channel_groups: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<GeneratorInfo>,
}

/// Parses and validates an instance from its JSON bytes.
pub fn read_instance(bytes: &[u8]) -> Result<MpcaInstance> {
    let file: InstanceFile = serde_json::from_slice(bytes)?;
    MpcaInstance::from_rows(
        file.rate_model,
        file.num_users,
        file.num_channels,
        file.gains,
        file.rate_targets,
        file.channel_groups,
        file.generator,
    )
}

/// Canonical compact JSON; floats are written in shortest round-trip form.
pub fn write_instance(instance: &MpcaInstance) -> Vec<u8> {
    serde_json::to_vec(&instance.to_file()).expect("instance serialization cannot fail")
}

/// Channel ownership plus per-channel rates and powers.
///
/// Owners are stored 0-based and written 1-based in JSON (`null` for an
/// unassigned channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    #[serde(with = "one_based")]
    channel_owner: Vec<Option<usize>>,
    rates: Vec<f64>,
    powers: Vec<f64>,
}

impl Allocation {
    /// Derives powers from rates under the instance's rate model. Rates on
    /// unassigned channels are forced to zero.
    pub fn new(
        instance: &MpcaInstance,
        channel_owner: Vec<Option<usize>>,
        mut rates: Vec<f64>,
    ) -> Self {
        assert_eq!(channel_owner.len(), instance.num_channels());
        assert_eq!(rates.len(), instance.num_channels());
        let model = instance.rate_model();
        let powers = channel_owner
            .iter()
            .zip(rates.iter_mut())
            .enumerate()
            .map(|(n, (owner, rate))| match owner {
                Some(m) => model.inverse_power(instance.gain(*m, n), *rate),
                None => {
                    *rate = 0.0;
                    0.0
                }
            })
            .collect();
        Allocation {
            channel_owner,
            rates,
            powers,
        }
    }

    /// Raw constructor; nothing is checked until [`evaluate`].
    pub fn from_parts(
        channel_owner: Vec<Option<usize>>,
        rates: Vec<f64>,
        powers: Vec<f64>,
    ) -> Self {
        Allocation {
            channel_owner,
            rates,
            powers,
        }
    }

    pub fn num_channels(&self) -> usize {
        self.channel_owner.len()
    }

    pub fn owner(&self, channel: usize) -> Option<usize> {
        self.channel_owner[channel]
    }

    pub fn channel_owner(&self) -> &[Option<usize>] {
        &self.channel_owner
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Channels of `user` in ascending index order.
    pub fn channels_of(&self, user: usize) -> Vec<usize> {
        (0..self.channel_owner.len())
            .filter(|&n| self.channel_owner[n] == Some(user))
            .collect()
    }

    pub fn user_power(&self, user: usize) -> f64 {
        self.channels_of(user).iter().map(|&n| self.powers[n]).sum()
    }

    /// Sum of powers in channel order.
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Marks channels as unassigned, zeroing their rate and power.
    pub fn release(&mut self, channels: impl IntoIterator<Item = usize>) {
        for n in channels {
            self.channel_owner[n] = None;
            self.rates[n] = 0.0;
            self.powers[n] = 0.0;
        }
    }
}

mod one_based {
    use super::*;

    pub fn serialize<S: Serializer>(
        owners: &[Option<usize>],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let shifted: Vec<Option<usize>> = owners.iter().map(|o| o.map(|m| m + 1)).collect();
        shifted.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Option<usize>>, D::Error> {
        let raw: Vec<Option<usize>> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|o| match o {
                Some(0) => Err(serde::de::Error::custom("user ids are 1-based")),
                o => Ok(o.map(|m| m - 1)),
            })
            .collect()
    }
}

/// Checks every allocation invariant against the instance and returns the
/// total power.
pub fn evaluate(instance: &MpcaInstance, allocation: &Allocation) -> Result<f64> {
    let n_ch = instance.num_channels();
    if allocation.channel_owner.len() != n_ch
        || allocation.rates.len() != n_ch
        || allocation.powers.len() != n_ch
    {
        return Err(Error::DimensionMismatch(format!(
            "allocation vectors must have length {n_ch}"
        )));
    }
    let model = instance.rate_model();
    let mut served = vec![0.0; instance.num_users()];
    for n in 0..n_ch {
        let (rate, power) = (allocation.rates[n], allocation.powers[n]);
        if !(rate >= 0.0 && power >= 0.0 && rate.is_finite() && power.is_finite()) {
            return Err(Error::InvalidValue { channel: n });
        }
        match allocation.channel_owner[n] {
            None => {
                if rate != 0.0 || power != 0.0 {
                    return Err(Error::IdleChannelActive { channel: n });
                }
            }
            Some(m) if m >= instance.num_users() => {
                return Err(Error::UnknownOwner {
                    channel: n,
                    owner: m + 1,
                });
            }
            Some(m) => {
                let expected = model.inverse_power(instance.gain(m, n), rate);
                if (power - expected).abs() > POWER_TOLERANCE * expected.abs().max(power.abs()) {
                    return Err(Error::PowerRateMismatch {
                        channel: n,
                        rate,
                        power,
                        expected,
                    });
                }
                served[m] += rate;
            }
        }
    }
    for (user, (&achieved, &target)) in served.iter().zip(instance.rate_targets()).enumerate() {
        if achieved < target - RATE_TOLERANCE {
            return Err(Error::RateTargetMissed {
                user,
                achieved,
                target,
            });
        }
    }
    Ok(allocation.total_power())
}

/// Result record shared by every solver and emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub objective: f64,
    #[serde(flatten)]
    pub allocation: Allocation,
    pub algorithm: String,
    pub wall_time_s: f64,
    pub instance_digest: String,
}

impl SolveReport {
    /// The objective is always the allocation's own power sum.
    pub fn new(
        instance: &MpcaInstance,
        allocation: Allocation,
        algorithm: &str,
        started: Instant,
    ) -> Self {
        SolveReport {
            objective: allocation.total_power(),
            allocation,
            algorithm: algorithm.to_string(),
            wall_time_s: started.elapsed().as_secs_f64(),
            instance_digest: instance.digest().to_string(),
        }
    }
}
