//! Dynamic programs for instances whose channels fall into `K` groups of
//! per-user uniform gain.
//!
//! Inside a group channels are interchangeable, so only the number of
//! channels a user takes from each group matters. Users are added one at a
//! time and the table records the best power for every vector of channel
//! counts.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{MpcaInstance, RateModel, SolveReport};
use crate::recognition::{recognize, GroupStructure};
use crate::waterfill::{fill_owned_channels, waterfill_grouped};

pub const MAX_GROUPS: usize = 4;
/// Cap on `M * N^(2K)`.
pub const MAX_WORK: f64 = 1e9;

/// An instance together with a channel partition under which every user
/// sees one gain per group.
#[derive(Debug, Clone)]
pub struct GroupedInstance {
    base: MpcaInstance,
    groups: GroupStructure,
    // M x K, row = user
    user_group_gains: Vec<f64>,
}

impl GroupedInstance {
    /// Fails with `WrongStructure` if some user's gains differ inside a group.
    pub fn new(base: MpcaInstance, groups: GroupStructure) -> Result<Self> {
        let n = base.num_channels();
        if groups.group_id().len() != n {
            return Err(Error::DimensionMismatch(format!(
                "group structure covers {} channels, instance has {n}",
                groups.group_id().len()
            )));
        }
        let k = groups.num_groups();
        let members = groups.members();
        let mut user_group_gains = Vec::with_capacity(base.num_users() * k);
        for m in 0..base.num_users() {
            for (j, channels) in members.iter().enumerate() {
                let g = base.gain(m, channels[0]);
                if let Some(&c) = channels.iter().find(|&&c| base.gain(m, c) != g) {
                    return Err(Error::WrongStructure(format!(
                        "user {m} has gains {g} and {} inside group {j} (channel {c})",
                        base.gain(m, c)
                    )));
                }
                user_group_gains.push(g);
            }
        }
        Ok(GroupedInstance {
            base,
            groups,
            user_group_gains,
        })
    }

    /// Uses the instance's declared channel groups, or recognizes them with
    /// exact equality when none are declared.
    pub fn from_instance(base: MpcaInstance) -> Result<Self> {
        let groups = match base.channel_groups() {
            Some(ids) => GroupStructure::from_labels(ids.iter().copied()),
            None => recognize(&base, 0.0)?,
        };
        Self::new(base, groups)
    }

    pub fn base(&self) -> &MpcaInstance {
        &self.base
    }

    pub fn groups(&self) -> &GroupStructure {
        &self.groups
    }

    pub fn num_groups(&self) -> usize {
        self.groups.num_groups()
    }

    pub fn user_group_gains(&self, user: usize) -> &[f64] {
        let k = self.num_groups();
        &self.user_group_gains[user * k..(user + 1) * k]
    }

    /// Owner vector giving each user `counts[m][j]` channels of group `j`,
    /// taken in ascending index order, users served in order.
    fn owners_from_counts(&self, counts: &[Vec<usize>]) -> Vec<Option<usize>> {
        let members = self.groups.members();
        let mut cursor = vec![0; members.len()];
        let mut owners = vec![None; self.base.num_channels()];
        for (m, user_counts) in counts.iter().enumerate() {
            for (j, &c) in user_counts.iter().enumerate() {
                for &n in &members[j][cursor[j]..cursor[j] + c] {
                    owners[n] = Some(m);
                }
                cursor[j] += c;
            }
        }
        owners
    }
}

/// Power of one user spreading its rate evenly over `k` channels of gain `g`.
fn uniform_power(model: RateModel, gain: f64, k: usize, rate: f64) -> f64 {
    match model {
        RateModel::LogSnr => k as f64 * model.inverse_power(gain, rate / k as f64),
        RateModel::Linear => rate / gain,
    }
}

/// Table of the single-group recursion: `value(m, h)` is the least power of
/// users `1..=m` sharing exactly `h` channels, infinite outside the band
/// `m <= h <= N - M + m`.
#[derive(Debug, Clone)]
pub struct OneGroupTable {
    users: usize,
    channels: usize,
    cost: Vec<f64>,
    choice: Vec<u32>,
}

impl OneGroupTable {
    pub fn value(&self, m: usize, h: usize) -> f64 {
        self.cost[m * (self.channels + 1) + h]
    }

    /// Channels given to user `m` at the optimum of `value(m, h)`.
    pub fn choice(&self, m: usize, h: usize) -> usize {
        self.choice[m * (self.channels + 1) + h] as usize
    }

    pub fn num_users(&self) -> usize {
        self.users
    }
}

pub fn one_group_table(instance: &GroupedInstance) -> Result<OneGroupTable> {
    if instance.num_groups() != 1 {
        return Err(Error::WrongStructure(format!(
            "1-group DP needs K = 1, instance has K = {}",
            instance.num_groups()
        )));
    }
    let base = instance.base();
    let (users, n) = (base.num_users(), base.num_channels());
    let model = base.rate_model();
    let width = n + 1;
    let spare = n - users;
    let mut cost = vec![f64::INFINITY; (users + 1) * width];
    let mut choice = vec![0u32; (users + 1) * width];
    cost[0] = 0.0;
    // power[k] for the current user, k = 1..=N-M+1
    let mut power = vec![f64::INFINITY; spare + 2];
    for m in 1..=users {
        let g = instance.user_group_gains(m - 1)[0];
        let rate = base.rate_target(m - 1);
        for (k, p) in power.iter_mut().enumerate().skip(1) {
            *p = uniform_power(model, g, k, rate);
        }
        let (prev, cur) = cost.split_at_mut(m * width);
        let prev = &prev[(m - 1) * width..];
        let cur = &mut cur[..width];
        let cur_choice = &mut choice[m * width..(m + 1) * width];
        for h in m..=spare + m {
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for k in 1..=h - m + 1 {
                let v = power[k] + prev[h - k];
                if v < best {
                    best = v;
                    arg = k;
                }
            }
            cur[h] = best;
            cur_choice[h] = arg as u32;
        }
    }
    Ok(OneGroupTable {
        users,
        channels: n,
        cost,
        choice,
    })
}

pub fn solve_1mpca(instance: &GroupedInstance) -> Result<SolveReport> {
    let started = Instant::now();
    let table = one_group_table(instance)?;
    let base = instance.base();
    let mut counts = vec![vec![0usize]; base.num_users()];
    let mut h = base.num_channels();
    for m in (1..=base.num_users()).rev() {
        let k = table.choice(m, h);
        counts[m - 1][0] = k;
        h -= k;
    }
    debug_assert_eq!(h, 0);
    let allocation = fill_owned_channels(base, instance.owners_from_counts(&counts));
    Ok(SolveReport::new(base, allocation, "1mpca", started))
}

/// Mixed-radix table over count vectors `h` with `0 <= h_j <= N_j`.
/// `value(m, h)` is the least power of users `1..=m` drawing at most `h_j`
/// channels from each group, each user at least one channel.
#[derive(Debug, Clone)]
pub struct KmpcaTable {
    dims: Vec<usize>,
    strides: Vec<usize>,
    states: usize,
    users: usize,
    cost: Vec<f64>,
    choice: Vec<u32>,
}

impl KmpcaTable {
    fn index(&self, h: &[usize]) -> usize {
        h.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    fn decode(&self, mut idx: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let v = idx % d;
                idx /= d;
                v
            })
            .collect()
    }

    pub fn value(&self, m: usize, h: &[usize]) -> f64 {
        self.cost[m * self.states + self.index(h)]
    }

    /// Every count vector of the table, in index order.
    pub fn count_vectors(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.states).map(|i| self.decode(i))
    }

    pub fn num_users(&self) -> usize {
        self.users
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.dims.iter().map(|d| d - 1).collect()
    }
}

fn check_kmpca_guard(users: usize, channels: usize, k: usize) -> Result<()> {
    if k > MAX_GROUPS {
        return Err(Error::InstanceTooLarge(format!(
            "K-group DP handles at most {MAX_GROUPS} groups, got {k}"
        )));
    }
    let work = users as f64 * (channels as f64).powi(2 * k as i32);
    if work > MAX_WORK {
        return Err(Error::InstanceTooLarge(format!(
            "M * N^(2K) = {work:.3e} exceeds {MAX_WORK:.0e}"
        )));
    }
    Ok(())
}

pub fn kmpca_table(instance: &GroupedInstance) -> Result<KmpcaTable> {
    let base = instance.base();
    let (users, n) = (base.num_users(), base.num_channels());
    let k = instance.num_groups();
    check_kmpca_guard(users, n, k)?;
    let model = base.rate_model();
    let dims: Vec<usize> = instance
        .groups()
        .group_sizes()
        .iter()
        .map(|s| s + 1)
        .collect();
    let mut strides = vec![1; k];
    for j in 1..k {
        strides[j] = strides[j - 1] * dims[j - 1];
    }
    let states: usize = dims.iter().product();
    let bound = n - users + 1;
    let mut table = KmpcaTable {
        dims,
        strides,
        states,
        users,
        cost: vec![f64::INFINITY; (users + 1) * states],
        choice: vec![0; (users + 1) * states],
    };
    table.cost[..states].fill(0.0);

    let vectors: Vec<Vec<usize>> = table.count_vectors().collect();
    let totals: Vec<usize> = vectors.iter().map(|v| v.iter().sum()).collect();
    let mut power = vec![f64::INFINITY; states];
    let mut k_vec = vec![0usize; k];
    for m in 1..=users {
        let gains = instance.user_group_gains(m - 1);
        let rate = base.rate_target(m - 1);
        for (idx, v) in vectors.iter().enumerate() {
            // all-zero stays infinite
            power[idx] = if totals[idx] == 0 || v.iter().any(|&c| c > bound) {
                f64::INFINITY
            } else {
                waterfill_grouped(model, gains, v, rate)
            };
        }
        let (prev, cur) = table.cost.split_at_mut(m * states);
        let prev = &prev[(m - 1) * states..];
        let cur = &mut cur[..states];
        let cur_choice = &mut table.choice[m * states..(m + 1) * states];
        for (h_idx, h) in vectors.iter().enumerate() {
            if totals[h_idx] < m {
                continue;
            }
            let limits: Vec<usize> = h.iter().map(|&x| x.min(bound)).collect();
            let mut best = f64::INFINITY;
            let mut arg = 0;
            k_vec.fill(0);
            let mut k_idx = 0usize;
            let mut k_total = 0usize;
            loop {
                // odometer step over the box 0..=limits
                let mut j = 0;
                while j < k {
                    if k_vec[j] < limits[j] {
                        k_vec[j] += 1;
                        k_idx += table.strides[j];
                        k_total += 1;
                        break;
                    }
                    k_idx -= k_vec[j] * table.strides[j];
                    k_total -= k_vec[j];
                    k_vec[j] = 0;
                    j += 1;
                }
                if j == k {
                    break;
                }
                // the remaining users still need one channel each
                if totals[h_idx] - k_total + 1 < m {
                    continue;
                }
                let v = power[k_idx] + prev[h_idx - k_idx];
                if v < best {
                    best = v;
                    arg = k_idx;
                }
            }
            cur[h_idx] = best;
            cur_choice[h_idx] = arg as u32;
        }
    }
    Ok(table)
}

pub fn solve_kmpca(instance: &GroupedInstance) -> Result<SolveReport> {
    let started = Instant::now();
    let table = kmpca_table(instance)?;
    let base = instance.base();
    let mut counts = vec![Vec::new(); base.num_users()];
    let mut h_idx = table.states - 1;
    for m in (1..=base.num_users()).rev() {
        let k_idx = table.choice[m * table.states + h_idx] as usize;
        counts[m - 1] = table.decode(k_idx);
        h_idx -= k_idx;
    }
    let allocation = fill_owned_channels(base, instance.owners_from_counts(&counts));
    Ok(SolveReport::new(base, allocation, "kmpca", started))
}
