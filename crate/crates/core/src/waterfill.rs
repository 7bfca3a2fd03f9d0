//! Optimal single-user rate allocation over a fixed channel set.
//!
//! For the log-SNR model the optimum equalizes `2^r / g` over the active
//! channels: with the `k` strongest channels active, each gets
//! `r_i = L + log2 g_i` where `L = (R - sum_j log2 g_j) / k`. Equal gains
//! always receive equal rates, so the active set is a prefix of the
//! distinct gain values sorted in descending order, and whether a gain value
//! joins does not depend on how many copies of it there are. Both entry
//! points reduce their input to `(gain, multiplicity)` pairs and share one
//! scan, which makes the grouped and expanded forms agree bit for bit.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{Allocation, MpcaInstance, RateModel, SolveReport};

#[derive(Debug, Clone, PartialEq)]
pub struct SingleUserProblem {
    gains: Vec<f64>,
    rate_target: f64,
    rate_model: RateModel,
}

impl SingleUserProblem {
    pub fn new(gains: Vec<f64>, rate_target: f64, rate_model: RateModel) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::DimensionMismatch(
                "single-user problem needs a channel".into(),
            ));
        }
        if let Some(channel) = gains.iter().position(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::NonPositiveGain {
                user: 0,
                channel,
                value: gains[channel],
            });
        }
        if !(rate_target > 0.0 && rate_target.is_finite()) {
            return Err(Error::NonPositiveRate {
                user: 0,
                value: rate_target,
            });
        }
        Ok(SingleUserProblem {
            gains,
            rate_target,
            rate_model,
        })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn rate_target(&self) -> f64 {
        self.rate_target
    }

    pub fn rate_model(&self) -> RateModel {
        self.rate_model
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleUserSolution {
    /// Aligned with the problem's gains; inactive channels hold exactly 0.0.
    pub rates: Vec<f64>,
    pub total_power: f64,
    pub active_count: usize,
}

/// Distinct gains in descending order with their multiplicities.
fn merge_runs(sorted_desc: impl IntoIterator<Item = (f64, usize)>) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for (g, c) in sorted_desc {
        if c == 0 {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.0 == g => last.1 += c,
            _ => out.push((g, c)),
        }
    }
    out
}

/// Water level and number of active groups for the log-SNR model.
fn log_snr_level(groups: &[(f64, usize)], rate_target: f64) -> (f64, usize) {
    let (g0, c0) = groups[0];
    let mut log_sum = c0 as f64 * g0.log2();
    let mut count = c0 as f64;
    let mut level = (rate_target - log_sum) / count;
    let mut active = 1;
    for &(g, c) in &groups[1..] {
        let cand_sum = log_sum + c as f64 * g.log2();
        let cand_count = count + c as f64;
        let cand_level = (rate_target - cand_sum) / cand_count;
        if g.log2() + cand_level <= 0.0 {
            break;
        }
        log_sum = cand_sum;
        count = cand_count;
        level = cand_level;
        active += 1;
    }
    (level, active)
}

fn groups_power(model: RateModel, groups: &[(f64, usize)], rate_target: f64) -> f64 {
    match model {
        RateModel::Linear => rate_target / groups[0].0,
        RateModel::LogSnr => {
            let (level, active) = log_snr_level(groups, rate_target);
            groups[..active]
                .iter()
                .map(|&(g, c)| c as f64 * model.inverse_power(g, level + g.log2()))
                .sum()
        }
    }
}

/// Minimum power over gains already sorted in descending order.
pub(crate) fn power_of_sorted(model: RateModel, sorted_desc: &[f64], rate_target: f64) -> f64 {
    let groups = merge_runs(sorted_desc.iter().map(|&g| (g, 1)));
    groups_power(model, &groups, rate_target)
}

/// Minimum power for one user over an arbitrary channel multiset.
pub fn waterfill_power(model: RateModel, gains: &[f64], rate_target: f64) -> f64 {
    let mut sorted = gains.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    power_of_sorted(model, &sorted, rate_target)
}

pub fn waterfill(problem: &SingleUserProblem) -> SingleUserSolution {
    let gains = &problem.gains;
    let target = problem.rate_target;
    let mut rates = vec![0.0; gains.len()];
    match problem.rate_model {
        RateModel::Linear => {
            // first maximum wins ties
            let best = (1..gains.len()).fold(0, |b, i| if gains[i] > gains[b] { i } else { b });
            rates[best] = target;
            SingleUserSolution {
                rates,
                total_power: target / gains[best],
                active_count: 1,
            }
        }
        RateModel::LogSnr => {
            let mut sorted = gains.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let groups = merge_runs(sorted.iter().map(|&g| (g, 1)));
            let (level, active) = log_snr_level(&groups, target);
            let cutoff = groups[active - 1].0;
            let mut active_count = 0;
            for (r, &g) in rates.iter_mut().zip(gains) {
                if g >= cutoff {
                    *r = level + g.log2();
                    active_count += 1;
                }
            }
            SingleUserSolution {
                rates,
                total_power: groups_power(RateModel::LogSnr, &groups, target),
                active_count,
            }
        }
    }
}

/// Minimum power for one user holding `group_counts[j]` channels of gain
/// `group_gains[j]`. Runs in time linear in the number of groups after a
/// sort; zero counts are ignored.
///
/// Panics if the slices differ in length or every count is zero.
pub fn waterfill_grouped(
    model: RateModel,
    group_gains: &[f64],
    group_counts: &[usize],
    rate_target: f64,
) -> f64 {
    assert_eq!(group_gains.len(), group_counts.len());
    let mut pairs: Vec<(f64, usize)> = group_gains
        .iter()
        .copied()
        .zip(group_counts.iter().copied())
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let groups = merge_runs(pairs);
    assert!(
        !groups.is_empty(),
        "waterfill_grouped needs at least one channel"
    );
    groups_power(model, &groups, rate_target)
}

/// Water-fills every user over the channels it owns. Channels that end up
/// with zero rate stay attached to their owner.
pub fn fill_owned_channels(
    instance: &MpcaInstance,
    channel_owner: Vec<Option<usize>>,
) -> Allocation {
    let mut rates = vec![0.0; instance.num_channels()];
    for user in 0..instance.num_users() {
        let channels: Vec<usize> = (0..channel_owner.len())
            .filter(|&n| channel_owner[n] == Some(user))
            .collect();
        if channels.is_empty() {
            continue;
        }
        let gains = channels.iter().map(|&n| instance.gain(user, n)).collect();
        let problem =
            SingleUserProblem::new(gains, instance.rate_target(user), instance.rate_model())
                .expect("instance gains and targets are validated");
        for (&n, r) in channels.iter().zip(waterfill(&problem).rates) {
            rates[n] = r;
        }
    }
    Allocation::new(instance, channel_owner, rates)
}

/// Solves a one-user instance: the user owns every channel.
pub fn solve_single_user(instance: &MpcaInstance) -> Result<SolveReport> {
    let started = Instant::now();
    if instance.num_users() != 1 {
        return Err(Error::Unsupported(format!(
            "water-filling alone solves one user, got {}",
            instance.num_users()
        )));
    }
    let allocation = fill_owned_channels(instance, vec![Some(0); instance.num_channels()]);
    Ok(SolveReport::new(instance, allocation, "waterfill", started))
}
