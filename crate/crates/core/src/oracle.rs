//! Exponential-time exact solvers for small instances.
//!
//! `solve_subset_dp` and `solve_enumeration` search the same space with
//! unrelated structure, so each audits the other. `solve_consecutive_exact`
//! covers the restricted setting where every user takes a contiguous block
//! of prescribed length.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{MpcaInstance, SolveReport};
use crate::waterfill::{fill_owned_channels, power_of_sorted, waterfill_power};

pub const MAX_SUBSET_CHANNELS: usize = 18;
pub const MAX_ENUMERATION_STATES: u64 = 20_000_000;
pub const MAX_CONSECUTIVE_USERS: usize = 20;

/// Optimal power of every nonempty channel subset for one user, indexed by
/// bitmask.
fn subset_costs(instance: &MpcaInstance, user: usize) -> Vec<f64> {
    let n = instance.num_channels();
    let model = instance.rate_model();
    let target = instance.rate_target(user);
    let row = instance.gains_row(user);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    let mut costs = vec![f64::INFINITY; 1 << n];
    let mut buf = Vec::with_capacity(n);
    for (mask, cost) in costs.iter_mut().enumerate().skip(1) {
        buf.clear();
        buf.extend(
            order
                .iter()
                .filter(|&&c| mask >> c & 1 == 1)
                .map(|&c| row[c]),
        );
        *cost = power_of_sorted(model, &buf, target);
    }
    costs
}

/// Exact optimum by dynamic programming over channel subsets.
///
/// `D_m(S)` is the least power with which users `0..m` cover exactly the
/// channels in `S`, each user holding at least one. Extra channels never
/// cost power, so the answer `D_M(all)` is also the unrestricted optimum.
pub fn solve_subset_dp(instance: &MpcaInstance) -> Result<SolveReport> {
    let started = Instant::now();
    let n = instance.num_channels();
    let users = instance.num_users();
    if n > MAX_SUBSET_CHANNELS {
        return Err(Error::InstanceTooLarge(format!(
            "subset DP handles at most {MAX_SUBSET_CHANNELS} channels, got {n}"
        )));
    }
    let full = (1usize << n) - 1;
    let mut parents: Vec<Vec<u32>> = Vec::with_capacity(users);
    let mut prev = subset_costs(instance, 0);
    prev[0] = f64::INFINITY;
    parents.push((0..=full as u32).collect());

    for user in 1..users {
        let costs = subset_costs(instance, user);
        let last = user + 1 == users;
        let mut cur = vec![f64::INFINITY; full + 1];
        let mut parent = vec![0u32; full + 1];
        let masks: Box<dyn Iterator<Item = usize>> = if last {
            Box::new(std::iter::once(full))
        } else {
            Box::new(1..=full)
        };
        for set in masks {
            let size = set.count_ones() as usize;
            if size <= user || size > n - (users - 1 - user) {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut arg = 0usize;
            let mut sub = set;
            while sub != 0 {
                let rest = prev[set ^ sub];
                if rest < f64::INFINITY {
                    let v = costs[sub] + rest;
                    if v < best {
                        best = v;
                        arg = sub;
                    }
                }
                sub = (sub - 1) & set;
            }
            cur[set] = best;
            parent[set] = arg as u32;
        }
        prev = cur;
        parents.push(parent);
    }

    let mut owners = vec![None; n];
    let mut set = full;
    for user in (0..users).rev() {
        let sub = parents[user][set] as usize;
        debug_assert!(sub != 0 && sub & set == sub);
        for (c, owner) in owners.iter_mut().enumerate() {
            if sub >> c & 1 == 1 {
                *owner = Some(user);
            }
        }
        set ^= sub;
    }
    let allocation = fill_owned_channels(instance, owners);
    Ok(SolveReport::new(instance, allocation, "subset-dp", started))
}

/// Exact optimum by scanning every owner vector, unassigned included.
pub fn solve_enumeration(instance: &MpcaInstance) -> Result<SolveReport> {
    let started = Instant::now();
    let n = instance.num_channels();
    let users = instance.num_users();
    let base = users as u64 + 1;
    let states = base
        .checked_pow(n as u32)
        .filter(|&s| s <= MAX_ENUMERATION_STATES);
    if states.is_none() {
        return Err(Error::InstanceTooLarge(format!(
            "enumeration needs (M+1)^N <= {MAX_ENUMERATION_STATES}, got M={users}, N={n}"
        )));
    }
    let model = instance.rate_model();
    // digit == users means unassigned
    let mut digits = vec![0usize; n];
    let mut per_user: Vec<Vec<f64>> = vec![Vec::with_capacity(n); users];
    let mut best = f64::INFINITY;
    let mut best_digits = None;
    loop {
        for g in per_user.iter_mut() {
            g.clear();
        }
        for (c, &d) in digits.iter().enumerate() {
            if d < users {
                per_user[d].push(instance.gain(d, c));
            }
        }
        if per_user.iter().all(|g| !g.is_empty()) {
            let total: f64 = per_user
                .iter()
                .enumerate()
                .map(|(m, g)| waterfill_power(model, g, instance.rate_target(m)))
                .sum();
            if total < best {
                best = total;
                best_digits = Some(digits.clone());
            }
        }
        // odometer
        let mut i = 0;
        while i < n {
            digits[i] += 1;
            if digits[i] < base as usize {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    let digits =
        best_digits.ok_or_else(|| Error::Infeasible("no owner vector serves every user".into()))?;
    let owners = digits
        .into_iter()
        .map(|d| (d < users).then_some(d))
        .collect();
    let allocation = fill_owned_channels(instance, owners);
    Ok(SolveReport::new(instance, allocation, "enum", started))
}

/// Exact optimum when user `m` must receive exactly `block_sizes[m]`
/// consecutive channels; blocks are disjoint and channels may be skipped.
pub fn solve_consecutive_exact(
    instance: &MpcaInstance,
    block_sizes: &[usize],
) -> Result<SolveReport> {
    let started = Instant::now();
    let n = instance.num_channels();
    let users = instance.num_users();
    if block_sizes.len() != users {
        return Err(Error::DimensionMismatch(format!(
            "{} block sizes for {users} users",
            block_sizes.len()
        )));
    }
    if let Some(user) = block_sizes.iter().position(|&b| b == 0) {
        return Err(Error::DimensionMismatch(format!(
            "block size of user {user} is zero"
        )));
    }
    if users > MAX_CONSECUTIVE_USERS {
        return Err(Error::InstanceTooLarge(format!(
            "consecutive search handles at most {MAX_CONSECUTIVE_USERS} users, got {users}"
        )));
    }
    let demand: usize = block_sizes.iter().sum();
    if demand > n {
        return Err(Error::Infeasible(format!(
            "blocks need {demand} channels, only {n} exist"
        )));
    }

    let model = instance.rate_model();
    // block_cost[m][s]: user m on channels s..s+b_m
    let block_cost: Vec<Vec<f64>> = (0..users)
        .map(|m| {
            let b = block_sizes[m];
            let row = instance.gains_row(m);
            (0..=n - b)
                .map(|s| waterfill_power(model, &row[s..s + b], instance.rate_target(m)))
                .collect()
        })
        .collect();

    const SKIP: u8 = u8::MAX;
    let width = 1usize << users;
    let all = width - 1;
    let mut cost = vec![f64::INFINITY; (n + 1) * width];
    let mut action = vec![SKIP; (n + 1) * width];
    cost[0] = 0.0;
    for pos in 0..n {
        for served in 0..width {
            let here = cost[pos * width + served];
            if here == f64::INFINITY {
                continue;
            }
            let skip = (pos + 1) * width + served;
            if here < cost[skip] {
                cost[skip] = here;
                action[skip] = SKIP;
            }
            for m in (0..users).filter(|&m| served >> m & 1 == 0) {
                let end = pos + block_sizes[m];
                if end > n {
                    continue;
                }
                let next = end * width + (served | 1 << m);
                let v = here + block_cost[m][pos];
                if v < cost[next] {
                    cost[next] = v;
                    action[next] = m as u8;
                }
            }
        }
    }
    if cost[n * width + all] == f64::INFINITY {
        return Err(Error::Infeasible(
            "no disjoint consecutive placement exists".into(),
        ));
    }

    let mut owners = vec![None; n];
    let (mut pos, mut served) = (n, all);
    while pos > 0 {
        match action[pos * width + served] {
            SKIP => pos -= 1,
            m => {
                let m = m as usize;
                let start = pos - block_sizes[m];
                owners[start..pos].iter_mut().for_each(|o| *o = Some(m));
                pos = start;
                served &= !(1 << m);
            }
        }
    }
    debug_assert_eq!(served, 0);
    let allocation = fill_owned_channels(instance, owners);
    Ok(SolveReport::new(
        instance,
        allocation,
        "consecutive",
        started,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate, RateModel};
    use crate::waterfill::{waterfill, SingleUserProblem};

    fn inst(gains: Vec<Vec<f64>>, rates: Vec<f64>) -> MpcaInstance {
        MpcaInstance::new(RateModel::LogSnr, gains, rates).unwrap()
    }

    #[test]
    fn single_user_collapses_to_waterfill() {
        let i = inst(vec![vec![0.5, 3.0, 1.2, 0.01]], vec![2.0]);
        let wf = waterfill(
            &SingleUserProblem::new(i.gains_row(0).to_vec(), 2.0, RateModel::LogSnr).unwrap(),
        );
        for report in [solve_subset_dp(&i).unwrap(), solve_enumeration(&i).unwrap()] {
            assert!((report.objective - wf.total_power).abs() < 1e-12);
        }
    }

    #[test]
    fn two_users_three_uniform_channels() {
        // owner vectors over {user 0, user 1, unassigned}; 12 of the 27 serve
        // both users, and uniform gains make the power k (2^(1/k) - 1)
        let p = |k: usize| k as f64 * (2f64.powf(1.0 / k as f64) - 1.0);
        let mut feasible = 0;
        let mut best = f64::INFINITY;
        for code in 0..27 {
            let digits = [code % 3, code / 3 % 3, code / 9];
            let a = digits.iter().filter(|&&d| d == 0).count();
            let b = digits.iter().filter(|&&d| d == 1).count();
            if a == 0 || b == 0 {
                continue;
            }
            feasible += 1;
            best = best.min(p(a) + p(b));
        }
        assert_eq!(feasible, 12);
        assert!((best - (1.0 + 2.0 * (2f64.sqrt() - 1.0))).abs() < 1e-15);
        let i = inst(vec![vec![1.0; 3]; 2], vec![1.0, 1.0]);
        let dp = solve_subset_dp(&i).unwrap();
        assert!((dp.objective - best).abs() < 1e-12);
        assert!((dp.objective - 1.828_427_1).abs() < 1e-7);
        let en = solve_enumeration(&i).unwrap();
        assert!((dp.objective - en.objective).abs() < 1e-12);
        assert_eq!(evaluate(&i, &dp.allocation).unwrap(), dp.objective);
    }

    #[test]
    fn subset_dp_guard() {
        let i = inst(vec![vec![1.0; 19]], vec![1.0]);
        assert!(matches!(
            solve_subset_dp(&i),
            Err(Error::InstanceTooLarge(_))
        ));
        let i = inst(vec![vec![1.0; 13]; 3], vec![1.0; 3]);
        assert!(matches!(
            solve_enumeration(&i),
            Err(Error::InstanceTooLarge(_))
        ));
    }

    #[test]
    fn consecutive_single_channel() {
        let i = inst(vec![vec![2.0]], vec![1.5]);
        let r = solve_consecutive_exact(&i, &[1]).unwrap();
        assert!((r.objective - RateModel::LogSnr.inverse_power(2.0, 1.5)).abs() < 1e-15);
    }

    #[test]
    fn consecutive_singletons_match_subset_dp() {
        let i = inst(
            vec![
                vec![1.0, 2.0, 0.5],
                vec![3.0, 0.2, 1.0],
                vec![0.7, 0.9, 4.0],
            ],
            vec![1.0, 2.0, 0.5],
        );
        let c = solve_consecutive_exact(&i, &[1, 1, 1]).unwrap();
        let d = solve_subset_dp(&i).unwrap();
        assert!((c.objective - d.objective).abs() < 1e-12);
    }

    #[test]
    fn consecutive_respects_blocks() {
        let i = inst(
            vec![vec![1.0, 5.0, 5.0, 1.0, 1.0], vec![5.0, 1.0, 1.0, 5.0, 5.0]],
            vec![1.0, 1.0],
        );
        let r = solve_consecutive_exact(&i, &[2, 2]).unwrap();
        evaluate(&i, &r.allocation).unwrap();
        for m in 0..2 {
            let ch = r.allocation.channels_of(m);
            assert_eq!(ch.len(), 2);
            assert_eq!(ch[1], ch[0] + 1);
        }
        assert_eq!(r.allocation.channels_of(0), vec![1, 2]);
        assert_eq!(r.allocation.channels_of(1), vec![3, 4]);
    }

    #[test]
    fn consecutive_errors() {
        let i = inst(vec![vec![1.0; 3]; 2], vec![1.0, 1.0]);
        assert!(matches!(
            solve_consecutive_exact(&i, &[2, 2]),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            solve_consecutive_exact(&i, &[1]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            solve_consecutive_exact(&i, &[0, 1]),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
