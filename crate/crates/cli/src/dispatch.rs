use clap::ValueEnum;

use mpca_core::kmpca::{solve_1mpca, solve_kmpca, GroupedInstance, MAX_GROUPS};
use mpca_core::matching::{solve_equal_blocks, solve_linear_rate};
use mpca_core::oracle::{
    solve_consecutive_exact, solve_enumeration, solve_subset_dp, MAX_SUBSET_CHANNELS,
};
use mpca_core::recognition::recognize;
use mpca_core::waterfill::solve_single_user;
use mpca_core::{Error, MpcaInstance, Result, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Auto,
    Waterfill,
    SubsetDp,
    Enum,
    Consecutive,
    #[value(name = "1mpca")]
    OneMpca,
    Kmpca,
    LinearMatch,
    BlockMatch,
}

pub fn solve(instance: &MpcaInstance, algo: Algo, blocks: Option<&[usize]>) -> Result<SolveReport> {
    match algo {
        Algo::Auto => solve_auto(instance),
        Algo::Waterfill => solve_single_user(instance),
        Algo::SubsetDp => solve_subset_dp(instance),
        Algo::Enum => solve_enumeration(instance),
        Algo::Consecutive => {
            let blocks = blocks
                .ok_or_else(|| Error::InvalidArgument("consecutive needs --blocks".into()))?;
            solve_consecutive_exact(instance, blocks)
        }
        Algo::OneMpca => solve_1mpca(&GroupedInstance::from_instance(instance.clone())?),
        Algo::Kmpca => solve_kmpca(&GroupedInstance::from_instance(instance.clone())?),
        Algo::LinearMatch => solve_linear_rate(instance),
        Algo::BlockMatch => solve_equal_blocks(instance),
    }
}

/// Recognizes the group structure, then uses the grouped DP when there are
/// few groups. Otherwise a single user is water-filled, linear rates go to
/// matching, and small instances go to the subset DP.
fn solve_auto(instance: &MpcaInstance) -> Result<SolveReport> {
    let groups = recognize(instance, 0.0)?;
    let k = groups.num_groups();
    if k <= MAX_GROUPS {
        let grouped = GroupedInstance::new(instance.clone(), groups)?;
        let result = if grouped.num_groups() == 1 {
            solve_1mpca(&grouped)
        } else {
            solve_kmpca(&grouped)
        };
        match result {
            Err(Error::InstanceTooLarge(_)) => {}
            other => return other,
        }
    }
    if instance.num_users() == 1 {
        return solve_single_user(instance);
    }
    if instance.rate_model() == mpca_core::RateModel::Linear {
        return solve_linear_rate(instance);
    }
    if instance.num_channels() <= MAX_SUBSET_CHANNELS {
        return solve_subset_dp(instance);
    }
    Err(Error::Unsupported(format!(
        "general MPCA is NP-hard (strongly, by reduction from 3-SAT); {} groups and {} channels exceed every exact method here",
        k,
        instance.num_channels()
    )))
}
