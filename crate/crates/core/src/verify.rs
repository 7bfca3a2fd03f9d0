//! Differential suites: each fast solver against an exact oracle on seeded
//! random instances, and the gadget decision against a truth table.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generate::{generate, rng_from_seed, GenConfig};
use crate::kmpca::{solve_kmpca, GroupedInstance};
use crate::matching::{solve_assignment, solve_equal_blocks, solve_linear_rate, AssignmentProblem};
use crate::model::{MpcaInstance, RateModel};
use crate::oracle::{solve_consecutive_exact, solve_enumeration, solve_subset_dp};
use crate::reduction::{
    build_unrestricted, decide_sat, enumerate_cnfs, structured_optimum, CnfFormula, ReductionMode,
};

pub const OBJECTIVE_TOLERANCE: f64 = 1e-9;
pub const REDUCTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Oracle,
    Kmpca,
    Matching,
    Reduction,
}

impl Suite {
    pub fn tolerance(self) -> f64 {
        match self {
            Suite::Reduction => REDUCTION_TOLERANCE,
            _ => OBJECTIVE_TOLERANCE,
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Suite::Oracle),
            "kmpca" => Ok(Suite::Kmpca),
            "matching" => Ok(Suite::Matching),
            "reduction" => Ok(Suite::Reduction),
            _ => Err(Error::InvalidArgument(format!("unknown suite {s:?}"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Oracle => "oracle",
            Suite::Kmpca => "kmpca",
            Suite::Matching => "matching",
            Suite::Reduction => "reduction",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub suite: Suite,
    pub case: String,
    pub gap: f64,
    pub passed: bool,
}

impl CaseResult {
    fn new(suite: Suite, case: String, gap: f64) -> Self {
        CaseResult {
            suite,
            case,
            gap,
            passed: gap <= suite.tolerance(),
        }
    }

    fn failed(suite: Suite, case: String, err: Error) -> Self {
        CaseResult {
            suite,
            case: format!("{case}: {err}"),
            gap: f64::INFINITY,
            passed: false,
        }
    }
}

/// Runs `suite` on seeds `0..seeds`. The reduction suite is exhaustive and
/// ignores `seeds`.
pub fn run_suite(suite: Suite, seeds: u64) -> Vec<CaseResult> {
    match suite {
        Suite::Oracle => (0..seeds).map(oracle_case).collect(),
        Suite::Kmpca => (0..seeds).map(kmpca_case).collect(),
        Suite::Matching => (0..seeds).flat_map(matching_cases).collect(),
        Suite::Reduction => reduction_cases(),
    }
}

fn gap_between(suite: Suite, case: String, a: Result<f64>, b: Result<f64>) -> CaseResult {
    match (a, b) {
        (Ok(a), Ok(b)) => CaseResult::new(suite, case, (a - b).abs()),
        (Err(e), _) | (_, Err(e)) => CaseResult::failed(suite, case, e),
    }
}

fn random_shape(seed: u64, max_users: usize, max_channels: usize) -> (usize, usize, u64) {
    let mut rng = rng_from_seed(seed);
    let users = rng.gen_range(1..=max_users);
    let channels = rng.gen_range(users..=max_channels);
    (users, channels, rng.gen())
}

fn oracle_case(seed: u64) -> CaseResult {
    let (m, n, inst_seed) = random_shape(seed, 3, 7);
    let case = format!("seed={seed} M={m} N={n}");
    let inst = generate(&GenConfig::unstructured(m, n, inst_seed));
    let (a, b) = match inst {
        Ok(i) => (
            solve_subset_dp(&i).map(|r| r.objective),
            solve_enumeration(&i).map(|r| r.objective),
        ),
        Err(e) => return CaseResult::failed(Suite::Oracle, case, e),
    };
    gap_between(Suite::Oracle, case, a, b)
}

fn kmpca_case(seed: u64) -> CaseResult {
    let mut rng = rng_from_seed(seed);
    let n = rng.gen_range(1..=12usize);
    let m = rng.gen_range(1..=n.min(4));
    let k = rng.gen_range(1..=n.min(3));
    let case = format!("seed={seed} M={m} N={n} K={k}");
    let result = generate(&GenConfig::new(m, n, k, rng.gen()).shuffled())
        .and_then(|i| {
            Ok((
                solve_subset_dp(&i)?.objective,
                GroupedInstance::from_instance(i)?,
            ))
        })
        .and_then(|(exact, g)| Ok((exact, solve_kmpca(&g)?.objective)));
    match result {
        Ok((exact, fast)) => CaseResult::new(Suite::Kmpca, case, (exact - fast).abs()),
        Err(e) => CaseResult::failed(Suite::Kmpca, case, e),
    }
}

/// Least total power over injective user-to-channel maps, summed in channel
/// order.
pub fn injective_brute_force(instance: &MpcaInstance) -> f64 {
    fn go(
        inst: &MpcaInstance,
        user: usize,
        powers: &mut Vec<f64>,
        used: &mut Vec<bool>,
        best: &mut f64,
    ) {
        if user == inst.num_users() {
            *best = best.min(powers.iter().sum());
            return;
        }
        for c in 0..inst.num_channels() {
            if !used[c] {
                used[c] = true;
                powers[c] = inst
                    .rate_model()
                    .inverse_power(inst.gain(user, c), inst.rate_target(user));
                go(inst, user + 1, powers, used, best);
                powers[c] = 0.0;
                used[c] = false;
            }
        }
    }
    let n = instance.num_channels();
    let mut best = f64::INFINITY;
    go(
        instance,
        0,
        &mut vec![0.0; n],
        &mut vec![false; n],
        &mut best,
    );
    best
}

/// Least cost over all permutations of a square matrix, summed in row order.
pub fn permutation_brute_force(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        for c in 0..cost.len() {
            if !used[c] {
                used[c] = true;
                go(cost, row + 1, used, acc + cost[row][c], best);
                used[c] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(cost, 0, &mut vec![false; cost.len()], 0.0, &mut best);
    best
}

fn matching_cases(seed: u64) -> Vec<CaseResult> {
    let s = Suite::Matching;
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();

    let m = rng.gen_range(1..=3usize);
    let width = rng.gen_range(1..=9 / m);
    let case = format!("seed={seed} blocks M={m} N={}", m * width);
    out.push(
        match generate(&GenConfig::unstructured(m, m * width, rng.gen())) {
            Ok(i) => gap_between(
                s,
                case,
                solve_equal_blocks(&i).map(|r| r.objective),
                solve_consecutive_exact(&i, &vec![width; m]).map(|r| r.objective),
            ),
            Err(e) => CaseResult::failed(s, case, e),
        },
    );

    let n = rng.gen_range(1..=6usize);
    let m = rng.gen_range(1..=n.min(3));
    let case = format!("seed={seed} linear M={m} N={n}");
    out.push(
        match generate(&GenConfig::unstructured(m, n, rng.gen()).with_model(RateModel::Linear)) {
            Ok(i) => gap_between(
                s,
                case,
                solve_linear_rate(&i).map(|r| r.objective),
                Ok(injective_brute_force(&i)),
            ),
            Err(e) => CaseResult::failed(s, case, e),
        },
    );

    let size = rng.gen_range(1..=6usize);
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|_| (0..size).map(|_| rng.gen_range(0.0..10.0)).collect())
        .collect();
    let case = format!("seed={seed} assignment n={size}");
    let fast = AssignmentProblem::new(cost.clone())
        .and_then(|p| solve_assignment(&p))
        .map(|a| a.total_cost);
    out.push(gap_between(
        s,
        case,
        fast,
        Ok(permutation_brute_force(&cost)),
    ));
    out
}

/// Satisfiability by trying all `2^v` assignments.
pub fn truth_table_sat(cnf: &CnfFormula) -> bool {
    let v = cnf.num_vars();
    (0u64..1 << v).any(|bits| {
        let assignment: Vec<bool> = (0..v).map(|i| bits >> i & 1 == 1).collect();
        cnf.is_satisfied_by(&assignment)
    })
}

/// Formulas covered by the reduction suite: all of them with one variable,
/// and all with two variables and two clauses.
pub fn reduction_corpus() -> Vec<CnfFormula> {
    let mut out = enumerate_cnfs(1, 1);
    out.extend(enumerate_cnfs(1, 2));
    out.extend(enumerate_cnfs(2, 2));
    out
}

fn reduction_cases() -> Vec<CaseResult> {
    let s = Suite::Reduction;
    let mut out = Vec::new();
    for cnf in reduction_corpus() {
        let label = cnf
            .to_dimacs()
            .lines()
            .skip(1)
            .collect::<Vec<_>>()
            .join(" ");
        let expected = truth_table_sat(&cnf);
        let case = format!("A v={} [{label}] sat={expected}", cnf.num_vars());
        let checked = decide_sat(&cnf, ReductionMode::Unrestricted).and_then(|d| {
            let (inst, layout) = build_unrestricted(&cnf)?;
            Ok((d, structured_optimum(&inst, &layout)?))
        });
        out.push(match checked {
            Ok((d, _)) if d.satisfiable != expected => CaseResult::new(
                s,
                format!("{case}: decided {}", d.satisfiable),
                f64::INFINITY,
            ),
            Ok((d, st)) => CaseResult::new(s, case, (d.optimum - st.value).abs()),
            Err(e) => CaseResult::failed(s, case, e),
        });
        if cnf.num_vars() == 1 {
            let case = format!("B v=1 [{label}] sat={expected}");
            out.push(match decide_sat(&cnf, ReductionMode::Consecutive) {
                Ok(d) if d.satisfiable == expected => CaseResult::new(s, case, 0.0),
                Ok(d) => CaseResult::new(
                    s,
                    format!("{case}: decided {}", d.satisfiable),
                    f64::INFINITY,
                ),
                Err(e) => CaseResult::failed(s, case, e),
            });
        }
    }
    out
}
