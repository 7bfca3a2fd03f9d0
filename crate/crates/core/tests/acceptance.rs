//! Acceptance suite. Every criterion runs against an oracle written here,
//! independent of the solver code, and prints one PASS/FAIL line.

use std::collections::{BinaryHeap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use mpca_core::generate::{generate, rng_from_seed, GenConfig};
use mpca_core::kmpca::{one_group_table, solve_1mpca, solve_kmpca, GroupedInstance};
use mpca_core::matching::{solve_equal_blocks, solve_linear_rate};
use mpca_core::oracle::{solve_consecutive_exact, solve_enumeration, solve_subset_dp};
use mpca_core::recognition::{recognize, recognize_pairwise, GroupStructure};
use mpca_core::reduction::{
    build_unrestricted, canonicalize_optimum, check_gadget_lemmas, decide_sat, enumerate_cnfs,
    literal_power_constant, structured_optimum, CnfFormula, GadgetGains, Literal,
    LiteralPowerLevels, ReductionMode, CHECK_LITERAL_POWER, CHECK_LITERAL_STRUCTURE,
    CHECK_VALID_CHANNELS,
};
use mpca_core::waterfill::{waterfill, SingleUserProblem};
use mpca_core::{evaluate, MpcaInstance, RateModel};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($fmt)+)),
        }
    };
}

// ---------------------------------------------------------------------------
// oracles

/// Single-user optimum over rates restricted to multiples of `step`, for a
/// target that is itself a multiple of `step`. The power is separable and
/// convex per channel, so handing out one increment at a time to the
/// cheapest channel is exact on the grid.
fn grid_optimum(gains: &[f64], units: u64, step: f64) -> f64 {
    #[derive(PartialEq)]
    struct Next(f64, usize);
    impl Eq for Next {}
    impl PartialOrd for Next {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Next {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
        }
    }
    let power = |g: f64, k: u64| ((k as f64 * step).exp2() - 1.0) / g;
    let mut held = vec![0u64; gains.len()];
    let mut heap: BinaryHeap<Next> = gains
        .iter()
        .enumerate()
        .map(|(i, &g)| Next(power(g, 1), i))
        .collect();
    for _ in 0..units {
        let Next(_, i) = heap.pop().unwrap();
        held[i] += 1;
        heap.push(Next(
            power(gains[i], held[i] + 1) - power(gains[i], held[i]),
            i,
        ));
    }
    gains.iter().zip(&held).map(|(&g, &k)| power(g, k)).sum()
}

/// Least power over injective user-to-channel maps, powers summed in
/// channel order.
fn injective_min(inst: &MpcaInstance) -> f64 {
    let (m, n) = (inst.num_users(), inst.num_channels());
    let mut best = f64::INFINITY;
    let mut pick = vec![0usize; m];
    let total = n.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        for p in pick.iter_mut() {
            *p = c % n;
            c /= n;
        }
        let mut powers = vec![0.0; n];
        let mut injective = true;
        for (u, &ch) in pick.iter().enumerate() {
            if powers[ch] != 0.0 {
                injective = false;
                break;
            }
            powers[ch] = inst.rate_target(u) / inst.gain(u, ch);
        }
        if injective {
            best = best.min(powers.iter().sum());
        }
    }
    best
}

fn truth_table(cnf: &CnfFormula) -> bool {
    let v = cnf.num_vars();
    (0u32..1 << v).any(|bits| {
        cnf.clauses()
            .iter()
            .all(|c| c.iter().any(|l| (bits >> l.var & 1 == 1) != l.negated))
    })
}

/// Same partition, ignoring label names.
fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(&x, &y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

// ---------------------------------------------------------------------------
// criteria

fn waterfill_kkt() -> Outcome {
    let step = 1e-4;
    let mut rng = rng_from_seed(1);
    let mut worst_kkt: f64 = 0.0;
    let mut worst_grid = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=8);
        let gains: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.gen_range(-2.0..2.0)))
            .collect();
        let units: u64 = rng.gen_range(1_000..=40_000);
        let rate = units as f64 * step;
        let sol =
            waterfill(&SingleUserProblem::new(gains.clone(), rate, RateModel::LogSnr).unwrap());
        let levels: Vec<f64> = sol
            .rates
            .iter()
            .zip(&gains)
            .filter(|(&r, _)| r > 0.0)
            .map(|(&r, &g)| r.exp2() / g)
            .collect();
        let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = levels.iter().copied().fold(0.0, f64::max);
        worst_kkt = worst_kkt.max((hi - lo) / hi);
        // inactive channels must not undercut the water level
        for (&r, &g) in sol.rates.iter().zip(&gains) {
            ensure!(
                r > 0.0 || 1.0 / g >= lo * (1.0 - 1e-9),
                "inactive channel with gain {g} below level {lo}"
            );
        }
        let grid = grid_optimum(&gains, units, step);
        worst_grid = worst_grid.max(sol.total_power - grid);
    }
    ensure!(worst_kkt <= 1e-9, "KKT spread {worst_kkt:e}");
    ensure!(
        worst_grid <= 1e-6,
        "grid beats water-filling by {worst_grid:e}"
    );
    Ok(format!(
        "1000 problems, max KKT spread {worst_kkt:.1e}, max grid advantage {worst_grid:.1e}"
    ))
}

fn kmpca_vs_subset_dp() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..300u64 {
        let mut rng = rng_from_seed(1000 + seed);
        let n = rng.gen_range(1..=12usize);
        let m = rng.gen_range(1..=n.min(4));
        let k = rng.gen_range(1..=n.min(3));
        let inst =
            generate(&GenConfig::new(m, n, k, rng.gen()).shuffled()).map_err(|e| e.to_string())?;
        let exact = solve_subset_dp(&inst).map_err(|e| e.to_string())?.objective;
        let fast = solve_kmpca(&GroupedInstance::from_instance(inst).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?
            .objective;
        worst = worst.max((exact - fast).abs());
        ensure!(
            (exact - fast).abs() <= 1e-9,
            "seed {seed} M={m} N={n} K={k}: {fast} vs {exact}"
        );
    }
    Ok(format!("300 instances, max gap {worst:.1e}"))
}

fn one_channel_per_user() -> Outcome {
    let mut worst_rel: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = rng_from_seed(2000 + seed);
        let m = rng.gen_range(1..=8usize);
        let n = rng.gen_range(m..=3 * m);
        let inst = generate(&GenConfig::new(m, n, 1, rng.gen())).map_err(|e| e.to_string())?;
        let table = one_group_table(
            &GroupedInstance::from_instance(inst.clone()).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let mut acc = 0.0;
        let mut closed = 0.0;
        for i in 1..=m {
            let (g, r) = (inst.gain(i - 1, 0), inst.rate_target(i - 1));
            acc += (r * std::f64::consts::LN_2).exp_m1() / g;
            closed += (2f64.powf(r) - 1.0) / g;
            let v = table.value(i, i);
            ensure!(
                v.to_bits() == acc.to_bits(),
                "seed {seed}: c_{i}({i}) = {v}, sum = {acc}"
            );
            worst_rel = worst_rel.max((v - closed).abs() / closed);
        }
    }
    ensure!(
        worst_rel <= 1e-12,
        "relative deviation from (2^R-1)/g sum {worst_rel:e}"
    );
    Ok(format!(
        "50 instances bit-identical; max deviation from powf form {worst_rel:.1e}"
    ))
}

fn complexity_slope() -> Outcome {
    let sizes = [128usize, 256, 512, 1024];
    let mut times = Vec::new();
    for &n in &sizes {
        let inst = generate(&GenConfig::new(8, n, 1, 7)).map_err(|e| e.to_string())?;
        let grouped = GroupedInstance::from_instance(inst).map_err(|e| e.to_string())?;
        grouped.base().digest();
        let reps = (4096 / n).max(3);
        let mut best = Duration::MAX;
        for _ in 0..reps {
            let t = Instant::now();
            let report = solve_1mpca(&grouped).map_err(|e| e.to_string())?;
            best = best.min(t.elapsed());
            std::hint::black_box(report);
        }
        times.push(best.as_secs_f64());
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    ensure!(
        (1.7..=2.4).contains(&slope),
        "slope {slope:.3} from times {times:?}"
    );
    Ok(format!(
        "slope {slope:.3}, times {:?}",
        times.iter().map(|t| format!("{t:.2e}")).collect::<Vec<_>>()
    ))
}

fn matching_oracles() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = rng_from_seed(3000 + seed);
        let m = rng.gen_range(1..=3usize);
        let width = rng.gen_range(1..=9 / m);
        let inst = generate(&GenConfig::unstructured(m, m * width, rng.gen()))
            .map_err(|e| e.to_string())?;
        let a = solve_equal_blocks(&inst)
            .map_err(|e| e.to_string())?
            .objective;
        let b = solve_consecutive_exact(&inst, &vec![width; m])
            .map_err(|e| e.to_string())?
            .objective;
        worst = worst.max((a - b).abs());
        ensure!((a - b).abs() <= 1e-9, "blocks seed {seed}: {a} vs {b}");
    }
    for seed in 0..100u64 {
        let mut rng = rng_from_seed(4000 + seed);
        let n = rng.gen_range(1..=6usize);
        let m = rng.gen_range(1..=n.min(3));
        let inst =
            generate(&GenConfig::unstructured(m, n, rng.gen()).with_model(RateModel::Linear))
                .map_err(|e| e.to_string())?;
        let fast = solve_linear_rate(&inst)
            .map_err(|e| e.to_string())?
            .objective;
        let brute = injective_min(&inst);
        ensure!(
            fast == brute,
            "linear seed {seed} M={m} N={n}: {fast} vs {brute}"
        );
    }
    Ok(format!(
        "50 block instances (max gap {worst:.1e}), 100 linear instances exact"
    ))
}

fn recognition_planted() -> Outcome {
    let mut count = 0;
    for k in [1usize, 2, 3, 5] {
        for seed in 0..25u64 {
            let mut rng = rng_from_seed(5000 + 100 * k as u64 + seed);
            let n = rng.gen_range(k.max(5)..=200);
            let m = rng.gen_range(1..=5usize);
            let mut cfg = GenConfig::new(m, n, k, rng.gen()).shuffled();
            if seed % 2 == 1 && k > 1 {
                // uneven planted sizes
                let mut sizes = vec![1; k];
                for _ in k..n {
                    sizes[rng.gen_range(0..k)] += 1;
                }
                cfg.group_sizes = Some(sizes);
            }
            let inst = generate(&cfg).map_err(|e| e.to_string())?;
            let planted = inst.channel_groups().unwrap().to_vec();
            let fast = recognize(&inst, 0.0).map_err(|e| e.to_string())?;
            let reference = recognize_pairwise(&inst, 0.0).map_err(|e| e.to_string())?;
            ensure!(
                fast.num_groups() == k,
                "K={k} seed {seed}: found {}",
                fast.num_groups()
            );
            ensure!(
                same_partition(fast.group_id(), &planted),
                "K={k} seed {seed}: partition differs"
            );
            ensure!(
                fast == reference,
                "K={k} seed {seed}: pairwise reference disagrees"
            );
            ensure!(
                fast == GroupStructure::from_labels(planted),
                "K={k} seed {seed}: labels not canonical"
            );
            count += 1;
        }
    }
    Ok(format!(
        "{count} planted instances recovered, reference agrees"
    ))
}

fn reduction_end_to_end() -> Outcome {
    let z = Literal::positive(0);
    let zh = Literal::negative(0);
    let sat_fixture = CnfFormula::new(1, vec![[z, z, zh]]).unwrap();
    let unsat_fixture = CnfFormula::new(1, vec![[z, z, z], [zh, zh, zh]]).unwrap();
    ensure!(
        truth_table(&sat_fixture) && !truth_table(&unsat_fixture),
        "fixture truth values"
    );
    let mut corpus = vec![sat_fixture, unsat_fixture];
    for (v, w) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        for f in enumerate_cnfs(v, w) {
            if !corpus.contains(&f) {
                corpus.push(f);
            }
        }
    }
    let (mut sat, mut unsat) = (0, 0);
    for cnf in &corpus {
        let label = cnf.to_dimacs().replace('\n', " ");
        let (inst, layout) = build_unrestricted(cnf).map_err(|e| e.to_string())?;
        let (v, w) = (cnf.num_vars(), cnf.num_clauses());
        ensure!(
            inst.num_users() == 2 * v + w && inst.num_channels() == 7 * v + w,
            "{label}: size"
        );
        let d = decide_sat(cnf, ReductionMode::Unrestricted).map_err(|e| e.to_string())?;
        let expected = truth_table(cnf);
        ensure!(
            d.satisfiable == expected,
            "{label}: decided {} but truth table says {expected}",
            d.satisfiable
        );
        ensure!(
            evaluate(&inst, &d.report.allocation).is_ok(),
            "{label}: infeasible optimum"
        );
        let canon = canonicalize_optimum(&d.report.allocation);
        let lemmas = check_gadget_lemmas(&layout, &canon);
        for name in [
            CHECK_VALID_CHANNELS,
            CHECK_LITERAL_STRUCTURE,
            CHECK_LITERAL_POWER,
        ] {
            ensure!(
                lemmas.passed(name) == Some(true),
                "{label}: {name} fails: {:?}",
                lemmas.checks
            );
        }
        let structured = structured_optimum(&inst, &layout).map_err(|e| e.to_string())?;
        let constant = literal_power_constant(v, w);
        ensure!(
            (structured.literal_power - constant).abs() <= 1e-9,
            "{label}: structured literal power {} vs {constant}",
            structured.literal_power
        );
        ensure!(
            (structured.value - d.optimum).abs() <= 1e-9,
            "{label}: structured {} vs {}",
            structured.value,
            d.optimum
        );
        if expected {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    for w in 1..=200 {
        let g = GadgetGains::for_clauses(w);
        let f = LiteralPowerLevels::for_gains(&g);
        let (gap, mid, tail) = (f.two - f.three, 0.04 / g.literal, 1.0 / g.auxiliary);
        ensure!(
            f.one > f.two && f.two > f.three && gap > mid && mid > tail,
            "constant chain fails at w={w}"
        );
    }
    Ok(format!("{} formulas ({sat} SAT, {unsat} UNSAT) agree with truth table; constant chain holds for w<=200", corpus.len()))
}

fn consecutive_matches_unrestricted() -> Outcome {
    let mut n = 0;
    for w in [1, 2] {
        for cnf in enumerate_cnfs(1, w) {
            let a = decide_sat(&cnf, ReductionMode::Unrestricted).map_err(|e| e.to_string())?;
            let b = decide_sat(&cnf, ReductionMode::Consecutive).map_err(|e| e.to_string())?;
            ensure!(
                a.satisfiable == b.satisfiable,
                "w={w}: A says {}, B says {}",
                a.satisfiable,
                b.satisfiable
            );
            ensure!(b.report.allocation.num_channels() == 9 + w, "w={w}: size");
            n += 1;
        }
    }
    Ok(format!("{n} formulas decided identically"))
}

fn subset_dp_vs_enumeration() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let mut rng = rng_from_seed(6000 + seed);
        let m = rng.gen_range(1..=3usize);
        let n = rng.gen_range(m..=7);
        let inst =
            generate(&GenConfig::unstructured(m, n, rng.gen())).map_err(|e| e.to_string())?;
        let a = solve_subset_dp(&inst).map_err(|e| e.to_string())?.objective;
        let b = solve_enumeration(&inst)
            .map_err(|e| e.to_string())?
            .objective;
        worst = worst.max((a - b).abs());
        ensure!((a - b).abs() <= 1e-9, "seed {seed} M={m} N={n}: {a} vs {b}");
    }
    Ok(format!("200 instances, max gap {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "water-filling KKT and grid oracle",
            waterfill_kkt,
            Duration::from_secs(10),
        ),
        (
            "K-group DP equals subset DP",
            kmpca_vs_subset_dp,
            Duration::from_secs(60),
        ),
        (
            "one channel per user closed form",
            one_channel_per_user,
            Duration::from_secs(60),
        ),
        (
            "1-group DP time slope",
            complexity_slope,
            Duration::from_secs(120),
        ),
        (
            "matching solvers equal brute force",
            matching_oracles,
            Duration::from_secs(60),
        ),
        (
            "recognition recovers planted groups",
            recognition_planted,
            Duration::from_secs(60),
        ),
        (
            "3-SAT gadget end to end",
            reduction_end_to_end,
            Duration::from_secs(300),
        ),
        (
            "consecutive gadget decides like unrestricted",
            consecutive_matches_unrestricted,
            Duration::from_secs(60),
        ),
        (
            "subset DP equals enumeration",
            subset_dp_vs_enumeration,
            Duration::from_secs(60),
        ),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => {
                Err(format!("{detail}; took {elapsed:.1?}, limit {limit:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
