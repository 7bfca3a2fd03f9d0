use proptest::prelude::*;

use mpca_core::generate::{generate, GenConfig};
use mpca_core::kmpca::{solve_1mpca, solve_kmpca, GroupedInstance};
use mpca_core::matching::{solve_equal_blocks, solve_linear_rate};
use mpca_core::oracle::{solve_consecutive_exact, solve_enumeration, solve_subset_dp};
use mpca_core::waterfill::solve_single_user;
use mpca_core::{evaluate, read_instance, write_instance, RateModel, SolveReport};

fn check_report(inst: &mpca_core::MpcaInstance, r: &SolveReport) {
    let value = evaluate(inst, &r.allocation).expect("solver output is feasible");
    assert_eq!(value, r.objective, "{}", r.algorithm);
    assert_eq!(r.instance_digest, inst.digest());
    assert!(r.wall_time_s >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_solvers_agree_and_are_feasible(m in 1usize..4, extra in 0usize..4, k in 1usize..4, seed in any::<u64>()) {
        let n = m + extra;
        let inst = generate(&GenConfig::new(m, n, k.min(n), seed).shuffled()).unwrap();
        let dp = solve_subset_dp(&inst).unwrap();
        let en = solve_enumeration(&inst).unwrap();
        let grouped = GroupedInstance::from_instance(inst.clone()).unwrap();
        let km = solve_kmpca(&grouped).unwrap();
        for r in [&dp, &en, &km] {
            check_report(&inst, r);
        }
        prop_assert!((dp.objective - en.objective).abs() <= 1e-9);
        prop_assert!((dp.objective - km.objective).abs() <= 1e-9);
        if grouped.num_groups() == 1 {
            let one = solve_1mpca(&grouped).unwrap();
            check_report(&inst, &one);
            prop_assert!((one.objective - dp.objective).abs() <= 1e-9);
        }
    }

    #[test]
    fn restricted_solvers_never_beat_unrestricted(m in 1usize..4, width in 1usize..3, seed in any::<u64>()) {
        let inst = generate(&GenConfig::unstructured(m, m * width, seed)).unwrap();
        let free = solve_subset_dp(&inst).unwrap().objective;
        let blocks = solve_equal_blocks(&inst).unwrap();
        let consecutive = solve_consecutive_exact(&inst, &vec![width; m]).unwrap();
        check_report(&inst, &blocks);
        check_report(&inst, &consecutive);
        prop_assert!(blocks.objective >= free - 1e-9);
        prop_assert!((blocks.objective - consecutive.objective).abs() <= 1e-9);
    }

    #[test]
    fn linear_matching_is_optimal(m in 1usize..4, extra in 0usize..3, seed in any::<u64>()) {
        let inst = generate(&GenConfig::unstructured(m, m + extra, seed).with_model(RateModel::Linear)).unwrap();
        let matched = solve_linear_rate(&inst).unwrap();
        check_report(&inst, &matched);
        // one channel per user
        for u in 0..m {
            prop_assert_eq!(matched.allocation.channels_of(u).len(), 1);
        }
        let exact = solve_subset_dp(&inst).unwrap().objective;
        prop_assert!((matched.objective - exact).abs() <= 1e-9 * exact.max(1.0));
    }

    #[test]
    fn single_user_waterfill_is_exact(n in 1usize..7, seed in any::<u64>()) {
        let inst = generate(&GenConfig::unstructured(1, n, seed)).unwrap();
        let wf = solve_single_user(&inst).unwrap();
        check_report(&inst, &wf);
        prop_assert!((wf.objective - solve_subset_dp(&inst).unwrap().objective).abs() <= 1e-12);
    }

    #[test]
    fn generated_instances_round_trip(m in 1usize..5, extra in 0usize..20, k in 1usize..5, seed in any::<u64>()) {
        let n = m + extra;
        let inst = generate(&GenConfig::new(m, n, k.min(n), seed)).unwrap();
        let bytes = write_instance(&inst);
        let back = read_instance(&bytes).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.digest(), inst.digest());
        prop_assert_eq!(write_instance(&back), bytes);
    }
}

#[test]
fn report_json_shape() {
    let inst = generate(&GenConfig::new(2, 4, 2, 3)).unwrap();
    let r = solve_kmpca(&GroupedInstance::from_instance(inst).unwrap()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for key in [
        "objective",
        "channel_owner",
        "rates",
        "powers",
        "algorithm",
        "wall_time_s",
        "instance_digest",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["channel_owner"]
        .as_array()
        .unwrap()
        .iter()
        .all(|o| o.is_null() || o.as_u64().unwrap() >= 1));
}
