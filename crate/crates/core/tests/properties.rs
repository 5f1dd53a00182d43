mod common;

use common::*;
use feedflow_core::formulations::{self, Control, ExpansionPolicy};
use feedflow_core::lp::SolverOptions;
use feedflow_core::metrics::{self, feed_statistics, KpiReport};
use feedflow_core::mintime::{self, allocate_periods};
use feedflow_core::pattern::{expand_pattern, expand_pattern_periods, FeedingPattern};
use feedflow_core::scenario::{derive_expansion_costs, MillingMode, Scenario};
use feedflow_core::Error;
use proptest::prelude::*;

/// The pilot line with a handful of bales at 10-minute periods.
fn small(counts: [usize; 3], milling: MillingMode) -> Scenario {
    let mut sc = pdu().with_milling(milling).with_period(10.0).unwrap();
    sc.bale.count = counts.to_vec();
    sc
}

fn small_case() -> impl Strategy<Value = (Scenario, FeedingPattern, f64)> {
    (
        prop::array::uniform3(1usize..=4),
        any::<bool>(),
        0u64..1000,
        1.1f64..1.6,
    )
        .prop_map(|(counts, with, seed, slack)| {
            let milling = if with {
                MillingMode::WithFractional
            } else {
                MillingMode::WithoutFractional
            };
            (small(counts, milling), FeedingPattern::Random { seed }, slack)
        })
}

fn padded_budgets(sc: &Scenario, pattern: &FeedingPattern, slack: f64) -> Vec<f64> {
    let state = mintime::initial_horizon(sc, pattern).unwrap();
    state.budgets().iter().map(|b| b * slack).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_optimum_satisfies_the_model_invariants((sc, pattern, slack) in small_case()) {
        let schedule = expand_pattern(&sc, &pattern, &padded_budgets(&sc, &pattern, slack)).unwrap();
        check_partition(&sc, &schedule).map_err(TestCaseError::fail)?;
        let opts = SolverOptions::default();

        let b = formulations::solve_bffpc(&sc, &schedule, &opts).unwrap();
        check_optimum(&sc, &schedule, &b).map_err(TestCaseError::fail)?;

        let h = formulations::solve_hpc(&sc, &schedule, ExpansionPolicy::Optimized, &opts).unwrap();
        check_optimum(&sc, &schedule, &h.trajectory).map_err(TestCaseError::fail)?;
        check_unique_expansion(&h).map_err(TestCaseError::fail)?;

        for tr in [&b, &h.trajectory] {
            let k = metrics::kpis(tr, &sc);
            prop_assert!(k.cov_defined && k.coefficient_of_variation >= 0.0);
            prop_assert!(close(k.mass_processed, sc.bale.total_mass(), 1e-9));
            for inv in &k.max_inventory {
                let e = sc.graph.get(&inv.unit).unwrap();
                prop_assert!(inv.max_inventory <= e.mass_capacity * (1.0 + tr.expansion) + TOL);
            }
            let split = tr.horizon / 2;
            let parts = metrics::segment_cost(tr, &sc, 0..split) + metrics::segment_cost(tr, &sc, split..tr.horizon);
            prop_assert!(close(parts, k.cost_total, 1e-12));
            let same = metrics::compare(&k, &k);
            prop_assert!(same.mismatch.is_none());
            prop_assert!(same.deltas.iter().all(|d| d.percent.is_none_or(|p| p == 0.0)));
        }
    }

    #[test]
    fn larger_storage_never_lowers_the_throughput_value((sc, pattern, slack) in small_case()) {
        let schedule = expand_pattern(&sc, &pattern, &padded_budgets(&sc, &pattern, slack)).unwrap();
        let opts = SolverOptions::default();
        let mut last = f64::NEG_INFINITY;
        for k in [0.0, 0.5, 1.0] {
            let (m, idx) = formulations::build_hpc(&sc, &schedule, schedule.horizon(), k).unwrap();
            let tr = formulations::solve_model(&m, &idx, &opts).unwrap();
            let value = tr.objective - idx.objective_offset;
            prop_assert!(value >= last - 1e-7 * value.abs().max(1.0));
            last = value;
        }
    }

    #[test]
    fn feasibility_is_monotone_in_the_horizon(
        counts in prop::array::uniform3(1usize..=4),
        seed in 0u64..1000,
        shrink in 0.4f64..1.0,
        grow in 0usize..3,
    ) {
        let sc = small(counts, MillingMode::WithFractional);
        let pattern = FeedingPattern::Random { seed };
        let budgets = mintime::initial_horizon(&sc, &pattern).unwrap().budgets().to_vec();
        let total: f64 = budgets.iter().sum::<f64>() * 60.0 / sc.period_min * shrink;
        let periods = allocate_periods(&budgets, (total.ceil() as usize).max(3)).unwrap();
        let mut longer = periods.clone();
        longer[grow] += 1;
        let opts = SolverOptions::default();
        let feasible = |p: &[usize]| {
            let schedule = expand_pattern_periods(&sc, &pattern, p).unwrap();
            match formulations::solve_bffpc(&sc, &schedule, &opts) {
                Ok(_) => true,
                Err(Error::Infeasible(_)) => false,
                Err(e) => panic!("{e}"),
            }
        };
        if feasible(&periods) {
            prop_assert!(feasible(&longer));
        }
    }

    #[test]
    fn refinement_never_lengthens_a_budget(extra in prop::array::uniform3(0.0f64..30.0)) {
        let sc = pdu();
        let mass = sc.bale.required_mass();
        let state = mintime::initial_horizon_for(&sc, &mass).unwrap();
        let max: Vec<f64> = mass.iter().zip(extra).map(|(m, e)| m + e).collect();
        let next = mintime::refine_horizon_for(&sc, &state, &max, &mass).unwrap();
        for (a, b) in next.budgets().iter().zip(state.budgets()) {
            prop_assert!(a <= b);
            prop_assert!(*a >= 0.0);
        }
    }

    #[test]
    fn coefficient_of_variation_is_scale_invariant(
        series in prop::collection::vec(0.01f64..10.0, 1..50),
        c in 0.001f64..1000.0,
    ) {
        let scaled: Vec<f64> = series.iter().map(|x| x * c).collect();
        let a = feed_statistics(&series).2.unwrap();
        let b = feed_statistics(&scaled).2.unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn random_schedules_are_reproducible(seed in any::<u64>(), counts in prop::array::uniform3(1usize..=6)) {
        let sc = small(counts, MillingMode::WithFractional);
        let pattern = FeedingPattern::Random { seed };
        let budgets = mintime::initial_horizon(&sc, &pattern).unwrap().budgets().to_vec();
        let a = expand_pattern(&sc, &pattern, &budgets).unwrap();
        let b = expand_pattern(&sc, &pattern, &budgets).unwrap();
        prop_assert_eq!(&a.active, &b.active);
        check_partition(&sc, &a).map_err(TestCaseError::fail)?;
    }
}

fn report(cov: f64) -> KpiReport {
    KpiReport {
        scenario: "s".into(),
        control: Control::Hpc,
        milling: MillingMode::WithFractional,
        expansion: 0.0,
        max_inventory: Vec::new(),
        average_feed: 1.0,
        coefficient_of_variation: cov,
        cov_defined: true,
        cost_total: 10.0,
        cost_per_dry_mg: 1.0,
        min_time_hours: 1.0,
        mass_processed: 10.0,
        reactor_mass: 9.0,
    }
}

#[test]
fn constant_feed_removes_all_variation_against_any_baseline() {
    for base in [0.01, 0.155, 2.0] {
        let c = metrics::compare(&report(0.0), &report(base));
        assert_eq!(c.cov_reduction, Some(100.0));
    }
    assert_eq!(metrics::compare(&report(0.0), &report(0.0)).cov_reduction, None);
}

#[test]
fn expansion_costs_follow_the_scaling_rule() {
    let sc = pdu();
    let costs = derive_expansion_costs(&sc);
    assert!(!costs.is_empty());
    for (i, per_level) in costs {
        let base = &sc.graph.equipment[i].unit_cost;
        for (s, row) in per_level.iter().enumerate() {
            assert!(row.windows(2).all(|c| c[1] > c[0]));
            for (&k, &c) in sc.econ.expansion_options.iter().zip(row) {
                let want = (1.0 + k).powf(0.6);
                assert!((c / base[s] - want).abs() <= 1e-12 * want);
            }
        }
    }
}

#[test]
fn milling_modes_agree_when_nothing_bypasses() {
    let mut sc = small([2, 2, 2], MillingMode::WithFractional);
    for e in &mut sc.graph.equipment {
        for r in &mut e.bypass_ratio {
            *r = 0.0;
        }
    }
    let without = sc.with_milling(MillingMode::WithoutFractional);
    let pattern = FeedingPattern::Random { seed: 3 };
    let budgets: Vec<f64> = padded_budgets(&sc, &pattern, 1.3);
    let opts = SolverOptions::default();
    for control in [Control::Bffpc, Control::Hpc] {
        let a = formulations::solve(&sc, &expand_pattern(&sc, &pattern, &budgets).unwrap(), control, ExpansionPolicy::Optimized, &opts).unwrap();
        let b = formulations::solve(&without, &expand_pattern(&without, &pattern, &budgets).unwrap(), control, ExpansionPolicy::Optimized, &opts).unwrap();
        assert!(close(a.trajectory.objective, b.trajectory.objective, 1e-9), "{control}");
    }
}

#[test]
fn pilot_line_optima_pass_every_check() {
    let sc = pdu().with_period(10.0).unwrap();
    let pattern = sc.default_pattern.clone().unwrap();
    let state = mintime::initial_horizon(&sc, &pattern).unwrap();
    let schedule = expand_pattern(&sc, &pattern, state.budgets()).unwrap();
    check_partition(&sc, &schedule).unwrap();
    let opts = SolverOptions::default();
    let b = formulations::solve_bffpc(&sc, &schedule, &opts).unwrap();
    check_optimum(&sc, &schedule, &b).unwrap();
    let h = formulations::solve_hpc(&sc, &schedule, ExpansionPolicy::Optimized, &opts).unwrap();
    check_optimum(&sc, &schedule, &h.trajectory).unwrap();
    check_unique_expansion(&h).unwrap();
    let k = metrics::kpis(&h.trajectory, &sc);
    assert!(k.coefficient_of_variation <= 1e-6);
}
