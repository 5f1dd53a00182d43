//! Acceptance run: one PASS/FAIL line per criterion. Criteria listed in
//! `KNOWN_RED` are reported but do not fail the run.

mod common;

use std::time::{Duration, Instant};

use common::*;
use feedflow_core::formulations::{self, Control, ExpansionPolicy, HpcSolution};
use feedflow_core::lp::{self, mps, SolverOptions, Status};
use feedflow_core::metrics::{self, feed_statistics};
use feedflow_core::mintime::{self, MinTimeOptions, MinTimeResult};
use feedflow_core::pattern::{expand_pattern, FeedingPattern, Schedule};
use feedflow_core::scenario::{derive_expansion_costs, MillingMode, Scenario};
use feedflow_testkit::{random_model, vertex_oracle, ModelShape, Oracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Criteria that cannot be met as stated, with the reason.
const KNOWN_RED: &[(usize, &str)] = &[(
    5,
    "the printed medium-moisture budget 13.98 h is not 39.19/2.80 = 13.996 h",
)];

const PATTERN: &str = "6L,10M,4H*10";
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Report {
    results: Vec<(usize, bool)>,
}

impl Report {
    fn line(&mut self, n: usize, pass: bool, detail: String) {
        println!("acceptance {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((n, pass));
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn main_scenario(delta: f64, milling: MillingMode) -> Scenario {
    pdu().with_milling(milling).with_period(delta).unwrap()
}

fn pattern(sc: &Scenario, spec: &str) -> FeedingPattern {
    FeedingPattern::parse(spec, &sc.levels).unwrap()
}

fn run_min_time(sc: &Scenario, p: &FeedingPattern, control: Control, policy: ExpansionPolicy) -> (MinTimeResult, Duration) {
    let mut opts = MinTimeOptions::new(control);
    opts.policy = policy;
    let start = Instant::now();
    let r = mintime::min_time(sc, p, &opts).unwrap();
    (r, start.elapsed())
}

fn cov(tr: &formulations::Trajectory) -> f64 {
    let (mean, sd, _) = feed_statistics(tr.reactor_feed());
    sd / mean
}

/// Optima collected along the run for the property checks.
struct Optimum {
    label: String,
    scenario: Scenario,
    schedule: Schedule,
    solution: HpcSolution,
}

fn from_min_time(label: String, sc: &Scenario, r: &MinTimeResult) -> Optimum {
    Optimum {
        label,
        scenario: sc.clone(),
        schedule: r.schedule.clone(),
        solution: HpcSolution {
            trajectory: r.trajectory.clone(),
            expansion: r.expansion,
            candidates: r.candidates.clone(),
        },
    }
}

fn constant_feed(report: &mut Report, optima: &mut Vec<Optimum>) {
    let mut pass = true;
    let mut detail = Vec::new();
    for milling in [MillingMode::WithFractional, MillingMode::WithoutFractional] {
        let sc = main_scenario(5.0, milling);
        let p = pattern(&sc, PATTERN);
        let start = Instant::now();
        let budgets = mintime::initial_horizon(&sc, &p).unwrap();
        let schedule = expand_pattern(&sc, &p, budgets.budgets()).unwrap();
        let sol = formulations::solve_hpc(&sc, &schedule, ExpansionPolicy::Optimized, &SolverOptions::from_env()).unwrap();
        let took = start.elapsed();
        let (mean, sd, _) = feed_statistics(sol.trajectory.reactor_feed());
        let ok = sd <= 1e-6 * mean && took < Duration::from_secs(120);
        pass &= ok;
        detail.push(format!("{}: std/mean {:.1e} in {:.1}s", milling.label(), sd / mean, took.as_secs_f64()));
        optima.push(Optimum {
            label: format!("constant feed {}", milling.label()),
            scenario: sc,
            schedule,
            solution: sol,
        });
    }
    report.line(1, pass, detail.join("; "));
}

struct Cell {
    control: Control,
    milling: MillingMode,
    hours: f64,
    cost: f64,
}

const TABLE: [Cell; 4] = [
    Cell { control: Control::Hpc, milling: MillingMode::WithoutFractional, hours: 28.17, cost: 42.16 },
    Cell { control: Control::Bffpc, milling: MillingMode::WithoutFractional, hours: 28.27, cost: 42.32 },
    Cell { control: Control::Hpc, milling: MillingMode::WithFractional, hours: 20.33, cost: 33.94 },
    Cell { control: Control::Bffpc, milling: MillingMode::WithFractional, hours: 20.80, cost: 34.71 },
];

/// `[min, max]` widened by `rel` of the target contains the target.
fn band_contains(values: &[f64], target: f64, rel: f64) -> bool {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lo - rel * target <= target && target <= hi + rel * target
}

fn table_two(report: &mut Report, optima: &mut Vec<Optimum>) {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    let mut hpc_feed = 0.0;
    let mut bffpc_feeds = Vec::new();
    for cell in &TABLE {
        let sc = main_scenario(5.0, cell.milling);
        let specs: Vec<String> = match cell.control {
            Control::Hpc => vec![PATTERN.to_string()],
            Control::Bffpc => SEEDS.iter().map(|s| format!("random:seed={s}")).collect(),
        };
        let mut hours = Vec::new();
        let mut costs = Vec::new();
        for spec in &specs {
            let (r, _) = run_min_time(&sc, &pattern(&sc, spec), cell.control, ExpansionPolicy::Optimized);
            let k = metrics::kpis(&r.trajectory, &sc);
            hours.push(r.hours);
            costs.push(k.cost_per_dry_mg);
            if cell.milling == MillingMode::WithFractional {
                match cell.control {
                    Control::Hpc => hpc_feed = k.average_feed,
                    Control::Bffpc => bffpc_feeds.push(k.average_feed),
                }
            }
            optima.push(from_min_time(format!("{} {} {spec}", cell.control, cell.milling.label()), &sc, &r));
        }
        let ok = match cell.control {
            Control::Hpc => within(hours[0], cell.hours, 0.05) && within(costs[0], cell.cost, 0.05),
            Control::Bffpc => band_contains(&hours, cell.hours, 0.05) && band_contains(&costs, cell.cost, 0.05),
        };
        pass &= ok;
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join("/");
        detail.push(format!(
            "{} {}: T* {} h (target {}), {} $/dry Mg (target {})",
            cell.control,
            cell.milling.label(),
            fmt(&hours),
            cell.hours,
            fmt(&costs),
            cell.cost
        ));
    }
    let took = start.elapsed();
    pass &= took < Duration::from_secs(15 * 60);
    report.line(2, pass, format!("{}; {:.0}s", detail.join("; "), took.as_secs_f64()));

    let feed_ok = within(hpc_feed, 3.780, 0.03) && bffpc_feeds.iter().all(|&f| within(f, 3.696, 0.05));
    report.line(
        3,
        feed_ok,
        format!(
            "hpc {hpc_feed:.3} (target 3.780), bffpc {} (target 3.696)",
            bffpc_feeds.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/")
        ),
    );
}

fn buffer_optimization(report: &mut Report, optima: &mut Vec<Optimum>) {
    let spec = "60L,100M,40H";
    let sc = main_scenario(5.0, MillingMode::WithFractional);
    let p = pattern(&sc, spec);
    let (opt, _) = run_min_time(&sc, &p, Control::Hpc, ExpansionPolicy::Optimized);
    let k = metrics::kpis(&opt.trajectory, &sc);
    let (fixed, _) = run_min_time(&sc, &p, Control::Hpc, ExpansionPolicy::Fixed);
    let without_sc = main_scenario(5.0, MillingMode::WithoutFractional);
    let (without, _) = run_min_time(&without_sc, &p, Control::Hpc, ExpansionPolicy::Optimized);

    let opt_cov = cov(&opt.trajectory);
    let fixed_cov = cov(&fixed.trajectory);
    let pass = opt.expansion == 1.0
        && opt_cov <= 1e-6
        && within(k.cost_per_dry_mg, 37.15, 0.05)
        && within(opt.hours, 21.07, 0.05)
        && within(fixed.hours, 21.57, 0.05)
        && fixed_cov > 1e-6
        && without.expansion == 0.0;
    report.line(
        4,
        pass,
        format!(
            "optimized k* {} CoV {:.1e} {:.2} $/dry Mg T* {:.2} h; fixed T* {:.2} h CoV {:.3}; without fractional k* {}",
            opt.expansion, opt_cov, k.cost_per_dry_mg, opt.hours, fixed.hours, fixed_cov, without.expansion
        ),
    );
    optima.push(from_min_time(format!("{spec} optimized"), &sc, &opt));
    optima.push(from_min_time(format!("{spec} fixed"), &sc, &fixed));
    optima.push(from_min_time(format!("{spec} without"), &without_sc, &without));
}

fn worked_example(report: &mut Report) {
    let sc = pdu_q391();
    let mass = [23.51, 39.19, 15.68];
    let t0 = mintime::initial_horizon_for(&sc, &mass).unwrap();
    let t = mintime::refine_horizon_for(&sc, &t0, &[25.0, 42.0, 17.0], &mass).unwrap();
    let want0 = [4.94, 13.98, 9.87];
    let want = [4.62, 12.98, 9.04];
    let ok = |got: &[f64], want: &[f64]| got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 0.01 + 1e-9);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/");
    report.line(
        5,
        ok(t0.budgets(), &want0) && ok(t.budgets(), &want),
        format!(
            "t0 {} (target {}), t {} (target {})",
            fmt(t0.budgets()),
            fmt(&want0),
            fmt(t.budgets()),
            fmt(&want)
        ),
    );
}

fn lp_oracle(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let shape = ModelShape::default();
    let mut worst_gap: f64 = 0.0;
    let mut worst_violation: f64 = 0.0;
    let mut mismatches = 0;
    for _ in 0..200 {
        let m = random_model(&mut rng, &shape);
        let sol = lp::solve(&m, &SolverOptions::default()).unwrap();
        match vertex_oracle(&m) {
            Oracle::Optimal { objective, .. } => {
                if sol.status != Status::Optimal {
                    mismatches += 1;
                    continue;
                }
                worst_gap = worst_gap.max((sol.objective - objective).abs());
                worst_violation = worst_violation.max(m.max_violation(&sol.values));
            }
            Oracle::Infeasible => mismatches += usize::from(sol.status != Status::Infeasible),
            Oracle::Unbounded => mismatches += usize::from(sol.status != Status::Unbounded),
        }
    }
    let took = start.elapsed();
    report.line(
        6,
        mismatches == 0 && worst_gap <= 1e-7 && worst_violation <= 1e-7 && took < Duration::from_secs(30),
        format!(
            "200 models: {mismatches} status mismatches, max gap {worst_gap:.1e}, max violation {worst_violation:.1e}, {:.2}s",
            took.as_secs_f64()
        ),
    );
}

fn properties(report: &mut Report, optima: &[Optimum]) {
    let mut failures = Vec::new();
    for o in optima {
        let checks = check_partition(&o.scenario, &o.schedule)
            .and_then(|_| check_optimum(&o.scenario, &o.schedule, &o.solution.trajectory))
            .and_then(|_| match o.solution.trajectory.control {
                Control::Hpc => check_unique_expansion(&o.solution),
                Control::Bffpc => Ok(()),
            });
        if let Err(e) = checks {
            failures.push(format!("{}: {e}", o.label));
        }
    }
    let detail = if failures.is_empty() {
        format!("{} optima checked", optima.len())
    } else {
        failures.join("; ")
    };
    report.line(7, failures.is_empty(), detail);
}

fn round_trip(m: &lp::LpModel) -> bool {
    let e = mps::to_mps(m);
    let mut back = match mps::parse(&e.mps) {
        Ok(b) => b,
        Err(_) => return false,
    };
    if mps::restore_names(&mut back, &e.names).is_err() {
        return false;
    }
    let mut orig = m.clone();
    for c in back.constraints.iter_mut().chain(orig.constraints.iter_mut()) {
        c.coefficients.sort_by_key(|&(j, _)| j);
    }
    back == orig
}

fn mps_round_trip(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let shape = ModelShape {
        open_bound_prob: 0.2,
        ..ModelShape::default()
    };
    let random_ok = (0..50).filter(|_| round_trip(&random_model(&mut rng, &shape))).count();
    let sc = main_scenario(10.0, MillingMode::WithFractional);
    let p = pattern(&sc, PATTERN);
    let budgets = mintime::initial_horizon(&sc, &p).unwrap();
    let schedule = expand_pattern(&sc, &p, budgets.budgets()).unwrap();
    let (model, _) = formulations::build_hpc(&sc, &schedule, schedule.horizon(), 0.5).unwrap();
    let full_ok = round_trip(&model);
    report.line(
        8,
        random_ok == 50 && full_ok,
        format!(
            "{random_ok}/50 random models; hybrid model with {} columns and {} rows: {}",
            model.num_vars(),
            model.constraints.len(),
            if full_ok { "identical" } else { "differs" }
        ),
    );
}

fn scaling_rule(report: &mut Report) {
    let sc = pdu();
    let mut worst: f64 = 0.0;
    for (i, per_level) in derive_expansion_costs(&sc) {
        let base = &sc.graph.equipment[i].unit_cost;
        for (s, row) in per_level.iter().enumerate() {
            for (&k, &c) in sc.econ.expansion_options.iter().zip(row) {
                let want = (1.0 + k).powf(0.6);
                worst = worst.max(((c / base[s]) - want).abs() / want);
            }
        }
    }
    report.line(9, worst <= 1e-12, format!("max relative error {worst:.1e}"));
}

fn main() {
    let mut report = Report { results: Vec::new() };
    let mut optima = Vec::new();
    constant_feed(&mut report, &mut optima);
    table_two(&mut report, &mut optima);
    buffer_optimization(&mut report, &mut optima);
    worked_example(&mut report);
    lp_oracle(&mut report);
    properties(&mut report, &optima);
    mps_round_trip(&mut report);
    scaling_rule(&mut report);

    let mut unexpected = Vec::new();
    for &(n, pass) in &report.results {
        match KNOWN_RED.iter().find(|(k, _)| *k == n) {
            Some((_, why)) if !pass => println!("acceptance {n}: known red, {why}"),
            Some(_) => println!("acceptance {n}: listed as known red but passes"),
            None if !pass => unexpected.push(n),
            None => {}
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
