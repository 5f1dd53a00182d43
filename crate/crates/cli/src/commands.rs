use std::path::Path;

use feedflow_core::formulations::{self, Candidate, Control, ExpansionPolicy, Trajectory};
use feedflow_core::lp::{mps, SolverOptions};
use feedflow_core::metrics::{self, KpiReport};
use feedflow_core::mintime::{self, MinTimeOptions, Search};
use feedflow_core::pattern::{expand_pattern, FeedingPattern, Schedule};
use feedflow_core::scenario::{load_scenario, MillingMode, Scenario};
use feedflow_core::{flowsheet, Error};
use serde::Serialize;

use crate::output::{write_charts, write_json, write_log, write_text, write_trajectory};
use crate::{CliError, CompareArgs, RunArgs};

const PERIODS: [f64; 3] = [1.0, 5.0, 10.0];

/// Resolved settings of one run, echoed into every JSON artifact.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub scenario: String,
    pub control: Control,
    pub milling: MillingMode,
    pub pattern: String,
    pub seed: Option<u64>,
    pub delta_min: f64,
    pub horizon_h: Option<f64>,
    pub expansion: ExpansionPolicy,
    pub search: Search,
}

struct Prepared {
    scenario: Scenario,
    pattern: FeedingPattern,
    config: RunConfig,
}

fn prepare(args: &RunArgs) -> Result<Prepared, CliError> {
    let mut sc = load_scenario(&args.scenario)?;
    if let Some(m) = args.milling {
        sc = sc.with_milling(m);
    }
    let delta = args.delta.unwrap_or(sc.period_min);
    if !PERIODS.contains(&delta) {
        return Err(CliError::Config(format!("--delta must be 1, 5 or 10 minutes (got {delta})")));
    }
    let sc = sc.with_period(delta)?;
    let parse = |p: &str| {
        FeedingPattern::parse(p, &sc.levels).map_err(|e| Error::Parse {
            file: None,
            line: None,
            message: e.to_string(),
        })
    };
    let pattern = match (&args.pattern, args.seed) {
        (Some(p), seed) => match (parse(p)?, seed) {
            (FeedingPattern::Random { .. }, Some(seed)) => FeedingPattern::Random { seed },
            (FeedingPattern::Blocked { .. }, Some(_)) => {
                return Err(CliError::Config("--seed needs a random pattern".into()))
            }
            (p, None) => p,
        },
        (None, Some(seed)) => FeedingPattern::Random { seed },
        (None, None) => sc
            .default_pattern
            .clone()
            .ok_or_else(|| CliError::Config("the scenario has no default pattern; pass --pattern".into()))?,
    };
    pattern.check_counts(&sc)?;
    if let Some(h) = args.horizon {
        if !(h > 0.0) || !h.is_finite() {
            return Err(CliError::Config("--horizon must be a positive number of hours".into()));
        }
    }
    let config = RunConfig {
        scenario: args.scenario.display().to_string(),
        control: args.control,
        milling: sc.milling,
        pattern: pattern.display(&sc.levels),
        seed: pattern.seed(),
        delta_min: delta,
        horizon_h: args.horizon,
        expansion: args.expansion,
        search: if args.bisect { Search::Bisect } else { Search::Decrement },
    };
    Ok(Prepared {
        scenario: sc,
        pattern,
        config,
    })
}

fn out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Leaves the reason of a failed run next to the artifacts it would have made.
fn record_failure<T>(dir: &Path, result: Result<T, Error>) -> Result<T, CliError> {
    result.map_err(|e| {
        if matches!(e, Error::Infeasible(_) | Error::Unbounded(_) | Error::SolverLimit(_)) {
            let _ = write_text(&dir.join("reason.txt"), &format!("{e}\n"));
        }
        CliError::Core(e)
    })
}

fn export_models(dir: &Path, sc: &Scenario, schedule: &Schedule, control: Control, ks: &[f64]) -> Result<(), CliError> {
    match control {
        Control::Bffpc => {
            let (m, _) = formulations::build_bffpc(sc, schedule, schedule.horizon())?;
            mps::write_files(&m, &dir.join("bffpc.mps")).map_err(Error::from)?;
        }
        Control::Hpc => {
            for &k in ks {
                let (m, _) = formulations::build_hpc(sc, schedule, schedule.horizon(), k)?;
                mps::write_files(&m, &dir.join(format!("hpc_k{k:.1}.mps"))).map_err(Error::from)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct KpiFile<'a> {
    config: &'a RunConfig,
    kpis: &'a KpiReport,
    candidates: &'a [Candidate],
}

fn write_run(dir: &Path, p: &Prepared, tr: &Trajectory, candidates: &[Candidate]) -> Result<KpiReport, CliError> {
    let kpis = metrics::kpis(tr, &p.scenario);
    write_trajectory(&dir.join("trajectory.csv"), tr, &p.scenario.levels)?;
    write_json(
        &dir.join("kpis.json"),
        &KpiFile {
            config: &p.config,
            kpis: &kpis,
            candidates,
        },
    )?;
    write_charts(dir, &[("", tr)])?;
    Ok(kpis)
}

fn summary(k: &KpiReport) -> String {
    format!(
        "{} {}: {:.2} h, k* = {}, feed {:.4} dry Mg/h, CoV {}, cost {:.2} $/dry Mg",
        k.control,
        k.milling.label(),
        k.min_time_hours,
        k.expansion,
        k.average_feed,
        if k.cov_defined {
            format!("{:.4}", k.coefficient_of_variation)
        } else {
            "undefined".into()
        },
        k.cost_per_dry_mg
    )
}

pub fn validate(path: &Path) -> Result<(), CliError> {
    let sc = load_scenario(path)?;
    let diags = flowsheet::validate_graph(&sc.graph);
    for d in &diags {
        println!("{d}");
    }
    if !diags.is_empty() {
        return Err(Error::Graph(diags).into());
    }
    println!(
        "{}: {} units, {} bales ({:.2} dry Mg), milling {}",
        sc.name,
        sc.graph.len(),
        sc.bale.total_count(),
        sc.bale.total_mass(),
        sc.milling.label()
    );
    for s in 0..sc.levels.len() {
        println!(
            "  {}: {} bales, system capacity {:.3} dry Mg/h",
            sc.levels.name(s),
            sc.bale.count[s],
            sc.system_capacity(s)
        );
    }
    Ok(())
}

fn run_solve(args: &RunArgs, dir: &Path) -> Result<(Scenario, Trajectory, KpiReport), CliError> {
    let p = prepare(args)?;
    out_dir(dir)?;
    let sc = &p.scenario;
    let state = mintime::initial_horizon(sc, &p.pattern)?;
    let budgets: Vec<f64> = match args.horizon {
        Some(h) => state.budgets().iter().map(|b| b * h / state.total_hours()).collect(),
        None => state.budgets().to_vec(),
    };
    let schedule = expand_pattern(sc, &p.pattern, &budgets)?;
    if args.export_mps {
        export_models(dir, sc, &schedule, args.control, &args.expansion.options(sc))?;
    }
    let sol = record_failure(
        dir,
        formulations::solve(sc, &schedule, args.control, args.expansion, &SolverOptions::from_env()),
    )?;
    let kpis = write_run(dir, &p, &sol.trajectory, &sol.candidates)?;
    Ok((p.scenario, sol.trajectory, kpis))
}

#[derive(Serialize)]
struct MinTimeFile<'a> {
    config: &'a RunConfig,
    hours: f64,
    periods: usize,
    level_periods: &'a [usize],
    expansion: f64,
    initial_h: &'a [f64],
    refined_h: &'a [f64],
    max_processed: &'a [f64],
    candidates: &'a [Candidate],
}

fn run_mintime(args: &RunArgs, dir: &Path) -> Result<(Scenario, Trajectory, KpiReport), CliError> {
    let p = prepare(args)?;
    out_dir(dir)?;
    let sc = &p.scenario;
    let mut opts = MinTimeOptions::new(args.control);
    opts.policy = args.expansion;
    opts.search = p.config.search;
    let r = record_failure(dir, mintime::min_time(sc, &p.pattern, &opts))?;
    if args.export_mps {
        export_models(dir, sc, &r.schedule, args.control, &[r.expansion])?;
    }
    write_log(&dir.join("log.csv"), r.state.log(), &sc.levels)?;
    write_json(
        &dir.join("mintime.json"),
        &MinTimeFile {
            config: &p.config,
            hours: r.hours,
            periods: r.periods,
            level_periods: &r.level_periods,
            expansion: r.expansion,
            initial_h: &r.initial,
            refined_h: &r.refined,
            max_processed: &r.max_processed,
            candidates: &r.candidates,
        },
    )?;
    let kpis = write_run(dir, &p, &r.trajectory, &r.candidates)?;
    Ok((p.scenario, r.trajectory, kpis))
}

pub fn solve(args: &RunArgs) -> Result<(), CliError> {
    let (_, _, k) = run_solve(args, &args.out)?;
    println!("{}", summary(&k));
    Ok(())
}

pub fn mintime(args: &RunArgs) -> Result<(), CliError> {
    let (_, _, k) = run_mintime(args, &args.out)?;
    println!("T* = {:.2} h", k.min_time_hours);
    println!("{}", summary(&k));
    Ok(())
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let a = &args.a;
    let mut b = a.clone();
    if let Some(s) = &args.scenario_b {
        b.scenario = s.clone();
    }
    b.control = args.control_b.unwrap_or(a.control);
    b.milling = args.milling_b.or(a.milling);
    b.expansion = args.expansion_b.unwrap_or(a.expansion);
    if args.pattern_b.is_some() {
        b.pattern = args.pattern_b.clone();
    }
    if args.seed_b.is_some() {
        b.seed = args.seed_b;
    }
    out_dir(&a.out)?;
    let run = |r: &RunArgs, dir: &Path| {
        if args.mintime {
            run_mintime(r, dir)
        } else {
            run_solve(r, dir)
        }
    };
    let (sa, ta, ka) = run(a, &a.out.join("a"))?;
    let (sb, tb, kb) = run(&b, &a.out.join("b"))?;
    if sa.name != sb.name {
        return Err(CliError::Config(format!("scenario mismatch: {} vs {}", sa.name, sb.name)));
    }
    let report = metrics::compare(&ka, &kb);
    write_json(&a.out.join("comparison.json"), &report)?;
    let table = report.to_table();
    write_text(&a.out.join("comparison.txt"), &table)?;
    write_charts(&a.out, &[("A", &ta), ("B", &tb)])?;
    println!("A: {}", summary(&ka));
    println!("B: {}", summary(&kb));
    print!("{table}");
    Ok(())
}
