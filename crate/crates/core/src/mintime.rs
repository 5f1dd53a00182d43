//! Minimum time to process a fixed set of bales.
//!
//! The search starts from the time each moisture level needs at the line's
//! bottleneck capacity ([`initial_horizon`]). An unlimited-supply solve over
//! that horizon shows how much more the line could take per level
//! ([`max_processable`]); the surplus, converted back to hours, is removed
//! ([`refine_horizon`]). From there [`min_time`] walks the total horizon one
//! period at a time, keeping the per-level shares fixed, until the exact
//! supply problem stops being feasible. Feasibility is monotone in the
//! horizon since every rate may idle at zero, which is what makes the
//! optional bisection valid.

use std::collections::HashMap;

use feedflow_lp::{self as lp, SolverOptions, Status};
use serde::Serialize;

use crate::formulations::{
    self, build_model, extract_trajectory, Candidate, Control, ExpansionPolicy, ModelSpec, Supply,
    Trajectory,
};
use crate::pattern::{expand_pattern, expand_pattern_periods, FeedingPattern, Schedule};
use crate::scenario::Scenario;
use crate::Error;

/// Which solve produced a log entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Unlimited supply solve behind [`refine_horizon`].
    MaxProcessable,
    /// Exact supply feasibility check.
    Probe,
    /// Optimization at the minimum horizon.
    Final,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::MaxProcessable => "max_processable",
            Stage::Probe => "probe",
            Stage::Final => "final",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogEntry {
    pub iter: usize,
    pub stage: Stage,
    /// Per-level budgets in hours.
    pub budgets: Vec<f64>,
    pub feasible: bool,
    pub objective: Option<f64>,
}

/// Per-level time budgets plus the log of every solve made so far.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonState {
    budgets: Vec<f64>,
    log: Vec<LogEntry>,
}

impl HorizonState {
    pub fn new(budgets: Vec<f64>) -> Result<Self, Error> {
        if budgets.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::invalid("budget", "finite and >= 0"));
        }
        Ok(HorizonState {
            budgets,
            log: Vec::new(),
        })
    }

    /// Per-level budgets `T_s` in hours.
    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    /// Total horizon `T = Σ T_s` in hours.
    pub fn total_hours(&self) -> f64 {
        self.budgets.iter().sum()
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// Appends an entry; the log is never rewritten.
    pub fn record(&mut self, stage: Stage, budgets: Vec<f64>, feasible: bool, objective: Option<f64>) {
        let iter = self.log.len();
        self.log.push(LogEntry {
            iter,
            stage,
            budgets,
            feasible,
            objective,
        });
    }
}

/// `T_s = q_s n_s / capacity_s` for every level.
pub fn initial_horizon(scenario: &Scenario, pattern: &FeedingPattern) -> Result<HorizonState, Error> {
    pattern.check_counts(scenario)?;
    initial_horizon_for(scenario, &scenario.bale.required_mass())
}

/// [`initial_horizon`] for explicit per-level masses in dry Mg.
pub fn initial_horizon_for(scenario: &Scenario, mass: &[f64]) -> Result<HorizonState, Error> {
    let n = scenario.levels.len();
    if mass.len() != n {
        return Err(Error::invalid("mass", "one entry per moisture level"));
    }
    let mut budgets = Vec::with_capacity(n);
    for (s, &m) in mass.iter().enumerate() {
        let cap = scenario.system_capacity(s);
        if m == 0.0 {
            budgets.push(0.0);
            continue;
        }
        if !(cap > 0.0) {
            return Err(Error::invalid(
                format!("system capacity of {}", scenario.levels.name(s)),
                "> 0 for a level with bales",
            ));
        }
        budgets.push(m / cap);
    }
    HorizonState::new(budgets)
}

/// `T_s ← T_s − (max_s − q_s n_s) / capacity_s`, using the scenario's bale
/// masses.
pub fn refine_horizon(
    scenario: &Scenario,
    state: &HorizonState,
    max_processed: &[f64],
) -> Result<HorizonState, Error> {
    refine_horizon_for(scenario, state, max_processed, &scenario.bale.required_mass())
}

/// [`refine_horizon`] for explicit per-level masses in dry Mg.
pub fn refine_horizon_for(
    scenario: &Scenario,
    state: &HorizonState,
    max_processed: &[f64],
    mass: &[f64],
) -> Result<HorizonState, Error> {
    let n = scenario.levels.len();
    if max_processed.len() != n || mass.len() != n || state.budgets.len() != n {
        return Err(Error::invalid("max_processed", "one entry per moisture level"));
    }
    let mut next = state.clone();
    for s in 0..n {
        if mass[s] == 0.0 {
            continue;
        }
        let extra = max_processed[s] - mass[s];
        // Solver round-off on a tight horizon is not a real shortfall.
        let extra = if extra < 0.0 && extra > -1e-7 * mass[s].max(1.0) {
            0.0
        } else {
            extra
        };
        if extra < 0.0 {
            return Err(Error::invalid(
                format!("max_processed.{}", scenario.levels.name(s)),
                format!(">= required mass {:.6} (got {:.6})", mass[s], max_processed[s]),
            ));
        }
        let delta = extra / scenario.system_capacity(s);
        next.budgets[s] = (next.budgets[s] - delta).max(0.0);
    }
    Ok(next)
}

/// Largest expansion the policy allows; probes use it because larger
/// storage only relaxes the model.
fn probe_expansion(control: Control, policy: ExpansionPolicy, scenario: &Scenario) -> f64 {
    match control {
        Control::Bffpc => 0.0,
        Control::Hpc => policy.options(scenario).last().copied().unwrap_or(0.0),
    }
}

fn level_totals(trajectory: &Trajectory, num_levels: usize) -> Vec<f64> {
    let mut out = vec![0.0; num_levels];
    for (x, &s) in trajectory.infeed.iter().zip(&trajectory.active) {
        out[s] += x;
    }
    out
}

/// Dry Mg per level the line takes in over `schedule` when supply is
/// unlimited: the formulation with the bale constraint relaxed to `>=`,
/// plus `infeed_bonus` per dry Mg of in-feed so that spare capacity is used.
pub fn max_processable(
    scenario: &Scenario,
    schedule: &Schedule,
    control: Control,
    expansion: f64,
    infeed_bonus: f64,
    options: &SolverOptions,
) -> Result<(Vec<f64>, Trajectory), Error> {
    let spec = ModelSpec {
        control,
        expansion,
        supply: Supply::AtLeast,
        infeed_bonus,
    };
    let (model, index) = build_model(scenario, schedule, &spec)?;
    let sol = lp::solve(&model, options)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => {
            return Err(Error::Infeasible(format!(
                "unlimited supply model over {} periods ({:.2} h)",
                schedule.horizon(),
                schedule.hours()
            )))
        }
        Status::Unbounded => return Err(Error::Unbounded("unlimited supply model".into())),
        Status::IterationLimit => return Err(Error::SolverLimit("unlimited supply model".into())),
    }
    let trajectory = extract_trajectory(&sol, &index)?;
    Ok((level_totals(&trajectory, scenario.levels.len()), trajectory))
}

/// How the horizon is walked once the refined starting point is known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Search {
    /// One period at a time.
    Decrement,
    /// Galloping bracket, then binary search.
    Bisect,
}

#[derive(Clone, Debug)]
pub struct MinTimeOptions {
    pub control: Control,
    pub policy: ExpansionPolicy,
    pub search: Search,
    /// Re-run the unlimited supply solve and refinement until the surplus
    /// is below one period instead of refining once.
    pub recompute: bool,
    /// Upper bound on refinement rounds when `recompute` is set.
    pub max_rounds: usize,
    pub infeed_bonus: f64,
    /// After the proportional search, shrink each level on its own while
    /// the problem stays feasible.
    pub tighten: bool,
    pub solver: SolverOptions,
}

impl MinTimeOptions {
    pub fn new(control: Control) -> Self {
        MinTimeOptions {
            control,
            policy: ExpansionPolicy::Optimized,
            search: Search::Decrement,
            recompute: false,
            max_rounds: 8,
            infeed_bonus: 1e-3,
            tighten: true,
            solver: SolverOptions::from_env(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinTimeResult {
    /// Minimum horizon in hours (whole periods).
    pub hours: f64,
    pub periods: usize,
    /// Periods per level at the minimum.
    pub level_periods: Vec<usize>,
    pub schedule: Schedule,
    /// Optimal trajectory at the minimum horizon.
    pub trajectory: Trajectory,
    pub expansion: f64,
    pub candidates: Vec<Candidate>,
    pub initial: Vec<f64>,
    pub refined: Vec<f64>,
    /// Per-level maximum from the last unlimited supply solve.
    pub max_processed: Vec<f64>,
    pub state: HorizonState,
}

/// Splits `total` periods among levels in proportion to `weights` by
/// largest remainders. Every level with positive weight gets at least one.
pub fn allocate_periods(weights: &[f64], total: usize) -> Option<Vec<usize>> {
    let active: Vec<usize> = (0..weights.len()).filter(|&s| weights[s] > 0.0).collect();
    if total < active.len() {
        return None;
    }
    let sum: f64 = active.iter().map(|&s| weights[s]).sum();
    let mut out = vec![0usize; weights.len()];
    let mut rest = Vec::with_capacity(active.len());
    let mut used = 0usize;
    for &s in &active {
        let ideal = total as f64 * weights[s] / sum;
        let base = (ideal.floor() as usize).max(1);
        out[s] = base;
        used += base;
        rest.push((ideal - ideal.floor(), s));
    }
    rest.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut k = 0;
    while used < total {
        out[rest[k % rest.len()].1] += 1;
        used += 1;
        k += 1;
    }
    while used > total {
        // Minimum-one floors pushed the sum over; take from the largest.
        let s = *active.iter().max_by_key(|&&s| out[s]).unwrap();
        out[s] -= 1;
        used -= 1;
    }
    Some(out)
}

struct Prober<'a> {
    scenario: &'a Scenario,
    pattern: &'a FeedingPattern,
    opts: &'a MinTimeOptions,
    expansion: f64,
    state: HorizonState,
    seen: HashMap<Vec<usize>, bool>,
}

impl Prober<'_> {
    fn budgets_hours(&self, periods: &[usize]) -> Vec<f64> {
        let h = self.scenario.period_min / 60.0;
        periods.iter().map(|&p| p as f64 * h).collect()
    }

    /// Exact supply feasibility with `periods` per level.
    fn feasible(&mut self, periods: &[usize]) -> Result<bool, Error> {
        if let Some(&ok) = self.seen.get(periods) {
            return Ok(ok);
        }
        let schedule = expand_pattern_periods(self.scenario, self.pattern, periods)?;
        let spec = ModelSpec {
            expansion: self.expansion,
            ..ModelSpec::new(self.opts.control)
        };
        let (model, _) = build_model(self.scenario, &schedule, &spec)?;
        let solver = SolverOptions {
            feasibility_only: true,
            ..self.opts.solver.clone()
        };
        let sol = lp::solve(&model, &solver)?;
        let ok = match sol.status {
            Status::Optimal | Status::Unbounded => true,
            Status::Infeasible => false,
            Status::IterationLimit => {
                return Err(Error::SolverLimit(format!("feasibility probe at {periods:?} periods")))
            }
        };
        log::debug!("probe {periods:?}: feasible {ok}");
        let budgets = self.budgets_hours(periods);
        self.state.record(Stage::Probe, budgets, ok, None);
        self.seen.insert(periods.to_vec(), ok);
        Ok(ok)
    }
}

/// Smallest `t` in `[min, max]` with `feasible(t)`, assuming feasibility is
/// monotone in `t`, searched from `start`. Downward moves step by one when
/// `linear` is set and gallop otherwise; upward moves always gallop. The
/// bracket found by galloping is closed by bisection.
fn smallest_feasible(
    start: usize,
    min: usize,
    max: usize,
    linear: bool,
    mut feasible: impl FnMut(usize) -> Result<bool, Error>,
) -> Result<Option<usize>, Error> {
    let start = start.clamp(min, max);
    let (mut lo, mut hi) = if feasible(start)? {
        // lo is infeasible (or below the range), hi feasible.
        let mut hi = start;
        let mut step = 1;
        loop {
            if hi == min {
                return Ok(Some(hi));
            }
            let probe = hi.saturating_sub(step).max(min);
            if feasible(probe)? {
                hi = probe;
                if !linear {
                    step *= 2;
                }
            } else {
                break (probe, hi);
            }
        }
    } else {
        let mut lo = start;
        let mut step = 1;
        loop {
            if lo == max {
                return Ok(None);
            }
            let probe = (lo + step).min(max);
            if feasible(probe)? {
                break (lo, probe);
            }
            lo = probe;
            step *= 2;
        }
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Shortest horizon, in whole periods, over which every bale is processed.
pub fn min_time(
    scenario: &Scenario,
    pattern: &FeedingPattern,
    opts: &MinTimeOptions,
) -> Result<MinTimeResult, Error> {
    let mut state = initial_horizon(scenario, pattern)?;
    let initial = state.budgets.clone();
    let expansion = probe_expansion(opts.control, opts.policy, scenario);
    let required = scenario.bale.required_mass();
    let n = scenario.levels.len();

    let rounds = if opts.recompute { opts.max_rounds.max(1) } else { 1 };
    let mut max_processed = vec![0.0; n];
    for round in 0..rounds {
        let schedule = expand_pattern(scenario, pattern, &state.budgets)?;
        let budgets = schedule_budgets(&schedule, n);
        let (maxes, traj) = match max_processable(
            scenario,
            &schedule,
            opts.control,
            expansion,
            opts.infeed_bonus,
            &opts.solver,
        ) {
            Ok(r) => r,
            Err(Error::Infeasible(msg)) => {
                state.record(Stage::MaxProcessable, budgets, false, None);
                let what = if round == 0 { "initial" } else { "refined" };
                return Err(Error::Infeasible(format!(
                    "{what} horizon {:?} h cannot take every bale: {msg}",
                    state.budgets
                )));
            }
            Err(e) => return Err(e),
        };
        state.record(Stage::MaxProcessable, budgets, true, Some(traj.objective));
        max_processed = maxes;
        let next = refine_horizon(scenario, &state, &max_processed)?;
        let step = scenario.period_min / 60.0;
        let moved = next
            .budgets
            .iter()
            .zip(&state.budgets)
            .any(|(a, b)| b - a >= step);
        state = next;
        if !moved {
            break;
        }
    }
    let refined = state.budgets.clone();

    let weights: Vec<f64> = (0..n)
        .map(|s| if required[s] > 0.0 { refined[s].max(1e-9) } else { 0.0 })
        .collect();
    let per_hour = scenario.periods_per_hour();
    let levels_with_bales = weights.iter().filter(|&&w| w > 0.0).count().max(1);
    let start = ((state.total_hours() * per_hour) - 1e-9).ceil() as usize;
    let initial_total: usize = initial
        .iter()
        .map(|&b| crate::pattern::periods_for(b, scenario.period_min))
        .sum();
    let cap = 4 * initial_total.max(start).max(levels_with_bales);

    let mut prober = Prober {
        scenario,
        pattern,
        opts,
        expansion,
        state,
        seen: HashMap::new(),
    };
    let linear = opts.search == Search::Decrement;
    let total = smallest_feasible(start, levels_with_bales, cap, linear, |t| {
        let periods = allocate_periods(&weights, t).expect("total covers every level");
        prober.feasible(&periods)
    })?
    .ok_or_else(|| Error::Infeasible(format!("no feasible horizon up to {cap} periods")))?;
    let mut periods = allocate_periods(&weights, total).expect("total covers every level");

    if opts.tighten {
        for _ in 0..3 {
            let mut changed = false;
            for s in 0..n {
                if weights[s] == 0.0 || periods[s] <= 1 {
                    continue;
                }
                let mut trial = periods.clone();
                let best = smallest_feasible(periods[s], 1, periods[s], false, |p| {
                    trial[s] = p;
                    prober.feasible(&trial)
                })?
                .expect("the current allocation is feasible");
                if best < periods[s] {
                    periods[s] = best;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    let best: usize = periods.iter().sum();
    let schedule = expand_pattern_periods(scenario, pattern, &periods)?;
    let solved = formulations::solve(scenario, &schedule, opts.control, opts.policy, &opts.solver)?;
    let budgets = prober.budgets_hours(&periods);
    let mut state = prober.state;
    state.record(Stage::Final, budgets, true, Some(solved.trajectory.objective));
    Ok(MinTimeResult {
        hours: best as f64 / per_hour,
        periods: best,
        level_periods: periods,
        schedule,
        trajectory: solved.trajectory,
        expansion: solved.expansion,
        candidates: solved.candidates,
        initial,
        refined,
        max_processed,
        state,
    })
}

fn schedule_budgets(schedule: &Schedule, n: usize) -> Vec<f64> {
    let h = schedule.period_min / 60.0;
    let mut per = schedule.periods_per_level();
    per.resize(n, 0);
    per.into_iter().map(|p| p as f64 * h).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_is_proportional_and_exact() {
        let p = allocate_periods(&[1.0, 2.0, 1.0], 8).unwrap();
        assert_eq!(p, vec![2, 4, 2]);
        let p = allocate_periods(&[4.62, 12.98, 9.04], 319).unwrap();
        assert_eq!(p.iter().sum::<usize>(), 319);
        assert_eq!(allocate_periods(&[1.0, 0.0, 1.0], 3).unwrap()[1], 0);
        assert!(allocate_periods(&[1.0, 1.0, 1.0], 2).is_none());
        assert_eq!(allocate_periods(&[100.0, 1e-9, 1e-9], 3).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn log_is_append_only() {
        let mut s = HorizonState::new(vec![1.0, 2.0]).unwrap();
        s.record(Stage::Probe, vec![1.0, 2.0], true, None);
        s.record(Stage::Probe, vec![0.5, 2.0], false, None);
        assert_eq!(s.log()[0].iter, 0);
        assert_eq!(s.log()[1].iter, 1);
        assert!((s.total_hours() - 3.0).abs() < 1e-12);
        assert!(HorizonState::new(vec![-1.0]).is_err());
    }
}
