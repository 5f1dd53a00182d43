//! Time-indexed linear programs of the pre-processing line.
//!
//! Both formulations share the mass balance of the equipment graph:
//!
//! * the bale in-feed `X_t = γ_t Y_t` enters the source unit;
//! * every unit passes on what its predecessors send it, reduced by its
//!   dry-matter loss and, behind a separator, by the bypass split;
//! * storage units keep per-moisture inventories `Ms[i,s,t]` that accrue the
//!   inflow of the active moisture and release `Xs[i,s,t]`;
//! * every unit's outflow is capped by its in-feed capacity for the active
//!   moisture and each level receives exactly its bale mass over the horizon.
//!
//! The throughput model maximizes the reactor feed `η Σ_t X_{term,t}`. The
//! hybrid model additionally penalizes feed changes `β⁺ + β⁻` and fixes one
//! storage expansion `k`; [`solve_hpc`] enumerates the options.
//!
//! Rates are stored per period: capacities in dry Mg/h are multiplied by
//! `Δ/60` when the model is built.

use std::fmt;

use feedflow_lp::{self as lp, LpModel, RowSense, Sense, SolverOptions, Solution, Status, Var};
use rayon::prelude::*;
use serde::Serialize;

use crate::flowsheet;
use crate::pattern::Schedule;
use crate::scenario::{MillingMode, Scenario};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    /// Feed-forward control: maximize throughput only.
    Bffpc,
    /// Hybrid control: smooth reactor feed and optional storage expansion.
    Hpc,
}

impl Control {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bffpc" => Some(Control::Bffpc),
            "hpc" => Some(Control::Hpc),
            _ => None,
        }
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Control::Bffpc => "bffpc",
            Control::Hpc => "hpc",
        })
    }
}

/// How the per-moisture bale mass enters the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Supply {
    /// Exactly `q_s n_s` per level.
    Exact,
    /// At least `q_s n_s` per level (unlimited supply).
    AtLeast,
}

/// Storage expansion options available to the hybrid model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionPolicy {
    /// No expansion, `Σ J_k = 0`.
    Fixed,
    /// Any option of the scenario.
    Optimized,
}

impl ExpansionPolicy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fixed" => Some(ExpansionPolicy::Fixed),
            "optimized" | "optimised" => Some(ExpansionPolicy::Optimized),
            _ => None,
        }
    }

    pub fn options(self, scenario: &Scenario) -> Vec<f64> {
        match self {
            ExpansionPolicy::Fixed => vec![0.0],
            ExpansionPolicy::Optimized => scenario.econ.expansion_options.clone(),
        }
    }
}

impl fmt::Display for ExpansionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpansionPolicy::Fixed => "fixed",
            ExpansionPolicy::Optimized => "optimized",
        })
    }
}

/// Everything that distinguishes one model instance from another.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub control: Control,
    /// Storage expansion fraction (hybrid model only).
    pub expansion: f64,
    pub supply: Supply,
    /// Extra objective weight per dry Mg of bale in-feed. Zero for the
    /// formulations as such; a small positive value makes an unlimited
    /// supply model feed as much as the line can take.
    pub infeed_bonus: f64,
}

impl ModelSpec {
    pub fn new(control: Control) -> Self {
        ModelSpec {
            control,
            expansion: 0.0,
            supply: Supply::Exact,
            infeed_bonus: 0.0,
        }
    }
}

/// Column layout of a built model. Columns are grouped period by period:
/// `X`, `Y`, one `Xo` per unit, `Xs` and `Ms` per storage unit and level,
/// then `bp`, `bm` for the hybrid model.
#[derive(Clone, Debug, PartialEq)]
pub struct VariableIndex {
    pub horizon: usize,
    pub num_levels: usize,
    pub equipment_ids: Vec<String>,
    /// Equipment indices of the storage units.
    pub storage: Vec<usize>,
    pub terminal: usize,
    pub spec: ModelSpec,
    pub milling: MillingMode,
    pub period_min: f64,
    pub active: Vec<usize>,
    pub seed: Option<u64>,
    /// Constant part of the objective (expansion operating cost, negative).
    pub objective_offset: f64,
    pub pellet_price: f64,
    stride: usize,
}

impl VariableIndex {
    fn new(scenario: &Scenario, schedule: &Schedule, spec: ModelSpec) -> Self {
        let g = &scenario.graph;
        let storage = g.storage_units();
        let beta = if spec.control == Control::Hpc { 2 } else { 0 };
        VariableIndex {
            horizon: schedule.horizon(),
            num_levels: scenario.levels.len(),
            equipment_ids: g.equipment.iter().map(|e| e.id.clone()).collect(),
            terminal: g.terminal(),
            stride: 2 + g.len() + 2 * storage.len() * scenario.levels.len() + beta,
            storage,
            spec,
            milling: scenario.milling,
            period_min: schedule.period_min,
            active: schedule.active.clone(),
            seed: schedule.seed,
            objective_offset: 0.0,
            pellet_price: scenario.econ.pellet_price,
        }
    }

    fn base(&self, t: usize) -> usize {
        t * self.stride
    }

    pub fn num_columns(&self) -> usize {
        self.horizon * self.stride
    }

    /// System in-feed `X_t`.
    pub fn x(&self, t: usize) -> Var {
        Var(self.base(t))
    }

    /// Bale conveyor speed `Y_t`.
    pub fn y(&self, t: usize) -> Var {
        Var(self.base(t) + 1)
    }

    /// Outflow `X_it` of unit `i`.
    pub fn xo(&self, i: usize, t: usize) -> Var {
        Var(self.base(t) + 2 + i)
    }

    /// Outflow `Xs[i,s,t]` of level `s` from the `m`-th storage unit.
    pub fn xs(&self, m: usize, s: usize, t: usize) -> Var {
        Var(self.base(t) + 2 + self.equipment_ids.len() + m * self.num_levels + s)
    }

    /// Inventory `Ms[i,s,t]` of level `s` in the `m`-th storage unit.
    pub fn ms(&self, m: usize, s: usize, t: usize) -> Var {
        let nm = self.storage.len() * self.num_levels;
        Var(self.base(t) + 2 + self.equipment_ids.len() + nm + m * self.num_levels + s)
    }

    pub fn has_beta(&self) -> bool {
        self.spec.control == Control::Hpc
    }

    /// Feed increase `β⁺_t` (hybrid model only).
    pub fn bp(&self, t: usize) -> Option<Var> {
        self.has_beta().then(|| Var(self.base(t) + self.stride - 2))
    }

    /// Feed decrease `β⁻_t` (hybrid model only).
    pub fn bm(&self, t: usize) -> Option<Var> {
        self.has_beta().then(|| Var(self.base(t) + self.stride - 1))
    }
}

fn check_horizon(schedule: &Schedule, horizon: usize) -> Result<(), Error> {
    if schedule.horizon() != horizon {
        return Err(Error::invalid(
            "horizon",
            format!("schedule covers {} periods, model asked for {horizon}", schedule.horizon()),
        ));
    }
    Ok(())
}

/// Feed-forward model: maximize the reactor feed with fixed storage capacities.
pub fn build_bffpc(
    scenario: &Scenario,
    schedule: &Schedule,
    horizon: usize,
) -> Result<(LpModel, VariableIndex), Error> {
    check_horizon(schedule, horizon)?;
    build_model(scenario, schedule, &ModelSpec::new(Control::Bffpc))
}

/// Hybrid model for one fixed expansion `k`.
pub fn build_hpc(
    scenario: &Scenario,
    schedule: &Schedule,
    horizon: usize,
    k: f64,
) -> Result<(LpModel, VariableIndex), Error> {
    check_horizon(schedule, horizon)?;
    if !scenario.econ.expansion_options.contains(&k) {
        return Err(Error::invalid("expansion", format!("k in the expansion options (got {k})")));
    }
    build_model(
        scenario,
        schedule,
        &ModelSpec {
            expansion: k,
            ..ModelSpec::new(Control::Hpc)
        },
    )
}

/// Operating cost of the storage units over the schedule at expansion `k`,
/// in dollars: `Σ_i Σ_t c_{i,s(t)} (1+k)^0.6 Δ/60`.
pub fn expansion_cost(scenario: &Scenario, schedule: &Schedule, k: f64) -> f64 {
    let factor = scenario.econ.expansion_factor(k);
    let hours = schedule.period_min / 60.0;
    let g = &scenario.graph;
    g.storage_units()
        .into_iter()
        .map(|i| {
            schedule
                .active
                .iter()
                .map(|&s| g.equipment[i].unit_cost[s] * factor * hours)
                .sum::<f64>()
        })
        .sum()
}

/// Builds either formulation as described by `spec`.
pub fn build_model(
    scenario: &Scenario,
    schedule: &Schedule,
    spec: &ModelSpec,
) -> Result<(LpModel, VariableIndex), Error> {
    let g = &scenario.graph;
    if g.topological_order().is_err() || g.sources().len() != 1 || g.terminals().len() != 1 {
        return Err(Error::Graph(flowsheet::validate_graph(g)));
    }
    if schedule.num_levels != scenario.levels.len() {
        return Err(Error::invalid("schedule", "levels match the scenario"));
    }
    let mut idx = VariableIndex::new(scenario, schedule, *spec);
    let horizon = schedule.horizon();
    let nl = scenario.levels.len();
    let hpc = spec.control == Control::Hpc;
    let name = format!("{}_{}", spec.control, scenario.name);
    let mut m = LpModel::new(name, Sense::Maximize);
    if horizon == 0 {
        return Ok((m, idx));
    }

    let per_period = schedule.period_min / 60.0;
    let eta = scenario.econ.pellet_price;
    // α is quoted per (dry Mg/min) of change; β is in dry Mg per period.
    let penalty = scenario.econ.adjustment_penalty / schedule.period_min;
    let scale = if hpc { 1.0 + spec.expansion } else { 1.0 };
    let ids = &idx.equipment_ids;
    let levels = &scenario.levels;
    let source = g.source();
    let preds = g.predecessor_indices();
    let storage = idx.storage.clone();
    let densities: Vec<Vec<(usize, f64)>> = (0..nl)
        .map(|s| flowsheet::storage_densities(g, scenario.bale.density[s], s))
        .collect();

    for t in 0..horizon {
        let s = schedule.level_at(t);
        let tt = t + 1;
        let v = m.add_var(format!("X[{tt}]"), 0.0, f64::INFINITY, spec.infeed_bonus);
        debug_assert_eq!(v, idx.x(t));
        m.add_var(format!("Y[{tt}]"), 0.0, f64::INFINITY, 0.0);
        for (i, e) in g.equipment.iter().enumerate() {
            let obj = if i == idx.terminal { eta } else { 0.0 };
            m.add_var(format!("Xo[{},{tt}]", e.id), 0.0, e.max_infeed[s] * per_period, obj);
        }
        for &i in &storage {
            for l in 0..nl {
                m.add_var(format!("Xs[{},{},{tt}]", ids[i], levels.name(l)), 0.0, f64::INFINITY, 0.0);
            }
        }
        for &i in &storage {
            for l in 0..nl {
                m.add_var(format!("Ms[{},{},{tt}]", ids[i], levels.name(l)), 0.0, f64::INFINITY, 0.0);
            }
        }
        if hpc {
            m.add_var(format!("bp[{tt}]"), 0.0, f64::INFINITY, -penalty);
            m.add_var(format!("bm[{tt}]"), 0.0, f64::INFINITY, -penalty);
        }
    }
    debug_assert_eq!(m.num_vars(), idx.num_columns());

    for t in 0..horizon {
        let s = schedule.level_at(t);
        let tt = t + 1;
        m.add_row(
            format!("infeed[{tt}]"),
            [(idx.x(t), 1.0), (idx.y(t), -scenario.gamma_level(s))],
            RowSense::Eq,
            0.0,
        );
        for (i, e) in g.equipment.iter().enumerate() {
            let inflow = |m_: &mut Vec<(Var, f64)>, sign: f64| {
                if i == source {
                    m_.push((idx.x(t), sign * (1.0 - e.dry_matter_loss)));
                }
                for &p in &preds[i] {
                    m_.push((idx.xo(p, t), sign * g.flow_factor(p, i, s)));
                }
            };
            match storage.iter().position(|&u| u == i) {
                None => {
                    let mut coefs = vec![(idx.xo(i, t), 1.0)];
                    inflow(&mut coefs, -1.0);
                    m.add_row(format!("flow[{},{tt}]", e.id), coefs, RowSense::Eq, 0.0);
                }
                Some(pos) => {
                    for l in 0..nl {
                        let mut coefs = vec![(idx.ms(pos, l, t), 1.0), (idx.xs(pos, l, t), 1.0)];
                        if t > 0 {
                            coefs.push((idx.ms(pos, l, t - 1), -1.0));
                        }
                        if l == s {
                            inflow(&mut coefs, -1.0);
                        }
                        m.add_row(
                            format!("inv[{},{},{tt}]", e.id, levels.name(l)),
                            coefs,
                            RowSense::Eq,
                            0.0,
                        );
                    }
                    let mut coefs = vec![(idx.xo(i, t), 1.0)];
                    coefs.extend((0..nl).map(|l| (idx.xs(pos, l, t), -1.0)));
                    m.add_row(format!("out[{},{tt}]", e.id), coefs, RowSense::Eq, 0.0);
                    m.add_row(
                        format!("mcap[{},{tt}]", e.id),
                        (0..nl).map(|l| (idx.ms(pos, l, t), 1.0)),
                        RowSense::Le,
                        e.mass_capacity * scale,
                    );
                    m.add_row(
                        format!("vcap[{},{tt}]", e.id),
                        (0..nl).map(|l| {
                            let d = densities[l].iter().find(|(u, _)| *u == i).map_or(1.0, |x| x.1);
                            (idx.ms(pos, l, t), 1.0 / d)
                        }),
                        RowSense::Le,
                        e.volume_capacity * scale,
                    );
                }
            }
        }
        if hpc && t > 0 {
            // No link at t = 1: the feed before the horizon is undefined, so
            // the start-up level is free.
            m.add_row(
                format!("beta[{tt}]"),
                [
                    (idx.bp(t).unwrap(), 1.0),
                    (idx.bm(t).unwrap(), -1.0),
                    (idx.xo(idx.terminal, t), -1.0),
                    (idx.xo(idx.terminal, t - 1), 1.0),
                ],
                RowSense::Eq,
                0.0,
            );
        }
    }

    let required = scenario.bale.required_mass();
    let sense = match spec.supply {
        Supply::Exact => RowSense::Eq,
        Supply::AtLeast => RowSense::Ge,
    };
    for l in 0..nl {
        let coefs: Vec<(Var, f64)> = (0..horizon)
            .filter(|&t| schedule.level_at(t) == l)
            .map(|t| (idx.x(t), 1.0))
            .collect();
        if coefs.is_empty() && required[l] == 0.0 {
            continue;
        }
        m.add_row(format!("alloc[{}]", levels.name(l)), coefs, sense, required[l]);
    }

    if hpc {
        m.objective_offset = -expansion_cost(scenario, schedule, spec.expansion);
        idx.objective_offset = m.objective_offset;
    }
    Ok((m, idx))
}

/// Optimal time series of one solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub control: Control,
    pub milling: MillingMode,
    pub period_min: f64,
    pub horizon: usize,
    /// Active moisture level of every period.
    pub active: Vec<usize>,
    pub equipment_ids: Vec<String>,
    /// Equipment indices of the storage units.
    pub storage: Vec<usize>,
    pub terminal: usize,
    /// In-feed `X_t`, dry Mg per period.
    pub infeed: Vec<f64>,
    /// Conveyor speed `Y_t`, m per period.
    pub speed: Vec<f64>,
    /// Outflow `X_it` per unit, dry Mg per period.
    pub outflow: Vec<Vec<f64>>,
    /// Storage outflow per storage unit and level, dry Mg per period.
    pub storage_outflow: Vec<Vec<Vec<f64>>>,
    /// Inventory per storage unit and level, dry Mg.
    pub inventory: Vec<Vec<Vec<f64>>>,
    pub beta_plus: Vec<f64>,
    pub beta_minus: Vec<f64>,
    /// Chosen storage expansion `k*` (0 for the feed-forward model).
    pub expansion: f64,
    /// Objective value including the constant expansion cost.
    pub objective: f64,
    /// Throughput term `η Σ_t X_{term,t}`.
    pub throughput_value: f64,
    pub iterations: usize,
    pub seed: Option<u64>,
}

impl Trajectory {
    /// Reactor feed `X_{term,t}`, dry Mg per period.
    pub fn reactor_feed(&self) -> &[f64] {
        &self.outflow[self.terminal]
    }

    /// Converts a per-period quantity to dry Mg/h.
    pub fn per_hour(&self, v: f64) -> f64 {
        v * 60.0 / self.period_min
    }

    pub fn hours(&self) -> f64 {
        self.horizon as f64 * self.period_min / 60.0
    }

    /// Total inventory of storage unit `m` (position among storage units) at `t`.
    pub fn total_inventory(&self, m: usize, t: usize) -> f64 {
        self.inventory[m].iter().map(|lv| lv[t]).sum()
    }

    pub fn total_infeed(&self) -> f64 {
        self.infeed.iter().sum()
    }
}

/// Reads the optimal time series out of a solution.
pub fn extract_trajectory(solution: &Solution, index: &VariableIndex) -> Result<Trajectory, Error> {
    match solution.status {
        Status::Optimal => {}
        status => return Err(status_error(status, "cannot extract a trajectory")),
    }
    if solution.values.len() != index.num_columns() {
        return Err(Error::invalid("solution", "one value per model column"));
    }
    let v = |var: Var| solution.values[var.0].max(0.0);
    let h = index.horizon;
    let series = |f: &dyn Fn(usize) -> Var| (0..h).map(|t| v(f(t))).collect::<Vec<f64>>();
    let ns = index.storage.len();
    let nl = index.num_levels;
    let terminal_feed = series(&|t| index.xo(index.terminal, t));
    let delivered: f64 = terminal_feed.iter().sum();
    Ok(Trajectory {
        control: index.spec.control,
        milling: index.milling,
        period_min: index.period_min,
        horizon: h,
        active: index.active.clone(),
        equipment_ids: index.equipment_ids.clone(),
        storage: index.storage.clone(),
        terminal: index.terminal,
        infeed: series(&|t| index.x(t)),
        speed: series(&|t| index.y(t)),
        outflow: (0..index.equipment_ids.len()).map(|i| series(&|t| index.xo(i, t))).collect(),
        storage_outflow: (0..ns)
            .map(|m| (0..nl).map(|s| series(&|t| index.xs(m, s, t))).collect())
            .collect(),
        inventory: (0..ns)
            .map(|m| (0..nl).map(|s| series(&|t| index.ms(m, s, t))).collect())
            .collect(),
        beta_plus: match index.has_beta() {
            true => series(&|t| index.bp(t).unwrap()),
            false => vec![0.0; h],
        },
        beta_minus: match index.has_beta() {
            true => series(&|t| index.bm(t).unwrap()),
            false => vec![0.0; h],
        },
        expansion: if index.spec.control == Control::Hpc {
            index.spec.expansion
        } else {
            0.0
        },
        objective: solution.objective,
        throughput_value: index.pellet_price * delivered,
        iterations: solution.iterations,
        seed: index.seed,
    })
}

fn status_error(status: Status, context: &str) -> Error {
    match status {
        Status::Infeasible => Error::Infeasible(context.to_string()),
        Status::Unbounded => Error::Unbounded(context.to_string()),
        Status::IterationLimit => Error::SolverLimit(context.to_string()),
        Status::Optimal => unreachable!("optimal is not an error"),
    }
}

/// Solves a built model and extracts its trajectory.
pub fn solve_model(
    model: &LpModel,
    index: &VariableIndex,
    options: &SolverOptions,
) -> Result<Trajectory, Error> {
    let sol = lp::solve(model, options)?;
    if !sol.is_optimal() {
        return Err(status_error(sol.status, &model.name));
    }
    extract_trajectory(&sol, index)
}

/// Solves the feed-forward model over the schedule.
pub fn solve_bffpc(
    scenario: &Scenario,
    schedule: &Schedule,
    options: &SolverOptions,
) -> Result<Trajectory, Error> {
    let (model, index) = build_bffpc(scenario, schedule, schedule.horizon())?;
    solve_model(&model, &index, options)
}

/// Outcome of one expansion option in [`solve_hpc`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub expansion: f64,
    /// `optimal`, `infeasible`, `pruned`, ...
    pub status: String,
    /// Full objective including the expansion cost, when solved to optimality.
    pub objective: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct HpcSolution {
    pub trajectory: Trajectory,
    pub expansion: f64,
    pub candidates: Vec<Candidate>,
}

/// Solves the hybrid model by enumerating the expansion options allowed by
/// `policy`. Returns the option with the largest objective, preferring the
/// smaller expansion on ties.
///
/// The LP value without the expansion cost can only grow with `k` (larger
/// caps relax the model), so the value at the largest option bounds every
/// other option from above. Options whose bound minus their expansion cost
/// cannot beat the best objective found are skipped without changing the
/// result.
pub fn solve_hpc(
    scenario: &Scenario,
    schedule: &Schedule,
    policy: ExpansionPolicy,
    options: &SolverOptions,
) -> Result<HpcSolution, Error> {
    let ks = policy.options(scenario);
    let horizon = schedule.horizon();
    let run = |k: f64| -> Result<(Solution, VariableIndex), Error> {
        let (model, index) = build_hpc(scenario, schedule, horizon, k)?;
        let sol = lp::solve(&model, options)?;
        Ok((sol, index))
    };
    let tie = |best: f64| 1e-7 * best.abs().max(1.0);

    let k_max = *ks.last().expect("expansion options contain 0");
    let k_min = ks[0];
    let (first, second) = if ks.len() > 1 {
        let (a, b) = rayon::join(|| run(k_max), || run(k_min));
        (a?, Some(b?))
    } else {
        (run(k_max)?, None)
    };
    let mut solved: Vec<(f64, Solution, VariableIndex)> = Vec::new();
    let bound = match first.0.status {
        Status::Optimal => first.0.objective - first.1.objective_offset,
        Status::Infeasible => {
            return Err(Error::Infeasible(format!(
                "hybrid model infeasible for every expansion option (horizon {} periods)",
                horizon
            )))
        }
        status => return Err(status_error(status, "hybrid model at the largest expansion")),
    };
    solved.push((k_max, first.0, first.1));
    if let Some((sol, idx)) = second {
        solved.push((k_min, sol, idx));
    }
    let best_of = |solved: &[(f64, Solution, VariableIndex)]| {
        solved
            .iter()
            .filter(|(_, s, _)| s.is_optimal())
            .map(|(_, s, _)| s.objective)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let best = best_of(&solved);
    let inner = if ks.len() > 2 { &ks[1..ks.len() - 1] } else { &[][..] };
    let pending: Vec<f64> = inner
        .iter()
        .copied()
        .filter(|&k| bound - expansion_cost(scenario, schedule, k) >= best - tie(best))
        .collect();
    let more: Vec<Result<(f64, Solution, VariableIndex), Error>> = pending
        .par_iter()
        .map(|&k| run(k).map(|(s, i)| (k, s, i)))
        .collect();
    for r in more {
        solved.push(r?);
    }
    for (_, sol, _) in &solved {
        if sol.status == Status::IterationLimit {
            return Err(status_error(sol.status, "hybrid model"));
        }
    }
    solved.sort_by(|a, b| a.0.total_cmp(&b.0));

    let best = best_of(&solved);
    let winner = solved
        .iter()
        .position(|(_, s, _)| s.is_optimal() && s.objective >= best - tie(best))
        .expect("the largest option is optimal");
    let candidates = ks
        .iter()
        .map(|&k| match solved.iter().find(|(kk, _, _)| *kk == k) {
            Some((_, sol, _)) => Candidate {
                expansion: k,
                status: sol.status.to_string(),
                objective: sol.is_optimal().then_some(sol.objective),
            },
            None => Candidate {
                expansion: k,
                status: "pruned".into(),
                objective: None,
            },
        })
        .collect();
    let (k, sol, idx) = &solved[winner];
    log::debug!("hybrid model: k* = {k}, objective {}", sol.objective);
    Ok(HpcSolution {
        trajectory: extract_trajectory(sol, idx)?,
        expansion: *k,
        candidates,
    })
}

/// Solves the formulation of `control`; the expansion policy only matters
/// for the hybrid model.
pub fn solve(
    scenario: &Scenario,
    schedule: &Schedule,
    control: Control,
    policy: ExpansionPolicy,
    options: &SolverOptions,
) -> Result<HpcSolution, Error> {
    match control {
        Control::Bffpc => {
            let trajectory = solve_bffpc(scenario, schedule, options)?;
            Ok(HpcSolution {
                trajectory,
                expansion: 0.0,
                candidates: Vec::new(),
            })
        }
        Control::Hpc => solve_hpc(scenario, schedule, policy, options),
    }
}
