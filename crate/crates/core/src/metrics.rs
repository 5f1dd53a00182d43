//! Performance indicators of a trajectory and pairwise comparisons.
//!
//! Feed statistics use the reactor feed `X_{term,t}`; the standard
//! deviation is the population one (divide by the number of periods).
//! Operating cost charges each unit's hourly cost for the moisture level
//! active in a period, so exactly one level accrues per period. Storage
//! units of the hybrid model pay the expanded rate `c (1+k*)^exponent`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::formulations::{Control, Trajectory};
use crate::scenario::{MillingMode, Scenario};

/// Reported in place of the coefficient of variation when the mean feed
/// is zero; `cov_defined` is false alongside it.
pub const COV_UNDEFINED: f64 = -1.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StorageInventory {
    pub unit: String,
    /// `max_t Σ_s M_ist`, dry Mg.
    pub max_inventory: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KpiReport {
    pub scenario: String,
    pub control: Control,
    pub milling: MillingMode,
    pub expansion: f64,
    pub max_inventory: Vec<StorageInventory>,
    /// Mean reactor feed, dry Mg/h.
    pub average_feed: f64,
    pub coefficient_of_variation: f64,
    pub cov_defined: bool,
    /// Operating cost, $.
    pub cost_total: f64,
    /// Operating cost per dry Mg of bales processed.
    pub cost_per_dry_mg: f64,
    /// Horizon of the trajectory, h.
    pub min_time_hours: f64,
    /// Bale mass fed in, dry Mg.
    pub mass_processed: f64,
    /// Mass delivered to the reactor, dry Mg.
    pub reactor_mass: f64,
}

/// Mean, population standard deviation and coefficient of variation.
pub fn feed_statistics(series: &[f64]) -> (f64, f64, Option<f64>) {
    if series.is_empty() {
        return (0.0, 0.0, None);
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    let cov = (mean.abs() > 0.0).then(|| sd / mean);
    (mean, sd, cov)
}

/// Cost of every period in $, in horizon order.
pub fn cost_series(trajectory: &Trajectory, scenario: &Scenario) -> Vec<f64> {
    let hours = trajectory.period_min / 60.0;
    let factor = match trajectory.control {
        Control::Hpc => scenario.econ.expansion_factor(trajectory.expansion),
        Control::Bffpc => 1.0,
    };
    // Units are looked up by id so that a trajectory without some unit
    // (the removed bypass conveyor) is charged for exactly what it has.
    let units: Vec<(&[f64], bool)> = trajectory
        .equipment_ids
        .iter()
        .filter_map(|id| scenario.graph.get(id))
        .map(|e| (e.unit_cost.as_slice(), e.is_storage()))
        .collect();
    trajectory
        .active
        .iter()
        .map(|&s| {
            units
                .iter()
                .map(|&(c, storage)| c[s] * if storage { factor } else { 1.0 })
                .sum::<f64>()
                * hours
        })
        .collect()
}

/// Total operating cost in $ and per dry Mg of bale mass processed.
pub fn operating_cost(trajectory: &Trajectory, scenario: &Scenario) -> (f64, f64) {
    let total: f64 = cost_series(trajectory, scenario).iter().sum();
    let mass = trajectory.total_infeed();
    let per = if mass > 0.0 { total / mass } else { 0.0 };
    (total, per)
}

/// Operating cost of the periods in `range`, $.
pub fn segment_cost(trajectory: &Trajectory, scenario: &Scenario, range: std::ops::Range<usize>) -> f64 {
    cost_series(trajectory, scenario)[range].iter().sum()
}

pub fn kpis(trajectory: &Trajectory, scenario: &Scenario) -> KpiReport {
    let feed = trajectory.reactor_feed();
    let (mean, _, cov) = feed_statistics(feed);
    let (cost_total, cost_per_dry_mg) = operating_cost(trajectory, scenario);
    let max_inventory = trajectory
        .storage
        .iter()
        .enumerate()
        .map(|(m, &i)| StorageInventory {
            unit: trajectory.equipment_ids[i].clone(),
            max_inventory: (0..trajectory.horizon)
                .map(|t| trajectory.total_inventory(m, t))
                .fold(0.0, f64::max),
        })
        .collect();
    KpiReport {
        scenario: scenario.name.clone(),
        control: trajectory.control,
        milling: trajectory.milling,
        expansion: trajectory.expansion,
        max_inventory,
        average_feed: trajectory.per_hour(mean),
        coefficient_of_variation: cov.unwrap_or(COV_UNDEFINED),
        cov_defined: cov.is_some(),
        cost_total,
        cost_per_dry_mg,
        min_time_hours: trajectory.hours(),
        mass_processed: trajectory.total_infeed(),
        reactor_mass: feed.iter().sum(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Delta {
    pub metric: String,
    pub a: f64,
    pub b: f64,
    /// `(a − b) / b · 100`; absent when `b` is zero.
    pub percent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub a: String,
    pub b: String,
    pub deltas: Vec<Delta>,
    /// `(CoV_b − CoV_a) / CoV_b · 100` when both are defined and `CoV_b > 0`.
    pub cov_reduction: Option<f64>,
    /// Set when the reports do not describe the same scenario and bale set.
    pub mismatch: Option<String>,
}

pub fn percent_delta(a: f64, b: f64) -> Option<f64> {
    (b != 0.0).then(|| (a - b) / b * 100.0)
}

fn label(r: &KpiReport) -> String {
    format!("{} {} k={}", r.control, r.milling.label(), r.expansion)
}

/// Percentage differences of `a` relative to `b`.
pub fn compare(a: &KpiReport, b: &KpiReport) -> ComparisonReport {
    let mut deltas = Vec::new();
    let mut push = |metric: &str, x: f64, y: f64| {
        deltas.push(Delta {
            metric: metric.to_string(),
            a: x,
            b: y,
            percent: percent_delta(x, y),
        })
    };
    push("min_time_hours", a.min_time_hours, b.min_time_hours);
    push("cost_total", a.cost_total, b.cost_total);
    push("cost_per_dry_mg", a.cost_per_dry_mg, b.cost_per_dry_mg);
    push("average_feed", a.average_feed, b.average_feed);
    if a.cov_defined && b.cov_defined {
        push("coefficient_of_variation", a.coefficient_of_variation, b.coefficient_of_variation);
    }
    push("mass_processed", a.mass_processed, b.mass_processed);
    push("reactor_mass", a.reactor_mass, b.reactor_mass);
    for inv in &a.max_inventory {
        if let Some(other) = b.max_inventory.iter().find(|o| o.unit == inv.unit) {
            push(&format!("max_inventory.{}", inv.unit), inv.max_inventory, other.max_inventory);
        }
    }
    let cov_reduction = (a.cov_defined && b.cov_defined && b.coefficient_of_variation > 0.0).then(|| {
        (b.coefficient_of_variation - a.coefficient_of_variation) / b.coefficient_of_variation * 100.0
    });
    let mismatch = if a.scenario != b.scenario {
        Some(format!("scenarios differ: {} vs {}", a.scenario, b.scenario))
    } else if (a.mass_processed - b.mass_processed).abs() > 1e-6 * a.mass_processed.abs().max(1.0) {
        Some(format!(
            "processed mass differs: {:.6} vs {:.6} dry Mg",
            a.mass_processed, b.mass_processed
        ))
    } else {
        None
    };
    ComparisonReport {
        a: label(a),
        b: label(b),
        deltas,
        cov_reduction,
        mismatch,
    }
}

impl ComparisonReport {
    /// Plain-text table of the deltas.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<28} {:>14} {:>14} {:>10}", "metric", self.a, self.b, "delta %");
        for d in &self.deltas {
            let pct = d.percent.map_or("n/a".to_string(), |p| format!("{p:+.2}"));
            let _ = writeln!(out, "{:<28} {:>14.4} {:>14.4} {:>10}", d.metric, d.a, d.b, pct);
        }
        if let Some(r) = self.cov_reduction {
            let _ = writeln!(out, "CoV reduction: {r:.2}%");
        }
        if let Some(m) = &self.mismatch {
            let _ = writeln!(out, "warning: {m}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics_of_constant_series() {
        let (mean, sd, cov) = feed_statistics(&[2.0; 10]);
        assert_eq!(mean, 2.0);
        assert_eq!(sd, 0.0);
        assert_eq!(cov, Some(0.0));
        assert_eq!(feed_statistics(&[0.0, 0.0]).2, None);
    }

    #[test]
    fn population_standard_deviation() {
        let (_, sd, _) = feed_statistics(&[1.0, 3.0]);
        assert!((sd - 1.0).abs() < 1e-15);
    }

    #[test]
    fn percent_deltas() {
        assert!((percent_delta(42.16, 42.32).unwrap() - -0.378).abs() < 1e-3);
        assert!((percent_delta(20.33, 20.80).unwrap() - -2.26).abs() < 1e-2);
        assert_eq!(percent_delta(1.0, 0.0), None);
    }
}
