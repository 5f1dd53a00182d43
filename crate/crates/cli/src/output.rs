//! CSV, JSON and SVG artifacts.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use feedflow_core::formulations::Trajectory;
use feedflow_core::mintime::LogEntry;
use feedflow_core::scenario::MoistureLevels;
use serde::Serialize;

use crate::svg::{Chart, Series};
use crate::CliError;

pub const TRAJECTORY_VERSION: &str = "# feedflow trajectory v1";
pub const LOG_VERSION: &str = "# feedflow mintime log v1";

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path, version: &str) -> Result<csv::Writer<File>, CliError> {
    let mut f = create(path)?;
    writeln!(f, "{version}").map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    text.push('\n');
    write_text(path, &text)
}

/// One row per period: rates in dry Mg per period, inventories in dry Mg.
pub fn write_trajectory(path: &Path, tr: &Trajectory, levels: &MoistureLevels) -> Result<(), CliError> {
    let mut w = csv_writer(path, TRAJECTORY_VERSION)?;
    let mut header = vec![
        "period".to_string(),
        "time_h".into(),
        "level".into(),
        "X".into(),
        "Y".into(),
        "reactor_feed".into(),
    ];
    header.extend(tr.equipment_ids.iter().map(|id| format!("Xo[{id}]")));
    for &i in &tr.storage {
        for s in 0..levels.len() {
            header.push(format!("M[{},{}]", tr.equipment_ids[i], levels.name(s)));
        }
    }
    header.push("beta_plus".into());
    header.push("beta_minus".into());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    let feed = tr.reactor_feed();
    for t in 0..tr.horizon {
        let mut row = vec![
            (t + 1).to_string(),
            ((t + 1) as f64 * tr.period_min / 60.0).to_string(),
            levels.name(tr.active[t]).to_string(),
            tr.infeed[t].to_string(),
            tr.speed[t].to_string(),
            feed[t].to_string(),
        ];
        row.extend(tr.outflow.iter().map(|x| x[t].to_string()));
        for inv in &tr.inventory {
            row.extend(inv.iter().map(|lv| lv[t].to_string()));
        }
        row.push(tr.beta_plus[t].to_string());
        row.push(tr.beta_minus[t].to_string());
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Min-time iteration log with one budget column per level, in hours.
pub fn write_log(path: &Path, log: &[LogEntry], levels: &MoistureLevels) -> Result<(), CliError> {
    let mut w = csv_writer(path, LOG_VERSION)?;
    let mut header = vec!["iter".to_string(), "stage".into()];
    header.extend(levels.names().iter().map(|n| format!("T_{n}")));
    header.push("feasible".into());
    header.push("objective".into());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for e in log {
        let mut row = vec![e.iter.to_string(), e.stage.to_string()];
        row.extend(e.budgets.iter().map(|b| b.to_string()));
        row.push(e.feasible.to_string());
        row.push(e.objective.map(|o| o.to_string()).unwrap_or_default());
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn times(tr: &Trajectory) -> Vec<f64> {
    (1..=tr.horizon).map(|t| t as f64 * tr.period_min / 60.0).collect()
}

fn per_hour(tr: &Trajectory, v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| tr.per_hour(x)).collect()
}

fn total_inventory(tr: &Trajectory) -> Vec<(String, Vec<f64>)> {
    (0..tr.storage.len())
        .map(|m| {
            let id = tr.equipment_ids[tr.storage[m]].clone();
            (id, (0..tr.horizon).map(|t| tr.total_inventory(m, t)).collect())
        })
        .collect()
}

/// Reactor feed, in-feed and total inventory charts for one or more
/// labelled trajectories, written as `<prefix>reactor_feed.svg` and so on.
pub fn write_charts(dir: &Path, runs: &[(&str, &Trajectory)]) -> Result<(), CliError> {
    let data: Vec<_> = runs
        .iter()
        .map(|(name, tr)| {
            (
                *name,
                times(tr),
                per_hour(tr, tr.reactor_feed()),
                per_hour(tr, &tr.infeed),
                total_inventory(tr),
            )
        })
        .collect();
    let label = |name: &str, what: &str| {
        if runs.len() == 1 {
            what.to_string()
        } else {
            format!("{name} {what}")
        }
    };
    let feed = Chart {
        title: "Reactor feeding rate".into(),
        x_label: "time (h)".into(),
        y_label: "dry Mg/h".into(),
        series: data
            .iter()
            .map(|(n, x, f, _, _)| Series { name: label(n, "reactor feed"), x, y: f })
            .collect(),
    };
    let infeed = Chart {
        title: "Bale in-feed rate".into(),
        x_label: "time (h)".into(),
        y_label: "dry Mg/h".into(),
        series: data
            .iter()
            .map(|(n, x, _, i, _)| Series { name: label(n, "in-feed"), x, y: i })
            .collect(),
    };
    let inventory = Chart {
        title: "Total inventory".into(),
        x_label: "time (h)".into(),
        y_label: "dry Mg".into(),
        series: data
            .iter()
            .flat_map(|(n, x, _, _, inv)| {
                inv.iter().map(move |(id, y)| Series {
                    name: label(n, id),
                    x,
                    y,
                })
            })
            .collect(),
    };
    write_text(&dir.join("reactor_feed.svg"), &feed.render())?;
    write_text(&dir.join("infeed.svg"), &infeed.render())?;
    write_text(&dir.join("inventory.svg"), &inventory.render())
}
