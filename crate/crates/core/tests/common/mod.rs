#![allow(dead_code)]

use feedflow_core::flowsheet;
use feedflow_core::formulations::{Control, HpcSolution, Trajectory};
use feedflow_core::pattern::Schedule;
use feedflow_core::scenario::{load_scenario, Scenario};

pub const TOL: f64 = 1e-6;

pub fn scenario_path(file: &str) -> String {
    format!("{}/../../scenarios/{file}", env!("CARGO_MANIFEST_DIR"))
}

pub fn pdu() -> Scenario {
    load_scenario(scenario_path("switchgrass_pdu.toml")).unwrap()
}

pub fn pdu_q391() -> Scenario {
    load_scenario(scenario_path("switchgrass_pdu_q391.toml")).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Every period has exactly one active level and every level with bales
/// gets at least one period.
pub fn check_partition(sc: &Scenario, schedule: &Schedule) -> Result<(), String> {
    let nl = sc.levels.len();
    for t in 0..schedule.horizon() {
        let sum: f64 = (0..nl).map(|s| schedule.j(s, t)).sum();
        if sum != 1.0 {
            return Err(format!("period {t}: Σ j = {sum}"));
        }
    }
    let per = schedule.periods_per_level();
    if per.iter().sum::<usize>() != schedule.horizon() {
        return Err("period counts do not add up to the horizon".into());
    }
    for s in 0..nl {
        if sc.bale.count[s] > 0 && per[s] == 0 {
            return Err(format!("level {s} has bales but no periods"));
        }
    }
    Ok(())
}

/// Checks the structural properties every optimum must satisfy.
pub fn check_optimum(sc: &Scenario, schedule: &Schedule, tr: &Trajectory) -> Result<(), String> {
    let g = &sc.graph;
    let h = tr.horizon;
    let nl = sc.levels.len();
    let per_period = tr.period_min / 60.0;
    let preds = g.predecessor_indices();
    let source = g.source();
    let scale = match tr.control {
        Control::Hpc => 1.0 + tr.expansion,
        Control::Bffpc => 1.0,
    };
    if tr.active != schedule.active {
        return Err("trajectory schedule differs from the input".into());
    }
    for t in 0..h {
        let s = tr.active[t];
        if !close(tr.infeed[t], sc.gamma_level(s) * tr.speed[t], TOL) {
            return Err(format!("in-feed and conveyor speed disagree at {t}"));
        }
        for (i, e) in g.equipment.iter().enumerate() {
            let x = tr.outflow[i][t];
            if x > e.max_infeed[s] * per_period + TOL {
                return Err(format!("{} over capacity at {t}: {x}", e.id));
            }
            if e.is_storage() {
                continue;
            }
            let mut inflow: f64 = preds[i].iter().map(|&p| g.flow_factor(p, i, s) * tr.outflow[p][t]).sum();
            if i == source {
                inflow += (1.0 - e.dry_matter_loss) * tr.infeed[t];
            }
            if !close(x, inflow, TOL) {
                return Err(format!("flow not conserved at {} t={t}: {x} vs {inflow}", e.id));
            }
            if e.is_grinder() {
                let raw: f64 = if i == source {
                    tr.infeed[t]
                } else {
                    preds[i].iter().map(|&p| tr.outflow[p][t]).sum()
                };
                if !close(x, (1.0 - e.dry_matter_loss) * raw, TOL) {
                    return Err(format!("grinder loss wrong at {} t={t}", e.id));
                }
            }
        }
        for (m, &i) in tr.storage.iter().enumerate() {
            let e = &g.equipment[i];
            let mut inflow: f64 = preds[i].iter().map(|&p| g.flow_factor(p, i, s) * tr.outflow[p][t]).sum();
            if i == source {
                inflow += (1.0 - e.dry_matter_loss) * tr.infeed[t];
            }
            let mut mass = 0.0;
            let mut volume = 0.0;
            for l in 0..nl {
                let prev = if t == 0 { 0.0 } else { tr.inventory[m][l][t - 1] };
                let add = if l == s { inflow } else { 0.0 };
                let want = prev + add - tr.storage_outflow[m][l][t];
                if !close(tr.inventory[m][l][t], want, TOL) {
                    return Err(format!("inventory recursion broken at {} level {l} t={t}", e.id));
                }
                let d = flowsheet::storage_densities(g, sc.bale.density[l], l)
                    .into_iter()
                    .find(|(u, _)| *u == i)
                    .map_or(1.0, |x| x.1);
                mass += tr.inventory[m][l][t];
                volume += tr.inventory[m][l][t] / d;
            }
            let out: f64 = (0..nl).map(|l| tr.storage_outflow[m][l][t]).sum();
            if !close(tr.outflow[i][t], out, TOL) {
                return Err(format!("storage outflow mismatch at {} t={t}", e.id));
            }
            if mass > e.mass_capacity * scale + TOL || volume > e.volume_capacity * scale + TOL {
                return Err(format!("storage cap exceeded at {} t={t}", e.id));
            }
        }
        if tr.control == Control::Hpc {
            let (bp, bm) = (tr.beta_plus[t], tr.beta_minus[t]);
            if bp.min(bm) > TOL {
                return Err(format!("β⁺ and β⁻ both positive at {t}"));
            }
            if t > 0 {
                let feed = tr.reactor_feed();
                if !close(bp - bm, feed[t] - feed[t - 1], TOL) {
                    return Err(format!("β does not measure the feed change at {t}"));
                }
            }
        }
    }
    let required = sc.bale.required_mass();
    for (l, &req) in required.iter().enumerate() {
        let fed: f64 = (0..h).filter(|&t| tr.active[t] == l).map(|t| tr.infeed[t]).sum();
        if !close(fed, req, TOL) {
            return Err(format!("level {l}: fed {fed}, required {req}"));
        }
    }
    Ok(())
}

/// The chosen option has the best objective and no smaller option ties it.
pub fn check_unique_expansion(sol: &HpcSolution) -> Result<(), String> {
    let best = sol.trajectory.objective;
    for c in &sol.candidates {
        if let Some(obj) = c.objective {
            if obj > best + 1e-7 * best.abs().max(1.0) {
                return Err(format!("option {} beats the chosen one", c.expansion));
            }
            if c.expansion < sol.expansion && obj >= best - 1e-7 * best.abs().max(1.0) {
                return Err(format!("smaller option {} ties the chosen one", c.expansion));
            }
        }
    }
    if sol.trajectory.expansion != sol.expansion {
        return Err("trajectory and solution disagree on k*".into());
    }
    Ok(())
}
