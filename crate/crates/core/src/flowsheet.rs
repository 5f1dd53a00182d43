//! Equipment graph of the pre-processing line.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::scenario::MillingMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquipmentKind {
    Conveyor,
    Grinder,
    Separator,
    Storage,
    Densifier,
    PassThrough,
}

impl EquipmentKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "conveyor" => EquipmentKind::Conveyor,
            "grinder" => EquipmentKind::Grinder,
            "separator" => EquipmentKind::Separator,
            "storage" => EquipmentKind::Storage,
            "densifier" => EquipmentKind::Densifier,
            "pass_through" | "passthrough" => EquipmentKind::PassThrough,
            _ => return None,
        })
    }
}

impl fmt::Display for EquipmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquipmentKind::Conveyor => "conveyor",
            EquipmentKind::Grinder => "grinder",
            EquipmentKind::Separator => "separator",
            EquipmentKind::Storage => "storage",
            EquipmentKind::Densifier => "densifier",
            EquipmentKind::PassThrough => "pass_through",
        })
    }
}

/// One piece of equipment. Per-moisture vectors are indexed like the
/// scenario's moisture levels.
#[derive(Clone, Debug, PartialEq)]
pub struct EquipmentSpec {
    pub id: String,
    pub name: String,
    pub kind: EquipmentKind,
    pub predecessors: Vec<String>,
    /// Maximum in-feed rate, dry Mg/h.
    pub max_infeed: Vec<f64>,
    /// Operating cost, $/h.
    pub unit_cost: Vec<f64>,
    /// Fraction of dry matter lost (grinders).
    pub dry_matter_loss: f64,
    /// Fraction diverted to the bypass successor (separators).
    pub bypass_ratio: Vec<f64>,
    /// Successor receiving the bypass stream (separators).
    pub bypass_to: Option<String>,
    /// Storage capacities, dry Mg and m³.
    pub mass_capacity: f64,
    pub volume_capacity: f64,
    /// Bulk density of the material while processed, dry Mg/m³.
    pub operating_density: Option<Vec<f64>>,
    /// Bulk density change caused by the equipment, dry Mg/m³.
    pub density_change: Option<Vec<f64>>,
    /// Explicit average density of stored material (storage units).
    pub inflow_density: Option<Vec<f64>>,
    /// Additional per-moisture data carried along but not used by the models.
    pub data: BTreeMap<String, Vec<f64>>,
}

impl EquipmentSpec {
    pub fn new(id: impl Into<String>, kind: EquipmentKind, levels: usize) -> Self {
        let id = id.into();
        EquipmentSpec {
            name: id.clone(),
            id,
            kind,
            predecessors: Vec::new(),
            max_infeed: vec![f64::INFINITY; levels],
            unit_cost: vec![0.0; levels],
            dry_matter_loss: 0.0,
            bypass_ratio: vec![0.0; levels],
            bypass_to: None,
            mass_capacity: 0.0,
            volume_capacity: 0.0,
            operating_density: None,
            density_change: None,
            inflow_density: None,
            data: BTreeMap::new(),
        }
    }

    pub fn is_storage(&self) -> bool {
        self.kind == EquipmentKind::Storage
    }

    pub fn is_grinder(&self) -> bool {
        self.kind == EquipmentKind::Grinder
    }
}

/// Directed acyclic equipment graph with a single source and a single
/// terminal unit whose outflow feeds the reactor.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessGraph {
    pub equipment: Vec<EquipmentSpec>,
}

/// A violated graph rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub equipment: String,
    pub rule: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{}] {}", self.equipment, self.rule, self.message)
    }
}

impl ProcessGraph {
    pub fn index(&self, id: &str) -> Option<usize> {
        self.equipment.iter().position(|e| e.id == id)
    }

    pub fn get(&self, id: &str) -> Option<&EquipmentSpec> {
        self.equipment.iter().find(|e| e.id == id)
    }

    pub fn len(&self) -> usize {
        self.equipment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equipment.is_empty()
    }

    /// Predecessor indices of every unit; unknown ids are skipped.
    pub fn predecessor_indices(&self) -> Vec<Vec<usize>> {
        self.equipment
            .iter()
            .map(|e| e.predecessors.iter().filter_map(|p| self.index(p)).collect())
            .collect()
    }

    pub fn successor_indices(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.len()];
        for (i, preds) in self.predecessor_indices().into_iter().enumerate() {
            for p in preds {
                succ[p].push(i);
            }
        }
        succ
    }

    /// Topological order (stable with respect to declaration order), or the
    /// units left on a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>, Vec<usize>> {
        let preds = self.predecessor_indices();
        let succ = self.successor_indices();
        let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut order = Vec::with_capacity(self.len());
        let mut done = vec![false; self.len()];
        loop {
            let Some(next) = (0..self.len()).find(|&i| !done[i] && indeg[i] == 0) else {
                break;
            };
            done[next] = true;
            order.push(next);
            for &s in &succ[next] {
                indeg[s] -= 1;
            }
        }
        if order.len() == self.len() {
            Ok(order)
        } else {
            Err((0..self.len()).filter(|&i| !done[i]).collect())
        }
    }

    pub fn sources(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.equipment[i].predecessors.is_empty())
            .collect()
    }

    pub fn terminals(&self) -> Vec<usize> {
        self.successor_indices()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    /// The unit whose outflow is the reactor feed. Only meaningful on a
    /// validated graph.
    pub fn terminal(&self) -> usize {
        self.terminals()[0]
    }

    pub fn source(&self) -> usize {
        self.sources()[0]
    }

    pub fn storage_units(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.equipment[i].is_storage())
            .collect()
    }

    /// Splitting factor applied to the flow from predecessor `p` into unit
    /// `i` for moisture level `s`, including the unit's own dry-matter loss.
    pub fn flow_factor(&self, p: usize, i: usize, s: usize) -> f64 {
        let pred = &self.equipment[p];
        let unit = &self.equipment[i];
        let split = if pred.kind == EquipmentKind::Separator {
            let theta = pred.bypass_ratio[s];
            if pred.bypass_to.as_deref() == Some(unit.id.as_str()) {
                theta
            } else {
                1.0 - theta
            }
        } else {
            1.0
        };
        split * (1.0 - unit.dry_matter_loss)
    }
}

/// Checks the structural rules of a process graph. Returns an empty list
/// for a valid graph.
pub fn validate_graph(graph: &ProcessGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    fn diag_into(out: &mut Vec<Diagnostic>, equipment: &str, rule: &'static str, message: String) {
        out.push(Diagnostic {
            equipment: equipment.to_string(),
            rule,
            message,
        })
    }
    if graph.is_empty() {
        diag_into(&mut out, "<graph>", "non-empty", "the process graph has no equipment".into());
        return out;
    }

    for (k, e) in graph.equipment.iter().enumerate() {
        if graph.equipment[..k].iter().any(|o| o.id == e.id) {
            diag_into(&mut out, &e.id, "unique id", format!("equipment id `{}` is declared twice", e.id));
        }
        for p in &e.predecessors {
            if graph.index(p).is_none() {
                diag_into(&mut out, &e.id, "known predecessor", format!("predecessor `{p}` is not declared"));
            }
            if p == &e.id {
                diag_into(&mut out, &e.id, "cycle", "equipment lists itself as predecessor".into());
            }
        }
        if !(0.0..1.0).contains(&e.dry_matter_loss) {
            diag_into(&mut out, &e.id, "0 <= mu_i < 1", format!("dry-matter loss {} out of range", e.dry_matter_loss));
        }
        if e.dry_matter_loss != 0.0 && !e.is_grinder() {
            diag_into(&mut out, &e.id, "loss on grinders only", "only grinders may lose dry matter".into());
        }
        for (s, &x) in e.max_infeed.iter().enumerate() {
            if !(x > 0.0) {
                diag_into(&mut out, &e.id, "x_is > 0", format!("maximum in-feed {x} for moisture level {s}"));
            }
        }
        for &c in &e.unit_cost {
            if !(c >= 0.0) || !c.is_finite() {
                diag_into(&mut out, &e.id, "c_is >= 0", format!("unit cost {c} is not a non-negative number"));
            }
        }
        if e.is_storage() && !(e.mass_capacity > 0.0 && e.volume_capacity > 0.0) {
            diag_into(&mut out, 
                &e.id,
                "storage capacity > 0",
                "storage units need positive mass and volume capacity".into(),
            );
        }
        if e.kind == EquipmentKind::Separator {
            for &th in &e.bypass_ratio {
                if !(0.0..=1.0).contains(&th) {
                    diag_into(&mut out, &e.id, "0 <= theta_s <= 1", format!("bypass ratio {th} out of range"));
                }
            }
        }
    }
    if !out.is_empty() {
        return out;
    }

    if let Err(cycle) = graph.topological_order() {
        let ids: Vec<&str> = cycle.iter().map(|&i| graph.equipment[i].id.as_str()).collect();
        diag_into(&mut out, ids[0], "cycle", format!("cycle through {}", ids.join(" -> ")));
        return out;
    }

    let sources = graph.sources();
    if sources.len() != 1 {
        let ids: Vec<&str> = sources.iter().map(|&i| graph.equipment[i].id.as_str()).collect();
        diag_into(&mut out, "<graph>", "single source", format!("expected one unit without predecessors, found [{}]", ids.join(", ")));
    }
    let terminals = graph.terminals();
    if terminals.len() != 1 {
        let ids: Vec<&str> = terminals.iter().map(|&i| graph.equipment[i].id.as_str()).collect();
        diag_into(&mut out, "<graph>", "single terminal", format!("expected one terminal unit, found [{}]", ids.join(", ")));
    }

    let succ = graph.successor_indices();
    for (i, e) in graph.equipment.iter().enumerate() {
        let n_succ = succ[i].len();
        match e.kind {
            EquipmentKind::Separator => {
                if n_succ > 2 {
                    diag_into(&mut out, &e.id, "separator successors", format!("a separator feeds at most two units, found {n_succ}"));
                }
                match &e.bypass_to {
                    Some(b) => {
                        let Some(bi) = graph.index(b) else {
                            diag_into(&mut out, &e.id, "bypass designation", format!("bypass unit `{b}` is not declared"));
                            continue;
                        };
                        if !succ[i].contains(&bi) {
                            diag_into(&mut out, &e.id, "bypass designation", format!("bypass unit `{b}` does not list the separator as predecessor"));
                        } else if n_succ != 2 {
                            diag_into(&mut out, &e.id, "bypass designation", "a bypass needs a second, main successor".into());
                        }
                        if !reaches_storage(graph, &succ, bi) {
                            diag_into(&mut out, b, "bypass feeds storage", "the bypass stream must reach a storage unit".into());
                        }
                    }
                    None => {
                        if n_succ > 1 {
                            diag_into(&mut out, &e.id, "bypass designation", "separator with two successors has no designated bypass unit".into());
                        }
                        if e.bypass_ratio.iter().any(|&t| t > 0.0) {
                            diag_into(&mut out, &e.id, "bypass designation", "positive bypass ratio but no bypass unit".into());
                        }
                    }
                }
            }
            _ => {
                if n_succ > 1 {
                    diag_into(&mut out, &e.id, "single successor", format!("only separators may split the flow, found {n_succ} successors"));
                }
                if e.bypass_to.is_some() {
                    diag_into(&mut out, &e.id, "bypass designation", "only separators have a bypass unit".into());
                }
            }
        }
    }
    out
}

fn reaches_storage(graph: &ProcessGraph, succ: &[Vec<usize>], from: usize) -> bool {
    let mut stack = vec![from];
    let mut seen = vec![false; graph.len()];
    while let Some(i) = stack.pop() {
        if graph.equipment[i].is_storage() {
            return true;
        }
        if !std::mem::replace(&mut seen[i], true) {
            stack.extend(&succ[i]);
        }
    }
    false
}

/// Adapts the graph to a milling mode. Without fractional milling every
/// bypass ratio is zero and each separator's bypass conveyor is removed
/// together with its edges. Idempotent.
pub fn apply_milling_mode(graph: &ProcessGraph, mode: MillingMode) -> ProcessGraph {
    if mode == MillingMode::WithFractional {
        return graph.clone();
    }
    let mut g = graph.clone();
    let mut removed: Vec<String> = Vec::new();
    for e in &mut g.equipment {
        if e.kind == EquipmentKind::Separator {
            e.bypass_ratio.iter_mut().for_each(|t| *t = 0.0);
            if let Some(b) = e.bypass_to.take() {
                removed.push(b);
            }
        }
    }
    // The bypass conveyor is removed; anything it fed loses that edge.
    g.equipment.retain(|e| !removed.contains(&e.id));
    for e in &mut g.equipment {
        e.predecessors.retain(|p| !removed.contains(p));
    }
    g
}

/// Smallest maximum in-feed rate over all equipment, dry Mg/h.
pub fn system_capacity(graph: &ProcessGraph, s: usize) -> f64 {
    graph
        .equipment
        .iter()
        .map(|e| e.max_infeed[s])
        .fold(f64::INFINITY, f64::min)
}

/// Bulk density of the stream leaving every unit, dry Mg/m³. Units that
/// transform the material (those with an operating density) emit their
/// operating density plus any density change; others pass on the density of
/// their input. The source receives bale material of density `bale_density`.
pub fn stream_densities(graph: &ProcessGraph, bale_density: f64, s: usize) -> Vec<f64> {
    let order = graph.topological_order().unwrap_or_default();
    let preds = graph.predecessor_indices();
    let shares = routing_shares(graph, s);
    let mut dens = vec![bale_density; graph.len()];
    for &i in &order {
        let e = &graph.equipment[i];
        let input = mix(&preds[i], &shares, &dens, i, graph, s).unwrap_or(bale_density);
        dens[i] = match &e.operating_density {
            Some(op) => op[s] + e.density_change.as_ref().map_or(0.0, |c| c[s]),
            None => input + e.density_change.as_ref().map_or(0.0, |c| c[s]),
        };
    }
    dens
}

/// Share of the line's routing reaching each unit when only separator
/// splits are accounted for (losses ignored).
fn routing_shares(graph: &ProcessGraph, s: usize) -> Vec<f64> {
    let order = graph.topological_order().unwrap_or_default();
    let preds = graph.predecessor_indices();
    let mut share = vec![0.0; graph.len()];
    for &i in &order {
        share[i] = if preds[i].is_empty() {
            1.0
        } else {
            preds[i]
                .iter()
                .map(|&p| share[p] * split_factor(graph, p, i, s))
                .sum()
        };
    }
    share
}

fn split_factor(graph: &ProcessGraph, p: usize, i: usize, s: usize) -> f64 {
    let pred = &graph.equipment[p];
    if pred.kind == EquipmentKind::Separator {
        let theta = pred.bypass_ratio[s];
        if pred.bypass_to.as_deref() == Some(graph.equipment[i].id.as_str()) {
            theta
        } else {
            1.0 - theta
        }
    } else {
        1.0
    }
}

/// Routing-weighted average density of the streams entering unit `i`.
fn mix(
    preds: &[usize],
    shares: &[f64],
    dens: &[f64],
    i: usize,
    graph: &ProcessGraph,
    s: usize,
) -> Option<f64> {
    let mut w_sum = 0.0;
    let mut d_sum = 0.0;
    for &p in preds {
        let w = shares[p] * split_factor(graph, p, i, s);
        w_sum += w;
        d_sum += w * dens[p];
    }
    if preds.is_empty() {
        None
    } else if w_sum > 0.0 {
        Some(d_sum / w_sum)
    } else {
        Some(preds.iter().map(|&p| dens[p]).sum::<f64>() / preds.len() as f64)
    }
}

/// Average density of the material held in each storage unit, as
/// `(unit index, d̄_is)`. With two inflows (ground stream and bypass) the
/// weights are the routing shares, `1 - θ_s` and `θ_s`.
pub fn storage_densities(graph: &ProcessGraph, bale_density: f64, s: usize) -> Vec<(usize, f64)> {
    let preds = graph.predecessor_indices();
    let shares = routing_shares(graph, s);
    let dens = stream_densities(graph, bale_density, s);
    graph
        .storage_units()
        .into_iter()
        .map(|i| {
            let d = match &graph.equipment[i].inflow_density {
                Some(v) => v[s],
                None => mix(&preds[i], &shares, &dens, i, graph, s).unwrap_or(bale_density),
            };
            (i, d)
        })
        .collect()
}
