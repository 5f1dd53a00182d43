//! Scenario files: line topology, equipment data, bales and economics.
//!
//! Scenarios are TOML documents. Every quantity carries its unit in the key
//! name (`max_infeed_dry_mg_per_h`, `dry_matter_loss_pct`, ...). Values that
//! depend on moisture are written either as a scalar shared by all levels or
//! as a table keyed by level name, e.g. `{ high = 2.20, medium = 4.53, low = 5.23 }`.

use std::path::Path;

use indexmap::IndexMap;
use serde::Deserialize;

use crate::flowsheet::{self, EquipmentKind, EquipmentSpec, ProcessGraph};
use crate::pattern::{FeedingPattern, Schedule};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MillingMode {
    WithFractional,
    WithoutFractional,
}

impl MillingMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "with" | "with_fractional" => Some(MillingMode::WithFractional),
            "without" | "without_fractional" => Some(MillingMode::WithoutFractional),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MillingMode::WithFractional => "with",
            MillingMode::WithoutFractional => "without",
        }
    }
}

/// Ordered set of moisture levels. Each level has a one-letter code (the
/// upper-cased first letter of its name) used in feeding patterns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoistureLevels {
    names: Vec<String>,
}

impl MoistureLevels {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, Error> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::invalid("moisture.levels", "at least one level"));
        }
        for (k, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::invalid("moisture.levels", "non-empty level names"));
            }
            if names[..k].contains(n) {
                return Err(Error::invalid("moisture.levels", "unique level names"));
            }
            let code = Self::code_of(n);
            if names[..k].iter().any(|o| Self::code_of(o) == code) {
                return Err(Error::invalid(
                    "moisture.levels",
                    "unique first letters (pattern codes)",
                ));
            }
        }
        Ok(MoistureLevels { names })
    }

    fn code_of(name: &str) -> char {
        name.chars().next().unwrap_or('?').to_ascii_uppercase()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn code(&self, s: usize) -> char {
        Self::code_of(&self.names[s])
    }

    pub fn by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn by_code(&self, code: char) -> Option<usize> {
        let c = code.to_ascii_uppercase();
        (0..self.len()).find(|&s| self.code(s) == c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaleSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub length_m: f64,
    /// Dry mass of one bale per moisture level, dry Mg.
    pub mass: Vec<f64>,
    /// Bale density per moisture level, dry Mg/m³.
    pub density: Vec<f64>,
    pub count: Vec<usize>,
}

impl BaleSpec {
    /// Total dry mass to process per moisture level, `q_s · n_s`.
    pub fn required_mass(&self) -> Vec<f64> {
        self.mass
            .iter()
            .zip(&self.count)
            .map(|(q, &n)| q * n as f64)
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.required_mass().iter().sum()
    }

    pub fn total_count(&self) -> usize {
        self.count.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EconomicParams {
    /// Pellet price, $/dry Mg.
    pub pellet_price: f64,
    /// Penalty for changing the reactor feed, $ per (dry Mg/min) of change.
    pub adjustment_penalty: f64,
    /// Storage expansion options as fractions of the base capacity.
    pub expansion_options: Vec<f64>,
    pub scaling_exponent: f64,
}

impl EconomicParams {
    /// Cost multiplier of a storage unit expanded by fraction `k`.
    pub fn expansion_factor(&self, k: f64) -> f64 {
        (1.0 + k).powf(self.scaling_exponent)
    }

    pub fn max_expansion(&self) -> f64 {
        self.expansion_options.last().copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub levels: MoistureLevels,
    pub bale: BaleSpec,
    pub econ: EconomicParams,
    pub graph: ProcessGraph,
    /// Period length Δ, minutes.
    pub period_min: f64,
    pub milling: MillingMode,
    pub default_pattern: Option<FeedingPattern>,
}

impl Scenario {
    /// Copy of the scenario operating in `mode`. The graph is transformed
    /// from the scenario's current graph, so the call is idempotent.
    pub fn with_milling(&self, mode: MillingMode) -> Scenario {
        let mut s = self.clone();
        s.graph = flowsheet::apply_milling_mode(&self.graph, mode);
        s.milling = mode;
        s
    }

    pub fn with_period(&self, period_min: f64) -> Result<Scenario, Error> {
        if !(period_min > 0.0) {
            return Err(Error::invalid("period_min", "Δ > 0"));
        }
        let mut s = self.clone();
        s.period_min = period_min;
        Ok(s)
    }

    /// Periods per hour.
    pub fn periods_per_hour(&self) -> f64 {
        60.0 / self.period_min
    }

    /// Bottleneck capacity of the line for moisture level `s`, dry Mg/h.
    pub fn system_capacity(&self, s: usize) -> f64 {
        flowsheet::system_capacity(&self.graph, s)
    }

    /// Expanded hourly cost `c_isk = c_is (1 + k)^exponent` for every storage
    /// unit, as `[(unit index, [[cost per option] per level])]`.
    pub fn expansion_costs(&self) -> Vec<(usize, Vec<Vec<f64>>)> {
        derive_expansion_costs(self)
    }

    /// Dry mass per meter of bale conveyor while level `s` is fed, `w·h·d_s`.
    pub fn gamma_level(&self, s: usize) -> f64 {
        self.bale.width_m * self.bale.height_m * self.bale.density[s]
    }

    pub fn validate(&self) -> Result<(), Error> {
        let n = self.levels.len();
        let b = &self.bale;
        for (field, v) in [
            ("bale.width_m", b.width_m),
            ("bale.height_m", b.height_m),
            ("bale.length_m", b.length_m),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(field, "dimensions > 0"));
            }
        }
        for s in 0..n {
            let lv = self.levels.name(s);
            if !(b.mass[s] > 0.0) || !b.mass[s].is_finite() {
                return Err(Error::invalid(format!("bale.mass_dry_mg.{lv}"), "q_s > 0"));
            }
            if !(b.density[s] > 0.0) || !b.density[s].is_finite() {
                return Err(Error::invalid(
                    format!("bale.density_dry_mg_per_m3.{lv}"),
                    "d_s > 0",
                ));
            }
        }
        let e = &self.econ;
        if !(e.pellet_price > 0.0) {
            return Err(Error::invalid("economics.pellet_price_usd_per_dry_mg", "η > 0"));
        }
        if !(e.adjustment_penalty >= 0.0) {
            return Err(Error::invalid(
                "economics.adjustment_penalty_usd_per_dry_mg_per_min",
                "α >= 0",
            ));
        }
        if !e.expansion_options.contains(&0.0) {
            return Err(Error::invalid("economics.expansion_options", "contains 0"));
        }
        if e.expansion_options.iter().any(|k| !(0.0..=1.0).contains(k)) {
            return Err(Error::invalid("economics.expansion_options", "entries in [0, 1]"));
        }
        if e.expansion_options.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("economics.expansion_options", "strictly increasing"));
        }
        if !(e.scaling_exponent > 0.0) {
            return Err(Error::invalid("economics.scaling_exponent", "exponent > 0"));
        }
        if !(self.period_min > 0.0) {
            return Err(Error::invalid("period_min", "Δ > 0"));
        }
        for eq in &self.graph.equipment {
            let field = |f: &str| format!("equipment.{}.{f}", eq.id);
            for (name, v) in [
                ("operating_density_dry_mg_per_m3", &eq.operating_density),
                ("inflow_density_dry_mg_per_m3", &eq.inflow_density),
            ] {
                if let Some(v) = v {
                    if v.iter().any(|d| !(*d > 0.0)) {
                        return Err(Error::invalid(field(name), "density > 0"));
                    }
                }
            }
        }
        let diags = flowsheet::validate_graph(&self.graph);
        if !diags.is_empty() {
            return Err(Error::Graph(diags));
        }
        for s in 0..n {
            for (i, d) in flowsheet::storage_densities(&self.graph, b.density[s], s) {
                if !(d > 0.0) {
                    return Err(Error::invalid(
                        format!("equipment.{}", self.graph.equipment[i].id),
                        "stored material density > 0",
                    ));
                }
            }
        }
        if let Some(p) = &self.default_pattern {
            p.check_counts(self)?;
        }
        Ok(())
    }
}

/// Dry mass per meter of bale conveyor in period `t`, `γ_t = w·h·Σ_s d_s j_st`.
pub fn gamma(scenario: &Scenario, schedule: &Schedule, t: usize) -> Result<f64, Error> {
    if t >= schedule.horizon() {
        return Err(Error::invalid(
            "period",
            format!("t < horizon ({t} >= {})", schedule.horizon()),
        ));
    }
    Ok(scenario.gamma_level(schedule.level_at(t)))
}

/// Expanded hourly cost of every storage unit for every moisture level and
/// expansion option.
pub fn derive_expansion_costs(scenario: &Scenario) -> Vec<(usize, Vec<Vec<f64>>)> {
    let g = &scenario.graph;
    g.storage_units()
        .into_iter()
        .map(|i| {
            let per_level = g.equipment[i]
                .unit_cost
                .iter()
                .map(|&c| {
                    scenario
                        .econ
                        .expansion_options
                        .iter()
                        .map(|&k| c * scenario.econ.expansion_factor(k))
                        .collect()
                })
                .collect();
            (i, per_level)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// File format

#[derive(Deserialize)]
#[serde(untagged)]
enum PerLevel {
    Scalar(f64),
    Table(IndexMap<String, f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    period_min: Option<f64>,
    #[serde(default)]
    milling: Option<String>,
    moisture: MoistureSection,
    bale: BaleSection,
    economics: EconomicsSection,
    #[serde(default)]
    pattern: Option<PatternSection>,
    equipment: IndexMap<String, EquipmentSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MoistureSection {
    levels: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BaleSection {
    width_m: f64,
    height_m: f64,
    length_m: f64,
    mass_dry_mg: PerLevel,
    density_dry_mg_per_m3: PerLevel,
    count: PerLevel,
    #[serde(default)]
    moisture_pct: Option<PerLevel>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EconomicsSection {
    pellet_price_usd_per_dry_mg: f64,
    #[serde(default)]
    adjustment_penalty_usd_per_dry_mg_per_min: Option<f64>,
    #[serde(default)]
    adjustment_penalty_usd_per_dry_mg_per_h: Option<f64>,
    expansion_options: Vec<f64>,
    #[serde(default = "default_exponent")]
    scaling_exponent: f64,
}

fn default_exponent() -> f64 {
    0.6
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternSection {
    default: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EquipmentSection {
    #[serde(default)]
    name: Option<String>,
    kind: String,
    #[serde(default)]
    predecessors: Vec<String>,
    #[serde(default)]
    max_infeed_dry_mg_per_h: Option<PerLevel>,
    #[serde(default)]
    max_infeed_dry_mg_per_min: Option<PerLevel>,
    #[serde(default)]
    unit_cost_usd_per_h: Option<PerLevel>,
    #[serde(default)]
    unit_cost_usd_per_min: Option<PerLevel>,
    #[serde(default)]
    dry_matter_loss_pct: Option<f64>,
    #[serde(default)]
    bypass_ratio_pct: Option<PerLevel>,
    #[serde(default)]
    bypass_to: Option<String>,
    #[serde(default)]
    mass_capacity_dry_mg: Option<f64>,
    #[serde(default)]
    volume_capacity_m3: Option<f64>,
    #[serde(default)]
    operating_density_dry_mg_per_m3: Option<PerLevel>,
    #[serde(default)]
    density_change_dry_mg_per_m3: Option<PerLevel>,
    #[serde(default)]
    inflow_density_dry_mg_per_m3: Option<PerLevel>,
    #[serde(default)]
    data: IndexMap<String, PerLevel>,
}

fn per_level(levels: &MoistureLevels, field: &str, v: &PerLevel) -> Result<Vec<f64>, Error> {
    match v {
        PerLevel::Scalar(x) => Ok(vec![*x; levels.len()]),
        PerLevel::Table(t) => {
            for key in t.keys() {
                if levels.by_name(key).is_none() {
                    return Err(Error::invalid(
                        format!("{field}.{key}"),
                        "keys are declared moisture levels",
                    ));
                }
            }
            levels
                .names()
                .iter()
                .map(|n| {
                    t.get(n).copied().ok_or_else(|| {
                        Error::invalid(format!("{field}.{n}"), "value for every moisture level")
                    })
                })
                .collect()
        }
    }
}

fn one_of(
    levels: &MoistureLevels,
    field: &str,
    per_h: &Option<PerLevel>,
    per_min: &Option<PerLevel>,
) -> Result<Option<Vec<f64>>, Error> {
    match (per_h, per_min) {
        (Some(_), Some(_)) => Err(Error::invalid(field, "give either the _per_h or the _per_min form")),
        (Some(v), None) => Ok(Some(per_level(levels, &format!("{field}_per_h"), v)?)),
        (None, Some(v)) => Ok(Some(
            per_level(levels, &format!("{field}_per_min"), v)?
                .into_iter()
                .map(|x| x * 60.0)
                .collect(),
        )),
        (None, None) => Ok(None),
    }
}

/// Parses a scenario document and checks every invariant.
pub fn parse_scenario(text: &str) -> Result<Scenario, Error> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
        file: None,
        message: e.message().to_string(),
        line: e.span().map(|s| line_of(text, s.start)),
    })?;

    let levels = MoistureLevels::new(file.moisture.levels.iter().cloned())?;

    let count_raw = per_level(&levels, "bale.count", &file.bale.count)?;
    let mut count = Vec::with_capacity(levels.len());
    for (s, &c) in count_raw.iter().enumerate() {
        if c < 0.0 || c.fract() != 0.0 || !c.is_finite() {
            return Err(Error::invalid(
                format!("bale.count.{}", levels.name(s)),
                "n_s is a non-negative integer",
            ));
        }
        count.push(c as usize);
    }
    if let Some(m) = &file.bale.moisture_pct {
        per_level(&levels, "bale.moisture_pct", m)?;
    }
    let bale = BaleSpec {
        width_m: file.bale.width_m,
        height_m: file.bale.height_m,
        length_m: file.bale.length_m,
        mass: per_level(&levels, "bale.mass_dry_mg", &file.bale.mass_dry_mg)?,
        density: per_level(&levels, "bale.density_dry_mg_per_m3", &file.bale.density_dry_mg_per_m3)?,
        count,
    };

    let ec = &file.economics;
    let adjustment_penalty = match (
        ec.adjustment_penalty_usd_per_dry_mg_per_min,
        ec.adjustment_penalty_usd_per_dry_mg_per_h,
    ) {
        (Some(a), None) => a,
        (None, Some(a)) => a / 60.0,
        (None, None) => 0.0,
        (Some(_), Some(_)) => {
            return Err(Error::invalid(
                "economics.adjustment_penalty",
                "give either the _per_min or the _per_h form",
            ))
        }
    };
    let econ = EconomicParams {
        pellet_price: ec.pellet_price_usd_per_dry_mg,
        adjustment_penalty,
        expansion_options: ec.expansion_options.clone(),
        scaling_exponent: ec.scaling_exponent,
    };

    let mut equipment = Vec::with_capacity(file.equipment.len());
    for (id, sec) in &file.equipment {
        let f = |name: &str| format!("equipment.{id}.{name}");
        let kind = EquipmentKind::parse(&sec.kind)
            .ok_or_else(|| Error::invalid(f("kind"), "one of conveyor, grinder, separator, storage, densifier, pass_through"))?;
        let mut e = EquipmentSpec::new(id.clone(), kind, levels.len());
        e.name = sec.name.clone().unwrap_or_else(|| id.clone());
        e.predecessors = sec.predecessors.clone();
        e.max_infeed = one_of(&levels, &f("max_infeed_dry_mg"), &sec.max_infeed_dry_mg_per_h, &sec.max_infeed_dry_mg_per_min)?
            .ok_or_else(|| Error::invalid(f("max_infeed_dry_mg_per_h"), "x_is given for every unit"))?;
        e.unit_cost = one_of(&levels, &f("unit_cost_usd"), &sec.unit_cost_usd_per_h, &sec.unit_cost_usd_per_min)?
            .unwrap_or_else(|| vec![0.0; levels.len()]);
        if let Some(mu) = sec.dry_matter_loss_pct {
            if kind != EquipmentKind::Grinder {
                return Err(Error::invalid(f("dry_matter_loss_pct"), "grinders only"));
            }
            if !(0.0..100.0).contains(&mu) {
                return Err(Error::invalid(f("dry_matter_loss_pct"), "0 <= mu_i < 1"));
            }
            e.dry_matter_loss = mu / 100.0;
        }
        if let Some(b) = &sec.bypass_ratio_pct {
            if kind != EquipmentKind::Separator {
                return Err(Error::invalid(f("bypass_ratio_pct"), "separators only"));
            }
            e.bypass_ratio = per_level(&levels, &f("bypass_ratio_pct"), b)?
                .into_iter()
                .map(|x| x / 100.0)
                .collect();
            if e.bypass_ratio.iter().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(Error::invalid(f("bypass_ratio_pct"), "0 <= theta_s <= 1"));
            }
        }
        e.bypass_to = sec.bypass_to.clone();
        if kind == EquipmentKind::Storage {
            e.mass_capacity = sec
                .mass_capacity_dry_mg
                .ok_or_else(|| Error::invalid(f("mass_capacity_dry_mg"), "required for storage"))?;
            e.volume_capacity = sec
                .volume_capacity_m3
                .ok_or_else(|| Error::invalid(f("volume_capacity_m3"), "required for storage"))?;
            if !(e.mass_capacity > 0.0) {
                return Err(Error::invalid(f("mass_capacity_dry_mg"), "m_i > 0"));
            }
            if !(e.volume_capacity > 0.0) {
                return Err(Error::invalid(f("volume_capacity_m3"), "v_i > 0"));
            }
        } else if sec.mass_capacity_dry_mg.is_some() || sec.volume_capacity_m3.is_some() {
            return Err(Error::invalid(f("mass_capacity_dry_mg"), "storage units only"));
        }
        let opt = |name: &str, v: &Option<PerLevel>| -> Result<Option<Vec<f64>>, Error> {
            v.as_ref().map(|v| per_level(&levels, &f(name), v)).transpose()
        };
        e.operating_density = opt("operating_density_dry_mg_per_m3", &sec.operating_density_dry_mg_per_m3)?;
        e.density_change = opt("density_change_dry_mg_per_m3", &sec.density_change_dry_mg_per_m3)?;
        e.inflow_density = opt("inflow_density_dry_mg_per_m3", &sec.inflow_density_dry_mg_per_m3)?;
        for (k, v) in &sec.data {
            e.data.insert(k.clone(), per_level(&levels, &f(&format!("data.{k}")), v)?);
        }
        equipment.push(e);
    }

    let milling = match &file.milling {
        None => MillingMode::WithFractional,
        Some(m) => MillingMode::parse(m)
            .ok_or_else(|| Error::invalid("milling", "`with` or `without`"))?,
    };

    let mut scenario = Scenario {
        name: file.name,
        description: file.description,
        levels,
        bale,
        econ,
        graph: ProcessGraph { equipment },
        period_min: file.period_min.unwrap_or(1.0),
        milling: MillingMode::WithFractional,
        default_pattern: None,
    };
    if let Some(p) = &file.pattern {
        scenario.default_pattern = Some(
            FeedingPattern::parse(&p.default, &scenario.levels)
                .map_err(|e| Error::invalid("pattern.default", e.to_string()))?,
        );
    }
    scenario.validate()?;
    if milling == MillingMode::WithoutFractional {
        scenario = scenario.with_milling(milling);
    }
    Ok(scenario)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_scenario(&text).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = r#"
name = "mini"
period_min = 10

[moisture]
levels = ["low", "high"]

[bale]
width_m = 1.0
height_m = 1.0
length_m = 2.0
mass_dry_mg = 0.5
density_dry_mg_per_m3 = { low = 0.2, high = 0.1 }
count = { low = 2, high = 1 }

[economics]
pellet_price_usd_per_dry_mg = 80
adjustment_penalty_usd_per_dry_mg_per_min = 5
expansion_options = [0.0, 0.5, 1.0]

[equipment.feed]
kind = "conveyor"
max_infeed_dry_mg_per_h = 10
unit_cost_usd_per_h = 1

[equipment.mill]
kind = "grinder"
predecessors = ["feed"]
max_infeed_dry_mg_per_h = { low = 3, high = 1.5 }
unit_cost_usd_per_min = 0.5
dry_matter_loss_pct = 2

[equipment.bin]
kind = "storage"
predecessors = ["mill"]
max_infeed_dry_mg_per_h = 10
unit_cost_usd_per_h = 2
mass_capacity_dry_mg = 1
volume_capacity_m3 = 5
inflow_density_dry_mg_per_m3 = 0.3
"#;

    #[test]
    fn parses_minimal_scenario() {
        let s = parse_scenario(MINI).unwrap();
        assert_eq!(s.levels.names(), ["low", "high"]);
        assert_eq!(s.bale.mass, vec![0.5, 0.5]);
        assert_eq!(s.bale.count, vec![2, 1]);
        assert_eq!(s.period_min, 10.0);
        let mill = s.graph.get("mill").unwrap();
        assert_eq!(mill.unit_cost, vec![30.0, 30.0]);
        assert_eq!(mill.dry_matter_loss, 0.02);
        assert_eq!(s.system_capacity(1), 1.5);
        assert_eq!(s.econ.scaling_exponent, 0.6);
    }

    #[test]
    fn negative_density_names_the_rule() {
        let bad = MINI.replace("low = 0.2, high = 0.1", "low = 0.2, high = -0.1");
        let e = parse_scenario(&bad).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("d_s > 0"), "{msg}");
        assert!(msg.contains("bale.density_dry_mg_per_m3.high"), "{msg}");
    }

    #[test]
    fn syntax_errors_report_the_line() {
        let bad = MINI.replace("length_m = 2.0", "length_m = = 2.0");
        match parse_scenario(&bad).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, Some(11)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINI.replace("length_m = 2.0", "length_m = 2.0\ncolour = 3");
        assert!(matches!(parse_scenario(&bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_level_in_table() {
        let bad = MINI.replace("count = { low = 2, high = 1 }", "count = { low = 2 }");
        let msg = parse_scenario(&bad).unwrap_err().to_string();
        assert!(msg.contains("bale.count.high"), "{msg}");
    }

    #[test]
    fn expansion_costs_follow_the_scaling_rule() {
        let s = parse_scenario(MINI).unwrap();
        let costs = s.expansion_costs();
        assert_eq!(costs.len(), 1);
        let (_, per_level) = &costs[0];
        assert_eq!(per_level[0][0], 2.0);
        assert!((per_level[0][2] - 2.0 * 2f64.powf(0.6)).abs() < 1e-12);
    }

    #[test]
    fn gamma_is_cross_section_times_density() {
        let s = parse_scenario(MINI).unwrap();
        assert_eq!(s.gamma_level(0), 0.2);
        assert_eq!(s.gamma_level(1), 0.1);
    }
}
