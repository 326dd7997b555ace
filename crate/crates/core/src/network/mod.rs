//! Distribution network data model.
//!
//! A [`Network`] is a plain value: buses, branches (lines and transformers),
//! sectioning switches on lines, and the loads and generators attached to
//! buses. It is never mutated in place by the planning code; measures produce
//! modified copies.
//!
//! Units follow the JSON file format: kV, km, MW, MVar, MVA, percent, and
//! positions in meters.

pub(crate) mod graph;
mod topology;
mod validate;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use topology::{analyze_topology, path_to_source, Feeder, TopologyReport};
pub use validate::{validate, ValidationReport, Violation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    #[serde(default)]
    pub name: String,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    #[serde(rename = "line_types")]
    pub line_type_catalog: Vec<LineStandardType>,
    #[serde(default)]
    pub transformers: Vec<Transformer>,
    #[serde(default)]
    pub switches: Vec<Switch>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    pub source: Source,
}

/// Slack bus and its voltage set point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub bus: String,
    /// Per-unit voltage magnitude held at the slack bus.
    pub voltage_setpoint: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance_m(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    pub nominal_voltage: f64,
    #[serde(default)]
    pub is_switching_cabinet: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Position>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    pub length: f64,
    pub std_type: String,
    #[serde(default = "default_max_loading")]
    pub max_loading: f64,
    #[serde(default = "default_true")]
    pub in_service: bool,
    #[serde(default)]
    pub is_customer_access: bool,
}

impl Line {
    pub fn other_end(&self, bus: &str) -> Option<&str> {
        if self.from_bus == bus {
            Some(&self.to_bus)
        } else if self.to_bus == bus {
            Some(&self.from_bus)
        } else {
            None
        }
    }
}

/// Cable or overhead line type. `diameter_rank` orders the catalog: a higher
/// rank is a "bigger" conductor and a valid reinforcement target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineStandardType {
    pub name: String,
    pub r_per_km: f64,
    pub x_per_km: f64,
    /// Thermal limit in kA.
    pub max_current: f64,
    pub cost_per_km: f64,
    pub diameter_rank: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transformer {
    pub id: String,
    pub hv_bus: String,
    pub lv_bus: String,
    /// MVA.
    pub rated_power: f64,
    /// Short-circuit voltage in percent of rated voltage.
    pub short_circuit_voltage: f64,
    /// Resistive part of the short-circuit voltage, percent.
    pub short_circuit_losses: f64,
    #[serde(default)]
    pub tap_position: i32,
    #[serde(default)]
    pub tap_range: [i32; 2],
    /// Percent change of the voltage ratio per tap step.
    #[serde(default)]
    pub tap_step: f64,
    #[serde(default = "default_max_loading")]
    pub max_loading: f64,
}

impl Transformer {
    /// Off-nominal voltage ratio applied on the LV side.
    pub fn ratio(&self) -> f64 {
        1.0 + f64::from(self.tap_position) * self.tap_step / 100.0
    }
}

/// Load-break switch sectioning `line_id` at its `bus_id` end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Switch {
    pub id: String,
    pub line_id: String,
    pub bus_id: String,
    pub closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    Load,
    Pv,
    Wind,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub id: String,
    pub bus: String,
    pub active_power: f64,
    pub reactive_power: f64,
    #[serde(default = "default_load_kind")]
    pub kind: InjectionKind,
}

/// Generation in producer convention. Negative reactive power absorbs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub active_power: f64,
    pub reactive_power: f64,
    #[serde(default = "default_gen_kind")]
    pub kind: InjectionKind,
}

fn default_max_loading() -> f64 {
    100.0
}

fn default_true() -> bool {
    true
}

fn default_load_kind() -> InjectionKind {
    InjectionKind::Load
}

fn default_gen_kind() -> InjectionKind {
    InjectionKind::Pv
}

impl Network {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Parse {
            what: "network",
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn bus(&self, id: &str) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn line(&self, id: &str) -> Option<&Line> {
        self.lines.iter().find(|l| l.id == id)
    }

    pub fn line_mut(&mut self, id: &str) -> Option<&mut Line> {
        self.lines.iter_mut().find(|l| l.id == id)
    }

    pub fn transformer(&self, id: &str) -> Option<&Transformer> {
        self.transformers.iter().find(|t| t.id == id)
    }

    pub fn switch(&self, id: &str) -> Option<&Switch> {
        self.switches.iter().find(|s| s.id == id)
    }

    pub fn line_type(&self, name: &str) -> Option<&LineStandardType> {
        self.line_type_catalog.iter().find(|t| t.name == name)
    }

    /// The catalog type with the highest diameter rank.
    pub fn max_line_type(&self) -> Option<&LineStandardType> {
        self.line_type_catalog.iter().max_by_key(|t| t.diameter_rank)
    }

    /// Buses carrying at least one load element.
    pub fn load_points(&self) -> BTreeSet<&str> {
        self.loads.iter().map(|l| l.bus.as_str()).collect()
    }

    /// A line conducts iff it is in service and every switch on it is closed.
    pub fn line_is_active(&self, line: &Line) -> bool {
        line.in_service && self.switches.iter().all(|s| s.line_id != line.id || s.closed)
    }

    /// Source bus plus the LV terminals of all transformers. Line paths
    /// towards the source end at one of these.
    pub fn substation_buses(&self) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = self.transformers.iter().map(|t| t.lv_bus.as_str()).collect();
        out.insert(self.source.bus.as_str());
        out
    }

    pub fn total_line_length(&self) -> f64 {
        self.lines.iter().filter(|l| l.in_service).map(|l| l.length).sum()
    }

    /// Copy of the network with every switch closed.
    pub fn with_all_switches_closed(&self) -> Network {
        let mut out = self.clone();
        for s in &mut out.switches {
            s.closed = true;
        }
        out
    }

    pub(crate) fn bus_index(&self) -> HashMap<&str, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn json_round_trip_preserves_network() {
        let net = fixtures::intro_ring();
        let text = net.to_json();
        assert_eq!(Network::from_json(&text).unwrap(), net);
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let mut value: serde_json::Value = serde_json::from_str(&fixtures::intro_ring().to_json()).unwrap();
        value["feeders"] = serde_json::json!([]);
        let err = Network::from_json(&value.to_string()).unwrap_err();
        assert!(
            std::error::Error::source(&err).unwrap().to_string().contains("feeders"),
            "{err}"
        );

        let mut value: serde_json::Value = serde_json::from_str(&fixtures::intro_ring().to_json()).unwrap();
        value["lines"][0]["colour"] = serde_json::json!("red");
        let err = Network::from_json(&value.to_string()).unwrap_err();
        assert!(
            std::error::Error::source(&err).unwrap().to_string().contains("colour"),
            "{err}"
        );
    }

    #[test]
    fn switch_state_controls_line_activity() {
        let net = fixtures::intro_ring();
        let line4 = net.line("4").unwrap();
        assert!(!net.line_is_active(line4));
        assert!(net.line_is_active(net.line("3").unwrap()));
        let closed = net.with_all_switches_closed();
        assert!(closed.line_is_active(closed.line("4").unwrap()));
    }

    #[test]
    fn tap_ratio_moves_by_step_percent() {
        let mut t = fixtures::intro_ring().transformers[0].clone();
        t.tap_step = 1.5;
        t.tap_position = -2;
        assert!((t.ratio() - 0.97).abs() < 1e-12);
    }
}
