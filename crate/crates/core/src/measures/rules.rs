use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transformer size offered by replacement and new-substation measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerType {
    pub name: String,
    pub rated_power: f64,
    pub short_circuit_voltage: f64,
    pub short_circuit_losses: f64,
    pub cost: f64,
}

/// Which measure kinds discovery generates, and their thresholds and costs.
///
/// Lengths on the bus plane are in meters; `*_per_km` costs apply to km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanningRules {
    pub replace_lines: bool,
    /// Reconfiguration: the base network gets all switches closed and every
    /// closed non-stub switch becomes an `open_switch` measure.
    pub open_switches: bool,
    pub parallel_lines: bool,
    pub new_cabinet_parallel_lines: bool,
    pub new_substations: bool,
    pub replace_transformers: bool,
    pub change_taps: bool,
    pub new_line_trails: bool,

    /// Customer access lines up to this length (m) are never reinforced.
    pub customer_access_min_length_m: f64,
    /// New substations only at cabinets farther than this (m) from the
    /// existing one.
    pub substation_min_distance_m: f64,
    /// Airline distance factor for route lengths.
    pub trail_factor: f64,

    /// Overrides the catalog's `cost_per_km` by standard type name.
    pub line_cost_per_km: std::collections::BTreeMap<String, f64>,
    pub cabinet_cost: f64,
    pub substation_cost: f64,
    pub mv_connection_cost_per_km: f64,
    pub tap_change_cost: f64,

    /// Replacement targets are restricted to the largest catalog type.
    pub replace_with_max_only: bool,
    pub tap_range: Option<[i32; 2]>,
    pub transformer_types: Vec<TransformerType>,
    pub substation_transformer: Option<TransformerType>,

    /// Lines to be taken out of service. Each is offered for renewal along
    /// its old route, and every load point cut off by the removal needs at
    /// least one new trail touching it.
    pub decommission_lines: Vec<String>,
    /// Candidate routes between existing buses, costed at airline distance
    /// times `trail_factor`.
    pub trail_candidates: Vec<[String; 2]>,
    /// Standard type for new trails; defaults to the largest catalog type.
    pub trail_std_type: Option<String>,
}

impl Default for PlanningRules {
    fn default() -> Self {
        PlanningRules {
            replace_lines: true,
            open_switches: false,
            parallel_lines: false,
            new_cabinet_parallel_lines: false,
            new_substations: false,
            replace_transformers: false,
            change_taps: false,
            new_line_trails: false,
            customer_access_min_length_m: 50.0,
            substation_min_distance_m: 50.0,
            trail_factor: 1.5,
            line_cost_per_km: Default::default(),
            cabinet_cost: 0.0,
            substation_cost: 0.0,
            mv_connection_cost_per_km: 0.0,
            tap_change_cost: 0.0,
            replace_with_max_only: false,
            tap_range: None,
            transformer_types: Vec::new(),
            substation_transformer: None,
            decommission_lines: Vec::new(),
            trail_candidates: Vec::new(),
            trail_std_type: None,
        }
    }
}

impl PlanningRules {
    pub fn from_json(text: &str) -> Result<Self> {
        let rules: PlanningRules = serde_json::from_str(text).map_err(|source| Error::Parse {
            what: "planning rules",
            source,
        })?;
        rules.check()?;
        Ok(rules)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidRules(msg));
        for (name, v) in [
            ("customer_access_min_length_m", self.customer_access_min_length_m),
            ("substation_min_distance_m", self.substation_min_distance_m),
            ("cabinet_cost", self.cabinet_cost),
            ("substation_cost", self.substation_cost),
            ("mv_connection_cost_per_km", self.mv_connection_cost_per_km),
            ("tap_change_cost", self.tap_change_cost),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a non-negative number"));
            }
        }
        if !(self.trail_factor > 0.0 && self.trail_factor.is_finite()) {
            return bad("trail_factor must be positive".into());
        }
        if let Some([lo, hi]) = self.tap_range {
            if lo > hi {
                return bad("tap_range must satisfy min <= max".into());
            }
        }
        for (name, &c) in &self.line_cost_per_km {
            if !(c >= 0.0) {
                return bad(format!("line_cost_per_km[{name}] must be non-negative"));
            }
        }
        for t in self.transformer_types.iter().chain(&self.substation_transformer) {
            if !(t.rated_power > 0.0
                && t.short_circuit_voltage > 0.0
                && (0.0..=t.short_circuit_voltage).contains(&t.short_circuit_losses)
                && t.cost >= 0.0)
            {
                return bad(format!("transformer type `{}` has invalid parameters", t.name));
            }
        }
        if self.new_substations && self.substation_transformer.is_none() {
            return bad("new_substations requires substation_transformer".into());
        }
        for [a, b] in &self.trail_candidates {
            if a == b {
                return bad(format!("trail candidate `{a}`-`{b}` is a loop"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_keys() {
        let r = PlanningRules::from_json(r#"{"open_switches": true}"#).unwrap();
        assert!(r.open_switches && r.replace_lines);
        assert_eq!(r.trail_factor, 1.5);
        assert_eq!(r.customer_access_min_length_m, 50.0);
    }

    #[test]
    fn unknown_key_and_bad_values_rejected() {
        let err = PlanningRules::from_json(r#"{"open_switch": true}"#).unwrap_err();
        assert!(
            std::error::Error::source(&err)
                .unwrap()
                .to_string()
                .contains("open_switch"),
            "{err}"
        );
        assert!(PlanningRules::from_json(r#"{"trail_factor": 0}"#).is_err());
        assert!(PlanningRules::from_json(r#"{"new_substations": true}"#).is_err());
    }
}
