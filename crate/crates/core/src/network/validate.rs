use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Network;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Element class, e.g. `line` or `switch`.
    pub element: String,
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, element: &str, id: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            element: element.to_owned(),
            id: id.to_owned(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} `{}`: {}", v.element, v.id, v.message)?;
        }
        Ok(())
    }
}

fn check_unique<'a>(report: &mut ValidationReport, element: &str, ids: impl Iterator<Item = &'a str>) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            report.push(element, id, "duplicate id");
        }
    }
}

/// Collect every invariant violation of `network`. An empty report means the
/// network is valid.
pub fn validate(network: &Network) -> ValidationReport {
    let mut report = ValidationReport::default();

    check_unique(&mut report, "bus", network.buses.iter().map(|b| b.id.as_str()));
    check_unique(&mut report, "line", network.lines.iter().map(|l| l.id.as_str()));
    check_unique(
        &mut report,
        "line_type",
        network.line_type_catalog.iter().map(|t| t.name.as_str()),
    );
    check_unique(
        &mut report,
        "transformer",
        network.transformers.iter().map(|t| t.id.as_str()),
    );
    check_unique(&mut report, "switch", network.switches.iter().map(|s| s.id.as_str()));
    check_unique(&mut report, "load", network.loads.iter().map(|l| l.id.as_str()));
    check_unique(
        &mut report,
        "generator",
        network.generators.iter().map(|g| g.id.as_str()),
    );

    let buses: HashSet<&str> = network.buses.iter().map(|b| b.id.as_str()).collect();

    for bus in &network.buses {
        if !(bus.nominal_voltage > 0.0) {
            report.push("bus", &bus.id, "nominal_voltage must be positive");
        }
    }

    if !buses.contains(network.source.bus.as_str()) {
        report.push("source", &network.source.bus, "source bus does not exist");
    }
    if !(network.source.voltage_setpoint > 0.0) {
        report.push("source", &network.source.bus, "voltage_setpoint must be positive");
    }

    let mut ranks = HashSet::new();
    for t in &network.line_type_catalog {
        if !(t.r_per_km >= 0.0) || !(t.x_per_km >= 0.0) {
            report.push("line_type", &t.name, "impedance must be non-negative");
        }
        if !(t.max_current > 0.0) {
            report.push("line_type", &t.name, "max_current must be positive");
        }
        if !(t.cost_per_km >= 0.0) {
            report.push("line_type", &t.name, "cost_per_km must be non-negative");
        }
        if !ranks.insert(t.diameter_rank) {
            report.push("line_type", &t.name, "diameter_rank is not unique");
        }
    }

    for line in &network.lines {
        for end in [&line.from_bus, &line.to_bus] {
            if !buses.contains(end.as_str()) {
                report.push("line", &line.id, format!("endpoint bus `{end}` does not exist"));
            }
        }
        if line.from_bus == line.to_bus {
            report.push("line", &line.id, "from_bus equals to_bus");
        }
        if !(line.length > 0.0) {
            report.push("line", &line.id, "length must be positive");
        }
        if !(line.max_loading > 0.0) {
            report.push("line", &line.id, "max_loading must be positive");
        }
        if network.line_type(&line.std_type).is_none() {
            report.push(
                "line",
                &line.id,
                format!("std_type `{}` is not in the catalog", line.std_type),
            );
        }
    }

    for t in &network.transformers {
        for end in [&t.hv_bus, &t.lv_bus] {
            if !buses.contains(end.as_str()) {
                report.push("transformer", &t.id, format!("terminal bus `{end}` does not exist"));
            }
        }
        if t.hv_bus == t.lv_bus {
            report.push("transformer", &t.id, "hv_bus equals lv_bus");
        }
        if !(t.rated_power > 0.0) {
            report.push("transformer", &t.id, "rated_power must be positive");
        }
        if !(t.short_circuit_voltage > 0.0) {
            report.push("transformer", &t.id, "short_circuit_voltage must be positive");
        }
        if !(t.short_circuit_losses >= 0.0 && t.short_circuit_losses <= t.short_circuit_voltage) {
            report.push(
                "transformer",
                &t.id,
                "short_circuit_losses must lie in [0, short_circuit_voltage]",
            );
        }
        let [lo, hi] = t.tap_range;
        if !(lo <= t.tap_position && t.tap_position <= hi) {
            report.push("transformer", &t.id, "tap_position outside tap_range");
        }
        if !(t.max_loading > 0.0) {
            report.push("transformer", &t.id, "max_loading must be positive");
        }
    }

    for s in &network.switches {
        match network.line(&s.line_id) {
            None => report.push("switch", &s.id, format!("line `{}` does not exist", s.line_id)),
            Some(line) => {
                if line.from_bus != s.bus_id && line.to_bus != s.bus_id {
                    report.push(
                        "switch",
                        &s.id,
                        format!("bus `{}` is not an endpoint of line `{}`", s.bus_id, s.line_id),
                    );
                }
            }
        }
        if !buses.contains(s.bus_id.as_str()) {
            report.push("switch", &s.id, format!("bus `{}` does not exist", s.bus_id));
        }
    }

    for l in &network.loads {
        if !buses.contains(l.bus.as_str()) {
            report.push("load", &l.id, format!("bus `{}` does not exist", l.bus));
        }
    }
    for g in &network.generators {
        if !buses.contains(g.bus.as_str()) {
            report.push("generator", &g.id, format!("bus `{}` does not exist", g.bus));
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn intro_ring_is_valid() {
        let report = validate(&fixtures::intro_ring());
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn missing_bus_is_reported_once_naming_the_line() {
        let mut net = fixtures::intro_ring();
        net.lines[0].from_bus = "nowhere".into();
        let report = validate(&net);
        assert_eq!(report.violations.len(), 1, "{report}");
        assert_eq!(report.violations[0].element, "line");
        assert_eq!(report.violations[0].id, net.lines[0].id);
    }

    #[test]
    fn duplicate_line_id_is_reported() {
        let mut net = fixtures::intro_ring();
        let dup = net.lines[1].id.clone();
        let old = std::mem::replace(&mut net.lines[2].id, dup);
        // switches of the renamed line would dangle
        net.switches.retain(|s| s.line_id != old);
        let report = validate(&net);
        assert_eq!(report.violations.len(), 1, "{report}");
        assert_eq!(report.violations[0].message, "duplicate id");
    }

    #[test]
    fn switch_must_sit_on_an_endpoint() {
        let mut net = fixtures::intro_ring();
        net.switches[0].bus_id = "B5".into();
        let report = validate(&net);
        assert_eq!(report.violations.len(), 1, "{report}");
        assert_eq!(report.violations[0].element, "switch");
    }

    #[test]
    fn unresolved_std_type_and_bad_tap() {
        let mut net = fixtures::intro_ring();
        net.lines[0].std_type = "copper wire".into();
        net.transformers[0].tap_position = 99;
        let report = validate(&net);
        assert_eq!(report.violations.len(), 2, "{report}");
    }
}
