//! Probabilistic PV scenarios and batch planning studies.

mod study;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Generator, InjectionKind, Network};

pub use study::{
    aggregate, revalidate, run_study, sample_seed, SampleRecord, StudyOptions, StudyResult, StudySummary, SummaryRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementRule {
    /// Every load point equally likely per unit.
    UniformOverLoadPoints,
    /// Buses drawn in proportion to their remaining potential, which also
    /// caps the capacity per bus.
    WeightedByPotential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResScenario {
    pub name: String,
    /// MW to install.
    pub total_capacity: f64,
    pub placement_rule: PlacementRule,
    /// MW per bus, used by [`PlacementRule::WeightedByPotential`].
    #[serde(default)]
    pub potential: BTreeMap<String, f64>,
    /// Each installation draws its size uniformly from `[min, max]` MW.
    pub unit_size_range: [f64; 2],
    /// Units absorb reactive power `P * tan(acos(pf))`.
    #[serde(default = "unity")]
    pub power_factor: f64,
    /// Uniform factor on all existing loads.
    #[serde(default = "unity")]
    pub load_scale: f64,
}

fn unity() -> f64 {
    1.0
}

impl ResScenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: ResScenario = serde_json::from_str(text).map_err(|source| Error::Parse {
            what: "scenario",
            source,
        })?;
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Scenario(self.name.clone(), msg.to_owned()));
        let [lo, hi] = self.unit_size_range;
        if !(self.total_capacity >= 0.0 && self.total_capacity.is_finite()) {
            return bad("total_capacity must be a non-negative number");
        }
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("unit_size_range must satisfy 0 < min <= max");
        }
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return bad("power_factor must lie in (0, 1]");
        }
        if !(self.load_scale >= 0.0 && self.load_scale.is_finite()) {
            return bad("load_scale must be non-negative");
        }
        if self.potential.values().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return bad("potentials must be non-negative");
        }
        Ok(())
    }
}

/// Remaining capacity below this is considered placed.
const CAPACITY_EPS: f64 = 1e-9;

/// Copy of `network` with PV units added until the scenario's capacity is
/// installed. The last unit is truncated to the remaining capacity.
pub fn sample_res(network: &Network, scenario: &ResScenario, seed: u64) -> Result<Network> {
    scenario.check()?;
    let mut out = network.clone();
    if scenario.load_scale != 1.0 {
        for l in &mut out.loads {
            l.active_power *= scenario.load_scale;
            l.reactive_power *= scenario.load_scale;
        }
    }
    if scenario.total_capacity <= CAPACITY_EPS {
        return Ok(out);
    }
    let fail = |msg: String| Error::Scenario(scenario.name.clone(), msg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_per_p = -(scenario.power_factor.acos().tan());
    let [lo, hi] = scenario.unit_size_range;

    let mut room: Vec<(String, f64)> = match scenario.placement_rule {
        PlacementRule::UniformOverLoadPoints => network
            .load_points()
            .into_iter()
            .map(|b| (b.to_owned(), f64::INFINITY))
            .collect(),
        PlacementRule::WeightedByPotential => {
            for bus in scenario.potential.keys() {
                if network.bus(bus).is_none() {
                    return Err(fail(format!("potential names unknown bus `{bus}`")));
                }
            }
            scenario
                .potential
                .iter()
                .filter(|(_, &p)| p > 0.0)
                .map(|(b, &p)| (b.clone(), p))
                .collect()
        }
    };
    let available: f64 = room.iter().map(|(_, r)| r).sum();
    if room.is_empty() || available + CAPACITY_EPS < scenario.total_capacity {
        return Err(fail(format!(
            "{} MW cannot be placed under {:?}",
            scenario.total_capacity, scenario.placement_rule
        )));
    }

    let mut remaining = scenario.total_capacity;
    let mut unit = 0;
    while remaining > CAPACITY_EPS {
        let k = match scenario.placement_rule {
            PlacementRule::UniformOverLoadPoints => rng.random_range(0..room.len()),
            PlacementRule::WeightedByPotential => {
                let total: f64 = room.iter().map(|(_, r)| r).sum();
                let mut x = rng.random_range(0.0..total);
                let mut k = room.len() - 1;
                for (i, (_, r)) in room.iter().enumerate() {
                    if x < *r {
                        k = i;
                        break;
                    }
                    x -= r;
                }
                k
            }
        };
        let size = if lo == hi { lo } else { rng.random_range(lo..=hi) };
        let size = size.min(remaining).min(room[k].1);
        room[k].1 -= size;
        remaining -= size;
        out.generators.push(Generator {
            id: format!("pv_{}_{unit}", scenario.name),
            bus: room[k].0.clone(),
            active_power: size,
            reactive_power: size * q_per_p,
            kind: InjectionKind::Pv,
        });
        unit += 1;
        if room[k].1 <= CAPACITY_EPS {
            room.swap_remove(k);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn installed(net: &Network, base: &Network) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for g in &net.generators[base.generators.len()..] {
            *out.entry(g.bus.clone()).or_insert(0.0) += g.active_power;
        }
        out
    }

    #[test]
    fn zero_capacity_leaves_network_unchanged() {
        let base = fixtures::intro_ring_without_pv();
        let s = ResScenario {
            total_capacity: 0.0,
            ..fixtures::conservative_scenario()
        };
        assert_eq!(sample_res(&base, &s, 1).unwrap(), base);
    }

    #[test]
    fn seeds_are_deterministic_and_totals_exact() {
        let base = fixtures::intro_ring_without_pv();
        let s = fixtures::conservative_scenario();
        assert_eq!(sample_res(&base, &s, 7).unwrap(), sample_res(&base, &s, 7).unwrap());
        let mut layouts = std::collections::BTreeSet::new();
        for seed in 0..50 {
            let net = sample_res(&base, &s, seed).unwrap();
            let per_bus = installed(&net, &base);
            let total: f64 = per_bus.values().sum();
            assert!((total - s.total_capacity).abs() < 1e-9);
            for g in &net.generators {
                assert!(g.active_power <= s.unit_size_range[1] + 1e-12);
            }
            layouts.insert(format!("{per_bus:?}"));
        }
        assert!(layouts.len() > 45, "only {} distinct layouts", layouts.len());
    }

    #[test]
    fn weighted_placement_respects_potential() {
        let base = fixtures::intro_ring_without_pv();
        let s = ResScenario {
            name: "roofs".into(),
            total_capacity: 3.0,
            placement_rule: PlacementRule::WeightedByPotential,
            potential: [("B1".to_owned(), 1.0), ("B4".to_owned(), 2.0)].into_iter().collect(),
            unit_size_range: [0.3, 0.7],
            power_factor: 0.95,
            load_scale: 1.0,
        };
        let net = sample_res(&base, &s, 3).unwrap();
        let per_bus = installed(&net, &base);
        assert!((per_bus["B1"] - 1.0).abs() < 1e-9);
        assert!((per_bus["B4"] - 2.0).abs() < 1e-9);
        assert!(net.generators.iter().all(|g| g.reactive_power < 0.0));

        let too_much = ResScenario {
            total_capacity: 3.5,
            ..s
        };
        assert!(matches!(sample_res(&base, &too_much, 3), Err(Error::Scenario(..))));
    }

    #[test]
    fn invalid_scenarios_rejected() {
        let s = ResScenario {
            unit_size_range: [0.0, 1.0],
            ..fixtures::conservative_scenario()
        };
        assert!(s.check().is_err());
        assert!(ResScenario::from_json(r#"{"name": "x"}"#).is_err());
    }
}
