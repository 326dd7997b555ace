//! Planning measures: catalog, dependencies, application and discovery.

mod discovery;
mod rules;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Line, Network, Transformer};

pub use discovery::{discover_measures, initial_solution, prepare_base, PlanningProblem};
pub use rules::{PlanningRules, TransformerType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureAction {
    ReplaceLine {
        line: String,
        std_type: String,
    },
    OpenSwitch {
        switch: String,
    },
    /// Second line next to `line` with the given type.
    ParallelLine {
        line: String,
        std_type: String,
        new_line: String,
    },
    /// Parallel line plus new switching cabinets at `cabinets`.
    NewCabinetParallelLine {
        line: String,
        std_type: String,
        new_line: String,
        cabinets: Vec<String>,
    },
    /// New transformer from `hv_bus` directly to the cabinet `bus`; the
    /// cabinet's old supply over `split_line` is taken out of service.
    NewSubstationSplit {
        bus: String,
        hv_bus: String,
        split_line: String,
        new_transformer: String,
        transformer: TransformerType,
    },
    ReplaceTransformer {
        transformer: String,
        new_type: TransformerType,
    },
    ChangeTap {
        transformer: String,
        tap_position: i32,
    },
    NewLineTrail {
        from_bus: String,
        to_bus: String,
        length: f64,
        std_type: String,
        new_line: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub id: String,
    #[serde(flatten)]
    pub action: MeasureAction,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureCatalog {
    pub measures: Vec<Measure>,
    /// Unordered pairs, stored with the smaller id first.
    #[serde(default)]
    pub excludes: BTreeSet<(String, String)>,
    #[serde(default)]
    pub requires: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub at_least_one: Vec<BTreeSet<String>>,
}

impl MeasureCatalog {
    pub fn new(measures: Vec<Measure>) -> Self {
        MeasureCatalog {
            measures,
            ..MeasureCatalog::default()
        }
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Measure> {
        self.measures.iter().find(|m| m.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.measures.iter().map(|m| m.id.as_str())
    }

    pub fn exclude(&mut self, a: &str, b: &str) {
        let pair = if a < b { (a, b) } else { (b, a) };
        self.excludes.insert((pair.0.to_owned(), pair.1.to_owned()));
    }

    pub fn excludes_pair(&self, a: &str, b: &str) -> bool {
        let pair = if a < b { (a, b) } else { (b, a) };
        self.excludes.contains(&(pair.0.to_owned(), pair.1.to_owned()))
    }

    pub fn require(&mut self, id: &str, needed: &str) {
        self.requires
            .entry(id.to_owned())
            .or_default()
            .insert(needed.to_owned());
    }

    /// Every referenced id exists, ids are unique, no measure excludes or
    /// requires itself and costs are non-negative.
    pub fn check(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for m in &self.measures {
            if !ids.insert(m.id.as_str()) {
                return Err(Error::DuplicateMeasure(m.id.clone()));
            }
            if !(m.cost >= 0.0 && m.cost.is_finite()) {
                return Err(Error::InvalidRules(format!("measure `{}` has negative cost", m.id)));
            }
        }
        let known = |id: &String| {
            if ids.contains(id.as_str()) {
                Ok(())
            } else {
                Err(Error::UnknownMeasure(id.clone()))
            }
        };
        for (a, b) in &self.excludes {
            known(a)?;
            known(b)?;
            if a == b {
                return Err(Error::InvalidRules(format!("measure `{a}` excludes itself")));
            }
        }
        for (id, needed) in &self.requires {
            known(id)?;
            for n in needed {
                known(n)?;
                if n == id {
                    return Err(Error::InvalidRules(format!("measure `{id}` requires itself")));
                }
            }
        }
        for group in &self.at_least_one {
            if group.is_empty() {
                return Err(Error::InvalidRules("empty at_least_one group".into()));
            }
            group.iter().try_for_each(known)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let catalog: MeasureCatalog = serde_json::from_str(text).map_err(|source| Error::Parse {
            what: "measure catalog",
            source,
        })?;
        catalog.check()?;
        Ok(catalog)
    }

    pub(crate) fn index(&self) -> HashMap<&str, usize> {
        self.measures
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id.as_str(), i))
            .collect()
    }
}

/// A subset of the catalog, identified by measure id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Solution {
    pub measure_ids: BTreeSet<String>,
}

impl Solution {
    pub fn empty() -> Self {
        Solution::default()
    }

    pub fn len(&self) -> usize {
        self.measure_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure_ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.measure_ids.contains(id)
    }

    pub fn insert(&mut self, id: impl Into<String>) -> bool {
        self.measure_ids.insert(id.into())
    }

    pub fn remove(&mut self, id: &str) -> bool {
        self.measure_ids.remove(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.measure_ids.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for Solution {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Solution {
            measure_ids: iter.into_iter().map(Into::into).collect(),
        }
    }
}

pub fn solution_cost(solution: &Solution, catalog: &MeasureCatalog) -> Result<f64> {
    solution.iter().try_fold(0.0, |acc, id| {
        catalog
            .get(id)
            .map(|m| acc + m.cost)
            .ok_or_else(|| Error::UnknownMeasure(id.to_owned()))
    })
}

pub fn satisfies_dependencies(solution: &Solution, catalog: &MeasureCatalog) -> bool {
    let excluded = catalog
        .excludes
        .iter()
        .any(|(a, b)| solution.contains(a) && solution.contains(b));
    if excluded {
        return false;
    }
    let required = solution.iter().all(|id| {
        catalog
            .requires
            .get(id)
            .is_none_or(|needed| needed.iter().all(|n| solution.contains(n)))
    });
    required
        && catalog
            .at_least_one
            .iter()
            .all(|group| group.iter().any(|id| solution.contains(id)))
}

/// Which property of which element a measure writes; two measures writing
/// the same property cannot be combined.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Touch<'a> {
    LineType(&'a str),
    LineService(&'a str),
    NewLine(&'a str),
    NewTransformer(&'a str),
    TransformerType(&'a str),
    Tap(&'a str),
}

fn touches(action: &MeasureAction) -> Vec<Touch<'_>> {
    use MeasureAction::*;
    match action {
        ReplaceLine { line, .. } => vec![Touch::LineType(line)],
        OpenSwitch { .. } => vec![],
        ParallelLine { new_line, .. } | NewCabinetParallelLine { new_line, .. } => {
            vec![Touch::NewLine(new_line)]
        }
        NewSubstationSplit {
            split_line,
            new_transformer,
            ..
        } => vec![Touch::LineService(split_line), Touch::NewTransformer(new_transformer)],
        ReplaceTransformer { transformer, .. } => vec![Touch::TransformerType(transformer)],
        ChangeTap { transformer, .. } => vec![Touch::Tap(transformer)],
        NewLineTrail { new_line, .. } => vec![Touch::NewLine(new_line)],
    }
}

fn dangling(m: &Measure, what: &str) -> Error {
    Error::DanglingTarget(m.id.clone(), what.to_owned())
}

fn apply_one(net: &mut Network, m: &Measure) -> Result<()> {
    use MeasureAction::*;
    let need_bus = |net: &Network, bus: &str| net.bus(bus).map(|_| ()).ok_or_else(|| dangling(m, bus));
    let need_type = |net: &Network, name: &str| net.line_type(name).map(|_| ()).ok_or_else(|| dangling(m, name));
    match &m.action {
        ReplaceLine { line, std_type } => {
            need_type(net, std_type)?;
            net.line_mut(line).ok_or_else(|| dangling(m, line))?.std_type = std_type.clone();
        }
        OpenSwitch { switch } => {
            net.switches
                .iter_mut()
                .find(|s| &s.id == switch)
                .ok_or_else(|| dangling(m, switch))?
                .closed = false;
        }
        ParallelLine {
            line,
            std_type,
            new_line,
        } => {
            need_type(net, std_type)?;
            let mut copy = net.line(line).ok_or_else(|| dangling(m, line))?.clone();
            copy.id = new_line.clone();
            copy.std_type = std_type.clone();
            copy.in_service = true;
            net.lines.push(copy);
        }
        NewCabinetParallelLine {
            line,
            std_type,
            new_line,
            cabinets,
        } => {
            need_type(net, std_type)?;
            let mut copy = net.line(line).ok_or_else(|| dangling(m, line))?.clone();
            copy.id = new_line.clone();
            copy.std_type = std_type.clone();
            copy.in_service = true;
            net.lines.push(copy);
            for c in cabinets {
                net.buses
                    .iter_mut()
                    .find(|b| &b.id == c)
                    .ok_or_else(|| dangling(m, c))?
                    .is_switching_cabinet = true;
            }
        }
        NewSubstationSplit {
            bus,
            hv_bus,
            split_line,
            new_transformer,
            transformer,
        } => {
            need_bus(net, bus)?;
            need_bus(net, hv_bus)?;
            net.line_mut(split_line)
                .ok_or_else(|| dangling(m, split_line))?
                .in_service = false;
            net.transformers.push(Transformer {
                id: new_transformer.clone(),
                hv_bus: hv_bus.clone(),
                lv_bus: bus.clone(),
                rated_power: transformer.rated_power,
                short_circuit_voltage: transformer.short_circuit_voltage,
                short_circuit_losses: transformer.short_circuit_losses,
                tap_position: 0,
                tap_range: [0, 0],
                tap_step: 0.0,
                max_loading: 100.0,
            });
        }
        ReplaceTransformer { transformer, new_type } => {
            let t = net
                .transformers
                .iter_mut()
                .find(|t| &t.id == transformer)
                .ok_or_else(|| dangling(m, transformer))?;
            t.rated_power = new_type.rated_power;
            t.short_circuit_voltage = new_type.short_circuit_voltage;
            t.short_circuit_losses = new_type.short_circuit_losses;
        }
        ChangeTap {
            transformer,
            tap_position,
        } => {
            net.transformers
                .iter_mut()
                .find(|t| &t.id == transformer)
                .ok_or_else(|| dangling(m, transformer))?
                .tap_position = *tap_position;
        }
        NewLineTrail {
            from_bus,
            to_bus,
            length,
            std_type,
            new_line,
        } => {
            need_bus(net, from_bus)?;
            need_bus(net, to_bus)?;
            need_type(net, std_type)?;
            net.lines.push(Line {
                id: new_line.clone(),
                from_bus: from_bus.clone(),
                to_bus: to_bus.clone(),
                length: *length,
                std_type: std_type.clone(),
                max_loading: 100.0,
                in_service: true,
                is_customer_access: false,
            });
        }
    }
    Ok(())
}

/// Copy of `base` with every measure of `solution` applied, in catalog order.
pub fn apply(base: &Network, solution: &Solution, catalog: &MeasureCatalog) -> Result<Network> {
    let index = catalog.index();
    let mut chosen = Vec::with_capacity(solution.len());
    for id in solution.iter() {
        chosen.push(*index.get(id).ok_or_else(|| Error::UnknownMeasure(id.to_owned()))?);
    }
    chosen.sort_unstable();
    apply_indices(base, &chosen, catalog)
}

/// `chosen` must hold catalog indices in ascending order.
pub(crate) fn apply_indices(base: &Network, chosen: &[usize], catalog: &MeasureCatalog) -> Result<Network> {
    let mut owner: HashMap<Touch<'_>, &str> = HashMap::new();
    for &i in chosen {
        let m = &catalog.measures[i];
        for t in touches(&m.action) {
            if let Some(prev) = owner.insert(t.clone(), &m.id) {
                return Err(Error::Conflict(prev.to_owned(), m.id.clone(), describe(&t)));
            }
        }
    }
    let mut net = base.clone();
    for &i in chosen {
        apply_one(&mut net, &catalog.measures[i])?;
    }
    Ok(net)
}

fn describe(t: &Touch<'_>) -> String {
    match t {
        Touch::LineType(id) => format!("both change the type of line `{id}`"),
        Touch::LineService(id) => format!("both take line `{id}` out of service"),
        Touch::NewLine(id) => format!("both add line `{id}`"),
        Touch::NewTransformer(id) => format!("both add transformer `{id}`"),
        Touch::TransformerType(id) => format!("both replace transformer `{id}`"),
        Touch::Tap(id) => format!("both set the tap of transformer `{id}`"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn sol(ids: &[&str]) -> Solution {
        ids.iter().copied().collect()
    }

    #[test]
    fn empty_solution_is_identity() {
        let p = fixtures::intro_problem();
        assert_eq!(apply(&p.base, &Solution::empty(), &p.catalog).unwrap(), p.base);
        assert_eq!(solution_cost(&Solution::empty(), &p.catalog).unwrap(), 0.0);
    }

    #[test]
    fn replace_line_two_changes_only_line_two() {
        let p = fixtures::intro_replace_problem();
        let net = apply(&p.base, &sol(&["REPLACE_LINE_2"]), &p.catalog).unwrap();
        let max = p.base.max_line_type().unwrap().name.clone();
        let mut expected = p.base.clone();
        expected.line_mut("2").unwrap().std_type = max;
        assert_eq!(net, expected);
        assert_eq!(solution_cost(&sol(&["REPLACE_LINE_2"]), &p.catalog).unwrap(), 7.0);
    }

    #[test]
    fn sectioning_move_and_reinforcement() {
        let p = fixtures::intro_problem();
        let s = sol(&["OPEN_SWITCH_4", "REPLACE_LINE_6"]);
        let net = apply(&p.base, &s, &p.catalog).unwrap();
        assert!(!net.switch("4").unwrap().closed);
        assert!(net.switches.iter().filter(|s| s.id != "4").all(|s| s.closed));
        assert_eq!(net.line("6").unwrap().std_type, p.base.max_line_type().unwrap().name);
        assert_eq!(solution_cost(&s, &p.catalog).unwrap(), 4.0);
        assert_eq!(p.base, fixtures::intro_ring().with_all_switches_closed());
    }

    #[test]
    fn unknown_measure_is_an_error() {
        let p = fixtures::intro_problem();
        assert!(matches!(
            solution_cost(&sol(&["NOPE"]), &p.catalog),
            Err(Error::UnknownMeasure(_))
        ));
        assert!(matches!(
            apply(&p.base, &sol(&["NOPE"]), &p.catalog),
            Err(Error::UnknownMeasure(_))
        ));
    }

    #[test]
    fn two_replacements_of_one_line_conflict() {
        let p = fixtures::intro_problem();
        let mut catalog = p.catalog.clone();
        let mut twin = catalog.get("REPLACE_LINE_2").unwrap().clone();
        twin.id = "REPLACE_LINE_2_AGAIN".into();
        catalog.measures.push(twin);
        let err = apply(&p.base, &sol(&["REPLACE_LINE_2", "REPLACE_LINE_2_AGAIN"]), &catalog).unwrap_err();
        assert!(matches!(err, Error::Conflict(..)), "{err}");
    }

    #[test]
    fn dependency_examples() {
        let p = fixtures::intro_problem();
        assert!(satisfies_dependencies(&Solution::empty(), &MeasureCatalog::default()));
        // switches 2 and 3 section line 2
        assert!(!satisfies_dependencies(
            &sol(&["OPEN_SWITCH_2", "OPEN_SWITCH_3"]),
            &p.catalog
        ));
        assert!(satisfies_dependencies(
            &sol(&["OPEN_SWITCH_3", "OPEN_SWITCH_7"]),
            &p.catalog
        ));

        let mut catalog = p.catalog.clone();
        catalog.exclude("OPEN_SWITCH_1", "OPEN_SWITCH_2");
        assert!(!satisfies_dependencies(
            &sol(&["OPEN_SWITCH_1", "OPEN_SWITCH_2"]),
            &catalog
        ));

        catalog.measures.push(Measure {
            id: "PARALLEL_LINE_2".into(),
            action: MeasureAction::ParallelLine {
                line: "2".into(),
                std_type: p.base.max_line_type().unwrap().name.clone(),
                new_line: "2_parallel".into(),
            },
            cost: 7.0,
        });
        catalog.require("PARALLEL_LINE_2", "REPLACE_LINE_2");
        catalog.check().unwrap();
        assert!(!satisfies_dependencies(&sol(&["PARALLEL_LINE_2"]), &catalog));
        assert!(satisfies_dependencies(
            &sol(&["PARALLEL_LINE_2", "REPLACE_LINE_2"]),
            &catalog
        ));

        catalog
            .at_least_one
            .push(sol(&["REPLACE_LINE_1", "REPLACE_LINE_5"]).measure_ids);
        assert!(!satisfies_dependencies(&Solution::empty(), &catalog));
        assert!(satisfies_dependencies(&sol(&["REPLACE_LINE_5"]), &catalog));
    }

    #[test]
    fn catalog_check_catches_bad_references() {
        let mut c = fixtures::intro_problem().catalog;
        c.check().unwrap();
        c.require("REPLACE_LINE_1", "GHOST");
        assert!(matches!(c.check(), Err(Error::UnknownMeasure(_))));
    }

    #[test]
    fn catalog_json_round_trip() {
        let c = fixtures::intro_problem().catalog;
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains(r#""kind":"open_switch""#));
        assert_eq!(MeasureCatalog::from_json(&text).unwrap(), c);
    }

    #[test]
    fn application_matches_hand_built_network() {
        let p = fixtures::intro_problem();
        let cases = fixtures::intro_cases();
        let net = apply(&p.base, &sol(&["OPEN_SWITCH_7", "REPLACE_LINE_3"]), &p.catalog).unwrap();
        let mut hand = fixtures::intro_ring().with_all_switches_closed();
        hand.switches.iter_mut().find(|s| s.id == "7").unwrap().closed = false;
        hand.line_mut("3").unwrap().std_type = hand.max_line_type().unwrap().name.clone();
        assert_eq!(
            crate::constraints::evaluate(&net, &cases).unwrap(),
            crate::constraints::evaluate(&hand, &cases).unwrap()
        );
    }

    proptest! {
        #[test]
        fn cost_is_additive_and_apply_order_free(mask in 0u32..(1 << 16), split in 0u32..(1 << 16)) {
            let p = fixtures::intro_problem();
            let ids: Vec<&str> = p.catalog.ids().collect();
            let pick = |m: u32| -> Solution {
                ids.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, id)| *id).collect()
            };
            let a = pick(mask & split);
            let b = pick(mask & !split);
            let all = pick(mask);
            let sum = solution_cost(&a, &p.catalog).unwrap() + solution_cost(&b, &p.catalog).unwrap();
            prop_assert!((solution_cost(&all, &p.catalog).unwrap() - sum).abs() < 1e-12);

            let mut reversed = p.catalog.clone();
            reversed.measures.reverse();
            prop_assert_eq!(
                apply(&p.base, &all, &p.catalog).unwrap(),
                apply(&p.base, &all, &reversed).unwrap()
            );
        }
    }
}
