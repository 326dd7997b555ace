use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::rules::PlanningRules;
use super::{satisfies_dependencies, Measure, MeasureAction, MeasureCatalog, Solution};
use crate::constraints::{evaluate, ConstraintReport};
use crate::error::{Error, Result};
use crate::network::graph::Graph;
use crate::network::{path_to_source, validate, LineStandardType, Network, Position};
use crate::power_flow::LoadCase;

/// Everything a search needs: the prepared base network, the measure
/// catalog discovered for it and the worst-case load cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningProblem {
    pub base: Network,
    pub catalog: MeasureCatalog,
    pub cases: Vec<LoadCase>,
}

impl PlanningProblem {
    /// Evaluate `network`, discover measures and prepare the base.
    pub fn discover(network: &Network, rules: &PlanningRules, cases: Vec<LoadCase>) -> Result<Self> {
        rules.check()?;
        for c in &cases {
            c.check()?;
        }
        let report = evaluate(network, &cases)?;
        let catalog = discover_measures(network, &report, rules)?;
        Ok(PlanningProblem {
            base: prepare_base(network, rules)?,
            catalog,
            cases,
        })
    }
}

/// The network measures are applied to: all switches closed when
/// reconfiguration is enabled, decommissioned lines out of service.
pub fn prepare_base(network: &Network, rules: &PlanningRules) -> Result<Network> {
    let mut base = if rules.open_switches {
        network.with_all_switches_closed()
    } else {
        network.clone()
    };
    for id in &rules.decommission_lines {
        base.line_mut(id)
            .ok_or_else(|| Error::InvalidRules(format!("decommissioned line `{id}` does not exist")))?
            .in_service = false;
    }
    Ok(base)
}

fn position<'a>(network: &'a Network, bus: &str, rule: &'static str) -> Result<&'a Position> {
    network
        .bus(bus)
        .ok_or_else(|| Error::UnknownBus(bus.to_owned()))?
        .position
        .as_ref()
        .ok_or_else(|| Error::MissingGeometry {
            rule,
            bus: bus.to_owned(),
        })
}

fn cost_per_km(rules: &PlanningRules, t: &LineStandardType) -> f64 {
    rules.line_cost_per_km.get(&t.name).copied().unwrap_or(t.cost_per_km)
}

/// Candidate catalog for `network` given its constraint `report`.
///
/// Reinforcement candidates are the lines lying on some simple path, in the
/// prepared base, from a load point with a voltage violation to a
/// substation bus, plus the overloaded lines themselves.
pub fn discover_measures(
    network: &Network,
    report: &ConstraintReport,
    rules: &PlanningRules,
) -> Result<MeasureCatalog> {
    rules.check()?;
    let validation = validate(network);
    if !validation.is_valid() {
        return Err(Error::InvalidNetwork(validation));
    }
    let base = prepare_base(network, rules)?;
    let index = base.bus_index();
    let graph = Graph::active(&base, &index);
    let substations: Vec<usize> = base.substation_buses().iter().map(|b| index[b]).collect();

    let mut on_path = vec![false; base.lines.len()];
    for bus in &report.voltage_violations {
        let Some(&v) = index.get(bus.as_str()) else {
            return Err(Error::UnknownBus(bus.clone()));
        };
        for (e, edge) in graph.edges.iter().enumerate() {
            if !edge.lines.is_empty() && graph.edge_on_simple_path(e, v, &substations) {
                for &l in &edge.lines {
                    on_path[l] = true;
                }
            }
        }
    }
    for id in &report.overloaded_lines {
        if let Some(i) = base.lines.iter().position(|l| &l.id == id) {
            on_path[i] = true;
        }
    }
    let candidates: Vec<usize> = (0..base.lines.len())
        .filter(|&i| {
            let l = &base.lines[i];
            on_path[i] && !(l.is_customer_access && l.length * 1000.0 <= rules.customer_access_min_length_m)
        })
        .collect();

    let mut catalog = MeasureCatalog::default();
    let max_type = base.max_line_type().cloned();

    // (b) sectioning points
    if rules.open_switches {
        let bridges = graph.bridges();
        let mut by_line: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for s in &base.switches {
            let Some(li) = base.lines.iter().position(|l| l.id == s.line_id) else {
                continue;
            };
            if !base.line_is_active(&base.lines[li]) {
                continue;
            }
            let stub = graph
                .edges
                .iter()
                .position(|e| e.lines.contains(&li))
                .is_some_and(|e| bridges[e]);
            if stub {
                continue;
            }
            let id = format!("OPEN_SWITCH_{}", s.id);
            catalog.measures.push(Measure {
                id: id.clone(),
                action: MeasureAction::OpenSwitch { switch: s.id.clone() },
                cost: 0.0,
            });
            by_line.entry(&s.line_id).or_default().push(id);
        }
        for ids in by_line.values() {
            for (i, a) in ids.iter().enumerate() {
                for b in &ids[i + 1..] {
                    catalog.exclude(a, b);
                }
            }
        }
    }

    // (a) reinforcement, remembering the replacement to the largest type
    let mut to_max: BTreeMap<usize, String> = BTreeMap::new();
    if rules.replace_lines {
        for &i in &candidates {
            let line = &base.lines[i];
            let rank = base.line_type(&line.std_type).expect("validated").diameter_rank;
            let mut targets: Vec<&LineStandardType> = base
                .line_type_catalog
                .iter()
                .filter(|t| t.diameter_rank > rank)
                .collect();
            targets.sort_by_key(|t| t.diameter_rank);
            if rules.replace_with_max_only {
                targets.drain(..targets.len().saturating_sub(1));
            }
            let single = targets.len() == 1;
            let mut ids = Vec::new();
            for t in targets {
                let id = if single {
                    format!("REPLACE_LINE_{}", line.id)
                } else {
                    format!("REPLACE_LINE_{}_{}", line.id, t.name)
                };
                if max_type.as_ref().is_some_and(|m| m.name == t.name) {
                    to_max.insert(i, id.clone());
                }
                catalog.measures.push(Measure {
                    id: id.clone(),
                    action: MeasureAction::ReplaceLine {
                        line: line.id.clone(),
                        std_type: t.name.clone(),
                    },
                    cost: line.length * cost_per_km(rules, t),
                });
                ids.push(id);
            }
            for (k, a) in ids.iter().enumerate() {
                for b in &ids[k + 1..] {
                    catalog.exclude(a, b);
                }
            }
        }
    }

    // (c), (d) parallel lines, only once the line itself has the largest type
    if let Some(max) = &max_type {
        for &i in &candidates {
            let line = &base.lines[i];
            let prerequisite = if line.std_type == max.name {
                None
            } else {
                match to_max.get(&i) {
                    Some(id) => Some(id.clone()),
                    None => continue,
                }
            };
            let new_cabinets: Vec<String> = [&line.from_bus, &line.to_bus]
                .into_iter()
                .filter(|b| !base.bus(b).expect("validated").is_switching_cabinet)
                .cloned()
                .collect();
            let base_cost = line.length * cost_per_km(rules, max);
            let measure = if new_cabinets.is_empty() {
                if !rules.parallel_lines {
                    continue;
                }
                Measure {
                    id: format!("PARALLEL_LINE_{}", line.id),
                    action: MeasureAction::ParallelLine {
                        line: line.id.clone(),
                        std_type: max.name.clone(),
                        new_line: format!("{}_parallel", line.id),
                    },
                    cost: base_cost,
                }
            } else {
                if !rules.new_cabinet_parallel_lines {
                    continue;
                }
                Measure {
                    id: format!("NEW_CABINET_PARALLEL_LINE_{}", line.id),
                    cost: base_cost + rules.cabinet_cost * new_cabinets.len() as f64,
                    action: MeasureAction::NewCabinetParallelLine {
                        line: line.id.clone(),
                        std_type: max.name.clone(),
                        new_line: format!("{}_parallel", line.id),
                        cabinets: new_cabinets,
                    },
                }
            };
            if let Some(req) = prerequisite {
                catalog.require(&measure.id, &req);
            }
            catalog.measures.push(measure);
        }
    }

    // (e) network split by a new substation at a distant cabinet
    if rules.new_substations {
        let tt = rules.substation_transformer.clone().expect("checked by rules");
        let substation_set = network.substation_buses();
        let mut cabinets: BTreeSet<&str> = BTreeSet::new();
        for &i in &candidates {
            for b in [&base.lines[i].from_bus, &base.lines[i].to_bus] {
                cabinets.insert(b);
            }
        }
        for bus in &network.buses {
            if !cabinets.contains(bus.id.as_str())
                || !bus.is_switching_cabinet
                || substation_set.contains(bus.id.as_str())
            {
                continue;
            }
            let Ok(path) = path_to_source(network, &bus.id) else {
                continue;
            };
            let Some(split_line) = path.first() else {
                continue;
            };
            let mut at = bus.id.as_str();
            for l in &path {
                at = network
                    .line(l)
                    .expect("path lines exist")
                    .other_end(at)
                    .expect("path is connected");
            }
            let Some(feeding) = network.transformers.iter().find(|t| t.lv_bus == at) else {
                continue;
            };
            let distance =
                position(network, &bus.id, "new_substations")?.distance_m(position(network, at, "new_substations")?);
            if distance <= rules.substation_min_distance_m {
                continue;
            }
            catalog.measures.push(Measure {
                id: format!("NEW_SUBSTATION_{}", bus.id),
                cost: rules.substation_cost + rules.mv_connection_cost_per_km * distance / 1000.0 * rules.trail_factor,
                action: MeasureAction::NewSubstationSplit {
                    bus: bus.id.clone(),
                    hv_bus: feeding.hv_bus.clone(),
                    split_line: split_line.clone(),
                    new_transformer: format!("{}_substation", bus.id),
                    transformer: tt.clone(),
                },
            });
        }
    }

    // (f) larger transformers
    if rules.replace_transformers {
        for t in &base.transformers {
            let mut larger: Vec<_> = rules
                .transformer_types
                .iter()
                .filter(|tt| tt.rated_power > t.rated_power)
                .collect();
            larger.sort_by(|a, b| a.rated_power.total_cmp(&b.rated_power).then(a.name.cmp(&b.name)));
            let single = larger.len() == 1;
            let mut ids = Vec::new();
            for tt in larger {
                let id = if single {
                    format!("REPLACE_TRANSFORMER_{}", t.id)
                } else {
                    format!("REPLACE_TRANSFORMER_{}_{}", t.id, tt.name)
                };
                catalog.measures.push(Measure {
                    id: id.clone(),
                    action: MeasureAction::ReplaceTransformer {
                        transformer: t.id.clone(),
                        new_type: tt.clone(),
                    },
                    cost: tt.cost,
                });
                ids.push(id);
            }
            for (k, a) in ids.iter().enumerate() {
                for b in &ids[k + 1..] {
                    catalog.exclude(a, b);
                }
            }
        }
    }

    // (g) fixed tap positions
    if rules.change_taps {
        for t in &base.transformers {
            let [mut lo, mut hi] = t.tap_range;
            if let Some([rlo, rhi]) = rules.tap_range {
                lo = lo.max(rlo);
                hi = hi.min(rhi);
            }
            let ids: Vec<String> = (lo..=hi)
                .filter(|&p| p != t.tap_position)
                .map(|p| {
                    let id = format!("CHANGE_TAP_{}_{}", t.id, p);
                    catalog.measures.push(Measure {
                        id: id.clone(),
                        action: MeasureAction::ChangeTap {
                            transformer: t.id.clone(),
                            tap_position: p,
                        },
                        cost: rules.tap_change_cost,
                    });
                    id
                })
                .collect();
            for (k, a) in ids.iter().enumerate() {
                for b in &ids[k + 1..] {
                    catalog.exclude(a, b);
                }
            }
        }
    }

    // (h) line trails: renewal of decommissioned routes plus candidates
    if rules.new_line_trails {
        let trail_type = match &rules.trail_std_type {
            Some(name) => base
                .line_type(name)
                .cloned()
                .ok_or_else(|| Error::InvalidRules(format!("trail_std_type `{name}` is not in the catalog")))?,
            None => max_type.clone().ok_or(Error::Empty("line type catalog"))?,
        };
        let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
        let mut trails: Vec<(String, String, f64)> = Vec::new();
        for id in &rules.decommission_lines {
            let l = network.line(id).expect("checked by prepare_base");
            let key = ordered(&l.from_bus, &l.to_bus);
            if seen.insert(key.clone()) {
                trails.push((key.0, key.1, l.length));
            }
        }
        for [a, b] in &rules.trail_candidates {
            let key = ordered(a, b);
            if seen.insert(key.clone()) {
                let d = position(network, a, "new_line_trails")?.distance_m(position(network, b, "new_line_trails")?);
                trails.push((key.0, key.1, d / 1000.0 * rules.trail_factor));
            }
        }
        for (a, b, length) in trails {
            catalog.measures.push(Measure {
                id: format!("NEW_LINE_TRAIL_{a}_{b}"),
                cost: length * cost_per_km(rules, &trail_type),
                action: MeasureAction::NewLineTrail {
                    from_bus: a.clone(),
                    to_bus: b.clone(),
                    length,
                    std_type: trail_type.name.clone(),
                    new_line: format!("trail_{a}_{b}"),
                },
            });
        }

        // every load point cut off by decommissioning needs a new trail
        let before = Graph::build(&base, &index, |l| {
            rules.decommission_lines.contains(&l.id) || base.line_is_active(l)
        })
        .reachable(index[base.source.bus.as_str()]);
        let after = graph.reachable(index[base.source.bus.as_str()]);
        for lp in base.load_points() {
            let v = index[lp];
            if before[v] && !after[v] {
                let group: BTreeSet<String> = catalog
                    .measures
                    .iter()
                    .filter(|m| match &m.action {
                        MeasureAction::NewLineTrail { from_bus, to_bus, .. } => from_bus == lp || to_bus == lp,
                        _ => false,
                    })
                    .map(|m| m.id.clone())
                    .collect();
                if !group.is_empty() {
                    catalog.at_least_one.push(group);
                }
            }
        }
    }

    catalog.check()?;
    Ok(catalog)
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

/// Starting point for searches: the empty solution if it satisfies the
/// dependencies, otherwise the cheapest member of each unsatisfied
/// `at_least_one` group together with everything it requires.
pub fn initial_solution(catalog: &MeasureCatalog) -> Result<Solution> {
    let mut s = Solution::empty();
    if satisfies_dependencies(&s, catalog) {
        return Ok(s);
    }
    for group in &catalog.at_least_one {
        if group.iter().any(|id| s.contains(id)) {
            continue;
        }
        let mut options: Vec<&Measure> = group.iter().filter_map(|id| catalog.get(id)).collect();
        options.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.id.cmp(&b.id)));
        let added = options.into_iter().find_map(|m| {
            let mut trial = s.clone();
            let mut stack = vec![m.id.clone()];
            while let Some(id) = stack.pop() {
                if trial.insert(id.clone()) {
                    stack.extend(catalog.requires.get(&id).into_iter().flatten().cloned());
                }
            }
            let clash = catalog
                .excludes
                .iter()
                .any(|(a, b)| trial.contains(a) && trial.contains(b));
            (!clash).then_some(trial)
        });
        match added {
            Some(trial) => s = trial,
            None => return Err(Error::NoValidSolution),
        }
    }
    if satisfies_dependencies(&s, catalog) {
        Ok(s)
    } else {
        Err(Error::NoValidSolution)
    }
}
