//! Backward/forward sweep load flow for radial networks.
//!
//! Per-unit system on a 1 MVA base with each bus's nominal voltage as voltage
//! base. Loads and generators are constant PQ; generation enters as negative
//! load. A transformer is an ideal ratio `1 + tap * tap_step / 100` (LV over
//! HV, at no load) followed by a series impedance on the LV side derived from
//! the short-circuit voltage and losses.

use std::cell::Cell;
use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::graph::Graph;
use crate::network::{validate, Network};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;

thread_local! {
    static RUNS: Cell<u64> = const { Cell::new(0) };
}

/// Number of load flows started on the calling thread.
pub fn load_flow_count() -> u64 {
    RUNS.with(Cell::get)
}

/// Worst-case operating snapshot: scale factors applied to every load and
/// generator plus the admissible voltage band at load points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadCase {
    pub name: String,
    pub load_scale: f64,
    pub generation_scale: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl LoadCase {
    pub fn high_feed_in() -> Self {
        LoadCase {
            name: "high_feed_in".into(),
            load_scale: 0.0,
            generation_scale: 1.0,
            v_min: 0.95,
            v_max: 1.05,
        }
    }

    pub fn high_load() -> Self {
        LoadCase {
            name: "high_load".into(),
            load_scale: 1.0,
            generation_scale: 0.0,
            v_min: 0.95,
            v_max: 1.05,
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidLoadCase(self.name.clone(), msg.to_owned()));
        if !(self.load_scale >= 0.0 && self.load_scale.is_finite()) {
            return bad("load_scale must be a non-negative number");
        }
        if !(self.generation_scale >= 0.0 && self.generation_scale.is_finite()) {
            return bad("generation_scale must be a non-negative number");
        }
        if !(0.0 <= self.v_min && self.v_min < self.v_max) {
            return bad("voltage band must satisfy 0 <= v_min < v_max");
        }
        Ok(())
    }

    pub fn list_from_json(text: &str) -> Result<Vec<LoadCase>> {
        let cases: Vec<LoadCase> = serde_json::from_str(text).map_err(|source| Error::Parse {
            what: "load cases",
            source,
        })?;
        for c in &cases {
            c.check()?;
        }
        Ok(cases)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFlowOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowResult {
    pub case: String,
    /// Per-unit voltage magnitude of every supplied bus.
    pub bus_voltage: BTreeMap<String, f64>,
    /// Percent of the standard type's thermal limit, energized lines only.
    pub line_loading: BTreeMap<String, f64>,
    /// Percent of rated power at the HV terminal.
    pub transformer_loading: BTreeMap<String, f64>,
    pub converged: bool,
    pub iterations: usize,
}

enum Branch {
    Lines {
        z_eq: Complex64,
        /// (line index, current share, kA per per-unit current, limit in kA)
        members: Vec<(usize, Complex64, f64, f64)>,
    },
    Transformer {
        index: usize,
        z: Complex64,
        ratio: f64,
        parent_is_hv: bool,
    },
}

fn parallel(z: &[Complex64]) -> (Complex64, Vec<Complex64>) {
    if let Some(k) = z.iter().position(|z| z.norm() == 0.0) {
        // an ideal conductor takes all of the current
        let shares = (0..z.len())
            .map(|i| {
                if i == k {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        return (Complex64::new(0.0, 0.0), shares);
    }
    let y: Complex64 = z.iter().map(|z| z.inv()).sum();
    let z_eq = y.inv();
    let shares = z.iter().map(|z| z_eq / z).collect();
    (z_eq, shares)
}

pub fn run_load_flow(network: &Network, case: &LoadCase) -> Result<PowerFlowResult> {
    run_load_flow_with(network, case, &PowerFlowOptions::default())
}

pub fn run_load_flow_with(network: &Network, case: &LoadCase, options: &PowerFlowOptions) -> Result<PowerFlowResult> {
    RUNS.with(|c| c.set(c.get() + 1));
    case.check()?;
    let report = validate(network);
    if !report.is_valid() {
        return Err(Error::InvalidNetwork(report));
    }

    let index = network.bus_index();
    let graph = Graph::active(network, &index);
    let n = network.buses.len();
    let root = index[network.source.bus.as_str()];
    let (parent, order) = graph.bfs_tree(root);
    let mut reached = vec![false; n];
    for &v in &order {
        reached[v] = true;
    }

    for (e, edge) in graph.edges.iter().enumerate() {
        if reached[edge.a] && parent[edge.a] != Some(e) && parent[edge.b] != Some(e) {
            let name = edge
                .lines
                .first()
                .map(|&i| format!("line `{}`", network.lines[i].id))
                .or_else(|| {
                    edge.transformers
                        .first()
                        .map(|&i| format!("transformer `{}`", network.transformers[i].id))
                })
                .unwrap_or_default();
            return Err(Error::NotRadial(name));
        }
    }
    for load in &network.loads {
        if !reached[index[load.bus.as_str()]] {
            return Err(Error::Unsupplied(load.bus.clone()));
        }
    }

    // net consumption per bus, per unit on 1 MVA
    let mut demand = vec![Complex64::new(0.0, 0.0); n];
    for load in &network.loads {
        demand[index[load.bus.as_str()]] += Complex64::new(load.active_power, load.reactive_power) * case.load_scale;
    }
    for g in &network.generators {
        demand[index[g.bus.as_str()]] -= Complex64::new(g.active_power, g.reactive_power) * case.generation_scale;
    }

    let mut branch: Vec<Option<(usize, Branch)>> = (0..n).map(|_| None).collect();
    for &c in order.iter().skip(1) {
        let e = parent[c].expect("non-root node has a parent edge");
        let edge = &graph.edges[e];
        let p = edge.other(c);
        let b = if edge.transformers.is_empty() {
            let mut z = Vec::with_capacity(edge.lines.len());
            let mut meta = Vec::with_capacity(edge.lines.len());
            for &i in &edge.lines {
                let line = &network.lines[i];
                let std = network.line_type(&line.std_type).expect("validated std_type");
                let v_nom = network.buses[index[line.from_bus.as_str()]].nominal_voltage;
                let z_base = v_nom * v_nom;
                z.push(Complex64::new(std.r_per_km, std.x_per_km) * line.length / z_base);
                meta.push((i, 1.0 / (3f64.sqrt() * v_nom), std.max_current));
            }
            let (z_eq, shares) = parallel(&z);
            Branch::Lines {
                z_eq,
                members: meta
                    .into_iter()
                    .zip(shares)
                    .map(|((i, ka, lim), s)| (i, s, ka, lim))
                    .collect(),
            }
        } else {
            if edge.transformers.len() > 1 || !edge.lines.is_empty() {
                return Err(Error::ParallelTransformers(
                    network.buses[edge.a].id.clone(),
                    network.buses[edge.b].id.clone(),
                ));
            }
            let ti = edge.transformers[0];
            let t = &network.transformers[ti];
            let zk = t.short_circuit_voltage / 100.0 / t.rated_power;
            let rk = t.short_circuit_losses / 100.0 / t.rated_power;
            Branch::Transformer {
                index: ti,
                z: Complex64::new(rk, (zk * zk - rk * rk).max(0.0).sqrt()),
                ratio: t.ratio(),
                parent_is_hv: network.buses[p].id == t.hv_bus,
            }
        };
        branch[c] = Some((p, b));
    }

    let v_set = Complex64::new(network.source.voltage_setpoint, 0.0);
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    v[root] = v_set;
    for &c in order.iter().skip(1) {
        let (p, b) = branch[c].as_ref().expect("branch for every non-root node");
        v[c] = match b {
            Branch::Lines { .. } => v[*p],
            Branch::Transformer {
                ratio,
                parent_is_hv: true,
                ..
            } => v[*p] * *ratio,
            Branch::Transformer {
                ratio,
                parent_is_hv: false,
                ..
            } => v[*p] / *ratio,
        };
    }

    let mut current = vec![Complex64::new(0.0, 0.0); n];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        current.iter_mut().for_each(|j| *j = Complex64::new(0.0, 0.0));
        for &c in order.iter().skip(1).rev() {
            current[c] += (demand[c] / v[c]).conj();
            let (p, b) = branch[c].as_ref().expect("branch for every non-root node");
            let up = upstream_current(b, current[c]);
            current[*p] += up;
        }
        let mut delta: f64 = 0.0;
        for &c in order.iter().skip(1) {
            let (p, b) = branch[c].as_ref().expect("branch for every non-root node");
            let next = match b {
                Branch::Lines { z_eq, .. } => v[*p] - z_eq * current[c],
                Branch::Transformer {
                    z,
                    ratio,
                    parent_is_hv: true,
                    ..
                } => v[*p] * *ratio - z * current[c],
                Branch::Transformer {
                    z,
                    ratio,
                    parent_is_hv: false,
                    ..
                } => (v[*p] - z * (current[c] / *ratio)) / *ratio,
            };
            delta = delta.max((next - v[c]).norm());
            v[c] = next;
        }
        if !delta.is_finite() {
            break;
        }
        if delta < options.tolerance {
            converged = true;
            break;
        }
    }

    let mut result = PowerFlowResult {
        case: case.name.clone(),
        bus_voltage: BTreeMap::new(),
        line_loading: BTreeMap::new(),
        transformer_loading: BTreeMap::new(),
        converged,
        iterations,
    };
    for &c in &order {
        result.bus_voltage.insert(network.buses[c].id.clone(), v[c].norm());
    }
    for &c in order.iter().skip(1) {
        let (p, b) = branch[c].as_ref().expect("branch for every non-root node");
        match b {
            Branch::Lines { members, .. } => {
                for &(i, share, ka_per_pu, limit) in members {
                    let ka = (current[c] * share).norm() * ka_per_pu;
                    result
                        .line_loading
                        .insert(network.lines[i].id.clone(), 100.0 * ka / limit);
                }
            }
            Branch::Transformer {
                index,
                ratio,
                parent_is_hv,
                ..
            } => {
                let t = &network.transformers[*index];
                let s_hv = if *parent_is_hv {
                    v[*p].norm() * (current[c] * *ratio).norm()
                } else {
                    v[c].norm() * current[c].norm()
                };
                result
                    .transformer_loading
                    .insert(t.id.clone(), 100.0 * s_hv / t.rated_power);
            }
        }
    }
    // lines hanging off the tree without carrying current (open at the far end)
    for line in &network.lines {
        if network.line_is_active(line) && reached[index[line.from_bus.as_str()]] {
            result.line_loading.entry(line.id.clone()).or_insert(0.0);
        }
    }
    Ok(result)
}

/// Current at the parent side of `b` given the current entering the child side.
fn upstream_current(b: &Branch, child_side: Complex64) -> Complex64 {
    match b {
        Branch::Lines { .. } => child_side,
        Branch::Transformer {
            ratio,
            parent_is_hv: true,
            ..
        } => child_side * *ratio,
        Branch::Transformer {
            ratio,
            parent_is_hv: false,
            ..
        } => child_side / *ratio,
    }
}

/// One result per case, in order.
pub fn worst_case_results(network: &Network, cases: &[LoadCase]) -> Result<Vec<PowerFlowResult>> {
    cases
        .iter()
        .map(|case| {
            run_load_flow(network, case).map_err(|e| Error::InCase {
                case: case.name.clone(),
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn two_bus(r: f64, x: f64, p: f64, q: f64) -> Network {
        let mut net = fixtures::two_bus_feeder();
        net.line_type_catalog[0].r_per_km = r;
        net.line_type_catalog[0].x_per_km = x;
        net.loads[0].active_power = p;
        net.loads[0].reactive_power = q;
        net
    }

    /// |V2|^2 from the two-bus quadratic
    /// |V2|^4 + (2(RP + XQ) - V1^2)|V2|^2 + |Z|^2 |S|^2 = 0, per unit.
    fn two_bus_closed_form(v1: f64, r: f64, x: f64, p: f64, q: f64) -> f64 {
        let b = 2.0 * (r * p + x * q) - v1 * v1;
        let c = (r * r + x * x) * (p * p + q * q);
        ((-b + (b * b - 4.0 * c).sqrt()) / 2.0).sqrt()
    }

    #[test]
    fn zero_injection_keeps_setpoint_exactly() {
        let mut net = fixtures::intro_ring();
        net.generators.clear();
        let case = LoadCase {
            load_scale: 0.0,
            ..LoadCase::high_load()
        };
        let res = run_load_flow(&net, &case).unwrap();
        assert!(res.converged);
        for (bus, v) in &res.bus_voltage {
            assert_eq!(*v, 1.02, "bus {bus}");
        }
    }

    #[test]
    fn two_bus_matches_closed_form() {
        // 0.4 kV, 1 MVA base: z_base = 0.16 ohm
        for &(r, x, p, q) in &[
            (0.2, 0.08, 0.05, 0.01),
            (0.2, 0.08, -0.08, 0.0),
            (0.5, 0.1, 0.02, -0.005),
        ] {
            let net = two_bus(r, x, p, q);
            let res = run_load_flow(&net, &LoadCase::high_load()).unwrap();
            assert!(res.converged);
            let len = net.lines[0].length;
            let z_base = 0.4 * 0.4;
            let expected = two_bus_closed_form(1.02, r * len / z_base, x * len / z_base, p, q);
            let got = res.bus_voltage["LV1"];
            assert!((got - expected).abs() < 1e-8, "{got} vs {expected}");
        }
    }

    #[test]
    fn intro_high_feed_in_violates_far_stations_only() {
        let net = fixtures::intro_ring();
        let res = run_load_flow(&net, &LoadCase::high_feed_in()).unwrap();
        assert!(res.converged);
        assert!(res.bus_voltage["B1"] <= 1.05);
        assert!(res.bus_voltage["B3"] > 1.05);
        // rise across the HV/MV transformer
        assert!(res.bus_voltage["MV"] > 1.02);
    }

    #[test]
    fn worst_cases_preserve_order_and_only_feed_in_overvoltages() {
        let net = fixtures::intro_ring();
        assert!(worst_case_results(&net, &[]).unwrap().is_empty());
        let res = worst_case_results(&net, &fixtures::intro_cases()).unwrap();
        assert_eq!(res.len(), 2);
        assert_eq!(res[0].case, "high_feed_in");
        assert!(res[0].bus_voltage.values().any(|&v| v > 1.05));
        assert!(res[1].bus_voltage.values().all(|v| (0.95..=1.05).contains(v)));
    }

    #[test]
    fn tap_step_shifts_voltages_without_injection() {
        let mut net = fixtures::intro_ring();
        net.generators.clear();
        let case = LoadCase {
            load_scale: 0.0,
            ..LoadCase::high_load()
        };
        net.transformers[0].tap_position -= 1;
        let step = net.transformers[0].tap_step;
        let res = run_load_flow(&net, &case).unwrap();
        for bus in ["MV", "B1", "B3", "B5"] {
            let expected = 1.02 * (1.0 - step / 100.0);
            assert!((res.bus_voltage[bus] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn meshed_and_unsupplied_inputs_are_rejected() {
        let net = fixtures::intro_ring().with_all_switches_closed();
        assert!(matches!(
            run_load_flow(&net, &LoadCase::high_load()),
            Err(Error::NotRadial(_))
        ));
        let mut net = fixtures::intro_ring();
        for s in &mut net.switches {
            if s.id == "3" {
                s.closed = false;
            }
        }
        assert!(matches!(
            run_load_flow(&net, &LoadCase::high_load()),
            Err(Error::Unsupplied(_))
        ));
        let err = worst_case_results(&net, &fixtures::intro_cases()).unwrap_err();
        assert!(err.to_string().starts_with("load case `high_feed_in`"), "{err}");
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let mut net = two_bus(0.2, 0.08, 0.05, 0.01);
        // far beyond the nose of the PV curve
        net.loads[0].active_power = 50.0;
        let res = run_load_flow(&net, &LoadCase::high_load()).unwrap();
        assert!(!res.converged);
    }

    #[test]
    fn parallel_lines_share_current_by_admittance() {
        let mut net = fixtures::intro_ring();
        let mut twin = net.line("1").unwrap().clone();
        twin.id = "1b".into();
        net.lines.push(twin);
        let res = run_load_flow(&net, &LoadCase::high_feed_in()).unwrap();
        let single = run_load_flow(&fixtures::intro_ring(), &LoadCase::high_feed_in()).unwrap();
        assert!((res.line_loading["1"] - res.line_loading["1b"]).abs() < 1e-12);
        assert!((res.line_loading["1"] * 2.0 - single.line_loading["1"]).abs() < 0.05 * single.line_loading["1"]);
    }

    #[test]
    fn identical_inputs_identical_results() {
        let net = fixtures::intro_ring();
        let a = run_load_flow(&net, &LoadCase::high_feed_in()).unwrap();
        let b = run_load_flow(&net, &LoadCase::high_feed_in()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_case_is_rejected() {
        let case = LoadCase {
            v_min: 1.1,
            ..LoadCase::high_load()
        };
        assert!(matches!(
            run_load_flow(&fixtures::intro_ring(), &case),
            Err(Error::InvalidLoadCase(..))
        ));
    }
}
