use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::graph::Graph;
use super::{validate, Network};
use crate::error::{Error, Result};

/// Radial subtree hanging off one outgoing line of a substation bus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feeder {
    pub root_line: String,
    pub buses: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub supplied_bus_ids: BTreeSet<String>,
    pub unsupplied_load_point_count: usize,
    pub meshed_load_point_count: usize,
    pub feeders: Vec<Feeder>,
}

/// Connectivity and radiality of the switch-resolved network.
///
/// A bus is supplied if it is reachable from the source over in-service lines
/// whose switches are all closed, or over transformers. A load point is
/// meshed if it lies on a cycle of that graph; parallel branches between the
/// same pair of buses count as one connection.
pub fn analyze_topology(network: &Network) -> Result<TopologyReport> {
    let report = validate(network);
    if !report.is_valid() {
        return Err(Error::InvalidNetwork(report));
    }
    let index = network.bus_index();
    let graph = Graph::active(network, &index);
    let source = index[network.source.bus.as_str()];
    let reach = graph.reachable(source);
    let on_cycle = graph.on_cycle();

    let supplied_bus_ids = network
        .buses
        .iter()
        .zip(&reach)
        .filter(|(_, &r)| r)
        .map(|(b, _)| b.id.clone())
        .collect();

    let load_points = network.load_points();
    let unsupplied = load_points.iter().filter(|&&b| !reach[index[b]]).count();
    let meshed = load_points.iter().filter(|&&b| on_cycle[index[b]]).count();

    Ok(TopologyReport {
        supplied_bus_ids,
        unsupplied_load_point_count: unsupplied,
        meshed_load_point_count: meshed,
        feeders: feeders(network, &index, &reach),
    })
}

fn feeders(network: &Network, index: &std::collections::HashMap<&str, usize>, reach: &[bool]) -> Vec<Feeder> {
    let substations = network.substation_buses();
    let lines_only = Graph::build(network, index, |l| network.line_is_active(l));
    let is_sub: Vec<bool> = network
        .buses
        .iter()
        .map(|b| substations.contains(b.id.as_str()))
        .collect();

    let mut roots: BTreeMap<&str, usize> = BTreeMap::new();
    for line in network.lines.iter().filter(|l| network.line_is_active(l)) {
        let (a, b) = (index[line.from_bus.as_str()], index[line.to_bus.as_str()]);
        let start = match (is_sub[a] && reach[a], is_sub[b] && reach[b]) {
            (true, false) => b,
            (false, true) => a,
            _ => continue,
        };
        roots.insert(&line.id, start);
    }

    roots
        .into_iter()
        .map(|(root_line, start)| {
            let mut seen = vec![false; network.buses.len()];
            let mut stack = vec![start];
            seen[start] = true;
            let mut buses = BTreeSet::new();
            while let Some(v) = stack.pop() {
                buses.insert(network.buses[v].id.clone());
                for &(w, e) in &lines_only.adj[v] {
                    if !seen[w] && !is_sub[w] && lines_only.edges[e].transformers.is_empty() {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            Feeder {
                root_line: root_line.to_owned(),
                buses,
            }
        })
        .collect()
}

/// Lines from `bus` up to its feeding substation bus (the source bus or the
/// LV side of a transformer), nearest first. Parallel lines on one section
/// are listed together in id order.
pub fn path_to_source(network: &Network, bus: &str) -> Result<Vec<String>> {
    let report = validate(network);
    if !report.is_valid() {
        return Err(Error::InvalidNetwork(report));
    }
    let index = network.bus_index();
    let &start = index.get(bus).ok_or_else(|| Error::UnknownBus(bus.to_owned()))?;
    let graph = Graph::active(network, &index);
    let source = index[network.source.bus.as_str()];
    let (parent, _) = graph.bfs_tree(source);
    if start != source && parent[start].is_none() {
        return Err(Error::Unsupplied(bus.to_owned()));
    }
    let substations = network.substation_buses();
    let bridges = graph.bridges();

    let mut path = Vec::new();
    let mut v = start;
    while !substations.contains(network.buses[v].id.as_str()) {
        let e = parent[v].expect("supplied bus has a parent");
        if !bridges[e] {
            return Err(Error::Meshed(bus.to_owned()));
        }
        let edge = &graph.edges[e];
        let mut ids: Vec<&str> = edge.lines.iter().map(|&i| network.lines[i].id.as_str()).collect();
        ids.sort_unstable();
        path.extend(ids.into_iter().map(str::to_owned));
        v = edge.other(v);
    }
    Ok(path)
}
