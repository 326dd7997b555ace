//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use gridplan_core::{LoadCase, Network};
use nalgebra::{Complex, DMatrix, DVector};

type C = Complex<f64>;

/// Bus voltage magnitudes from a full nodal admittance solve (Z-bus
/// fixed point on `Y V = I`). Every bus must be supplied.
pub fn nodal_voltages(net: &Network, case: &LoadCase) -> BTreeMap<String, f64> {
    let n = net.buses.len();
    let idx: HashMap<&str, usize> = net.buses.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
    let mut y = DMatrix::<C>::zeros(n, n);
    for l in net.lines.iter().filter(|l| net.line_is_active(l)) {
        let (a, b) = (idx[l.from_bus.as_str()], idx[l.to_bus.as_str()]);
        let t = net.line_type(&l.std_type).unwrap();
        let vn = net.buses[a].nominal_voltage;
        let z = C::new(t.r_per_km, t.x_per_km) * l.length / (vn * vn);
        let ys = C::new(1.0, 0.0) / z;
        y[(a, a)] += ys;
        y[(b, b)] += ys;
        y[(a, b)] -= ys;
        y[(b, a)] -= ys;
    }
    for tr in &net.transformers {
        let (h, l) = (idx[tr.hv_bus.as_str()], idx[tr.lv_bus.as_str()]);
        let zk = tr.short_circuit_voltage / 100.0 / tr.rated_power;
        let rk = tr.short_circuit_losses / 100.0 / tr.rated_power;
        let ys = C::new(1.0, 0.0) / C::new(rk, (zk * zk - rk * rk).sqrt());
        let t = 1.0 + f64::from(tr.tap_position) * tr.tap_step / 100.0;
        y[(l, l)] += ys;
        y[(h, h)] += ys * t * t;
        y[(l, h)] -= ys * t;
        y[(h, l)] -= ys * t;
    }
    let mut s_inj = vec![C::new(0.0, 0.0); n];
    for ld in &net.loads {
        s_inj[idx[ld.bus.as_str()]] -= C::new(ld.active_power, ld.reactive_power) * case.load_scale;
    }
    for g in &net.generators {
        s_inj[idx[g.bus.as_str()]] += C::new(g.active_power, g.reactive_power) * case.generation_scale;
    }

    let slack = idx[net.source.bus.as_str()];
    let others: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let m = others.len();
    let v_s = C::new(net.source.voltage_setpoint, 0.0);
    let y_rr = DMatrix::from_fn(m, m, |i, j| y[(others[i], others[j])]);
    let y_rs = DVector::from_fn(m, |i, _| y[(others[i], slack)]);
    let lu = y_rr.lu();
    let mut v = DVector::from_element(m, v_s);
    for _ in 0..1000 {
        let rhs = DVector::from_fn(m, |i, _| (s_inj[others[i]] / v[i]).conj() - y_rs[i] * v_s);
        let next = lu.solve(&rhs).expect("admittance matrix is regular");
        let delta = (&next - &v).iter().map(|d| d.norm()).fold(0.0, f64::max);
        v = next;
        if delta < 1e-13 {
            break;
        }
    }
    let mut out = BTreeMap::new();
    out.insert(net.source.bus.clone(), v_s.norm());
    for (i, &b) in others.iter().enumerate() {
        out.insert(net.buses[b].id.clone(), v[i].norm());
    }
    out
}

/// Distinct neighbours over conducting lines and all transformers.
fn adjacency(net: &Network) -> Vec<BTreeSet<usize>> {
    let idx: HashMap<&str, usize> = net.buses.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
    let mut adj = vec![BTreeSet::new(); net.buses.len()];
    let mut link = |a: &str, b: &str| {
        let (a, b) = (idx[a], idx[b]);
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    };
    for l in net.lines.iter().filter(|l| net.line_is_active(l)) {
        link(&l.from_bus, &l.to_bus);
    }
    for t in &net.transformers {
        link(&t.hv_bus, &t.lv_bus);
    }
    adj
}

fn reach(adj: &[BTreeSet<usize>], start: usize, cut: Option<(usize, usize)>) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if cut == Some((v, w)) || cut == Some((w, v)) || seen[w] {
                continue;
            }
            seen[w] = true;
            stack.push(w);
        }
    }
    seen
}

pub struct BruteTopology {
    pub supplied: BTreeSet<String>,
    pub unsupplied_load_points: usize,
    pub meshed_load_points: usize,
}

/// Supply by traversal from the source; a bus is on a cycle iff some
/// neighbour stays reachable after cutting the connection to it.
pub fn brute_topology(net: &Network) -> BruteTopology {
    let adj = adjacency(net);
    let source = net.buses.iter().position(|b| b.id == net.source.bus).unwrap();
    let supplied_mask = reach(&adj, source, None);
    let on_cycle = |v: usize| adj[v].iter().any(|&w| reach(&adj, v, Some((v, w)))[w]);
    let pos = |id: &str| net.buses.iter().position(|b| b.id == id).unwrap();
    let load_points: BTreeSet<&str> = net.loads.iter().map(|l| l.bus.as_str()).collect();
    BruteTopology {
        supplied: net
            .buses
            .iter()
            .zip(&supplied_mask)
            .filter(|(_, &s)| s)
            .map(|(b, _)| b.id.clone())
            .collect(),
        unsupplied_load_points: load_points.iter().filter(|b| !supplied_mask[pos(b)]).count(),
        meshed_load_points: load_points.iter().filter(|b| on_cycle(pos(b))).count(),
    }
}
