//! Synthetic networks and planning problems.
//!
//! * [`intro_ring`]: a 20 kV ring with six lines, five load points with PV
//!   and ten load-break switches, operated radially with switch 6 open.
//! * [`trail_network`]: a 12-bus network in which two old lines are to be
//!   decommissioned and replaced by new line trails.
//! * Random generators for property and oracle tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::measures::{Measure, MeasureAction, MeasureCatalog, PlanningProblem, PlanningRules};
use crate::network::{
    Bus, Generator, InjectionKind, Line, LineStandardType, Load, Network, Position, Source, Switch, Transformer,
};
use crate::power_flow::LoadCase;
use crate::scenario::{PlacementRule, ResScenario};

pub const OLD_CABLE: &str = "NA2XS2Y 1x95";
pub const NEW_CABLE: &str = "NA2XS2Y 1x240";

fn cables() -> Vec<LineStandardType> {
    vec![
        LineStandardType {
            name: OLD_CABLE.into(),
            r_per_km: 0.320,
            x_per_km: 0.123,
            max_current: 0.245,
            cost_per_km: 1.0,
            diameter_rank: 95,
        },
        LineStandardType {
            name: NEW_CABLE.into(),
            r_per_km: 0.125,
            x_per_km: 0.105,
            max_current: 0.417,
            cost_per_km: 1.0,
            diameter_rank: 240,
        },
    ]
}

fn bus(id: &str, kv: f64, x: f64, y: f64) -> Bus {
    Bus {
        id: id.into(),
        nominal_voltage: kv,
        is_switching_cabinet: false,
        position: Some(Position { x, y }),
    }
}

fn line(id: &str, from: &str, to: &str, km: f64, std_type: &str) -> Line {
    Line {
        id: id.into(),
        from_bus: from.into(),
        to_bus: to.into(),
        length: km,
        std_type: std_type.into(),
        max_loading: 100.0,
        in_service: true,
        is_customer_access: false,
    }
}

fn switch(id: &str, line_id: &str, bus_id: &str, closed: bool) -> Switch {
    Switch {
        id: id.into(),
        line_id: line_id.into(),
        bus_id: bus_id.into(),
        closed,
    }
}

fn load(id: &str, bus: &str, p: f64, q: f64) -> Load {
    Load {
        id: id.into(),
        bus: bus.into(),
        active_power: p,
        reactive_power: q,
        kind: InjectionKind::Load,
    }
}

fn pv(id: &str, bus: &str, p: f64) -> Generator {
    Generator {
        id: id.into(),
        bus: bus.into(),
        active_power: p,
        reactive_power: 0.0,
        kind: InjectionKind::Pv,
    }
}

fn hv_mv_transformer(id: &str, hv: &str, lv: &str) -> Transformer {
    Transformer {
        id: id.into(),
        hv_bus: hv.into(),
        lv_bus: lv.into(),
        rated_power: 40.0,
        short_circuit_voltage: 12.0,
        short_circuit_losses: 0.5,
        tap_position: 0,
        tap_range: [-9, 9],
        tap_step: 1.5,
        max_loading: 100.0,
    }
}

/// Ring MV - B1 - B2 - B3 - B4 - B5 - MV over lines 1..6 (8, 7, 6, 10, 6
/// and 4 km), fed from a 110/20 kV transformer held at 1.02 p.u. on the HV
/// side. Each line carries a switch at each station end:
///
/// | line | switches        |
/// |------|-----------------|
/// | 1    | 1 (B1)          |
/// | 2    | 2 (B1), 3 (B2)  |
/// | 3    | 4 (B2), 5 (B3)  |
/// | 4    | 6 (B3), 7 (B4)  |
/// | 5    | 8 (B4), 9 (B5)  |
/// | 6    | 10 (B5)         |
///
/// Switch 6 is open, so line 1 feeds B1..B3 and line 6 feeds B5 and B4.
pub fn intro_ring() -> Network {
    let stations = ["B1", "B2", "B3", "B4", "B5"];
    let pv_mw = [1.0, 1.75, 0.5, 2.5, 2.5];
    let mut buses = vec![bus("HV", 110.0, 0.0, -1000.0), bus("MV", 20.0, 0.0, 0.0)];
    let coords = [
        (3000.0, 7000.0),
        (9000.0, 9000.0),
        (14000.0, 5000.0),
        (10000.0, -3000.0),
        (3500.0, -2500.0),
    ];
    for (id, (x, y)) in stations.iter().zip(coords) {
        buses.push(bus(id, 20.0, x, y));
    }
    let ends = ["MV", "B1", "B2", "B3", "B4", "B5", "MV"];
    let lengths = [8.0, 7.0, 6.0, 10.0, 6.0, 4.0];
    let lines = (0..6)
        .map(|k| line(&(k + 1).to_string(), ends[k], ends[k + 1], lengths[k], OLD_CABLE))
        .collect();
    let switches = vec![
        switch("1", "1", "B1", true),
        switch("2", "2", "B1", true),
        switch("3", "2", "B2", true),
        switch("4", "3", "B2", true),
        switch("5", "3", "B3", true),
        switch("6", "4", "B3", false),
        switch("7", "4", "B4", true),
        switch("8", "5", "B4", true),
        switch("9", "5", "B5", true),
        switch("10", "6", "B5", true),
    ];
    Network {
        name: "intro ring".into(),
        buses,
        lines,
        line_type_catalog: cables(),
        transformers: vec![hv_mv_transformer("T1", "HV", "MV")],
        switches,
        loads: stations
            .iter()
            .map(|b| load(&format!("load_{b}"), b, 0.4, 0.1))
            .collect(),
        generators: stations
            .iter()
            .zip(pv_mw)
            .map(|(b, p)| pv(&format!("pv_{b}"), b, p))
            .collect(),
        source: Source {
            bus: "HV".into(),
            voltage_setpoint: 1.02,
        },
    }
}

/// The intro ring without any PV, as the starting point of scenario studies.
pub fn intro_ring_without_pv() -> Network {
    let mut net = intro_ring();
    net.name = "intro ring without PV".into();
    net.generators.clear();
    net
}

/// High feed-in (no load, full generation) and high load (full load, no
/// generation), both with the band [0.95, 1.05] p.u.
pub fn intro_cases() -> Vec<LoadCase> {
    vec![LoadCase::high_feed_in(), LoadCase::high_load()]
}

/// Reconfiguration plus line replacement.
pub fn intro_rules() -> PlanningRules {
    PlanningRules {
        open_switches: true,
        replace_lines: true,
        ..PlanningRules::default()
    }
}

/// 16 measures (OPEN_SWITCH_1..10, REPLACE_LINE_1..6) on the ring with all
/// switches closed.
pub fn intro_problem() -> PlanningProblem {
    PlanningProblem::discover(&intro_ring(), &intro_rules(), intro_cases()).expect("intro fixture discovers")
}

/// REPLACE_LINE_1..6 on the radially operated ring, each costing the length
/// of its line.
pub fn intro_replace_problem() -> PlanningProblem {
    let base = intro_ring();
    let measures = base
        .lines
        .iter()
        .map(|l| Measure {
            id: format!("REPLACE_LINE_{}", l.id),
            action: MeasureAction::ReplaceLine {
                line: l.id.clone(),
                std_type: NEW_CABLE.into(),
            },
            cost: l.length,
        })
        .collect();
    PlanningProblem {
        base,
        catalog: MeasureCatalog::new(measures),
        cases: intro_cases(),
    }
}

/// Source and one load bus at 0.4 kV over a 200 m cable.
pub fn two_bus_feeder() -> Network {
    Network {
        name: "two bus".into(),
        buses: vec![bus("LV0", 0.4, 0.0, 0.0), bus("LV1", 0.4, 200.0, 0.0)],
        lines: vec![line("1", "LV0", "LV1", 0.2, "NAYY 4x150")],
        line_type_catalog: vec![LineStandardType {
            name: "NAYY 4x150".into(),
            r_per_km: 0.208,
            x_per_km: 0.080,
            max_current: 0.27,
            cost_per_km: 1.0,
            diameter_rank: 150,
        }],
        transformers: vec![],
        switches: vec![],
        loads: vec![load("load", "LV1", 0.05, 0.01)],
        generators: vec![],
        source: Source {
            bus: "LV0".into(),
            voltage_setpoint: 1.02,
        },
    }
}

/// 12 buses: substation S with feeders A1..A4 and B1..B4, a normally open
/// tie A4-B4, and stations C1 (off A4) and C2 (off C1) whose old lines LC1
/// and LC2 are to be decommissioned.
pub fn trail_network() -> Network {
    let mut buses = vec![bus("HV", 110.0, -500.0, -500.0), bus("S", 20.0, 0.0, 0.0)];
    for (i, x) in [2000.0, 4000.0, 6000.0, 8000.0].into_iter().enumerate() {
        buses.push(bus(&format!("A{}", i + 1), 20.0, x, 0.0));
    }
    for (i, (x, y)) in [(0.0, 2000.0), (0.0, 4000.0), (0.0, 6000.0), (4000.0, 6000.0)]
        .into_iter()
        .enumerate()
    {
        buses.push(bus(&format!("B{}", i + 1), 20.0, x, y));
    }
    buses.push(bus("C1", 20.0, 6500.0, 1200.0));
    buses.push(bus("C2", 20.0, 6000.0, 3000.0));
    for b in &mut buses[2..] {
        b.is_switching_cabinet = true;
    }

    let lines = vec![
        line("LA1", "S", "A1", 2.2, OLD_CABLE),
        line("LA2", "A1", "A2", 2.2, OLD_CABLE),
        line("LA3", "A2", "A3", 2.2, OLD_CABLE),
        line("LA4", "A3", "A4", 2.2, OLD_CABLE),
        line("LB1", "S", "B1", 2.2, OLD_CABLE),
        line("LB2", "B1", "B2", 2.2, OLD_CABLE),
        line("LB3", "B2", "B3", 2.2, OLD_CABLE),
        line("LB4", "B3", "B4", 4.5, OLD_CABLE),
        line("T", "A4", "B4", 8.0, OLD_CABLE),
        line("LC1", "A4", "C1", 3.0, OLD_CABLE),
        line("LC2", "C1", "C2", 2.5, OLD_CABLE),
    ];
    let switches = vec![
        switch("s1", "T", "A4", false),
        switch("s2", "T", "B4", true),
        switch("s3", "LA4", "A4", true),
        switch("s4", "LB4", "B4", true),
    ];
    let load_buses = ["A1", "A2", "A3", "A4", "B1", "B2", "B3", "B4", "C1", "C2"];
    Network {
        name: "line trail network".into(),
        buses,
        lines,
        line_type_catalog: cables(),
        transformers: vec![hv_mv_transformer("T1", "HV", "S")],
        switches,
        loads: load_buses
            .iter()
            .map(|b| load(&format!("load_{b}"), b, 0.3, 0.1))
            .collect(),
        generators: vec![],
        source: Source {
            bus: "HV".into(),
            voltage_setpoint: 1.02,
        },
    }
}

/// Decommission LC1 and LC2; candidate trails A3-C1, B4-C2 and A4-C2 in
/// addition to renewal along the old routes.
pub fn trail_rules() -> PlanningRules {
    PlanningRules {
        open_switches: true,
        new_line_trails: true,
        decommission_lines: vec!["LC1".into(), "LC2".into()],
        trail_candidates: vec![
            ["A3".into(), "C1".into()],
            ["B4".into(), "C2".into()],
            ["A4".into(), "C2".into()],
        ],
        ..PlanningRules::default()
    }
}

pub fn trail_problem() -> PlanningProblem {
    PlanningProblem::discover(&trail_network(), &trail_rules(), intro_cases()).expect("trail fixture discovers")
}

/// Total length of renewing every decommissioned line in place.
pub fn renewal_length(network: &Network, rules: &PlanningRules) -> f64 {
    rules
        .decommission_lines
        .iter()
        .filter_map(|id| network.line(id))
        .map(|l| l.length)
        .sum()
}

pub fn conservative_scenario() -> ResScenario {
    ResScenario {
        name: "conservative".into(),
        total_capacity: 5.5,
        placement_rule: PlacementRule::UniformOverLoadPoints,
        potential: Default::default(),
        unit_size_range: [0.25, 1.0],
        power_factor: 1.0,
        load_scale: 1.0,
    }
}

pub fn progressive_scenario() -> ResScenario {
    ResScenario {
        name: "progressive".into(),
        total_capacity: 7.5,
        ..conservative_scenario()
    }
}

/// Random radial 20 kV feeder of `n` buses (`n >= 3`) behind a tapped
/// 110/20 kV transformer, with random loads and generators.
pub fn random_radial_network(seed: u64, n: usize) -> Network {
    assert!(n >= 3, "need source, substation and one feeder bus");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network {
        name: format!("random radial {seed}"),
        buses: vec![bus("N0", 110.0, 0.0, 0.0), bus("N1", 20.0, 0.0, 0.0)],
        lines: Vec::new(),
        line_type_catalog: cables(),
        transformers: vec![Transformer {
            tap_position: rng.random_range(-3..=3),
            rated_power: rng.random_range(10.0..60.0),
            ..hv_mv_transformer("T1", "N0", "N1")
        }],
        switches: Vec::new(),
        loads: Vec::new(),
        generators: Vec::new(),
        source: Source {
            bus: "N0".into(),
            voltage_setpoint: rng.random_range(0.98..1.04),
        },
    };
    for i in 2..n {
        let id = format!("N{i}");
        net.buses.push(bus(&id, 20.0, 0.0, 0.0));
        let parent = format!("N{}", rng.random_range(1..i));
        let std_type = if rng.random_bool(0.5) { OLD_CABLE } else { NEW_CABLE };
        net.lines.push(line(
            &format!("L{i}"),
            &parent,
            &id,
            rng.random_range(0.3..4.0),
            std_type,
        ));
        if rng.random_bool(0.3) {
            // a parallel twin on the same section
            net.lines.push(line(
                &format!("L{i}b"),
                &parent,
                &id,
                rng.random_range(0.3..4.0),
                std_type,
            ));
        }
        if rng.random_bool(0.8) {
            net.loads.push(load(
                &format!("ld{i}"),
                &id,
                rng.random_range(0.0..1.0),
                rng.random_range(-0.2..0.4),
            ));
        }
        if rng.random_bool(0.5) {
            net.generators.push(Generator {
                reactive_power: rng.random_range(-0.3..0.1),
                ..pv(&format!("pv{i}"), &id, rng.random_range(0.0..1.5))
            });
        }
    }
    net
}

/// Random network of `n` buses with cycles, parallel lines, open switches,
/// out-of-service lines and possibly unsupplied parts. Valid by
/// construction.
pub fn random_switched_network(seed: u64, n: usize) -> Network {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network {
        name: format!("random switched {seed}"),
        buses: (0..n).map(|i| bus(&format!("N{i}"), 20.0, 0.0, 0.0)).collect(),
        lines: Vec::new(),
        line_type_catalog: cables(),
        transformers: Vec::new(),
        switches: Vec::new(),
        loads: Vec::new(),
        generators: Vec::new(),
        source: Source {
            bus: "N0".into(),
            voltage_setpoint: 1.0,
        },
    };
    let add_line = |net: &mut Network, rng: &mut ChaCha8Rng, a: usize, b: usize| {
        let id = format!("L{}", net.lines.len());
        let mut l = line(&id, &format!("N{a}"), &format!("N{b}"), 1.0, OLD_CABLE);
        l.in_service = rng.random_bool(0.9);
        net.lines.push(l);
        for end in [a, b] {
            if rng.random_bool(0.3) {
                let sid = format!("S{}", net.switches.len());
                net.switches
                    .push(switch(&sid, &id, &format!("N{end}"), rng.random_bool(0.75)));
            }
        }
    };
    for i in 1..n {
        if rng.random_bool(0.9) {
            let parent = rng.random_range(0..i);
            add_line(&mut net, &mut rng, parent, i);
        }
    }
    let extra = rng.random_range(0..=n / 3 + 1);
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            add_line(&mut net, &mut rng, a, b);
        }
    }
    if n > 2 && rng.random_bool(0.3) {
        // a second substation fed from the source over a transformer
        net.buses[0].nominal_voltage = 110.0;
        let lv = rng.random_range(1..n);
        net.transformers.push(hv_mv_transformer("T1", "N0", &format!("N{lv}")));
        net.lines.retain(|l| l.from_bus != "N0" && l.to_bus != "N0");
        let kept: std::collections::BTreeSet<String> = net.lines.iter().map(|l| l.id.clone()).collect();
        net.switches.retain(|s| kept.contains(&s.line_id));
    }
    for i in 0..n {
        if rng.random_bool(0.6) {
            net.loads.push(load(&format!("ld{i}"), &format!("N{i}"), 0.1, 0.0));
        }
    }
    net
}

/// Catalog of `n` abstract measures `M0..` with random excludes, requires
/// and at-least-one groups. The measures are never applied.
pub fn random_catalog(seed: u64, n: usize) -> MeasureCatalog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |i: usize| format!("M{i}");
    let mut catalog = MeasureCatalog::new(
        (0..n)
            .map(|i| Measure {
                id: id(i),
                action: MeasureAction::OpenSwitch {
                    switch: format!("s{i}"),
                },
                cost: rng.random_range(0.0..10.0),
            })
            .collect(),
    );
    if n < 2 {
        return catalog;
    }
    for _ in 0..rng.random_range(0..=n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            catalog.exclude(&id(a), &id(b));
        }
    }
    for _ in 0..rng.random_range(0..=n / 2) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            catalog.require(&id(a), &id(b));
        }
    }
    for _ in 0..rng.random_range(0..=2) {
        let size = rng.random_range(1..=n.min(3));
        catalog
            .at_least_one
            .push((0..size).map(|_| id(rng.random_range(0..n))).collect());
    }
    catalog
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::validate;

    #[test]
    fn fixtures_are_valid() {
        for net in [intro_ring(), intro_ring_without_pv(), two_bus_feeder(), trail_network()] {
            let r = validate(&net);
            assert!(r.is_valid(), "{}: {r}", net.name);
        }
        for seed in 0..50 {
            assert!(validate(&random_radial_network(seed, 10)).is_valid());
            let net = random_switched_network(seed, 15);
            assert!(validate(&net).is_valid(), "{}", validate(&net));
        }
    }

    #[test]
    fn intro_costs_follow_line_lengths() {
        let p = intro_replace_problem();
        assert_eq!(p.catalog.get("REPLACE_LINE_2").unwrap().cost, 7.0);
        assert_eq!(p.catalog.get("REPLACE_LINE_6").unwrap().cost, 4.0);
    }

    #[test]
    fn renewal_baseline() {
        assert_eq!(renewal_length(&trail_network(), &trail_rules()), 5.5);
    }
}
