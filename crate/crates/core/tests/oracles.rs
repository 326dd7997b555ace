mod support;

use gridplan_core::{analyze_topology, fixtures, run_load_flow, LoadCase, Network};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_case(rng: &mut ChaCha8Rng) -> LoadCase {
    LoadCase {
        name: "random".into(),
        load_scale: rng.random_range(0.0..1.0),
        generation_scale: rng.random_range(0.0..1.0),
        v_min: 0.9,
        v_max: 1.1,
    }
}

#[test]
fn sweep_matches_nodal_solve_on_random_feeders() {
    for seed in 0..300 {
        let net = fixtures::random_radial_network(seed, 3 + seed as usize % 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_case(&mut rng);
        let res = run_load_flow(&net, &case).unwrap();
        assert!(res.converged, "seed {seed}");
        let oracle = support::nodal_voltages(&net, &case);
        for (bus, v) in &oracle {
            let got = res.bus_voltage[bus];
            assert!((got - v).abs() < 1e-6, "seed {seed} bus {bus}: {got} vs {v}");
        }
    }
}

#[test]
fn topology_matches_traversal_on_random_networks() {
    for seed in 0..300 {
        let net = fixtures::random_switched_network(seed, 2 + seed as usize % 19);
        let got = analyze_topology(&net).unwrap();
        let want = support::brute_topology(&net);
        assert_eq!(got.supplied_bus_ids, want.supplied, "seed {seed}");
        assert_eq!(
            got.unsupplied_load_point_count, want.unsupplied_load_points,
            "seed {seed}"
        );
        assert_eq!(got.meshed_load_point_count, want.meshed_load_points, "seed {seed}");
    }
}

#[test]
fn network_survives_a_json_round_trip() {
    for net in [
        fixtures::intro_ring(),
        fixtures::trail_network(),
        fixtures::random_radial_network(4, 9),
    ] {
        assert_eq!(Network::from_json(&net.to_json()).unwrap(), net);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn more_feed_in_raises_the_local_voltage(bus in 0usize..5, extra in 0.0f64..2.0) {
        let base = fixtures::intro_ring();
        let case = LoadCase::high_feed_in();
        let before = run_load_flow(&base, &case).unwrap();
        let mut more = base.clone();
        more.generators[bus].active_power += extra;
        let after = run_load_flow(&more, &case).unwrap();
        // reactive line losses may pull other buses down slightly
        let at = &base.generators[bus].bus;
        prop_assert!(after.bus_voltage[at] >= before.bus_voltage[at]);
    }
}
