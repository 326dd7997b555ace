//! Planning constraints and the lexicographic cost tuple.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::network::{analyze_topology, Network};
use crate::power_flow::{worst_case_results, LoadCase};

/// Violation aggregates over all load cases.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// Unsupplied load points.
    pub lp_us: usize,
    /// Load points on a meshed part of the network.
    pub lp_mf: usize,
    /// Transformer overloading in percentage points, summed over transformers
    /// and cases.
    pub tr_ol: f64,
    /// Length of overloaded lines in km, summed over cases.
    pub ln_ol: f64,
    /// Load points outside the voltage band, counted once per case.
    pub lp_vv: usize,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub voltage_violations: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub overloaded_lines: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub overloaded_transformers: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unconverged_cases: Vec<String>,
}

impl ConstraintReport {
    pub fn is_feasible(&self) -> bool {
        self.lp_us == 0 && self.lp_mf == 0 && self.tr_ol == 0.0 && self.ln_ol == 0.0 && self.lp_vv == 0
    }
}

/// `(level, magnitude)`: the most severe violated constraint class and its
/// strength, or `(0, cost)` for a feasible plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTuple {
    pub level: u8,
    pub magnitude: f64,
}

impl CostTuple {
    pub const fn new(level: u8, magnitude: f64) -> Self {
        CostTuple { level, magnitude }
    }

    pub fn is_feasible(&self) -> bool {
        self.level == 0
    }
}

impl fmt::Display for CostTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.level, self.magnitude)
    }
}

/// Lexicographic order: level first, then magnitude.
pub fn compare(a: &CostTuple, b: &CostTuple) -> Ordering {
    a.level.cmp(&b.level).then_with(|| a.magnitude.total_cmp(&b.magnitude))
}

impl Eq for CostTuple {}

impl PartialOrd for CostTuple {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CostTuple {
    fn cmp(&self, other: &Self) -> Ordering {
        compare(self, other)
    }
}

pub fn extended_cost(report: &ConstraintReport, solution_cost: f64) -> CostTuple {
    if report.lp_us > 0 {
        CostTuple::new(5, report.lp_us as f64)
    } else if report.lp_mf > 0 {
        CostTuple::new(4, report.lp_mf as f64)
    } else if report.tr_ol > 0.0 {
        CostTuple::new(3, report.tr_ol)
    } else if report.ln_ol > 0.0 {
        CostTuple::new(2, report.ln_ol)
    } else if report.lp_vv > 0 {
        CostTuple::new(1, report.lp_vv as f64)
    } else {
        CostTuple::new(0, solution_cost)
    }
}

/// Topology first; load flows run only on radial, fully supplied networks.
///
/// A case whose load flow does not converge adds the total line length of
/// the network to `ln_ol`.
pub fn evaluate(network: &Network, cases: &[LoadCase]) -> Result<ConstraintReport> {
    let topo = analyze_topology(network)?;
    let mut report = ConstraintReport {
        lp_us: topo.unsupplied_load_point_count,
        lp_mf: topo.meshed_load_point_count,
        ..ConstraintReport::default()
    };
    if report.lp_us > 0 || report.lp_mf > 0 {
        return Ok(report);
    }

    let load_points = network.load_points();
    let results = worst_case_results(network, cases)?;
    for (case, res) in cases.iter().zip(&results) {
        if !res.converged {
            report.ln_ol += network.total_line_length();
            report.unconverged_cases.push(case.name.clone());
            continue;
        }
        for t in &network.transformers {
            if let Some(&loading) = res.transformer_loading.get(&t.id) {
                if loading > t.max_loading {
                    report.tr_ol += loading - t.max_loading;
                    report.overloaded_transformers.insert(t.id.clone());
                }
            }
        }
        for line in &network.lines {
            if let Some(&loading) = res.line_loading.get(&line.id) {
                if loading > line.max_loading {
                    report.ln_ol += line.length;
                    report.overloaded_lines.insert(line.id.clone());
                }
            }
        }
        for &bus in &load_points {
            let v = res.bus_voltage[bus];
            if v < case.v_min || v > case.v_max {
                report.lp_vv += 1;
                report.voltage_violations.insert(bus.to_owned());
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::power_flow::load_flow_count;
    use proptest::prelude::*;

    fn report(lp_us: usize, lp_mf: usize, tr_ol: f64, ln_ol: f64, lp_vv: usize) -> ConstraintReport {
        ConstraintReport {
            lp_us,
            lp_mf,
            tr_ol,
            ln_ol,
            lp_vv,
            ..ConstraintReport::default()
        }
    }

    #[test]
    fn cascade_examples() {
        assert_eq!(extended_cost(&report(0, 0, 0.0, 0.0, 0), 7.0), CostTuple::new(0, 7.0));
        assert_eq!(extended_cost(&report(2, 3, 1.0, 2.0, 4), 9.0), CostTuple::new(5, 2.0));
        assert_eq!(extended_cost(&report(0, 0, 0.0, 1.3, 0), 0.0), CostTuple::new(2, 1.3));
        assert_eq!(extended_cost(&report(0, 1, 5.0, 0.0, 0), 0.0), CostTuple::new(4, 1.0));
        assert_eq!(extended_cost(&report(0, 0, 0.5, 1.0, 1), 0.0), CostTuple::new(3, 0.5));
        assert_eq!(extended_cost(&report(0, 0, 0.0, 0.0, 3), 2.0), CostTuple::new(1, 3.0));
    }

    #[test]
    fn compare_examples() {
        assert_eq!(
            compare(&CostTuple::new(0, 1e9), &CostTuple::new(1, 0.001)),
            Ordering::Less
        );
        assert_eq!(
            compare(&CostTuple::new(3, 2.0), &CostTuple::new(3, 5.0)),
            Ordering::Less
        );
        assert_eq!(
            compare(&CostTuple::new(2, 4.0), &CostTuple::new(2, 4.0)),
            Ordering::Equal
        );
    }

    #[test]
    fn intro_base_has_only_voltage_violations() {
        let r = evaluate(&fixtures::intro_ring(), &fixtures::intro_cases()).unwrap();
        assert_eq!((r.lp_us, r.lp_mf), (0, 0));
        assert!(r.lp_vv > 0);
        assert_eq!(r.tr_ol, 0.0);
        assert_eq!(r.ln_ol, 0.0);
    }

    #[test]
    fn screened_networks_run_no_load_flow() {
        let mut net = fixtures::intro_ring().with_all_switches_closed();
        let before = load_flow_count();
        let r = evaluate(&net, &fixtures::intro_cases()).unwrap();
        assert_eq!(r.lp_mf, 5);
        for s in &mut net.switches {
            if s.id == "3" || s.id == "7" {
                s.closed = false;
            }
        }
        let r = evaluate(&net, &fixtures::intro_cases()).unwrap();
        assert_eq!(r.lp_us, 2);
        assert_eq!((r.tr_ol, r.ln_ol, r.lp_vv), (0.0, 0.0, 0));
        assert_eq!(load_flow_count(), before);
    }

    #[test]
    fn non_convergence_is_a_maximal_line_violation() {
        let mut net = fixtures::two_bus_feeder();
        net.loads[0].active_power = 50.0;
        let r = evaluate(&net, &[LoadCase::high_load()]).unwrap();
        assert_eq!(r.ln_ol, net.total_line_length());
        assert_eq!(r.unconverged_cases, vec!["high_load".to_owned()]);
        assert_eq!(extended_cost(&r, 0.0).level, 2);
    }

    #[test]
    fn per_case_folding_counts_each_case() {
        let net = fixtures::intro_ring();
        let one = evaluate(&net, &[LoadCase::high_feed_in()]).unwrap();
        let two = evaluate(&net, &[LoadCase::high_feed_in(), LoadCase::high_feed_in()]).unwrap();
        assert_eq!(two.lp_vv, 2 * one.lp_vv);
    }

    fn direct_cascade(r: &ConstraintReport, cost: f64) -> (u8, f64) {
        let metrics = [
            (5, r.lp_us as f64),
            (4, r.lp_mf as f64),
            (3, r.tr_ol),
            (2, r.ln_ol),
            (1, r.lp_vv as f64),
        ];
        for (level, value) in metrics {
            if value > 0.0 {
                return (level, value);
            }
        }
        (0, cost)
    }

    fn arb_report() -> impl Strategy<Value = ConstraintReport> {
        let count = prop_oneof![Just(0usize), 0usize..20];
        let amount = prop_oneof![Just(0.0f64), 0.0f64..100.0];
        (count.clone(), count.clone(), amount.clone(), amount, count).prop_map(|(a, b, c, d, e)| report(a, b, c, d, e))
    }

    fn arb_tuple() -> impl Strategy<Value = CostTuple> {
        (0u8..=5, prop_oneof![Just(0.0f64), Just(1.0), 0.0f64..1e6]).prop_map(|(l, m)| CostTuple::new(l, m))
    }

    proptest! {
        #[test]
        fn cascade_matches_direct_rule(r in arb_report(), cost in 0.0f64..1e6) {
            let t = extended_cost(&r, cost);
            prop_assert_eq!((t.level, t.magnitude), direct_cascade(&r, cost));
            prop_assert_eq!(t.level == 0, r.is_feasible());
        }

        #[test]
        fn compare_is_a_total_order(a in arb_tuple(), b in arb_tuple(), c in arb_tuple()) {
            prop_assert_eq!(compare(&a, &b), compare(&b, &a).reverse());
            if compare(&a, &b) != Ordering::Greater && compare(&b, &c) != Ordering::Greater {
                prop_assert_ne!(compare(&a, &c), Ordering::Greater);
            }
            let lex = (a.level, a.magnitude).partial_cmp(&(b.level, b.magnitude)).unwrap();
            prop_assert_eq!(compare(&a, &b), lex);
        }
    }
}
