//! Automated planning of distribution networks.
//!
//! A planning problem is a network that violates operational constraints
//! under one or more worst-case load cases, together with a catalog of
//! atomic measures (open a switch, replace a line, build a new trail, ...).
//! The goal is the cheapest subset of measures after which the network is
//! radial, fully supplied and within its thermal and voltage limits.
//!
//! * [`network`]: data model and topology analysis
//! * [`power_flow`]: radial backward/forward sweep load flow
//! * [`constraints`]: constraint evaluation and the lexicographic cost tuple
//! * [`measures`]: measure catalog, application and discovery rules
//! * [`optimizer`]: hill climbing, iterated local search, late acceptance
//!   hill climbing and exhaustive search
//! * [`scenario`]: probabilistic PV scenarios and batch studies
//!
//! ```
//! use gridplan_core::{fixtures, optimizer};
//!
//! let problem = fixtures::intro_problem();
//! let (solution, cost) = optimizer::exhaustive_search(&problem).unwrap();
//! assert_eq!(cost.level, 0);
//! assert_eq!(cost.magnitude, 4.0);
//! assert!(solution.contains("OPEN_SWITCH_4"));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constraints;
pub mod error;
pub mod fixtures;
pub mod measures;
pub mod network;
pub mod optimizer;
pub mod power_flow;
pub mod scenario;

pub use constraints::{compare, evaluate, extended_cost, ConstraintReport, CostTuple};
pub use error::{Error, Result};
pub use measures::{
    apply, discover_measures, prepare_base, satisfies_dependencies, solution_cost, Measure, MeasureAction,
    MeasureCatalog, PlanningProblem, PlanningRules, Solution,
};
pub use network::{
    analyze_topology, path_to_source, validate, Bus, Generator, InjectionKind, Line, LineStandardType, Load, Network,
    Position, Source, Switch, TopologyReport, Transformer, ValidationReport,
};
pub use optimizer::{
    evaluate_solution, exhaustive_search, neighbourhood, Algorithm, NamedConfig, NeighborhoodMode, SearchConfig,
    SearchEvent, SearchOutcome, SearchTrace, TraceRecord,
};
pub use power_flow::{run_load_flow, worst_case_results, LoadCase, PowerFlowResult};
pub use scenario::{
    aggregate, revalidate, run_study, sample_res, sample_seed, PlacementRule, ResScenario, SampleRecord, StudyOptions,
    StudyResult, StudySummary, SummaryRow,
};
