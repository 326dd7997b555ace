//! Local search over measure subsets.
//!
//! Solutions are compared with the lexicographic [`CostTuple`]. All searches
//! share one [`SearchContext`]: a seeded RNG, an evaluation cache keyed by
//! the sorted measure set (cache hits are free) and the trace.

mod exhaustive;
mod search;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{evaluate, extended_cost, CostTuple};
use crate::error::{Error, Result};
use crate::measures::{apply_indices, initial_solution, MeasureCatalog, PlanningProblem, Solution};

pub use exhaustive::{exhaustive_search, MAX_EXHAUSTIVE_MEASURES};
pub use search::{hill_climbing, iterated_local_search, late_acceptance_hc, perturbate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborhoodMode {
    pub allow_add: bool,
    pub allow_remove: bool,
    pub allow_exchange: bool,
}

impl NeighborhoodMode {
    pub const ADD: Self = NeighborhoodMode {
        allow_add: true,
        allow_remove: false,
        allow_exchange: false,
    };
    pub const ADD_REMOVE: Self = NeighborhoodMode {
        allow_add: true,
        allow_remove: true,
        allow_exchange: false,
    };
    pub const ADD_REMOVE_EXCHANGE: Self = NeighborhoodMode {
        allow_add: true,
        allow_remove: true,
        allow_exchange: true,
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub mode: NeighborhoodMode,
    pub evaluation_budget: usize,
    /// ILS stops after this many perturbation cycles without improvement.
    pub stop_after_no_improvement: usize,
    pub perturbation_strength: usize,
    pub lahc_history_length: usize,
    pub rng_seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mode: NeighborhoodMode::ADD_REMOVE,
            evaluation_budget: 5000,
            stop_after_no_improvement: 1000,
            perturbation_strength: 4,
            lahc_history_length: 50,
            rng_seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn check(&self) -> Result<()> {
        let m = self.mode;
        if !(m.allow_add || m.allow_remove || m.allow_exchange) {
            return Err(Error::InvalidConfig("neighborhood mode allows no move".into()));
        }
        if self.evaluation_budget == 0 {
            return Err(Error::InvalidConfig("evaluation_budget must be positive".into()));
        }
        if self.lahc_history_length == 0 {
            return Err(Error::InvalidConfig("lahc_history_length must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.evaluation_budget = budget;
        self
    }
}

/// Search algorithm selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Hc,
    Ils,
    IlsAe,
    Lahc,
    Exhaustive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Hc,
        Algorithm::Ils,
        Algorithm::IlsAe,
        Algorithm::Lahc,
        Algorithm::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hc => "hc",
            Algorithm::Ils => "ils",
            Algorithm::IlsAe => "ils_ae",
            Algorithm::Lahc => "lahc",
            Algorithm::Exhaustive => "exhaustive",
        }
    }

    /// The standard configuration: HC, ILS_4_HC, ILS_4_HC_AE, LAHC_50.
    pub fn default_config(self) -> SearchConfig {
        let base = SearchConfig::default();
        match self {
            Algorithm::IlsAe => SearchConfig {
                mode: NeighborhoodMode::ADD_REMOVE_EXCHANGE,
                ..base
            },
            _ => base,
        }
    }

    pub fn run(self, problem: &PlanningProblem, config: &SearchConfig) -> Result<SearchOutcome> {
        if self == Algorithm::Exhaustive {
            let (solution, cost) = exhaustive_search(problem)?;
            return Ok(SearchOutcome {
                trace: SearchTrace {
                    best_solution: solution.clone(),
                    best_cost: cost,
                    ..SearchTrace::default()
                },
                solution,
                cost,
            });
        }
        let mut ctx = SearchContext::new(problem, config.clone())?;
        let s0 = initial_solution(&problem.catalog)?;
        match self {
            Algorithm::Hc => hill_climbing(&mut ctx, &s0)?,
            Algorithm::Ils | Algorithm::IlsAe => iterated_local_search(&mut ctx, &s0)?,
            Algorithm::Lahc => late_acceptance_hc(&mut ctx, &s0)?,
            Algorithm::Exhaustive => unreachable!(),
        };
        Ok(ctx.finish())
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

/// A named algorithm configuration such as `ILS_4_HC`, `ILS_2_HC_AE`,
/// `LAHC_50` or `HC`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedConfig {
    pub name: String,
    pub algorithm: Algorithm,
    pub config: SearchConfig,
}

impl FromStr for NamedConfig {
    type Err = Error;

    fn from_str(name: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown configuration `{name}`"));
        let parts: Vec<&str> = name.split('_').collect();
        let base = SearchConfig::default();
        let (algorithm, config) = match parts.as_slice() {
            ["HC"] => (Algorithm::Hc, base),
            ["HC", "AE"] => (
                Algorithm::Hc,
                SearchConfig {
                    mode: NeighborhoodMode::ADD_REMOVE_EXCHANGE,
                    ..base
                },
            ),
            ["ILS", k, "HC"] => (
                Algorithm::Ils,
                SearchConfig {
                    perturbation_strength: k.parse().map_err(|_| bad())?,
                    ..base
                },
            ),
            ["ILS", k, "HC", "AE"] => (
                Algorithm::IlsAe,
                SearchConfig {
                    perturbation_strength: k.parse().map_err(|_| bad())?,
                    mode: NeighborhoodMode::ADD_REMOVE_EXCHANGE,
                    ..base
                },
            ),
            ["LAHC", l] => (
                Algorithm::Lahc,
                SearchConfig {
                    lahc_history_length: l.parse().map_err(|_| bad())?,
                    ..base
                },
            ),
            ["EXHAUSTIVE"] => (Algorithm::Exhaustive, base),
            _ => return Err(bad()),
        };
        config.check()?;
        Ok(NamedConfig {
            name: name.to_owned(),
            algorithm,
            config,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchEvent {
    Step,
    Perturbation,
    Restart,
}

/// One budget-consuming evaluation and the cost of the current solution
/// after the acceptance decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub eval: usize,
    pub level: u8,
    pub magnitude: f64,
    pub event: SearchEvent,
}

impl TraceRecord {
    pub fn cost(&self) -> CostTuple {
        CostTuple::new(self.level, self.magnitude)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub records: Vec<TraceRecord>,
    /// ILS incumbent or LAHC run-best after every change, as (eval, cost).
    pub incumbents: Vec<(usize, CostTuple)>,
    pub best_solution: Solution,
    pub best_cost: CostTuple,
    pub evaluations: usize,
    pub cache_hits: usize,
}

impl Default for SearchTrace {
    fn default() -> Self {
        SearchTrace {
            records: Vec::new(),
            incumbents: Vec::new(),
            best_solution: Solution::empty(),
            best_cost: CostTuple::new(u8::MAX, f64::INFINITY),
            evaluations: 0,
            cache_hits: 0,
        }
    }
}

impl SearchTrace {
    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Records split at perturbation and restart events.
    pub fn segments(&self) -> Vec<&[TraceRecord]> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, r) in self.records.iter().enumerate() {
            if i > start && r.event != SearchEvent::Step {
                out.push(&self.records[start..i]);
                start = i;
            }
        }
        if start < self.records.len() {
            out.push(&self.records[start..]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub solution: Solution,
    pub cost: CostTuple,
    pub trace: SearchTrace,
}

/// Measure indices in ascending order.
pub(crate) type Selection = Vec<usize>;

#[derive(Debug, Clone)]
pub(crate) struct Dependencies {
    excludes: Vec<Vec<usize>>,
    requires: Vec<Vec<usize>>,
    groups: Vec<Vec<usize>>,
}

impl Dependencies {
    pub fn compile(catalog: &MeasureCatalog) -> Result<Self> {
        catalog.check()?;
        let index = catalog.index();
        let n = catalog.len();
        let mut deps = Dependencies {
            excludes: vec![Vec::new(); n],
            requires: vec![Vec::new(); n],
            groups: Vec::new(),
        };
        for (a, b) in &catalog.excludes {
            let (a, b) = (index[a.as_str()], index[b.as_str()]);
            deps.excludes[a].push(b);
            deps.excludes[b].push(a);
        }
        for (id, needed) in &catalog.requires {
            deps.requires[index[id.as_str()]] = needed.iter().map(|n| index[n.as_str()]).collect();
        }
        for g in &catalog.at_least_one {
            deps.groups.push(g.iter().map(|id| index[id.as_str()]).collect());
        }
        Ok(deps)
    }

    pub fn satisfied(&self, mask: &[bool], sel: &[usize]) -> bool {
        sel.iter()
            .all(|&i| self.excludes[i].iter().all(|&j| !mask[j]) && self.requires[i].iter().all(|&j| mask[j]))
            && self.groups.iter().all(|g| g.iter().any(|&j| mask[j]))
    }

    /// Dependency-satisfying single edits of `sel`: removals, additions,
    /// then exchanges, each in index order.
    pub fn neighbours(&self, sel: &[usize], mode: NeighborhoodMode) -> Vec<Selection> {
        let n = self.excludes.len();
        let mut mask = vec![false; n];
        for &i in sel {
            mask[i] = true;
        }
        let mut out = Vec::new();
        let consider = |mask: &mut Vec<bool>, out: &mut Vec<Selection>| {
            let cand: Selection = (0..n).filter(|&i| mask[i]).collect();
            if self.satisfied(mask, &cand) {
                out.push(cand);
            }
        };
        if mode.allow_remove {
            for &i in sel {
                mask[i] = false;
                consider(&mut mask, &mut out);
                mask[i] = true;
            }
        }
        if mode.allow_add {
            for j in 0..n {
                if !mask[j] {
                    mask[j] = true;
                    consider(&mut mask, &mut out);
                    mask[j] = false;
                }
            }
        }
        if mode.allow_exchange {
            for &i in sel {
                mask[i] = false;
                for j in 0..n {
                    if j != i && !mask[j] {
                        mask[j] = true;
                        consider(&mut mask, &mut out);
                        mask[j] = false;
                    }
                }
                mask[i] = true;
            }
        }
        out
    }
}

fn to_selection(solution: &Solution, catalog: &MeasureCatalog) -> Result<Selection> {
    let index = catalog.index();
    let mut sel = Vec::with_capacity(solution.len());
    for id in solution.iter() {
        sel.push(*index.get(id).ok_or_else(|| Error::UnknownMeasure(id.to_owned()))?);
    }
    sel.sort_unstable();
    Ok(sel)
}

fn to_solution(sel: &[usize], catalog: &MeasureCatalog) -> Solution {
    sel.iter().map(|&i| catalog.measures[i].id.as_str()).collect()
}

/// Every dependency-satisfying single edit of `solution` allowed by `mode`.
pub fn neighbourhood(solution: &Solution, catalog: &MeasureCatalog, mode: NeighborhoodMode) -> Result<Vec<Solution>> {
    let deps = Dependencies::compile(catalog)?;
    let sel = to_selection(solution, catalog)?;
    Ok(deps
        .neighbours(&sel, mode)
        .iter()
        .map(|s| to_solution(s, catalog))
        .collect())
}

fn cost_of(problem: &PlanningProblem, sel: &[usize]) -> Result<CostTuple> {
    let net = apply_indices(&problem.base, sel, &problem.catalog)?;
    let report = evaluate(&net, &problem.cases)?;
    let cost: f64 = sel.iter().map(|&i| problem.catalog.measures[i].cost).sum();
    Ok(extended_cost(&report, cost))
}

/// Cost tuple of `solution` applied to the problem's base network.
pub fn evaluate_solution(problem: &PlanningProblem, solution: &Solution) -> Result<CostTuple> {
    cost_of(problem, &to_selection(solution, &problem.catalog)?)
}

/// Mutable state of one search run.
pub struct SearchContext<'a> {
    problem: &'a PlanningProblem,
    pub(crate) config: SearchConfig,
    pub(crate) deps: Dependencies,
    pub(crate) rng: ChaCha8Rng,
    cache: HashMap<Selection, CostTuple>,
    pending: Option<SearchEvent>,
    best: Option<(Selection, CostTuple)>,
    trace: SearchTrace,
}

impl<'a> SearchContext<'a> {
    pub fn new(problem: &'a PlanningProblem, config: SearchConfig) -> Result<Self> {
        config.check()?;
        Ok(SearchContext {
            problem,
            deps: Dependencies::compile(&problem.catalog)?,
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            config,
            cache: HashMap::new(),
            pending: None,
            best: None,
            trace: SearchTrace::default(),
        })
    }

    pub fn evaluations(&self) -> usize {
        self.trace.evaluations
    }

    pub fn budget_left(&self) -> bool {
        self.trace.evaluations < self.config.evaluation_budget
    }

    pub fn trace(&self) -> &SearchTrace {
        &self.trace
    }

    pub(crate) fn catalog(&self) -> &MeasureCatalog {
        &self.problem.catalog
    }

    pub(crate) fn selection(&self, s: &Solution) -> Result<Selection> {
        let sel = to_selection(s, self.catalog())?;
        let mut mask = vec![false; self.catalog().len()];
        for &i in &sel {
            mask[i] = true;
        }
        if !self.deps.satisfied(&mask, &sel) {
            return Err(Error::InvalidConfig(
                "start solution violates measure dependencies".into(),
            ));
        }
        Ok(sel)
    }

    pub(crate) fn solution(&self, sel: &[usize]) -> Solution {
        to_solution(sel, self.catalog())
    }

    /// Cost of `sel` and whether it consumed budget; `None` once the budget
    /// is spent and `sel` is not cached.
    pub(crate) fn eval(&mut self, sel: &[usize]) -> Result<Option<(CostTuple, bool)>> {
        if let Some(&c) = self.cache.get(sel) {
            self.trace.cache_hits += 1;
            return Ok(Some((c, false)));
        }
        if !self.budget_left() {
            return Ok(None);
        }
        let c = cost_of(self.problem, sel)?;
        self.trace.evaluations += 1;
        self.cache.insert(sel.to_vec(), c);
        let better = self.best.as_ref().is_none_or(|(_, b)| c < *b);
        if better {
            self.best = Some((sel.to_vec(), c));
        }
        Ok(Some((c, true)))
    }

    /// Trace entry for a fresh evaluation; `current` is the cost held after
    /// the acceptance decision.
    pub(crate) fn record(&mut self, fresh: bool, current: CostTuple) {
        if !fresh {
            return;
        }
        let event = self.pending.take().unwrap_or(SearchEvent::Step);
        self.trace.records.push(TraceRecord {
            eval: self.trace.evaluations,
            level: current.level,
            magnitude: current.magnitude,
            event,
        });
    }

    pub(crate) fn mark(&mut self, event: SearchEvent) {
        self.pending = Some(event);
    }

    pub(crate) fn incumbent(&mut self, cost: CostTuple) {
        self.trace.incumbents.push((self.trace.evaluations, cost));
    }

    pub fn finish(mut self) -> SearchOutcome {
        let (sel, cost) = self
            .best
            .take()
            .unwrap_or_else(|| (Vec::new(), SearchTrace::default().best_cost));
        let solution = self.solution(&sel);
        self.trace.best_solution = solution.clone();
        self.trace.best_cost = cost;
        SearchOutcome {
            solution,
            cost,
            trace: self.trace,
        }
    }
}
