use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_res, ResScenario};
use crate::constraints::{evaluate, extended_cost, CostTuple};
use crate::error::{Error, Result};
use crate::measures::{PlanningProblem, PlanningRules, Solution};
use crate::network::Network;
use crate::optimizer::{evaluate_solution, Algorithm, SearchConfig};
use crate::power_flow::LoadCase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyOptions {
    pub algorithm: Algorithm,
    /// `rng_seed` is replaced per sample.
    pub search: SearchConfig,
    pub samples: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses one per core.
    #[serde(default)]
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub seed: u64,
    /// Absent if the sample failed.
    pub cost: Option<CostTuple>,
    pub solution: Solution,
    pub evaluations: usize,
    pub feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Order statistics over the costs of feasible samples; `None` when no
/// sample is feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub n: usize,
    pub feasible: usize,
    pub feasibility_rate: f64,
    /// Share of feasible samples that needed measures with a positive cost.
    pub need_rate: f64,
    pub min: Option<f64>,
    pub q25: Option<f64>,
    pub median: Option<f64>,
    pub q75: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub study: String,
    pub records: Vec<SampleRecord>,
    pub summary: StudySummary,
}

/// One row of a study comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub study: String,
    pub n: usize,
    pub feasibility_rate: f64,
    pub min: Option<f64>,
    pub q25: Option<f64>,
    pub median: Option<f64>,
    pub q75: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sample `index`: the `index + 1`-th output of a SplitMix64
/// stream started at `master_seed`. The search of that sample is seeded
/// with one further SplitMix64 step of this value.
pub fn sample_seed(master_seed: u64, index: usize) -> u64 {
    splitmix64(master_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index as u64 + 1)))
}

fn search_seed(sample_seed: u64) -> u64 {
    splitmix64(sample_seed.wrapping_add(GOLDEN_GAMMA))
}

/// Linear interpolation between closest ranks; `sorted` must be ascending
/// and non-empty.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl StudySummary {
    pub fn from_records(records: &[SampleRecord]) -> Self {
        summarize(records)
    }
}

fn summarize(records: &[SampleRecord]) -> StudySummary {
    let mut costs: Vec<f64> = records
        .iter()
        .filter(|r| r.feasible)
        .filter_map(|r| r.cost.map(|c| c.magnitude))
        .collect();
    costs.sort_by(f64::total_cmp);
    let n = records.len();
    let feasible = costs.len();
    let stat = |f: &dyn Fn(&[f64]) -> f64| (!costs.is_empty()).then(|| f(&costs));
    StudySummary {
        n,
        feasible,
        feasibility_rate: if n == 0 { 0.0 } else { feasible as f64 / n as f64 },
        need_rate: if feasible == 0 {
            0.0
        } else {
            costs.iter().filter(|&&c| c > 0.0).count() as f64 / feasible as f64
        },
        min: stat(&|c| c[0]),
        q25: stat(&|c| quantile(c, 0.25)),
        median: stat(&|c| quantile(c, 0.5)),
        q75: stat(&|c| quantile(c, 0.75)),
        max: stat(&|c| c[c.len() - 1]),
        mean: stat(&|c| c.iter().sum::<f64>() / c.len() as f64),
    }
}

fn run_sample(
    base: &Network,
    scenario: &ResScenario,
    rules: &PlanningRules,
    cases: &[LoadCase],
    options: &StudyOptions,
    index: usize,
) -> SampleRecord {
    let seed = sample_seed(options.master_seed, index);
    let mut record = SampleRecord {
        index,
        seed,
        cost: None,
        solution: Solution::empty(),
        evaluations: 0,
        feasible: false,
        error: None,
    };
    let result = (|| -> Result<()> {
        let net = sample_res(base, scenario, seed)?;
        let report = evaluate(&net, cases)?;
        if report.is_feasible() {
            record.cost = Some(CostTuple::new(0, 0.0));
            record.feasible = true;
            return Ok(());
        }
        let problem = PlanningProblem::discover(&net, rules, cases.to_vec())?;
        let config = options.search.clone().with_seed(search_seed(seed));
        let outcome = options.algorithm.run(&problem, &config)?;
        record.cost = Some(outcome.cost);
        record.feasible = outcome.cost.is_feasible();
        record.solution = outcome.solution;
        record.evaluations = outcome.trace.evaluations;
        Ok(())
    })();
    if let Err(e) = result {
        let mut msg = e.to_string();
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            msg.push_str(": ");
            msg.push_str(&s.to_string());
            source = s.source();
        }
        record.error = Some(msg);
    }
    record
}

/// Sample, plan and record `options.samples` independent PV installations.
/// Failing samples are recorded with their error.
pub fn run_study(
    base: &Network,
    scenario: &ResScenario,
    rules: &PlanningRules,
    cases: &[LoadCase],
    options: &StudyOptions,
) -> Result<StudyResult> {
    scenario.check()?;
    rules.check()?;
    options.search.check()?;
    for c in cases {
        c.check()?;
    }
    if options.samples == 0 {
        return Err(Error::Empty("study samples"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let mut records: Vec<SampleRecord> = pool.install(|| {
        (0..options.samples)
            .into_par_iter()
            .map(|i| run_sample(base, scenario, rules, cases, options, i))
            .collect()
    });
    records.sort_by_key(|r| r.index);
    let summary = summarize(&records);
    Ok(StudyResult {
        study: scenario.name.clone(),
        records,
        summary,
    })
}

/// Cost tuple of a recorded solution on its re-sampled network. An empty
/// solution stands for the network as operated.
pub fn revalidate(
    base: &Network,
    scenario: &ResScenario,
    rules: &PlanningRules,
    cases: &[LoadCase],
    record: &SampleRecord,
) -> Result<CostTuple> {
    let net = sample_res(base, scenario, record.seed)?;
    if record.solution.is_empty() {
        return Ok(extended_cost(&evaluate(&net, cases)?, 0.0));
    }
    let problem = PlanningProblem::discover(&net, rules, cases.to_vec())?;
    evaluate_solution(&problem, &record.solution)
}

/// One summary row per study, in input order.
pub fn aggregate(results: &[StudyResult]) -> Result<Vec<SummaryRow>> {
    if results.is_empty() {
        return Err(Error::Empty("study results"));
    }
    Ok(results
        .iter()
        .map(|r| SummaryRow {
            study: r.study.clone(),
            n: r.summary.n,
            feasibility_rate: r.summary.feasibility_rate,
            min: r.summary.min,
            q25: r.summary.q25,
            median: r.summary.median,
            q75: r.summary.q75,
            max: r.summary.max,
            mean: r.summary.mean,
        })
        .collect())
}
