use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gridplan_core::measures::MeasureCatalog;
use gridplan_core::{
    aggregate, analyze_topology, evaluate, extended_cost, run_study, validate as validate_network, Algorithm,
    CostTuple, LoadCase, Measure, NamedConfig, Network, PlanningProblem, PlanningRules, ResScenario, SampleRecord,
    SearchConfig, StudyOptions, StudySummary, SummaryRow,
};

use crate::manifest::{sha256_hex, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub network: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<PathBuf>,
}

impl Inputs {
    fn paths(&self) -> Vec<&Path> {
        let mut out = vec![self.network.as_path()];
        out.extend(self.rules.as_deref());
        out.extend(self.catalog.as_deref());
        out.extend(self.cases.as_deref());
        out
    }

    fn problem(&self) -> Result<PlanningProblem> {
        let network = read_network(&self.network)?;
        let cases = read_cases(self.cases.as_deref())?;
        if let Some(path) = &self.catalog {
            let catalog = MeasureCatalog::from_json(&read(path)?).with_context(|| path.display().to_string())?;
            return Ok(PlanningProblem {
                base: network,
                catalog,
                cases,
            });
        }
        let rules = read_rules(self.rules.as_deref())?;
        Ok(PlanningProblem::discover(&network, &rules, cases)?)
    }
}

/// A fully resolved command, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Invocation {
    Plan {
        inputs: Inputs,
        algorithm: Algorithm,
        search: SearchConfig,
    },
    Compare {
        inputs: Inputs,
        configs: Vec<String>,
        runs: usize,
        first_seed: u64,
        budget: usize,
        workers: usize,
    },
    Study {
        network: PathBuf,
        scenarios: Vec<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rules: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cases: Option<PathBuf>,
        algorithm: Algorithm,
        search: SearchConfig,
        samples: usize,
        master_seed: u64,
        workers: usize,
    },
}

impl Invocation {
    fn name(&self) -> &'static str {
        match self {
            Invocation::Plan { .. } => "plan",
            Invocation::Compare { .. } => "compare",
            Invocation::Study { .. } => "study",
        }
    }

    fn input_paths(&self) -> Vec<&Path> {
        match self {
            Invocation::Plan { inputs, .. } | Invocation::Compare { inputs, .. } => inputs.paths(),
            Invocation::Study {
                network,
                scenarios,
                rules,
                cases,
                ..
            } => {
                let mut out = vec![network.as_path()];
                out.extend(scenarios.iter().map(PathBuf::as_path));
                out.extend(rules.as_deref());
                out.extend(cases.as_deref());
                out
            }
        }
    }

    fn master_seed(&self) -> u64 {
        match self {
            Invocation::Plan { search, .. } => search.rng_seed,
            Invocation::Compare { first_seed, .. } => *first_seed,
            Invocation::Study { master_seed, .. } => *master_seed,
        }
    }
}

/// Named output files in write order.
type Outputs = Vec<(String, Vec<u8>)>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_network(path: &Path) -> Result<Network> {
    Network::from_json(&read(path)?).with_context(|| path.display().to_string())
}

fn read_cases(path: Option<&Path>) -> Result<Vec<LoadCase>> {
    match path {
        Some(p) => Ok(LoadCase::list_from_json(&read(p)?).with_context(|| p.display().to_string())?),
        None => Ok(vec![LoadCase::high_feed_in(), LoadCase::high_load()]),
    }
}

fn read_rules(path: Option<&Path>) -> Result<PlanningRules> {
    match path {
        Some(p) => Ok(PlanningRules::from_json(&read(p)?).with_context(|| p.display().to_string())?),
        None => Ok(PlanningRules::default()),
    }
}

fn json(value: &impl Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

pub fn validate(network_path: &Path, cases_path: Option<&Path>) -> Result<Status> {
    let network = read_network(network_path)?;
    let cases = read_cases(cases_path)?;
    let report = validate_network(&network);
    println!("validation: {report}");
    if !report.is_valid() {
        return Ok(Status::Infeasible);
    }
    let topology = analyze_topology(&network)?;
    println!(
        "topology: {} buses supplied, {} unsupplied and {} meshed load points, {} feeders",
        topology.supplied_bus_ids.len(),
        topology.unsupplied_load_point_count,
        topology.meshed_load_point_count,
        topology.feeders.len()
    );
    let constraints = evaluate(&network, &cases)?;
    println!("constraints: {}", serde_json::to_string(&constraints)?);
    let cost = extended_cost(&constraints, 0.0);
    println!("level {}", cost.level);
    Ok(if cost.is_feasible() {
        Status::Feasible
    } else {
        Status::Infeasible
    })
}

#[derive(Serialize)]
struct PlanFile<'a> {
    algorithm: Algorithm,
    seed: u64,
    cost: CostTuple,
    total_cost: f64,
    evaluations: usize,
    cache_hits: usize,
    measures: Vec<&'a Measure>,
}

fn plan(inputs: &Inputs, algorithm: Algorithm, search: &SearchConfig) -> Result<(Outputs, Status)> {
    let problem = inputs.problem()?;
    let outcome = algorithm.run(&problem, search)?;
    let measures: Vec<&Measure> = outcome
        .solution
        .iter()
        .map(|id| problem.catalog.get(id).expect("solution ids come from the catalog"))
        .collect();
    let file = PlanFile {
        algorithm,
        seed: search.rng_seed,
        cost: outcome.cost,
        total_cost: measures.iter().map(|m| m.cost).sum(),
        evaluations: outcome.trace.evaluations,
        cache_hits: outcome.trace.cache_hits,
        measures,
    };
    println!("{} measures in catalog", problem.catalog.len());
    println!("solution: {:?}", outcome.solution.iter().collect::<Vec<_>>());
    println!("cost: {}", outcome.cost);
    let outputs = vec![
        ("solution.json".to_owned(), json(&file)),
        ("cost.json".to_owned(), json(&outcome.cost)),
        ("trace.jsonl".to_owned(), outcome.trace.to_jsonl().into_bytes()),
    ];
    Ok((outputs, status_of(outcome.cost.is_feasible())))
}

fn status_of(feasible: bool) -> Status {
    if feasible {
        Status::Feasible
    } else {
        Status::Infeasible
    }
}

#[derive(Serialize)]
struct RunRow {
    config: String,
    seed: u64,
    level: u8,
    magnitude: f64,
    evaluations: usize,
    solution: String,
}

#[derive(Serialize)]
struct DistributionRow {
    config: String,
    n: usize,
    feasibility_rate: f64,
    min: Option<f64>,
    q25: Option<f64>,
    median: Option<f64>,
    q75: Option<f64>,
    max: Option<f64>,
    mean: Option<f64>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

fn compare(
    inputs: &Inputs,
    configs: &[String],
    runs: usize,
    first_seed: u64,
    budget: usize,
    workers: usize,
) -> Result<(Outputs, Status)> {
    if configs.len() < 2 || runs == 0 {
        bail!("compare needs at least two configurations and one run");
    }
    let problem = inputs.problem()?;
    let named: Vec<NamedConfig> = configs.iter().map(|c| c.parse()).collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, u64)> = (0..named.len())
        .flat_map(|c| (0..runs as u64).map(move |k| (c, first_seed + k)))
        .collect();
    let results = pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|&(c, seed)| {
                let nc = &named[c];
                let config = nc.config.clone().with_seed(seed).with_budget(budget);
                nc.algorithm.run(&problem, &config).map(|o| (c, seed, o))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut outputs = Outputs::new();
    let mut rows = Vec::new();
    let mut per_config: Vec<Vec<SampleRecord>> = vec![Vec::new(); named.len()];
    for (c, seed, o) in &results {
        let name = &named[*c].name;
        rows.push(RunRow {
            config: name.clone(),
            seed: *seed,
            level: o.cost.level,
            magnitude: o.cost.magnitude,
            evaluations: o.trace.evaluations,
            solution: o.solution.iter().collect::<Vec<_>>().join(";"),
        });
        let index = per_config[*c].len();
        per_config[*c].push(SampleRecord {
            index,
            seed: *seed,
            cost: Some(o.cost),
            solution: o.solution.clone(),
            evaluations: o.trace.evaluations,
            feasible: o.cost.is_feasible(),
            error: None,
        });
        outputs.push((
            format!("traces/{name}_seed{seed}.jsonl"),
            o.trace.to_jsonl().into_bytes(),
        ));
    }
    let distribution: Vec<DistributionRow> = named
        .iter()
        .zip(&per_config)
        .map(|(nc, records)| {
            let s = StudySummary::from_records(records);
            DistributionRow {
                config: nc.name.clone(),
                n: s.n,
                feasibility_rate: s.feasibility_rate,
                min: s.min,
                q25: s.q25,
                median: s.median,
                q75: s.q75,
                max: s.max,
                mean: s.mean,
            }
        })
        .collect();
    for d in &distribution {
        println!(
            "{:<16} feasible {:>5.1}%  median {}",
            d.config,
            100.0 * d.feasibility_rate,
            d.median.map_or("-".to_owned(), |m| m.to_string())
        );
    }
    outputs.insert(0, ("runs.csv".to_owned(), csv_bytes(&rows)?));
    outputs.insert(1, ("distribution.csv".to_owned(), csv_bytes(&distribution)?));
    let any = results.iter().any(|(_, _, o)| o.cost.is_feasible());
    Ok((outputs, status_of(any)))
}

#[allow(clippy::too_many_arguments)]
fn study(
    network: &Path,
    scenarios: &[PathBuf],
    rules: Option<&Path>,
    cases: Option<&Path>,
    algorithm: Algorithm,
    search: &SearchConfig,
    samples: usize,
    master_seed: u64,
    workers: usize,
) -> Result<(Outputs, Status)> {
    let base = read_network(network)?;
    let rules = read_rules(rules)?;
    let cases = read_cases(cases)?;
    let options = StudyOptions {
        algorithm,
        search: search.clone(),
        samples,
        master_seed,
        workers,
    };
    let mut results = Vec::new();
    for path in scenarios {
        let scenario = ResScenario::from_json(&read(path)?).with_context(|| path.display().to_string())?;
        let r = run_study(&base, &scenario, &rules, &cases, &options)?;
        let failed = r.records.iter().filter(|r| r.error.is_some()).count();
        println!(
            "{}: {} samples, {} failed, feasible {:.1}%, median {}",
            r.study,
            r.summary.n,
            failed,
            100.0 * r.summary.feasibility_rate,
            r.summary.median.map_or("-".to_owned(), |m| m.to_string())
        );
        results.push(r);
    }
    let rows: Vec<SummaryRow> = aggregate(&results)?;
    let all_failed = results.iter().all(|r| r.records.iter().all(|s| s.error.is_some()));
    let outputs = vec![
        ("records.json".to_owned(), json(&results)),
        ("summary.csv".to_owned(), csv_bytes(&rows)?),
    ];
    Ok((outputs, status_of(!all_failed)))
}

fn outputs_of(invocation: &Invocation) -> Result<(Outputs, Status)> {
    match invocation {
        Invocation::Plan {
            inputs,
            algorithm,
            search,
        } => plan(inputs, *algorithm, search),
        Invocation::Compare {
            inputs,
            configs,
            runs,
            first_seed,
            budget,
            workers,
        } => compare(inputs, configs, *runs, *first_seed, *budget, *workers),
        Invocation::Study {
            network,
            scenarios,
            rules,
            cases,
            algorithm,
            search,
            samples,
            master_seed,
            workers,
        } => study(
            network,
            scenarios,
            rules.as_deref(),
            cases.as_deref(),
            *algorithm,
            search,
            *samples,
            *master_seed,
            *workers,
        ),
    }
}

fn write_outputs(out: &Path, outputs: &Outputs) -> Result<BTreeMap<String, String>> {
    let mut hashes = BTreeMap::new();
    for (name, bytes) in outputs {
        let path = out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        hashes.insert(name.clone(), sha256_hex(bytes));
    }
    Ok(hashes)
}

fn input_hashes(invocation: &Invocation) -> Result<BTreeMap<String, String>> {
    invocation
        .input_paths()
        .into_iter()
        .map(|p| Ok((p.display().to_string(), sha256_hex(read(p)?.as_bytes()))))
        .collect()
}

/// Run `invocation` and write its outputs plus a manifest into `out`.
pub fn execute(invocation: &Invocation, out: &Path) -> Result<Status> {
    let started = chrono::Utc::now();
    let inputs = input_hashes(invocation)?;
    let (outputs, status) = outputs_of(invocation)?;
    let hashes = write_outputs(out, &outputs)?;
    let manifest = Manifest {
        command: invocation.name().to_owned(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        invocation: invocation.clone(),
        master_seed: invocation.master_seed(),
        inputs,
        outputs: hashes,
        started_at: started.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
    };
    manifest.write(&out.join("manifest.json"))?;
    println!("wrote {} files to {}", outputs.len() + 1, out.display());
    Ok(status)
}

/// Re-run a manifest into `out`. Differences in inputs are an error;
/// differences in outputs are reported and yield [`Status::Infeasible`].
pub fn replay(manifest_path: &Path, out: &Path) -> Result<Status> {
    let recorded = Manifest::read(manifest_path)?;
    let inputs = input_hashes(&recorded.invocation)?;
    if inputs != recorded.inputs {
        bail!("input files changed since {} was written", manifest_path.display());
    }
    execute(&recorded.invocation, out)?;
    let rerun = Manifest::read(&out.join("manifest.json"))?;
    let differing: Vec<&String> = recorded
        .outputs
        .iter()
        .filter(|(name, hash)| rerun.outputs.get(*name) != Some(hash))
        .map(|(name, _)| name)
        .chain(rerun.outputs.keys().filter(|n| !recorded.outputs.contains_key(*n)))
        .collect();
    if differing.is_empty() {
        println!("replay identical: {} output files", recorded.outputs.len());
        Ok(Status::Feasible)
    } else {
        for name in &differing {
            println!("differs: {name}");
        }
        Ok(Status::Infeasible)
    }
}
