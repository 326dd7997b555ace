use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridplan_core::{Algorithm, SearchConfig};

mod fixture;
mod manifest;
mod run;

use run::{Inputs, Invocation, Status};

#[derive(Parser)]
#[command(name = "gridplan", version, about = "Automated distribution network planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network and report topology and worst-case constraint violations.
    Validate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        cases: Option<PathBuf>,
    },
    /// Search for the cheapest set of measures that makes a network feasible.
    Plan {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long, default_value = "ils_ae")]
        algorithm: Algorithm,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run named algorithm configurations over a range of seeds.
    Compare {
        #[command(flatten)]
        inputs: InputArgs,
        /// Named configurations such as ILS_4_HC, ILS_4_HC_AE, LAHC_50, HC, EXHAUSTIVE.
        #[arg(
            long = "config",
            value_delimiter = ',',
            default_value = "ILS_4_HC,ILS_4_HC_AE,LAHC_50"
        )]
        configs: Vec<String>,
        /// Number of runs per configuration.
        #[arg(long, default_value_t = 50)]
        runs: usize,
        /// First seed; runs use consecutive seeds.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
        /// Worker threads, 0 for one per core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan many sampled PV installations per scenario and summarise the costs.
    Study {
        #[arg(long)]
        network: PathBuf,
        /// Scenario file; repeat for several scenarios.
        #[arg(long = "scenario", required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        cases: Option<PathBuf>,
        #[arg(long, default_value = "ils_ae")]
        algorithm: Algorithm,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a recorded invocation and compare its outputs byte for byte.
    Replay {
        /// A manifest.json written by plan, compare or study.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one of the built-in example problems as input files.
    Fixture {
        #[arg(value_enum)]
        name: fixture::Name,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    network: PathBuf,
    /// Planning rules for measure discovery; defaults apply if omitted.
    #[arg(long, conflicts_with = "catalog")]
    rules: Option<PathBuf>,
    /// A fixed measure catalog instead of discovery.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Load cases; high feed-in and high load if omitted.
    #[arg(long)]
    cases: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    budget: usize,
    #[arg(long, value_enum)]
    neighborhood: Option<Neighborhood>,
    #[arg(long)]
    strength: Option<usize>,
    #[arg(long)]
    history: Option<usize>,
    #[arg(long)]
    stop_after: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Neighborhood {
    Add,
    AddRemove,
    AddRemoveExchange,
}

impl SearchArgs {
    fn resolve(&self, algorithm: Algorithm) -> SearchConfig {
        let mut c = algorithm.default_config().with_seed(self.seed).with_budget(self.budget);
        if let Some(n) = self.neighborhood {
            c.mode = match n {
                Neighborhood::Add => gridplan_core::NeighborhoodMode::ADD,
                Neighborhood::AddRemove => gridplan_core::NeighborhoodMode::ADD_REMOVE,
                Neighborhood::AddRemoveExchange => gridplan_core::NeighborhoodMode::ADD_REMOVE_EXCHANGE,
            };
        }
        if let Some(k) = self.strength {
            c.perturbation_strength = k;
        }
        if let Some(l) = self.history {
            c.lahc_history_length = l;
        }
        if let Some(s) = self.stop_after {
            c.stop_after_no_improvement = s;
        }
        c
    }
}

impl From<InputArgs> for Inputs {
    fn from(a: InputArgs) -> Self {
        Inputs {
            network: a.network,
            rules: a.rules,
            catalog: a.catalog,
            cases: a.cases,
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<Status> {
    match command {
        Command::Validate { network, cases } => run::validate(&network, cases.as_deref()),
        Command::Plan {
            inputs,
            algorithm,
            search,
            out,
        } => {
            let search = search.resolve(algorithm);
            run::execute(
                &Invocation::Plan {
                    inputs: inputs.into(),
                    algorithm,
                    search,
                },
                &out,
            )
        }
        Command::Compare {
            inputs,
            configs,
            runs,
            seed,
            budget,
            workers,
            out,
        } => run::execute(
            &Invocation::Compare {
                inputs: inputs.into(),
                configs,
                runs,
                first_seed: seed,
                budget,
                workers,
            },
            &out,
        ),
        Command::Study {
            network,
            scenarios,
            rules,
            cases,
            algorithm,
            search,
            samples,
            workers,
            out,
        } => {
            let search = search.resolve(algorithm);
            run::execute(
                &Invocation::Study {
                    network,
                    scenarios,
                    rules,
                    cases,
                    algorithm,
                    master_seed: search.rng_seed,
                    search,
                    samples,
                    workers,
                },
                &out,
            )
        }
        Command::Replay { manifest, out } => run::replay(&manifest, &out),
        Command::Fixture { name, out } => {
            fixture::write(name, &out)?;
            Ok(Status::Feasible)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Status::Feasible) => ExitCode::SUCCESS,
        Ok(Status::Infeasible) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
