mod run;
mod scenario;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use scenario::{Experiment, Family, Scenario};

/// Invalid scenario or arguments; exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Parser)]
#[command(name = "geneflow", version, about = "Barriers, controllability and minimal-time experiments for bistable reaction-diffusion with drift")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override the number of grid nodes.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArg {
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files with the experiment they declare.
    Run {
        #[arg(long, required = true)]
        scenario: Vec<PathBuf>,
    },
    /// Barriers with boundary value 0 and/or 1.
    Barriers(ScenarioArg),
    /// Parabolic simulations under the runs of the scenario.
    Simulate(ScenarioArg),
    /// Controllability verdicts towards 0, theta and 1.
    Report(ScenarioArg),
    /// First Dirichlet eigenvalues and uniqueness certificates.
    Eigen(ScenarioArg),
    /// Energy of the plateau profile, sign threshold and minimizer.
    Energy(ScenarioArg),
    /// Minimal control time scan.
    Mintime(ScenarioArg),
    /// Compare the quasilinear equation with its transformed form.
    TransformCheck(ScenarioArg),
    /// Run a built-in scenario.
    Preset {
        /// One of fig4, fig5, fig6, fig7, mincontr.
        name: String,
    },
    /// Control experiments.
    #[command(subcommand)]
    Control(ControlCommand),
}

#[derive(Subcommand)]
enum ControlCommand {
    /// Controllability verdicts for a scenario.
    Report(ScenarioArg),
    /// Minimal-time scan over a drift family.
    Mintime {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Comma-separated intensities.
        #[arg(long, value_delimiter = ',', required = true)]
        sigmas: Vec<f64>,
        /// Optional scenario providing reaction, domain and horizons.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FamilyArg {
    GaussIn,
    GaussOut,
    Sinusoidal,
}

fn load(path: &Path, experiment: Option<Experiment>) -> anyhow::Result<Scenario> {
    let mut s = Scenario::load(path)?;
    if let Some(e) = experiment {
        let keep = e == Experiment::Barriers && s.experiment == Some(Experiment::PhasePortrait);
        if !keep {
            s.experiment = Some(e);
        }
    }
    Ok(s)
}

fn overrides(cli: &Cli, s: &mut Scenario) {
    if let Some(n) = cli.grid {
        s.grid = n;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let single = |e: Experiment, a: &ScenarioArg| load(&a.scenario, Some(e));
    let scenarios: Vec<(Scenario, PathBuf)> = match &cli.command {
        Command::Run { scenario } => {
            let many = scenario.len() > 1;
            scenario
                .iter()
                .map(|p| {
                    let dir = if many { cli.out.join(p.file_stem().unwrap_or_default()) } else { cli.out.clone() };
                    load(p, None).map(|s| (s, dir))
                })
                .collect::<anyhow::Result<_>>()?
        }
        Command::Barriers(a) => vec![(single(Experiment::Barriers, a)?, cli.out.clone())],
        Command::Simulate(a) => vec![(single(Experiment::Simulate, a)?, cli.out.clone())],
        Command::Report(a) | Command::Control(ControlCommand::Report(a)) => vec![(single(Experiment::Report, a)?, cli.out.clone())],
        Command::Eigen(a) => vec![(single(Experiment::Eigen, a)?, cli.out.clone())],
        Command::Energy(a) => vec![(single(Experiment::Energy, a)?, cli.out.clone())],
        Command::Mintime(a) => vec![(single(Experiment::MintimeScan, a)?, cli.out.clone())],
        Command::TransformCheck(a) => vec![(single(Experiment::TransformCheck, a)?, cli.out.clone())],
        Command::Preset { name } => vec![(scenario::preset(name)?, cli.out.clone())],
        Command::Control(ControlCommand::Mintime { family, sigmas, scenario: path }) => {
            let mut s = match path {
                Some(p) => load(p, Some(Experiment::MintimeScan))?,
                None => {
                    let mut s = scenario::preset("mincontr")?;
                    s.preset = None;
                    s
                }
            };
            s.families = vec![match family {
                FamilyArg::GaussIn => Family::GaussIn,
                FamilyArg::GaussOut => Family::GaussOut,
                FamilyArg::Sinusoidal => Family::Sinusoidal,
            }];
            s.sigmas = sigmas.clone();
            vec![(s, cli.out.clone())]
        }
    };
    let results: Vec<anyhow::Result<serde_json::Value>> = scenarios
        .into_par_iter()
        .map(|(mut s, dir)| {
            overrides(cli, &mut s);
            run::run(&s, &dir)
        })
        .collect();
    for r in results {
        let summary = r?;
        println!("{}", serde_json::to_string_pretty(&summary).context("printing summary")?);
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() || e.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    match e.downcast_ref::<geneflow::Error>() {
        Some(
            geneflow::Error::InvalidScalar(_)
            | geneflow::Error::InvalidInput(_)
            | geneflow::Error::InvalidN(_)
            | geneflow::Error::InvalidWeight { .. }
            | geneflow::Error::BadDelta(_)
            | geneflow::Error::AssumptionInapplicable(_)
            | geneflow::Error::BcViolation { .. }
            | geneflow::Error::Io(_),
        ) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
