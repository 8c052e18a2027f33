use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;
use saddleflow::experiment::{self, ExperimentError};
use saddleflow::{load_scenario, ModeSelection, RunOptions, Scenario, ScenarioError};

const EXIT_VALIDATION: u8 = 2;
const EXIT_ABORT: u8 = 3;

#[derive(Parser)]
#[command(name = "saddleflow", version, about = "Distributed online optimisation over linear multi-agent plants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a scenario without running it.
    Validate { scenario: PathBuf },
    /// Simulate one or both communication modes and write artifacts.
    Run {
        #[command(flatten)]
        common: Common,
        /// Defaults to the scenario's own mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Run both modes on the same seed and tabulate broadcast savings.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Event-triggered runs over the scenario's sigma list.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    plot: Toggle,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            plot: self.plot == Toggle::On,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Continuous,
    Event,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

fn load(path: &Path) -> Result<Scenario, ExitCode> {
    load_scenario(path).map_err(|e| {
        report_scenario_error(&e);
        ExitCode::from(EXIT_VALIDATION)
    })
}

fn report_scenario_error(e: &ScenarioError) {
    eprintln!("error: {e}");
}

fn fail(e: ExperimentError) -> ExitCode {
    match e {
        ExperimentError::Scenario(e) => {
            report_scenario_error(&e);
            ExitCode::from(EXIT_VALIDATION)
        }
        e => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ABORT)
        }
    }
}

fn validate(path: &Path) -> ExitCode {
    let s = match load(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    println!("scenario  {}", path.display());
    println!("hash      {}", s.file.hash());
    println!("agents    {} (output dims {:?})", s.agent_count(), s.output_dims());
    println!("edges     {:?}", s.graph.edges());
    println!("q         {}", s.q);
    println!("K_f       {}", s.k_f);
    println!("K_g       {}", s.k_g);
    println!("K_mu      {}", s.params.k_mu);
    println!("steps     {} (h = {}, T = {})", s.steps(), s.step, s.horizon);
    for w in &s.warnings {
        println!("warning   {w}");
    }
    println!("ok");
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { scenario } => validate(&scenario),
        Command::Run { common, mode } => {
            let s = match load(&common.scenario) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let selection = match mode {
                Some(ModeArg::Continuous) => ModeSelection::Continuous,
                Some(ModeArg::Event) => ModeSelection::Event,
                Some(ModeArg::Both) => ModeSelection::Both,
                None => s.params.mode.into(),
            };
            match experiment::run_experiment(&s, selection, &common.out, common.options()) {
                Ok(outcome) => {
                    for r in &outcome.runs {
                        println!(
                            "{:<16} regret {:>12.6} fit {:>12.6} broadcasts {}",
                            r.trajectory.mode.as_str(),
                            r.metrics.final_regret(),
                            r.metrics.final_fit(),
                            r.trajectory.broadcasts()
                        );
                    }
                    println!("wrote {}", common.out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Compare { common } => {
            let s = match load(&common.scenario) {
                Ok(s) => s,
                Err(code) => return code,
            };
            match experiment::compare_modes(&s, &common.out, common.options()) {
                Ok(rows) => {
                    println!("{:<16} {:>12} {:>12} {:>11} {:>8}", "mode", "regret", "fit", "broadcasts", "savings");
                    for r in rows {
                        println!(
                            "{:<16} {:>12.6} {:>12.6} {:>11} {:>7.1}%",
                            r.mode.as_str(),
                            r.final_regret,
                            r.final_fit,
                            r.broadcasts,
                            100.0 * r.savings
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Sweep { common } => {
            let s = match load(&common.scenario) {
                Ok(s) => s,
                Err(code) => return code,
            };
            match experiment::sweep(&s, &common.out, common.options()) {
                Ok(rows) => {
                    println!("{:>8} {:>8} {:>11} {:>12} {:>12}", "sigma", "iota", "broadcasts", "regret", "fit");
                    for r in rows {
                        println!(
                            "{:>8} {:>8} {:>11} {:>12.6} {:>12.6}",
                            r.sigma, r.iota, r.broadcasts, r.final_regret, r.final_fit
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
