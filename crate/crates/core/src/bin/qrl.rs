use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qrl_core::harness::acceptance::parse_suite;
use qrl_core::harness::{
    run_experiment, verify_acceptance, write_outputs, ExperimentConfig, ScenarioFile,
};
use qrl_core::tester::lemma_check;
use qrl_core::Result;

#[derive(Parser)]
#[command(
    name = "qrl",
    version,
    about = "Quantum-enhanced reinforcement learning experiments"
)]
struct Cli {
    /// Worker threads for parallel trials (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write results.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run an experiment once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Run the acceptance criteria and print a JSON report.
    Verify {
        /// `all` or comma-separated criterion ids.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Check one lemma on a scenario file.
    LemmaCheck {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        lemma: u8,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run_one(cfg: &ExperimentConfig) -> Result<bool> {
    let res = run_experiment(cfg)?;
    write_outputs(&res, &cfg.output_dir())?;
    println!("{}", serde_json::to_string_pretty(&res.summary)?);
    Ok(res.summary.pass)
}

fn dispatch(cli: Cli) -> Result<bool> {
    let load = |path: &PathBuf| -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(path)?;
        if cli.threads.is_some() {
            cfg.threads = cli.threads;
        }
        Ok(cfg)
    };
    match &cli.command {
        Command::Run { config } => run_one(&load(config)?),
        Command::Sweep {
            config,
            param,
            values,
        } => {
            let base = load(config)?;
            let mut pass = true;
            for v in values {
                let mut cfg = base.clone();
                cfg.set_param(param, v)?;
                cfg.output = Some(base.output_dir().join(format!("{param}={v}")));
                pass &= run_one(&cfg)?;
            }
            Ok(pass)
        }
        Command::Verify { suite } => {
            if let Some(n) = cli.threads {
                // Ignore the error if a global pool already exists.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            let report = verify_acceptance(&parse_suite(suite)?)?;
            for c in &report.criteria {
                eprintln!(
                    "criterion {} {}: {} ({})",
                    c.id,
                    c.name,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.detail
                );
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.pass)
        }
        Command::LemmaCheck {
            lemma,
            scenario,
            seed,
        } => {
            let sc = ScenarioFile::load(scenario)?.build()?;
            let report = lemma_check(*lemma, &sc, *seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
