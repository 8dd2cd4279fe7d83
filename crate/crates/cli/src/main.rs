mod args;
mod commands;
mod config;
mod error;
mod manifest;
mod pipeline;
mod reports;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, Result};

/// Worker cap from `SSPMI_THREADS`, when set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("SSPMI_THREADS")
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Vocab(a) => commands::vocab(&a),
        Command::Cooc(a) => commands::cooc(&a),
        Command::Matrix(a) => commands::matrix(&a),
        Command::Svd(a) => commands::svd(&a),
        Command::TrainSgns(a) => commands::train(&a, false),
        Command::TrainNsgns(a) => commands::train(&a, true),
        Command::Eval(a) => commands::eval(&a),
        Command::GraphSample(a) => commands::graph_sample(&a),
        Command::GraphStats(a) => commands::graph_stats(&a),
        Command::GraphSpectrum(a) => commands::graph_spectrum(&a),
        Command::Rhg(a) => commands::rhg(&a),
        Command::DistancePdf(a) => commands::pdf(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::SynthCorpus(a) => commands::synth(&a),
        Command::Pipeline(a) => {
            let mut overrides = Vec::new();
            if let Some(c) = &a.corpus {
                overrides.push(("corpus_path".to_string(), c.display().to_string()));
            }
            if let Some(o) = &a.output_dir {
                overrides.push(("output_dir".to_string(), o.display().to_string()));
            }
            for kv in &a.overrides {
                let (k, v) = kv.split_once('=').ok_or_else(|| {
                    CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}"))
                })?;
                overrides.push((k.trim().to_string(), v.trim().to_string()));
            }
            let cfg = pipeline::load(a.config.as_deref(), &overrides)?;
            pipeline::run(&cfg).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = thread_cap() {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
