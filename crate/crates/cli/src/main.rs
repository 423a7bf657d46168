mod args;
mod context;
mod data;
mod evaluate;
mod fit;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use context::Context;

fn run(cli: Cli) -> ardmmsb::Result<()> {
    let mut ctx = Context::load(&cli.global)?;
    match &cli.command {
        Command::Simulate => data::simulate(&ctx),
        Command::Aggregate { edges, subpops } => data::aggregate(&ctx, edges, subpops),
        Command::Init { ard } => fit::init(&ctx, ard),
        Command::Fit { ard, resume } => fit::fit(&mut ctx, ard, resume.as_deref()),
        Command::Eval {
            checkpoints,
            truth,
            sampled,
            edges,
            previous,
            truth_as_estimate,
        } => evaluate::eval(
            &ctx,
            evaluate::EvalInputs {
                checkpoints,
                truth: truth.as_deref(),
                sampled: sampled.as_deref(),
                edges: edges.as_deref(),
                previous: previous.as_deref(),
                truth_as_estimate: *truth_as_estimate,
            },
        ),
        Command::ExportMemberships { checkpoint, sampled } => {
            evaluate::export_memberships(&ctx, checkpoint, sampled.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
