mod commands;
mod config;
mod inputs;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{combine, compile, decode, rescore, risk, score};

/// Lattice-free MMI graph compilation, scoring and MMI-augmented decoding.
#[derive(Parser, Debug)]
#[command(name = "lfmmi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build den.lfsa, lexicon.bin and bigram.json from a lexicon and transcripts.
    CompileGraphs(compile::CompileArgs),
    /// LF-MMI objective and gradient for one utterance or a manifest.
    Score(score::ScoreArgs),
    /// Label-synchronous beam search with the MMI prefix score.
    DecodeAed(decode::AedArgs),
    /// Frame-synchronous beam search with the MMI alignment score.
    DecodeNt(decode::NtArgs),
    /// Re-rank an N-best list with LF-MMI numerator scores.
    Rescore(rescore::RescoreArgs),
    /// Approximate Bayesian risk of N-best lists against references.
    MbrRisk(risk::RiskArgs),
    /// Interpolate training criteria into one objective.
    CombineObjectives(combine::CombineArgs),
}

const EXIT_INPUT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    use lfmmi::Error;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::NumeratorInfeasible { .. }
                | Error::DenominatorInfeasible { .. }
                | Error::NoPath { .. } => EXIT_INFEASIBLE,
                _ => EXIT_INPUT,
            };
        }
    }
    EXIT_INPUT
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::CompileGraphs(a) => compile::run(a),
        Command::Score(a) => score::run(a),
        Command::DecodeAed(a) => decode::run_aed(a),
        Command::DecodeNt(a) => decode::run_nt(a),
        Command::Rescore(a) => rescore::run(a),
        Command::MbrRisk(a) => risk::run(a),
        Command::CombineObjectives(a) => combine::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
