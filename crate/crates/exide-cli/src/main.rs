//! `exide`: extract structured business rules from prose, classify how
//! the rules depend on each other, and score the results.

mod commands;
mod common;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "exide", version, propagate_version = true)]
#[command(about = "Business rule extraction and dependency analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand, Debug)]
enum Command {
    /// Extract rules from documents without classifying dependencies
    Extract(commands::extract::ExtractArgs),
    /// Extract rules, classify every rule pair and emit result JSON
    Pipeline(commands::pipeline::PipelineArgs),
    /// Run the pipeline while recording every exchange to a transcript
    Record(commands::record::RecordArgs),
    /// Score pipeline results against a gold corpus
    Eval(commands::eval::EvalArgs),
    /// Inter-annotator agreement from a CSV of labels or ratings
    Agreement(commands::agreement::AgreementArgs),
    /// Size and label statistics for one or more corpora
    Stats(commands::stats::StatsArgs),
    /// Build and render a rule-flow graph
    Graph(commands::graph::GraphArgs),
    /// Render a prompt without calling any backend
    GenPrompt(commands::gen_prompt::GenPromptArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Extract(args) => commands::extract::exec(args),
        Command::Pipeline(args) => commands::pipeline::exec(args),
        Command::Record(args) => commands::record::exec(args),
        Command::Eval(args) => commands::eval::exec(args),
        Command::Agreement(args) => commands::agreement::exec(args),
        Command::Stats(args) => commands::stats::exec(args),
        Command::Graph(args) => commands::graph::exec(args),
        Command::GenPrompt(args) => commands::gen_prompt::exec(args),
    }
}

/// Rust ignores SIGPIPE, which turns `exide stats | head` into a panic
/// on the first print after the pipe closes. Restore the default so the
/// process dies quietly like other line-oriented tools.
fn reset_sigpipe() {
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
