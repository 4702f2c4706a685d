//! Runs the pipeline while appending every request/response pair to a
//! transcript, so the same run can later be replayed offline.

use std::path::PathBuf;

use clap::Args;

use crate::common::{BackendArgs, CorpusArgs, RunArgs};
use crate::error::CliError;

#[derive(Args, Debug)]
pub struct RecordArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Directory receiving one `<document id>.json` per document
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn exec(args: &RecordArgs) -> Result<(), CliError> {
    if args.run.record_to.is_none() {
        return Err(CliError::Config(
            "record needs --record-to <file> for the transcript".to_string(),
        ));
    }
    let documents = args.corpus.load()?;
    let backend = args.backend.build()?;
    let templates = args.run.templates()?;
    let config = args.run.config();
    super::pipeline::run_documents(
        &documents,
        &config,
        &templates,
        &backend,
        args.out.as_deref(),
        true,
    )
}
