//! The full two-stage run: extract rules, classify every rule pair,
//! build the flow graph, and emit one result JSON per document.

use std::path::{Path, PathBuf};

use clap::Args;

use exide_core::corpus::Document;
use exide_core::llm::Backend;
use exide_core::pipeline::{run_pipeline, PipelineConfig};
use exide_core::prompt::TemplateSet;

use crate::common::{BackendArgs, CorpusArgs, RunArgs};
use crate::error::CliError;

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Directory receiving one `<document id>.json` per document
    /// (default: print each result to stdout)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn exec(args: &PipelineArgs) -> Result<(), CliError> {
    let documents = args.corpus.load()?;
    let backend = args.backend.build()?;
    let templates = args.run.templates()?;
    let config = args.run.config();
    run_documents(&documents, &config, &templates, &backend, args.out.as_deref(), false)
}

/// Runs every document through the pipeline and delivers the results.
/// With `summarize` the JSON goes only to files and stdout gets a one
/// line digest per document, which is what `record` wants.
pub fn run_documents(
    documents: &[Document],
    config: &PipelineConfig,
    templates: &TemplateSet,
    backend: &Backend,
    out: Option<&Path>,
    summarize: bool,
) -> Result<(), CliError> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| {
            CliError::Io(format!("cannot create `{}`: {e}", dir.display()))
        })?;
    }

    for document in documents {
        let result = run_pipeline(document, config, templates, backend)?;
        let digest = format!(
            "{}: {} rules, {} predictions, {} failures",
            document.id,
            result.extraction.rules.len(),
            result.predictions.len(),
            result.failures.len()
        );
        match out {
            Some(dir) => {
                let file = dir.join(format!("{}.json", safe_stem(&document.id)));
                std::fs::write(&file, result.to_json()).map_err(|e| {
                    CliError::Io(format!("cannot write `{}`: {e}", file.display()))
                })?;
                if summarize {
                    println!("{digest} -> {}", file.display());
                }
            }
            None => {
                if summarize {
                    println!("{digest}");
                } else {
                    print!("{}", result.to_json());
                }
            }
        }
    }
    Ok(())
}

/// Document ids come from user-supplied corpora, so anything that would
/// escape the output directory is flattened before use as a file stem.
fn safe_stem(id: &str) -> String {
    id.replace(['/', '\\'], "-")
}
