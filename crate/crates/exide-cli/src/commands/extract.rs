//! Stage one on its own: extract rules from each selected document and
//! emit them as notation strings, without classifying dependencies.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use exide_core::llm;
use exide_core::pipeline::{extract_rules, extraction_request};
use exide_core::rule::format_rule;

use crate::common::{write_text, BackendArgs, CorpusArgs, RunArgs};
use crate::error::CliError;

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Write the JSON listing here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ExtractionRow {
    document_id: String,
    variant: &'static str,
    model: String,
    rules: Vec<String>,
    warnings: Vec<String>,
}

pub fn exec(args: &ExtractArgs) -> Result<(), CliError> {
    let documents = args.corpus.load()?;
    let backend = args.backend.build()?;
    let templates = args.run.templates()?;
    let config = args.run.config();

    let mut rows = Vec::with_capacity(documents.len());
    for document in &documents {
        let request = extraction_request(&templates, &config, document)?;
        let exchange = match &config.record_to {
            Some(path) => llm::record(&request, &backend, path)?,
            None => backend.complete(&request)?,
        };
        let (rules, warnings) = extract_rules(&exchange.response_text, config.variant);
        if config.strict && rules.is_empty() {
            return Err(CliError::Run(format!(
                "document `{}`: model output contained no valid rules",
                document.id
            )));
        }
        rows.push(ExtractionRow {
            document_id: document.id.clone(),
            variant: config.variant.name(),
            model: config.model.clone(),
            rules: rules.iter().map(format_rule).collect(),
            warnings: warnings.iter().map(|w| w.to_string()).collect(),
        });
    }

    let mut json = serde_json::to_string_pretty(&rows)
        .expect("extraction rows always serialize");
    json.push('\n');
    write_text(args.out.as_deref(), &json)
}
