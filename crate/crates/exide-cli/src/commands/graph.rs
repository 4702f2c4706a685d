//! Builds a rule-flow graph from gold annotations or loads one from a
//! pipeline result, then renders it as DOT or JSON. With `--check` the
//! command exits non-zero when validation flags problems.

use std::path::PathBuf;

use clap::Args;

use exide_core::corpus::load_corpus;
use exide_core::graph::{
    build_graph, to_dot, validate_graph, GraphLabel, RuleFlowGraph,
};

use crate::common::write_text;
use crate::error::CliError;

#[derive(Args, Debug)]
pub struct GraphArgs {
    /// Build from the gold dependencies of a corpus document
    #[arg(long, value_name = "FILE", requires = "id", conflicts_with = "from_result")]
    pub corpus: Option<PathBuf>,
    /// Document id inside --corpus
    #[arg(long, value_name = "ID")]
    pub id: Option<String>,
    /// Load the graph stored in a pipeline result file instead
    #[arg(long, value_name = "FILE")]
    pub from_result: Option<PathBuf>,
    /// Output format: dot or json
    #[arg(long, value_name = "FORMAT", default_value = "dot", value_parser = ["dot", "json"])]
    pub format: String,
    /// Write the rendering here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Fail when validation finds cycles, duplicate triggers or
    /// unreachable rules
    #[arg(long)]
    pub check: bool,
}

pub fn exec(args: &GraphArgs) -> Result<(), CliError> {
    let graph = match (&args.corpus, &args.from_result) {
        (Some(corpus), None) => from_corpus(args, corpus)?,
        (None, Some(path)) => from_result(path)?,
        (None, None) => {
            return Err(CliError::Config(
                "a graph source is required: --corpus with --id, or --from-result"
                    .to_string(),
            ));
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --corpus with --from-result"),
    };

    let diagnostics = validate_graph(&graph);
    for diagnostic in &diagnostics {
        eprintln!("warning: {diagnostic}");
    }
    if args.check && !diagnostics.is_empty() {
        return Err(CliError::Run(format!(
            "graph validation found {} problem(s)",
            diagnostics.len()
        )));
    }

    let rendered = match args.format.as_str() {
        "json" => {
            let mut out =
                serde_json::to_string_pretty(&graph).expect("graphs serialize");
            out.push('\n');
            out
        }
        _ => to_dot(&graph),
    };
    write_text(args.out.as_deref(), &rendered)
}

fn from_corpus(args: &GraphArgs, corpus: &PathBuf) -> Result<RuleFlowGraph, CliError> {
    let id = args.id.as_ref().expect("clap enforces --id with --corpus");
    let documents = load_corpus(corpus)?;
    let document = documents.iter().find(|d| &d.id == id).ok_or_else(|| {
        CliError::Config(format!("document `{id}` is not in {}", corpus.display()))
    })?;
    let labels: Vec<GraphLabel> = document
        .dependencies
        .iter()
        .map(|dep| GraphLabel {
            from: dep.from,
            to: dep.to,
            call: dep.kind.into(),
            trigger: dep.trigger.clone(),
        })
        .collect();
    let build = build_graph(&document.rules, &labels)?;
    for warning in &build.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(build.graph)
}

fn from_result(path: &PathBuf) -> Result<RuleFlowGraph, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read `{}`: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Run(format!("`{}` is not valid JSON: {e}", path.display()))
    })?;
    let graph = value.get("graph").ok_or_else(|| {
        CliError::Run(format!("`{}` has no `graph` field", path.display()))
    })?;
    serde_json::from_value(graph.clone()).map_err(|e| {
        CliError::Run(format!("`{}` holds a malformed graph: {e}", path.display()))
    })
}
