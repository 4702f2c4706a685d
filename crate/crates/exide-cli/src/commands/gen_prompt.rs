//! Renders prompts exactly as the pipeline would send them, without
//! calling any backend. Useful for inspecting templates and for pasting
//! into a chat window by hand.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Subcommand};

use exide_core::corpus::Document;
use exide_core::prompt::{
    render_dependency_prompt, render_extraction_prompt, render_generation_prompt,
    PromptBundle, PromptVariant,
};

use crate::common::{parse_variant, write_text, CorpusArgs, TemplateArgs};
use crate::error::CliError;

#[derive(Args, Debug)]
pub struct GenPromptArgs {
    #[command(subcommand)]
    pub task: Task,
}

#[derive(Subcommand, Debug)]
pub enum Task {
    /// The rule-extraction prompt for one document
    Extraction {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Extraction prompt variant: implicit-mapping, explicit-mapping,
        /// clarified-input, logical-judgement, pseudo-code (or p1..p5)
        #[arg(long, default_value = "implicit-mapping", value_parser = parse_variant)]
        variant: PromptVariant,
        #[command(flatten)]
        templates: TemplateArgs,
        /// Write the prompt here instead of stdout
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// The pair-classification prompt for two gold rules of a document
    Dependency {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Index of the first rule
        #[arg(long, value_name = "N")]
        rule_a: usize,
        /// Index of the second rule
        #[arg(long, value_name = "N")]
        rule_b: usize,
        /// Omit the document text from the prompt
        #[arg(long)]
        rules_only: bool,
        #[command(flatten)]
        templates: TemplateArgs,
        /// Write the prompt here instead of stdout
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// The prompt that asks a model to author a new business text
    Generation {
        /// Business domain the text should cover
        #[arg(long, value_name = "DOMAIN")]
        domain: String,
        /// key=value constraint on the generated text; repeatable
        #[arg(long = "constraint", value_name = "KEY=VALUE")]
        constraints: Vec<String>,
        #[command(flatten)]
        templates: TemplateArgs,
        /// Write the prompt here instead of stdout
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

pub fn exec(args: &GenPromptArgs) -> Result<(), CliError> {
    match &args.task {
        Task::Extraction { corpus, variant, templates, out } => {
            let document = one_document(corpus)?;
            let templates = templates.load()?;
            let bundle = render_extraction_prompt(&templates, *variant, &document)?;
            write_text(out.as_deref(), &render(&bundle))
        }
        Task::Dependency { corpus, rule_a, rule_b, rules_only, templates, out } => {
            let document = one_document(corpus)?;
            let rules = &document.rules;
            for index in [*rule_a, *rule_b] {
                if index >= rules.len() {
                    return Err(CliError::Config(format!(
                        "document `{}` has {} rules; index {index} is out of range",
                        document.id,
                        rules.len()
                    )));
                }
            }
            let templates = templates.load()?;
            let context = if *rules_only { None } else { Some(&document) };
            let bundle = render_dependency_prompt(
                &templates,
                &rules[*rule_a],
                &rules[*rule_b],
                context,
            )?;
            write_text(out.as_deref(), &render(&bundle))
        }
        Task::Generation { domain, constraints, templates, out } => {
            let mut map = BTreeMap::new();
            for pair in constraints {
                let (key, value) = pair.split_once('=').ok_or_else(|| {
                    CliError::Config(format!(
                        "constraint `{pair}` must look like key=value"
                    ))
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
            let templates = templates.load()?;
            let constraints = if map.is_empty() { None } else { Some(&map) };
            let bundle = render_generation_prompt(&templates, domain, constraints)?;
            write_text(out.as_deref(), &render(&bundle))
        }
    }
}

fn one_document(corpus: &CorpusArgs) -> Result<Document, CliError> {
    let mut documents = corpus.load()?;
    if documents.len() != 1 {
        return Err(CliError::Config(format!(
            "prompt rendering needs exactly one document; pick it with --id \
             ({} selected)",
            documents.len()
        )));
    }
    Ok(documents.remove(0))
}

fn render(bundle: &PromptBundle) -> String {
    let mut text = match &bundle.system {
        Some(system) => format!("[system]\n{system}\n\n[user]\n{}", bundle.user),
        None => bundle.user.clone(),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    text
}
