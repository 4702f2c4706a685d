//! Argument groups and helpers shared by several subcommands.

use std::path::{Path, PathBuf};

use clap::Args;

use exide_core::corpus::{load_corpus, Document};
use exide_core::llm::{Backend, HttpBackend};
use exide_core::pipeline::PipelineConfig;
use exide_core::prompt::{PromptLang, PromptVariant, TemplateSet};

use crate::error::CliError;

/// Which corpus to read and which of its documents to process.
#[derive(Args, Debug)]
pub struct CorpusArgs {
    /// Corpus file (a JSON array of documents)
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Process only this document id; repeat for several (default: all)
    #[arg(long = "id", value_name = "ID")]
    pub ids: Vec<String>,
}

impl CorpusArgs {
    pub fn load(&self) -> Result<Vec<Document>, CliError> {
        let documents = load_corpus(&self.corpus)?;
        if self.ids.is_empty() {
            return Ok(documents);
        }
        let mut selected = Vec::with_capacity(self.ids.len());
        for id in &self.ids {
            let doc = documents
                .iter()
                .find(|d| &d.id == id)
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "document `{id}` is not in {}",
                        self.corpus.display()
                    ))
                })?;
            selected.push(doc.clone());
        }
        Ok(selected)
    }
}

/// Where completions come from: a recorded transcript replayed offline,
/// or a live chat-completions endpoint.
#[derive(Args, Debug)]
pub struct BackendArgs {
    /// Replay this recorded transcript (JSONL of exchanges)
    #[arg(long, value_name = "FILE", conflicts_with = "endpoint")]
    pub transcript: Option<PathBuf>,
    /// Send requests to this chat-completions URL
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    /// File holding the bearer token for the endpoint; the key itself
    /// never appears in arguments, logs or transcripts
    #[arg(long, value_name = "FILE", requires = "endpoint")]
    pub api_key_file: Option<PathBuf>,
    /// Concurrent requests the endpoint is allowed to see
    #[arg(long, value_name = "N", requires = "endpoint")]
    pub max_in_flight: Option<usize>,
}

impl BackendArgs {
    pub fn build(&self) -> Result<Backend, CliError> {
        match (&self.transcript, &self.endpoint) {
            (Some(path), None) => Ok(Backend::replay_from_path(path)?),
            (None, Some(endpoint)) => {
                let mut http = HttpBackend::new(endpoint).with_api_key(self.api_key()?);
                if let Some(limit) = self.max_in_flight {
                    http = http.with_max_in_flight(limit);
                }
                Ok(Backend::Http(http))
            }
            (None, None) => Err(CliError::Config(
                "a backend is required: --transcript <file> or --endpoint <url>".to_string(),
            )),
            (Some(_), Some(_)) => unreachable!("clap rejects --transcript with --endpoint"),
        }
    }

    fn api_key(&self) -> Result<Option<String>, CliError> {
        if let Some(path) = &self.api_key_file {
            let key = std::fs::read_to_string(path).map_err(|e| {
                CliError::Io(format!("cannot read api key file `{}`: {e}", path.display()))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::Config(format!(
                    "api key file `{}` is empty",
                    path.display()
                )));
            }
            return Ok(Some(key.to_string()));
        }
        Ok(std::env::var("EXIDE_API_KEY").ok().filter(|k| !k.trim().is_empty()))
    }
}

/// Knobs shared by every command that renders prompts or runs the
/// pipeline.
#[derive(Args, Debug)]
pub struct RunArgs {
    /// Extraction prompt variant: implicit-mapping, explicit-mapping,
    /// clarified-input, logical-judgement, pseudo-code (or p1..p5)
    #[arg(long, default_value = "implicit-mapping", value_parser = parse_variant)]
    pub variant: PromptVariant,
    /// Model name sent with every request
    #[arg(long, default_value = "gpt-4o")]
    pub model: String,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 2048)]
    pub max_tokens: u32,
    /// Worker threads for the pair-classification stage
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// Fail instead of warning when extraction yields no valid rules
    #[arg(long)]
    pub strict: bool,
    /// Keep classifying remaining pairs when one pair fails
    #[arg(long)]
    pub keep_going: bool,
    /// Omit the document text from dependency prompts
    #[arg(long)]
    pub rules_only: bool,
    /// Template language: en or zh
    #[arg(long, default_value = "en", value_parser = parse_lang)]
    pub lang: PromptLang,
    /// Load prompt templates from this directory instead of the builtins
    #[arg(long, value_name = "DIR")]
    pub templates: Option<PathBuf>,
    /// Append every exchange to this transcript file
    #[arg(long, value_name = "FILE")]
    pub record_to: Option<PathBuf>,
}

pub(crate) fn parse_variant(s: &str) -> Result<PromptVariant, String> {
    s.parse()
}

pub(crate) fn parse_lang(s: &str) -> Result<PromptLang, String> {
    s.parse()
}

/// Template selection for commands that render prompts without running
/// the pipeline.
#[derive(Args, Debug)]
pub struct TemplateArgs {
    /// Template language: en or zh
    #[arg(long, default_value = "en", value_parser = parse_lang)]
    pub lang: PromptLang,
    /// Load prompt templates from this directory instead of the builtins
    #[arg(long, value_name = "DIR")]
    pub templates: Option<PathBuf>,
}

impl TemplateArgs {
    pub fn load(&self) -> Result<TemplateSet, CliError> {
        match &self.templates {
            Some(dir) => Ok(TemplateSet::from_dir(dir)?),
            None => Ok(TemplateSet::builtin(self.lang)),
        }
    }
}

impl RunArgs {
    pub fn config(&self) -> PipelineConfig {
        PipelineConfig {
            variant: self.variant,
            model: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            concurrency: self.concurrency,
            strict: self.strict,
            keep_going: self.keep_going,
            rules_only: self.rules_only,
            lang: self.lang,
            record_to: self.record_to.clone(),
        }
    }

    pub fn templates(&self) -> Result<TemplateSet, CliError> {
        match &self.templates {
            Some(dir) => Ok(TemplateSet::from_dir(dir)?),
            None => Ok(TemplateSet::builtin(self.lang)),
        }
    }
}

/// Prints to stdout, or writes to `out` when given.
pub fn write_text(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("cannot write `{}`: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
