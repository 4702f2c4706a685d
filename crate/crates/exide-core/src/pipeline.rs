//! The two-stage pipeline: extract rules from a document, then classify
//! the dependency of every rule pair and assemble the rule-flow graph.
//!
//! The pipeline is deterministic given a backend: pairs are enumerated in
//! lexicographic order and results are stored by pair index, so output is
//! byte-identical no matter how many worker threads carry the requests.
//! Stage two sees only extracted rules (and optionally the document
//! text), never gold annotations.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::corpus::Document;
use crate::graph::{build_graph, DependencyCall, GraphDiagnostic, GraphLabel, RuleFlowGraph};
use crate::llm::{self, Backend, CompletionRequest, Exchange, LlmError};
use crate::prompt::{
    render_dependency_prompt, render_extraction_prompt, PromptError, PromptLang, PromptVariant,
    TemplateSet,
};
use crate::rule::{format_rule, parse_rule_block, validate_rule, BusinessRule};

/// Everything that shapes one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub variant: PromptVariant,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Worker threads for stage two. Never affects output, only wall time.
    pub concurrency: usize,
    /// Fail instead of warning when extraction yields no valid rules.
    pub strict: bool,
    /// Keep classifying remaining pairs when one pair fails.
    pub keep_going: bool,
    /// Omit the document text from dependency prompts.
    pub rules_only: bool,
    pub lang: PromptLang,
    /// When set, every exchange is appended to this transcript file.
    pub record_to: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            variant: PromptVariant::ImplicitMapping,
            model: "gpt-4o".to_string(),
            temperature: 0.0,
            max_tokens: 2048,
            concurrency: 4,
            strict: false,
            keep_going: false,
            rules_only: false,
            lang: PromptLang::En,
            record_to: None,
        }
    }
}

/// A non-fatal problem found while parsing model output into rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// The response contained no parseable, valid rule at all.
    EmptyOutput,
    /// A fragment looked like notation but did not parse.
    Fragment { detail: String },
    /// A rule parsed but failed validation and was dropped.
    InvalidRule { rule: String, issues: Vec<String> },
}

impl std::fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseWarning::EmptyOutput => {
                write!(f, "model output contained no valid rules")
            }
            ParseWarning::Fragment { detail } => {
                write!(f, "unparseable rule fragment: {detail}")
            }
            ParseWarning::InvalidRule { rule, issues } => {
                write!(f, "dropped invalid rule {rule}: {}", issues.join("; "))
            }
        }
    }
}

/// Stage-one output for one document.
#[derive(Debug, Clone)]
pub struct ExtractionResult {
    pub document_id: String,
    pub variant: PromptVariant,
    pub rules: Vec<BusinessRule>,
    pub warnings: Vec<ParseWarning>,
    pub exchange: Exchange,
}

/// Stage-two verdict for one rule pair, `a < b` in extraction order.
#[derive(Debug, Clone)]
pub struct DependencyPrediction {
    pub a: usize,
    pub b: usize,
    pub predicted: DependencyCall,
    pub exchange: Exchange,
}

/// A pair whose classification failed; only present under `keep_going`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairFailure {
    pub a: usize,
    pub b: usize,
    pub error: String,
}

/// A full pipeline run. Predictions plus failures always cover exactly
/// the `n*(n-1)/2` pairs of the extracted rules.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub model: String,
    pub extraction: ExtractionResult,
    pub predictions: Vec<DependencyPrediction>,
    pub failures: Vec<PairFailure>,
    pub graph: RuleFlowGraph,
    pub graph_warnings: Vec<GraphDiagnostic>,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("extraction call for document `{document_id}` failed: {source}")]
    Extraction {
        document_id: String,
        #[source]
        source: LlmError,
    },
    #[error("document `{document_id}`: model output contained no valid rules")]
    EmptyExtraction { document_id: String },
    #[error("dependency call for pair ({a}, {b}) failed: {detail}")]
    Pair { a: usize, b: usize, detail: String },
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// How a classification response failed to yield a label.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelError {
    #[error("decision line names multiple relationships: {}", .found.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", "))]
    Ambiguous { found: Vec<DependencyCall> },
    #[error("no relationship label found in the response")]
    Unparseable,
}

const LINKER_PHRASE: &str = "This sentence corresponds to the business rule:";

fn strip_fenced_blocks(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_fence = false;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            continue;
        }
        if !in_fence {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn output_header_remainder(line: &str) -> Option<&str> {
    let stripped = line.trim_start_matches([' ', '\t', '#', '*', '-']);
    if stripped.len() < 6 || !stripped.as_bytes()[..6].eq_ignore_ascii_case(b"output") {
        return None;
    }
    let after = &stripped[6..];
    match after.chars().next() {
        Some(next) if next.is_alphanumeric() => return None,
        _ => {}
    }
    match after.find([':', '：']) {
        Some(pos) => {
            let colon_len = after[pos..].chars().next().unwrap().len_utf8();
            Some(&after[pos + colon_len..])
        }
        None => Some(""),
    }
}

/// Parses the rules out of a stage-one response.
///
/// The parser keeps only the last `Output`-headed section of the response
/// (falling back to the whole text when there is none), so reasoning that
/// quotes notation does not double-count. Under the pseudo-code variant,
/// fenced code blocks are dropped first; under the explicit-mapping
/// variant, notation following the sentence-to-rule linker phrase is
/// lifted onto its own line so it parses wherever it appears. Rules that
/// parse but fail validation are dropped with a warning.
pub fn extract_rules(
    response: &str,
    variant: PromptVariant,
) -> (Vec<BusinessRule>, Vec<ParseWarning>) {
    let mut working = match variant {
        PromptVariant::PseudoCode => strip_fenced_blocks(response),
        _ => response.to_string(),
    };
    if variant == PromptVariant::ExplicitMapping {
        working = working.replace(LINKER_PHRASE, "\n");
    }

    let mut section_start = 0;
    let mut section_head = "";
    let mut offset = 0;
    for line in working.split_inclusive('\n') {
        if let Some(remainder) = output_header_remainder(line.trim_end_matches('\n')) {
            section_head = remainder;
            section_start = offset + line.len();
        }
        offset += line.len();
    }
    let section = if section_start == 0 && section_head.is_empty() {
        working.clone()
    } else {
        format!("{section_head}\n{}", &working[section_start..])
    };

    let block = parse_rule_block(&section);
    let mut warnings: Vec<ParseWarning> = block
        .issues
        .into_iter()
        .map(|detail| ParseWarning::Fragment { detail })
        .collect();

    let mut rules = Vec::with_capacity(block.rules.len());
    for rule in block.rules {
        let issues = validate_rule(&rule);
        if issues.is_empty() {
            rules.push(rule);
        } else {
            warnings.push(ParseWarning::InvalidRule {
                rule: format_rule(&rule),
                issues: issues.iter().map(|i| i.to_string()).collect(),
            });
        }
    }
    if rules.is_empty() {
        warnings.push(ParseWarning::EmptyOutput);
    }
    (rules, warnings)
}

fn is_word_at(haystack: &str, start: usize, len: usize) -> bool {
    let before_ok = haystack[..start]
        .chars()
        .next_back()
        .is_none_or(|c| !c.is_alphanumeric());
    let after_ok = haystack[start + len..]
        .chars()
        .next()
        .is_none_or(|c| !c.is_alphanumeric());
    before_ok && after_ok
}

fn label_keywords() -> [(&'static str, DependencyCall, bool); 11] {
    [
        ("sequential", DependencyCall::Sequential, true),
        ("conditional", DependencyCall::Conditional, true),
        ("parallel", DependencyCall::Parallel, true),
        ("none", DependencyCall::No, true),
        ("no", DependencyCall::No, true),
        ("顺序", DependencyCall::Sequential, false),
        ("条件", DependencyCall::Conditional, false),
        ("并行", DependencyCall::Parallel, false),
        ("并列", DependencyCall::Parallel, false),
        ("无", DependencyCall::No, false),
        ("没有", DependencyCall::No, false),
    ]
}

/// Every distinct label mentioned in `text`, each at its earliest
/// position, ordered by that position.
fn find_labels(text: &str) -> Vec<(usize, DependencyCall)> {
    let lower = text.to_lowercase();
    let mut found: Vec<(usize, DependencyCall)> = Vec::new();
    for (keyword, call, word_boundary) in label_keywords() {
        let mut search_from = 0;
        while let Some(rel) = lower[search_from..].find(keyword) {
            let at = search_from + rel;
            if !word_boundary || is_word_at(&lower, at, keyword.len()) {
                if !found.iter().any(|(_, c)| *c == call) {
                    found.push((at, call));
                }
                break;
            }
            search_from = at + keyword.len();
        }
    }
    found.sort_by_key(|(at, _)| *at);
    found
}

/// Reads the relationship verdict out of a stage-two response.
///
/// The last non-empty line is the decision line. Exactly one label there
/// wins; several distinct labels there are ambiguous; none at all falls
/// back to the earliest label anywhere in the response.
pub fn classify_dependency(response: &str) -> Result<DependencyCall, LabelError> {
    let decision_line = response
        .lines()
        .rev()
        .find(|line| !line.trim().is_empty())
        .unwrap_or("");
    let on_decision = find_labels(decision_line);
    match on_decision.len() {
        1 => return Ok(on_decision[0].1),
        n if n > 1 => {
            return Err(LabelError::Ambiguous {
                found: on_decision.into_iter().map(|(_, c)| c).collect(),
            })
        }
        _ => {}
    }
    find_labels(response)
        .into_iter()
        .map(|(_, call)| call)
        .next()
        .ok_or(LabelError::Unparseable)
}

/// All unordered index pairs of `n` items, lexicographically ordered.
pub fn enumerate_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            pairs.push((a, b));
        }
    }
    pairs
}

/// The stage-one request for a document, exactly as the pipeline sends it.
pub fn extraction_request(
    templates: &TemplateSet,
    config: &PipelineConfig,
    document: &Document,
) -> Result<CompletionRequest, PromptError> {
    let bundle = render_extraction_prompt(templates, config.variant, document)?;
    Ok(CompletionRequest {
        system: bundle.system,
        user: bundle.user,
        model: config.model.clone(),
        temperature: config.temperature,
        max_tokens: config.max_tokens,
    })
}

/// The stage-two request for one rule pair, exactly as the pipeline
/// sends it.
pub fn dependency_request(
    templates: &TemplateSet,
    config: &PipelineConfig,
    rule_a: &BusinessRule,
    rule_b: &BusinessRule,
    document: &Document,
) -> Result<CompletionRequest, PromptError> {
    let context = if config.rules_only { None } else { Some(document) };
    let bundle = render_dependency_prompt(templates, rule_a, rule_b, context)?;
    Ok(CompletionRequest {
        system: bundle.system,
        user: bundle.user,
        model: config.model.clone(),
        temperature: config.temperature,
        max_tokens: config.max_tokens,
    })
}

fn call_backend(
    request: &CompletionRequest,
    backend: &Backend,
    config: &PipelineConfig,
    record_lock: &Mutex<()>,
) -> Result<Exchange, LlmError> {
    match &config.record_to {
        Some(path) => {
            let _guard = record_lock.lock().unwrap();
            llm::record(request, backend, path)
        }
        None => backend.complete(request),
    }
}

/// Everything a stage-two worker needs, shared across threads.
struct StageTwo<'a> {
    templates: &'a TemplateSet,
    config: &'a PipelineConfig,
    backend: &'a Backend,
    record_lock: &'a Mutex<()>,
    document: &'a Document,
    rules: &'a [BusinessRule],
}

fn classify_pair(
    ctx: &StageTwo<'_>,
    a: usize,
    b: usize,
) -> Result<DependencyPrediction, PairFailure> {
    let fail = |error: String| PairFailure { a, b, error };
    let request =
        dependency_request(ctx.templates, ctx.config, &ctx.rules[a], &ctx.rules[b], ctx.document)
            .map_err(|e| fail(e.to_string()))?;
    let exchange = call_backend(&request, ctx.backend, ctx.config, ctx.record_lock)
        .map_err(|e| fail(e.to_string()))?;
    let predicted =
        classify_dependency(&exchange.response_text).map_err(|e| fail(e.to_string()))?;
    Ok(DependencyPrediction { a, b, predicted, exchange })
}

/// Runs both stages for one document and assembles the graph.
pub fn run_pipeline(
    document: &Document,
    config: &PipelineConfig,
    templates: &TemplateSet,
    backend: &Backend,
) -> Result<PipelineResult, PipelineError> {
    let record_lock = Mutex::new(());

    let request = extraction_request(templates, config, document)?;
    let exchange =
        call_backend(&request, backend, config, &record_lock).map_err(|source| {
            PipelineError::Extraction { document_id: document.id.clone(), source }
        })?;
    let (rules, warnings) = extract_rules(&exchange.response_text, config.variant);
    if config.strict && rules.is_empty() {
        return Err(PipelineError::EmptyExtraction { document_id: document.id.clone() });
    }
    let extraction = ExtractionResult {
        document_id: document.id.clone(),
        variant: config.variant,
        rules,
        warnings,
        exchange,
    };

    let pairs = enumerate_pairs(extraction.rules.len());
    let outcomes: Mutex<Vec<Option<Result<DependencyPrediction, PairFailure>>>> =
        Mutex::new(vec![None; pairs.len()]);
    let next = AtomicUsize::new(0);
    let workers = config.concurrency.clamp(1, pairs.len().max(1));
    let ctx = StageTwo {
        templates,
        config,
        backend,
        record_lock: &record_lock,
        document,
        rules: &extraction.rules,
    };
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= pairs.len() {
                    break;
                }
                let (a, b) = pairs[index];
                let outcome = classify_pair(&ctx, a, b);
                outcomes.lock().unwrap()[index] = Some(outcome);
            });
        }
    });

    let mut predictions = Vec::with_capacity(pairs.len());
    let mut failures = Vec::new();
    for outcome in outcomes.into_inner().unwrap() {
        match outcome.expect("every pair index was processed") {
            Ok(prediction) => predictions.push(prediction),
            Err(failure) => {
                if !config.keep_going {
                    return Err(PipelineError::Pair {
                        a: failure.a,
                        b: failure.b,
                        detail: failure.error,
                    });
                }
                failures.push(failure);
            }
        }
    }
    assert_eq!(predictions.len() + failures.len(), pairs.len());

    let labels: Vec<GraphLabel> = predictions
        .iter()
        .map(|p| GraphLabel { from: p.a, to: p.b, call: p.predicted, trigger: None })
        .collect();
    let built = build_graph(&extraction.rules, &labels)?;

    Ok(PipelineResult {
        model: config.model.clone(),
        extraction,
        predictions,
        failures,
        graph: built.graph,
        graph_warnings: built.warnings,
    })
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    a: usize,
    b: usize,
    label: &'a str,
}

#[derive(Serialize)]
struct FailureRow<'a> {
    a: usize,
    b: usize,
    error: &'a str,
}

#[derive(Serialize)]
struct ResultReport<'a> {
    document_id: &'a str,
    variant: &'a str,
    model: &'a str,
    rules: Vec<String>,
    warnings: Vec<String>,
    predictions: Vec<PredictionRow<'a>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    failures: Vec<FailureRow<'a>>,
    graph: &'a RuleFlowGraph,
}

impl PipelineResult {
    /// Serializes the run in its stable report shape: pretty-printed JSON
    /// with a trailing newline, fields in a fixed order, the `failures`
    /// array present only when something failed.
    pub fn to_json(&self) -> String {
        let report = ResultReport {
            document_id: &self.extraction.document_id,
            variant: self.extraction.variant.name(),
            model: &self.model,
            rules: self.extraction.rules.iter().map(format_rule).collect(),
            warnings: self
                .extraction
                .warnings
                .iter()
                .map(|w| w.to_string())
                .chain(self.graph_warnings.iter().map(|w| w.to_string()))
                .collect(),
            predictions: self
                .predictions
                .iter()
                .map(|p| PredictionRow { a: p.a, b: p.b, label: p.predicted.as_str() })
                .collect(),
            failures: self
                .failures
                .iter()
                .map(|f| FailureRow { a: f.a, b: f.b, error: &f.error })
                .collect(),
            graph: &self.graph,
        };
        let mut out = serde_json::to_string_pretty(&report).expect("report serializes");
        out.push('\n');
        out
    }
}
