//! Rule extraction and dependency analysis for business texts.
//!
//! Business processes are written down as prose; this crate turns such
//! texts into structured `<Condition, Action>` rules and a typed
//! rule-flow graph, using a language model in two stages:
//!
//! 1. **Extraction** — render one of five prompt variants for a
//!    document, send it to a backend, and parse the response into
//!    validated [`rule::BusinessRule`]s written in the angle-bracket
//!    notation `< <slot type, judgement, value...>, action>`.
//! 2. **Dependency classification** — ask the backend for the
//!    relationship (sequential, conditional, parallel, or none) of every
//!    rule pair and assemble a [`graph::RuleFlowGraph`].
//!
//! Backends ([`llm::Backend`]) are pluggable: a live HTTP endpoint, a
//! scripted map for tests, or a recorded transcript replayed digest by
//! digest, which keeps every pipeline run reproducible offline. The
//! [`metrics`] module scores extractions (strict span F1 over BIO
//! projections), judgement and dependency labels (per-class and macro
//! F1), and annotator agreement (Fleiss' kappa, intraclass correlation).
//!
//! The most common entry points are re-exported from the crate root;
//! the modules stay public for everything else.

pub mod bio;
pub mod corpus;
pub mod graph;
pub mod llm;
pub mod metrics;
pub mod pipeline;
pub mod prompt;
pub mod rule;
pub mod text;

pub use bio::{render_bio_export, rules_to_bio, BioSequence, BioTag, EntityKind};
pub use corpus::{corpus_stats, load_corpus, save_corpus, CorpusStats, Document, Source};
pub use graph::{
    build_graph, to_dot, validate_graph, DependencyCall, DependencyKind, Edge, GraphLabel,
    RuleFlowGraph,
};
pub use llm::{load_transcript, record, request_digest, Backend, CompletionRequest, Exchange};
pub use metrics::{
    entity_f1, entity_f1_many, eval_dependencies, eval_dependencies_many, eval_judgement,
    eval_judgement_many, evaluate_extraction, fleiss_kappa, icc, macro_f1, CategoricalGrid,
    ClassificationScore, DependencyItem, EntityScore, IccForm, MacroAveraging, MetricsError,
    PrfScore, RatingsMatrix, Report,
};
pub use pipeline::{
    classify_dependency, enumerate_pairs, extract_rules, run_pipeline, PipelineConfig,
    PipelineError, PipelineResult,
};
pub use prompt::{
    render_dependency_prompt, render_extraction_prompt, render_generation_prompt, PromptBundle,
    PromptLang, PromptVariant, TemplateSet,
};
pub use rule::{
    format_rule, parse_rule, parse_rule_block, validate_rule, BusinessRule, Condition,
    LogicalJudgement, ReferenceValues,
};
pub use text::{segment_sentences, tokenize, Token};
