//! Corpus persistence and statistics.
//!
//! A corpus is a UTF-8 JSON array of documents, each carrying a business
//! text with its gold rules and gold pairwise dependencies.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::ops::Add;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::graph::DependencyKind;
use crate::rule::{BusinessRule, LogicalJudgement};
use crate::text::{segment_sentences, tokenize};

/// Where a document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Collected,
    Synthetic,
}

/// A gold dependency annotation between two rules of the same document.
/// `trigger` names the reference value that routes a conditional branch
/// and must be absent on the other kinds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyLabel {
    pub from: usize,
    pub to: usize,
    pub kind: DependencyKind,
    #[serde(default)]
    pub trigger: Option<String>,
}

/// One business text with its annotations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub domain: String,
    pub source: Source,
    pub text: String,
    /// Optional precomputed sentence byte ranges; statistics always
    /// re-segment from the text so counts stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentences: Option<Vec<[usize; 2]>>,
    #[serde(default)]
    pub rules: Vec<BusinessRule>,
    #[serde(default)]
    pub dependencies: Vec<DependencyLabel>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("`{path}` does not match the corpus schema: {detail}")]
    Schema { path: PathBuf, detail: String },
    #[error("document `{doc_id}` violates a corpus invariant: {detail}")]
    Invariant { doc_id: String, detail: String },
}

fn validate_documents(documents: &[Document]) -> Result<(), CorpusError> {
    let mut seen_ids = BTreeSet::new();
    for doc in documents {
        if !seen_ids.insert(doc.id.as_str()) {
            return Err(CorpusError::Invariant {
                doc_id: doc.id.clone(),
                detail: "duplicate document id".to_string(),
            });
        }
        for (i, dep) in doc.dependencies.iter().enumerate() {
            let path = format!("dependencies[{i}]");
            if dep.from >= doc.rules.len() || dep.to >= doc.rules.len() {
                return Err(CorpusError::Invariant {
                    doc_id: doc.id.clone(),
                    detail: format!(
                        "{path}: indices ({}, {}) outside 0..{}",
                        dep.from,
                        dep.to,
                        doc.rules.len()
                    ),
                });
            }
            if dep.from == dep.to {
                return Err(CorpusError::Invariant {
                    doc_id: doc.id.clone(),
                    detail: format!("{path}: rule {} depends on itself", dep.from),
                });
            }
            if dep.trigger.is_some() && dep.kind != DependencyKind::Conditional {
                return Err(CorpusError::Invariant {
                    doc_id: doc.id.clone(),
                    detail: format!("{path}: trigger given on a {} dependency", dep.kind),
                });
            }
        }
    }
    Ok(())
}

/// Loads and validates a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let documents: Vec<Document> =
        serde_json::from_str(&raw).map_err(|err| CorpusError::Schema {
            path: path.to_path_buf(),
            detail: err.to_string(),
        })?;
    validate_documents(&documents)?;
    Ok(documents)
}

/// Validates and writes a corpus file; `load_corpus` of the result yields
/// structurally equal documents.
pub fn save_corpus(documents: &[Document], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    validate_documents(documents)?;
    let mut body = serde_json::to_string_pretty(documents).expect("corpus serializes");
    body.push('\n');
    std::fs::write(path, body).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Aggregate corpus statistics: size counts plus judgement and dependency
/// histograms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub texts: usize,
    pub sentences: usize,
    pub rules: usize,
    pub tokens: usize,
    pub judgement_histogram: BTreeMap<LogicalJudgement, usize>,
    pub dependency_histogram: BTreeMap<DependencyKind, usize>,
}

impl CorpusStats {
    pub fn judgement_count(&self, judgement: LogicalJudgement) -> usize {
        self.judgement_histogram.get(&judgement).copied().unwrap_or(0)
    }

    pub fn dependency_count(&self, kind: DependencyKind) -> usize {
        self.dependency_histogram.get(&kind).copied().unwrap_or(0)
    }
}

impl Add for CorpusStats {
    type Output = CorpusStats;

    fn add(mut self, other: CorpusStats) -> CorpusStats {
        self.texts += other.texts;
        self.sentences += other.sentences;
        self.rules += other.rules;
        self.tokens += other.tokens;
        for (judgement, count) in other.judgement_histogram {
            *self.judgement_histogram.entry(judgement).or_insert(0) += count;
        }
        for (kind, count) in other.dependency_histogram {
            *self.dependency_histogram.entry(kind).or_insert(0) += count;
        }
        self
    }
}

/// Counts texts, sentences (terminal-punctuation segmentation), rules and
/// tokens, and builds the judgement and dependency histograms.
pub fn corpus_stats(documents: &[Document]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for doc in documents {
        stats.texts += 1;
        stats.sentences += segment_sentences(&doc.text).len();
        stats.rules += doc.rules.len();
        stats.tokens += tokenize(&doc.text).len();
        for rule in &doc.rules {
            *stats
                .judgement_histogram
                .entry(rule.condition.judgement)
                .or_insert(0) += 1;
        }
        for dep in &doc.dependencies {
            *stats.dependency_histogram.entry(dep.kind).or_insert(0) += 1;
        }
    }
    stats
}
