//! Deterministic prompt rendering from template files.
//!
//! One shared extraction template serves five variants: the base variant
//! uses it as is, and the others splice fixed deltas in at the `Input:`,
//! `Explain:` and `Output:` anchors. Dependency and generation prompts
//! have their own templates. Built-in English and Chinese sets are
//! embedded; a directory with the same six files can override them.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::rule::{format_rule, BusinessRule};

/// The five extraction prompt variants. `p1`..`p5` are accepted aliases,
/// in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptVariant {
    ImplicitMapping,
    ExplicitMapping,
    ClarifiedInput,
    LogicalJudgement,
    PseudoCode,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 5] = [
        PromptVariant::ImplicitMapping,
        PromptVariant::ExplicitMapping,
        PromptVariant::ClarifiedInput,
        PromptVariant::LogicalJudgement,
        PromptVariant::PseudoCode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PromptVariant::ImplicitMapping => "implicit-mapping",
            PromptVariant::ExplicitMapping => "explicit-mapping",
            PromptVariant::ClarifiedInput => "clarified-input",
            PromptVariant::LogicalJudgement => "logical-judgement",
            PromptVariant::PseudoCode => "pseudo-code",
        }
    }

    pub fn alias(self) -> &'static str {
        match self {
            PromptVariant::ImplicitMapping => "p1",
            PromptVariant::ExplicitMapping => "p2",
            PromptVariant::ClarifiedInput => "p3",
            PromptVariant::LogicalJudgement => "p4",
            PromptVariant::PseudoCode => "p5",
        }
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_lowercase();
        for variant in PromptVariant::ALL {
            if key == variant.name() || key == variant.alias() {
                return Ok(variant);
            }
        }
        Err(format!(
            "unknown prompt variant `{s}` (expected one of implicit-mapping, explicit-mapping, \
             clarified-input, logical-judgement, pseudo-code, or aliases p1..p5)"
        ))
    }
}

/// What a rendered prompt asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptTask {
    Extraction(PromptVariant),
    Dependency,
    Generation,
}

/// A rendered prompt: optional system message, the user message, the task
/// it serves, and which numbered definitions its text carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: Option<String>,
    pub user: String,
    pub task: PromptTask,
    pub definitions_included: BTreeSet<u8>,
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("cannot read template `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("template `{template}` lacks the `{section}` section the renderer anchors on")]
    MissingSection { template: &'static str, section: &'static str },
    #[error("template `{template}` lacks the `{placeholder}` placeholder")]
    MissingPlaceholder { template: &'static str, placeholder: &'static str },
    #[error("document has no text to extract rules from")]
    EmptyDocument,
    #[error("dependency prompt needs two distinct rules")]
    IdenticalRules,
    #[error("generation prompt needs a non-empty domain")]
    EmptyDomain,
}

/// Built-in template language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptLang {
    #[default]
    En,
    Zh,
}

impl FromStr for PromptLang {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "en" => Ok(PromptLang::En),
            "zh" => Ok(PromptLang::Zh),
            other => Err(format!("unknown template language `{other}` (expected en or zh)")),
        }
    }
}

/// The six template bodies a prompt set consists of.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    extraction: String,
    delta_explicit_mapping: String,
    delta_logical_judgement: String,
    delta_pseudo_code: String,
    dependency: String,
    generation: String,
}

const TEMPLATE_FILES: [&str; 6] = [
    "extraction.txt",
    "delta_explicit_mapping.txt",
    "delta_logical_judgement.txt",
    "delta_pseudo_code.txt",
    "dependency.txt",
    "generation.txt",
];

impl TemplateSet {
    /// The embedded template set for a language.
    pub fn builtin(lang: PromptLang) -> TemplateSet {
        match lang {
            PromptLang::En => TemplateSet {
                extraction: include_str!("prompt/templates/en/extraction.txt").to_string(),
                delta_explicit_mapping: include_str!("prompt/templates/en/delta_explicit_mapping.txt")
                    .to_string(),
                delta_logical_judgement: include_str!(
                    "prompt/templates/en/delta_logical_judgement.txt"
                )
                .to_string(),
                delta_pseudo_code: include_str!("prompt/templates/en/delta_pseudo_code.txt")
                    .to_string(),
                dependency: include_str!("prompt/templates/en/dependency.txt").to_string(),
                generation: include_str!("prompt/templates/en/generation.txt").to_string(),
            },
            PromptLang::Zh => TemplateSet {
                extraction: include_str!("prompt/templates/zh/extraction.txt").to_string(),
                delta_explicit_mapping: include_str!("prompt/templates/zh/delta_explicit_mapping.txt")
                    .to_string(),
                delta_logical_judgement: include_str!(
                    "prompt/templates/zh/delta_logical_judgement.txt"
                )
                .to_string(),
                delta_pseudo_code: include_str!("prompt/templates/zh/delta_pseudo_code.txt")
                    .to_string(),
                dependency: include_str!("prompt/templates/zh/dependency.txt").to_string(),
                generation: include_str!("prompt/templates/zh/generation.txt").to_string(),
            },
        }
    }

    /// Loads a template set from a directory holding the six template
    /// files, checking the placeholders the renderer depends on.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<TemplateSet, PromptError> {
        let dir = dir.as_ref();
        let mut bodies = Vec::with_capacity(TEMPLATE_FILES.len());
        for name in TEMPLATE_FILES {
            let path = dir.join(name);
            let body = std::fs::read_to_string(&path)
                .map_err(|source| PromptError::Io { path, source })?;
            bodies.push(body);
        }
        let mut iter = bodies.into_iter();
        let set = TemplateSet {
            extraction: iter.next().unwrap(),
            delta_explicit_mapping: iter.next().unwrap(),
            delta_logical_judgement: iter.next().unwrap(),
            delta_pseudo_code: iter.next().unwrap(),
            dependency: iter.next().unwrap(),
            generation: iter.next().unwrap(),
        };
        set.check_placeholders()?;
        Ok(set)
    }

    fn check_placeholders(&self) -> Result<(), PromptError> {
        for (template, body, placeholder) in [
            ("extraction.txt", &self.extraction, "{{text}}"),
            ("dependency.txt", &self.dependency, "{{rule_a}}"),
            ("dependency.txt", &self.dependency, "{{rule_b}}"),
            ("generation.txt", &self.generation, "{{domain}}"),
        ] {
            if !body.contains(placeholder) {
                return Err(PromptError::MissingPlaceholder {
                    template,
                    placeholder: match placeholder {
                        "{{text}}" => "{{text}}",
                        "{{rule_a}}" => "{{rule_a}}",
                        "{{rule_b}}" => "{{rule_b}}",
                        _ => "{{domain}}",
                    },
                });
            }
        }
        Ok(())
    }
}

fn line_starting_with(text: &str, prefix: &str) -> Option<usize> {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim_start().starts_with(prefix) {
            return Some(offset);
        }
        offset += line.len();
    }
    None
}

fn insert_after_line(text: &str, anchor_offset: usize, insertion: &str) -> String {
    let line_end = text[anchor_offset..]
        .find('\n')
        .map(|i| anchor_offset + i + 1)
        .unwrap_or(text.len());
    let mut out = String::with_capacity(text.len() + insertion.len() + 1);
    out.push_str(&text[..line_end]);
    out.push_str(insertion.trim_end());
    out.push('\n');
    out.push_str(&text[line_end..]);
    out
}

fn definitions_in(text: &str) -> BTreeSet<u8> {
    (1..=5)
        .filter(|n| text.contains(&format!("Definition {n}:")))
        .collect()
}

/// Renders the extraction prompt for a document under a variant.
///
/// The variant deltas are spliced into the template before the document
/// text is substituted, so a document that happens to contain section
/// headers cannot displace the anchors. Rendering is byte-deterministic.
pub fn render_extraction_prompt(
    templates: &TemplateSet,
    variant: PromptVariant,
    document: &Document,
) -> Result<PromptBundle, PromptError> {
    if document.text.trim().is_empty() {
        return Err(PromptError::EmptyDocument);
    }
    let base = &templates.extraction;
    let body = match variant {
        PromptVariant::ImplicitMapping => base.clone(),
        PromptVariant::ExplicitMapping => {
            let anchor = line_starting_with(base, "Explain:").ok_or(
                PromptError::MissingSection { template: "extraction.txt", section: "Explain:" },
            )?;
            insert_after_line(base, anchor, &templates.delta_explicit_mapping)
        }
        PromptVariant::ClarifiedInput => {
            let anchor = line_starting_with(base, "Input:").ok_or(PromptError::MissingSection {
                template: "extraction.txt",
                section: "Input:",
            })?;
            let mut out = String::with_capacity(base.len() + 16);
            out.push_str(&base[..anchor]);
            out.push_str("Business Text ");
            out.push_str(&base[anchor..]);
            out
        }
        PromptVariant::LogicalJudgement => {
            let anchor = line_starting_with(base, "Output:").ok_or(
                PromptError::MissingSection { template: "extraction.txt", section: "Output:" },
            )?;
            let mut out = String::with_capacity(base.len() + templates.delta_logical_judgement.len());
            out.push_str(&base[..anchor]);
            out.push_str(templates.delta_logical_judgement.trim_end());
            out.push_str("\n\n");
            out.push_str(&base[anchor..]);
            out
        }
        PromptVariant::PseudoCode => {
            let mut out = base.trim_end().to_string();
            out.push_str("\n\n");
            out.push_str(templates.delta_pseudo_code.trim_end());
            out.push('\n');
            out
        }
    };
    let user = body.replace("{{text}}", document.text.trim());
    let definitions_included = definitions_in(&user);
    Ok(PromptBundle {
        system: None,
        user,
        task: PromptTask::Extraction(variant),
        definitions_included,
    })
}

/// Renders the pairwise dependency prompt. The rules appear in canonical
/// notation; the document text is included when `context` is given and a
/// fixed "(not provided)" marker otherwise, keeping rendering total and
/// deterministic.
pub fn render_dependency_prompt(
    templates: &TemplateSet,
    rule_a: &BusinessRule,
    rule_b: &BusinessRule,
    context: Option<&Document>,
) -> Result<PromptBundle, PromptError> {
    if rule_a == rule_b {
        return Err(PromptError::IdenticalRules);
    }
    let user = templates
        .dependency
        .replace("{{rule_a}}", &format_rule(rule_a))
        .replace("{{rule_b}}", &format_rule(rule_b))
        .replace(
            "{{text}}",
            context.map(|d| d.text.trim()).unwrap_or("(not provided)"),
        );
    let definitions_included = definitions_in(&user);
    Ok(PromptBundle {
        system: None,
        user,
        task: PromptTask::Dependency,
        definitions_included,
    })
}

/// Renders the synthetic-text generation prompt for a domain, appending
/// any constraints as a sorted key/value list.
pub fn render_generation_prompt(
    templates: &TemplateSet,
    domain: &str,
    constraints: Option<&BTreeMap<String, String>>,
) -> Result<PromptBundle, PromptError> {
    if domain.trim().is_empty() {
        return Err(PromptError::EmptyDomain);
    }
    let mut user = templates.generation.replace("{{domain}}", domain.trim());
    if let Some(constraints) = constraints.filter(|c| !c.is_empty()) {
        user = user.trim_end().to_string();
        user.push_str("\n\nConstraints:\n");
        for (key, value) in constraints {
            user.push_str(&format!("- {key}: {value}\n"));
        }
    }
    let definitions_included = definitions_in(&user);
    Ok(PromptBundle {
        system: None,
        user,
        task: PromptTask::Generation,
        definitions_included,
    })
}
