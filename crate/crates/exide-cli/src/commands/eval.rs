//! Scores pipeline result files against a gold corpus.
//!
//! Result files are grouped by (model, variant) and each group is pooled
//! into one report: entity F1 over BIO projections of the rules,
//! judgement classification over slot-aligned rules, and dependency
//! classification over rule pairs. The dependency section only makes
//! sense when predicted and gold rule sets line up one-to-one, so it is
//! skipped (with a note on stderr) whenever any document in the group
//! extracted a different number of rules than the gold annotation has.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use exide_core::bio::{rules_to_bio, BioSequence};
use exide_core::corpus::{load_corpus, Document};
use exide_core::graph::DependencyCall;
use exide_core::metrics::{
    entity_f1_many, eval_dependencies_many, eval_judgement_many, ClassificationScore,
    Report,
};
use exide_core::rule::{parse_rule, BusinessRule};

use crate::error::CliError;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Gold corpus the predictions are scored against
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Pipeline result JSON file, or a directory of them; repeatable
    #[arg(long = "pred", value_name = "PATH", required = true)]
    pub preds: Vec<PathBuf>,
    /// Write one `report_<model>_<variant>.json` per group here
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Score only pairs with an annotated dependency, ignoring the rest
    #[arg(long)]
    pub three_class: bool,
    /// List per-class rows only for classes that actually occur
    #[arg(long)]
    pub present_only: bool,
}

/// The slice of a pipeline result file that evaluation needs.
#[derive(Deserialize)]
struct ResultFile {
    document_id: String,
    variant: String,
    model: String,
    rules: Vec<String>,
    #[serde(default)]
    predictions: Vec<PredictionRow>,
}

#[derive(Deserialize)]
struct PredictionRow {
    a: usize,
    b: usize,
    label: String,
}

struct DocEval {
    gold: Document,
    pred_rules: Vec<BusinessRule>,
    calls: Vec<(usize, usize, DependencyCall)>,
}

pub fn exec(args: &EvalArgs) -> Result<(), CliError> {
    let gold: BTreeMap<String, Document> = load_corpus(&args.corpus)?
        .into_iter()
        .map(|doc| (doc.id.clone(), doc))
        .collect();

    let mut groups: BTreeMap<(String, String), Vec<DocEval>> = BTreeMap::new();
    for path in collect_files(&args.preds)? {
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Io(format!("cannot read `{}`: {e}", path.display()))
        })?;
        let file: ResultFile = serde_json::from_str(&text).map_err(|e| {
            CliError::Run(format!("`{}` is not a pipeline result: {e}", path.display()))
        })?;
        let doc = gold.get(&file.document_id).ok_or_else(|| {
            CliError::Run(format!(
                "`{}` refers to document `{}` which is not in {}",
                path.display(),
                file.document_id,
                args.corpus.display()
            ))
        })?;

        let mut pred_rules = Vec::with_capacity(file.rules.len());
        for rule in &file.rules {
            let parsed = parse_rule(rule).map_err(|e| {
                CliError::Run(format!("`{}` holds an unparseable rule: {e}", path.display()))
            })?;
            pred_rules.push(parsed);
        }
        let mut calls = Vec::with_capacity(file.predictions.len());
        for row in &file.predictions {
            let call: DependencyCall = row.label.parse().map_err(|e| {
                CliError::Run(format!("`{}`: {e}", path.display()))
            })?;
            calls.push((row.a, row.b, call));
        }

        groups
            .entry((file.model, file.variant))
            .or_default()
            .push(DocEval { gold: doc.clone(), pred_rules, calls });
    }

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| {
            CliError::Io(format!("cannot create `{}`: {e}", dir.display()))
        })?;
    }

    for ((model, variant), docs) in &groups {
        let report = score_group(docs, args.three_class)?;
        print_group(model, variant, docs.len(), &report, args.present_only);
        if let Some(dir) = &args.out {
            let file = dir.join(format!("report_{}_{}.json", slug(model), slug(variant)));
            std::fs::write(&file, report.to_json()).map_err(|e| {
                CliError::Io(format!("cannot write `{}`: {e}", file.display()))
            })?;
            println!("  report written to {}", file.display());
        }
    }
    Ok(())
}

fn collect_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| {
                    CliError::Io(format!("cannot read `{}`: {e}", path.display()))
                })?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::Config(
            "no prediction files found under the given --pred paths".to_string(),
        ));
    }
    Ok(files)
}

fn score_group(docs: &[DocEval], three_class: bool) -> Result<Report, CliError> {
    let projected: Vec<(BioSequence, BioSequence)> = docs
        .iter()
        .map(|d| {
            let (gold, _) = rules_to_bio(&d.gold.text, &d.gold.rules);
            let (pred, _) = rules_to_bio(&d.gold.text, &d.pred_rules);
            (gold, pred)
        })
        .collect();
    let pairs: Vec<(&BioSequence, &BioSequence)> =
        projected.iter().map(|(g, p)| (g, p)).collect();
    let entity = entity_f1_many(&pairs)?;

    let rule_sets: Vec<(&[BusinessRule], &[BusinessRule])> = docs
        .iter()
        .map(|d| (d.gold.rules.as_slice(), d.pred_rules.as_slice()))
        .collect();
    let judgement = eval_judgement_many(&rule_sets);

    let dependency = dependency_score(docs, three_class)?;

    Ok(Report { entity, judgement: Some(judgement), dependency })
}

fn dependency_score(
    docs: &[DocEval],
    three_class: bool,
) -> Result<Option<ClassificationScore>, CliError> {
    let mismatched: Vec<&str> = docs
        .iter()
        .filter(|d| d.pred_rules.len() != d.gold.rules.len())
        .map(|d| d.gold.id.as_str())
        .collect();
    if !mismatched.is_empty() {
        eprintln!(
            "note: skipping dependency scores; extracted rule counts differ from gold \
             for: {}",
            mismatched.join(", ")
        );
        return Ok(None);
    }
    let items: Vec<(_, usize, _)> = docs
        .iter()
        .map(|d| {
            (d.gold.dependencies.as_slice(), d.gold.rules.len(), d.calls.as_slice())
        })
        .collect();
    Ok(Some(eval_dependencies_many(&items, three_class)?))
}

fn print_group(
    model: &str,
    variant: &str,
    doc_count: usize,
    report: &Report,
    present_only: bool,
) {
    let plural = if doc_count == 1 { "document" } else { "documents" };
    println!("== model={model} variant={variant} ({doc_count} {plural})");
    println!(
        "entity      micro P {:.3}  R {:.3}  F1 {:.3} | macro F1 {:.3}",
        report.entity.micro.precision,
        report.entity.micro.recall,
        report.entity.micro.f1,
        report.entity.macro_f1
    );
    if let Some(score) = &report.judgement {
        print_classification("judgement", score, present_only);
    }
    match &report.dependency {
        Some(score) => print_classification("dependency", score, present_only),
        None => println!("dependency  skipped (rule counts differ from gold)"),
    }
}

fn print_classification(section: &str, score: &ClassificationScore, present_only: bool) {
    println!(
        "{section:<11} macro F1 {:.3} | accuracy {:.3}",
        score.macro_f1, score.accuracy
    );
    for (class, prf) in &score.per_class {
        let absent =
            prf.true_positives == 0 && prf.false_positives == 0 && prf.false_negatives == 0;
        if present_only && absent {
            continue;
        }
        println!("    {class:<28} F1 {:.3}", prf.f1);
    }
}

/// Model and variant names become file name parts, so anything outside
/// [A-Za-z0-9._-] is flattened to '-'.
fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '-'
            }
        })
        .collect()
}
