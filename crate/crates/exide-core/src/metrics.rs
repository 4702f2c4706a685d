//! Evaluation metrics: strict span F1 over BIO projections, per-class
//! macro F1 for judgement and dependency labels, and inter-annotator
//! agreement (Fleiss' kappa for categorical grids, two-way random-effects
//! intraclass correlation for numeric ratings).
//!
//! Span matching is strict: a predicted entity counts only when start,
//! end and kind all match a gold entity. Macro averaging comes in two
//! flavours: over a configured class set (absent classes score zero) or
//! over the classes actually present in gold or prediction; the latter is
//! what the judgement and dependency evaluations use, so a perfect
//! prediction always scores exactly 1.0.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::bio::{rules_to_bio, AlignmentWarning, BioSequence, EntityKind};
use crate::corpus::DependencyLabel;
use crate::graph::DependencyCall;
use crate::rule::{BusinessRule, LogicalJudgement};
use crate::text::{normalize_width, tokenize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("gold has {gold} items but the prediction has {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("label `{label}` is not in the configured class set")]
    UnknownLabel { label: String },
    #[error("pair predictions do not cover the {expected} rule pairs: {detail}")]
    PairCoverage { expected: usize, detail: String },
    #[error("agreement grid is degenerate: {detail}")]
    DegenerateGrid { detail: String },
    #[error("ratings matrix is degenerate: {detail}")]
    DegenerateMatrix { detail: String },
}

/// Precision, recall and F1 together with the counts they came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrfScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrfScore {
    /// Classification convention: a class with no instances on either
    /// side scores zero.
    pub fn from_counts(tp: usize, fp: usize, missed: usize) -> PrfScore {
        let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
        let recall = if tp + missed > 0 { tp as f64 / (tp + missed) as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        PrfScore {
            true_positives: tp,
            false_positives: fp,
            false_negatives: missed,
            precision,
            recall,
            f1,
        }
    }

    /// Span convention: nothing to find and nothing found is a perfect
    /// score, so identical projections always score 1.0.
    pub fn from_counts_empty_is_perfect(tp: usize, fp: usize, missed: usize) -> PrfScore {
        if tp == 0 && fp == 0 && missed == 0 {
            return PrfScore {
                true_positives: 0,
                false_positives: 0,
                false_negatives: 0,
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        PrfScore::from_counts(tp, fp, missed)
    }
}

/// Strict span scores: per kind, pooled (micro), and macro over the
/// kinds present on either side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityScore {
    pub per_kind: BTreeMap<EntityKind, PrfScore>,
    pub micro: PrfScore,
    pub macro_f1: f64,
}

/// Scores predicted spans against gold spans with strict matching.
pub fn entity_f1(gold: &BioSequence, pred: &BioSequence) -> Result<EntityScore, MetricsError> {
    entity_f1_many(&[(gold, pred)])
}

/// Pools strict span counts over several gold/predicted sequence pairs
/// (one pair per document) into a single score.
pub fn entity_f1_many(
    pairs: &[(&BioSequence, &BioSequence)],
) -> Result<EntityScore, MetricsError> {
    let mut counts: BTreeMap<EntityKind, (usize, usize, usize)> =
        EntityKind::ALL.into_iter().map(|k| (k, (0, 0, 0))).collect();
    for (gold, pred) in pairs {
        if gold.tokens.len() != pred.tokens.len() {
            return Err(MetricsError::LengthMismatch {
                gold: gold.tokens.len(),
                pred: pred.tokens.len(),
            });
        }
        let gold_spans: BTreeSet<(usize, usize, EntityKind)> =
            gold.entities().into_iter().collect();
        let pred_spans: BTreeSet<(usize, usize, EntityKind)> =
            pred.entities().into_iter().collect();
        for kind in EntityKind::ALL {
            let g: BTreeSet<_> = gold_spans.iter().filter(|s| s.2 == kind).collect();
            let p: BTreeSet<_> = pred_spans.iter().filter(|s| s.2 == kind).collect();
            let tp = g.intersection(&p).count();
            let entry = counts.get_mut(&kind).expect("all kinds are seeded");
            entry.0 += tp;
            entry.1 += p.len() - tp;
            entry.2 += g.len() - tp;
        }
    }

    let mut per_kind = BTreeMap::new();
    let (mut pooled_tp, mut pooled_fp, mut pooled_missed) = (0, 0, 0);
    let mut present_f1 = Vec::new();
    for (kind, (tp, fp, missed)) in counts {
        pooled_tp += tp;
        pooled_fp += fp;
        pooled_missed += missed;
        let score = PrfScore::from_counts_empty_is_perfect(tp, fp, missed);
        if tp + fp + missed > 0 {
            present_f1.push(score.f1);
        }
        per_kind.insert(kind, score);
    }
    let macro_f1 = if present_f1.is_empty() {
        1.0
    } else {
        present_f1.iter().sum::<f64>() / present_f1.len() as f64
    };
    Ok(EntityScore {
        per_kind,
        micro: PrfScore::from_counts_empty_is_perfect(pooled_tp, pooled_fp, pooled_missed),
        macro_f1,
    })
}

/// Span scores for an extraction, plus the projection warnings from each
/// side (surfaces that could not be located in the text).
#[derive(Debug, Clone)]
pub struct ExtractionEval {
    pub score: EntityScore,
    pub gold_warnings: Vec<AlignmentWarning>,
    pub pred_warnings: Vec<AlignmentWarning>,
}

/// Projects gold and predicted rules onto the same text and scores the
/// spans strictly.
pub fn evaluate_extraction(
    text: &str,
    gold: &[BusinessRule],
    pred: &[BusinessRule],
) -> ExtractionEval {
    let (gold_seq, gold_warnings) = rules_to_bio(text, gold);
    let (pred_seq, pred_warnings) = rules_to_bio(text, pred);
    let score =
        entity_f1(&gold_seq, &pred_seq).expect("projections of one text have equal length");
    ExtractionEval { score, gold_warnings, pred_warnings }
}

/// A gold-by-predicted count table over a fixed label list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    /// Indexed `counts[gold][pred]` in label order.
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new<I, S>(labels: I) -> ConfusionMatrix
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = Vec::new();
        for label in labels {
            let label = label.into();
            if !seen.contains(&label) {
                seen.push(label);
            }
        }
        let n = seen.len();
        ConfusionMatrix { labels: seen, counts: vec![vec![0; n]; n] }
    }

    fn index(&self, label: &str) -> usize {
        self.labels
            .iter()
            .position(|l| l == label)
            .unwrap_or_else(|| panic!("label `{label}` is not registered in this matrix"))
    }

    pub fn add(&mut self, gold: &str, pred: &str) {
        let g = self.index(gold);
        let p = self.index(pred);
        self.counts[g][p] += 1;
    }

    pub fn get(&self, gold: &str, pred: &str) -> usize {
        self.counts[self.index(gold)][self.index(pred)]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().map(|row| row.iter().sum::<usize>()).sum()
    }

    pub fn diagonal_total(&self) -> usize {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn off_diagonal_total(&self) -> usize {
        self.total() - self.diagonal_total()
    }

    /// A plain text table, gold labels down the side and predicted labels
    /// across the top.
    pub fn render(&self) -> String {
        let width = self
            .labels
            .iter()
            .map(|l| l.chars().count())
            .max()
            .unwrap_or(0)
            .max(4);
        let mut out = format!("{:>width$} |", "gold");
        for label in &self.labels {
            out.push_str(&format!(" {label:>width$}"));
        }
        out.push('\n');
        for (i, label) in self.labels.iter().enumerate() {
            out.push_str(&format!("{label:>width$} |"));
            for count in &self.counts[i] {
                out.push_str(&format!(" {count:>width$}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Which classes a macro average runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacroAveraging {
    /// Every configured class; a class absent from both sides scores 0.
    ConfiguredSet,
    /// Only classes appearing in gold or prediction; 1.0 when none do.
    PresentOnly,
}

/// Per-class scores, their macro average, accuracy, and the confusion
/// table behind them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationScore {
    pub per_class: BTreeMap<String, PrfScore>,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

fn mean_f1(per_class: &BTreeMap<String, PrfScore>) -> f64 {
    if per_class.is_empty() {
        return 1.0;
    }
    per_class.values().map(|s| s.f1).sum::<f64>() / per_class.len() as f64
}

/// Scores aligned label sequences with per-class F1 and their macro
/// average over `class_set` (see [`MacroAveraging`]).
pub fn macro_f1(
    gold: &[&str],
    pred: &[&str],
    class_set: &[&str],
    averaging: MacroAveraging,
) -> Result<ClassificationScore, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch { gold: gold.len(), pred: pred.len() });
    }
    for label in gold.iter().chain(pred.iter()) {
        if !class_set.contains(label) {
            return Err(MetricsError::UnknownLabel { label: label.to_string() });
        }
    }
    let mut confusion = ConfusionMatrix::new(class_set.iter().copied());
    for (g, p) in gold.iter().zip(pred.iter()) {
        confusion.add(g, p);
    }
    let mut per_class = BTreeMap::new();
    for class in confusion.labels.clone() {
        let present = gold.contains(&class.as_str()) || pred.contains(&class.as_str());
        if averaging == MacroAveraging::PresentOnly && !present {
            continue;
        }
        let tp = gold
            .iter()
            .zip(pred.iter())
            .filter(|(g, p)| **g == class && **p == class)
            .count();
        let fp = pred.iter().filter(|p| **p == class).count() - tp;
        let missed = gold.iter().filter(|g| **g == class).count() - tp;
        per_class.insert(class, PrfScore::from_counts(tp, fp, missed));
    }
    let correct = gold.iter().zip(pred.iter()).filter(|(g, p)| g == p).count();
    let accuracy = if gold.is_empty() { 1.0 } else { correct as f64 / gold.len() as f64 };
    Ok(ClassificationScore { macro_f1: mean_f1(&per_class), per_class, accuracy, confusion })
}

/// The six judgement surfaces in canonical order.
pub fn judgement_classes() -> Vec<&'static str> {
    LogicalJudgement::ALL.iter().map(|j| j.canonical_surface()).collect()
}

/// Confusion margin label for rules with no aligned counterpart.
pub const MISSING_LABEL: &str = "MISSING";

fn normalized_slot(rule: &BusinessRule) -> String {
    normalize_width(&rule.condition.slot_type).trim().to_lowercase()
}

fn slot_token_set(rule: &BusinessRule) -> BTreeSet<String> {
    let normalized = normalized_slot(rule);
    tokenize(&normalized)
        .into_iter()
        .map(|t| t.text.to_string())
        .collect()
}

/// Compares the judgements of predicted rules against gold rules.
///
/// Rules are aligned by slot type: exact match after width and case
/// normalization first (predictions in order, each taking the first
/// unclaimed gold rule), then greatest token overlap between slot types.
/// Rules left unaligned appear in the confusion table under a `MISSING`
/// margin but are excluded from per-class scores and accuracy, which are
/// averaged over the judgement classes present among aligned pairs.
pub fn eval_judgement(gold: &[BusinessRule], pred: &[BusinessRule]) -> ClassificationScore {
    eval_judgement_many(&[(gold, pred)])
}

/// Aligns rules within each document and pools the aligned judgement
/// pairs and margins into a single score.
pub fn eval_judgement_many(docs: &[(&[BusinessRule], &[BusinessRule])]) -> ClassificationScore {
    let mut labels = judgement_classes();
    labels.push(MISSING_LABEL);
    let mut confusion = ConfusionMatrix::new(labels);
    let mut aligned_gold = Vec::new();
    let mut aligned_pred = Vec::new();
    let mut vacuous = true;
    for &(gold, pred) in docs {
        vacuous &= gold.is_empty() && pred.is_empty();
        let (pred_match, gold_taken) = align_by_slot(gold, pred);
        for (j, p) in pred.iter().enumerate() {
            let surface = p.condition.judgement.canonical_surface();
            match pred_match[j] {
                Some(i) => {
                    let gold_surface = gold[i].condition.judgement.canonical_surface();
                    confusion.add(gold_surface, surface);
                    aligned_gold.push(gold_surface);
                    aligned_pred.push(surface);
                }
                None => confusion.add(MISSING_LABEL, surface),
            }
        }
        for (i, g) in gold.iter().enumerate() {
            if !gold_taken[i] {
                confusion.add(g.condition.judgement.canonical_surface(), MISSING_LABEL);
            }
        }
    }

    if aligned_gold.is_empty() {
        let score = if vacuous { 1.0 } else { 0.0 };
        return ClassificationScore {
            per_class: BTreeMap::new(),
            macro_f1: score,
            accuracy: score,
            confusion,
        };
    }
    let aligned = macro_f1(
        &aligned_gold,
        &aligned_pred,
        &judgement_classes(),
        MacroAveraging::PresentOnly,
    )
    .expect("aligned judgement labels are always in the class set");
    ClassificationScore { confusion, ..aligned }
}

fn align_by_slot(gold: &[BusinessRule], pred: &[BusinessRule]) -> (Vec<Option<usize>>, Vec<bool>) {
    let mut gold_taken = vec![false; gold.len()];
    let mut pred_match: Vec<Option<usize>> = vec![None; pred.len()];

    for (j, p) in pred.iter().enumerate() {
        let slot = normalized_slot(p);
        let exact = gold
            .iter()
            .enumerate()
            .find(|(i, g)| !gold_taken[*i] && normalized_slot(g) == slot);
        if let Some((i, _)) = exact {
            gold_taken[i] = true;
            pred_match[j] = Some(i);
        }
    }
    for (j, p) in pred.iter().enumerate() {
        if pred_match[j].is_some() {
            continue;
        }
        let tokens = slot_token_set(p);
        let mut best: Option<(usize, usize)> = None;
        for (i, g) in gold.iter().enumerate() {
            if gold_taken[i] {
                continue;
            }
            let overlap = slot_token_set(g).intersection(&tokens).count();
            if overlap > 0 && best.is_none_or(|(_, b)| overlap > b) {
                best = Some((i, overlap));
            }
        }
        if let Some((i, _)) = best {
            gold_taken[i] = true;
            pred_match[j] = Some(i);
        }
    }
    (pred_match, gold_taken)
}

/// The four dependency answers in canonical order.
pub const DEPENDENCY_CLASSES: [&str; 4] = ["sequential", "conditional", "parallel", "no"];

/// Scores pairwise dependency predictions against gold annotations.
///
/// Predictions must cover every unordered pair of the `rule_count` rules
/// exactly once; pair direction is ignored, only the relationship type is
/// compared. Pairs without a gold annotation count as gold `no`. With
/// `three_class` set, unannotated pairs are excluded instead, scoring
/// only relationship typing. Macro F1 averages over the classes present
/// in gold or prediction.
pub fn eval_dependencies(
    gold: &[DependencyLabel],
    rule_count: usize,
    predictions: &[(usize, usize, DependencyCall)],
    three_class: bool,
) -> Result<ClassificationScore, MetricsError> {
    eval_dependencies_many(&[(gold, rule_count, predictions)], three_class)
}

/// One document's material for [`eval_dependencies_many`]: gold labels,
/// the number of rules, and the predicted call per pair.
pub type DependencyItem<'a> =
    (&'a [DependencyLabel], usize, &'a [(usize, usize, DependencyCall)]);

/// Pools pairwise dependency labels from several documents into a single
/// score; each document must individually satisfy pair coverage.
pub fn eval_dependencies_many(
    items: &[DependencyItem<'_>],
    three_class: bool,
) -> Result<ClassificationScore, MetricsError> {
    let mut gold_labels = Vec::new();
    let mut pred_labels = Vec::new();
    for &(gold, rule_count, predictions) in items {
        pair_labels(
            gold,
            rule_count,
            predictions,
            three_class,
            &mut gold_labels,
            &mut pred_labels,
        )?;
    }
    macro_f1(
        &gold_labels,
        &pred_labels,
        &DEPENDENCY_CLASSES,
        MacroAveraging::PresentOnly,
    )
}

fn pair_labels(
    gold: &[DependencyLabel],
    rule_count: usize,
    predictions: &[(usize, usize, DependencyCall)],
    three_class: bool,
    gold_labels: &mut Vec<&'static str>,
    pred_labels: &mut Vec<&'static str>,
) -> Result<(), MetricsError> {
    let expected = rule_count * rule_count.saturating_sub(1) / 2;
    let coverage = |detail: String| MetricsError::PairCoverage { expected, detail };

    let mut pred_map: BTreeMap<(usize, usize), DependencyCall> = BTreeMap::new();
    for &(a, b, call) in predictions {
        if a == b {
            return Err(coverage(format!("pair ({a}, {b}) relates a rule to itself")));
        }
        if a >= rule_count || b >= rule_count {
            return Err(coverage(format!(
                "pair ({a}, {b}) is out of range for {rule_count} rules"
            )));
        }
        let key = (a.min(b), a.max(b));
        if pred_map.insert(key, call).is_some() {
            return Err(coverage(format!(
                "pair ({}, {}) is predicted more than once",
                key.0, key.1
            )));
        }
    }
    if pred_map.len() != expected {
        return Err(coverage(format!(
            "got {} distinct pairs, expected {expected}",
            pred_map.len()
        )));
    }

    let mut gold_map: BTreeMap<(usize, usize), DependencyCall> = BTreeMap::new();
    for label in gold {
        let key = (label.from.min(label.to), label.from.max(label.to));
        let call = DependencyCall::from(label.kind);
        if let Some(existing) = gold_map.insert(key, call) {
            if existing != call {
                return Err(coverage(format!(
                    "gold annotates pair ({}, {}) with conflicting kinds",
                    key.0, key.1
                )));
            }
        }
    }

    for (&key, &call) in &pred_map {
        match gold_map.get(&key) {
            Some(gold_call) => {
                gold_labels.push(gold_call.as_str());
                pred_labels.push(call.as_str());
            }
            None if !three_class => {
                gold_labels.push(DependencyCall::No.as_str());
                pred_labels.push(call.as_str());
            }
            None => {}
        }
    }
    Ok(())
}

/// Item-by-rater categorical ratings for Fleiss' kappa.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalGrid {
    rows: Vec<Vec<String>>,
}

impl CategoricalGrid {
    pub fn new(rows: Vec<Vec<String>>) -> Result<CategoricalGrid, MetricsError> {
        if rows.len() < 2 {
            return Err(MetricsError::DegenerateGrid {
                detail: format!("needs at least 2 items, got {}", rows.len()),
            });
        }
        let raters = rows[0].len();
        if raters < 2 {
            return Err(MetricsError::DegenerateGrid {
                detail: format!("needs at least 2 raters, got {raters}"),
            });
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != raters) {
            return Err(MetricsError::DegenerateGrid {
                detail: format!(
                    "row {bad} has {} ratings, expected {raters}",
                    rows[bad].len()
                ),
            });
        }
        Ok(CategoricalGrid { rows })
    }

    pub fn items(&self) -> usize {
        self.rows.len()
    }

    pub fn raters(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }
}

/// Fleiss' kappa: chance-corrected agreement for a fixed number of
/// raters labeling every item. Returns exactly 1.0 for total agreement.
pub fn fleiss_kappa(grid: &CategoricalGrid) -> Result<f64, MetricsError> {
    let n = grid.items();
    let k = grid.raters();
    let categories: BTreeSet<&String> = grid.rows.iter().flatten().collect();

    let mut pair_agreements: u64 = 0;
    let mut marginals: BTreeMap<&String, u64> = BTreeMap::new();
    for row in &grid.rows {
        let mut counts: BTreeMap<&String, u64> = BTreeMap::new();
        for rating in row {
            *counts.entry(rating).or_insert(0) += 1;
            *marginals.entry(rating).or_insert(0) += 1;
        }
        pair_agreements += counts.values().map(|&c| c * c).sum::<u64>() - k as u64;
    }
    let observed = pair_agreements as f64 / (n * k * (k - 1)) as f64;
    if observed == 1.0 {
        return Ok(1.0);
    }
    let total = (n * k) as f64;
    let mut expected = 0.0;
    for category in &categories {
        let fraction = *marginals.get(category).unwrap_or(&0) as f64 / total;
        expected += fraction * fraction;
    }
    if 1.0 - expected == 0.0 {
        return Err(MetricsError::DegenerateGrid {
            detail: "chance agreement is already 1, kappa is undefined".to_string(),
        });
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Subject-by-rater numeric ratings for intraclass correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsMatrix {
    rows: Vec<Vec<f64>>,
}

impl RatingsMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<RatingsMatrix, MetricsError> {
        if rows.len() < 2 {
            return Err(MetricsError::DegenerateMatrix {
                detail: format!("needs at least 2 subjects, got {}", rows.len()),
            });
        }
        let raters = rows[0].len();
        if raters < 2 {
            return Err(MetricsError::DegenerateMatrix {
                detail: format!("needs at least 2 raters, got {raters}"),
            });
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != raters) {
            return Err(MetricsError::DegenerateMatrix {
                detail: format!(
                    "row {bad} has {} ratings, expected {raters}",
                    rows[bad].len()
                ),
            });
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(MetricsError::DegenerateMatrix {
                detail: "ratings must be finite numbers".to_string(),
            });
        }
        Ok(RatingsMatrix { rows })
    }

    pub fn subjects(&self) -> usize {
        self.rows.len()
    }

    pub fn raters(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Which two-way random-effects intraclass correlation to report:
/// reliability of a single rater, or of the mean over all raters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IccForm {
    TwoWayRandomSingle,
    #[default]
    TwoWayRandomAverage,
}

/// Two-way random-effects intraclass correlation from a full ANOVA
/// decomposition. Raters in perfect agreement yield exactly 1.0; a
/// matrix with no variance at all has no defined reliability.
pub fn icc(matrix: &RatingsMatrix, form: IccForm) -> Result<f64, MetricsError> {
    let rows = &matrix.rows;
    let first = rows[0][0];
    if rows.iter().flatten().all(|&v| v == first) {
        return Err(MetricsError::DegenerateMatrix {
            detail: "all ratings are identical, reliability is undefined".to_string(),
        });
    }
    if rows.iter().all(|r| r.iter().all(|&v| v == r[0])) {
        return Ok(1.0);
    }

    let n = matrix.subjects();
    let k = matrix.raters();
    let nf = n as f64;
    let kf = k as f64;
    let total: f64 = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
    let grand_mean = total / (nf * kf);
    let row_means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();

    let sq = |x: f64| {
        let d = x - grand_mean;
        d * d
    };
    let ss_rows = row_means.iter().copied().map(sq).sum::<f64>() * kf;
    let ss_cols = col_means.iter().copied().map(sq).sum::<f64>() * nf;
    let ss_total: f64 = rows.iter().flatten().copied().map(sq).sum();
    let ss_error = ss_total - ss_rows - ss_cols;

    let ms_rows = ss_rows / (nf - 1.0);
    let ms_cols = ss_cols / (kf - 1.0);
    let ms_error = ss_error / ((nf - 1.0) * (kf - 1.0));

    let value = match form {
        IccForm::TwoWayRandomSingle => {
            (ms_rows - ms_error)
                / (ms_rows + (kf - 1.0) * ms_error + kf * (ms_cols - ms_error) / nf)
        }
        IccForm::TwoWayRandomAverage => {
            (ms_rows - ms_error) / (ms_rows + (ms_cols - ms_error) / nf)
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(MetricsError::DegenerateMatrix {
            detail: "variance decomposition collapsed to an undefined ratio".to_string(),
        })
    }
}

/// The full evaluation for one (model, variant) group: span scores plus
/// the optional label evaluations.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub entity: EntityScore,
    pub judgement: Option<ClassificationScore>,
    pub dependency: Option<ClassificationScore>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}
