//! Projection of structured rules onto text as BIO token tags.
//!
//! Rules store surfaces (slot types, reference values, actions) without
//! character offsets, so evaluation projects them back onto the text by
//! exact surface search and emits a named-entity style tag per token.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rule::{BusinessRule, ReferenceValues};
use crate::text::{normalize_width, tokenize};

/// The three entity kinds carried by B/I tags. Logical judgement surfaces
/// are deliberately not entities; they are scored as a classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    SlotType,
    ReferenceValue,
    Action,
}

impl EntityKind {
    pub const ALL: [EntityKind; 3] = [
        EntityKind::SlotType,
        EntityKind::ReferenceValue,
        EntityKind::Action,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::SlotType => "SlotType",
            EntityKind::ReferenceValue => "ReferenceValue",
            EntityKind::Action => "Action",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One token tag: outside, entity-begin or entity-inside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BioTag {
    O,
    B(EntityKind),
    I(EntityKind),
}

impl BioTag {
    pub fn as_label(self) -> String {
        match self {
            BioTag::O => "O".to_string(),
            BioTag::B(kind) => format!("B-{kind}"),
            BioTag::I(kind) => format!("I-{kind}"),
        }
    }
}

/// A tokenized text with one tag per token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BioSequence {
    pub tokens: Vec<String>,
    pub tags: Vec<BioTag>,
}

impl BioSequence {
    /// The maximal B-I spans as (start, end, kind) triples, end exclusive.
    pub fn entities(&self) -> Vec<(usize, usize, EntityKind)> {
        let mut spans = Vec::new();
        let mut open: Option<(usize, EntityKind)> = None;
        for (i, tag) in self.tags.iter().enumerate() {
            match *tag {
                BioTag::B(kind) => {
                    if let Some((start, k)) = open.take() {
                        spans.push((start, i, k));
                    }
                    open = Some((i, kind));
                }
                BioTag::I(kind) => {
                    // Well-formed input keeps the kind; guard anyway so
                    // foreign sequences cannot corrupt span extraction.
                    match open {
                        Some((_, k)) if k == kind => {}
                        _ => {
                            if let Some((start, k)) = open.take() {
                                spans.push((start, i, k));
                            }
                            open = Some((i, kind));
                        }
                    }
                }
                BioTag::O => {
                    if let Some((start, k)) = open.take() {
                        spans.push((start, i, k));
                    }
                }
            }
        }
        if let Some((start, k)) = open {
            spans.push((start, self.tokens.len(), k));
        }
        spans
    }
}

/// A rule surface that could not be located in the text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentWarning {
    pub rule_index: usize,
    pub role: String,
    pub surface: String,
}

impl fmt::Display for AlignmentWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rule {}: {} `{}` not found in text",
            self.rule_index, self.role, self.surface
        )
    }
}

fn norm_token(token: &str) -> String {
    normalize_width(token).to_lowercase()
}

/// Tokens allowed inside a merged multi-value span: list punctuation and
/// connector words.
fn is_connector(token: &str) -> bool {
    let t = norm_token(token);
    t.chars().all(|c| !c.is_alphanumeric())
        || matches!(t.as_str(), "and" | "or" | "etc" | "和" | "或" | "等")
}

struct Target {
    rule_index: usize,
    role: &'static str,
    rank: usize,
    surface: String,
    tokens: Vec<String>,
}

/// Projects rules onto text as a BIO sequence.
///
/// Each surface (slot type, every reference value, the action) is searched
/// as a normalized token subsequence: longest surfaces first, first
/// occurrence wins, and tokens already claimed by another surface are
/// skipped. Reference values of one rule that sit adjacent in the text,
/// separated only by punctuation or connector words (`and`, `or`, `etc`,
/// `和`, `或`, `等`), merge into a single entity span, which matches how
/// annotators mark option lists like `RMB, USD, JPY`. Surfaces that never
/// match produce warnings, not errors.
pub fn rules_to_bio(text: &str, rules: &[BusinessRule]) -> (BioSequence, Vec<AlignmentWarning>) {
    let tokens: Vec<String> = tokenize(text).into_iter().map(|t| t.text).collect();
    let norm: Vec<String> = tokens.iter().map(|t| norm_token(t)).collect();

    let mut targets: Vec<Target> = Vec::new();
    for (rule_index, rule) in rules.iter().enumerate() {
        let mut push = |role: &'static str, rank: usize, surface: &str| {
            let toks: Vec<String> = tokenize(surface)
                .into_iter()
                .map(|t| norm_token(&t.text))
                .collect();
            if !toks.is_empty() {
                targets.push(Target {
                    rule_index,
                    role,
                    rank,
                    surface: surface.to_string(),
                    tokens: toks,
                });
            }
        };
        push("slot type", 0, &rule.condition.slot_type);
        match &rule.condition.reference {
            ReferenceValues::Enumeration(values) => {
                for (k, value) in values.iter().enumerate() {
                    push("reference value", 1 + k, value);
                }
            }
            ReferenceValues::Numeric(numeric) => {
                push("reference value", 1, &numeric.to_string());
            }
        }
        if let Some(action) = &rule.action {
            push("action", usize::MAX, action);
        }
    }
    targets.sort_by(|a, b| {
        b.tokens
            .len()
            .cmp(&a.tokens.len())
            .then(a.rule_index.cmp(&b.rule_index))
            .then(a.rank.cmp(&b.rank))
    });

    let mut claimed = vec![false; tokens.len()];
    let mut warnings = Vec::new();
    // Located spans: (rule_index, kind, start, end). Value spans may merge.
    let mut spans: Vec<(usize, EntityKind, usize, usize)> = Vec::new();

    for target in &targets {
        let len = target.tokens.len();
        let kind = match target.role {
            "slot type" => EntityKind::SlotType,
            "reference value" => EntityKind::ReferenceValue,
            _ => EntityKind::Action,
        };
        let mut found = None;
        if len <= norm.len() {
            'scan: for start in 0..=(norm.len() - len) {
                for k in 0..len {
                    if claimed[start + k] || norm[start + k] != target.tokens[k] {
                        continue 'scan;
                    }
                }
                found = Some(start);
                break;
            }
        }
        match found {
            Some(start) => {
                for slot in claimed.iter_mut().skip(start).take(len) {
                    *slot = true;
                }
                spans.push((target.rule_index, kind, start, start + len));
            }
            None => warnings.push(AlignmentWarning {
                rule_index: target.rule_index,
                role: target.role.to_string(),
                surface: target.surface.clone(),
            }),
        }
    }

    // Merge each rule's reference-value spans across connector-only gaps.
    spans.sort_by_key(|&(rule, kind, start, _)| (rule, kind, start));
    let mut merged: Vec<(EntityKind, usize, usize)> = Vec::new();
    let mut i = 0;
    while i < spans.len() {
        let (rule, kind, start, mut end) = spans[i];
        i += 1;
        if kind == EntityKind::ReferenceValue {
            while i < spans.len() {
                let (next_rule, next_kind, next_start, next_end) = spans[i];
                if next_rule != rule || next_kind != kind || next_start < end {
                    break;
                }
                let gap_is_connectors = (end..next_start)
                    .all(|t| !claimed[t] && is_connector(&tokens[t]));
                if !gap_is_connectors {
                    break;
                }
                for slot in claimed.iter_mut().take(next_start).skip(end) {
                    *slot = true;
                }
                end = next_end;
                i += 1;
            }
        }
        merged.push((kind, start, end));
    }

    let mut tags = vec![BioTag::O; tokens.len()];
    for (kind, start, end) in merged {
        tags[start] = BioTag::B(kind);
        for tag in tags.iter_mut().take(end).skip(start + 1) {
            *tag = BioTag::I(kind);
        }
    }

    (BioSequence { tokens, tags }, warnings)
}

/// Renders BIO sequences in the token-per-line export format:
/// `token<TAB>TAG` lines, one blank line between documents.
pub fn render_bio_export(sequences: &[BioSequence]) -> String {
    let mut out = String::new();
    for (i, seq) in sequences.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (token, tag) in seq.tokens.iter().zip(&seq.tags) {
            out.push_str(token);
            out.push('\t');
            out.push_str(&tag.as_label());
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::{LogicalJudgement, NumericValue};

    fn enum_rule(slot: &str, values: &[&str], action: Option<&str>) -> BusinessRule {
        BusinessRule::new(
            slot,
            LogicalJudgement::Contains,
            ReferenceValues::Enumeration(values.iter().map(|v| v.to_string()).collect()),
            action,
        )
    }

    fn tag_of<'a>(seq: &'a BioSequence, token: &str) -> &'a BioTag {
        let idx = seq.tokens.iter().position(|t| t == token).unwrap();
        &seq.tags[idx]
    }

    #[test]
    fn empty_rules_give_all_o() {
        let (seq, warnings) = rules_to_bio("Choose a payment method.", &[]);
        assert!(warnings.is_empty());
        assert!(seq.tags.iter().all(|t| *t == BioTag::O));
        assert_eq!(seq.tokens.len(), seq.tags.len());
    }

    #[test]
    fn slot_values_and_action_are_tagged() {
        let text = "Passengers select the flight type, including domestic flight and \
                    international flight, then fill in travel information.";
        let rules = [enum_rule(
            "Flight Type",
            &["domestic flight", "international flight"],
            Some("fill in travel information"),
        )];
        let (seq, warnings) = rules_to_bio(text, &rules);
        assert!(warnings.is_empty());
        assert_eq!(*tag_of(&seq, "flight"), BioTag::B(EntityKind::SlotType));
        assert_eq!(*tag_of(&seq, "type"), BioTag::I(EntityKind::SlotType));
        assert_eq!(*tag_of(&seq, "domestic"), BioTag::B(EntityKind::ReferenceValue));
        assert_eq!(*tag_of(&seq, "fill"), BioTag::B(EntityKind::Action));
        assert_eq!(*tag_of(&seq, "information"), BioTag::I(EntityKind::Action));
    }

    #[test]
    fn value_list_merges_into_one_span_across_connectors() {
        let text = "Payment methods include WeChat Pay, Alipay, and credit card.";
        let rules = [enum_rule("Payment methods", &["WeChat Pay", "Alipay", "credit card"], None)];
        let (seq, _) = rules_to_bio(text, &rules);
        let entities = seq.entities();
        let value_spans: Vec<_> = entities
            .iter()
            .filter(|(_, _, k)| *k == EntityKind::ReferenceValue)
            .collect();
        assert_eq!(value_spans.len(), 1, "expected one merged span, got {entities:?}");
        assert_eq!(*tag_of(&seq, "WeChat"), BioTag::B(EntityKind::ReferenceValue));
        assert_eq!(*tag_of(&seq, "Alipay"), BioTag::I(EntityKind::ReferenceValue));
        assert_eq!(*tag_of(&seq, "credit"), BioTag::I(EntityKind::ReferenceValue));
    }

    #[test]
    fn values_of_different_rules_do_not_merge() {
        let text = "Options are red and blue.";
        let rules = [
            enum_rule("first", &["red"], None),
            enum_rule("second", &["blue"], None),
        ];
        let (seq, _) = rules_to_bio(text, &rules);
        let value_spans = seq
            .entities()
            .into_iter()
            .filter(|(_, _, k)| *k == EntityKind::ReferenceValue)
            .count();
        assert_eq!(value_spans, 2);
    }

    #[test]
    fn missing_action_surface_becomes_a_warning() {
        let text = "Select the vehicle type.";
        let rules = [enum_rule("vehicle type", &["sedan"], Some("purchase insurance"))];
        let (seq, warnings) = rules_to_bio(text, &rules);
        assert_eq!(warnings.len(), 2); // "sedan" and the action are absent
        assert!(warnings.iter().any(|w| w.role == "action"));
        assert_eq!(*tag_of(&seq, "vehicle"), BioTag::B(EntityKind::SlotType));
    }

    #[test]
    fn longer_surfaces_claim_tokens_before_shorter_ones() {
        let text = "Provide the purchase amount now.";
        let rules = [
            BusinessRule::new(
                "purchase amount",
                LogicalJudgement::GreaterThan,
                ReferenceValues::Numeric(NumericValue { value: "0".to_string(), unit: None }),
                None,
            ),
            enum_rule("payment", &["cash"], Some("Provide the purchase amount")),
        ];
        let (seq, warnings) = rules_to_bio(text, &rules);
        // The 4-token action wins the only occurrence; the 2-token slot
        // type finds no unclaimed match and is reported.
        assert_eq!(*tag_of(&seq, "Provide"), BioTag::B(EntityKind::Action));
        assert!(warnings
            .iter()
            .any(|w| w.role == "slot type" && w.surface == "purchase amount"));
    }

    #[test]
    fn matching_is_case_insensitive_and_width_normalized() {
        let text = "The cash or remittance type includes cash and remittance.";
        let rules = [enum_rule("The cash or remittance type", &["cash", "remittance"], None)];
        let (seq, warnings) = rules_to_bio(text, &rules);
        assert!(warnings.is_empty());
        assert_eq!(seq.tags[0], BioTag::B(EntityKind::SlotType));
        let value_spans = seq
            .entities()
            .into_iter()
            .filter(|(_, _, k)| *k == EntityKind::ReferenceValue)
            .count();
        assert_eq!(value_spans, 1);
    }

    #[test]
    fn output_is_well_formed_bio() {
        let text = "Choose currency: RMB, USD or JPY. Then provide the amount.";
        let rules = [
            enum_rule("currency", &["RMB", "USD", "JPY"], Some("provide the amount")),
            enum_rule("amount", &["USD"], None),
        ];
        let (seq, _) = rules_to_bio(text, &rules);
        let mut previous: Option<BioTag> = None;
        for tag in &seq.tags {
            if let BioTag::I(kind) = tag {
                match previous {
                    Some(BioTag::B(prev)) | Some(BioTag::I(prev)) => assert_eq!(prev, *kind),
                    other => panic!("orphan I tag after {other:?}"),
                }
            }
            previous = Some(*tag);
        }
    }

    #[test]
    fn export_format_is_token_tab_tag_with_blank_separators() {
        let (a, _) = rules_to_bio("Pick red.", &[enum_rule("color", &["red"], None)]);
        let (b, _) = rules_to_bio("Done.", &[]);
        let rendered = render_bio_export(&[a, b]);
        assert_eq!(
            rendered,
            "Pick\tO\nred\tB-ReferenceValue\n.\tO\n\nDone\tO\n.\tO\n"
        );
    }

    #[test]
    fn chinese_rules_project_onto_chinese_text() {
        let text = "客户选择币种，包含美元和日元。";
        let rules = [enum_rule("币种", &["美元", "日元"], None)];
        let (seq, warnings) = rules_to_bio(text, &rules);
        assert!(warnings.is_empty());
        assert_eq!(*tag_of(&seq, "币"), BioTag::B(EntityKind::SlotType));
        assert_eq!(*tag_of(&seq, "种"), BioTag::I(EntityKind::SlotType));
        // 美元和日元 merges across the connector 和 into one value span.
        let value_spans = seq
            .entities()
            .into_iter()
            .filter(|(_, _, k)| *k == EntityKind::ReferenceValue)
            .count();
        assert_eq!(value_spans, 1);
    }
}
