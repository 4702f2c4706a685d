//! Business rule types and the `< <Condition>, Action>` notation.
//!
//! A rule pairs a condition with the action taken once the condition is met.
//! The condition is a triple of slot type, logical judgement and reference
//! values. Rules have a canonical one-line notation used in prompts and
//! model responses:
//!
//! ```text
//! < <Flight Type, includes, domestic flight, international flight>, fill in travel information>
//! ```
//!
//! `parse_rule` accepts the notation with tolerance for the noise real model
//! output carries (leading list numbering, full-width brackets and commas,
//! a missing final `>`), while `format_rule` always emits the canonical
//! form, so `parse(format(rule)) == rule` for every valid rule.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::text::normalize_width;

/// The relation a condition tests between a slot type and its reference
/// values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LogicalJudgement {
    Contains,
    EqualTo,
    LessThan,
    GreaterThan,
    LessThanOrEqual,
    GreaterThanOrEqual,
}

impl LogicalJudgement {
    pub const ALL: [LogicalJudgement; 6] = [
        LogicalJudgement::Contains,
        LogicalJudgement::EqualTo,
        LogicalJudgement::LessThan,
        LogicalJudgement::GreaterThan,
        LogicalJudgement::LessThanOrEqual,
        LogicalJudgement::GreaterThanOrEqual,
    ];

    /// The surface form used when formatting rules and serializing.
    pub fn canonical_surface(self) -> &'static str {
        match self {
            LogicalJudgement::Contains => "includes",
            LogicalJudgement::EqualTo => "equal to",
            LogicalJudgement::LessThan => "less than",
            LogicalJudgement::GreaterThan => "greater than",
            LogicalJudgement::LessThanOrEqual => "less than or equal to",
            LogicalJudgement::GreaterThanOrEqual => "greater than or equal to",
        }
    }

    /// True for the four judgements that compare against a numeric threshold.
    pub fn is_comparison(self) -> bool {
        !matches!(self, LogicalJudgement::Contains | LogicalJudgement::EqualTo)
    }
}

fn synonym_table() -> &'static BTreeMap<&'static str, LogicalJudgement> {
    static TABLE: OnceLock<BTreeMap<&'static str, LogicalJudgement>> = OnceLock::new();
    TABLE.get_or_init(|| {
        use LogicalJudgement::*;
        let mut t = BTreeMap::new();
        for (name, judgement) in [
            ("includes", Contains),
            ("include", Contains),
            ("contains", Contains),
            ("contain", Contains),
            ("包含", Contains),
            ("含有", Contains),
            ("equal to", EqualTo),
            ("equals", EqualTo),
            ("equal", EqualTo),
            ("is", EqualTo),
            ("=", EqualTo),
            ("==", EqualTo),
            ("等于", EqualTo),
            ("为", EqualTo),
            ("less than", LessThan),
            ("<", LessThan),
            ("below", LessThan),
            ("under", LessThan),
            ("小于", LessThan),
            ("greater than", GreaterThan),
            (">", GreaterThan),
            ("above", GreaterThan),
            ("over", GreaterThan),
            ("exceeds", GreaterThan),
            ("more than", GreaterThan),
            ("大于", GreaterThan),
            ("less than or equal to", LessThanOrEqual),
            ("<=", LessThanOrEqual),
            ("≤", LessThanOrEqual),
            ("at most", LessThanOrEqual),
            ("no more than", LessThanOrEqual),
            ("小于等于", LessThanOrEqual),
            ("不超过", LessThanOrEqual),
            ("greater than or equal to", GreaterThanOrEqual),
            (">=", GreaterThanOrEqual),
            ("≥", GreaterThanOrEqual),
            ("at least", GreaterThanOrEqual),
            ("no less than", GreaterThanOrEqual),
            ("大于等于", GreaterThanOrEqual),
            ("不小于", GreaterThanOrEqual),
        ] {
            t.insert(name, judgement);
        }
        t
    })
}

/// Maps a judgement surface form (canonical name, synonym, comparison symbol
/// or Chinese form) onto the judgement it denotes. Matching is
/// case-insensitive and ignores surrounding whitespace.
pub fn canonicalize_judgement(surface: &str) -> Option<LogicalJudgement> {
    let key = surface.trim().to_lowercase();
    synonym_table().get(key.as_str()).copied()
}

impl fmt::Display for LogicalJudgement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_surface())
    }
}

impl FromStr for LogicalJudgement {
    type Err = RuleParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        canonicalize_judgement(s).ok_or_else(|| RuleParseError::UnknownJudgement {
            surface: s.trim().to_string(),
        })
    }
}

impl Serialize for LogicalJudgement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.canonical_surface())
    }
}

impl<'de> Deserialize<'de> for LogicalJudgement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let surface = String::deserialize(deserializer)?;
        canonicalize_judgement(&surface)
            .ok_or_else(|| D::Error::custom(format!("unknown logical judgement `{surface}`")))
    }
}

/// A numeric threshold kept as the verbatim digit string (grouping commas
/// and decimal point preserved) plus an optional unit phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericValue {
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl fmt::Display for NumericValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.unit {
            Some(unit) => write!(f, "{unit} {}", self.value),
            None => f.write_str(&self.value),
        }
    }
}

/// Reference values of a condition: either an enumeration of discrete
/// options or a single numeric threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
pub enum ReferenceValues {
    Enumeration(Vec<String>),
    Numeric(NumericValue),
}

impl ReferenceValues {
    /// The reference value surfaces in notation order. Numeric references
    /// yield their single `unit value` rendering.
    pub fn surfaces(&self) -> Vec<String> {
        match self {
            ReferenceValues::Enumeration(values) => values.clone(),
            ReferenceValues::Numeric(n) => vec![n.to_string()],
        }
    }
}

/// The trigger of a business rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub slot_type: String,
    pub judgement: LogicalJudgement,
    pub reference: ReferenceValues,
}

/// A `<Condition, Action>` pair. `action` is `None` for terminal rules,
/// written as the literal `None` in notation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusinessRule {
    pub condition: Condition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
}

impl BusinessRule {
    pub fn new(
        slot_type: impl Into<String>,
        judgement: LogicalJudgement,
        reference: ReferenceValues,
        action: Option<&str>,
    ) -> Self {
        BusinessRule {
            condition: Condition {
                slot_type: slot_type.into(),
                judgement,
                reference,
            },
            action: action.map(str::to_string),
        }
    }
}

impl fmt::Display for BusinessRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rule(self))
    }
}

/// Renders a rule in canonical notation. Single space after each comma,
/// `None` for an absent action, no surrounding whitespace.
pub fn format_rule(rule: &BusinessRule) -> String {
    let cond = &rule.condition;
    let values = cond.reference.surfaces().join(", ");
    let action = rule.action.as_deref().unwrap_or("None");
    format!(
        "< <{}, {}, {}>, {}>",
        cond.slot_type,
        cond.judgement.canonical_surface(),
        values,
        action
    )
}

/// Errors from parsing rule notation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleParseError {
    #[error("rule notation needs the form `< <condition>, action>`: `{line}`")]
    MissingBrackets { line: String },
    #[error("condition needs slot type, judgement and at least one reference value: `{inner}`")]
    MissingFields { inner: String },
    #[error("unknown logical judgement `{surface}`")]
    UnknownJudgement { surface: String },
    #[error("rule is missing the action field (use `None` for terminal rules): `{line}`")]
    MissingAction { line: String },
    #[error("empty {field} in rule notation")]
    EmptyField { field: &'static str },
    #[error("comparison judgement needs a numeric reference value, got `{text}`")]
    MissingNumber { text: String },
}

fn strip_list_numbering(line: &str) -> &str {
    let trimmed = line.trim_start();
    let digits = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return trimmed;
    }
    let rest = &trimmed[digits..];
    for marker in [". ", ".", "、", ") ", ")", "．"] {
        if let Some(after) = rest.strip_prefix(marker) {
            return after.trim_start();
        }
    }
    trimmed
}

fn strip_leading_connector(value: &str) -> &str {
    let v = value.trim();
    for connector in ["and ", "or ", "and　", "or　"] {
        if v.len() > connector.len()
            && v.is_char_boundary(connector.len())
            && v[..connector.len()].eq_ignore_ascii_case(connector)
        {
            return v[connector.len()..].trim_start();
        }
    }
    v
}

/// Extracts the first decimal number (digits with optional grouping commas
/// and one decimal point) from a comparison reference, keeping the verbatim
/// digit string; the surrounding text becomes the unit.
fn parse_numeric_reference(text: &str) -> Result<NumericValue, RuleParseError> {
    let bytes = text.as_bytes();
    let start = match bytes.iter().position(|b| b.is_ascii_digit()) {
        Some(i) => i,
        None => {
            return Err(RuleParseError::MissingNumber {
                text: text.to_string(),
            })
        }
    };
    let mut end = start;
    let mut seen_dot = false;
    while end < bytes.len() {
        let b = bytes[end];
        if b.is_ascii_digit()
            || (b == b',' && end + 1 < bytes.len() && bytes[end + 1].is_ascii_digit())
        {
            end += 1;
        } else if b == b'.' && !seen_dot && end + 1 < bytes.len() && bytes[end + 1].is_ascii_digit()
        {
            seen_dot = true;
            end += 1;
        } else {
            break;
        }
    }
    let value = text[start..end].to_string();
    let prefix = text[..start].trim();
    let suffix = text[end..].trim();
    let unit = match (prefix.is_empty(), suffix.is_empty()) {
        (true, true) => None,
        (false, true) => Some(prefix.to_string()),
        (true, false) => Some(suffix.to_string()),
        (false, false) => Some(format!("{prefix} {suffix}")),
    };
    Ok(NumericValue { value, unit })
}

/// Parses one line of rule notation.
///
/// Tolerated deviations from the canonical form: leading list numbering
/// (`3.`, `2)`, `1、`), full-width brackets and commas, irregular spacing,
/// a missing closing `>`, and judgement synonyms (`equals`, `contains`,
/// `>=`, `小于` and the like). The parsed rule always formats back to
/// canonical notation.
pub fn parse_rule(line: &str) -> Result<BusinessRule, RuleParseError> {
    let normalized = normalize_width(line);
    let s = strip_list_numbering(normalized.trim());
    let err_line = || RuleParseError::MissingBrackets {
        line: line.trim().to_string(),
    };

    let rest = s.strip_prefix('<').ok_or_else(err_line)?.trim_start();
    let inner_rest = rest.strip_prefix('<').ok_or_else(err_line)?;
    let close = inner_rest.find('>').ok_or_else(err_line)?;
    let inner = &inner_rest[..close];
    let after = inner_rest[close + 1..].trim_start();

    let action_part = after
        .strip_prefix(',')
        .ok_or_else(|| RuleParseError::MissingAction {
            line: line.trim().to_string(),
        })?;
    let mut action_text = action_part.trim();
    if let Some(stripped) = action_text.strip_suffix('>') {
        action_text = stripped.trim_end();
    }
    if action_text.is_empty() {
        return Err(RuleParseError::EmptyField { field: "action" });
    }
    let action = if action_text.eq_ignore_ascii_case("none") || action_text == "无" {
        None
    } else {
        Some(action_text.to_string())
    };

    let first_comma = inner.find(',').ok_or_else(|| RuleParseError::MissingFields {
        inner: inner.trim().to_string(),
    })?;
    let slot_type = inner[..first_comma].trim();
    if slot_type.is_empty() {
        return Err(RuleParseError::EmptyField { field: "slot type" });
    }
    let after_slot = &inner[first_comma + 1..];
    let second_comma = after_slot
        .find(',')
        .ok_or_else(|| RuleParseError::MissingFields {
            inner: inner.trim().to_string(),
        })?;
    let judgement_text = after_slot[..second_comma].trim();
    let judgement = LogicalJudgement::from_str(judgement_text)?;
    let value_text = &after_slot[second_comma + 1..];

    let reference = if judgement.is_comparison() {
        // The remainder stays one field so grouping commas in numbers like
        // `10,000` survive.
        ReferenceValues::Numeric(parse_numeric_reference(value_text.trim())?)
    } else {
        let mut values = Vec::new();
        for raw in value_text.split(',') {
            let value = strip_leading_connector(raw);
            if value.is_empty() {
                return Err(RuleParseError::EmptyField {
                    field: "reference value",
                });
            }
            values.push(value.to_string());
        }
        ReferenceValues::Enumeration(values)
    };

    Ok(BusinessRule {
        condition: Condition {
            slot_type: slot_type.to_string(),
            judgement,
            reference,
        },
        action,
    })
}

/// A parsed block of model output: the rules recovered from notation lines
/// plus a description of every fragment that failed to parse.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedBlock {
    pub rules: Vec<BusinessRule>,
    pub issues: Vec<String>,
}

fn opens_fragment(line: &str) -> bool {
    let normalized = normalize_width(line);
    strip_list_numbering(&normalized).starts_with('<')
}

fn bracket_depth(fragment: &str) -> i64 {
    normalize_width(fragment).chars().fold(0, |depth, ch| match ch {
        '<' => depth + 1,
        '>' => (depth - 1).max(0),
        _ => depth,
    })
}

/// Scans free-form model output for rule notation lines and parses each.
///
/// A line opens a fragment when (after numbering and width normalization)
/// it starts with `<`; the fragment continues over following lines while
/// its angle brackets stay unbalanced, so a rule wrapped across lines is
/// still recovered. Prose lines outside fragments are ignored. Fragments
/// that fail to parse are reported in `issues` and skipped.
pub fn parse_rule_block(text: &str) -> ParsedBlock {
    let mut block = ParsedBlock::default();
    let mut fragment: Option<(usize, String)> = None;

    let finish = |fragment: &mut Option<(usize, String)>, block: &mut ParsedBlock| {
        if let Some((line_no, frag)) = fragment.take() {
            match parse_rule(&frag) {
                Ok(rule) => block.rules.push(rule),
                Err(err) => block.issues.push(format!("line {line_no}: {err}")),
            }
        }
    };

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        match &mut fragment {
            Some((_, frag)) => {
                frag.push(' ');
                frag.push_str(line.trim());
                if bracket_depth(frag) == 0 {
                    finish(&mut fragment, &mut block);
                }
            }
            None => {
                if line.trim().is_empty() || !opens_fragment(line) {
                    continue;
                }
                let frag = line.trim().to_string();
                if bracket_depth(&frag) == 0 {
                    fragment = Some((line_no, frag));
                    finish(&mut fragment, &mut block);
                } else {
                    fragment = Some((line_no, frag));
                }
            }
        }
    }
    finish(&mut fragment, &mut block);
    block
}

/// A problem found by [`validate_rule`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn check_text_field(issues: &mut Vec<ValidationIssue>, field: &str, value: &str, allow_comma: bool) {
    if value.trim().is_empty() {
        issues.push(ValidationIssue {
            field: field.to_string(),
            message: "must not be empty".to_string(),
        });
        return;
    }
    if value != value.trim() {
        issues.push(ValidationIssue {
            field: field.to_string(),
            message: "must not have leading or trailing whitespace".to_string(),
        });
    }
    if value.contains(['<', '>']) {
        issues.push(ValidationIssue {
            field: field.to_string(),
            message: "must not contain angle brackets".to_string(),
        });
    }
    if value.contains('\n') {
        issues.push(ValidationIssue {
            field: field.to_string(),
            message: "must not span lines".to_string(),
        });
    }
    if !allow_comma && value.contains(',') {
        issues.push(ValidationIssue {
            field: field.to_string(),
            message: "must not contain commas".to_string(),
        });
    }
}

fn is_valid_number(value: &str) -> bool {
    let (int_part, frac_part) = match value.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (value, None),
    };
    let int_ok = !int_part.is_empty()
        && int_part.chars().all(|c| c.is_ascii_digit() || c == ',')
        && int_part.starts_with(|c: char| c.is_ascii_digit())
        && int_part.ends_with(|c: char| c.is_ascii_digit())
        && !int_part.contains(",,");
    let frac_ok = match frac_part {
        Some(f) => !f.is_empty() && f.chars().all(|c| c.is_ascii_digit()),
        None => true,
    };
    int_ok && frac_ok
}

/// Checks that a rule stays inside the domain the notation can round-trip:
/// trimmed non-empty fields, no stray angle brackets, enumeration values
/// without commas or leading connectors, digit-free units, a well-formed
/// number string, the action sentinel spelled as an absent action, and a
/// reference kind that matches the judgement (enumerations for `includes`
/// and `equal to`, numeric thresholds for the comparisons).
pub fn validate_rule(rule: &BusinessRule) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let cond = &rule.condition;
    check_text_field(&mut issues, "slot type", &cond.slot_type, false);

    match (&cond.reference, cond.judgement.is_comparison()) {
        (ReferenceValues::Enumeration(_), true) => issues.push(ValidationIssue {
            field: "reference".to_string(),
            message: format!(
                "judgement `{}` needs a numeric reference",
                cond.judgement.canonical_surface()
            ),
        }),
        (ReferenceValues::Numeric(_), false) => issues.push(ValidationIssue {
            field: "reference".to_string(),
            message: format!(
                "judgement `{}` needs an enumeration reference",
                cond.judgement.canonical_surface()
            ),
        }),
        _ => {}
    }

    match &cond.reference {
        ReferenceValues::Enumeration(values) => {
            if values.is_empty() {
                issues.push(ValidationIssue {
                    field: "reference".to_string(),
                    message: "enumeration needs at least one value".to_string(),
                });
            }
            for value in values {
                check_text_field(&mut issues, "reference value", value, false);
                let lowered = value.to_lowercase();
                if lowered.starts_with("and ") || lowered.starts_with("or ") {
                    issues.push(ValidationIssue {
                        field: "reference value".to_string(),
                        message: format!("`{value}` starts with a connector the parser strips"),
                    });
                }
                if value.eq_ignore_ascii_case("none") || value == "无" {
                    issues.push(ValidationIssue {
                        field: "reference value".to_string(),
                        message: "collides with the absent-action sentinel".to_string(),
                    });
                }
            }
        }
        ReferenceValues::Numeric(numeric) => {
            if !is_valid_number(&numeric.value) {
                issues.push(ValidationIssue {
                    field: "numeric value".to_string(),
                    message: format!("`{}` is not a plain decimal number", numeric.value),
                });
            }
            if let Some(unit) = &numeric.unit {
                check_text_field(&mut issues, "unit", unit, false);
                if unit.chars().any(|c| c.is_ascii_digit()) {
                    issues.push(ValidationIssue {
                        field: "unit".to_string(),
                        message: "must not contain digits (the first numeral is the value)"
                            .to_string(),
                    });
                }
            }
        }
    }

    if let Some(action) = &rule.action {
        check_text_field(&mut issues, "action", action, true);
        if action.eq_ignore_ascii_case("none") || action == "无" {
            issues.push(ValidationIssue {
                field: "action".to_string(),
                message: "spell an absent action as a missing field, not the sentinel".to_string(),
            });
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enumeration(values: &[&str]) -> ReferenceValues {
        ReferenceValues::Enumeration(values.iter().map(|v| v.to_string()).collect())
    }

    #[test]
    fn format_matches_canonical_notation() {
        let rule = BusinessRule::new(
            "Flight Type",
            LogicalJudgement::Contains,
            enumeration(&["domestic flight", "international flight"]),
            Some("fill in travel information"),
        );
        assert_eq!(
            format_rule(&rule),
            "< <Flight Type, includes, domestic flight, international flight>, fill in travel information>"
        );
    }

    #[test]
    fn format_spells_terminal_action_as_none() {
        let rule = BusinessRule::new(
            "Number of Passengers",
            LogicalJudgement::Contains,
            enumeration(&["single", "multiple"]),
            None,
        );
        assert_eq!(
            format_rule(&rule),
            "< <Number of Passengers, includes, single, multiple>, None>"
        );
    }

    #[test]
    fn parse_round_trips_canonical_form() {
        let rule = BusinessRule::new(
            "Cabin Class",
            LogicalJudgement::Contains,
            enumeration(&["economy class", "business class", "first class"]),
            Some("provide the number of travelers and payment method"),
        );
        assert_eq!(parse_rule(&format_rule(&rule)).unwrap(), rule);
    }

    #[test]
    fn parse_accepts_equals_synonym() {
        let rule = parse_rule(
            "< <Business Type, equals, Regular Current Deposit>, Choose currency for regular current deposit>",
        )
        .unwrap();
        assert_eq!(rule.condition.judgement, LogicalJudgement::EqualTo);
        assert_eq!(
            format_rule(&rule),
            "< <Business Type, equal to, Regular Current Deposit>, Choose currency for regular current deposit>"
        );
    }

    #[test]
    fn parse_strips_list_numbering() {
        for line in [
            "1. < <Payment Method, includes, WeChat Pay, Alipay>, None>",
            "2) < <Payment Method, includes, WeChat Pay, Alipay>, None>",
            "3、< <Payment Method, includes, WeChat Pay, Alipay>, None>",
        ] {
            let rule = parse_rule(line).unwrap();
            assert_eq!(rule.condition.slot_type, "Payment Method");
        }
    }

    #[test]
    fn parse_accepts_fullwidth_punctuation() {
        let rule = parse_rule("＜ ＜币种，包含，美元，日元＞，选择钞汇类型＞").unwrap();
        assert_eq!(rule.condition.slot_type, "币种");
        assert_eq!(rule.condition.judgement, LogicalJudgement::Contains);
        assert_eq!(rule.condition.reference, enumeration(&["美元", "日元"]));
        assert_eq!(rule.action.as_deref(), Some("选择钞汇类型"));
    }

    #[test]
    fn parse_tolerates_missing_final_bracket() {
        let rule = parse_rule("< <Invoice Type, includes, electronic invoice>, None").unwrap();
        assert_eq!(rule.action, None);
    }

    #[test]
    fn parse_strips_leading_connectors_from_values() {
        let rule =
            parse_rule("< <Payment Method, includes, WeChat Pay, Alipay, or credit card>, None>")
                .unwrap();
        assert_eq!(
            rule.condition.reference,
            enumeration(&["WeChat Pay", "Alipay", "credit card"])
        );
    }

    #[test]
    fn parse_keeps_grouping_commas_in_numbers() {
        let rule = parse_rule(
            "< <Deposit Amount, less than or equal to, equivalent of USD 10,000>, Provide valid ID document>",
        )
        .unwrap();
        assert_eq!(
            rule.condition.reference,
            ReferenceValues::Numeric(NumericValue {
                value: "10,000".to_string(),
                unit: Some("equivalent of USD".to_string()),
            })
        );
        assert_eq!(
            format_rule(&rule),
            "< <Deposit Amount, less than or equal to, equivalent of USD 10,000>, Provide valid ID document>"
        );
    }

    #[test]
    fn parse_reads_bare_and_decimal_numbers() {
        let rule = parse_rule("< <purchase amount, greater than, 0>, None>").unwrap();
        assert_eq!(
            rule.condition.reference,
            ReferenceValues::Numeric(NumericValue { value: "0".to_string(), unit: None })
        );
        let rule = parse_rule("< <rate, less than, 3.5 percent>, None>").unwrap();
        assert_eq!(
            rule.condition.reference,
            ReferenceValues::Numeric(NumericValue {
                value: "3.5".to_string(),
                unit: Some("percent".to_string()),
            })
        );
    }

    #[test]
    fn parse_rejects_comparison_without_number() {
        let err = parse_rule("< <amount, greater than, a lot>, None>").unwrap_err();
        assert!(matches!(err, RuleParseError::MissingNumber { .. }));
    }

    #[test]
    fn parse_rejects_prose() {
        assert!(matches!(
            parse_rule("The customer chooses a payment method."),
            Err(RuleParseError::MissingBrackets { .. })
        ));
        assert!(matches!(
            parse_rule("< <Payment Method, includes, Alipay> >"),
            Err(RuleParseError::MissingAction { .. })
        ));
        assert!(matches!(
            parse_rule("< <Payment Method, includes>, None>"),
            Err(RuleParseError::MissingFields { .. })
        ));
        assert!(matches!(
            parse_rule("< <Payment Method, resembles, Alipay>, None>"),
            Err(RuleParseError::UnknownJudgement { .. })
        ));
    }

    #[test]
    fn parse_treats_chinese_none_as_absent_action() {
        let rule = parse_rule("< <币种, 包含, 美元>, 无>").unwrap();
        assert_eq!(rule.action, None);
    }

    #[test]
    fn block_parsing_skips_prose_and_collects_rules() {
        let output = "Explain: the text describes two steps.\n\
                      Output:\n\
                      1. < <Flight Type, includes, domestic flight, international flight>, fill in travel information>\n\
                      2. < <Travel Information, includes, departure city, destination city>, None>\n";
        let block = parse_rule_block(output);
        assert_eq!(block.rules.len(), 2);
        assert!(block.issues.is_empty());
        assert_eq!(block.rules[0].condition.slot_type, "Flight Type");
    }

    #[test]
    fn block_parsing_joins_wrapped_lines() {
        let output = "< <Cabin Class, includes, economy class,\n\
                      business class, first class>, choose a seat>";
        let block = parse_rule_block(output);
        assert_eq!(block.rules.len(), 1);
        assert_eq!(
            block.rules[0].condition.reference,
            ReferenceValues::Enumeration(vec![
                "economy class".to_string(),
                "business class".to_string(),
                "first class".to_string(),
            ])
        );
    }

    #[test]
    fn block_parsing_reports_bad_fragments_with_line_numbers() {
        let output = "Output:\n< <Payment Method, resembles, Alipay>, None>\n< <Invoice Type, includes, paper invoice>, None>";
        let block = parse_rule_block(output);
        assert_eq!(block.rules.len(), 1);
        assert_eq!(block.issues.len(), 1);
        assert!(block.issues[0].starts_with("line 2:"), "{}", block.issues[0]);
    }

    #[test]
    fn validate_accepts_well_formed_rules() {
        let rule = BusinessRule::new(
            "Deposit Amount",
            LogicalJudgement::GreaterThan,
            ReferenceValues::Numeric(NumericValue {
                value: "10,000".to_string(),
                unit: Some("equivalent of USD".to_string()),
            }),
            Some("Provide valid ID document"),
        );
        assert!(validate_rule(&rule).is_empty());
    }

    #[test]
    fn validate_flags_kind_judgement_mismatch() {
        let rule = BusinessRule::new(
            "Deposit Amount",
            LogicalJudgement::GreaterThan,
            enumeration(&["10"]),
            None,
        );
        assert!(validate_rule(&rule).iter().any(|i| i.field == "reference"));
    }

    #[test]
    fn validate_flags_round_trip_hazards() {
        let comma_value = BusinessRule::new(
            "Slot",
            LogicalJudgement::Contains,
            enumeration(&["a, b"]),
            None,
        );
        assert!(!validate_rule(&comma_value).is_empty());

        let connector_value = BusinessRule::new(
            "Slot",
            LogicalJudgement::Contains,
            enumeration(&["or later"]),
            None,
        );
        assert!(!validate_rule(&connector_value).is_empty());

        let sentinel_action = BusinessRule::new(
            "Slot",
            LogicalJudgement::Contains,
            enumeration(&["a"]),
            Some("None"),
        );
        assert!(!validate_rule(&sentinel_action).is_empty());

        let digit_unit = BusinessRule::new(
            "Slot",
            LogicalJudgement::LessThan,
            ReferenceValues::Numeric(NumericValue {
                value: "5".to_string(),
                unit: Some("B2B credits".to_string()),
            }),
            None,
        );
        assert!(!validate_rule(&digit_unit).is_empty());
    }

    #[test]
    fn judgement_serde_uses_canonical_surfaces() {
        let json = serde_json::to_string(&LogicalJudgement::LessThanOrEqual).unwrap();
        assert_eq!(json, "\"less than or equal to\"");
        let parsed: LogicalJudgement = serde_json::from_str("\"等于\"").unwrap();
        assert_eq!(parsed, LogicalJudgement::EqualTo);
        assert!(serde_json::from_str::<LogicalJudgement>("\"resembles\"").is_err());
    }

    #[test]
    fn rule_serde_round_trips() {
        let rule = BusinessRule::new(
            "Deposit Amount",
            LogicalJudgement::LessThanOrEqual,
            ReferenceValues::Numeric(NumericValue {
                value: "10,000".to_string(),
                unit: Some("equivalent of USD".to_string()),
            }),
            Some("Provide valid ID document"),
        );
        let json = serde_json::to_string(&rule).unwrap();
        let back: BusinessRule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rule);
    }
}
