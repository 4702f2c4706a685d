//! Tokenization and sentence segmentation for mixed Chinese/English business texts.

use serde::{Deserialize, Serialize};

/// A token with byte offsets into the original text.
///
/// Offsets are byte positions (`text[start..end]` is the token surface), so
/// they can index back into the source string without a char-width table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Returns true for characters treated as single-character tokens (CJK
/// unified ideographs and the extension-A and compatibility blocks).
pub fn is_cjk(ch: char) -> bool {
    matches!(ch as u32,
        0x4E00..=0x9FFF | 0x3400..=0x4DBF | 0xF900..=0xFAFF)
}

/// Splits text into tokens: each CJK character is its own token, contiguous
/// runs of other alphanumeric characters form word tokens, every other
/// non-whitespace character is a single punctuation token, and whitespace
/// only separates.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word_start: Option<usize> = None;
    let flush = |tokens: &mut Vec<Token>, start: &mut Option<usize>, end: usize, text: &str| {
        if let Some(s) = start.take() {
            tokens.push(Token { text: text[s..end].to_string(), start: s, end });
        }
    };
    for (idx, ch) in text.char_indices() {
        if ch.is_whitespace() {
            flush(&mut tokens, &mut word_start, idx, text);
        } else if is_cjk(ch) {
            flush(&mut tokens, &mut word_start, idx, text);
            let end = idx + ch.len_utf8();
            tokens.push(Token { text: text[idx..end].to_string(), start: idx, end });
        } else if ch.is_alphanumeric() {
            word_start.get_or_insert(idx);
        } else {
            flush(&mut tokens, &mut word_start, idx, text);
            let end = idx + ch.len_utf8();
            tokens.push(Token { text: text[idx..end].to_string(), start: idx, end });
        }
    }
    flush(&mut tokens, &mut word_start, text.len(), text);
    tokens
}

const SENTENCE_ENDERS: [char; 6] = ['。', '！', '？', '.', '!', '?'];

/// Splits text into sentences. A sentence ends at a terminator character
/// (`。 ！ ？ . ! ?`) that is followed by whitespace or the end of input;
/// trailing unterminated text still counts as a sentence. Returned slices
/// are trimmed and never empty.
pub fn segment_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let mut seg_start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((idx, ch)) = chars.next() {
        if SENTENCE_ENDERS.contains(&ch) {
            let at_boundary = match chars.peek() {
                Some(&(_, next)) => next.is_whitespace(),
                None => true,
            };
            if at_boundary {
                let end = idx + ch.len_utf8();
                let seg = text[seg_start..end].trim();
                if !seg.is_empty() {
                    sentences.push(seg);
                }
                seg_start = end;
            }
        }
    }
    let tail = text[seg_start..].trim();
    if !tail.is_empty() {
        sentences.push(tail);
    }
    sentences
}

/// Maps full-width punctuation that appears in Chinese model output onto the
/// ASCII forms the rule notation grammar expects. Ideographic space becomes
/// a plain space; `＜ ＞ （ ） ：` and the full-width comma map to their
/// ASCII counterparts; `《 》` are treated as angle brackets.
pub fn normalize_width(text: &str) -> String {
    text.chars()
        .map(|ch| match ch {
            '＜' | '《' | '〈' => '<',
            '＞' | '》' | '〉' => '>',
            '，' => ',',
            '（' => '(',
            '）' => ')',
            '：' => ':',
            '　' => ' ',
            other => other,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn tokenize_splits_words_and_punctuation() {
        let toks = tokenize("credit card, Alipay, and WeChat Pay.");
        assert_eq!(
            texts(&toks),
            ["credit", "card", ",", "Alipay", ",", "and", "WeChat", "Pay", "."]
        );
    }

    #[test]
    fn tokenize_keeps_cjk_chars_separate() {
        let toks = tokenize("包含美元和100元");
        assert_eq!(texts(&toks), ["包", "含", "美", "元", "和", "100", "元"]);
    }

    #[test]
    fn tokenize_offsets_slice_back_to_surface() {
        let text = "USD 10,000 等值";
        for tok in tokenize(text) {
            assert_eq!(&text[tok.start..tok.end], tok.text);
        }
    }

    #[test]
    fn tokenize_partitions_non_whitespace() {
        let text = "Pay 10,000 元。 done";
        let total: usize = tokenize(text).iter().map(|t| t.text.chars().count()).sum();
        let expected = text.chars().filter(|c| !c.is_whitespace()).count();
        assert_eq!(total, expected);
    }

    #[test]
    fn sentences_split_on_terminator_before_whitespace() {
        let sents = segment_sentences("First step. Second step? Third");
        assert_eq!(sents, ["First step.", "Second step?", "Third"]);
    }

    #[test]
    fn sentences_ignore_decimal_points_and_abbrev_runs() {
        let sents = segment_sentences("Amount is 10.5 yuan. Done.");
        assert_eq!(sents, ["Amount is 10.5 yuan.", "Done."]);
    }

    #[test]
    fn sentences_handle_chinese_terminators() {
        let sents = segment_sentences("选择币种。 提供金额！");
        assert_eq!(sents, ["选择币种。", "提供金额！"]);
    }

    #[test]
    fn sentences_of_empty_text_are_empty() {
        assert!(segment_sentences("   ").is_empty());
    }

    #[test]
    fn normalize_width_maps_fullwidth_brackets() {
        assert_eq!(normalize_width("＜＜币种，等于＞，无＞"), "<<币种,等于>,无>");
        assert_eq!(normalize_width("《 《a， b》， c》"), "< <a, b>, c>");
    }
}
