//! Lowercasing token scanner shared by the keyword matcher and the TF-IDF
//! featurizer.
//!
//! Tokens are maximal runs of Unicode alphanumeric characters. Everything
//! else (whitespace, punctuation, hyphens) is a boundary, so
//! "gender-nonconforming" yields two tokens while "whitewash" stays one.

/// One token: the lowercased form plus its byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased token text.
    pub text: String,
    /// Byte offset of the first character in the source.
    pub start: usize,
    /// Byte offset one past the last character in the source.
    pub end: usize,
}

/// Split `text` into lowercased tokens with byte spans.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run_start: Option<usize> = None;
    for (idx, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(idx);
            }
        } else if let Some(start) = run_start.take() {
            tokens.push(Token {
                text: text[start..idx].to_lowercase(),
                start,
                end: idx,
            });
        }
    }
    if let Some(start) = run_start {
        tokens.push(Token {
            text: text[start..].to_lowercase(),
            start,
            end: text.len(),
        });
    }
    tokens
}

/// Tokenize and keep only the lowercased strings.
pub fn token_strings(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation_and_whitespace() {
        let toks = token_strings("White matter, within the spinal-cord.");
        assert_eq!(toks, ["white", "matter", "within", "the", "spinal", "cord"]);
    }

    #[test]
    fn hyphenated_words_split() {
        assert_eq!(token_strings("gender-nonconforming"), ["gender", "nonconforming"]);
    }

    #[test]
    fn spans_recover_source_slices() {
        let text = "84% for white women";
        for tok in tokenize(text) {
            assert_eq!(text[tok.start..tok.end].to_lowercase(), tok.text);
        }
    }

    #[test]
    fn empty_and_symbol_only_inputs() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" .,;- ").is_empty());
    }

    #[test]
    fn numbers_are_tokens() {
        assert_eq!(token_strings("BP above 150-220 mmHg"), ["bp", "above", "150", "220", "mmhg"]);
    }
}
