//! Tokenization, stemming and n-gram counting shared by every feature.

mod porter;

use std::collections::HashMap;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub use porter::stem;

/// A transcript reduced to lowercase word tokens and their Porter stems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDoc {
    pub subject_id: String,
    pub tokens: Vec<String>,
    pub stems: Vec<String>,
}

impl TokenizedDoc {
    pub fn from_tokens(subject_id: impl Into<String>, tokens: Vec<String>) -> Self {
        let stems = tokens.iter().map(|t| stem(t)).collect();
        TokenizedDoc {
            subject_id: subject_id.into(),
            tokens,
            stems,
        }
    }

    pub fn from_text(subject_id: impl Into<String>, text: &str) -> Self {
        Self::from_tokens(subject_id, tokenize(text))
    }

    /// Tokenizes each utterance and concatenates the token streams.
    pub fn from_utterances<S: AsRef<str>>(subject_id: impl Into<String>, utterances: &[S]) -> Self {
        let tokens = utterances.iter().flat_map(|u| tokenize(u.as_ref())).collect();
        Self::from_tokens(subject_id, tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{02BC}')
}

/// NFC-normalizes, lowercases and splits on everything except letters,
/// digits and word-internal apostrophes.
pub fn tokenize(text: &str) -> Vec<String> {
    let normalized: String = text.nfc().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut flush = |current: &mut String| {
        let word = current.trim_matches('\'');
        if !word.is_empty() {
            tokens.push(word.to_string());
        }
        current.clear();
    };
    for c in normalized.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase().filter(|l| l.is_alphanumeric()));
        } else if is_apostrophe(c) {
            current.push('\'');
        } else {
            flush(&mut current);
        }
    }
    flush(&mut current);
    tokens
}

/// Contiguous n-grams of `tokens` with multiplicity. Keys borrow from the input.
pub fn ngrams(tokens: &[String], n: usize) -> Result<HashMap<&[String], usize>> {
    if n < 1 {
        return Err(Error::invalid("n-gram order must be at least 1"));
    }
    let mut counts = HashMap::new();
    for window in tokens.windows(n) {
        *counts.entry(window).or_insert(0) += 1;
    }
    Ok(counts)
}
