use std::collections::BTreeSet;

use crate::textproc::TokenizedDoc;

pub const DEFAULT_FILLERS: &[&str] = &["uh", "um", "er", "eh", "ah", "hm", "hmm", "mm", "mhm", "uhm"];

/// Token positions that are filled pauses: lexicon matches plus any
/// positions flagged by the transcript markup.
pub fn filler_positions<S: AsRef<str>>(doc: &TokenizedDoc, marked: &[usize], lexicon: &[S]) -> BTreeSet<usize> {
    let mut positions: BTreeSet<usize> = doc
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lexicon.iter().any(|f| f.as_ref() == t.as_str()))
        .map(|(i, _)| i)
        .collect();
    positions.extend(marked.iter().copied().filter(|&i| i < doc.len()));
    positions
}

/// Count of filled pauses and their share of all tokens (0 for an empty doc).
pub fn filled_pause_features<S: AsRef<str>>(doc: &TokenizedDoc, marked: &[usize], lexicon: &[S]) -> (usize, f64) {
    let count = filler_positions(doc, marked, lexicon).len();
    let ratio = if doc.is_empty() {
        0.0
    } else {
        count as f64 / doc.len() as f64
    };
    (count, ratio)
}
