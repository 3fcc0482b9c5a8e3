//! Sentence BLEU and METEOR of a transcript against golden picture descriptions.
//!
//! Every metric is computed against each reference on its own and the
//! results are averaged over the reference set.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{ngrams, TokenizedDoc};

/// Numerator substituted for a zero higher-order n-gram match count.
pub const SMOOTHING_EPSILON: f64 = 0.1;

/// Bundled sample descriptions so the pipeline runs without a generated
/// reference file. They are hand written stand-ins, not model output.
pub const EXAMPLE_REFERENCES: &str = include_str!("../data/example_references.txt");

#[derive(Debug, Clone)]
pub struct ReferenceSet {
    pub references: Vec<TokenizedDoc>,
    pub source: String,
}

impl ReferenceSet {
    /// Parses a reference file: one description per line, `#` comments and
    /// blank lines ignored.
    pub fn parse(text: &str, source: impl Into<String>) -> Result<Self> {
        let source = source.into();
        let mut references = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let doc = TokenizedDoc::from_text(format!("ref{}", references.len() + 1), line);
            if doc.is_empty() {
                return Err(Error::format(&source, format!("line {}: reference has no words", i + 1)));
            }
            references.push(doc);
        }
        if references.is_empty() {
            return Err(Error::format(&source, "reference set is empty"));
        }
        Ok(ReferenceSet { references, source })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.display().to_string())
    }

    pub fn bundled() -> Self {
        Self::parse(EXAMPLE_REFERENCES, "<bundled example references>").expect("bundled references parse")
    }

    pub fn len(&self) -> usize {
        self.references.len()
    }

    pub fn is_empty(&self) -> bool {
        self.references.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BleuMode {
    /// Geometric mean of the 1..n precisions with uniform weights.
    #[default]
    Cumulative,
    /// The n-gram precision of order n alone.
    Individual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuOptions {
    pub mode: BleuMode,
    pub smoothing: bool,
}

impl Default for BleuOptions {
    fn default() -> Self {
        BleuOptions {
            mode: BleuMode::Cumulative,
            smoothing: true,
        }
    }
}

/// Clipped match count and total candidate n-grams of order `k`.
fn modified_precision(candidate: &[String], reference: &[String], k: usize) -> (usize, usize) {
    let cand = ngrams(candidate, k).expect("k >= 1");
    let refs = ngrams(reference, k).expect("k >= 1");
    let matched = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, candidate.len().saturating_sub(k - 1))
}

pub fn brevity_penalty(candidate_len: usize, reference_len: usize) -> f64 {
    if candidate_len > reference_len {
        1.0
    } else if candidate_len == 0 {
        0.0
    } else {
        (1.0 - reference_len as f64 / candidate_len as f64).exp()
    }
}

/// Single-reference sentence BLEU of order `n` (1..=4).
pub fn bleu_n(candidate: &TokenizedDoc, reference: &TokenizedDoc, n: usize, options: BleuOptions) -> Result<f64> {
    if !(1..=4).contains(&n) {
        return Err(Error::invalid(format!("BLEU order must be in 1..=4, got {n}")));
    }
    if reference.is_empty() {
        return Err(Error::invalid("BLEU reference is empty"));
    }
    let c = &candidate.tokens;
    if c.is_empty() {
        return Ok(0.0);
    }
    let precision = |k: usize| -> Option<f64> {
        let (matched, total) = modified_precision(c, &reference.tokens, k);
        if matched > 0 {
            Some(matched as f64 / total as f64)
        } else if k >= 2 && options.smoothing {
            Some(SMOOTHING_EPSILON / total.max(1) as f64)
        } else {
            None
        }
    };

    // no unigram overlap means no score, whatever the smoothing
    let Some(p1) = precision(1) else { return Ok(0.0) };
    let bp = brevity_penalty(c.len(), reference.len());
    let score = match options.mode {
        BleuMode::Individual => {
            let p = if n == 1 { Some(p1) } else { precision(n) };
            p.map_or(0.0, |p| bp * p)
        }
        BleuMode::Cumulative => {
            let mut log_sum = p1.ln();
            for k in 2..=n {
                match precision(k) {
                    Some(p) => log_sum += p.ln(),
                    None => return Ok(0.0),
                }
            }
            bp * (log_sum / n as f64).exp()
        }
    };
    Ok(score)
}

/// A unigram alignment between candidate and reference positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    /// `(candidate index, reference index)` sorted by candidate index.
    pub pairs: Vec<(usize, usize)>,
}

impl Alignment {
    pub fn matches(&self) -> usize {
        self.pairs.len()
    }

    /// Number of maximal runs that are contiguous on both sides.
    pub fn chunks(&self) -> usize {
        if self.pairs.is_empty() {
            return 0;
        }
        1 + self
            .pairs
            .windows(2)
            .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
            .count()
    }
}

/// Aligns unigrams in two stages, exact surface match then Porter stem match.
///
/// Within a stage, candidate positions are visited left to right and each
/// unmatched position takes a compatible unmatched reference position if one
/// exists, so the number of matches is maximal. When several are available
/// the one continuing the previous candidate's chunk wins, otherwise the one
/// starting the longest compatible run, otherwise the leftmost.
pub fn align(candidate: &TokenizedDoc, reference: &TokenizedDoc) -> Alignment {
    let nc = candidate.len();
    let nr = reference.len();
    let mut cand_match: Vec<Option<usize>> = vec![None; nc];
    let mut ref_used = vec![false; nr];

    let stages: [(&[String], &[String]); 2] = [
        (&candidate.tokens, &reference.tokens),
        (&candidate.stems, &reference.stems),
    ];
    for (cw, rw) in stages {
        let mut positions: HashMap<&str, Vec<usize>> = HashMap::new();
        for (j, w) in rw.iter().enumerate() {
            positions.entry(w.as_str()).or_default().push(j);
        }
        for i in 0..nc {
            if cand_match[i].is_some() {
                continue;
            }
            let Some(options) = positions.get(cw[i].as_str()) else { continue };
            let free: Vec<usize> = options.iter().copied().filter(|&j| !ref_used[j]).collect();
            if free.is_empty() {
                continue;
            }
            let continues = i
                .checked_sub(1)
                .and_then(|p| cand_match[p])
                .map(|pj| pj + 1)
                .filter(|j| free.contains(j));
            let chosen = continues.unwrap_or_else(|| {
                let run = |j: usize| {
                    (0..)
                        .take_while(|&k| {
                            i + k < nc
                                && j + k < nr
                                && cand_match[i + k].is_none()
                                && !ref_used[j + k]
                                && cw[i + k] == rw[j + k]
                        })
                        .count()
                };
                // max_by_key keeps the last maximum; iterate right to left for the leftmost
                free.iter().rev().copied().max_by_key(|&j| run(j)).expect("non-empty")
            });
            cand_match[i] = Some(chosen);
            ref_used[chosen] = true;
        }
    }

    Alignment {
        pairs: cand_match
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|j| (i, j)))
            .collect(),
    }
}

/// METEOR with exact and stem matching, recall-weighted harmonic mean
/// (alpha = 0.9) and fragmentation penalty `0.5 * (chunks / matches)^3`.
pub fn meteor(candidate: &TokenizedDoc, reference: &TokenizedDoc) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let alignment = align(candidate, reference);
    let m = alignment.matches();
    if m == 0 {
        return 0.0;
    }
    let m = m as f64;
    let precision = m / candidate.len() as f64;
    let recall = m / reference.len() as f64;
    let f_mean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let penalty = 0.5 * (alignment.chunks() as f64 / m).powi(3);
    f_mean * (1.0 - penalty)
}

/// Reference-averaged scores for one transcript.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RefScores {
    pub bleu: [f64; 4],
    pub meteor: f64,
}

pub fn score_against_references(candidate: &TokenizedDoc, refs: &ReferenceSet, options: BleuOptions) -> Result<RefScores> {
    if refs.is_empty() {
        return Err(Error::invalid("empty reference set"));
    }
    let mut total = RefScores::default();
    for reference in &refs.references {
        for n in 1..=4 {
            total.bleu[n - 1] += bleu_n(candidate, reference, n, options)?;
        }
        total.meteor += meteor(candidate, reference);
    }
    let k = refs.len() as f64;
    total.bleu.iter_mut().for_each(|b| *b /= k);
    total.meteor /= k;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(text: &str) -> TokenizedDoc {
        TokenizedDoc::from_text("d", text)
    }

    const PLAIN: BleuOptions = BleuOptions {
        mode: BleuMode::Cumulative,
        smoothing: false,
    };

    #[test]
    fn bleu_identity_is_one() {
        let r = doc("the boy is on the stool reaching for the cookie jar");
        for n in 1..=4 {
            assert_eq!(bleu_n(&r, &r, n, BleuOptions::default()).unwrap(), 1.0);
            assert_eq!(bleu_n(&r, &r, n, PLAIN).unwrap(), 1.0);
        }
    }

    #[test]
    fn bleu_clipped_precision() {
        let b = bleu_n(&doc("the the the"), &doc("the boy"), 1, PLAIN).unwrap();
        assert!((b - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bleu_edge_cases() {
        assert_eq!(bleu_n(&doc("cat dog"), &doc("the boy"), 1, BleuOptions::default()).unwrap(), 0.0);
        assert_eq!(bleu_n(&doc(""), &doc("the boy"), 2, BleuOptions::default()).unwrap(), 0.0);
        assert!(bleu_n(&doc("a"), &doc("a"), 0, PLAIN).is_err());
        assert!(bleu_n(&doc("a"), &doc("a"), 5, PLAIN).is_err());
        assert!(bleu_n(&doc("a"), &doc(""), 1, PLAIN).is_err());
    }

    #[test]
    fn bleu_smoothing_keeps_higher_orders_positive() {
        // unigram overlap, no bigram overlap
        let c = doc("on stool boy the");
        let r = doc("the boy on the stool");
        assert_eq!(bleu_n(&c, &r, 2, PLAIN).unwrap(), 0.0);
        let smoothed = bleu_n(&c, &r, 2, BleuOptions::default()).unwrap();
        // p1 = 4/4, p2 = 0.1/3, BP = exp(1 - 5/4)
        let expected = (1.0 - 5.0 / 4.0f64).exp() * (0.1f64 / 3.0).sqrt();
        assert!((smoothed - expected).abs() < 1e-12);
    }

    #[test]
    fn bleu_individual_mode() {
        let c = doc("the boy on the stool");
        let r = doc("the boy is on the stool");
        let opts = BleuOptions { mode: BleuMode::Individual, smoothing: false };
        // bigrams of c: the-boy, boy-on, on-the, the-stool; matches 3 of 4
        let expected = (1.0 - 6.0 / 5.0f64).exp() * 0.75;
        assert!((bleu_n(&c, &r, 2, opts).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn meteor_examples() {
        let r = doc("the boy takes a cookie");
        assert!((meteor(&r, &r) - 0.996).abs() < 1e-12);
        assert!((meteor(&doc("boys"), &doc("boy")) - 0.5).abs() < 1e-12);
        assert_eq!(meteor(&doc("cat dog"), &doc("the boy")), 0.0);
        assert_eq!(meteor(&doc(""), &doc("the boy")), 0.0);
    }

    #[test]
    fn meteor_chunks_follow_word_order() {
        // matched words all present, reordered into two chunks
        let a = align(&doc("on the stool the boy"), &doc("the boy on the stool"));
        assert_eq!(a.matches(), 5);
        assert_eq!(a.chunks(), 2);
    }

    #[test]
    fn alignment_prefers_exact_over_stem() {
        let a = align(&doc("boys"), &doc("boy boys"));
        assert_eq!(a.pairs, vec![(0, 1)]);
    }

    #[test]
    fn meteor_weights_recall() {
        // P = 1, R = 1/2
        let s = meteor(&doc("boy"), &doc("boy jar"));
        let f = 10.0 * 0.5 / (0.5 + 9.0);
        assert!((s - f * 0.5).abs() < 1e-12);
    }

    #[test]
    fn reference_averaging() {
        let r = doc("the mother is washing dishes");
        let other = doc("curtains blowing outside window");
        let refs = ReferenceSet { references: vec![r.clone(), other], source: "t".into() };
        let s = score_against_references(&r, &refs, BleuOptions::default()).unwrap();
        assert!((s.bleu[0] - 0.5).abs() < 1e-12);

        let single = ReferenceSet { references: vec![r.clone()], source: "t".into() };
        let double = ReferenceSet { references: vec![r.clone(), r.clone()], source: "t".into() };
        let c = doc("the mother washes the dishes");
        assert_eq!(
            score_against_references(&c, &single, BleuOptions::default()).unwrap(),
            score_against_references(&c, &double, BleuOptions::default()).unwrap()
        );

        let empty = ReferenceSet { references: vec![], source: "t".into() };
        assert!(score_against_references(&c, &empty, BleuOptions::default()).is_err());
    }

    #[test]
    fn reference_file_parsing() {
        let refs = ReferenceSet::parse("# header\nThe boy climbs.\n\nThe sink overflows.\n", "mem").unwrap();
        assert_eq!(refs.len(), 2);
        assert_eq!(refs.references[0].tokens, vec!["the", "boy", "climbs"]);
        assert!(ReferenceSet::parse("# only comments\n", "mem").is_err());
        assert!(ReferenceSet::parse("...\n", "mem").is_err());
    }

    fn words() -> impl Strategy<Value = String> {
        prop::collection::vec(
            prop::sample::select(vec!["the", "boy", "boys", "girl", "jar", "cookie", "cookies", "mother", "sink", "water"]),
            0..14,
        )
        .prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn scores_are_in_unit_interval(c in words(), refs in prop::collection::vec(words(), 1..4)) {
            let refs: Vec<TokenizedDoc> = refs.iter().map(|r| doc(r)).filter(|d| !d.is_empty()).collect();
            prop_assume!(!refs.is_empty());
            let set = ReferenceSet { references: refs, source: "p".into() };
            let s = score_against_references(&doc(&c), &set, BleuOptions::default()).unwrap();
            for v in s.bleu.iter().chain([&s.meteor]) {
                prop_assert!((0.0..=1.0).contains(v), "{v}");
            }
        }

        #[test]
        fn reference_order_is_irrelevant(c in words(), a in words(), b in words()) {
            let (a, b) = (doc(&a), doc(&b));
            prop_assume!(!a.is_empty() && !b.is_empty());
            let ab = ReferenceSet { references: vec![a.clone(), b.clone()], source: "p".into() };
            let ba = ReferenceSet { references: vec![b, a], source: "p".into() };
            let x = score_against_references(&doc(&c), &ab, BleuOptions::default()).unwrap();
            let y = score_against_references(&doc(&c), &ba, BleuOptions::default()).unwrap();
            for k in 0..4 {
                prop_assert!((x.bleu[k] - y.bleu[k]).abs() < 1e-12);
            }
            prop_assert!((x.meteor - y.meteor).abs() < 1e-12);
        }

        #[test]
        fn self_scores_are_exact(r in words()) {
            let r = doc(&r);
            prop_assume!(!r.is_empty());
            // orders longer than the text have no n-grams and fall to smoothing
            for n in 1..=r.len().min(4) {
                prop_assert_eq!(bleu_n(&r, &r, n, BleuOptions::default()).unwrap(), 1.0);
            }
            let expected = 1.0 - 0.5 / (r.len() as f64).powi(3);
            prop_assert!((meteor(&r, &r) - expected).abs() < 1e-12);
        }

        #[test]
        fn alignment_is_maximal(c in words(), r in words()) {
            let (c, r) = (doc(&c), doc(&r));
            let mut cc: HashMap<&str, usize> = HashMap::new();
            let mut rc: HashMap<&str, usize> = HashMap::new();
            c.stems.iter().for_each(|s| *cc.entry(s).or_default() += 1);
            r.stems.iter().for_each(|s| *rc.entry(s).or_default() += 1);
            let max: usize = cc.iter().map(|(s, &n)| n.min(rc.get(s).copied().unwrap_or(0))).sum();
            prop_assert_eq!(align(&c, &r).matches(), max);
        }
    }
}
