//! TF-IDF reference vectors for the two diagnostic groups.
//!
//! Documents are transcripts of the training split. Each document is turned
//! into a vector over the training vocabulary whose entries are
//! `tf(t, d) * idf(t)` with
//!
//! * `tf(t, d) = count(t, d) / |d|`
//! * `idf(t) = ln(|D| / df(t))`
//!
//! The HC (resp. AD) reference vector is the mean of the HC (resp. AD)
//! document vectors. A transcript is then scored by its cosine similarity to
//! each reference vector, and by how many of the 30 strongest HC terms it
//! mentions.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::textproc::{stem, TokenizedDoc};

pub const TOP_KEYWORDS: usize = 30;

/// A small closed-class list used only when stopword filtering is switched on.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be",
    "because", "been", "but", "by", "can", "could", "did", "do", "does", "for", "from", "had",
    "has", "have", "he", "her", "here", "him", "his", "how", "i", "if", "in", "into", "is", "it",
    "it's", "its", "just", "me", "my", "no", "not", "of", "oh", "on", "or", "our", "out", "she",
    "so", "some", "than", "that", "that's", "the", "their", "them", "then", "there", "there's",
    "these", "they", "this", "those", "to", "too", "up", "us", "was", "we", "well", "were", "what",
    "when", "where", "which", "who", "will", "with", "would", "you", "your",
];

/// How a document's tokens become TF-IDF terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermOptions {
    /// Use Porter stems instead of surface tokens.
    #[serde(default)]
    pub stem: bool,
    #[serde(default)]
    pub drop_stopwords: bool,
}

impl TermOptions {
    pub fn terms<'a>(&self, doc: &'a TokenizedDoc) -> Vec<&'a str> {
        let source = if self.stem { &doc.stems } else { &doc.tokens };
        doc.tokens
            .iter()
            .zip(source)
            .filter(|(tok, _)| !self.drop_stopwords || !STOPWORDS.contains(&tok.as_str()))
            .map(|(_, term)| term.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    pub vocab: Vec<String>,
    pub idf: Vec<f64>,
    pub v_hc: Vec<f64>,
    pub v_ad: Vec<f64>,
    pub top30: Vec<String>,
    pub n_train: usize,
    pub n_hc: usize,
    pub n_ad: usize,
    #[serde(default, skip_serializing_if = "is_default_terms")]
    pub terms: TermOptions,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

fn is_default_terms(t: &TermOptions) -> bool {
    *t == TermOptions::default()
}

/// `count(term, doc) / |doc|` over the raw tokens.
pub fn term_frequency(term: &str, doc: &TokenizedDoc) -> Result<f64> {
    if doc.tokens.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let count = doc.tokens.iter().filter(|t| *t == term).count();
    Ok(count as f64 / doc.tokens.len() as f64)
}

fn term_counts<'a>(terms: &[&'a str]) -> HashMap<&'a str, usize> {
    let mut counts = HashMap::new();
    for t in terms {
        *counts.entry(*t).or_insert(0) += 1;
    }
    counts
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

impl TfIdfModel {
    pub fn fit(docs: &[TokenizedDoc], labels: &[Label]) -> Result<Self> {
        Self::fit_with(docs, labels, TermOptions::default())
    }

    pub fn fit_with(docs: &[TokenizedDoc], labels: &[Label], terms: TermOptions) -> Result<Self> {
        if docs.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} documents but {} labels",
                docs.len(),
                labels.len()
            )));
        }
        if docs.len() < 2 {
            return Err(Error::invalid("TF-IDF needs at least two training documents"));
        }
        let n_hc = labels.iter().filter(|l| **l == Label::Hc).count();
        let n_ad = labels.len() - n_hc;
        if n_hc == 0 || n_ad == 0 {
            return Err(Error::SingleClass);
        }

        let doc_terms: Vec<Vec<&str>> = docs.iter().map(|d| terms.terms(d)).collect();
        if let Some(i) = doc_terms.iter().position(|t| t.is_empty()) {
            return Err(Error::invalid(format!(
                "training document {} is empty",
                docs[i].subject_id
            )));
        }

        let mut vocab: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut df: Vec<usize> = Vec::new();
        for dt in &doc_terms {
            let mut seen = HashSet::new();
            for &t in dt {
                let i = *index.entry(t.to_string()).or_insert_with(|| {
                    vocab.push(t.to_string());
                    df.push(0);
                    vocab.len() - 1
                });
                if seen.insert(i) {
                    df[i] += 1;
                }
            }
        }

        let n = docs.len() as f64;
        let idf: Vec<f64> = df.iter().map(|&d| (n / d as f64).ln()).collect();

        let mut model = TfIdfModel {
            v_hc: vec![0.0; vocab.len()],
            v_ad: vec![0.0; vocab.len()],
            vocab,
            idf,
            top30: Vec::new(),
            n_train: docs.len(),
            n_hc,
            n_ad,
            terms,
            index,
        };

        for (dt, label) in doc_terms.iter().zip(labels) {
            let v = model.vector_of_terms(dt);
            let target = match label {
                Label::Hc => &mut model.v_hc,
                Label::Ad => &mut model.v_ad,
            };
            for (acc, x) in target.iter_mut().zip(v) {
                *acc += x;
            }
        }
        model.v_hc.iter_mut().for_each(|x| *x /= n_hc as f64);
        model.v_ad.iter_mut().for_each(|x| *x /= n_ad as f64);
        model.top30 = top_terms(&model.vocab, &model.v_hc, TOP_KEYWORDS);
        Ok(model)
    }

    fn vector_of_terms(&self, terms: &[&str]) -> Vec<f64> {
        let mut v = vec![0.0; self.vocab.len()];
        if terms.is_empty() {
            return v;
        }
        let total = terms.len() as f64;
        for (t, count) in term_counts(terms) {
            if let Some(&i) = self.index.get(t) {
                v[i] = (count as f64 / total) * self.idf[i];
            }
        }
        v
    }

    /// The document's TF-IDF vector over the training vocabulary.
    /// Out-of-vocabulary terms count towards `|d|` but have no coordinate.
    pub fn document_vector(&self, doc: &TokenizedDoc) -> Vec<f64> {
        self.vector_of_terms(&self.terms.terms(doc))
    }

    /// Cosine similarity of the document to the HC and AD reference vectors.
    pub fn similarity_features(&self, doc: &TokenizedDoc) -> (f64, f64) {
        let v = self.document_vector(doc);
        (cosine_similarity(&v, &self.v_hc), cosine_similarity(&v, &self.v_ad))
    }

    /// Fraction of the top HC terms mentioned in the document, where
    /// "mentioned" means stem-equal to some document token.
    pub fn keyword_hit_rate(&self, doc: &TokenizedDoc) -> f64 {
        if self.top30.is_empty() {
            return 0.0;
        }
        let stems: HashSet<&str> = doc.stems.iter().map(String::as_str).collect();
        let hits = self
            .top30
            .iter()
            .filter(|k| stems.contains(stem(k).as_str()))
            .count();
        hits as f64 / self.top30.len() as f64
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.index.get(term).map(|&i| self.idf[i])
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let n = self.vocab.len();
        if self.idf.len() != n || self.v_hc.len() != n || self.v_ad.len() != n {
            return Err("vocab, idf, v_hc and v_ad must have equal length".into());
        }
        if self.index.len() != n {
            return Err("vocab contains duplicate terms".into());
        }
        if self.n_hc + self.n_ad != self.n_train {
            return Err("n_hc + n_ad must equal n_train".into());
        }
        if self.top30.len() > TOP_KEYWORDS {
            return Err("top30 has more than 30 terms".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut model: TfIdfModel = serde_json::from_str(text)?;
        model.rebuild_index();
        model.validate().map_err(|m| Error::format("<tfidf model>", m))?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format { message, .. } => Error::format(path, message),
            Error::Json(err) => Error::format(path, err.to_string()),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

/// The `k` highest-weighted terms, ties broken by ascending term.
/// Relative gap under which two weights count as equal when ranking terms.
/// Sums of the same values in different orders can differ in the last bits.
const WEIGHT_TIE: f64 = 1e-9;

/// The `k` highest-weighted terms. Repeatedly takes the largest remaining
/// weight; terms within [`WEIGHT_TIE`] of it are tied and the smallest term
/// wins.
pub fn top_terms(vocab: &[String], weights: &[f64], k: usize) -> Vec<String> {
    let mut remaining: Vec<usize> = (0..vocab.len()).collect();
    let mut out = Vec::with_capacity(k.min(vocab.len()));
    while out.len() < k && !remaining.is_empty() {
        let max = remaining.iter().map(|&i| weights[i]).fold(f64::NEG_INFINITY, f64::max);
        let floor = max - WEIGHT_TIE * max.abs();
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .filter(|(_, &i)| weights[i] >= floor)
            .min_by(|(_, &a), (_, &b)| vocab[a].cmp(&vocab[b]))
            .expect("the maximum is always a candidate");
        out.push(vocab[remaining.swap_remove(pos)].clone());
    }
    out
}
