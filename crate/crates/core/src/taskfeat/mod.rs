//! Task-specific features and assembly of the 15-column feature row.

mod fillers;
pub(crate) mod keywords;
mod parse_tree;
mod table;
mod wer;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Transcript;
use crate::label::Label;
use crate::refscore::{score_against_references, BleuOptions, ReferenceSet};
use crate::textproc::TokenizedDoc;
use crate::tfidf::TfIdfModel;

pub use fillers::{filled_pause_features, filler_positions, DEFAULT_FILLERS};
pub use keywords::{topic_hit_rate, KeywordFile, KeywordSet, Topic, TopicMapping, DEFAULT_KEYWORDS_JSON};
pub use parse_tree::{avg_parse_depth, parse_tree, read_tree_lines, Tree};
pub use table::{read_features_csv, write_features_csv, FEATURES_HEADER};
pub use wer::{edit_distance, word_error_rate};

pub const N_FEATURES: usize = 15;

/// Column order of the feature row.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "topic1_hit_rate",
    "topic2_hit_rate",
    "topic3_hit_rate",
    "bleu1",
    "bleu2",
    "bleu3",
    "bleu4",
    "meteor",
    "tfidf_sim_hc",
    "tfidf_sim_ad",
    "tfidf_kw_hit_rate",
    "avg_depth",
    "filled_pauses",
    "filled_pauses_ratio",
    "wer",
];

pub const AVG_DEPTH: usize = 11;
pub const WER: usize = 14;

/// Indices of the keyword hit-rate columns (three topics plus TF-IDF keywords).
pub const KEYWORD_HIT_RATE_FEATURES: [usize; 4] = [0, 1, 2, 10];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub subject_id: String,
    pub label: Option<Label>,
    pub values: [f64; N_FEATURES],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.values[i])
    }
}

/// Why an optional feature input could not be used.
#[derive(Debug, Clone, PartialEq)]
pub enum Missing {
    NotProvided,
    Invalid(String),
}

/// A feature row whose parse-depth and WER columns may still need imputing.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFeatures {
    pub row: FeatureVector,
    pub avg_depth: std::result::Result<f64, Missing>,
    pub wer: std::result::Result<f64, Missing>,
}

/// Column means used to fill parse depth and WER when a subject lacks them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Imputation {
    pub avg_depth: f64,
    pub wer: f64,
    pub n_avg_depth: usize,
    pub n_wer: usize,
}

impl Imputation {
    /// Means of the available values; 0 when a column has none.
    pub fn from_partials<'a>(rows: impl IntoIterator<Item = &'a PartialFeatures>) -> Self {
        let mut imp = Imputation::default();
        for r in rows {
            if let Ok(d) = r.avg_depth {
                imp.avg_depth += d;
                imp.n_avg_depth += 1;
            }
            if let Ok(w) = r.wer {
                imp.wer += w;
                imp.n_wer += 1;
            }
        }
        if imp.n_avg_depth > 0 {
            imp.avg_depth /= imp.n_avg_depth as f64;
        }
        if imp.n_wer > 0 {
            imp.wer /= imp.n_wer as f64;
        }
        imp
    }
}

impl PartialFeatures {
    /// Fills missing columns from `imputation`, or refuses in strict mode.
    /// Returns the completed row and one note per imputed column.
    pub fn finalize(self, imputation: &Imputation, strict: bool) -> Result<(FeatureVector, Vec<String>)> {
        let PartialFeatures { mut row, avg_depth, wer } = self;
        let mut notes = Vec::new();
        for (index, value, fill) in [
            (AVG_DEPTH, avg_depth, imputation.avg_depth),
            (WER, wer, imputation.wer),
        ] {
            let name = FEATURE_NAMES[index];
            row.values[index] = match value {
                Ok(v) => v,
                Err(missing) => {
                    let why = match missing {
                        Missing::NotProvided => "not provided".to_string(),
                        Missing::Invalid(m) => m,
                    };
                    if strict {
                        return Err(Error::invalid(format!("{}: {name} input {why}", row.subject_id)));
                    }
                    notes.push(format!("{}: {name} imputed as {fill:.6} ({why})", row.subject_id));
                    fill
                }
            };
        }
        Ok((row, notes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureOptions {
    pub bleu: BleuOptions,
    pub fillers: Vec<String>,
    /// Remove filled pauses from both sides before WER alignment.
    pub wer_drop_fillers: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            bleu: BleuOptions::default(),
            fillers: DEFAULT_FILLERS.iter().map(|s| s.to_string()).collect(),
            wer_drop_fillers: false,
        }
    }
}

/// Everything needed to featurize a subject; shared read-only across threads.
#[derive(Debug, Clone, Copy)]
pub struct FeatureContext<'a> {
    pub tfidf: &'a TfIdfModel,
    pub references: &'a ReferenceSet,
    pub topics: &'a [KeywordSet; 3],
    pub options: &'a FeatureOptions,
}

impl FeatureContext<'_> {
    /// Computes every column; parse depth and WER are left pending when
    /// their inputs are absent or unusable.
    pub fn extract(
        &self,
        transcript: &Transcript,
        label: Option<Label>,
        trees: Option<&[String]>,
        asr: Option<&TokenizedDoc>,
    ) -> Result<PartialFeatures> {
        let doc = TokenizedDoc::from_utterances(transcript.subject_id.clone(), &transcript.utterances);
        let mut v = [0.0; N_FEATURES];
        for (slot, set) in v.iter_mut().zip(self.topics.iter()) {
            *slot = topic_hit_rate(&doc, set);
        }
        let scores = score_against_references(&doc, self.references, self.options.bleu)?;
        v[3..7].copy_from_slice(&scores.bleu);
        v[7] = scores.meteor;
        (v[8], v[9]) = self.tfidf.similarity_features(&doc);
        v[10] = self.tfidf.keyword_hit_rate(&doc);
        let (count, ratio) = filled_pause_features(&doc, &transcript.fillers_marked, &self.options.fillers);
        v[12] = count as f64;
        v[13] = ratio;

        let (avg_depth, wer) = pending_columns(&doc, &transcript.fillers_marked, trees, asr, self.options);

        Ok(PartialFeatures {
            row: FeatureVector {
                subject_id: transcript.subject_id.clone(),
                label,
                values: v,
            },
            avg_depth,
            wer,
        })
    }
}

/// Parse depth and WER, the two columns that depend on optional inputs.
pub fn pending_columns(
    doc: &TokenizedDoc,
    marked: &[usize],
    trees: Option<&[String]>,
    asr: Option<&TokenizedDoc>,
    options: &FeatureOptions,
) -> (std::result::Result<f64, Missing>, std::result::Result<f64, Missing>) {
    let avg_depth = match trees {
        None => Err(Missing::NotProvided),
        Some([]) => Err(Missing::Invalid("tree file is empty".into())),
        Some(t) => avg_parse_depth(t).map_err(|e| Missing::Invalid(e.to_string())),
    };
    let wer = match asr {
        None => Err(Missing::NotProvided),
        Some(hyp) => wer_column(doc, marked, hyp, options),
    };
    (avg_depth, wer)
}

fn wer_column(doc: &TokenizedDoc, marked: &[usize], hyp: &TokenizedDoc, options: &FeatureOptions) -> std::result::Result<f64, Missing> {
    let (reference, hypothesis): (Vec<&String>, Vec<&String>) = if options.wer_drop_fillers {
        let drop = filler_positions(doc, marked, &options.fillers);
        let keep_hyp = |t: &&String| !options.fillers.iter().any(|f| f == *t);
        (
            doc.tokens.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, t)| t).collect(),
            hyp.tokens.iter().filter(keep_hyp).collect(),
        )
    } else {
        (doc.tokens.iter().collect(), hyp.tokens.iter().collect())
    };
    word_error_rate(&reference, &hypothesis).map_err(|e| Missing::Invalid(e.to_string()))
}

/// One-shot assembly of a complete row for a single subject.
#[allow(clippy::too_many_arguments)]
pub fn assemble_features(
    context: &FeatureContext<'_>,
    transcript: &Transcript,
    label: Option<Label>,
    trees: Option<&[String]>,
    asr: Option<&TokenizedDoc>,
    imputation: &Imputation,
    strict: bool,
) -> Result<(FeatureVector, Vec<String>)> {
    context.extract(transcript, label, trees, asr)?.finalize(imputation, strict)
}
