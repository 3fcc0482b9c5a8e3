//! Manifest-level driver: loads every subject, fits the TF-IDF model and
//! imputation means on a training manifest, and featurizes in parallel.

use std::fs;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{load_transcript, read_transcript, ChatOptions, ManifestEntry, Transcript};
use crate::label::Label;
use crate::taskfeat::{
    pending_columns, read_tree_lines, FeatureContext, FeatureOptions, FeatureVector, Imputation, Missing, PartialFeatures,
};
use crate::textproc::TokenizedDoc;
use crate::tfidf::{TermOptions, TfIdfModel};

/// A manifest row with its files read. Problems with the optional inputs
/// are kept as messages so the row can still be featurized.
#[derive(Debug, Clone)]
pub struct Subject {
    pub entry: ManifestEntry,
    pub transcript: Transcript,
    pub trees: Option<std::result::Result<Vec<String>, String>>,
    pub asr: Option<std::result::Result<TokenizedDoc, String>>,
}

impl Subject {
    pub fn load(entry: &ManifestEntry, chat: &ChatOptions) -> Result<Self> {
        let transcript = load_transcript(entry, chat)?;
        let trees = entry.parse_trees_path.as_ref().map(|p| {
            fs::read_to_string(p)
                .map(|t| read_tree_lines(&t))
                .map_err(|e| format!("{}: {e}", p.display()))
        });
        let asr = entry.asr_transcript_path.as_ref().map(|p| match read_transcript(p, &entry.subject_id, chat) {
            Ok(t) => Ok(TokenizedDoc::from_utterances(entry.subject_id.clone(), &t.utterances)),
            // an ASR system may legitimately hear nothing
            Err(Error::EmptySpeech(_)) => Ok(TokenizedDoc::from_tokens(entry.subject_id.clone(), Vec::new())),
            Err(e) => Err(e.to_string()),
        });
        Ok(Subject {
            entry: entry.clone(),
            transcript,
            trees,
            asr,
        })
    }

    pub fn doc(&self) -> TokenizedDoc {
        TokenizedDoc::from_utterances(self.entry.subject_id.clone(), &self.transcript.utterances)
    }

    fn pending(&self, options: &FeatureOptions) -> (std::result::Result<f64, Missing>, std::result::Result<f64, Missing>) {
        let trees = match &self.trees {
            Some(Ok(t)) => Some(t.as_slice()),
            _ => None,
        };
        let asr = match &self.asr {
            Some(Ok(d)) => Some(d),
            _ => None,
        };
        let (mut depth, mut wer) = pending_columns(&self.doc(), &self.transcript.fillers_marked, trees, asr, options);
        if let Some(Err(e)) = &self.trees {
            depth = Err(Missing::Invalid(e.clone()));
        }
        if let Some(Err(e)) = &self.asr {
            wer = Err(Missing::Invalid(e.clone()));
        }
        (depth, wer)
    }
}

/// Loads all subjects in parallel, keeping manifest order.
pub fn load_subjects(entries: &[ManifestEntry], chat: &ChatOptions) -> Result<Vec<Subject>> {
    entries.par_iter().map(|e| Subject::load(e, chat)).collect()
}

fn require_labels(subjects: &[Subject]) -> Result<Vec<Label>> {
    subjects
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.entry.label.ok_or_else(|| {
                Error::invalid(format!("manifest row {} ({}) has no label", i + 1, s.entry.subject_id))
            })
        })
        .collect()
}

/// Fits the TF-IDF model on a labeled training manifest.
pub fn fit_tfidf(subjects: &[Subject], terms: TermOptions) -> Result<TfIdfModel> {
    let labels = require_labels(subjects)?;
    let docs: Vec<TokenizedDoc> = subjects.iter().map(Subject::doc).collect();
    TfIdfModel::fit_with(&docs, &labels, terms)
}

/// Training-set means of parse depth and WER, used to fill missing values.
pub fn fit_imputation(subjects: &[Subject], options: &FeatureOptions) -> Imputation {
    let mut imp = Imputation::default();
    for s in subjects {
        let (depth, wer) = s.pending(options);
        if let Ok(d) = depth {
            imp.avg_depth += d;
            imp.n_avg_depth += 1;
        }
        if let Ok(w) = wer {
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

#[derive(Debug, Clone)]
pub struct Featurized {
    pub rows: Vec<FeatureVector>,
    /// One line per imputed value, in manifest order.
    pub notes: Vec<String>,
    pub imputation: Imputation,
}

/// Featurizes every subject in parallel. Missing parse depth or WER is
/// filled from `imputation`, or from this manifest's own means when none is
/// given. In strict mode any missing value fails the run and the error
/// lists every affected subject.
pub fn featurize(
    subjects: &[Subject],
    context: &FeatureContext<'_>,
    imputation: Option<Imputation>,
    strict: bool,
) -> Result<Featurized> {
    let partials: Vec<PartialFeatures> = subjects
        .par_iter()
        .map(|s| -> Result<PartialFeatures> {
            let mut p = context.extract(&s.transcript, s.entry.label, None, None)?;
            (p.avg_depth, p.wer) = s.pending(context.options);
            Ok(p)
        })
        .collect::<Result<_>>()?;

    if strict {
        let failing: Vec<String> = partials
            .iter()
            .filter_map(|p| {
                let mut missing = Vec::new();
                if p.avg_depth.is_err() {
                    missing.push("avg_depth");
                }
                if p.wer.is_err() {
                    missing.push("wer");
                }
                (!missing.is_empty()).then(|| format!("{} ({})", p.row.subject_id, missing.join(", ")))
            })
            .collect();
        if !failing.is_empty() {
            return Err(Error::invalid(format!("strict mode: missing inputs for {}", failing.join("; "))));
        }
    }

    let imputation = imputation.unwrap_or_else(|| Imputation::from_partials(&partials));
    let mut rows = Vec::with_capacity(partials.len());
    let mut notes = Vec::new();
    for p in partials {
        let (row, n) = p.finalize(&imputation, strict)?;
        rows.push(row);
        notes.extend(n);
    }
    Ok(Featurized { rows, notes, imputation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_manifest;
    use crate::refscore::ReferenceSet;
    use crate::taskfeat::{KeywordFile, TopicMapping, AVG_DEPTH, WER};

    fn corpus() -> (tempfile::TempDir, Vec<ManifestEntry>) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        fs::write(p.join("a.txt"), "the boy is taking a cookie\nthe mother is drying dishes\n").unwrap();
        fs::write(p.join("b.txt"), "uh the boy uh\nwater on the floor\n").unwrap();
        fs::write(p.join("c.txt"), "the girl wants a cookie\n").unwrap();
        fs::write(p.join("b_asr.txt"), "the boy water on floor\n").unwrap();
        fs::write(p.join("a.tree"), "(ROOT (S (NP (DT the) (NN boy))))\n").unwrap();
        fs::write(p.join("c.tree"), "(ROOT (S broken\n").unwrap();
        let manifest = "subject_id,label,transcript,asr,trees\nA,HC,a.txt,,a.tree\nB,AD,b.txt,b_asr.txt,\nC,HC,c.txt,,c.tree\n";
        let entries = parse_manifest(manifest, p).unwrap();
        (dir, entries)
    }

    #[test]
    fn featurize_imputes_and_notes() {
        let (_dir, entries) = corpus();
        let subjects = load_subjects(&entries, &ChatOptions::default()).unwrap();
        let options = FeatureOptions::default();
        let tfidf = fit_tfidf(&subjects, TermOptions::default()).unwrap();
        let imp = fit_imputation(&subjects, &options);
        assert_eq!((imp.n_avg_depth, imp.n_wer), (1, 1));
        assert_eq!(imp.avg_depth, 4.0);

        let refs = ReferenceSet::parse("the boy takes a cookie from the jar\n", "r").unwrap();
        let topics = KeywordFile::bundled().topic_sets(&TopicMapping::union()).unwrap();
        let ctx = FeatureContext { tfidf: &tfidf, references: &refs, topics: &topics, options: &options };
        let out = featurize(&subjects, &ctx, Some(imp), false).unwrap();
        assert_eq!(out.rows.len(), 3);
        assert_eq!(out.rows.iter().map(|r| r.subject_id.as_str()).collect::<Vec<_>>(), ["A", "B", "C"]);
        assert_eq!(out.rows[2].values[AVG_DEPTH], 4.0);
        assert_eq!(out.rows[0].values[WER], imp.wer);
        assert_eq!(out.notes.len(), 4);
        assert!(out.notes.iter().any(|n| n.starts_with("C: avg_depth imputed")));

        let err = featurize(&subjects, &ctx, Some(imp), true).unwrap_err().to_string();
        assert!(err.contains("A (wer)") && err.contains("C (avg_depth, wer)"), "{err}");
    }

    #[test]
    fn fit_requires_labels() {
        let (dir, _) = corpus();
        let manifest = "subject_id,label,transcript,asr,trees\nA,HC,a.txt,,\nB,,b.txt,,\n";
        let entries = parse_manifest(manifest, dir.path()).unwrap();
        let subjects = load_subjects(&entries, &ChatOptions::default()).unwrap();
        let err = fit_tfidf(&subjects, TermOptions::default()).unwrap_err().to_string();
        assert!(err.contains("row 2 (B)"), "{err}");
    }
}
